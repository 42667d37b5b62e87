use super::{Family, FaceId, Graph, GraphError, Result, VertexId};

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

impl Graph {
    /// The xyz position of a vertex: its first three attribute components.
    pub fn position(&self, v: VertexId) -> Result<Vec3> {
        let attrs = self.attrs(v)?;
        if attrs.len() < 3 {
            return Err(GraphError::TooFewComponents(attrs.len()));
        }
        Ok([attrs[0], attrs[1], attrs[2]])
    }

    fn corner_positions(&self, f: FaceId) -> Result<[Vec3; 3]> {
        self.require_family(Family::TriangleMesh)?;
        let [a, b, c] = self.face(f)?.corners;
        Ok([self.position(a)?, self.position(b)?, self.position(c)?])
    }

    fn face_cross(&self, f: FaceId) -> Result<Vec3> {
        let [p0, p1, p2] = self.corner_positions(f)?;
        Ok(cross(sub(p1, p0), sub(p2, p0)))
    }

    /// Unit normal by the right-hand rule over the corner order. Degenerate
    /// faces yield the zero vector.
    pub fn face_normal(&self, f: FaceId) -> Result<Vec3> {
        let n = self.face_cross(f)?;
        let len = norm(n);
        if len == 0.0 {
            return Ok([0.0; 3]);
        }
        Ok([n[0] / len, n[1] / len, n[2] / len])
    }

    pub fn face_area(&self, f: FaceId) -> Result<f64> {
        Ok(0.5 * norm(self.face_cross(f)?))
    }

    pub fn face_centroid(&self, f: FaceId) -> Result<Vec3> {
        let [p0, p1, p2] = self.corner_positions(f)?;
        Ok([
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
            (p0[2] + p1[2] + p2[2]) / 3.0,
        ])
    }
}
