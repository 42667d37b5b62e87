use std::collections::{BTreeSet, VecDeque};

use super::{EdgeId, Family, FaceId, Graph, Result, VertexId};

impl Graph {
    /// Vertices within `hops` edges of `v`, excluding `v`. Edge direction is
    /// ignored.
    pub fn neighbors(&self, v: VertexId, hops: usize) -> Result<BTreeSet<VertexId>> {
        self.vertex(v)?;
        let mut seen = BTreeSet::new();
        seen.insert(v);
        let mut queue = VecDeque::from([(v, 0usize)]);
        while let Some((u, depth)) = queue.pop_front() {
            if depth == hops {
                continue;
            }
            for &e in self.incident_edges(u)? {
                let w = self.edge(e)?.other(u).expect("incident edge touches its vertex");
                if seen.insert(w) {
                    queue.push_back((w, depth + 1));
                }
            }
        }
        seen.remove(&v);
        Ok(seen)
    }

    /// Vertices sharing an edge with `v`.
    pub fn adjacent(&self, v: VertexId) -> Result<Vec<VertexId>> {
        self.incident_edges(v)?
            .iter()
            .map(|&e| Ok(self.edge(e)?.other(v).expect("incident edge touches its vertex")))
            .collect()
    }

    /// Faces whose corners include both endpoints of `e`, in id order.
    pub fn incident_faces(&self, e: EdgeId) -> Result<Vec<FaceId>> {
        self.require_family(Family::TriangleMesh)?;
        let (a, b) = self.edge(e)?.endpoints;
        let mut out: Vec<FaceId> = self
            .vertex_faces(a)?
            .iter()
            .copied()
            .filter(|&f| self.face(f).is_ok_and(|x| x.contains(b)))
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Partitions the faces around `v` into groups connected through edges
    /// that emanate from `v`. Each group is sorted; groups are ordered by
    /// their smallest face id.
    pub fn fan_components(&self, v: VertexId) -> Result<Vec<Vec<FaceId>>> {
        self.require_family(Family::TriangleMesh)?;
        let mut faces: Vec<FaceId> = self.vertex_faces(v)?.to_vec();
        faces.sort_unstable();
        let others: Vec<[VertexId; 2]> = faces
            .iter()
            .map(|&f| {
                let c = self.face(f)?.corners;
                let mut rest = c.iter().copied().filter(|&x| x != v);
                Ok([rest.next().unwrap(), rest.next().unwrap()])
            })
            .collect::<Result<_>>()?;
        let mut group = vec![usize::MAX; faces.len()];
        let mut components = Vec::new();
        for start in 0..faces.len() {
            if group[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            group[start] = id;
            let mut members = vec![faces[start]];
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for j in 0..faces.len() {
                    if group[j] == usize::MAX && others[i].iter().any(|x| others[j].contains(x)) {
                        group[j] = id;
                        members.push(faces[j]);
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        Ok(components)
    }

    /// True when the faces around `v` form one edge-connected fan. A vertex
    /// with no faces is not fan-connected.
    pub fn is_fan_connected(&self, v: VertexId) -> Result<bool> {
        Ok(self.fan_components(v)?.len() == 1)
    }
}
