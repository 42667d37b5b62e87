//! The attributed graph shared by every stage of the pipeline.
//!
//! Vertices, edges and faces live in slot vectors indexed by their id. Removed
//! elements leave a tombstone behind, so ids handed out once stay valid names
//! for the rest of a graph's life and are never reused.

mod geometry;
mod query;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Coarse shape class of an input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Sequence,
    Grid,
    TriangleMesh,
    Relational,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Sequence => "sequence",
            Family::Grid => "grid",
            Family::TriangleMesh => "triangle-mesh",
            Family::Relational => "relational",
        };
        f.write_str(s)
    }
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(VertexId, "v");
id_type!(EdgeId, "e");
id_type!(FaceId, "f");

/// Kind of graph element, as named in constraint documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Vertex,
    Edge,
    Face,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Vertex => "vertex",
            ElementKind::Edge => "edge",
            ElementKind::Face => "face",
        })
    }
}

/// A reference to any element of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum ElementRef {
    Vertex(VertexId),
    Edge(EdgeId),
    Face(FaceId),
}

impl ElementRef {
    pub fn kind(self) -> ElementKind {
        match self {
            ElementRef::Vertex(_) => ElementKind::Vertex,
            ElementRef::Edge(_) => ElementKind::Edge,
            ElementRef::Face(_) => ElementKind::Face,
        }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Vertex(v) => v.fmt(f),
            ElementRef::Edge(e) => e.fmt(f),
            ElementRef::Face(x) => x.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub attrs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub endpoints: (VertexId, VertexId),
    pub weight: f64,
}

impl Edge {
    /// The endpoint opposite `v`, if `v` is an endpoint.
    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        if self.endpoints.0 == v {
            Some(self.endpoints.1)
        } else if self.endpoints.1 == v {
            Some(self.endpoints.0)
        } else {
            None
        }
    }

    pub fn touches(&self, v: VertexId) -> bool {
        self.endpoints.0 == v || self.endpoints.1 == v
    }
}

/// A triangle. Corner order defines orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: FaceId,
    pub corners: [VertexId; 3],
}

impl Face {
    pub fn contains(&self, v: VertexId) -> bool {
        self.corners.contains(&v)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} not found")]
    VertexNotFound(VertexId),
    #[error("edge {0} not found")]
    EdgeNotFound(EdgeId),
    #[error("face {0} not found")]
    FaceNotFound(FaceId),
    #[error("operation requires a {expected} graph, got {found}")]
    FamilyMismatch { expected: Family, found: Family },
    #[error("attribute vector has {found} components, graph uses {expected}")]
    AttrLength { expected: usize, found: usize },
    #[error("triangle meshes need at least 3 attribute components, got {0}")]
    TooFewComponents(usize),
    #[error("edge endpoints must differ (got {0} twice)")]
    SelfLoop(VertexId),
    #[error("an edge between {0} and {1} already exists")]
    DuplicateEdge(VertexId, VertexId),
    #[error("face corners must be pairwise distinct: {0:?}")]
    RepeatedCorner([VertexId; 3]),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("structural invariant violated: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
struct VertexSlot {
    vertex: Vertex,
    edges: Vec<EdgeId>,
    faces: Vec<FaceId>,
}

/// An attributed graph tagged with its structural family.
#[derive(Debug, Clone)]
pub struct Graph {
    family: Family,
    attr_len: usize,
    vertices: Vec<Option<VertexSlot>>,
    edges: Vec<Option<Edge>>,
    faces: Vec<Option<Face>>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
    grid_dims: Option<(usize, usize)>,
    vocabulary: HashMap<u64, String>,
    live_vertices: usize,
    live_edges: usize,
    live_faces: usize,
}

impl Graph {
    /// Creates an empty graph whose vertices will carry `attr_len` attributes.
    pub fn new(family: Family, attr_len: usize) -> Result<Self> {
        if family == Family::TriangleMesh && attr_len < 3 {
            return Err(GraphError::TooFewComponents(attr_len));
        }
        Ok(Graph {
            family,
            attr_len,
            vertices: Vec::new(),
            edges: Vec::new(),
            faces: Vec::new(),
            edge_index: HashMap::new(),
            grid_dims: None,
            vocabulary: HashMap::new(),
            live_vertices: 0,
            live_edges: 0,
            live_faces: 0,
        })
    }

    /// An empty triangle mesh with xyz vertex positions.
    pub fn triangle_mesh() -> Self {
        Self::new(Family::TriangleMesh, 3).expect("3 components suffice for a mesh")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn attr_len(&self) -> usize {
        self.attr_len
    }

    pub fn is_directed(&self) -> bool {
        self.family == Family::Sequence
    }

    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        self.grid_dims
    }

    pub(crate) fn set_grid_dims(&mut self, dims: (usize, usize)) {
        self.grid_dims = Some(dims);
    }

    /// Token text for sequence vertex codes.
    pub fn vocabulary(&self) -> &HashMap<u64, String> {
        &self.vocabulary
    }

    pub(crate) fn vocabulary_mut(&mut self) -> &mut HashMap<u64, String> {
        &mut self.vocabulary
    }

    pub fn vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn face_count(&self) -> usize {
        self.live_faces
    }

    pub fn is_empty(&self) -> bool {
        self.live_vertices == 0
    }

    /// Live vertices in id order.
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> + '_ {
        self.vertices.iter().flatten().map(|s| &s.vertex)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().flatten()
    }

    pub fn faces(&self) -> impl Iterator<Item = &Face> + '_ {
        self.faces.iter().flatten()
    }

    pub fn vertex_ids(&self) -> Vec<VertexId> {
        self.vertices().map(|v| v.id).collect()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges().map(|e| e.id).collect()
    }

    pub fn face_ids(&self) -> Vec<FaceId> {
        self.faces().map(|f| f.id).collect()
    }

    /// One past the largest vertex id ever issued.
    pub fn vertex_capacity(&self) -> usize {
        self.vertices.len()
    }

    fn slot(&self, v: VertexId) -> Result<&VertexSlot> {
        self.vertices
            .get(v.index())
            .and_then(Option::as_ref)
            .ok_or(GraphError::VertexNotFound(v))
    }

    fn slot_mut(&mut self, v: VertexId) -> Result<&mut VertexSlot> {
        self.vertices
            .get_mut(v.index())
            .and_then(Option::as_mut)
            .ok_or(GraphError::VertexNotFound(v))
    }

    pub fn vertex(&self, v: VertexId) -> Result<&Vertex> {
        self.slot(v).map(|s| &s.vertex)
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge> {
        self.edges
            .get(e.index())
            .and_then(Option::as_ref)
            .ok_or(GraphError::EdgeNotFound(e))
    }

    pub fn face(&self, f: FaceId) -> Result<&Face> {
        self.faces
            .get(f.index())
            .and_then(Option::as_ref)
            .ok_or(GraphError::FaceNotFound(f))
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.slot(v).is_ok()
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        self.edge(e).is_ok()
    }

    pub fn contains_face(&self, f: FaceId) -> bool {
        self.face(f).is_ok()
    }

    pub fn contains(&self, element: ElementRef) -> bool {
        match element {
            ElementRef::Vertex(v) => self.contains_vertex(v),
            ElementRef::Edge(e) => self.contains_edge(e),
            ElementRef::Face(f) => self.contains_face(f),
        }
    }

    pub fn attrs(&self, v: VertexId) -> Result<&[f64]> {
        self.vertex(v).map(|x| x.attrs.as_slice())
    }

    /// Ids of edges incident to `v`, in insertion order.
    pub fn incident_edges(&self, v: VertexId) -> Result<&[EdgeId]> {
        self.slot(v).map(|s| s.edges.as_slice())
    }

    /// Ids of faces having `v` as a corner.
    pub fn vertex_faces(&self, v: VertexId) -> Result<&[FaceId]> {
        self.slot(v).map(|s| s.faces.as_slice())
    }

    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.slot(v).map(|s| s.edges.len())
    }

    /// Outgoing degree; equals [`Graph::degree`] on undirected graphs.
    pub fn out_degree(&self, v: VertexId) -> Result<usize> {
        let slot = self.slot(v)?;
        if !self.is_directed() {
            return Ok(slot.edges.len());
        }
        Ok(slot
            .edges
            .iter()
            .filter(|e| self.edges[e.index()].as_ref().is_some_and(|e| e.endpoints.0 == v))
            .count())
    }

    /// Incoming degree; equals [`Graph::degree`] on undirected graphs.
    pub fn in_degree(&self, v: VertexId) -> Result<usize> {
        let slot = self.slot(v)?;
        if !self.is_directed() {
            return Ok(slot.edges.len());
        }
        Ok(slot
            .edges
            .iter()
            .filter(|e| self.edges[e.index()].as_ref().is_some_and(|e| e.endpoints.1 == v))
            .count())
    }

    fn edge_key(&self, a: VertexId, b: VertexId) -> (VertexId, VertexId) {
        if self.is_directed() || a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// The edge joining `a` and `b` (from `a` to `b` on directed graphs).
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&self.edge_key(a, b)).copied()
    }

    /// Euclidean distance between attribute vectors; positions only on meshes.
    pub fn natural_distance(&self, a: VertexId, b: VertexId) -> Result<f64> {
        let (pa, pb) = (self.attrs(a)?, self.attrs(b)?);
        let n = if self.family == Family::TriangleMesh { 3 } else { pa.len() };
        Ok(pa[..n]
            .iter()
            .zip(&pb[..n])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }

    fn check_attrs(&self, attrs: &[f64]) -> Result<()> {
        if attrs.len() != self.attr_len {
            return Err(GraphError::AttrLength { expected: self.attr_len, found: attrs.len() });
        }
        if let Some(&bad) = attrs.iter().find(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite(bad));
        }
        Ok(())
    }

    pub fn add_vertex(&mut self, attrs: Vec<f64>) -> Result<VertexId> {
        self.check_attrs(&attrs)?;
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Some(VertexSlot {
            vertex: Vertex { id, attrs },
            edges: Vec::new(),
            faces: Vec::new(),
        }));
        self.live_vertices += 1;
        Ok(id)
    }

    pub fn add_edge(&mut self, a: VertexId, b: VertexId, weight: f64) -> Result<EdgeId> {
        self.slot(a)?;
        self.slot(b)?;
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if !weight.is_finite() {
            return Err(GraphError::NonFinite(weight));
        }
        let key = self.edge_key(a, b);
        if self.edge_index.contains_key(&key) {
            return Err(GraphError::DuplicateEdge(a, b));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Some(Edge { id, endpoints: (a, b), weight }));
        self.edge_index.insert(key, id);
        self.slot_mut(a)?.edges.push(id);
        self.slot_mut(b)?.edges.push(id);
        self.live_edges += 1;
        Ok(id)
    }

    /// Adds an edge weighted by [`Graph::natural_distance`].
    pub fn add_edge_natural(&mut self, a: VertexId, b: VertexId) -> Result<EdgeId> {
        let w = self.natural_distance(a, b)?;
        self.add_edge(a, b, w)
    }

    /// Returns the existing edge between `a` and `b` or creates one.
    pub fn ensure_edge(&mut self, a: VertexId, b: VertexId) -> Result<EdgeId> {
        match self.edge_between(a, b) {
            Some(e) => Ok(e),
            None => self.add_edge_natural(a, b),
        }
    }

    /// Adds a triangle, creating any missing side edges.
    pub fn add_face(&mut self, corners: [VertexId; 3]) -> Result<FaceId> {
        self.require_family(Family::TriangleMesh)?;
        for &c in &corners {
            self.slot(c)?;
        }
        let [a, b, c] = corners;
        if a == b || b == c || a == c {
            return Err(GraphError::RepeatedCorner(corners));
        }
        self.ensure_edge(a, b)?;
        self.ensure_edge(b, c)?;
        self.ensure_edge(c, a)?;
        let id = FaceId(self.faces.len() as u32);
        self.faces.push(Some(Face { id, corners }));
        for &c in &corners {
            self.slot_mut(c)?.faces.push(id);
        }
        self.live_faces += 1;
        Ok(id)
    }

    pub fn remove_face(&mut self, f: FaceId) -> Result<Face> {
        self.face(f)?;
        let face = self.faces[f.index()].take().expect("checked above");
        for &c in &face.corners {
            if let Ok(slot) = self.slot_mut(c) {
                slot.faces.retain(|&x| x != f);
            }
        }
        self.live_faces -= 1;
        Ok(face)
    }

    /// Removes an edge together with every face spanning it.
    pub fn remove_edge(&mut self, e: EdgeId) -> Result<Edge> {
        let (a, b) = self.edge(e)?.endpoints;
        let spanning: Vec<FaceId> = self
            .slot(a)?
            .faces
            .iter()
            .copied()
            .filter(|&f| self.faces[f.index()].as_ref().is_some_and(|x| x.contains(b)))
            .collect();
        for f in spanning {
            self.remove_face(f)?;
        }
        let edge = self.edges[e.index()].take().expect("checked above");
        let key = self.edge_key(a, b);
        self.edge_index.remove(&key);
        self.slot_mut(a)?.edges.retain(|&x| x != e);
        self.slot_mut(b)?.edges.retain(|&x| x != e);
        self.live_edges -= 1;
        Ok(edge)
    }

    /// Removes a vertex with all incident edges and faces.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<Vertex> {
        let slot = self.slot(v)?;
        let faces = slot.faces.clone();
        let edges = slot.edges.clone();
        for f in faces {
            if self.contains_face(f) {
                self.remove_face(f)?;
            }
        }
        for e in edges {
            if self.contains_edge(e) {
                self.remove_edge(e)?;
            }
        }
        let slot = self.vertices[v.index()].take().expect("checked above");
        self.live_vertices -= 1;
        Ok(slot.vertex)
    }

    pub fn set_attrs(&mut self, v: VertexId, attrs: Vec<f64>) -> Result<()> {
        self.check_attrs(&attrs)?;
        self.slot_mut(v)?.vertex.attrs = attrs;
        Ok(())
    }

    pub fn set_weight(&mut self, e: EdgeId, weight: f64) -> Result<()> {
        if !weight.is_finite() {
            return Err(GraphError::NonFinite(weight));
        }
        self.edge(e)?;
        self.edges[e.index()].as_mut().expect("checked above").weight = weight;
        Ok(())
    }

    /// Reverses the winding of a face by swapping its last two corners.
    pub fn flip_face(&mut self, f: FaceId) -> Result<()> {
        self.face(f)?;
        self.faces[f.index()].as_mut().expect("checked above").corners.swap(1, 2);
        Ok(())
    }

    /// Folds `gone` into `keep`: edges and face corners are re-targeted, then
    /// self-loops, duplicate edges and faces with repeated corners are dropped.
    pub fn merge_vertices(&mut self, keep: VertexId, gone: VertexId) -> Result<()> {
        self.slot(keep)?;
        self.slot(gone)?;
        if keep == gone {
            return Ok(());
        }
        let faces = self.slot(gone)?.faces.clone();
        let mut rebuilt = Vec::new();
        for f in faces {
            let face = self.remove_face(f)?;
            let corners = face.corners.map(|c| if c == gone { keep } else { c });
            rebuilt.push(corners);
        }
        let edges = self.slot(gone)?.edges.clone();
        let mut relinks = Vec::new();
        for e in edges {
            let edge = self.remove_edge(e)?;
            let (a, b) = edge.endpoints;
            let (a, b) = (if a == gone { keep } else { a }, if b == gone { keep } else { b });
            if a != b {
                relinks.push((a, b, edge.weight));
            }
        }
        self.remove_vertex(gone)?;
        for (a, b, w) in relinks {
            if self.edge_between(a, b).is_none() {
                self.add_edge(a, b, w)?;
            }
        }
        for corners in rebuilt {
            let [a, b, c] = corners;
            if a != b && b != c && a != c {
                self.add_face(corners)?;
            }
        }
        Ok(())
    }

    pub fn require_family(&self, expected: Family) -> Result<()> {
        if self.family != expected {
            return Err(GraphError::FamilyMismatch { expected, found: self.family });
        }
        Ok(())
    }

    /// Axis-aligned bounds of all attribute vectors, `None` when empty.
    pub fn attr_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut iter = self.vertices();
        let first = iter.next()?;
        let mut lo = first.attrs.clone();
        let mut hi = first.attrs.clone();
        for v in iter {
            for (i, &x) in v.attrs.iter().enumerate() {
                lo[i] = lo[i].min(x);
                hi[i] = hi[i].max(x);
            }
        }
        Some((lo, hi))
    }

    /// Diagonal length of the bounding box over positions (meshes) or all
    /// attributes (other families). Zero for empty graphs.
    pub fn bbox_diagonal(&self) -> f64 {
        let Some((lo, hi)) = self.attr_bounds() else { return 0.0 };
        let n = if self.family == Family::TriangleMesh { 3 } else { lo.len() };
        lo[..n].iter().zip(&hi[..n]).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Validates every structural invariant.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: String| Err(GraphError::Inconsistent(msg));
        let mut live_v = 0;
        for (i, slot) in self.vertices.iter().enumerate() {
            let Some(slot) = slot else { continue };
            live_v += 1;
            if slot.vertex.id.index() != i {
                return bad(format!("vertex slot {i} holds {}", slot.vertex.id));
            }
            if slot.vertex.attrs.len() != self.attr_len {
                return bad(format!("{} has {} attrs", slot.vertex.id, slot.vertex.attrs.len()));
            }
            for e in &slot.edges {
                match self.edge(*e) {
                    Ok(edge) if edge.touches(slot.vertex.id) => {}
                    _ => return bad(format!("{} lists stale edge {e}", slot.vertex.id)),
                }
            }
            for f in &slot.faces {
                match self.face(*f) {
                    Ok(face) if face.contains(slot.vertex.id) => {}
                    _ => return bad(format!("{} lists stale face {f}", slot.vertex.id)),
                }
            }
        }
        let mut live_e = 0;
        for (i, edge) in self.edges.iter().enumerate() {
            let Some(edge) = edge else { continue };
            live_e += 1;
            let (a, b) = edge.endpoints;
            if edge.id.index() != i || a == b || !edge.weight.is_finite() {
                return bad(format!("malformed edge {}", edge.id));
            }
            for v in [a, b] {
                match self.slot(v) {
                    Ok(s) if s.edges.contains(&edge.id) => {}
                    _ => return bad(format!("{} endpoint {v} missing or unlinked", edge.id)),
                }
            }
            if self.edge_between(a, b) != Some(edge.id) {
                return bad(format!("{} not indexed by its endpoints", edge.id));
            }
        }
        if self.edge_index.len() != live_e {
            return bad("edge index holds duplicate or stale pairs".into());
        }
        let mut live_f = 0;
        for (i, face) in self.faces.iter().enumerate() {
            let Some(face) = face else { continue };
            live_f += 1;
            let [a, b, c] = face.corners;
            if face.id.index() != i || a == b || b == c || a == c {
                return bad(format!("malformed face {}", face.id));
            }
            for v in face.corners {
                match self.slot(v) {
                    Ok(s) if s.faces.contains(&face.id) => {}
                    _ => return bad(format!("{} corner {v} missing or unlinked", face.id)),
                }
            }
            for (x, y) in [(a, b), (b, c), (c, a)] {
                if self.edge_between(x, y).is_none() {
                    return bad(format!("{} side {x}-{y} has no edge", face.id));
                }
            }
        }
        if live_f > 0 && self.family != Family::TriangleMesh {
            return bad(format!("{} graph carries faces", self.family));
        }
        if (live_v, live_e, live_f) != (self.live_vertices, self.live_edges, self.live_faces) {
            return bad("element counters out of sync".into());
        }
        if let Some((w, h)) = self.grid_dims {
            let expected_edges = w * h.saturating_sub(1) + h * w.saturating_sub(1);
            if live_v != w * h || live_e != expected_edges {
                return bad(format!("grid {w}x{h} has {live_v} vertices and {live_e} edges"));
            }
        }
        Ok(())
    }

    /// A deterministic byte rendering of the whole graph, used for hashing.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = format!("{} {}\n", self.family, self.attr_len);
        for v in self.vertices() {
            out.push_str(&format!("v {}", v.id.0));
            for a in &v.attrs {
                out.push_str(&format!(" {a:?}"));
            }
            out.push('\n');
        }
        for e in self.edges() {
            out.push_str(&format!(
                "e {} {} {} {:?}\n",
                e.id.0, e.endpoints.0 .0, e.endpoints.1 .0, e.weight
            ));
        }
        for f in self.faces() {
            let [a, b, c] = f.corners;
            out.push_str(&format!("f {} {} {} {}\n", f.id.0, a.0, b.0, c.0));
        }
        out.into_bytes()
    }

    /// Hex SHA-256 of [`Graph::canonical_bytes`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> (Graph, [VertexId; 3], FaceId) {
        let mut g = Graph::triangle_mesh();
        let a = g.add_vertex(vec![0.0, 0.0, 0.0]).unwrap();
        let b = g.add_vertex(vec![1.0, 0.0, 0.0]).unwrap();
        let c = g.add_vertex(vec![0.0, 1.0, 0.0]).unwrap();
        let f = g.add_face([a, b, c]).unwrap();
        (g, [a, b, c], f)
    }

    #[test]
    fn add_face_creates_side_edges() {
        let (g, [a, b, c], _) = triangle();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edge_between(b, a).is_some());
        assert!(g.edge_between(c, a).is_some());
        g.check_invariants().unwrap();
    }

    #[test]
    fn rejects_bad_elements() {
        let (mut g, [a, b, _], _) = triangle();
        assert_eq!(g.add_edge(a, a, 1.0), Err(GraphError::SelfLoop(a)));
        assert_eq!(g.add_edge(b, a, 1.0), Err(GraphError::DuplicateEdge(b, a)));
        assert!(matches!(g.add_face([a, a, b]), Err(GraphError::RepeatedCorner(_))));
        assert!(matches!(g.add_vertex(vec![1.0]), Err(GraphError::AttrLength { .. })));
        assert_eq!(g.add_edge(a, VertexId(99), 1.0), Err(GraphError::VertexNotFound(VertexId(99))));
        assert!(matches!(g.add_edge(a, b, f64::NAN), Err(GraphError::NonFinite(_))));
        assert!(Graph::new(Family::TriangleMesh, 2).is_err());
    }

    #[test]
    fn ids_survive_deletion() {
        let (mut g, [a, b, c], f) = triangle();
        g.remove_vertex(a).unwrap();
        assert!(!g.contains_face(f));
        assert_eq!(g.edge_count(), 1);
        let d = g.add_vertex(vec![5.0, 5.0, 5.0]).unwrap();
        assert_eq!(d, VertexId(3));
        assert_eq!(g.vertex(b).unwrap().id, b);
        assert_eq!(g.vertex(c).unwrap().id, c);
        assert_eq!(g.vertex(a), Err(GraphError::VertexNotFound(a)));
        g.check_invariants().unwrap();
    }

    #[test]
    fn removing_edge_drops_spanning_faces() {
        let (mut g, [a, b, _], f) = triangle();
        let e = g.edge_between(a, b).unwrap();
        g.remove_edge(e).unwrap();
        assert!(!g.contains_face(f));
        assert_eq!(g.edge_count(), 2);
        g.check_invariants().unwrap();
    }

    #[test]
    fn directed_sequences_key_edges_by_order() {
        let mut g = Graph::new(Family::Sequence, 1).unwrap();
        let a = g.add_vertex(vec![1.0]).unwrap();
        let b = g.add_vertex(vec![2.0]).unwrap();
        g.add_edge(a, b, 1.0).unwrap();
        assert!(g.edge_between(b, a).is_none());
        g.add_edge(b, a, 1.0).unwrap();
        assert_eq!(g.out_degree(a).unwrap(), 1);
        assert_eq!(g.in_degree(a).unwrap(), 1);
        assert!(matches!(g.add_face([a, b, a]), Err(GraphError::FamilyMismatch { .. })));
    }

    #[test]
    fn merge_retargets_and_cleans_up() {
        let (mut g, [a, b, c], _) = triangle();
        let d = g.add_vertex(vec![1.0, 1.0, 0.0]).unwrap();
        g.add_face([b, d, c]).unwrap();
        // Folding d into c collapses the second face.
        g.merge_vertices(c, d).unwrap();
        assert_eq!(g.face_count(), 1);
        assert_eq!(g.edge_count(), 3);
        assert!(g.edge_between(a, b).is_some());
        g.check_invariants().unwrap();
    }

    #[test]
    fn fingerprint_tracks_content() {
        let (mut g, [a, ..], _) = triangle();
        let before = g.fingerprint();
        assert_eq!(before, g.clone().fingerprint());
        g.set_attrs(a, vec![0.0, 0.0, 1e-12]).unwrap();
        assert_ne!(before, g.fingerprint());
    }
}
