use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{violates, IsolatedMode, Plan, RefineConfig, RefineError, RepairAction, RepairKind, Result};
use crate::dsl::ConstraintSpec;
use crate::graph::{EdgeId, ElementRef, FaceId, Family, Graph, VertexId};

fn done(g: &Graph, kind: RepairKind, mut affected: Vec<ElementRef>) -> Result<Option<RepairAction>> {
    if affected.is_empty() {
        return Ok(None);
    }
    g.check_invariants()
        .map_err(|e| RefineError::Internal(format!("after {kind:?}: {e}")))?;
    affected.sort();
    affected.dedup();
    Ok(Some(RepairAction { kind, affected }))
}

fn mesh(g: &Graph) -> Result<()> {
    Ok(g.require_family(Family::TriangleMesh)?)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn find(parent: &mut HashMap<VertexId, VertexId>, v: VertexId) -> VertexId {
    let mut root = v;
    while let Some(&p) = parent.get(&root) {
        if p == root {
            break;
        }
        root = p;
    }
    let mut cur = v;
    while cur != root {
        let next = parent[&cur];
        parent.insert(cur, root);
        cur = next;
    }
    root
}

/// Merges every cluster of vertices closer than `tol` (transitively) into
/// its lowest id, placed at the cluster centroid.
pub fn merge_duplicate_vertices(g: &mut Graph, tol: f64) -> Result<Option<RepairAction>> {
    mesh(g)?;
    if !(tol > 0.0) {
        return Err(RefineError::Config(format!("merge tolerance {tol} must be positive")));
    }
    let cell = |p: [f64; 3]| p.map(|x| (x / tol).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<VertexId>> = HashMap::new();
    let mut parent: HashMap<VertexId, VertexId> = HashMap::new();
    for v in g.vertex_ids() {
        let p = g.position(v)?;
        let c = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else { continue };
                    for &u in bucket {
                        if dist(g.position(u)?, p) < tol {
                            parent.entry(u).or_insert(u);
                            parent.entry(v).or_insert(v);
                            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                            let (lo, hi) = (ru.min(rv), ru.max(rv));
                            parent.insert(hi, lo);
                        }
                    }
                }
            }
        }
        grid.entry(c).or_default().push(v);
    }
    let members: Vec<VertexId> = parent.keys().copied().collect();
    let mut clusters: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for v in members {
        let r = find(&mut parent, v);
        clusters.entry(r).or_default().push(v);
    }
    let mut affected = Vec::new();
    for (root, mut cluster) in clusters {
        cluster.sort();
        let mut centroid = [0.0; 3];
        for &m in &cluster {
            let p = g.position(m)?;
            for i in 0..3 {
                centroid[i] += p[i] / cluster.len() as f64;
            }
        }
        for &m in &cluster[1..] {
            g.merge_vertices(root, m)?;
        }
        let mut attrs = g.attrs(root)?.to_vec();
        attrs[..3].copy_from_slice(&centroid);
        g.set_attrs(root, attrs)?;
        affected.extend(cluster.into_iter().map(ElementRef::Vertex));
    }
    done(g, RepairKind::MergeDuplicateVertices, affected)
}

fn remove_faces_at(g: &mut Graph, faces: Vec<FaceId>, kind: RepairKind) -> Result<Option<RepairAction>> {
    for &f in &faces {
        g.remove_face(f)?;
    }
    done(g, kind, faces.into_iter().map(ElementRef::Face).collect())
}

/// Removes every face with area at or below `epsilon`. Their edges stay.
pub fn remove_degenerate_triangles(g: &mut Graph, epsilon: f64) -> Result<Option<RepairAction>> {
    mesh(g)?;
    let mut bad = Vec::new();
    for f in g.face_ids() {
        if g.face_area(f)? <= epsilon {
            bad.push(f);
        }
    }
    remove_faces_at(g, bad, RepairKind::RemoveDegenerateTriangles)
}

/// Removes faceless degree-2 vertices whose two edges point in opposite
/// directions (within `angle_tol`), joining their neighbors directly.
pub fn merge_collinear_vertices(g: &mut Graph, angle_tol: f64) -> Result<Option<RepairAction>> {
    mesh(g)?;
    let limit = -angle_tol.cos();
    let mut affected = Vec::new();
    for v in g.vertex_ids() {
        if !g.contains_vertex(v) || !g.vertex_faces(v)?.is_empty() || g.degree(v)? != 2 {
            continue;
        }
        let adj = g.adjacent(v)?;
        let (a, b) = (adj[0], adj[1]);
        let p = g.position(v)?;
        let (pa, pb) = (g.position(a)?, g.position(b)?);
        let da = [pa[0] - p[0], pa[1] - p[1], pa[2] - p[2]];
        let db = [pb[0] - p[0], pb[1] - p[1], pb[2] - p[2]];
        let (la, lb) = (dist(pa, p), dist(pb, p));
        if la == 0.0 || lb == 0.0 {
            continue;
        }
        let cos = (da[0] * db[0] + da[1] * db[1] + da[2] * db[2]) / (la * lb);
        if cos > limit {
            continue;
        }
        g.remove_vertex(v)?;
        if g.edge_between(a, b).is_none() {
            g.add_edge_natural(a, b)?;
        }
        affected.push(ElementRef::Vertex(v));
    }
    done(g, RepairKind::MergeCollinearVertices, affected)
}

fn isolated_at(g: &mut Graph, targets: Vec<VertexId>, mode: IsolatedMode) -> Result<Vec<RepairAction>> {
    let mut removed = Vec::new();
    let mut connected = Vec::new();
    for v in targets {
        if mode == IsolatedMode::Remove || g.face_count() == 0 {
            g.remove_vertex(v)?;
            removed.push(ElementRef::Vertex(v));
            continue;
        }
        let p = g.position(v)?;
        let mut best: Option<(f64, FaceId)> = None;
        for f in g.faces() {
            let d = dist(g.face_centroid(f.id)?, p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, f.id));
            }
        }
        let (_, f) = best.expect("mesh has faces");
        let [a, b, c] = g.remove_face(f)?.corners;
        g.add_face([a, b, v])?;
        g.add_face([b, c, v])?;
        g.add_face([c, a, v])?;
        connected.push(ElementRef::Vertex(v));
        connected.push(ElementRef::Face(f));
    }
    let mut out = Vec::new();
    out.extend(done(g, RepairKind::RemoveIsolatedVertices, removed)?);
    out.extend(done(g, RepairKind::RestrictEdgeToTriangle, connected)?);
    Ok(out)
}

/// Deals with vertices that have no edges and no faces: deletes them, or
/// splits the triangle with the nearest centroid around them.
pub fn handle_isolated_vertices(g: &mut Graph, mode: IsolatedMode) -> Result<Vec<RepairAction>> {
    mesh(g)?;
    let mut targets = Vec::new();
    for v in g.vertices() {
        if g.degree(v.id)? == 0 && g.vertex_faces(v.id)?.is_empty() {
            targets.push(v.id);
        }
    }
    isolated_at(g, targets, mode)
}

fn dangling_at(g: &mut Graph, edges: Vec<EdgeId>) -> Result<Option<RepairAction>> {
    for &e in &edges {
        g.remove_edge(e)?;
    }
    done(g, RepairKind::RemoveDanglingEdges, edges.into_iter().map(ElementRef::Edge).collect())
}

/// Removes edges that bound no face.
pub fn remove_dangling_edges(g: &mut Graph) -> Result<Option<RepairAction>> {
    mesh(g)?;
    let mut bad = Vec::new();
    for e in g.edge_ids() {
        if g.incident_faces(e)?.is_empty() {
            bad.push(e);
        }
    }
    dangling_at(g, bad)
}

fn trim_at(g: &mut Graph, edges: Vec<EdgeId>) -> Result<Option<RepairAction>> {
    let mut removed = Vec::new();
    for e in edges {
        if !g.contains_edge(e) {
            continue;
        }
        let mut faces: Vec<(f64, FaceId)> =
            g.incident_faces(e)?.into_iter().map(|f| Ok((g.face_area(f)?, f))).collect::<Result<_>>()?;
        if faces.len() <= 2 {
            continue;
        }
        faces.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, f) in &faces[2..] {
            g.remove_face(f)?;
            removed.push(ElementRef::Face(f));
        }
    }
    done(g, RepairKind::RemoveExcessFaces, removed)
}

/// On every edge with more than two faces, keeps the two largest.
pub fn trim_excess_faces(g: &mut Graph) -> Result<Option<RepairAction>> {
    mesh(g)?;
    let mut bad = Vec::new();
    for e in g.edge_ids() {
        if g.incident_faces(e)?.len() > 2 {
            bad.push(e);
        }
    }
    trim_at(g, bad)
}

/// Offset of a split-off vertex, relative to the mean incident edge length.
const SPLIT_OFFSET: f64 = 1e-3;

fn split_at(g: &mut Graph, targets: Vec<VertexId>) -> Result<Option<RepairAction>> {
    let mut affected = Vec::new();
    for v in targets {
        let fans = g.fan_components(v)?;
        if fans.len() < 2 {
            continue;
        }
        let edges = g.incident_edges(v)?.to_vec();
        let mut mean = 0.0;
        for &e in &edges {
            let (a, b) = g.edge(e)?.endpoints;
            mean += g.natural_distance(a, b)? / edges.len() as f64;
        }
        let p = g.position(v)?;
        for fan in &fans[1..] {
            let mut corners = Vec::new();
            let mut rim = BTreeSet::new();
            for &f in fan {
                let face = g.remove_face(f)?;
                rim.extend(face.corners.into_iter().filter(|&c| c != v));
                corners.push(face.corners);
            }
            let mut centre = [0.0; 3];
            for &w in &rim {
                let q = g.position(w)?;
                for i in 0..3 {
                    centre[i] += q[i] / rim.len() as f64;
                }
            }
            let len = dist(centre, p);
            let mut attrs = g.attrs(v)?.to_vec();
            if len > 0.0 {
                for i in 0..3 {
                    attrs[i] += (centre[i] - p[i]) / len * SPLIT_OFFSET * mean;
                }
            }
            let u = g.add_vertex(attrs)?;
            for cs in corners {
                g.add_face(cs.map(|c| if c == v { u } else { c }))?;
            }
            for &w in &rim {
                if let Some(e) = g.edge_between(v, w) {
                    if g.incident_faces(e)?.is_empty() {
                        g.remove_edge(e)?;
                    }
                }
            }
        }
        affected.push(ElementRef::Vertex(v));
    }
    done(g, RepairKind::SplitNonManifoldVertex, affected)
}

/// Gives every face fan after the first of a bowtie vertex its own vertex.
pub fn split_nonmanifold_vertices(g: &mut Graph) -> Result<Option<RepairAction>> {
    mesh(g)?;
    let mut bad = Vec::new();
    for v in g.vertex_ids() {
        if g.fan_components(v)?.len() > 1 {
            bad.push(v);
        }
    }
    split_at(g, bad)
}

/// One ordered repair pass driven by the constraints in `plan`.
pub(super) fn pass(
    g: &mut Graph,
    spec: &ConstraintSpec,
    plan: &Plan,
    config: &RefineConfig,
    merge_tol: f64,
) -> Result<Vec<RepairAction>> {
    let eps = config.epsilon;
    let mut actions = Vec::new();
    actions.extend(merge_duplicate_vertices(g, merge_tol)?);

    if !plan.area.is_empty() {
        let mut bad = Vec::new();
        for f in g.face_ids() {
            if violates(spec, &plan.area, g, eps, ElementRef::Face(f))? {
                bad.push(f);
            }
        }
        actions.extend(remove_faces_at(g, bad, RepairKind::RemoveDegenerateTriangles)?);
    }

    if !plan.fan.is_empty() || !plan.faces_per_edge.is_empty() {
        actions.extend(merge_collinear_vertices(g, config.angle_tol)?);
    }

    if !plan.faces_per_edge.is_empty() {
        let (mut dangling, mut crowded) = (Vec::new(), Vec::new());
        for e in g.edge_ids() {
            if violates(spec, &plan.faces_per_edge, g, eps, ElementRef::Edge(e))? {
                match g.incident_faces(e)?.len() {
                    0 => dangling.push(e),
                    n if n > 2 => crowded.push(e),
                    _ => {}
                }
            }
        }
        actions.extend(dangling_at(g, dangling)?);
        actions.extend(trim_at(g, crowded)?);
    }

    if !plan.fan.is_empty() {
        let (mut loose, mut bowties) = (Vec::new(), Vec::new());
        for v in g.vertex_ids() {
            if violates(spec, &plan.fan, g, eps, ElementRef::Vertex(v))? {
                if g.vertex_faces(v)?.is_empty() {
                    loose.push(v);
                } else if g.fan_components(v)?.len() > 1 {
                    bowties.push(v);
                }
            }
        }
        actions.extend(isolated_at(g, loose, config.isolated_mode)?);
        actions.extend(split_at(g, bowties)?);
    }

    if !plan.norm.is_empty() {
        let (mut flipped, mut dropped) = (Vec::new(), Vec::new());
        for f in g.face_ids() {
            if violates(spec, &plan.norm, g, eps, ElementRef::Face(f))? {
                g.flip_face(f)?;
                if violates(spec, &plan.norm, g, eps, ElementRef::Face(f))? {
                    g.flip_face(f)?;
                    dropped.push(f);
                } else {
                    flipped.push(ElementRef::Face(f));
                }
            }
        }
        actions.extend(done(g, RepairKind::FlipFaceWinding, flipped)?);
        actions.extend(remove_faces_at(g, dropped, RepairKind::RemoveFaces)?);
    }
    Ok(actions)
}
