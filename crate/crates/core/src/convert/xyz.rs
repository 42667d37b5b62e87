//! Point clouds as symmetric k-nearest-neighbor graphs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{parse_err, parse_f64, utf8, Result};
use crate::graph::{Family, Graph, VertexId};

pub const DEFAULT_KNN_K: usize = 6;

/// Indices of the `k` points nearest to `points[i]`. Equal distances go to
/// the lower index.
fn nearest(points: &[[f64; 3]], i: usize, k: usize) -> Vec<usize> {
    let p = points[i];
    let mut cand: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, q)| {
            let d = (0..3).map(|a| (p[a] - q[a]) * (p[a] - q[a])).sum::<f64>();
            (d, j)
        })
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, by_key);
        cand.truncate(k);
    }
    cand.into_iter().map(|(_, j)| j).collect()
}

/// One vertex per `x y z` line; `u`–`v` is an edge when either is among the
/// other's `k` nearest neighbors.
pub fn pointcloud_to_graph(bytes: &[u8], k: usize) -> Result<Graph> {
    if k == 0 {
        return Err(parse_err(0, "k must be at least 1"));
    }
    let text = utf8(bytes)?;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 {
            return Err(parse_err(idx + 1, format!("expected 3 numbers, found {}", toks.len())));
        }
        let mut p = [0.0; 3];
        for (slot, t) in p.iter_mut().zip(&toks) {
            *slot = parse_f64(t, idx + 1)?;
        }
        points.push(p);
    }

    let mut g = Graph::new(Family::Relational, 3)?;
    for p in &points {
        g.add_vertex(p.to_vec())?;
    }
    let mut pairs = BTreeSet::new();
    for i in 0..points.len() {
        for j in nearest(&points, i, k) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    for (a, b) in pairs {
        g.add_edge_natural(VertexId(a as u32), VertexId(b as u32))?;
    }
    Ok(g)
}

/// Writes one `x y z` line per vertex in id order.
pub fn graph_to_pointcloud(g: &Graph) -> Result<Vec<u8>> {
    let mut out = String::new();
    for v in g.vertices() {
        let p = g.position(v.id)?;
        writeln!(out, "{} {} {}", p[0], p[1], p[2]).expect("writing to a String");
    }
    Ok(out.into_bytes())
}
