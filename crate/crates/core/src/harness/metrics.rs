use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::graph::{Family, Graph};
use crate::mutate::FuzzRng;

/// Above this many pairs, diversity is estimated from a sample.
pub const MAX_EXACT_PAIRS: usize = 10_000;
pub const SAMPLED_PAIRS: usize = 1_000;

/// Share of mutant labels equal to the original after trimming; `None` when
/// there are no labels to compare.
pub fn semantic_preservation(original: &str, mutant_labels: &[String]) -> Option<f64> {
    if mutant_labels.is_empty() {
        return None;
    }
    let want = original.trim();
    let same = mutant_labels.iter().filter(|l| l.trim() == want).count();
    Some(same as f64 / mutant_labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(Summary {
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
            count: values.len(),
        })
    }
}

fn mean_nearest(tree: &ImmutableKdTree<f64, 3>, queries: &[[f64; 3]]) -> f64 {
    let total: f64 = queries.iter().map(|q| tree.nearest_one::<SquaredEuclidean>(q).distance.sqrt()).sum();
    total / queries.len() as f64
}

/// Symmetric chamfer distance (mean nearest-neighbor distance from `a` to
/// `b` plus from `b` to `a`) divided by the diagonal of the joint bounding box.
pub fn chamfer_distance(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in a.iter().chain(b) {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let diag = (0..3).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt();
    if diag == 0.0 {
        return 0.0;
    }
    let ta: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(a);
    let tb: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(b);
    (mean_nearest(&tb, a) + mean_nearest(&ta, b)) / diag
}

fn positions(g: &Graph) -> Vec<[f64; 3]> {
    g.vertices()
        .map(|v| {
            let mut p = [0.0; 3];
            for (slot, x) in p.iter_mut().zip(&v.attrs) {
                *slot = *x;
            }
            p
        })
        .collect()
}

fn degree_histogram(g: &Graph) -> Vec<f64> {
    let degrees: Vec<usize> = g.vertices().map(|v| g.degree(v.id).unwrap_or(0)).collect();
    let top = degrees.iter().copied().max().unwrap_or(0);
    let mut h = vec![0.0; top + 1];
    for d in &degrees {
        h[*d] += 1.0 / degrees.len() as f64;
    }
    h
}

/// Attribute L1 over vertices paired in id order, scaled into [0, 1], plus
/// half the L1 distance between normalized degree histograms.
fn aligned_distance(a: &Graph, b: &Graph) -> f64 {
    let va: Vec<&[f64]> = a.vertices().map(|v| v.attrs.as_slice()).collect();
    let vb: Vec<&[f64]> = b.vertices().map(|v| v.attrs.as_slice()).collect();
    let n = va.len().max(vb.len());
    if n == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in va.iter().chain(&vb).flat_map(|v| v.iter()) {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    let range = if hi > lo { hi - lo } else { 1.0 };
    let paired = va.len().min(vb.len());
    let mut total = (n - paired) as f64;
    for (x, y) in va.iter().zip(&vb) {
        let width = x.len().max(1) as f64;
        total += x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs() / range).sum::<f64>() / width;
    }
    let attr = total / n as f64;
    let (ha, hb) = (degree_histogram(a), degree_histogram(b));
    let bins = ha.len().max(hb.len());
    let structure: f64 = (0..bins)
        .map(|i| (ha.get(i).copied().unwrap_or(0.0) - hb.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0;
    attr + structure
}

/// Dissimilarity of two graphs of the same family.
pub fn graph_distance(a: &Graph, b: &Graph) -> Result<f64> {
    if a.family() != b.family() {
        return Err(HarnessError::Metric(format!("cannot compare {} with {}", a.family(), b.family())));
    }
    Ok(match a.family() {
        Family::TriangleMesh | Family::Relational => chamfer_distance(&positions(a), &positions(b)),
        Family::Grid | Family::Sequence => aligned_distance(a, b),
    })
}

/// Distances over all unordered pairs, or over a uniform sample of
/// [`SAMPLED_PAIRS`] pairs when there are more than [`MAX_EXACT_PAIRS`].
pub fn pairwise_distances(graphs: &[Graph], rng: &mut FuzzRng) -> Result<Vec<f64>> {
    let n = graphs.len();
    if n < 2 {
        return Err(HarnessError::Metric(format!("diversity needs at least 2 graphs, got {n}")));
    }
    let pairs = n * (n - 1) / 2;
    let mut out = Vec::new();
    if pairs <= MAX_EXACT_PAIRS {
        for i in 0..n {
            for j in i + 1..n {
                out.push(graph_distance(&graphs[i], &graphs[j])?);
            }
        }
    } else {
        for _ in 0..SAMPLED_PAIRS {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            out.push(graph_distance(&graphs[i], &graphs[j])?);
        }
    }
    Ok(out)
}

pub fn mutation_diversity(graphs: &[Graph], rng: &mut FuzzRng) -> Result<Summary> {
    let d = pairwise_distances(graphs, rng)?;
    Ok(Summary::of(&d).expect("at least one pair"))
}
