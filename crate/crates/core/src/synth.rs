//! Procedural seed inputs.
//!
//! Height-field meshes have every face oriented towards +z, so they satisfy
//! the bundled triangle-mesh constraints out of the box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Family, Graph, VertexId};

/// An `nx` by `ny` vertex height field over the unit square. Requires
/// `nx, ny >= 2`.
pub fn height_field(nx: usize, ny: usize, seed: u64) -> Graph {
    assert!(nx >= 2 && ny >= 2, "height field needs at least 2x2 vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = rng.random_range(0.05..0.3);
    let (fx, fy) = (rng.random_range(1.0..4.0), rng.random_range(1.0..4.0));
    let (px, py) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
    let mut g = Graph::triangle_mesh();
    let mut ids = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = i as f64 / (nx - 1) as f64;
            let y = j as f64 / (ny - 1) as f64;
            let z = amp * ((fx * x * 6.3 + px).sin() * (fy * y * 6.3 + py).cos());
            ids.push(g.add_vertex(vec![x, y, z]).expect("finite"));
        }
    }
    let at = |i: usize, j: usize| -> VertexId { ids[j * nx + i] };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            g.add_face([a, b, c]).expect("distinct corners");
            g.add_face([a, c, d]).expect("distinct corners");
        }
    }
    g
}

/// `count` height fields of varying resolution.
pub fn seed_meshes(count: usize, seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let nx = rng.random_range(4..12);
            let ny = rng.random_range(4..12);
            height_field(nx, ny, rng.random())
        })
        .collect()
}

/// A relational graph of `n` random 3-vectors joined in a ring.
pub fn ring(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(Family::Relational, 3).expect("valid family");
    let ids: Vec<VertexId> = (0..n)
        .map(|_| g.add_vertex((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite"))
        .collect();
    for i in 0..n {
        let (a, b) = (ids[i], ids[(i + 1) % n]);
        if a != b && g.edge_between(a, b).is_none() {
            g.add_edge_natural(a, b).expect("distinct");
        }
    }
    g
}
