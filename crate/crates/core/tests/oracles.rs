mod common;

use std::collections::BTreeSet;

use common::*;
use graphref::convert::{mesh_to_graph, pointcloud_to_graph};
use graphref::graph::Graph;
use graphref::refine::merge_duplicate_vertices;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fixture_corpus_is_large_enough() {
    let fx = fixture_objs();
    assert!(fx.len() >= 30, "{} fixtures", fx.len());
    for (name, text) in &fx {
        let g = mesh_to_graph(text.as_bytes()).unwrap();
        assert!(g.face_ids().len() <= 50, "{name}");
    }
}

#[test]
fn verifier_matches_naive_checker() {
    let spec = mesh_spec();
    for (name, text) in fixture_objs() {
        assert_eq!(library_check(&spec, &text, EPS), naive_check(&text, EPS), "{name}");
    }
}

#[test]
fn named_fixtures_have_expected_violations() {
    let spec = mesh_spec();
    let fx: std::collections::BTreeMap<_, _> = fixture_objs().into_iter().collect();
    let kinds = |name: &str| -> Vec<usize> { library_check(&spec, &fx[name], EPS).iter().map(|v| v.0).collect() };
    assert_eq!(kinds("quad"), Vec::<usize>::new());
    assert_eq!(kinds("bowtie"), vec![3]);
    assert_eq!(kinds("open_fan"), Vec::<usize>::new());
    assert_eq!(kinds("zero_area"), vec![0, 1]);
    assert_eq!(kinds("tiny_area"), vec![1]);
    assert_eq!(kinds("fin"), vec![0, 2]);
    assert_eq!(kinds("isolated_vertex"), vec![3]);
}

#[test]
fn larger_epsilon_never_removes_area_violations() {
    let spec = mesh_spec();
    for (name, text) in fixture_objs() {
        let small: BTreeSet<_> = library_check(&spec, &text, 1e-12).into_iter().filter(|v| v.0 == 1).collect();
        let large: BTreeSet<_> = library_check(&spec, &text, 1e-3).into_iter().filter(|v| v.0 == 1).collect();
        assert!(small.is_subset(&large), "{name}");
    }
}

fn random_cloud(n: usize, seed: u64, grid: bool) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            if grid {
                // Integer lattice points produce many exact distance ties.
                [0, 1, 2].map(|_| rng.random_range(0..6) as f64)
            } else {
                [0, 1, 2].map(|_| rng.random_range(-1.0..1.0))
            }
        })
        .collect()
}

fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
    g.edges()
        .map(|e| {
            let (a, b) = (e.endpoints.0.index(), e.endpoints.1.index());
            (a.min(b), a.max(b))
        })
        .collect()
}

fn xyz(points: &[[f64; 3]]) -> Vec<u8> {
    points.iter().map(|p| format!("{} {} {}\n", p[0], p[1], p[2])).collect::<String>().into_bytes()
}

#[test]
fn knn_matches_brute_force() {
    for (n, k, seed, grid) in [(10, 3, 1, false), (120, 6, 2, false), (500, 6, 3, false), (200, 4, 4, true), (7, 10, 5, false)] {
        let pts = random_cloud(n, seed, grid);
        let g = pointcloud_to_graph(&xyz(&pts), k).unwrap();
        assert_eq!(edge_set(&g), brute_knn(&pts, k), "n={n} k={k} grid={grid}");
    }
}

#[test]
fn incident_faces_match_enumeration() {
    for (name, text) in fixture_objs() {
        let g = mesh_to_graph(text.as_bytes()).unwrap();
        for e in g.edges() {
            let (a, b) = e.endpoints;
            let want: Vec<_> = g.faces().filter(|f| f.corners.contains(&a) && f.corners.contains(&b)).map(|f| f.id).collect();
            let mut got = g.incident_faces(e.id).unwrap();
            got.sort();
            assert_eq!(got, want, "{name} {}", e.id);
        }
    }
}

#[test]
fn fan_connectivity_matches_face_graph() {
    for (name, text) in fixture_objs() {
        let g = mesh_to_graph(text.as_bytes()).unwrap();
        let faces: Vec<[usize; 3]> = g.faces().map(|f| f.corners.map(|c| c.index())).collect();
        for v in g.vertex_ids() {
            let want = naive_fan_components(&faces, v.index());
            assert_eq!(g.fan_components(v).unwrap().len(), want, "{name} {v}");
        }
    }
}

#[test]
fn duplicate_merge_matches_union_find() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let mut g = Graph::triangle_mesh();
        let anchors: Vec<[f64; 3]> = (0..8).map(|_| [0, 1, 2].map(|_| rng.random_range(0..4) as f64)).collect();
        let n = 25;
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let a = anchors[rng.random_range(0..anchors.len())];
                [a[0] + rng.random_range(0.0..1e-9), a[1], a[2]]
            })
            .collect();
        for p in &pts {
            g.add_vertex(p.to_vec()).unwrap();
        }
        let tol = 1e-6;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for i in 0..n {
            for j in i + 1..n {
                let d: f64 = (0..3).map(|a| (pts[i][a] - pts[j][a]).powi(2)).sum::<f64>().sqrt();
                if d <= tol {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let roots: BTreeSet<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        merge_duplicate_vertices(&mut g, tol).unwrap();
        let left: BTreeSet<usize> = g.vertex_ids().iter().map(|v| v.index()).collect();
        assert_eq!(left, roots, "trial {trial}");
    }
}

#[test]
fn cohort_inclusion_is_monotone_in_weight() {
    let hits = cohort_monotonicity(10_000).unwrap();
    assert!(hits.windows(2).all(|p| p[0] + 300 >= p[1]), "{hits:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_matches_brute_force_on_small_clouds(
        pts in prop::collection::vec(prop::array::uniform3(-3i32..3), 2..40),
        k in 1usize..8,
    ) {
        let pts: Vec<[f64; 3]> = pts.iter().map(|p| p.map(f64::from)).collect();
        let g = pointcloud_to_graph(&xyz(&pts), k).unwrap();
        prop_assert_eq!(edge_set(&g), brute_knn(&pts, k));
    }
}
