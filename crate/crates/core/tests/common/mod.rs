#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use graphref::convert::{graph_to_mesh, mesh_to_graph};
use graphref::dsl::{self, parse_spec, ConstraintSpec, TRIANGLE_MESH_GCON};
use graphref::graph::ElementRef;
use graphref::mutate::{mutate_n, seeded_rng, NeighborPolicy, OpWeights};
use graphref::synth;

pub const EPS: f64 = 1e-9;

pub fn mesh_spec() -> ConstraintSpec {
    parse_spec(TRIANGLE_MESH_GCON).unwrap()
}

pub fn mock_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_graphref-mock"))
}

pub fn mock_cmd(args: &[&str]) -> Vec<String> {
    let mut cmd = vec![mock_bin().display().to_string()];
    cmd.extend(args.iter().map(|s| s.to_string()));
    cmd
}

fn obj(verts: &[[f64; 3]], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for v in verts {
        s += &format!("v {} {} {}\n", v[0], v[1], v[2]);
    }
    for f in faces {
        s += &format!("f {} {} {}\n", f[0], f[1], f[2]);
    }
    s
}

fn hand_made() -> Vec<(String, String)> {
    let sq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
    let hex: Vec<[f64; 3]> = std::iter::once([0.0, 0.0, 0.0])
        .chain((0..6).map(|i| {
            let t = i as f64 * std::f64::consts::PI / 3.0;
            [t.cos(), t.sin(), 0.1]
        }))
        .collect();
    let ring = |n: usize, skip: &[usize]| -> Vec<[usize; 3]> {
        (0..6).filter(|i| !skip.contains(i)).map(|i| [1, 2 + i, 2 + (i + 1) % n]).collect()
    };
    let tetra = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.3, 1.0]];
    let octa = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let bowtie = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0],
        [-1.0, -1.0, 0.0],
    ];
    vec![
        ("single".into(), obj(&sq[..3], &[[1, 2, 3]])),
        ("single_cw".into(), obj(&sq[..3], &[[1, 3, 2]])),
        ("quad".into(), obj(&sq, &[[1, 2, 3], [1, 3, 4]])),
        ("quad_mixed".into(), obj(&sq, &[[1, 2, 3], [1, 4, 3]])),
        ("bowtie".into(), obj(&bowtie, &[[1, 2, 3], [1, 4, 5]])),
        (
            "double_bowtie".into(),
            obj(
                &[bowtie.as_slice(), &[[0.0, 1.0, 0.0], [-1.0, 1.0, 0.0]]].concat(),
                &[[1, 2, 3], [1, 3, 6], [1, 4, 5], [1, 7, 4]],
            ),
        ),
        ("closed_fan".into(), obj(&hex, &ring(6, &[]))),
        ("open_fan".into(), obj(&hex, &ring(6, &[5]))),
        ("fan_two_gaps".into(), obj(&hex, &ring(6, &[1, 4]))),
        ("tetrahedron".into(), obj(&tetra, &[[1, 3, 2], [1, 2, 4], [2, 3, 4], [3, 1, 4]])),
        (
            "octahedron".into(),
            obj(
                &octa,
                &[
                    [1, 3, 5],
                    [3, 2, 5],
                    [2, 4, 5],
                    [4, 1, 5],
                    [3, 1, 6],
                    [2, 3, 6],
                    [4, 2, 6],
                    [1, 4, 6],
                ],
            ),
        ),
        ("zero_area".into(), obj(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], &[[1, 2, 3]])),
        ("tiny_area".into(), obj(&[[0.0, 0.0, 0.0], [1e-5, 0.0, 0.0], [0.0, 1e-5, 0.0]], &[[1, 2, 3]])),
        (
            "zero_area_in_strip".into(),
            obj(
                &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5, 1.0, 0.0]],
                &[[1, 3, 4], [3, 2, 4], [1, 2, 3]],
            ),
        ),
        (
            "coincident_corners".into(),
            obj(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], &[[1, 2, 3]]),
        ),
        (
            "duplicate_vertex".into(),
            obj(
                &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
                &[[1, 2, 3], [1, 4, 5]],
            ),
        ),
        ("duplicate_unused".into(), obj(&[sq.as_slice(), &[[1.0, 1.0, 0.0]]].concat(), &[[1, 2, 3], [1, 3, 4]])),
        ("isolated_vertex".into(), obj(&[sq.as_slice(), &[[5.0, 5.0, 5.0]]].concat(), &[[1, 2, 3], [1, 3, 4]])),
        (
            "fin".into(),
            obj(
                &[sq.as_slice(), &[[0.5, 0.5, 1.0]]].concat(),
                &[[1, 2, 3], [1, 3, 4], [1, 3, 5]],
            ),
        ),
        ("duplicate_face".into(), obj(&sq, &[[1, 2, 3], [1, 2, 3], [1, 3, 4]])),
        ("triple_face".into(), obj(&sq[..3], &[[1, 2, 3], [2, 3, 1], [3, 1, 2]])),
        (
            "two_islands".into(),
            obj(
                &[sq.as_slice(), &[[3.0, 0.0, 0.0], [4.0, 0.0, 0.0], [3.0, 1.0, 0.0]]].concat(),
                &[[1, 2, 3], [5, 6, 7]],
            ),
        ),
        ("vertical".into(), obj(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]], &[[1, 2, 3]])),
        ("empty".into(), String::new()),
        ("points_only".into(), obj(&sq, &[])),
    ]
}

/// Hand-made corner cases, clean height fields and unrefined mutants; every
/// mesh has at most 50 faces.
pub fn fixture_objs() -> Vec<(String, String)> {
    let mut out = hand_made();
    for (i, (nx, ny)) in [(2, 2), (3, 3), (4, 4), (3, 6), (5, 5), (6, 4)].into_iter().enumerate() {
        let g = synth::height_field(nx, ny, i as u64);
        out.push((format!("field_{nx}x{ny}"), String::from_utf8(graph_to_mesh(&g).unwrap()).unwrap()));
    }
    let policy = NeighborPolicy::default();
    let mut rng = seeded_rng(7, 0);
    let mut made = 0;
    for i in 0..40u64 {
        let g = synth::height_field(3 + (i % 3) as usize, 4, i);
        let Ok((m, _)) = mutate_n(&g, 3, &OpWeights::default(), &policy, &mut rng) else { continue };
        if m.face_ids().len() <= 50 {
            out.push((format!("mutant_{i}"), String::from_utf8(graph_to_mesh(&m).unwrap()).unwrap()));
            made += 1;
        }
        if made == 16 {
            break;
        }
    }
    out
}

/// What a violation is attached to, by position in the OBJ file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Face(usize, [usize; 3]),
    Edge(usize, usize),
    Vertex(usize),
}

/// Listing checks computed straight from the OBJ text: face normal z, face
/// area, faces per edge and fan connectivity per vertex.
pub fn naive_check(text: &str, eps: f64) -> Vec<(usize, Key)> {
    let mut verts: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for line in text.lines() {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first() {
            Some(&"v") => verts.push([t[1].parse().unwrap(), t[2].parse().unwrap(), t[3].parse().unwrap()]),
            Some(&"f") => faces.push([0, 1, 2].map(|i| t[i + 1].parse::<usize>().unwrap() - 1)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let [a, b, c] = f.map(|i| verts[i]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        if !(n[2] > 0.0) {
            out.push((0, Key::Face(fi, *f)));
        }
        let area = 0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !(area > eps) {
            out.push((1, Key::Face(fi, *f)));
        }
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for f in &faces {
        for (p, q) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            edges.insert((p.min(q), p.max(q)));
        }
    }
    for &(p, q) in &edges {
        let count = faces.iter().filter(|f| f.contains(&p) && f.contains(&q)).count();
        if count != 1 && count != 2 {
            out.push((2, Key::Edge(p, q)));
        }
    }
    for v in 0..verts.len() {
        if naive_fan_components(&faces, v) != 1 {
            out.push((3, Key::Vertex(v)));
        }
    }
    out.sort();
    out
}

/// Components of the faces around `v`, two faces being joined when they
/// share a second vertex.
pub fn naive_fan_components(faces: &[[usize; 3]], v: usize) -> usize {
    let around: Vec<usize> = (0..faces.len()).filter(|&i| faces[i].contains(&v)).collect();
    let mut seen = vec![false; around.len()];
    let mut comps = 0;
    for s in 0..around.len() {
        if seen[s] {
            continue;
        }
        comps += 1;
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(i) = q.pop_front() {
            for j in 0..around.len() {
                let shared = faces[around[i]].iter().filter(|&&x| x != v && faces[around[j]].contains(&x)).count();
                if !seen[j] && shared > 0 {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    comps
}

/// The library verifier's report on `text`, keyed like [`naive_check`].
pub fn library_check(spec: &ConstraintSpec, text: &str, eps: f64) -> Vec<(usize, Key)> {
    let g = mesh_to_graph(text.as_bytes()).unwrap();
    let report = dsl::verify(spec, &g, eps).unwrap();
    let mut out: Vec<(usize, Key)> = report
        .entries
        .iter()
        .map(|v| {
            let idx = v.constraint_index().expect("mesh spec has no checkable declarations");
            let key = match v.element {
                ElementRef::Face(f) => Key::Face(f.index(), g.face(f).unwrap().corners.map(|c| c.index())),
                ElementRef::Edge(e) => {
                    let (a, b) = g.edge(e).unwrap().endpoints;
                    Key::Edge(a.index().min(b.index()), a.index().max(b.index()))
                }
                ElementRef::Vertex(v) => Key::Vertex(v.index()),
            };
            (idx, key)
        })
        .collect();
    out.sort();
    out
}

/// Writes `count` procedural height-field seeds as OBJ files under `dir`.
pub fn write_seed_meshes(dir: &Path, count: usize, seed: u64) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    synth::seed_meshes(count, seed)
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let p = dir.join(format!("seed{i:02}.obj"));
            std::fs::write(&p, graph_to_mesh(g).unwrap()).unwrap();
            p
        })
        .collect()
}

/// O(n^2) symmetric kNN edge set with ties broken by lower index.
pub fn brute_knn(points: &[[f64; 3]], k: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..points.len() {
        let mut d: Vec<(f64, usize)> = (0..points.len())
            .filter(|&j| j != i)
            .map(|j| ((0..3).map(|a| (points[i][a] - points[j][a]).powi(2)).sum(), j))
            .collect();
        d.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        for &(_, j) in d.iter().take(k) {
            out.insert((i.min(j), i.max(j)));
        }
    }
    out
}

pub fn counts<K: Ord + Clone>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// A fan around vertex 0 whose rim vertices sit at the given distances, so
/// kernel weights strictly decrease along the rim.
pub fn star(distances: &[f64]) -> graphref::graph::Graph {
    let mut g = graphref::graph::Graph::triangle_mesh();
    let hub = g.add_vertex(vec![0.0, 0.0, 0.0]).unwrap();
    let mut prev = None;
    for (i, d) in distances.iter().enumerate() {
        let t = i as f64;
        let v = g.add_vertex(vec![d * t.cos(), d * t.sin(), 0.0]).unwrap();
        if let Some(p) = prev {
            g.add_face([hub, p, v]).unwrap();
        }
        prev = Some(v);
    }
    g
}

/// Runs `trials` cohort draws around the hub of [`star`] and checks that
/// each rim vertex is included at least as often as the next, less similar
/// one, allowing 3 binomial standard deviations. Returns the hit counts.
pub fn cohort_monotonicity(trials: usize) -> Result<Vec<usize>, String> {
    use graphref::graph::VertexId;
    use graphref::mutate::{select_cohort, similarity_weight, SigmaMode};
    let g = star(&[0.2, 0.5, 0.9, 1.4, 2.0]);
    let policy = NeighborPolicy { hops: 1, sigma: SigmaMode::Fixed(1.0), rho: 0.9, enabled: true };
    let hub = VertexId(0);
    let rim: Vec<VertexId> = (1..=5).map(VertexId).collect();
    let w: Vec<f64> = rim.iter().map(|&v| similarity_weight(&g, hub, v, 1.0).unwrap()).collect();
    if !w.windows(2).all(|p| p[0] > p[1]) {
        return Err(format!("weights not strictly decreasing: {w:?}"));
    }
    let mut hits = vec![0usize; rim.len()];
    let mut rng = seeded_rng(3, 0);
    for _ in 0..trials {
        let c = select_cohort(&g, hub, &policy, &mut rng).unwrap();
        if !c.contains(&hub) {
            return Err("cohort lost its anchor".into());
        }
        for (i, v) in rim.iter().enumerate() {
            hits[i] += c.contains(v) as usize;
        }
    }
    let n = trials as f64;
    for i in 0..rim.len() - 1 {
        let (hi, lo) = (hits[i] as f64, hits[i + 1] as f64);
        let p = (hi + lo) / (2.0 * n);
        let sigma = (2.0 * n * p * (1.0 - p)).sqrt();
        if hi + 3.0 * sigma < lo {
            return Err(format!("rim {i}: {hi} < {lo} beyond 3 sigma"));
        }
    }
    let sd = (n * policy.rho * (1.0 - policy.rho)).sqrt();
    if (hits[0] as f64 - policy.rho * n).abs() > 3.0 * sd {
        return Err(format!("most similar neighbor hit {} times, expected {}", hits[0], policy.rho * n));
    }
    Ok(hits)
}
