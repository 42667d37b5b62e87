//! Stand-in target program for campaigns and tests.
//!
//! ```text
//! graphref-mock format <file>            exit 0 iff the OBJ is a valid triangle mesh
//! graphref-mock label <file>             as `format`, printing the centroid octant
//! graphref-mock chaos <percent> <file>   accept a fixed share of inputs by content hash
//! graphref-mock exit <code> [label] <file>
//! graphref-mock sleep <ms> <file>
//! ```
//!
//! The mesh check is written from scratch here and shares no code with the
//! library: faces need area above 1e-9 and a normal with positive z, every
//! edge borders one or two faces and every vertex's faces form one fan.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Duration;

const EPSILON: f64 = 1e-9;

struct Mesh {
    points: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

fn parse(text: &str) -> Result<Mesh, String> {
    let mut points = Vec::new();
    let mut raw_faces = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let xs: Vec<f64> = toks
                    .map(|t| t.parse::<f64>().map_err(|_| format!("line {}: bad number {t}", n + 1)))
                    .collect::<Result<_, _>>()?;
                if xs.len() < 3 || xs.iter().any(|x| !x.is_finite()) {
                    return Err(format!("line {}: bad vertex", n + 1));
                }
                points.push([xs[0], xs[1], xs[2]]);
            }
            Some("f") => {
                let ids: Vec<usize> = toks
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| format!("line {}: bad face", n + 1))?;
                if ids.len() != 3 {
                    return Err(format!("line {}: not a triangle", n + 1));
                }
                raw_faces.push((n + 1, [ids[0], ids[1], ids[2]]));
            }
            _ => {}
        }
    }
    let mut faces = Vec::new();
    for (n, f) in raw_faces {
        if f.iter().any(|&i| i == 0 || i > points.len()) {
            return Err(format!("line {n}: face index out of range"));
        }
        let f = f.map(|i| i - 1);
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(format!("line {n}: repeated corner"));
        }
        faces.push(f);
    }
    Ok(Mesh { points, faces })
}

fn cross(p: &[[f64; 3]], f: [usize; 3]) -> [f64; 3] {
    let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn problems(m: &Mesh) -> Vec<String> {
    let mut out = Vec::new();
    let mut edge_faces: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); m.points.len()];
    for (i, &f) in m.faces.iter().enumerate() {
        let n = cross(&m.points, f);
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if 0.5 * len <= EPSILON {
            out.push(format!("face {} has area {}", i + 1, 0.5 * len));
        }
        if len == 0.0 || n[2] / len <= 0.0 {
            out.push(format!("face {} faces downwards", i + 1));
        }
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_faces.entry((a.min(b), a.max(b))).or_default() += 1;
            vertex_faces[f[k]].push(i);
        }
    }
    for ((a, b), n) in edge_faces {
        if n > 2 {
            out.push(format!("edge {}-{} borders {n} faces", a + 1, b + 1));
        }
    }
    for (v, fs) in vertex_faces.iter().enumerate() {
        if fs.is_empty() {
            out.push(format!("vertex {} has no faces", v + 1));
            continue;
        }
        // flood fill over faces sharing a second vertex
        let mut seen = BTreeSet::from([fs[0]]);
        let mut stack = vec![fs[0]];
        while let Some(f) = stack.pop() {
            for &g in fs {
                let shared = m.faces[f].iter().any(|&c| c != v && m.faces[g].contains(&c));
                if shared && seen.insert(g) {
                    stack.push(g);
                }
            }
        }
        if seen.len() != fs.len() {
            out.push(format!("vertex {} is not fan connected", v + 1));
        }
    }
    out
}

fn octant(m: &Mesh) -> String {
    let mut c = [0.0; 3];
    for p in &m.points {
        for i in 0..3 {
            c[i] += p[i] / m.points.len() as f64;
        }
    }
    c.iter().map(|&x| if x >= 0.0 { '+' } else { '-' }).collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn check(path: &str, label: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {path}: {e}");
            return ExitCode::from(2);
        }
    };
    let mesh = match parse(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("parse error: {e}");
            return ExitCode::from(1);
        }
    };
    let found = problems(&mesh);
    if !found.is_empty() {
        for p in found.iter().take(10) {
            eprintln!("{p}");
        }
        return ExitCode::from(1);
    }
    if label {
        println!("{}", octant(&mesh));
    }
    ExitCode::SUCCESS
}

fn usage() -> ExitCode {
    eprintln!("usage: graphref-mock format|label <file> | chaos <percent> <file> | exit <code> [label] <file> | sleep <ms> <file>");
    ExitCode::from(64)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    match args.as_slice() {
        ["format", path] => check(path, false),
        ["label", path] => check(path, true),
        ["chaos", percent, path] => {
            let Ok(p) = percent.parse::<u64>() else { return usage() };
            let Ok(bytes) = std::fs::read(path) else { return ExitCode::from(2) };
            if fnv1a(&bytes) % 100 < p {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        ["exit", code, rest @ ..] if !rest.is_empty() && rest.len() <= 2 => {
            let Ok(code) = code.parse::<u8>() else { return usage() };
            if rest.len() == 2 {
                println!("{}", rest[0]);
            }
            eprintln!("mock exit {code}");
            ExitCode::from(code)
        }
        ["sleep", ms, _path] => {
            let Ok(ms) = ms.parse::<u64>() else { return usage() };
            std::thread::sleep(Duration::from_millis(ms));
            ExitCode::SUCCESS
        }
        _ => usage(),
    }
}
