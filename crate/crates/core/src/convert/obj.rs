//! A plain-geometry subset of Wavefront OBJ: `v` and triangular `f` lines.
//!
//! Other statements (`vn`, `vt`, `o`, `g`, comments, ...) are skipped and
//! reported as warnings. Face entries of the form `a/b/c` use the vertex index
//! before the first slash.

use std::fmt::Write as _;

use super::{parse_err, parse_f64, utf8, ConvertError, Result};
use crate::graph::{Family, Graph, VertexId};

#[derive(Debug, Clone)]
pub struct ObjImport {
    pub graph: Graph,
    pub warnings: Vec<String>,
}

pub fn parse_obj(bytes: &[u8]) -> Result<ObjImport> {
    let text = utf8(bytes)?;
    let mut positions: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut faces: Vec<(usize, [usize; 3])> = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let keyword = toks.next().expect("non-empty line has a token");
        match keyword {
            "v" => {
                let coords = toks.map(|t| parse_f64(t, line_no)).collect::<Result<Vec<_>>>()?;
                if coords.len() < 3 {
                    return Err(parse_err(line_no, "vertex needs at least 3 coordinates"));
                }
                positions.push((line_no, coords));
            }
            "f" => {
                let corners = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or_default();
                        head.parse::<i64>()
                            .map_err(|_| parse_err(line_no, format!("malformed face index `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() != 3 {
                    return Err(ConvertError::Unsupported {
                        line: line_no,
                        message: format!("face with {} corners (only triangles)", corners.len()),
                    });
                }
                let mut tri = [0usize; 3];
                for (slot, &c) in tri.iter_mut().zip(&corners) {
                    if c < 1 {
                        return Err(parse_err(line_no, format!("face index {c} is below 1")));
                    }
                    *slot = c as usize;
                }
                faces.push((line_no, tri));
            }
            _ if keyword.starts_with('#') => warnings.push(format!("line {line_no}: comment skipped")),
            other => warnings.push(format!("line {line_no}: `{other}` statement skipped")),
        }
    }

    let width = positions.first().map_or(3, |(_, p)| p.len());
    let mut graph = Graph::new(Family::TriangleMesh, width)?;
    for (line_no, p) in positions {
        if p.len() != width {
            return Err(parse_err(
                line_no,
                format!("vertex has {} components, earlier vertices have {width}", p.len()),
            ));
        }
        graph.add_vertex(p)?;
    }
    let n = graph.vertex_count();
    for (line_no, tri) in faces {
        if let Some(&bad) = tri.iter().find(|&&c| c > n) {
            return Err(parse_err(line_no, format!("face index {bad} exceeds vertex count {n}")));
        }
        let ids = tri.map(|c| VertexId((c - 1) as u32));
        graph
            .add_face(ids)
            .map_err(|e| parse_err(line_no, format!("invalid face: {e}")))?;
    }
    Ok(ObjImport { graph, warnings })
}

pub fn mesh_to_graph(bytes: &[u8]) -> Result<Graph> {
    let import = parse_obj(bytes)?;
    for w in &import.warnings {
        log::debug!("obj: {w}");
    }
    Ok(import.graph)
}

/// Writes vertices then faces, both in id order, with 1-based face indices.
/// Numbers use the shortest decimal form that parses back to the same value.
pub fn graph_to_mesh(g: &Graph) -> Result<Vec<u8>> {
    g.require_family(Family::TriangleMesh)?;
    let mut out = String::new();
    let mut index = vec![0usize; g.vertex_capacity()];
    for (i, v) in g.vertices().enumerate() {
        index[v.id.index()] = i + 1;
        out.push('v');
        for a in &v.attrs {
            write!(out, " {a}").expect("writing to a String");
        }
        out.push('\n');
    }
    for f in g.faces() {
        let mut line = String::from("f");
        for c in f.corners {
            let i = index.get(c.index()).copied().unwrap_or(0);
            if i == 0 {
                return Err(ConvertError::Internal(format!("{} references missing {c}", f.id)));
            }
            write!(line, " {i}").expect("writing to a String");
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out.into_bytes())
}
