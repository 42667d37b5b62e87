//! Grayscale PGM images as four-way pixel grids.
//!
//! Reads binary (P5) and ASCII (P2) files with maxval up to 255; always
//! writes P5 with maxval 255. Gray values are kept as read, not rescaled.

use super::{parse_err, ConvertError, Result};
use crate::graph::{Family, Graph, VertexId};

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

/// Reads whitespace-separated header fields, skipping `#` comments.
fn header(bytes: &[u8]) -> Result<Header> {
    let magic = bytes.get(..2).ok_or_else(|| parse_err(1, "truncated PGM header"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(parse_err(1, "not a PGM file (expected P5 or P2)")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(1, "malformed PGM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| parse_err(1, "PGM header number too large"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(1, format!("unsupported maxval {maxval} (must be 1..=255)")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(parse_err(1, "missing whitespace after PGM header"));
    }
    Ok(Header { binary, width, height, maxval, data_start: pos + 1 })
}

pub fn image_to_graph(bytes: &[u8]) -> Result<Graph> {
    let h = header(bytes)?;
    let n = h.width.checked_mul(h.height).ok_or_else(|| parse_err(1, "image too large"))?;
    let data = &bytes[h.data_start..];
    let values: Vec<f64> = if h.binary {
        if data.len() < n {
            return Err(parse_err(1, format!("expected {n} pixel bytes, found {}", data.len())));
        }
        data[..n].iter().map(|&b| f64::from(b)).collect()
    } else {
        let text = std::str::from_utf8(data).map_err(|_| ConvertError::Utf8)?;
        let vals = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(1, format!("bad pixel `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != n {
            return Err(parse_err(1, format!("expected {n} pixels, found {}", vals.len())));
        }
        vals.into_iter().map(|v| v as f64).collect()
    };
    if let Some(v) = values.iter().find(|&&v| v > h.maxval as f64) {
        return Err(parse_err(1, format!("pixel {v} exceeds maxval {}", h.maxval)));
    }

    let mut g = Graph::new(Family::Grid, 1)?;
    for v in values {
        g.add_vertex(vec![v])?;
    }
    let id = |x: usize, y: usize| VertexId((y * h.width + x) as u32);
    for y in 0..h.height {
        for x in 0..h.width {
            if x + 1 < h.width {
                g.add_edge_natural(id(x, y), id(x + 1, y))?;
            }
            if y + 1 < h.height {
                g.add_edge_natural(id(x, y), id(x, y + 1))?;
            }
        }
    }
    g.set_grid_dims((h.width, h.height));
    Ok(g)
}

fn write_pgm(g: &Graph, clamp: bool) -> Result<Vec<u8>> {
    g.require_family(Family::Grid)?;
    let (w, h) = g
        .grid_dims()
        .ok_or_else(|| ConvertError::Internal("grid graph without dimensions".into()))?;
    if g.vertex_count() != w * h {
        return Err(ConvertError::Internal(format!(
            "grid {w}x{h} holds {} vertices",
            g.vertex_count()
        )));
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for (i, v) in g.vertices().enumerate() {
        let value = v.attrs[0];
        if !clamp && !(0.0..=255.0).contains(&value) {
            return Err(ConvertError::OutOfRange { vertex: i, value });
        }
        out.push(value.clamp(0.0, 255.0).round() as u8);
    }
    Ok(out)
}

/// Writes binary PGM, clamping values to `[0, 255]` and rounding.
pub fn graph_to_image(g: &Graph) -> Result<Vec<u8>> {
    write_pgm(g, true)
}

/// Like [`graph_to_image`] but rejects values outside `[0, 255]`.
pub fn graph_to_image_unclamped(g: &Graph) -> Result<Vec<u8>> {
    write_pgm(g, false)
}
