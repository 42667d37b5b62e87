//! Plain text as a directed chain of tokens.
//!
//! Each token becomes a vertex whose single attribute is a stable 53-bit
//! hash of the token, exactly representable as `f64`. The graph keeps a
//! vocabulary from codes back to token text so it can be written out again.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{utf8, Result};
use crate::graph::{Family, Graph};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the token bytes, truncated to 53 bits.
pub fn token_code(token: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h & ((1u64 << 53) - 1)
}

pub fn text_to_graph(bytes: &[u8]) -> Result<Graph> {
    let text = utf8(bytes)?;
    let mut g = Graph::new(Family::Sequence, 1)?;
    let mut prev = None;
    for tok in text.split_whitespace() {
        let code = token_code(tok);
        g.vocabulary_mut().entry(code).or_insert_with(|| tok.to_string());
        let v = g.add_vertex(vec![code as f64])?;
        if let Some(p) = prev {
            g.add_edge(p, v, 1.0)?;
        }
        prev = Some(v);
    }
    Ok(g)
}

/// Emits tokens joined by single spaces, in chain order. The order is a
/// topological sort preferring lower ids; vertices on cycles follow in id
/// order. Codes missing from the vocabulary are written as `<code>`.
pub fn graph_to_text(g: &Graph) -> Result<Vec<u8>> {
    g.require_family(Family::Sequence)?;
    let cap = g.vertex_capacity();
    let mut indeg = vec![0usize; cap];
    for e in g.edges() {
        indeg[e.endpoints.1.index()] += 1;
    }
    let mut ready: BinaryHeap<Reverse<u32>> =
        g.vertices().filter(|v| indeg[v.id.index()] == 0).map(|v| Reverse(v.id.0)).collect();
    let mut order = Vec::with_capacity(g.vertex_count());
    let mut placed = vec![false; cap];
    while let Some(Reverse(id)) = ready.pop() {
        let v = crate::graph::VertexId(id);
        placed[v.index()] = true;
        order.push(v);
        for &e in g.incident_edges(v)? {
            let (from, to) = g.edge(e)?.endpoints;
            if from == v {
                indeg[to.index()] -= 1;
                if indeg[to.index()] == 0 {
                    ready.push(Reverse(to.0));
                }
            }
        }
    }
    order.extend(g.vertices().map(|v| v.id).filter(|v| !placed[v.index()]));

    let words: Vec<String> = order
        .into_iter()
        .map(|v| {
            let code = g.attrs(v)?[0];
            let known = (code >= 0.0 && code.fract() == 0.0)
                .then(|| g.vocabulary().get(&(code as u64)))
                .flatten();
            Ok(match known {
                Some(word) => word.clone(),
                None => format!("<{code}>"),
            })
        })
        .collect::<Result<_>>()?;
    Ok(words.join(" ").into_bytes())
}
