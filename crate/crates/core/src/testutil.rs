//! Shared helpers for unit tests.

use std::io::Write as _;

use crate::embedding::EmbeddingMatrix;
use crate::graph::{load_edge_list, Graph};

/// Parse an edge list from an inline string.
pub(crate) fn graph_from(content: &str, directed: bool, weighted: bool) -> Graph {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    load_edge_list(f.path(), directed, weighted).unwrap().0
}

/// Two disjoint k-cliques with ids `p0n*` and `p1n*`.
pub(crate) fn two_cliques(k: usize) -> Graph {
    let mut text = String::new();
    for part in 0..2 {
        for i in 0..k {
            for j in (i + 1)..k {
                text.push_str(&format!("p{part}n{i} p{part}n{j}\n"));
            }
        }
    }
    graph_from(&text, false, false)
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Mean within-group minus mean across-group cosine similarity, with
/// group = whether the node id starts with `p0`.
pub(crate) fn clique_cosine_gap(g: &Graph, emb: &EmbeddingMatrix) -> f64 {
    let group = |u: usize| g.node_id(u).starts_with("p0");
    let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
    for u in 0..g.n_nodes() {
        for v in (u + 1)..g.n_nodes() {
            let c = cosine(emb.vector(u), emb.vector(v));
            if group(u) == group(v) {
                intra = (intra.0 + c, intra.1 + 1);
            } else {
                inter = (inter.0 + c, inter.1 + 1);
            }
        }
    }
    intra.0 / intra.1 as f64 - inter.0 / inter.1 as f64
}
