//! Row-stochastic transition matrix of a graph.

use log::warn;

use super::Graph;
use crate::numerics::SparseMatrix;

/// Out-degree-normalized transition matrix. Rows of nodes with no
/// outgoing edges become uniform over all nodes (teleport), so every row
/// sums to 1 regardless of sinks.
pub fn transition_matrix(graph: &Graph) -> SparseMatrix {
    let n = graph.n_nodes();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut sinks = 0usize;
    for u in 0..n {
        let (targets, weights) = graph.neighbors(u);
        if targets.is_empty() {
            sinks += 1;
            let p = 1.0 / n as f64;
            rows.push((0..n as u32).map(|v| (v, p)).collect());
        } else {
            let total: f64 = weights.iter().sum();
            rows.push(
                targets
                    .iter()
                    .zip(weights)
                    .map(|(&v, &w)| (v, w / total))
                    .collect(),
            );
        }
    }
    if sinks > 0 {
        warn!("{sinks} node(s) have no outgoing edges; using uniform teleport rows");
    }
    SparseMatrix::from_rows(n, n, rows).expect("normalized rows are valid")
}
