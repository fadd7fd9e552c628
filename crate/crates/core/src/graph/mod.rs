//! Graph loading and the sampling/matrix primitives built on top of it.

mod alias;
mod labels;
mod transition;

pub use alias::{build_alias_table, AliasTable};
pub use labels::{load_labels, load_labels_intersect, LabelLoadStats, LabelStore, TaskKind};
pub use transition::transition_matrix;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Immutable weighted graph in CSR form with external-ID mapping.
///
/// Internal indices follow first appearance in the edge file. Undirected
/// graphs store both directions of every edge, so the adjacency arrays are
/// symmetric by construction. Self-loops never survive loading.
#[derive(Debug, Clone)]
pub struct Graph {
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

/// Counts reported by `load_edge_list`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadStats {
    pub n_nodes: usize,
    /// Edge lines parsed, excluding comments and blanks.
    pub edge_lines: usize,
    pub self_loops_dropped: usize,
    /// CSR entries removed by merging repeated (src, dst) pairs.
    pub duplicates_merged: usize,
    /// CSR entries after merging (undirected edges count twice).
    pub stored_arcs: usize,
    /// Undirected edges counted once; equals stored_arcs when directed.
    pub stored_edges: usize,
}

impl Graph {
    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// CSR entries; undirected edges contribute two.
    pub fn n_arcs(&self) -> usize {
        self.targets.len()
    }

    pub fn n_edges(&self) -> usize {
        if self.directed {
            self.targets.len()
        } else {
            self.targets.len() / 2
        }
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Neighbor indices (strictly increasing) and parallel weights.
    pub fn neighbors(&self, u: usize) -> (&[u32], &[f64]) {
        let lo = self.offsets[u];
        let hi = self.offsets[u + 1];
        (&self.targets[lo..hi], &self.weights[lo..hi])
    }

    pub fn has_edge(&self, u: usize, v: u32) -> bool {
        self.neighbors(u).0.binary_search(&v).is_ok()
    }

    pub fn edge_weight(&self, u: usize, v: u32) -> Option<f64> {
        let (t, w) = self.neighbors(u);
        t.binary_search(&v).ok().map(|i| w[i])
    }

    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.neighbors(u).1.iter().sum()
    }

    pub fn node_id(&self, u: usize) -> &str {
        &self.ids[u]
    }

    pub fn node_index(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    /// All stored arcs as (src, dst, weight).
    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            let (t, w) = self.neighbors(u);
            t.iter().zip(w).map(move |(&v, &wt)| (u as u32, v, wt))
        })
    }

    /// Structural equality under external IDs: same nodes and, per node,
    /// the same weighted neighbor-ID multiset. Internal index order is
    /// allowed to differ.
    pub fn structure_eq(&self, other: &Graph) -> bool {
        if self.n_nodes() != other.n_nodes()
            || self.directed != other.directed
            || self.n_arcs() != other.n_arcs()
        {
            return false;
        }
        for (u, id) in self.ids.iter().enumerate() {
            let Some(ou) = other.node_index(id) else {
                return false;
            };
            let (st, sw) = self.neighbors(u);
            let (ot, ow) = other.neighbors(ou as usize);
            if st.len() != ot.len() {
                return false;
            }
            let mut mine: Vec<(&str, f64)> = st
                .iter()
                .zip(sw)
                .map(|(&v, &w)| (self.node_id(v as usize), w))
                .collect();
            let mut theirs: Vec<(&str, f64)> = ot
                .iter()
                .zip(ow)
                .map(|(&v, &w)| (other.node_id(v as usize), w))
                .collect();
            mine.sort_by(|a, b| a.0.cmp(b.0));
            theirs.sort_by(|a, b| a.0.cmp(b.0));
            if mine != theirs {
                return false;
            }
        }
        true
    }
}

/// Loads a whitespace-separated edge list: `src dst [weight]` per line,
/// `#` or `%` starting a comment line. Node IDs are arbitrary tokens.
///
/// Repeated (src, dst) pairs merge by weight summation. Self-loop lines
/// are dropped entirely, so a node appearing only in self-loops does not
/// enter the graph. With `weighted` false any third column is ignored and
/// all weights are 1.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    directed: bool,
    weighted: bool,
) -> Result<(Graph, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut raw: Vec<(u32, u32, f64)> = Vec::new();
    let mut edge_lines = 0usize;
    let mut self_loops = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(src), Some(dst)) = (tokens.next(), tokens.next()) else {
            return Err(Error::parse(path, lineno, "expected \"src dst [weight]\""));
        };
        let weight = match (weighted, tokens.next()) {
            (true, Some(tok)) => tok.parse::<f64>().map_err(|_| {
                Error::parse(path, lineno, format!("bad weight {tok:?}"))
            })?,
            _ => 1.0,
        };
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("weight must be positive and finite, got {weight}"),
            ));
        }
        edge_lines += 1;
        if src == dst {
            self_loops += 1;
            continue;
        }
        let u = intern(&mut ids, &mut index, src);
        let v = intern(&mut ids, &mut index, dst);
        raw.push((u, v, weight));
        if !directed {
            raw.push((v, u, weight));
        }
    }

    if raw.is_empty() {
        return Err(Error::data(format!(
            "{}: empty graph (no usable edges)",
            path.display()
        )));
    }

    let n = ids.len();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (u, v, w) in &raw {
        rows[*u as usize].push((*v, *w));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    let mut merged = 0usize;
    for row in &mut rows {
        row.sort_by_key(|&(c, _)| c);
        let mut last: Option<u32> = None;
        for &(c, w) in row.iter() {
            if last == Some(c) {
                *weights.last_mut().expect("entry exists") += w;
                merged += 1;
            } else {
                targets.push(c);
                weights.push(w);
                last = Some(c);
            }
        }
        offsets.push(targets.len());
    }

    let graph = Graph {
        directed,
        offsets,
        targets,
        weights,
        ids,
        index,
    };
    let stats = LoadStats {
        n_nodes: n,
        edge_lines,
        self_loops_dropped: self_loops,
        duplicates_merged: merged,
        stored_arcs: graph.n_arcs(),
        stored_edges: graph.n_edges(),
    };
    Ok((graph, stats))
}

fn intern(ids: &mut Vec<String>, index: &mut HashMap<String, u32>, id: &str) -> u32 {
    if let Some(&i) = index.get(id) {
        return i;
    }
    let i = ids.len() as u32;
    ids.push(id.to_string());
    index.insert(id.to_string(), i);
    i
}

/// Writes the graph as "src dst weight" lines using external IDs.
/// Undirected edges are written once (smaller index first); reloading the
/// output reproduces the graph up to internal index order.
pub fn write_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (u, v, w) in graph.arcs() {
        if !graph.directed && v < u {
            continue;
        }
        writeln!(out, "{} {} {}", graph.node_id(u as usize), graph.node_id(v as usize), w)
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
