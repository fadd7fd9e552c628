//! Node embedding container and its on-disk CSV form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numerics::DenseMatrix;

/// One d-dimensional vector per node, row index = node index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: DenseMatrix,
}

impl EmbeddingMatrix {
    pub fn from_dense(data: DenseMatrix) -> Self {
        EmbeddingMatrix { data }
    }

    pub fn n_nodes(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn vector(&self, node: usize) -> &[f64] {
        self.data.row(node)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.data
    }

    /// Column-concatenation of per-method blocks.
    pub fn hconcat(parts: &[&EmbeddingMatrix]) -> Result<Self> {
        let mats: Vec<&DenseMatrix> = parts.iter().map(|p| &p.data).collect();
        Ok(EmbeddingMatrix {
            data: DenseMatrix::hconcat(&mats)?,
        })
    }

    /// Writes `node_id,dim_0,...` rows in node-index order, values rounded
    /// to f32. Shortest-roundtrip formatting keeps reruns byte-identical.
    pub fn write_csv(&self, graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if graph.n_nodes() != self.n_nodes() {
            return Err(Error::data(format!(
                "embedding has {} rows but graph has {} nodes",
                self.n_nodes(),
                graph.n_nodes()
            )));
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = String::from("node_id");
        for j in 0..self.dim() {
            header.push_str(&format!(",dim_{j}"));
        }
        writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
        let mut line = String::new();
        for node in 0..self.n_nodes() {
            line.clear();
            line.push_str(graph.node_id(node));
            for &v in self.vector(node) {
                line.push(',');
                line.push_str(&format!("{}", v as f32));
            }
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV written by `write_csv`. Rows may appear in any order;
    /// every graph node must be present exactly once.
    pub fn read_csv(graph: &Graph, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let Some((_, header)) = lines.next() else {
            return Err(Error::data(format!("{}: empty file", path.display())));
        };
        let header = header.map_err(|e| Error::io(path, e))?;
        let dim = header.split(',').count().saturating_sub(1);
        if dim == 0 || !header.starts_with("node_id") {
            return Err(Error::parse(path, 1, "expected header \"node_id,dim_0,...\""));
        }

        let n = graph.n_nodes();
        let mut data = DenseMatrix::zeros(n, dim);
        let mut seen = vec![false; n];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or("");
            let Some(node) = graph.node_index(id) else {
                return Err(Error::parse(path, lineno, format!("unknown node ID {id:?}")));
            };
            let node = node as usize;
            if seen[node] {
                return Err(Error::parse(path, lineno, format!("duplicate node ID {id:?}")));
            }
            seen[node] = true;
            let row = data.row_mut(node);
            let mut count = 0usize;
            for (j, field) in fields.enumerate() {
                if j >= dim {
                    return Err(Error::parse(path, lineno, "too many columns"));
                }
                let v: f64 = field
                    .parse::<f32>()
                    .map(f64::from)
                    .map_err(|_| Error::parse(path, lineno, format!("bad number {field:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(path, lineno, "non-finite value"));
                }
                row[j] = v;
                count += 1;
            }
            if count != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} values, found {count}"),
                ));
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::data(format!(
                "{}: no row for node {:?}",
                path.display(),
                graph.node_id(missing)
            )));
        }
        Ok(EmbeddingMatrix { data })
    }
}
