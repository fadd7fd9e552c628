//! File formats: embedding CSV, the append-only score log, and small
//! write helpers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use netemb::eval::ScoreReport;
use netemb::graph::Graph;
use netemb::numerics::{format_sig, DenseMatrix};
use netemb::{EmbeddingMatrix, Error, Result};

pub const SCORES_FILE: &str = "scores.csv";
pub const SCORES_HEADER: &str = "dataset,method,classifier,split,macro_f1,micro_f1,seed";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Write any CSV-ish text file: header line plus rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
    for row in rows {
        writeln!(out, "{row}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Embedding as CSV: `node_id,dim_0,...`, one row per node in graph
/// index order, values stored at 32-bit precision.
pub fn write_embedding(path: &Path, graph: &Graph, emb: &EmbeddingMatrix) -> Result<()> {
    let mut out = create(path)?;
    let header: Vec<String> = std::iter::once("node_id".to_string())
        .chain((0..emb.dim()).map(|c| format!("dim_{c}")))
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
    for u in 0..emb.n_nodes() {
        let mut row = String::from(graph.node_id(u));
        for &v in emb.vector(u) {
            row.push(',');
            row.push_str(&format!("{}", v as f32));
        }
        writeln!(out, "{row}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read an embedding CSV back, ordering rows by the graph's node index.
/// Every graph node must appear exactly once.
pub fn read_embedding(path: &Path, graph: &Graph) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::data(format!("{}: empty embedding file", path.display())))?;
    let dim = header.split(',').count().saturating_sub(1);
    if dim == 0 {
        return Err(Error::data(format!(
            "{}: embedding header has no dimension columns",
            path.display()
        )));
    }
    let n = graph.n_nodes();
    let mut data = vec![f64::NAN; n * dim];
    let mut seen = vec![false; n];
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("");
        let Some(u) = graph.node_index(id) else {
            return Err(Error::parse(path, lineno, format!("unknown node ID {id:?}")));
        };
        let u = u as usize;
        if seen[u] {
            return Err(Error::parse(path, lineno, format!("duplicate node ID {id:?}")));
        }
        seen[u] = true;
        let mut count = 0;
        for (c, tok) in fields.enumerate() {
            if c >= dim {
                return Err(Error::parse(path, lineno, "too many columns"));
            }
            data[u * dim + c] = tok
                .parse::<f32>()
                .map_err(|_| Error::parse(path, lineno, format!("bad value {tok:?}")))?
                as f64;
            count += 1;
        }
        if count != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} values, got {count}"),
            ));
        }
    }
    if let Some(u) = seen.iter().position(|&s| !s) {
        return Err(Error::data(format!(
            "{}: no embedding row for node {:?}",
            path.display(),
            graph.node_id(u)
        )));
    }
    Ok(EmbeddingMatrix::from_dense(DenseMatrix::from_vec(n, dim, data)?))
}

/// One line of the score log.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub dataset: String,
    pub method: String,
    pub classifier: String,
    pub split: String,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub seed: u64,
}

impl ScoreRow {
    pub fn new(
        dataset: &str,
        method: &str,
        classifier: &str,
        split: &str,
        report: &ScoreReport,
        seed: u64,
    ) -> ScoreRow {
        ScoreRow {
            dataset: dataset.to_string(),
            method: method.to_string(),
            classifier: classifier.to_string(),
            split: split.to_string(),
            macro_f1: report.macro_f1,
            micro_f1: report.micro_f1,
            seed,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.dataset,
            self.method,
            self.classifier,
            self.split,
            format_sig(self.macro_f1, 6),
            format_sig(self.micro_f1, 6),
            self.seed
        )
    }
}

/// Append one row to `<dir>/scores.csv`, writing the header first when
/// the file is new.
pub fn append_score(dir: &Path, row: &ScoreRow) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(SCORES_FILE);
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    let mut out = BufWriter::new(file);
    if fresh {
        writeln!(out, "{SCORES_HEADER}").map_err(|e| Error::io(&path, e))?;
    }
    writeln!(out, "{}", row.render()).map_err(|e| Error::io(&path, e))?;
    out.flush().map_err(|e| Error::io(&path, e))
}

/// Parse a score log produced by `append_score`.
pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 1 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse(path, lineno, "expected 7 columns"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, lineno, format!("bad number {s:?}")))
        };
        rows.push(ScoreRow {
            dataset: f[0].to_string(),
            method: f[1].to_string(),
            classifier: f[2].to_string(),
            split: f[3].to_string(),
            macro_f1: num(f[4])?,
            micro_f1: num(f[5])?,
            seed: f[6]
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad seed {:?}", f[6])))?,
        });
    }
    Ok(rows)
}
