//! LINE: first- and second-order proximity embeddings trained by
//! weighted edge sampling with negative sampling.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_alias_table, Graph};
use crate::numerics::DenseMatrix;
use crate::seeds::derive_seed;
use crate::sgns::{
    train_single_pair, LrSchedule, NegativeTable, PairScratch, ParamStore, Progress, TrainMode,
    NEGATIVE_POWER, NEGATIVE_TABLE_SIZE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineOrder {
    /// Symmetric objective over endpoint vectors in one space.
    First,
    /// Directed objective against separate context vectors.
    Second,
    /// Both objectives trained separately, halves normalized and
    /// concatenated (first order gets any odd remainder dimension).
    Both,
}

#[derive(Debug, Clone)]
pub struct LineParams {
    pub d: usize,
    pub order: LineOrder,
    /// Total edge draws across training.
    pub samples: usize,
    pub negatives: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for LineParams {
    fn default() -> Self {
        LineParams {
            d: 128,
            order: LineOrder::Both,
            samples: 100_000,
            negatives: 5,
            lr: 0.025,
            seed: 0,
        }
    }
}

impl LineParams {
    /// Defaults with the sample count scaled to the graph: 100 draws per
    /// stored edge.
    pub fn defaults_for(graph: &Graph) -> Self {
        LineParams {
            samples: 100 * graph.n_edges(),
            ..LineParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::data("line: d must be at least 1"));
        }
        if self.order == LineOrder::Both && self.d < 2 {
            return Err(Error::data("line: order=both requires d >= 2"));
        }
        if self.samples < 1 || self.negatives < 1 {
            return Err(Error::data("line: samples and negatives must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::data("line: lr must be positive"));
        }
        Ok(())
    }
}

const SALT_INIT: u64 = 10;
const SALT_TRAIN: u64 = 11;
const TAG_FIRST: u64 = 1;
const TAG_SECOND: u64 = 2;

/// Dimensions of the (first, second) halves when order=both.
pub(crate) fn split_dims(d: usize) -> (usize, usize) {
    (d - d / 2, d / 2)
}

/// Arc endpoints and weights for edge sampling. With `add_reversed`,
/// every arc also appears flipped (first-order semantics on directed
/// graphs).
pub(crate) fn edge_pool(graph: &Graph, add_reversed: bool) -> (Vec<(u32, u32)>, Vec<f64>) {
    let mut ends = Vec::with_capacity(graph.n_arcs() * if add_reversed { 2 } else { 1 });
    let mut weights = Vec::with_capacity(ends.capacity());
    for (u, v, w) in graph.arcs() {
        ends.push((u, v));
        weights.push(w);
    }
    if add_reversed {
        for (u, v, w) in graph.arcs() {
            ends.push((v, u));
            weights.push(w);
        }
    }
    (ends, weights)
}

/// First-order wiring: one store plays center (row 0), context (row 1),
/// and negative (row 2). Returns the max relative error of one applied
/// update against finite differences of the pair loss.
#[doc(hidden)]
pub fn line_first_order_gradient_check() -> Result<f64> {
    let dim = 4;
    let store = ParamStore::uniform_init(3, dim, 0.8, 31);
    let lr = 1e-6;
    let read = |s: &ParamStore| {
        let mut x = vec![0.0; 3 * dim];
        for r in 0..3 {
            s.read_row(r, &mut x[r * dim..(r + 1) * dim]);
        }
        x
    };
    let before = read(&store);
    let mut scratch = PairScratch::new(dim);
    train_single_pair(&store, &store, 0, 1, &[2], lr, &mut scratch);
    let after = read(&store);
    let grad: Vec<f64> = before
        .iter()
        .zip(&after)
        .map(|(b, a)| (b - a) / lr)
        .collect();
    let f =
        |x: &[f64]| crate::sgns::pair_loss(&x[0..dim], &x[dim..2 * dim], &[&x[2 * dim..3 * dim]]);
    crate::numerics::max_relative_error(f, &before, &grad, 1e-6)
}

/// Second-order wiring: separate vertex and context stores, as the
/// directed objective trains them.
#[doc(hidden)]
pub fn line_second_order_gradient_check() -> Result<f64> {
    let dim = 4;
    let input = ParamStore::uniform_init(1, dim, 0.8, 32);
    let output = ParamStore::uniform_init(2, dim, 0.8, 33);
    let lr = 1e-6;
    let read = |inp: &ParamStore, out: &ParamStore| {
        let mut x = vec![0.0; 3 * dim];
        inp.read_row(0, &mut x[0..dim]);
        out.read_row(0, &mut x[dim..2 * dim]);
        out.read_row(1, &mut x[2 * dim..3 * dim]);
        x
    };
    let before = read(&input, &output);
    let mut scratch = PairScratch::new(dim);
    train_single_pair(&input, &output, 0, 0, &[1], lr, &mut scratch);
    let after = read(&input, &output);
    let grad: Vec<f64> = before
        .iter()
        .zip(&after)
        .map(|(b, a)| (b - a) / lr)
        .collect();
    let f =
        |x: &[f64]| crate::sgns::pair_loss(&x[0..dim], &x[dim..2 * dim], &[&x[2 * dim..3 * dim]]);
    crate::numerics::max_relative_error(f, &before, &grad, 1e-6)
}

/// LINE embedding of the whole graph.
pub fn line_embed(graph: &Graph, params: &LineParams, mode: TrainMode) -> Result<EmbeddingMatrix> {
    params.validate()?;
    if graph.n_arcs() == 0 {
        return Err(Error::data("line: graph has no edges"));
    }
    let dense = match params.order {
        LineOrder::First => train_order(graph, params.d, TAG_FIRST, params, mode)?,
        LineOrder::Second => train_order(graph, params.d, TAG_SECOND, params, mode)?,
        LineOrder::Both => {
            let (d1, d2) = split_dims(params.d);
            let mut first = train_order(graph, d1, TAG_FIRST, params, mode)?;
            let mut second = train_order(graph, d2, TAG_SECOND, params, mode)?;
            normalize_rows(&mut first);
            normalize_rows(&mut second);
            DenseMatrix::hconcat(&[&first, &second])?
        }
    };
    if !dense.is_finite() {
        return Err(Error::numeric("line: training produced non-finite vectors"));
    }
    Ok(EmbeddingMatrix::from_dense(dense))
}

fn train_order(
    graph: &Graph,
    d: usize,
    tag: u64,
    params: &LineParams,
    mode: TrainMode,
) -> Result<DenseMatrix> {
    let first_order = tag == TAG_FIRST;
    if first_order && graph.is_directed() {
        warn!("first-order proximity is an undirected notion; sampling both directions of every arc");
    }
    let (ends, weights) = edge_pool(graph, first_order && graph.is_directed());
    let edge_table = build_alias_table(&weights)?;

    let n = graph.n_nodes();
    let out_weight: Vec<f64> = (0..n).map(|u| graph.weighted_degree(u)).collect();
    let neg_table = NegativeTable::new(&out_weight, NEGATIVE_POWER, NEGATIVE_TABLE_SIZE)?;

    let input = ParamStore::uniform_init(
        n,
        d,
        0.5 / d as f64,
        derive_seed(params.seed, &[SALT_INIT, tag]),
    );
    let context = if first_order {
        None
    } else {
        Some(ParamStore::zeros(n, d))
    };
    let output: &ParamStore = context.as_ref().unwrap_or(&input);

    let schedule = LrSchedule::new(params.lr, params.samples as u64);
    match mode {
        TrainMode::Deterministic => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[SALT_TRAIN, tag]));
            let mut scratch = PairScratch::new(d);
            let mut negs = Vec::with_capacity(params.negatives);
            for s in 0..params.samples as u64 {
                let (i, j) = ends[edge_table.sample(&mut rng)];
                negs.clear();
                for _ in 0..params.negatives {
                    negs.push(neg_table.sample(&mut rng));
                }
                train_single_pair(
                    &input,
                    output,
                    i as usize,
                    j as usize,
                    &negs,
                    schedule.at(s),
                    &mut scratch,
                );
            }
        }
        TrainMode::Parallel => {
            let workers = rayon::current_num_threads() * 8;
            let chunk = (params.samples / workers).max(1);
            let ranges: Vec<(usize, usize)> = (0..params.samples)
                .step_by(chunk)
                .map(|lo| (lo, (lo + chunk).min(params.samples)))
                .collect();
            let progress = Progress::new();
            ranges.par_iter().enumerate().for_each(|(ci, &(lo, hi))| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    params.seed,
                    &[SALT_TRAIN, tag, ci as u64],
                ));
                let mut scratch = PairScratch::new(d);
                let mut negs = Vec::with_capacity(params.negatives);
                let base = progress.claim((hi - lo) as u64);
                for s in 0..(hi - lo) as u64 {
                    let (i, j) = ends[edge_table.sample(&mut rng)];
                    negs.clear();
                    for _ in 0..params.negatives {
                        negs.push(neg_table.sample(&mut rng));
                    }
                    train_single_pair(
                        &input,
                        output,
                        i as usize,
                        j as usize,
                        &negs,
                        schedule.at(base + s),
                        &mut scratch,
                    );
                }
            });
        }
    }
    Ok(input.to_dense())
}

fn normalize_rows(m: &mut DenseMatrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row {
                *v /= norm;
            }
        }
    }
}
