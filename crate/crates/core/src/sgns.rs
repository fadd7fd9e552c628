//! Skip-gram negative sampling engine shared by the walk-based and
//! edge-sampling embedding methods.
//!
//! Parameters live in atomic cells so the same code path serves both
//! execution modes: in `Deterministic` mode one thread updates them in
//! program order (bit-reproducible); in `Parallel` mode threads update
//! lock-free and may interleave (the classic hogwild trade: rare lost
//! updates, no locks, results vary run to run).

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Execution mode for SGD-style trainers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Single-threaded updates in a fixed order; same seed, same bytes.
    Deterministic,
    /// Lock-free parallel updates; not reproducible run to run.
    Parallel,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Loss of one (center, context, negatives) event:
/// -log sigmoid(u.v) - sum_n log sigmoid(-u.v_n). The trainer descends
/// this; tests difference it against the applied updates.
pub(crate) fn pair_loss(u: &[f64], v: &[f64], negs: &[&[f64]]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut loss = softplus(-dot(u, v));
    for n in negs {
        loss += softplus(dot(u, n));
    }
    loss
}

/// Flat parameter block of row vectors stored as atomic bits.
pub(crate) struct ParamStore {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl ParamStore {
    pub fn uniform_init(rows: usize, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * dim)
            .map(|_| AtomicU64::new(rng.gen_range(-scale..scale).to_bits()))
            .collect();
        ParamStore { data, dim }
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        let data = (0..rows * dim)
            .map(|_| AtomicU64::new(0.0f64.to_bits()))
            .collect();
        ParamStore { data, dim }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[AtomicU64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn read_row(&self, i: usize, buf: &mut [f64]) {
        for (dst, cell) in buf.iter_mut().zip(self.row(i)) {
            *dst = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    /// row_i += g * src. Load/store rather than CAS: a concurrent writer
    /// may be overwritten, which hogwild tolerates by design.
    pub fn add_scaled(&self, i: usize, src: &[f64], g: f64) {
        for (cell, &s) in self.row(i).iter().zip(src) {
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((old + g * s).to_bits(), Ordering::Relaxed);
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let rows = self.rows();
        let mut out = DenseMatrix::zeros(rows, self.dim);
        let mut buf = vec![0.0; self.dim];
        for i in 0..rows {
            self.read_row(i, &mut buf);
            out.row_mut(i).copy_from_slice(&buf);
        }
        out
    }
}

/// Scratch buffers reused across pair updates.
pub(crate) struct PairScratch {
    u: Vec<f64>,
    v: Vec<f64>,
    acc: Vec<f64>,
}

impl PairScratch {
    pub fn new(dim: usize) -> Self {
        PairScratch {
            u: vec![0.0; dim],
            v: vec![0.0; dim],
            acc: vec![0.0; dim],
        }
    }
}

/// One simultaneous gradient step on `pair_loss` at the current point:
/// the center row of `input` against the context row of `output` plus
/// the given negative rows. A negative equal to the context is skipped.
/// With `input` and `output` the same store, both endpoint roles update
/// within the same vector space (first-order proximity training).
pub(crate) fn train_single_pair(
    input: &ParamStore,
    output: &ParamStore,
    center: usize,
    context: usize,
    negatives: &[u32],
    lr: f64,
    scratch: &mut PairScratch,
) {
    let dim = input.dim();
    input.read_row(center, &mut scratch.u);
    scratch.acc[..dim].fill(0.0);

    output.read_row(context, &mut scratch.v);
    let dot: f64 = scratch.u.iter().zip(&scratch.v).map(|(a, b)| a * b).sum();
    let g = (1.0 - sigmoid(dot)) * lr;
    for (a, &vv) in scratch.acc.iter_mut().zip(&scratch.v) {
        *a += g * vv;
    }
    output.add_scaled(context, &scratch.u, g);

    for &n in negatives {
        let n = n as usize;
        if n == context {
            continue;
        }
        output.read_row(n, &mut scratch.v);
        let dot: f64 = scratch.u.iter().zip(&scratch.v).map(|(a, b)| a * b).sum();
        let g = -sigmoid(dot) * lr;
        for (a, &vv) in scratch.acc.iter_mut().zip(&scratch.v) {
            *a += g * vv;
        }
        output.add_scaled(n, &scratch.u, g);
    }

    input.add_scaled(center, &scratch.acc, 1.0);
}

/// Linear decay from lr to lr/100 over the planned number of updates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LrSchedule {
    lr0: f64,
    total: u64,
}

impl LrSchedule {
    pub fn new(lr0: f64, total: u64) -> Self {
        LrSchedule {
            lr0,
            total: total.max(1),
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        let progress = step as f64 / self.total as f64;
        self.lr0 * (1.0 - 0.99 * progress).max(0.01)
    }
}

/// Shared progress counter for learning-rate decay across threads.
pub(crate) struct Progress(AtomicU64);

impl Progress {
    pub fn new() -> Self {
        Progress(AtomicU64::new(0))
    }

    /// Claims `n` steps, returning the index of the first.
    pub fn claim(&self, n: u64) -> u64 {
        self.0.fetch_add(n, Ordering::Relaxed)
    }
}

/// Sampling table over nodes with mass proportional to weight^power,
/// discretized to a fixed number of slots by largest-remainder
/// apportionment (zero-weight nodes get no slots).
pub(crate) struct NegativeTable {
    table: Vec<u32>,
}

pub(crate) const NEGATIVE_TABLE_SIZE: usize = 1_000_000;
pub(crate) const NEGATIVE_POWER: f64 = 0.75;

impl NegativeTable {
    pub fn new(weights: &[f64], power: f64, size: usize) -> Result<Self> {
        if weights.is_empty() || size == 0 {
            return Err(Error::data("negative table: empty input"));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::data("negative table: negative or non-finite weight"));
        }
        let powered: Vec<f64> = weights.iter().map(|&w| w.powf(power)).collect();
        let total: f64 = powered.iter().sum();
        if total <= 0.0 {
            return Err(Error::data("negative table: all weights are zero"));
        }

        let mut slots: Vec<usize> = Vec::with_capacity(powered.len());
        let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(powered.len());
        let mut assigned = 0usize;
        for (i, &p) in powered.iter().enumerate() {
            let exact = p / total * size as f64;
            let base = exact.floor() as usize;
            slots.push(base);
            assigned += base;
            if p > 0.0 {
                remainders.push((exact - base as f64, i));
            }
        }
        // Ties broken by lower index for determinism.
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().take(size - assigned) {
            slots[i] += 1;
        }

        let mut table = Vec::with_capacity(size);
        for (i, &s) in slots.iter().enumerate() {
            table.extend(std::iter::repeat(i as u32).take(s));
        }
        debug_assert_eq!(table.len(), size);
        Ok(NegativeTable { table })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table[rng.gen_range(0..self.table.len())]
    }
}

/// Applies one (center, context, 2 negatives) update with a tiny step and
/// treats the parameter delta as -lr * gradient. Returns the max relative
/// error against central finite differences of the pair loss.
#[doc(hidden)]
pub fn sgns_pair_gradient_check() -> Result<f64> {
    let dim = 5;
    let input = ParamStore::uniform_init(1, dim, 0.8, 21);
    let output = ParamStore::uniform_init(3, dim, 0.8, 22);
    let lr = 1e-6;

    let read_all = |inp: &ParamStore, out: &ParamStore| {
        let mut x = vec![0.0; 4 * dim];
        inp.read_row(0, &mut x[0..dim]);
        out.read_row(0, &mut x[dim..2 * dim]);
        out.read_row(1, &mut x[2 * dim..3 * dim]);
        out.read_row(2, &mut x[3 * dim..4 * dim]);
        x
    };
    let before = read_all(&input, &output);
    let mut scratch = PairScratch::new(dim);
    train_single_pair(&input, &output, 0, 0, &[1, 2], lr, &mut scratch);
    let after = read_all(&input, &output);
    let grad: Vec<f64> = before
        .iter()
        .zip(&after)
        .map(|(b, a)| (b - a) / lr)
        .collect();
    let f = |x: &[f64]| {
        pair_loss(
            &x[0..dim],
            &x[dim..2 * dim],
            &[&x[2 * dim..3 * dim], &x[3 * dim..4 * dim]],
        )
    };
    crate::numerics::max_relative_error(f, &before, &grad, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_extremes_stay_finite() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0) > 0.999);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-3);
        assert!(softplus(1000.0).is_finite());
    }

    #[test]
    fn negative_table_slot_allocation_exact() {
        let t = NegativeTable::new(&[1.0, 1.0, 2.0], 1.0, 8).unwrap();
        let counts = slot_counts(&t, 3);
        assert_eq!(counts, vec![2, 2, 4]);
    }

    #[test]
    fn negative_table_applies_power() {
        // 16^0.75 = 8, 1^0.75 = 1
        let t = NegativeTable::new(&[16.0, 1.0], 0.75, 9).unwrap();
        assert_eq!(slot_counts(&t, 2), vec![8, 1]);
    }

    #[test]
    fn zero_weight_nodes_never_sampled() {
        let t = NegativeTable::new(&[0.0, 3.0, 0.0], 0.75, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng), 1);
        }
    }

    #[test]
    fn negative_table_sampling_matches_distribution() {
        // chi-square 99th percentile at 2 dof = 9.21
        let t = NegativeTable::new(&[1.0, 1.0, 2.0], 1.0, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0f64; 3];
        let draws = 100_000;
        for _ in 0..draws {
            counts[t.sample(&mut rng) as usize] += 1.0;
        }
        let expected = [0.25, 0.25, 0.5].map(|p| p * draws as f64);
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        assert!(chi2 <= 9.21, "chi2 = {chi2}");
    }

    #[test]
    fn param_store_roundtrip() {
        let s = ParamStore::uniform_init(3, 4, 0.5, 1);
        let mut buf = vec![0.0; 4];
        s.read_row(1, &mut buf);
        s.add_scaled(1, &[1.0, 1.0, 1.0, 1.0], 0.25);
        let mut buf2 = vec![0.0; 4];
        s.read_row(1, &mut buf2);
        for (a, b) in buf.iter().zip(&buf2) {
            assert!((b - a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_update_matches_finite_difference_gradient() {
        // applied update = -lr * grad, so grad = (before - after) / lr
        let err = sgns_pair_gradient_check().unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn negative_colliding_with_context_is_skipped() {
        let dim = 3;
        let input = ParamStore::uniform_init(1, dim, 0.5, 7);
        let output = ParamStore::uniform_init(1, dim, 0.5, 8);
        let mut with_collision = vec![0.0; dim];
        let mut scratch = PairScratch::new(dim);

        // run once with the colliding negative...
        let snap_in = input.to_dense();
        let snap_out = output.to_dense();
        train_single_pair(&input, &output, 0, 0, &[0], 0.1, &mut scratch);
        output.read_row(0, &mut with_collision);

        // ...and once with no negatives from the same state
        let input2 = ParamStore::uniform_init(1, dim, 0.5, 7);
        let output2 = ParamStore::uniform_init(1, dim, 0.5, 8);
        assert_eq!(input2.to_dense().data(), snap_in.data());
        assert_eq!(output2.to_dense().data(), snap_out.data());
        train_single_pair(&input2, &output2, 0, 0, &[], 0.1, &mut scratch);
        let mut without = vec![0.0; dim];
        output2.read_row(0, &mut without);

        assert_eq!(with_collision, without);
    }

    #[test]
    fn lr_schedule_decays_to_one_percent() {
        let s = LrSchedule::new(0.05, 1000);
        assert!((s.at(0) - 0.05).abs() < 1e-15);
        assert!((s.at(500) - 0.05 * 0.505).abs() < 1e-12);
        assert!((s.at(1000) - 0.0005).abs() < 1e-12);
        assert!((s.at(5000) - 0.0005).abs() < 1e-12);
    }

    fn slot_counts(t: &NegativeTable, n: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n];
        for &i in &t.table {
            counts[i as usize] += 1;
        }
        counts
    }
}
