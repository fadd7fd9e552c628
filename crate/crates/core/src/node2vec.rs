//! node2vec: second-order biased random walks fed into skip-gram with
//! negative sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_alias_table, AliasTable, Graph};
use crate::seeds::derive_seed;
use crate::sgns::{
    train_single_pair, LrSchedule, NegativeTable, PairScratch, ParamStore, Progress, TrainMode,
    NEGATIVE_POWER, NEGATIVE_TABLE_SIZE,
};

#[derive(Debug, Clone)]
pub struct Node2vecParams {
    /// Embedding dimension.
    pub d: usize,
    /// Return parameter: weight 1/p for stepping back to the previous node.
    pub p: f64,
    /// In-out parameter: weight 1/q for leaving the previous neighborhood.
    pub q: f64,
    /// Walks started per node.
    pub num_walks: usize,
    /// Steps per walk (walk holds walk_len+1 nodes).
    pub walk_len: usize,
    /// Context window radius for skip-gram pairs.
    pub window: usize,
    /// Negative samples per pair.
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for Node2vecParams {
    fn default() -> Self {
        Node2vecParams {
            d: 128,
            p: 1.0,
            q: 1.0,
            num_walks: 10,
            walk_len: 80,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 0,
        }
    }
}

impl Node2vecParams {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::data("node2vec: d must be at least 1"));
        }
        if !(self.p > 0.0 && self.p.is_finite() && self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::data("node2vec: p and q must be positive"));
        }
        for (name, v) in [
            ("num_walks", self.num_walks),
            ("walk_len", self.walk_len),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
        ] {
            if v < 1 {
                return Err(Error::data(format!("node2vec: {name} must be at least 1")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::data("node2vec: lr must be positive"));
        }
        Ok(())
    }
}

/// Random-walk corpus: node-index sequences over a known node universe.
#[derive(Debug, Clone)]
pub struct WalkCorpus {
    walks: Vec<Vec<u32>>,
    n_nodes: usize,
}

impl WalkCorpus {
    pub fn new(walks: Vec<Vec<u32>>, n_nodes: usize) -> Result<Self> {
        for w in &walks {
            if w.iter().any(|&v| v as usize >= n_nodes) {
                return Err(Error::data("walk corpus: node index out of range"));
            }
        }
        Ok(WalkCorpus { walks, n_nodes })
    }

    pub fn walks(&self) -> &[Vec<u32>] {
        &self.walks
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }
}

const SALT_WALK: u64 = 1;
const SALT_SHUFFLE: u64 = 2;
const SALT_INIT: u64 = 3;
const SALT_TRAIN: u64 = 4;

/// Arc-level alias tables are only precomputed below these limits; the
/// entry budget guards against hub-heavy graphs where the table count is
/// modest but total entries (sum over arcs of the head's degree) explode.
const MAX_EDGES_FOR_ARC_TABLES: usize = 1_000_000;
const MAX_ARC_TABLE_ENTRIES: usize = 20_000_000;

/// Walk stepping machinery: first-order tables per node, and optionally a
/// second-order alias table per arc.
struct StepSampler<'g> {
    graph: &'g Graph,
    p: f64,
    q: f64,
    node_tables: Vec<Option<AliasTable>>,
    /// Indexed by arc position; None when the arc's head is a sink
    /// (those entries are never consulted).
    arc_tables: Option<Vec<Option<AliasTable>>>,
    deg_prefix: Vec<usize>,
}

impl<'g> StepSampler<'g> {
    fn new(graph: &'g Graph, p: f64, q: f64, precompute_arcs: bool) -> Self {
        let n = graph.n_nodes();
        let node_tables: Vec<Option<AliasTable>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let (_, w) = graph.neighbors(u);
                if w.is_empty() {
                    None
                } else {
                    Some(build_alias_table(w).expect("positive edge weights"))
                }
            })
            .collect();

        let mut deg_prefix = Vec::with_capacity(n + 1);
        deg_prefix.push(0);
        for u in 0..n {
            deg_prefix.push(deg_prefix[u] + graph.out_degree(u));
        }

        let arc_tables = if precompute_arcs {
            let tables: Vec<Vec<Option<AliasTable>>> = (0..n)
                .into_par_iter()
                .map(|t| {
                    let (targets, _) = graph.neighbors(t);
                    let mut buf = Vec::new();
                    targets
                        .iter()
                        .map(|&v| {
                            if graph.out_degree(v as usize) == 0 {
                                return None;
                            }
                            bias_weights(graph, p, q, t as u32, v as usize, &mut buf);
                            Some(build_alias_table(&buf).expect("positive biased weights"))
                        })
                        .collect()
                })
                .collect();
            Some(tables.into_iter().flatten().collect())
        } else {
            None
        };

        StepSampler {
            graph,
            p,
            q,
            node_tables,
            arc_tables,
            deg_prefix,
        }
    }

    /// First-order weighted step out of `cur`; None at a sink.
    fn first_step<R: Rng + ?Sized>(&self, cur: usize, rng: &mut R) -> Option<u32> {
        let table = self.node_tables[cur].as_ref()?;
        Some(self.graph.neighbors(cur).0[table.sample(rng)])
    }

    /// Second-order biased step out of `cur` having arrived from `prev`;
    /// None at a sink.
    fn biased_step<R: Rng + ?Sized>(&self, prev: u32, cur: usize, rng: &mut R) -> Option<u32> {
        let (targets, _) = self.graph.neighbors(cur);
        if targets.is_empty() {
            return None;
        }
        if let Some(tables) = &self.arc_tables {
            let pos = self.graph.neighbors(prev as usize).0
                .binary_search(&(cur as u32))
                .expect("walk arrived over an existing arc");
            let table = tables[self.deg_prefix[prev as usize] + pos]
                .as_ref()
                .expect("non-sink head has a table");
            return Some(targets[table.sample(rng)]);
        }
        let mut weights = Vec::with_capacity(targets.len());
        bias_weights(self.graph, self.p, self.q, prev, cur, &mut weights);
        let total: f64 = weights.iter().sum();
        let r = rng.gen::<f64>() * total;
        let mut cum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            cum += w;
            if r < cum {
                return Some(targets[i]);
            }
        }
        Some(*targets.last().expect("non-empty"))
    }
}

/// Unnormalized next-step weights at `cur` given the previous node:
/// w(cur,x) scaled by 1/p when x is the previous node, 1 when x neighbors
/// the previous node, 1/q otherwise.
fn bias_weights(graph: &Graph, p: f64, q: f64, prev: u32, cur: usize, out: &mut Vec<f64>) {
    let (targets, weights) = graph.neighbors(cur);
    out.clear();
    for (&x, &w) in targets.iter().zip(weights) {
        let factor = if x == prev {
            1.0 / p
        } else if graph.has_edge(prev as usize, x) {
            1.0
        } else {
            1.0 / q
        };
        out.push(w * factor);
    }
}

/// Generates `num_walks` biased walks per node. Each round visits start
/// nodes in a freshly shuffled order, and each walk draws from its own
/// (seed, node, round)-derived generator, so the corpus is deterministic
/// regardless of thread count. Walks that hit a sink teleport to a
/// uniformly random node and continue first-order.
pub fn generate_walks(graph: &Graph, params: &Node2vecParams) -> Result<WalkCorpus> {
    params.validate()?;
    let precompute = arc_tables_feasible(graph);
    Ok(generate_walks_impl(graph, params, precompute))
}

fn arc_tables_feasible(graph: &Graph) -> bool {
    if graph.n_edges() > MAX_EDGES_FOR_ARC_TABLES {
        return false;
    }
    let n = graph.n_nodes();
    let mut in_deg = vec![0usize; n];
    for (_, v, _) in graph.arcs() {
        in_deg[v as usize] += 1;
    }
    let entries: usize = (0..n).map(|v| in_deg[v] * graph.out_degree(v)).sum();
    entries <= MAX_ARC_TABLE_ENTRIES
}

fn generate_walks_impl(graph: &Graph, params: &Node2vecParams, precompute: bool) -> WalkCorpus {
    let n = graph.n_nodes();
    let sampler = StepSampler::new(graph, params.p, params.q, precompute);
    let mut walks: Vec<Vec<u32>> = Vec::with_capacity(n * params.num_walks);
    for round in 0..params.num_walks {
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[SALT_SHUFFLE, round as u64]));
        order.shuffle(&mut shuffle_rng);
        let round_walks: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&start| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    params.seed,
                    &[SALT_WALK, start as u64, round as u64],
                ));
                walk_from(graph, &sampler, start, params.walk_len, &mut rng)
            })
            .collect();
        walks.extend(round_walks);
    }
    WalkCorpus { walks, n_nodes: n }
}

fn walk_from<R: Rng + ?Sized>(
    graph: &Graph,
    sampler: &StepSampler,
    start: u32,
    walk_len: usize,
    rng: &mut R,
) -> Vec<u32> {
    let mut walk = Vec::with_capacity(walk_len + 1);
    walk.push(start);
    let mut prev: Option<u32> = None;
    let mut cur = start;
    for _ in 0..walk_len {
        let next = match prev {
            Some(t) => sampler.biased_step(t, cur as usize, rng),
            None => sampler.first_step(cur as usize, rng),
        };
        match next {
            Some(x) => {
                prev = Some(cur);
                cur = x;
            }
            None => {
                // sink: teleport and restart first-order
                prev = None;
                cur = rng.gen_range(0..graph.n_nodes()) as u32;
            }
        }
        walk.push(cur);
    }
    walk
}

/// Trains skip-gram with negative sampling over the corpus and returns
/// the input vectors. Negatives follow the corpus unigram distribution
/// raised to 0.75; the learning rate decays linearly to 1% over all
/// planned pairs.
pub fn train_sgns(
    corpus: &WalkCorpus,
    params: &Node2vecParams,
    mode: TrainMode,
) -> Result<EmbeddingMatrix> {
    params.validate()?;
    if corpus.is_empty() {
        return Err(Error::data("sgns: empty walk corpus"));
    }
    let n = corpus.n_nodes();
    let mut counts = vec![0.0f64; n];
    for walk in corpus.walks() {
        for &v in walk {
            counts[v as usize] += 1.0;
        }
    }
    let table = NegativeTable::new(&counts, NEGATIVE_POWER, NEGATIVE_TABLE_SIZE)?;

    let pairs_per_epoch: u64 = corpus
        .walks()
        .iter()
        .map(|w| pairs_in_walk(w.len(), params.window))
        .sum();
    let schedule = LrSchedule::new(params.lr, pairs_per_epoch * params.epochs as u64);

    let input = ParamStore::uniform_init(
        n,
        params.d,
        0.5 / params.d as f64,
        derive_seed(params.seed, &[SALT_INIT]),
    );
    let output = ParamStore::zeros(n, params.d);

    match mode {
        TrainMode::Deterministic => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[SALT_TRAIN]));
            let mut scratch = PairScratch::new(params.d);
            let mut negs = Vec::with_capacity(params.negatives);
            let mut step: u64 = 0;
            for _ in 0..params.epochs {
                for walk in corpus.walks() {
                    train_walk(
                        walk, params, &input, &output, &table, &schedule, &mut step, &mut rng,
                        &mut scratch, &mut negs,
                    );
                }
            }
        }
        TrainMode::Parallel => {
            let progress = Progress::new();
            let chunk = (corpus.len() / (rayon::current_num_threads() * 8)).max(1);
            for epoch in 0..params.epochs {
                corpus
                    .walks()
                    .par_chunks(chunk)
                    .enumerate()
                    .for_each(|(ci, walks)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            params.seed,
                            &[SALT_TRAIN, epoch as u64, ci as u64],
                        ));
                        let mut scratch = PairScratch::new(params.d);
                        let mut negs = Vec::with_capacity(params.negatives);
                        for walk in walks {
                            let mut step = progress.claim(pairs_in_walk(walk.len(), params.window));
                            train_walk(
                                walk, params, &input, &output, &table, &schedule, &mut step,
                                &mut rng, &mut scratch, &mut negs,
                            );
                        }
                    });
            }
        }
    }

    let dense = input.to_dense();
    if !dense.is_finite() {
        return Err(Error::numeric("sgns: training produced non-finite vectors"));
    }
    Ok(EmbeddingMatrix::from_dense(dense))
}

fn pairs_in_walk(len: usize, window: usize) -> u64 {
    let mut pairs = 0u64;
    for i in 0..len {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(len - 1);
        pairs += (hi - lo) as u64;
    }
    pairs
}

#[allow(clippy::too_many_arguments)]
fn train_walk(
    walk: &[u32],
    params: &Node2vecParams,
    input: &ParamStore,
    output: &ParamStore,
    table: &NegativeTable,
    schedule: &LrSchedule,
    step: &mut u64,
    rng: &mut ChaCha8Rng,
    scratch: &mut PairScratch,
    negs: &mut Vec<u32>,
) {
    for i in 0..walk.len() {
        let lo = i.saturating_sub(params.window);
        let hi = (i + params.window).min(walk.len() - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            negs.clear();
            for _ in 0..params.negatives {
                negs.push(table.sample(rng));
            }
            let lr = schedule.at(*step);
            *step += 1;
            train_single_pair(
                input,
                output,
                walk[i] as usize,
                walk[j] as usize,
                negs,
                lr,
                scratch,
            );
        }
    }
}

/// Whole-graph node2vec: walks then SGNS.
pub fn node2vec_embed(
    graph: &Graph,
    params: &Node2vecParams,
    mode: TrainMode,
) -> Result<EmbeddingMatrix> {
    let corpus = generate_walks(graph, params)?;
    train_sgns(&corpus, params, mode)
}
