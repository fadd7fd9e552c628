//! Random hyperparameter search: sample embedding and classifier
//! settings, score each trial on the validation part, pick the best by
//! validation micro-F1, then retrain it and touch the test part exactly
//! once.

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classify::{ClassifierSpec, ForestParams, LogRegParams};
use crate::dngr::{dngr_embed, DngrParams};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::{evaluate_timed, DecisionRule, EvalOn, ScoreReport, Split};
use crate::graph::{Graph, LabelStore};
use crate::grarep::{grarep_embed, BetaMode, GraRepParams};
use crate::line::{line_embed, LineOrder, LineParams};
use crate::node2vec::{node2vec_embed, Node2vecParams};
use crate::numerics::format_sig;
use crate::seeds::derive_seed;
use crate::sgns::TrainMode;

const SALT_SAMPLE: u64 = 60;
const SALT_EMBED: u64 = 61;
const SALT_EVAL: u64 = 62;

/// Embedding method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Node2vec,
    Line,
    GraRep,
    Dngr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Node2vec => "node2vec",
            Method::Line => "line",
            Method::GraRep => "grarep",
            Method::Dngr => "dngr",
        }
    }

    pub const ALL: [Method; 4] = [Method::Node2vec, Method::Line, Method::GraRep, Method::Dngr];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node2vec" => Ok(Method::Node2vec),
            "line" => Ok(Method::Line),
            "grarep" => Ok(Method::GraRep),
            "dngr" => Ok(Method::Dngr),
            other => Err(Error::data(format!(
                "unknown method '{other}' (expected node2vec, line, grarep, or dngr)"
            ))),
        }
    }
}

/// Classifier selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    LogReg,
    Forest,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logreg",
            ClassifierKind::Forest => "forest",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ClassifierKind::LogReg),
            "forest" => Ok(ClassifierKind::Forest),
            other => Err(Error::data(format!(
                "unknown classifier '{other}' (expected logreg or forest)"
            ))),
        }
    }
}

/// A sampled or configured parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Str(String),
}

impl ParamValue {
    /// Stable text form used in CSV logs.
    pub fn render(&self) -> String {
        match self {
            ParamValue::Int(v) => v.to_string(),
            ParamValue::Real(v) => format_sig(*v, 6),
            ParamValue::Str(v) => v.clone(),
        }
    }

    fn as_f64(&self, name: &str) -> Result<f64> {
        match self {
            ParamValue::Int(v) => Ok(*v as f64),
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Str(_) => Err(Error::data(format!("parameter '{name}' must be numeric"))),
        }
    }

    /// Positive count; real values round to the nearest integer.
    fn as_count(&self, name: &str) -> Result<usize> {
        let v = match self {
            ParamValue::Int(v) => *v as f64,
            ParamValue::Real(v) => v.round(),
            ParamValue::Str(_) => {
                return Err(Error::data(format!("parameter '{name}' must be numeric")))
            }
        };
        if !(v >= 1.0 && v <= u32::MAX as f64) {
            return Err(Error::data(format!("parameter '{name}' must be a positive count")));
        }
        Ok(v as usize)
    }

    fn as_str(&self, name: &str) -> Result<&str> {
        match self {
            ParamValue::Str(v) => Ok(v),
            _ => Err(Error::data(format!("parameter '{name}' must be a string"))),
        }
    }
}

/// One parameter's sampling distribution. Integer and real ranges are
/// inclusive of both bounds; the log-uniform draw is uniform in the log
/// domain.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    UniformInt(i64, i64),
    UniformReal(f64, f64),
    LogUniform(f64, f64),
    Choice(Vec<ParamValue>),
}

impl ParamSpec {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            ParamSpec::UniformInt(lo, hi) if lo >= hi => Err(Error::data(format!(
                "space: '{name}' bounds must satisfy lo < hi (got {lo}, {hi})"
            ))),
            ParamSpec::UniformReal(lo, hi) | ParamSpec::LogUniform(lo, hi) if !(lo < hi) => {
                Err(Error::data(format!(
                    "space: '{name}' bounds must satisfy lo < hi (got {lo}, {hi})"
                )))
            }
            ParamSpec::LogUniform(lo, _) if *lo <= 0.0 => Err(Error::data(format!(
                "space: '{name}' log-uniform bounds must be positive"
            ))),
            ParamSpec::Choice(vs) if vs.is_empty() => {
                Err(Error::data(format!("space: '{name}' choice list is empty")))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            ParamSpec::UniformInt(lo, hi) => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            ParamSpec::UniformReal(lo, hi) => ParamValue::Real(rng.gen_range(*lo..=*hi)),
            ParamSpec::LogUniform(lo, hi) => {
                ParamValue::Real(rng.gen_range(lo.ln()..=hi.ln()).exp())
            }
            ParamSpec::Choice(vs) => vs[rng.gen_range(0..vs.len())].clone(),
        }
    }
}

/// The joint search space: embedding parameters and classifier
/// parameters, sampled independently per trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyperSpace {
    pub embedding: Vec<(String, ParamSpec)>,
    pub classifier: Vec<(String, ParamSpec)>,
}

impl HyperSpace {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (name, spec) in self.embedding.iter().chain(&self.classifier) {
            if !seen.insert(name.as_str()) {
                return Err(Error::data(format!("space: duplicate parameter '{name}'")));
            }
            spec.validate(name)?;
        }
        Ok(())
    }

    /// Replace or append one embedding-parameter spec.
    pub fn set_embedding(&mut self, name: &str, spec: ParamSpec) {
        Self::set(&mut self.embedding, name, spec);
    }

    /// Replace or append one classifier-parameter spec.
    pub fn set_classifier(&mut self, name: &str, spec: ParamSpec) {
        Self::set(&mut self.classifier, name, spec);
    }

    fn set(group: &mut Vec<(String, ParamSpec)>, name: &str, spec: ParamSpec) {
        match group.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = spec,
            None => group.push((name.to_string(), spec)),
        }
    }

    /// Default joint space for a method and classifier. Bounds that
    /// depend on graph scale (total edge-sample budgets) come from the
    /// graph.
    pub fn defaults(method: Method, classifier: ClassifierKind, graph: &Graph) -> HyperSpace {
        let choice_real = |vals: &[f64]| ParamSpec::Choice(vals.iter().map(|&v| ParamValue::Real(v)).collect());
        let mut embedding = vec![("d".to_string(), ParamSpec::UniformInt(16, 1000))];
        match method {
            Method::Node2vec => {
                let pq = [0.25, 0.5, 0.75, 1.0, 2.0, 4.0];
                embedding.push(("p".into(), choice_real(&pq)));
                embedding.push(("q".into(), choice_real(&pq)));
                embedding.push(("walks".into(), ParamSpec::UniformInt(5, 50)));
                embedding.push(("length".into(), ParamSpec::UniformInt(10, 80)));
            }
            Method::Line => {
                embedding.push((
                    "order".into(),
                    ParamSpec::Choice(vec![
                        ParamValue::Str("first".into()),
                        ParamValue::Str("second".into()),
                        ParamValue::Str("both".into()),
                    ]),
                ));
                let e = graph.n_edges().max(1) as f64;
                embedding.push(("samples".into(), ParamSpec::LogUniform(10.0 * e, 200.0 * e)));
            }
            Method::GraRep => {
                embedding.push(("k_max".into(), ParamSpec::UniformInt(1, 6)));
            }
            Method::Dngr => {
                embedding.push(("alpha".into(), choice_real(&[0.9, 0.95, 0.98])));
                embedding.push(("corruption".into(), ParamSpec::UniformReal(0.0, 0.4)));
            }
        }
        let classifier = match classifier {
            ClassifierKind::LogReg => vec![
                ("l2".to_string(), ParamSpec::LogUniform(1e-5, 1.0)),
                ("epochs".to_string(), ParamSpec::UniformInt(20, 200)),
            ],
            ClassifierKind::Forest => vec![
                ("trees".to_string(), ParamSpec::UniformInt(50, 500)),
                (
                    "depth".to_string(),
                    ParamSpec::Choice(vec![
                        ParamValue::Int(8),
                        ParamValue::Int(16),
                        ParamValue::Int(32),
                        ParamValue::Str("unlimited".into()),
                    ]),
                ),
                (
                    "mtry".to_string(),
                    ParamSpec::Choice(vec![
                        ParamValue::Str("sqrt".into()),
                        ParamValue::Str("log2".into()),
                        ParamValue::Str("all".into()),
                    ]),
                ),
            ],
        };
        HyperSpace { embedding, classifier }
    }
}

/// One concrete draw from a `HyperSpace`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSample {
    pub embedding: Vec<(String, ParamValue)>,
    pub classifier: Vec<(String, ParamValue)>,
}

/// Draw every parameter independently from its spec.
pub fn sample(space: &HyperSpace, rng: &mut ChaCha8Rng) -> HyperSample {
    let draw_group = |group: &[(String, ParamSpec)], rng: &mut ChaCha8Rng| {
        group
            .iter()
            .map(|(name, spec)| (name.clone(), spec.draw(rng)))
            .collect()
    };
    HyperSample {
        embedding: draw_group(&space.embedding, rng),
        classifier: draw_group(&space.classifier, rng),
    }
}

/// Embed the whole graph with the given method, applying named parameter
/// values over the method's defaults. Unknown names are an error.
pub fn embed_with(
    graph: &Graph,
    method: Method,
    values: &[(String, ParamValue)],
    seed: u64,
    mode: TrainMode,
) -> Result<EmbeddingMatrix> {
    match method {
        Method::Node2vec => {
            let mut p = Node2vecParams { seed, ..Node2vecParams::default() };
            for (name, v) in values {
                match name.as_str() {
                    "d" => p.d = v.as_count(name)?,
                    "p" => p.p = v.as_f64(name)?,
                    "q" => p.q = v.as_f64(name)?,
                    "walks" => p.num_walks = v.as_count(name)?,
                    "length" => p.walk_len = v.as_count(name)?,
                    "window" => p.window = v.as_count(name)?,
                    "negatives" => p.negatives = v.as_count(name)?,
                    "epochs" => p.epochs = v.as_count(name)?,
                    "lr" => p.lr = v.as_f64(name)?,
                    _ => return Err(unknown_param(method, name)),
                }
            }
            node2vec_embed(graph, &p, mode)
        }
        Method::Line => {
            let mut p = LineParams { seed, ..LineParams::defaults_for(graph) };
            for (name, v) in values {
                match name.as_str() {
                    "d" => p.d = v.as_count(name)?,
                    "order" => {
                        p.order = match v.as_str(name)? {
                            "first" => LineOrder::First,
                            "second" => LineOrder::Second,
                            "both" => LineOrder::Both,
                            other => {
                                return Err(Error::data(format!(
                                    "parameter 'order' must be first, second, or both (got '{other}')"
                                )))
                            }
                        }
                    }
                    "samples" => p.samples = v.as_count(name)?,
                    "negatives" => p.negatives = v.as_count(name)?,
                    "lr" => p.lr = v.as_f64(name)?,
                    _ => return Err(unknown_param(method, name)),
                }
            }
            line_embed(graph, &p, mode)
        }
        Method::GraRep => {
            let mut p = GraRepParams { seed, ..GraRepParams::default() };
            for (name, v) in values {
                match name.as_str() {
                    "d" => p.d = v.as_count(name)?,
                    "k_max" => p.k_max = v.as_count(name)?,
                    "beta" => p.beta = BetaMode::Custom(v.as_f64(name)?),
                    _ => return Err(unknown_param(method, name)),
                }
            }
            grarep_embed(graph, &p)
        }
        Method::Dngr => {
            let mut p = DngrParams { seed, ..DngrParams::default() };
            let mut d = p.d;
            for (name, v) in values {
                match name.as_str() {
                    "d" => d = v.as_count(name)?,
                    "alpha" => p.alpha = v.as_f64(name)?,
                    "steps" => p.steps = v.as_count(name)?,
                    "corruption" => p.corruption = v.as_f64(name)?,
                    "epochs" => p.epochs = v.as_count(name)?,
                    "lr" => p.lr = v.as_f64(name)?,
                    "batch" => p.batch = v.as_count(name)?,
                    _ => return Err(unknown_param(method, name)),
                }
            }
            p.d = d;
            // one expanding-then-final schedule below 512, single layer above
            p.layers = if d < 512 { vec![(2 * d).min(512), d] } else { vec![d] };
            dngr_embed(graph, &p)
        }
    }
}

fn unknown_param(method: Method, name: &str) -> Error {
    Error::data(format!("unknown {} parameter '{name}'", method.name()))
}

/// Build a classifier from named values over defaults. `d` is the
/// feature dimension, needed to resolve symbolic feature-subset sizes.
pub fn classifier_with(
    kind: ClassifierKind,
    values: &[(String, ParamValue)],
    d: usize,
) -> Result<ClassifierSpec> {
    match kind {
        ClassifierKind::LogReg => {
            let mut p = LogRegParams::default();
            for (name, v) in values {
                match name.as_str() {
                    "l2" => p.l2 = v.as_f64(name)?,
                    "lr" => p.lr = v.as_f64(name)?,
                    "epochs" => p.epochs = v.as_count(name)?,
                    "batch" => p.batch = v.as_count(name)?,
                    _ => return Err(Error::data(format!("unknown logreg parameter '{name}'"))),
                }
            }
            Ok(ClassifierSpec::LogReg(p))
        }
        ClassifierKind::Forest => {
            let mut p = ForestParams::default();
            for (name, v) in values {
                match name.as_str() {
                    "trees" => p.n_trees = v.as_count(name)?,
                    "depth" => {
                        p.max_depth = match v {
                            ParamValue::Str(s) if s == "unlimited" => None,
                            other => Some(other.as_count(name)?),
                        }
                    }
                    "mtry" => {
                        p.mtry = match v {
                            ParamValue::Str(s) => match s.as_str() {
                                "sqrt" => None,
                                "log2" => Some(((d as f64).log2().floor() as usize).max(1)),
                                "all" => Some(d),
                                other => {
                                    return Err(Error::data(format!(
                                        "parameter 'mtry' must be sqrt, log2, all, or a count (got '{other}')"
                                    )))
                                }
                            },
                            other => Some(other.as_count(name)?),
                        }
                    }
                    "min_leaf" => p.min_leaf = v.as_count(name)?,
                    _ => return Err(Error::data(format!("unknown forest parameter '{name}'"))),
                }
            }
            Ok(ClassifierSpec::Forest(p))
        }
    }
}

/// Outcome of one search trial. Timings are wall clock; everything else
/// is deterministic in (master seed, trial index).
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub sample: HyperSample,
    pub embed_seed: u64,
    pub eval_seed: u64,
    /// Validation scores; None when the trial failed.
    pub validation: Option<ScoreReport>,
    pub error: Option<String>,
    pub embed_seconds: f64,
    pub train_seconds: f64,
    pub score_seconds: f64,
}

impl TrialRecord {
    pub fn status(&self) -> &'static str {
        if self.error.is_none() { "ok" } else { "failed" }
    }

    pub fn csv_row(&self) -> String {
        let (vm, vu) = match &self.validation {
            Some(r) => (format_sig(r.macro_f1, 6), format_sig(r.micro_f1, 6)),
            None => (String::new(), String::new()),
        };
        let params: Vec<String> = self
            .sample
            .embedding
            .iter()
            .chain(&self.sample.classifier)
            .map(|(n, v)| format!("{n}={}", v.render()))
            .collect();
        format!(
            "{},{},{vm},{vu},{},{},{}",
            self.trial,
            self.status(),
            format_sig(self.embed_seconds, 6),
            format_sig(self.train_seconds, 6),
            params.join(";")
        )
    }
}

pub fn trial_csv_header() -> &'static str {
    "trial,status,val_macro,val_micro,embed_seconds,train_seconds,params"
}

/// Search result: the winning trial, its single test evaluation, and
/// every trial record in index order.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: TrialRecord,
    pub test: ScoreReport,
    pub all: Vec<TrialRecord>,
}

/// Index of the best non-failed trial by validation micro-F1; ties go to
/// the earliest trial.
fn select_best(records: &[TrialRecord]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in records {
        if let Some(v) = &r.validation {
            if best.map_or(true, |(_, m)| v.micro_f1 > m) {
                best = Some((r.trial, v.micro_f1));
            }
        }
    }
    match best {
        Some((idx, _)) => Ok(idx),
        None => {
            let first = records
                .iter()
                .find_map(|r| r.error.as_deref())
                .unwrap_or("no trials ran");
            Err(Error::numeric(format!(
                "search: all {} trials failed; first error: {first}",
                records.len()
            )))
        }
    }
}

fn run_trial(
    graph: &Graph,
    labels: &LabelStore,
    method: Method,
    classifier: ClassifierKind,
    space: &HyperSpace,
    split: &Split,
    master_seed: u64,
    trial: usize,
    mode: TrainMode,
    rule: DecisionRule,
) -> TrialRecord {
    let t = trial as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, &[SALT_SAMPLE, t]));
    let sample = sample(space, &mut rng);
    let embed_seed = derive_seed(master_seed, &[SALT_EMBED, t]);
    let eval_seed = derive_seed(master_seed, &[SALT_EVAL, t]);
    let mut record = TrialRecord {
        trial,
        sample,
        embed_seed,
        eval_seed,
        validation: None,
        error: None,
        embed_seconds: 0.0,
        train_seconds: 0.0,
        score_seconds: 0.0,
    };
    let t0 = Instant::now();
    let embedded = embed_with(graph, method, &record.sample.embedding, embed_seed, mode);
    record.embed_seconds = t0.elapsed().as_secs_f64();
    let result = embedded.and_then(|emb| {
        let spec = classifier_with(classifier, &record.sample.classifier, emb.dim())?;
        evaluate_timed(&emb, labels, split, &spec, EvalOn::Val, rule, eval_seed)
    });
    match result {
        Ok(timed) => {
            record.validation = Some(timed.report);
            record.train_seconds = timed.train_seconds;
            record.score_seconds = timed.score_seconds;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Run `trials` independent trials and evaluate the winner once on the
/// test part. Trial t depends only on (master_seed, t), so results are
/// stable under adding or removing other trials; trials execute
/// concurrently and are collected in index order.
#[allow(clippy::too_many_arguments)]
pub fn run_search(
    graph: &Graph,
    labels: &LabelStore,
    method: Method,
    classifier: ClassifierKind,
    space: &HyperSpace,
    trials: usize,
    split: &Split,
    master_seed: u64,
    mode: TrainMode,
    rule: DecisionRule,
) -> Result<SearchOutcome> {
    if trials == 0 {
        return Err(Error::data("search: trials must be at least 1"));
    }
    space.validate()?;
    let all: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(
                graph, labels, method, classifier, space, split, master_seed, t, mode, rule,
            )
        })
        .collect();
    let best_idx = select_best(&all)?;
    let best = all[best_idx].clone();
    // retrain with the winning trial's own seeds: the test score is
    // reproducible from (master_seed, best.trial) alone
    let emb = embed_with(graph, method, &best.sample.embedding, best.embed_seed, mode)?;
    let spec = classifier_with(classifier, &best.sample.classifier, emb.dim())?;
    let test = evaluate_timed(&emb, labels, split, &spec, EvalOn::Test, rule, best.eval_seed)?
        .report;
    Ok(SearchOutcome { best, test, all })
}
