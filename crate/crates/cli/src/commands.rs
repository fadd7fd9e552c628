//! The seven commands: embed, evaluate, search, sweep, dimension-study,
//! baseline, report.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use netemb::eval::{
    evaluate, fraction_sweep, make_split, most_frequent_baseline, EvalOn, Split,
};
use netemb::graph::{load_edge_list, load_labels, load_labels_intersect, Graph, LabelStore};
use netemb::numerics::format_sig;
use netemb::search::{
    classifier_with, embed_with, run_search, trial_csv_header, HyperSample, Method,
    SearchOutcome, TrialRecord,
};
use netemb::Error;

use crate::config::Settings;
use crate::io::{self, ScoreRow};
use crate::{CliError, CliResult};

fn load_graph(s: &Settings) -> CliResult<Graph> {
    let path = s.require_edges()?;
    let (g, stats) = load_edge_list(path, s.directed, s.weighted).map_err(CliError::Core)?;
    log::info!(
        "{}: nodes={} edges={} (lines={}, self-loops dropped={}, duplicates merged={})",
        s.dataset,
        stats.n_nodes,
        stats.stored_edges,
        stats.edge_lines,
        stats.self_loops_dropped,
        stats.duplicates_merged
    );
    Ok(g)
}

fn load_label_store(s: &Settings, graph: &Graph) -> CliResult<LabelStore> {
    let (path, task) = s.require_labels()?;
    if s.intersect_labels {
        let (store, stats) =
            load_labels_intersect(path, graph, task).map_err(CliError::Core)?;
        log::info!(
            "labels: {} labeled nodes, {} lines with unknown IDs skipped",
            stats.labeled_nodes,
            stats.unknown_ids_skipped
        );
        Ok(store)
    } else {
        load_labels(path, graph, task).map_err(CliError::Core)
    }
}

fn split_for(s: &Settings, labels: &LabelStore) -> CliResult<Split> {
    make_split(
        labels,
        s.fractions,
        labels.task().single_label(),
        s.master_seed,
    )
    .map_err(CliError::Core)
}

fn parse_on(on: &str) -> CliResult<EvalOn> {
    match on {
        "val" => Ok(EvalOn::Val),
        "test" => Ok(EvalOn::Test),
        other => Err(CliError::Usage(format!(
            "unknown split '{other}' for --on (expected val or test)"
        ))),
    }
}

pub fn cmd_embed(s: &Settings, dim: Option<usize>, output: Option<PathBuf>) -> CliResult<()> {
    let method = s.require_method()?;
    let graph = load_graph(s)?;
    let mut values = s.params.clone();
    if let Some(d) = dim {
        let v = netemb::search::ParamValue::Int(d as i64);
        match values.iter_mut().find(|(n, _)| n == "d") {
            Some(slot) => slot.1 = v,
            None => values.push(("d".to_string(), v)),
        }
    }
    let emb =
        embed_with(&graph, method, &values, s.master_seed, s.mode()).map_err(CliError::Core)?;
    let out = output.unwrap_or_else(|| {
        s.out_dir
            .join(format!("embedding_{}_{}.csv", s.dataset, method.name()))
    });
    io::write_embedding(&out, &graph, &emb).map_err(CliError::Core)?;
    println!(
        "embedded dataset={} method={} nodes={} dims={} -> {}",
        s.dataset,
        method.name(),
        emb.n_nodes(),
        emb.dim(),
        out.display()
    );
    Ok(())
}

pub fn cmd_evaluate(
    s: &Settings,
    embedding: Option<PathBuf>,
    on: &str,
    output: Option<PathBuf>,
) -> CliResult<()> {
    let graph = load_graph(s)?;
    let labels = load_label_store(s, &graph)?;
    let split = split_for(s, &labels)?;
    let (emb, method_name) = match embedding {
        Some(path) => {
            let name = match s.method {
                Some(m) => m.name().to_string(),
                None => path
                    .file_stem()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "embedding".to_string()),
            };
            (io::read_embedding(&path, &graph).map_err(CliError::Core)?, name)
        }
        None => {
            let m = s.require_method()?;
            let emb = embed_with(&graph, m, &s.params, s.master_seed, s.mode())
                .map_err(CliError::Core)?;
            (emb, m.name().to_string())
        }
    };
    let kind = s.require_classifier()?;
    let cspec =
        classifier_with(kind, &s.classifier_params, emb.dim()).map_err(CliError::Core)?;
    let eval_on = parse_on(on)?;
    let report = evaluate(&emb, &labels, &split, &cspec, eval_on, s.rule, s.master_seed)
        .map_err(CliError::Core)?;
    let row = ScoreRow::new(
        &s.dataset,
        &method_name,
        kind.name(),
        on,
        &report,
        s.master_seed,
    );
    io::append_score(&s.out_dir, &row).map_err(CliError::Core)?;
    if let Some(out) = output {
        io::write_csv(&out, io::SCORES_HEADER, &[row.render()]).map_err(CliError::Core)?;
    }
    println!(
        "evaluate dataset={} method={} classifier={} split={} macro_f1={} micro_f1={}",
        s.dataset,
        method_name,
        kind.name(),
        on,
        format_sig(report.macro_f1, 6),
        format_sig(report.micro_f1, 6)
    );
    Ok(())
}

fn render_trial(r: &TrialRecord, deterministic: bool) -> String {
    // wall-clock columns would break byte-identical reruns
    if deterministic {
        let mut r = r.clone();
        r.embed_seconds = 0.0;
        r.train_seconds = 0.0;
        r.score_seconds = 0.0;
        r.csv_row()
    } else {
        r.csv_row()
    }
}

fn flatten_params(sample: &HyperSample) -> String {
    sample
        .embedding
        .iter()
        .chain(&sample.classifier)
        .map(|(n, v)| format!("{n}={}", v.render()))
        .collect::<Vec<_>>()
        .join(";")
}

/// Summary row appended after the trial rows: the winning trial's index
/// and parameters with the final TEST scores in the score columns.
fn summary_row(outcome: &SearchOutcome) -> String {
    format!(
        "{},best,{},{},0,0,{}",
        outcome.best.trial,
        format_sig(outcome.test.macro_f1, 6),
        format_sig(outcome.test.micro_f1, 6),
        flatten_params(&outcome.best.sample)
    )
}

fn search_outcome(s: &Settings) -> CliResult<(Method, netemb::search::ClassifierKind, SearchOutcome)> {
    let method = s.require_method()?;
    let kind = s.require_classifier()?;
    let graph = load_graph(s)?;
    let labels = load_label_store(s, &graph)?;
    let split = split_for(s, &labels)?;
    let space = s.space(method, kind, &graph)?;
    let outcome = run_search(
        &graph,
        &labels,
        method,
        kind,
        &space,
        s.trials,
        &split,
        s.master_seed,
        s.mode(),
        s.rule,
    )
    .map_err(CliError::Core)?;
    Ok((method, kind, outcome))
}

pub fn cmd_search(s: &Settings, output: Option<PathBuf>) -> CliResult<()> {
    let (method, kind, outcome) = search_outcome(s)?;
    let mut rows: Vec<String> = outcome
        .all
        .iter()
        .map(|r| render_trial(r, s.deterministic))
        .collect();
    rows.push(summary_row(&outcome));
    let out = output.unwrap_or_else(|| {
        s.out_dir.join(format!(
            "trials_{}_{}_{}.csv",
            s.dataset,
            method.name(),
            kind.name()
        ))
    });
    io::write_csv(&out, trial_csv_header(), &rows).map_err(CliError::Core)?;
    io::append_score(
        &s.out_dir,
        &ScoreRow::new(
            &s.dataset,
            method.name(),
            kind.name(),
            "test",
            &outcome.test,
            s.master_seed,
        ),
    )
    .map_err(CliError::Core)?;
    let best_val = outcome
        .best
        .validation
        .as_ref()
        .map(|v| format_sig(v.micro_f1, 6))
        .unwrap_or_default();
    println!(
        "search dataset={} method={} classifier={} trials={} best_trial={} val_micro={} test_macro={} test_micro={} -> {}",
        s.dataset,
        method.name(),
        kind.name(),
        outcome.all.len(),
        outcome.best.trial,
        best_val,
        format_sig(outcome.test.macro_f1, 6),
        format_sig(outcome.test.micro_f1, 6),
        out.display()
    );
    Ok(())
}

pub fn cmd_sweep(s: &Settings, on: &str, output: Option<PathBuf>) -> CliResult<()> {
    let method = s.require_method()?;
    let kind = s.require_classifier()?;
    let graph = load_graph(s)?;
    let labels = load_label_store(s, &graph)?;
    let split = split_for(s, &labels)?;
    let emb = embed_with(&graph, method, &s.params, s.master_seed, s.mode())
        .map_err(CliError::Core)?;
    let cspec =
        classifier_with(kind, &s.classifier_params, emb.dim()).map_err(CliError::Core)?;
    let eval_on = parse_on(on)?;
    let results = fraction_sweep(
        &emb,
        &labels,
        &split,
        &cspec,
        &s.sweep_fractions,
        eval_on,
        s.rule,
        s.master_seed,
    )
    .map_err(CliError::Core)?;
    let rows: Vec<String> = results
        .iter()
        .map(|(f, r)| {
            format!(
                "{},{},{},{},{},{},{},{}",
                s.dataset,
                method.name(),
                kind.name(),
                on,
                format_sig(*f, 6),
                format_sig(r.macro_f1, 6),
                format_sig(r.micro_f1, 6),
                s.master_seed
            )
        })
        .collect();
    let out = output.unwrap_or_else(|| {
        s.out_dir.join(format!(
            "sweep_{}_{}_{}.csv",
            s.dataset,
            method.name(),
            kind.name()
        ))
    });
    io::write_csv(
        &out,
        "dataset,method,classifier,split,fraction,macro_f1,micro_f1,seed",
        &rows,
    )
    .map_err(CliError::Core)?;
    let (first, last) = (&results[0], &results[results.len() - 1]);
    println!(
        "sweep dataset={} method={} classifier={} fractions={} micro_first={} micro_last={} -> {}",
        s.dataset,
        method.name(),
        kind.name(),
        results.len(),
        format_sig(first.1.micro_f1, 6),
        format_sig(last.1.micro_f1, 6),
        out.display()
    );
    Ok(())
}

/// A dimension/score point from one successful trial.
type DimPoint = (usize, f64, f64);

pub struct DimBin {
    pub d_lo: usize,
    pub d_hi: usize,
    pub trials: usize,
    pub best_val_macro: f64,
    pub best_val_micro: f64,
}

/// Group points into dimension ranges with doubling upper edges
/// (1-16, 17-32, 33-64, ...); ranges holding no trials are omitted.
pub fn bin_by_dimension(points: &[DimPoint]) -> Vec<DimBin> {
    let Some(max_d) = points.iter().map(|p| p.0).max() else {
        return Vec::new();
    };
    let mut bins = Vec::new();
    let (mut lo, mut hi) = (0usize, 16usize);
    loop {
        let in_bin: Vec<&DimPoint> =
            points.iter().filter(|p| p.0 > lo && p.0 <= hi).collect();
        if !in_bin.is_empty() {
            bins.push(DimBin {
                d_lo: lo + 1,
                d_hi: hi,
                trials: in_bin.len(),
                best_val_macro: in_bin.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
                best_val_micro: in_bin.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max),
            });
        }
        if hi >= max_d {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    bins
}

fn trial_points(records: &[TrialRecord]) -> Vec<DimPoint> {
    records
        .iter()
        .filter_map(|r| {
            let v = r.validation.as_ref()?;
            let d = r.sample.embedding.iter().find_map(|(n, val)| match val {
                netemb::search::ParamValue::Int(i) if n == "d" => Some(*i as usize),
                _ => None,
            })?;
            Some((d, v.macro_f1, v.micro_f1))
        })
        .collect()
}

/// Parse points back out of a trial log written by `cmd_search`.
fn parse_trial_log(path: &Path) -> CliResult<Vec<DimPoint>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Core(Error::io(path, e)))?;
    let mut points = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| CliError::Core(Error::io(path, e)))?;
        if lineno == 1 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(CliError::Core(Error::parse(
                path,
                lineno,
                "expected 7 columns",
            )));
        }
        if f[1] != "ok" {
            continue;
        }
        let Some(d) = f[6].split(';').find_map(|kv| {
            kv.strip_prefix("d=").and_then(|v| v.parse::<usize>().ok())
        }) else {
            continue;
        };
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                CliError::Core(Error::parse(path, lineno, format!("bad score {s:?}")))
            })
        };
        points.push((d, parse(f[2])?, parse(f[3])?));
    }
    Ok(points)
}

pub fn cmd_dimension_study(
    s: &Settings,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
) -> CliResult<()> {
    let points = match &input {
        Some(path) => parse_trial_log(path)?,
        None => {
            let (_, _, outcome) = search_outcome(s)?;
            trial_points(&outcome.all)
        }
    };
    if points.is_empty() {
        return Err(CliError::Core(Error::data(
            "dimension-study: no successful trials with a sampled dimension",
        )));
    }
    let bins = bin_by_dimension(&points);
    let rows: Vec<String> = bins
        .iter()
        .map(|b| {
            format!(
                "{},{},{},{},{}",
                b.d_lo,
                b.d_hi,
                b.trials,
                format_sig(b.best_val_macro, 6),
                format_sig(b.best_val_micro, 6)
            )
        })
        .collect();
    let out = output.unwrap_or_else(|| s.out_dir.join(format!("dimensions_{}.csv", s.dataset)));
    io::write_csv(&out, "d_lo,d_hi,trials,best_val_macro,best_val_micro", &rows)
        .map_err(CliError::Core)?;
    let global = points.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let small = bins
        .iter()
        .filter(|b| b.d_hi <= 128)
        .map(|b| b.best_val_micro)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "dimension-study dataset={} points={} bins={} best_micro={} best_micro_d<=128={} -> {}",
        s.dataset,
        points.len(),
        bins.len(),
        format_sig(global, 6),
        if small.is_finite() { format_sig(small, 6) } else { "none".to_string() },
        out.display()
    );
    Ok(())
}

pub fn cmd_baseline(s: &Settings) -> CliResult<()> {
    let graph = load_graph(s)?;
    let labels = load_label_store(s, &graph)?;
    let split = split_for(s, &labels)?;
    let report = most_frequent_baseline(&labels, &split).map_err(CliError::Core)?;
    io::append_score(
        &s.out_dir,
        &ScoreRow::new(
            &s.dataset,
            "most_frequent",
            "baseline",
            "test",
            &report,
            s.master_seed,
        ),
    )
    .map_err(CliError::Core)?;
    println!(
        "baseline dataset={} macro_f1={} micro_f1={}",
        s.dataset,
        format_sig(report.macro_f1, 6),
        format_sig(report.micro_f1, 6)
    );
    Ok(())
}

pub fn cmd_report(
    s: &Settings,
    results_dir: Option<PathBuf>,
    output: Option<PathBuf>,
) -> CliResult<()> {
    let dir = results_dir.unwrap_or_else(|| s.out_dir.clone());
    let path = dir.join(io::SCORES_FILE);
    if !path.exists() {
        return Err(CliError::Core(Error::data(format!(
            "report: no score log at {}",
            path.display()
        ))));
    }
    let rows = io::read_scores(&path).map_err(CliError::Core)?;
    let test: Vec<&ScoreRow> = rows.iter().filter(|r| r.split == "test").collect();
    if test.is_empty() {
        return Err(CliError::Core(Error::data(
            "report: score log holds no test-split rows",
        )));
    }
    // mean over repeated (dataset, classifier, method) rows, e.g. seeds
    let mut acc: BTreeMap<(String, String, String), (f64, f64, usize)> = BTreeMap::new();
    let mut datasets: BTreeSet<String> = BTreeSet::new();
    for r in &test {
        datasets.insert(r.dataset.clone());
        let e = acc
            .entry((r.dataset.clone(), r.classifier.clone(), r.method.clone()))
            .or_insert((0.0, 0.0, 0));
        e.0 += r.macro_f1;
        e.1 += r.micro_f1;
        e.2 += 1;
    }
    let mut out_rows = Vec::new();
    for dataset in &datasets {
        for (score, pick) in [("macro_f1", 0usize), ("micro_f1", 1usize)] {
            for ((ds, cl, me), (ma, mi, n)) in &acc {
                if ds != dataset || cl == "baseline" {
                    continue;
                }
                let v = if pick == 0 { ma } else { mi } / *n as f64;
                out_rows.push(format!("{ds},{score},{cl},{me},{}", format_sig(v, 6)));
            }
        }
        for (score, pick) in [("macro_f1", 0usize), ("micro_f1", 1usize)] {
            if let Some((ma, mi, n)) =
                acc.get(&(dataset.clone(), "baseline".to_string(), "most_frequent".to_string()))
            {
                let v = if pick == 0 { ma } else { mi } / *n as f64;
                out_rows.push(format!(
                    "{dataset},{score},baseline,most_frequent,{}",
                    format_sig(v, 6)
                ));
            }
        }
    }
    let out = output.unwrap_or_else(|| dir.join("report.csv"));
    io::write_csv(&out, "dataset,score,classifier,method,value", &out_rows)
        .map_err(CliError::Core)?;
    println!(
        "report: {} datasets, {} rows -> {}",
        datasets.len(),
        out_rows.len(),
        out.display()
    );
    Ok(())
}
