//! Acceptance suite: one test per criterion, each printing a single
//! verdict line (PASS / FAIL / SKIP with the measured numbers).
//!
//! Criteria that need the packaged datasets read the directory named by
//! the NETEMB_DATA environment variable. It must hold a manifest.json
//! mapping dataset names to files (scripts/fetch_datasets.sh builds
//! one). When the variable or a dataset is missing those tests print
//! SKIP and succeed; the property suite always runs.
//!
//! Run `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use netemb::classify::{ClassifierSpec, LogRegParams};
use netemb::eval::{
    evaluate, f1_scores, fraction_sweep, make_split, most_frequent_baseline, DecisionRule, EvalOn,
};
use netemb::graph::{
    build_alias_table, load_edge_list, load_labels_intersect, Graph, LabelStore, TaskKind,
};
use netemb::grarep::{grarep_embed, GraRepParams};
use netemb::line::{line_embed, LineParams};
use netemb::node2vec::{generate_walks, node2vec_embed, Node2vecParams};
use netemb::numerics::DenseMatrix;
use netemb::search::{run_search, ClassifierKind, HyperSpace, Method, ParamValue};
use netemb::{EmbeddingMatrix, TrainMode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRACTIONS: (f64, f64, f64) = (0.5, 0.25, 0.25);

fn verdict(name: &str, detail: String, pass: bool) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {word} ({detail})");
    assert!(pass, "{name}: {detail}");
}

fn skip(name: &str, why: &str) {
    println!("acceptance {name}: SKIP ({why})");
}

struct DataFiles {
    edges: PathBuf,
    labels: Option<PathBuf>,
    directed: bool,
    task: TaskKind,
}

/// Parses $NETEMB_DATA/manifest.json. None when the variable is unset or
/// the file does not exist; a malformed manifest fails loudly.
fn manifest() -> Option<BTreeMap<String, DataFiles>> {
    let root = PathBuf::from(std::env::var_os("NETEMB_DATA")?);
    let path = root.join("manifest.json");
    let text = std::fs::read_to_string(&path).ok()?;
    let v: serde_json::Value =
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let obj = v
        .as_object()
        .unwrap_or_else(|| panic!("{}: expected an object of datasets", path.display()));
    let mut out = BTreeMap::new();
    for (name, entry) in obj {
        let field = |k: &str| entry.get(k).and_then(|x| x.as_str());
        let edges = root.join(
            field("edges").unwrap_or_else(|| panic!("manifest entry {name} is missing 'edges'")),
        );
        let labels = field("labels").map(|l| root.join(l));
        let directed = entry
            .get("directed")
            .and_then(|x| x.as_bool())
            .unwrap_or(false);
        let task: TaskKind = field("task")
            .unwrap_or("multiclass")
            .parse()
            .unwrap_or_else(|e| panic!("manifest entry {name}: {e}"));
        out.insert(
            name.clone(),
            DataFiles {
                edges,
                labels,
                directed,
                task,
            },
        );
    }
    Some(out)
}

/// Loads one dataset's graph, or None when it is not available.
fn dataset(name: &str) -> Option<(Graph, DataFiles)> {
    let mut m = manifest()?;
    let files = m.remove(name)?;
    if !files.edges.exists() {
        return None;
    }
    let (graph, _) = load_edge_list(&files.edges, files.directed, false)
        .unwrap_or_else(|e| panic!("{name}: {e}"));
    Some((graph, files))
}

/// Labels for a loaded dataset. Intersect mode: label rows for unknown
/// ids are skipped, so partially labeled graphs still evaluate.
fn labels_for(name: &str, graph: &Graph, files: &DataFiles) -> Option<LabelStore> {
    let path = files.labels.as_ref()?;
    if !path.exists() {
        return None;
    }
    let (store, _) = load_labels_intersect(path, graph, files.task)
        .unwrap_or_else(|e| panic!("{name} labels: {e}"));
    Some(store)
}

fn labeled_dataset(name: &str) -> Option<(Graph, LabelStore)> {
    let (graph, files) = dataset(name)?;
    let store = labels_for(name, &graph, &files)?;
    Some((graph, store))
}

fn logreg_spec() -> ClassifierSpec {
    ClassifierSpec::LogReg(LogRegParams::default())
}

// --- criterion 1: node and edge counts of the packaged datasets ---

#[test]
fn c1_dataset_counts() {
    const NAME: &str = "c1-dataset-counts";
    // (dataset, nodes, edges, label classes)
    let expected = [
        ("moreno", 1224usize, 19025usize, 2usize),
        ("citeseer", 3312, 4660, 6),
        ("facebook", 4039, 88234, 4),
        ("blogcatalog", 10312, 333983, 39),
    ];
    let Some(m) = manifest() else {
        skip(NAME, "NETEMB_DATA not set");
        return;
    };
    let mut seen = Vec::new();
    let mut missing = Vec::new();
    let mut failures = Vec::new();
    for (name, nodes, edges, classes) in expected {
        let Some(files) = m.get(name) else {
            missing.push(name);
            continue;
        };
        if !files.edges.exists() {
            missing.push(name);
            continue;
        }
        let t0 = Instant::now();
        let (graph, _) = match load_edge_list(&files.edges, files.directed, false) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        let secs = t0.elapsed().as_secs_f64();
        if graph.n_nodes() != nodes || graph.n_edges() != edges {
            failures.push(format!(
                "{name}: {}/{} nodes/edges, want {nodes}/{edges}",
                graph.n_nodes(),
                graph.n_edges()
            ));
        }
        if secs >= 10.0 {
            failures.push(format!("{name}: loaded in {secs:.1}s, budget 10s"));
        }
        if let Some(store) = labels_for(name, &graph, files) {
            if store.n_labels() != classes {
                failures.push(format!(
                    "{name}: {} label classes, want {classes}",
                    store.n_labels()
                ));
            }
        }
        seen.push(format!("{name} in {secs:.2}s"));
    }
    if seen.is_empty() {
        skip(NAME, "no dataset files found");
        return;
    }
    let mut detail = seen.join(", ");
    if !missing.is_empty() {
        detail.push_str(&format!("; absent: {}", missing.join(", ")));
    }
    if !failures.is_empty() {
        detail = failures.join("; ");
    }
    verdict(NAME, detail, failures.is_empty());
}

// --- criterion 2: most-frequent-label micro-F1 bands ---

#[test]
fn c2_baseline_micro_bands() {
    const NAME: &str = "c2-baseline-bands";
    let bands = [
        ("moreno", 0.520),
        ("citeseer", 0.212),
        ("facebook", 0.336),
        ("blogcatalog", 0.090),
    ];
    let mut seen = Vec::new();
    let mut failures = Vec::new();
    for (name, want) in bands {
        let Some((_, store)) = labeled_dataset(name) else {
            continue;
        };
        let mut sum = 0.0;
        let mut err = None;
        for seed in 0..5 {
            let r = make_split(&store, FRACTIONS, store.task().single_label(), seed)
                .and_then(|split| most_frequent_baseline(&store, &split));
            match r {
                Ok(report) => sum += report.micro_f1,
                Err(e) => {
                    err = Some(format!("{name} seed {seed}: {e}"));
                    break;
                }
            }
        }
        if let Some(e) = err {
            failures.push(e);
            continue;
        }
        let mean = sum / 5.0;
        if (mean - want).abs() > 0.03 {
            failures.push(format!("{name}: mean micro {mean:.3}, want {want:.3} +-0.03"));
        } else {
            seen.push(format!("{name} {mean:.3} (ref {want:.3})"));
        }
    }
    if seen.is_empty() && failures.is_empty() {
        skip(NAME, "datasets with labels not available");
        return;
    }
    let detail = if failures.is_empty() {
        format!("5-seed means: {}", seen.join(", "))
    } else {
        failures.join("; ")
    };
    verdict(NAME, detail, failures.is_empty());
}

// --- criterion 3: every method clears 0.90 micro-F1 on moreno ---

#[test]
fn c3_moreno_end_to_end() {
    const NAME: &str = "c3-moreno-end-to-end";
    let Some((graph, store)) = labeled_dataset("moreno") else {
        skip(NAME, "moreno dataset not available");
        return;
    };
    let split = make_split(&store, FRACTIONS, true, 0).expect("moreno split");
    let mut details = Vec::new();
    let mut pass = true;
    for method in [Method::Node2vec, Method::Line, Method::GraRep, Method::Dngr] {
        let space = HyperSpace::defaults(method, ClassifierKind::LogReg, &graph);
        let t0 = Instant::now();
        let outcome = run_search(
            &graph,
            &store,
            method,
            ClassifierKind::LogReg,
            &space,
            25,
            &split,
            0,
            TrainMode::Deterministic,
            DecisionRule::TopKTrue,
        )
        .unwrap_or_else(|e| panic!("moreno {}: {e}", method.name()));
        let mins = t0.elapsed().as_secs_f64() / 60.0;
        let micro = outcome.test.micro_f1;
        pass &= micro >= 0.90;
        details.push(format!("{} {micro:.3} in {mins:.1} min", method.name()));
    }
    verdict(
        NAME,
        format!(
            "test micro over 25 trials: {}; floor 0.90, ref band 0.941-0.954",
            details.join(", ")
        ),
        pass,
    );
}

// --- criterion 4: citeseer score bands per method ---

#[test]
fn c4_citeseer_bands() {
    const NAME: &str = "c4-citeseer-bands";
    let Some((graph, store)) = labeled_dataset("citeseer") else {
        skip(NAME, "citeseer dataset not available");
        return;
    };
    let split = make_split(&store, FRACTIONS, true, 0).expect("citeseer split");
    // (method, floor, ceiling): dngr is checked as an upper bound only,
    // matching its weak reference score
    let checks = [
        (Method::GraRep, Some(0.53), None),
        (Method::Node2vec, Some(0.49), None),
        (Method::Dngr, None, Some(0.35)),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (method, floor, ceiling) in checks {
        let space = HyperSpace::defaults(method, ClassifierKind::LogReg, &graph);
        let t0 = Instant::now();
        let outcome = run_search(
            &graph,
            &store,
            method,
            ClassifierKind::LogReg,
            &space,
            25,
            &split,
            0,
            TrainMode::Deterministic,
            DecisionRule::TopKTrue,
        )
        .unwrap_or_else(|e| panic!("citeseer {}: {e}", method.name()));
        let mins = t0.elapsed().as_secs_f64() / 60.0;
        let micro = outcome.test.micro_f1;
        let ok = floor.is_none_or(|f| micro >= f) && ceiling.is_none_or(|c| micro <= c);
        pass &= ok;
        let bound = match (floor, ceiling) {
            (Some(f), _) => format!(">={f}"),
            (_, Some(c)) => format!("<={c}"),
            _ => unreachable!(),
        };
        details.push(format!(
            "{} {micro:.3} (want {bound}) in {mins:.1} min",
            method.name()
        ));
    }
    verdict(NAME, details.join(", "), pass);
}

// --- criterion 5: blogcatalog heavy tier, opt-in ---

#[test]
#[ignore = "heavy tier: a multi-hour search on the largest dataset; run with --ignored"]
fn c5_blogcatalog_node2vec() {
    const NAME: &str = "c5-blogcatalog-node2vec";
    let Some((graph, store)) = labeled_dataset("blogcatalog") else {
        skip(NAME, "blogcatalog dataset not available");
        return;
    };
    let split = make_split(&store, FRACTIONS, false, 0).expect("blogcatalog split");
    let space = HyperSpace::defaults(Method::Node2vec, ClassifierKind::LogReg, &graph);
    let t0 = Instant::now();
    let outcome = run_search(
        &graph,
        &store,
        Method::Node2vec,
        ClassifierKind::LogReg,
        &space,
        15,
        &split,
        0,
        TrainMode::Deterministic,
        DecisionRule::TopKTrue,
    )
    .expect("blogcatalog search");
    let mins = t0.elapsed().as_secs_f64() / 60.0;
    let micro = outcome.test.micro_f1;
    verdict(
        NAME,
        format!("test micro {micro:.3} over 15 trials in {mins:.0} min; floor 0.30, ref 0.354"),
        micro >= 0.30,
    );
}

// --- criterion 6: training-fraction behavior ---

#[test]
fn c6_training_fraction_trends() {
    const NAME: &str = "c6-fraction-trends";
    let fractions: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let mut details = Vec::new();
    let mut failures = Vec::new();

    // flat curve: logistic regression gains at most 0.08 micro from
    // 10% to 100% of the training labels
    if let Some((graph, store)) = labeled_dataset("citeseer") {
        let emb = grarep_embed(
            &graph,
            &GraRepParams {
                d: 128,
                k_max: 4,
                ..GraRepParams::default()
            },
        )
        .expect("citeseer embedding");
        let split = make_split(&store, FRACTIONS, true, 0).expect("citeseer split");
        let sweep = fraction_sweep(
            &emb,
            &store,
            &split,
            &logreg_spec(),
            &fractions,
            EvalOn::Test,
            DecisionRule::TopKTrue,
            0,
        )
        .expect("citeseer sweep");
        let first = sweep.first().unwrap().1.micro_f1;
        let last = sweep.last().unwrap().1.micro_f1;
        let diff = last - first;
        if diff <= 0.08 {
            details.push(format!("citeseer micro(1.0)-micro(0.1)={diff:.3} (<=0.08)"));
        } else {
            failures.push(format!("citeseer spread {diff:.3} exceeds 0.08"));
        }
    }

    // early plateau: the 30% score sits within 0.02 of the full score
    if let Some((graph, store)) = labeled_dataset("moreno") {
        let emb = grarep_embed(
            &graph,
            &GraRepParams {
                d: 128,
                k_max: 3,
                ..GraRepParams::default()
            },
        )
        .expect("moreno embedding");
        let split = make_split(&store, FRACTIONS, true, 0).expect("moreno split");
        let sweep = fraction_sweep(
            &emb,
            &store,
            &split,
            &logreg_spec(),
            &fractions,
            EvalOn::Test,
            DecisionRule::TopKTrue,
            0,
        )
        .expect("moreno sweep");
        let at30 = sweep
            .iter()
            .find(|(f, _)| (*f - 0.3).abs() < 1e-9)
            .expect("sweep covers the 30% fraction")
            .1
            .micro_f1;
        let full = sweep.last().unwrap().1.micro_f1;
        let gap = (full - at30).abs();
        if gap <= 0.02 {
            details.push(format!("moreno |micro(1.0)-micro(0.3)|={gap:.3} (<=0.02)"));
        } else {
            failures.push(format!("moreno 30% gap {gap:.3} exceeds 0.02"));
        }
    }

    if details.is_empty() && failures.is_empty() {
        skip(NAME, "citeseer and moreno datasets not available");
        return;
    }
    let detail = if failures.is_empty() {
        details.join("; ")
    } else {
        failures.join("; ")
    };
    verdict(NAME, detail, failures.is_empty());
}

// --- criterion 7: small dimensions suffice ---

#[test]
fn c7_dimension_concentration() {
    const NAME: &str = "c7-dimension-concentration";
    let Some((graph, store)) = labeled_dataset("citeseer") else {
        skip(NAME, "citeseer dataset not available");
        return;
    };
    let split = make_split(&store, FRACTIONS, true, 0).expect("citeseer split");
    let space = HyperSpace::defaults(Method::GraRep, ClassifierKind::LogReg, &graph);
    let outcome = run_search(
        &graph,
        &store,
        Method::GraRep,
        ClassifierKind::LogReg,
        &space,
        40,
        &split,
        0,
        TrainMode::Deterministic,
        DecisionRule::TopKTrue,
    )
    .expect("citeseer 40-trial search");
    let mut global: Option<f64> = None;
    let mut small: Option<f64> = None;
    let mut n_ok = 0usize;
    for r in &outcome.all {
        let Some(v) = &r.validation else { continue };
        let d = r
            .sample
            .embedding
            .iter()
            .find_map(|(n, p)| match (n.as_str(), p) {
                ("d", ParamValue::Int(i)) => Some(*i),
                _ => None,
            })
            .expect("every trial samples d");
        n_ok += 1;
        let best = global.get_or_insert(f64::NEG_INFINITY);
        *best = best.max(v.micro_f1);
        if d <= 128 {
            let best = small.get_or_insert(f64::NEG_INFINITY);
            *best = best.max(v.micro_f1);
        }
    }
    let global = global.expect("at least one trial succeeded");
    let Some(small) = small else {
        verdict(
            NAME,
            format!("no successful trial sampled d <= 128 in {n_ok} trials"),
            false,
        );
        return;
    };
    let gap = global - small;
    verdict(
        NAME,
        format!(
            "best val micro {global:.3} overall vs {small:.3} at d<=128 over {n_ok} trials; gap {gap:.3} (<=0.05)"
        ),
        gap <= 0.05,
    );
}

// --- criterion 8: property suite, always on ---

type Check = std::result::Result<String, String>;

fn tmp_graph(edges: &str, directed: bool) -> Graph {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("g.edges");
    std::fs::write(&path, edges).unwrap();
    let (graph, _) = load_edge_list(&path, directed, false).expect("tmp graph");
    graph
}

/// Two 6-cliques joined by one edge, nodes c0..c5 and d0..d5.
fn clique_pair() -> Graph {
    let mut edges = String::new();
    for (prefix, base) in [("c", 0), ("d", 6)] {
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push_str(&format!("{prefix}{} {prefix}{}\n", base + i, base + j));
            }
        }
    }
    edges.push_str("c0 d6\n");
    tmp_graph(&edges, false)
}

fn clique_pair_labels() -> LabelStore {
    let labels = (0..12).map(|i| vec![(i >= 6) as u32]).collect();
    LabelStore::from_parts(
        TaskKind::Binary,
        vec!["left".into(), "right".into()],
        labels,
    )
    .unwrap()
}

fn check_alias_exactness() -> Check {
    // reconstructed mass must equal the normalized input exactly
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut weights: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..10.0)).collect();
    weights[5] = 0.0;
    weights[40] = 0.0;
    let table = build_alias_table(&weights).map_err(|e| e.to_string())?;
    let total: f64 = weights.iter().sum();
    let mass = table.reconstructed_mass();
    let mut worst = 0.0f64;
    for (i, &w) in weights.iter().enumerate() {
        worst = worst.max((mass[i] - w / total).abs());
    }
    if worst > 1e-12 {
        return Err(format!("mass reconstruction off by {worst:.2e}"));
    }

    // zero-mass outcomes must never be drawn
    let t = build_alias_table(&[0.0, 3.0, 0.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..10_000 {
        if t.sample(&mut rng) != 1 {
            return Err("zero-weight outcome sampled".into());
        }
    }

    // empirical frequencies agree with (0.25, 0.25, 0.5)
    let t = build_alias_table(&[1.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let draws = 100_000;
    let mut counts = [0f64; 3];
    for _ in 0..draws {
        counts[t.sample(&mut rng)] += 1.0;
    }
    let mut chi2 = 0.0;
    for (o, p) in counts.iter().zip([0.25, 0.25, 0.5]) {
        let e = p * draws as f64;
        chi2 += (o - e).powi(2) / e;
    }
    // 99th percentile of chi-square with 2 dof
    if chi2 > 9.21 {
        return Err(format!("sampling chi2 {chi2:.2} exceeds 9.21"));
    }
    Ok(format!("mass err {worst:.1e}, chi2 {chi2:.2}"))
}

fn check_walk_bias() -> Check {
    // square with one diagonal: from node 1 arrived from node 0, the
    // step weights are 1/p back to 0, 1 to the shared neighbor 2, and
    // 1/q to the non-neighbor 3
    let graph = tmp_graph("0 1\n1 2\n1 3\n2 0\n", false);
    let (p, q) = (0.5, 2.0);
    let params = Node2vecParams {
        d: 8,
        p,
        q,
        num_walks: 600,
        walk_len: 20,
        window: 2,
        negatives: 1,
        epochs: 1,
        seed: 5,
        ..Node2vecParams::default()
    };
    let corpus = generate_walks(&graph, &params).map_err(|e| e.to_string())?;
    let at = |id: &str| graph.node_index(id).unwrap();
    let (n0, n1) = (at("0"), at("1"));
    let weight_to = |x: u32| -> f64 {
        if x == n0 {
            1.0 / p
        } else if graph.has_edge(n0 as usize, x) {
            1.0
        } else {
            1.0 / q
        }
    };
    let (nbrs, _) = graph.neighbors(n1 as usize);
    let z: f64 = nbrs.iter().map(|&x| weight_to(x)).sum();
    let mut counts: BTreeMap<u32, f64> = nbrs.iter().map(|&x| (x, 0.0)).collect();
    let mut total = 0usize;
    for walk in corpus.walks() {
        for w in walk.windows(3) {
            if w[0] == n0 && w[1] == n1 {
                *counts.get_mut(&w[2]).expect("step lands on a neighbor") += 1.0;
                total += 1;
            }
        }
    }
    if total < 500 {
        return Err(format!("only {total} conditioned transitions observed"));
    }
    let mut chi2 = 0.0;
    for (&x, &o) in &counts {
        let e = weight_to(x) / z * total as f64;
        chi2 += (o - e).powi(2) / e;
    }
    // 99th percentile of chi-square with 2 dof
    if chi2 > 9.21 {
        return Err(format!("bias chi2 {chi2:.2} exceeds 9.21 over {total} steps"));
    }
    Ok(format!("chi2 {chi2:.2} over {total} conditioned steps"))
}

fn check_gradients() -> Check {
    let checks: [(&str, fn() -> netemb::Result<f64>); 5] = [
        ("sgns", netemb::checks::sgns_pair_gradient_check),
        ("line-first", netemb::checks::line_first_order_gradient_check),
        ("line-second", netemb::checks::line_second_order_gradient_check),
        ("logreg", netemb::checks::logreg_gradient_check),
        ("autoencoder", netemb::checks::autoencoder_gradient_check),
    ];
    let mut worst = 0.0f64;
    for (name, f) in checks {
        let err = f().map_err(|e| format!("{name}: {e}"))?;
        if err > 1e-4 {
            return Err(format!("{name}: relative error {err:.2e} exceeds 1e-4"));
        }
        worst = worst.max(err);
    }
    Ok(format!("5 kernels, max relative error {worst:.1e}"))
}

fn check_f1_oracle() -> Check {
    // independent recount: one indicator pass per (row, label)
    fn oracle(n_labels: usize, truth: &[Vec<u32>], pred: &[Vec<u32>]) -> (f64, f64) {
        let mut label_f1 = Vec::new();
        let (mut tp_all, mut fp_all, mut fn_all) = (0f64, 0f64, 0f64);
        for l in 0..n_labels as u32 {
            let (mut tp, mut fp, mut fn_) = (0f64, 0f64, 0f64);
            for (t, p) in truth.iter().zip(pred) {
                match (t.contains(&l), p.contains(&l)) {
                    (true, true) => tp += 1.0,
                    (false, true) => fp += 1.0,
                    (true, false) => fn_ += 1.0,
                    (false, false) => {}
                }
            }
            let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
            label_f1.push(if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            });
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
        }
        let macro_f1 = label_f1.iter().sum::<f64>() / n_labels as f64;
        let denom = 2.0 * tp_all + fp_all + fn_all;
        let micro = if denom > 0.0 { 2.0 * tp_all / denom } else { 0.0 };
        (macro_f1, micro)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..200 {
        let n = rng.gen_range(1..40);
        let k = rng.gen_range(2..7usize);
        let random_set = |rng: &mut ChaCha8Rng| {
            let mut s: Vec<u32> = (0..k as u32).filter(|_| rng.gen_bool(0.4)).collect();
            if s.is_empty() {
                s.push(rng.gen_range(0..k as u32));
            }
            s
        };
        let truth: Vec<Vec<u32>> = (0..n).map(|_| random_set(&mut rng)).collect();
        let pred: Vec<Vec<u32>> = (0..n).map(|_| random_set(&mut rng)).collect();
        let got = f1_scores(k, &truth, &pred, TaskKind::Multilabel).map_err(|e| e.to_string())?;
        let (macro_want, micro_want) = oracle(k, &truth, &pred);
        if (got.macro_f1 - macro_want).abs() > 1e-12 || (got.micro_f1 - micro_want).abs() > 1e-12 {
            return Err(format!(
                "case {case}: macro {} vs {macro_want}, micro {} vs {micro_want}",
                got.macro_f1, got.micro_f1
            ));
        }
    }
    Ok("200 random confusion sets match".into())
}

fn check_micro_accuracy_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let n = rng.gen_range(1..80);
        let k = rng.gen_range(2..8u32);
        let truth: Vec<Vec<u32>> = (0..n).map(|_| vec![rng.gen_range(0..k)]).collect();
        let pred: Vec<Vec<u32>> = (0..n).map(|_| vec![rng.gen_range(0..k)]).collect();
        let got = f1_scores(k as usize, &truth, &pred, TaskKind::Multiclass)
            .map_err(|e| e.to_string())?;
        let correct = truth.iter().zip(&pred).filter(|(t, p)| t[0] == p[0]).count();
        let accuracy = correct as f64 / n as f64;
        if got.micro_f1 != accuracy {
            return Err(format!("micro {} != accuracy {accuracy}", got.micro_f1));
        }
    }
    Ok("bit-exact on 100 random single-label sets".into())
}

fn check_split_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for round in 0..10 {
        let sizes = [
            rng.gen_range(5..60usize),
            rng.gen_range(5..60),
            rng.gen_range(5..60),
        ];
        let n: usize = sizes.iter().sum();
        let mut labels = Vec::new();
        for (class, &count) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(vec![class as u32], count));
        }
        let store = LabelStore::from_parts(
            TaskKind::Multiclass,
            vec!["a".into(), "b".into(), "c".into()],
            labels,
        )
        .map_err(|e| e.to_string())?;
        let split = make_split(&store, FRACTIONS, true, round).map_err(|e| e.to_string())?;

        // disjoint and covering
        let mut all: Vec<usize> = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        let expect: Vec<usize> = (0..n).collect();
        if all != expect {
            return Err(format!("round {round}: parts are not a disjoint cover"));
        }
        // global sizes within one of the rounded targets
        for (part, f) in [
            (&split.train, 0.5f64),
            (&split.val, 0.25),
            (&split.test, 0.25),
        ] {
            let want = f * n as f64;
            if (part.len() as f64 - want).abs() > 1.0 {
                return Err(format!(
                    "round {round}: part size {} vs target {want:.1}",
                    part.len()
                ));
            }
        }
        // stratification: each class contributes its share to train, +-1
        for (class, &count) in sizes.iter().enumerate() {
            let in_train = split
                .train
                .iter()
                .filter(|&&node| store.labels_of(node)[0] as usize == class)
                .count();
            let want = 0.5 * count as f64;
            if (in_train as f64 - want).abs() > 1.0 {
                return Err(format!(
                    "round {round}: class {class} train share {in_train} vs {want:.1}"
                ));
            }
        }
    }
    Ok("10 random stores: cover, sizes +-1, class shares +-1".into())
}

fn check_isolation_counters() -> Check {
    let store = clique_pair_labels();
    let n = 12;
    let mut eye = DenseMatrix::zeros(n, n);
    for i in 0..n {
        eye.set(i, i, 1.0);
    }
    let emb = EmbeddingMatrix::from_dense(eye);
    let split = make_split(&store, FRACTIONS, true, 0).map_err(|e| e.to_string())?;

    store.reset_reads();
    evaluate(
        &emb,
        &store,
        &split,
        &logreg_spec(),
        EvalOn::Val,
        DecisionRule::TopKTrue,
        7,
    )
    .map_err(|e| e.to_string())?;
    let leaked: u64 = split.test.iter().map(|&node| store.reads(node)).sum();
    if leaked != 0 {
        return Err(format!(
            "validation run read test labels {leaked} times"
        ));
    }

    store.reset_reads();
    evaluate(
        &emb,
        &store,
        &split,
        &logreg_spec(),
        EvalOn::Test,
        DecisionRule::TopKTrue,
        7,
    )
    .map_err(|e| e.to_string())?;
    let read: u64 = split.test.iter().map(|&node| store.reads(node)).sum();
    if read == 0 {
        return Err("test run did not touch test labels (counter broken)".into());
    }
    Ok(format!(
        "val run: 0 test reads; test run: {read} reads"
    ))
}

fn check_byte_determinism() -> Check {
    let graph = clique_pair();
    let bits = |m: &EmbeddingMatrix| -> Vec<u64> {
        m.matrix().data().iter().map(|v| v.to_bits()).collect()
    };

    let n2v = Node2vecParams {
        d: 8,
        num_walks: 4,
        walk_len: 10,
        window: 3,
        negatives: 2,
        epochs: 2,
        seed: 9,
        ..Node2vecParams::default()
    };
    let a = node2vec_embed(&graph, &n2v, TrainMode::Deterministic).map_err(|e| e.to_string())?;
    let b = node2vec_embed(&graph, &n2v, TrainMode::Deterministic).map_err(|e| e.to_string())?;
    if bits(&a) != bits(&b) {
        return Err("node2vec reruns differ".into());
    }

    let lp = LineParams {
        d: 8,
        samples: 2000,
        seed: 9,
        ..LineParams::default()
    };
    let a = line_embed(&graph, &lp, TrainMode::Deterministic).map_err(|e| e.to_string())?;
    let b = line_embed(&graph, &lp, TrainMode::Deterministic).map_err(|e| e.to_string())?;
    if bits(&a) != bits(&b) {
        return Err("line reruns differ".into());
    }

    let gp = GraRepParams {
        d: 8,
        k_max: 2,
        ..GraRepParams::default()
    };
    let a = grarep_embed(&graph, &gp).map_err(|e| e.to_string())?;
    let b = grarep_embed(&graph, &gp).map_err(|e| e.to_string())?;
    if bits(&a) != bits(&b) {
        return Err("grarep reruns differ".into());
    }

    let dp = netemb::dngr::DngrParams {
        d: 6,
        layers: vec![10, 6],
        epochs: 3,
        ..netemb::dngr::DngrParams::default()
    };
    let a = netemb::dngr::dngr_embed(&graph, &dp).map_err(|e| e.to_string())?;
    let b = netemb::dngr::dngr_embed(&graph, &dp).map_err(|e| e.to_string())?;
    if bits(&a) != bits(&b) {
        return Err("dngr reruns differ".into());
    }

    // a whole search reruns to the same samples, scores, and winner
    let store = clique_pair_labels();
    let split = make_split(&store, FRACTIONS, true, 0).map_err(|e| e.to_string())?;
    let mut space = HyperSpace::default();
    space.set_embedding("d", netemb::search::ParamSpec::Choice(vec![ParamValue::Int(6)]));
    space.set_embedding("k_max", netemb::search::ParamSpec::UniformInt(1, 3));
    space.set_classifier("epochs", netemb::search::ParamSpec::UniformInt(30, 60));
    let run = || {
        run_search(
            &graph,
            &store,
            Method::GraRep,
            ClassifierKind::LogReg,
            &space,
            4,
            &split,
            3,
            TrainMode::Deterministic,
            DecisionRule::TopKTrue,
        )
    };
    let x = run().map_err(|e| e.to_string())?;
    let y = run().map_err(|e| e.to_string())?;
    if x.best.trial != y.best.trial
        || x.test.micro_f1.to_bits() != y.test.micro_f1.to_bits()
        || x.all.len() != y.all.len()
    {
        return Err("search reruns disagree on winner or test score".into());
    }
    for (r, s) in x.all.iter().zip(&y.all) {
        let score = |t: &netemb::search::TrialRecord| {
            t.validation
                .as_ref()
                .map(|v| (v.macro_f1.to_bits(), v.micro_f1.to_bits()))
        };
        if format!("{:?}", r.sample) != format!("{:?}", s.sample)
            || score(r) != score(s)
            || r.embed_seed != s.embed_seed
            || r.eval_seed != s.eval_seed
        {
            return Err(format!("search reruns diverge at trial {}", r.trial));
        }
    }
    Ok("4 embedders bit-stable; search rerun identical".into())
}

#[test]
fn c8_property_suite() {
    const NAME: &str = "c8-property-suite";
    let t0 = Instant::now();
    let checks: [(&str, fn() -> Check); 8] = [
        ("alias-exactness", check_alias_exactness),
        ("walk-bias", check_walk_bias),
        ("gradients", check_gradients),
        ("f1-oracle", check_f1_oracle),
        ("micro-accuracy", check_micro_accuracy_identity),
        ("split-bounds", check_split_bounds),
        ("isolation", check_isolation_counters),
        ("byte-determinism", check_byte_determinism),
    ];
    let mut failures = Vec::new();
    for (name, f) in checks {
        match f() {
            Ok(detail) => println!("  {name}: ok ({detail})"),
            Err(e) => {
                println!("  {name}: FAILED ({e})");
                failures.push(format!("{name}: {e}"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let over_budget = secs >= 120.0;
    let detail = if failures.is_empty() {
        format!("8 properties in {secs:.1}s (budget 120s)")
    } else {
        failures.join("; ")
    };
    verdict(NAME, detail, failures.is_empty() && !over_budget);
}
