//! Run configuration: a JSON file mirroring the settings, with
//! command-line flags overriding individual keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use netemb::eval::DecisionRule;
use netemb::graph::TaskKind;
use netemb::search::{ClassifierKind, HyperSpace, Method, ParamSpec, ParamValue};
use netemb::{Error, TrainMode};
use serde::Deserialize;

use crate::{CliError, CliResult};

/// JSON config schema. Every key is optional; flags fill or override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<String>,
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub task: Option<String>,
    pub directed: Option<bool>,
    pub weighted: Option<bool>,
    /// "strict" (default) or "intersect": whether label lines naming
    /// nodes absent from the edge list are an error or are skipped.
    pub label_mode: Option<String>,
    pub method: Option<String>,
    pub classifier: Option<String>,
    pub fractions: Option<[f64; 3]>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub deterministic: Option<bool>,
    /// "top_k" or "threshold:<t>".
    pub rule: Option<String>,
    pub out_dir: Option<PathBuf>,
    /// Explicit embedding parameters for embed/evaluate/sweep.
    pub params: Option<BTreeMap<String, serde_json::Value>>,
    pub classifier_params: Option<BTreeMap<String, serde_json::Value>>,
    /// Training-fraction list for the sweep command.
    pub sweep_fractions: Option<Vec<f64>>,
    /// Search-space overrides keyed by parameter name.
    pub space: Option<SpaceOverrides>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceOverrides {
    pub embedding: Option<BTreeMap<String, SpecJson>>,
    pub classifier: Option<BTreeMap<String, SpecJson>>,
}

/// One parameter distribution in JSON, e.g. {"uniform_int": [16, 256]}
/// or {"choice": [0.5, 1.0, "both"]}.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecJson {
    UniformInt([i64; 2]),
    UniformReal([f64; 2]),
    LogUniform([f64; 2]),
    Choice(Vec<serde_json::Value>),
}

impl SpecJson {
    fn to_spec(&self, name: &str) -> CliResult<ParamSpec> {
        Ok(match self {
            SpecJson::UniformInt([lo, hi]) => ParamSpec::UniformInt(*lo, *hi),
            SpecJson::UniformReal([lo, hi]) => ParamSpec::UniformReal(*lo, *hi),
            SpecJson::LogUniform([lo, hi]) => ParamSpec::LogUniform(*lo, *hi),
            SpecJson::Choice(vals) => {
                let vals = vals
                    .iter()
                    .map(|v| json_param_value(name, v))
                    .collect::<CliResult<Vec<_>>>()?;
                ParamSpec::Choice(vals)
            }
        })
    }
}

pub fn load_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Core(Error::io(path, e)))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Core(Error::data(format!("{}: {e}", path.display()))))
}

fn json_param_value(name: &str, v: &serde_json::Value) -> CliResult<ParamValue> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(ParamValue::Int(i))
            } else {
                Ok(ParamValue::Real(n.as_f64().unwrap_or(f64::NAN)))
            }
        }
        serde_json::Value::String(s) => Ok(ParamValue::Str(s.clone())),
        other => Err(CliError::Core(Error::data(format!(
            "parameter '{name}': expected a number or string, got {other}"
        )))),
    }
}

/// Parse a command-line `name=value` pair; integers, then reals, then
/// bare strings.
pub fn parse_param_flag(s: &str) -> CliResult<(String, ParamValue)> {
    let Some((name, value)) = s.split_once('=') else {
        return Err(CliError::Usage(format!(
            "--param needs name=value, got '{s}'"
        )));
    };
    let v = if let Ok(i) = value.parse::<i64>() {
        ParamValue::Int(i)
    } else if let Ok(r) = value.parse::<f64>() {
        ParamValue::Real(r)
    } else {
        ParamValue::Str(value.to_string())
    };
    Ok((name.to_string(), v))
}

pub fn parse_rule(s: &str) -> CliResult<DecisionRule> {
    if s == "top_k" {
        return Ok(DecisionRule::TopKTrue);
    }
    if let Some(t) = s.strip_prefix("threshold:") {
        let t: f64 = t
            .parse()
            .map_err(|_| CliError::Usage(format!("bad threshold in rule '{s}'")))?;
        return Ok(DecisionRule::Threshold(t));
    }
    Err(CliError::Usage(format!(
        "unknown rule '{s}' (expected top_k or threshold:<t>)"
    )))
}

/// Fully resolved settings for one command run.
pub struct Settings {
    pub dataset: String,
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub task: Option<TaskKind>,
    pub directed: bool,
    pub weighted: bool,
    pub intersect_labels: bool,
    pub method: Option<Method>,
    pub classifier: Option<ClassifierKind>,
    pub fractions: (f64, f64, f64),
    pub trials: usize,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub deterministic: bool,
    pub rule: DecisionRule,
    pub out_dir: PathBuf,
    pub params: Vec<(String, ParamValue)>,
    pub classifier_params: Vec<(String, ParamValue)>,
    pub sweep_fractions: Vec<f64>,
    space: Option<SpaceOverrides>,
}

impl Settings {
    pub fn mode(&self) -> TrainMode {
        if self.deterministic {
            TrainMode::Deterministic
        } else {
            TrainMode::Parallel
        }
    }

    pub fn require_edges(&self) -> CliResult<&Path> {
        self.edges
            .as_deref()
            .ok_or_else(|| CliError::Usage("no edge list given (--edges or config)".into()))
    }

    pub fn require_labels(&self) -> CliResult<(&Path, TaskKind)> {
        let path = self
            .labels
            .as_deref()
            .ok_or_else(|| CliError::Usage("no label file given (--labels or config)".into()))?;
        let task = self
            .task
            .ok_or_else(|| CliError::Usage("no task kind given (--task or config)".into()))?;
        Ok((path, task))
    }

    pub fn require_method(&self) -> CliResult<Method> {
        self.method
            .ok_or_else(|| CliError::Usage("no method given (--method or config)".into()))
    }

    pub fn require_classifier(&self) -> CliResult<ClassifierKind> {
        self.classifier
            .ok_or_else(|| CliError::Usage("no classifier given (--classifier or config)".into()))
    }

    /// Default space for the method and classifier with any configured
    /// overrides applied on top.
    pub fn space(
        &self,
        method: Method,
        classifier: ClassifierKind,
        graph: &netemb::graph::Graph,
    ) -> CliResult<HyperSpace> {
        let mut space = HyperSpace::defaults(method, classifier, graph);
        if let Some(over) = &self.space {
            for (name, spec) in over.embedding.iter().flatten() {
                space.set_embedding(name, spec.to_spec(name)?);
            }
            for (name, spec) in over.classifier.iter().flatten() {
                space.set_classifier(name, spec.to_spec(name)?);
            }
        }
        space.validate().map_err(CliError::Core)?;
        Ok(space)
    }
}

/// Flag values that can override config keys; mirrors `FileConfig`.
#[derive(Debug, Default)]
pub struct Overrides {
    pub dataset: Option<String>,
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub task: Option<TaskKind>,
    pub directed: Option<bool>,
    pub weighted: Option<bool>,
    pub label_mode: Option<String>,
    pub method: Option<Method>,
    pub classifier: Option<ClassifierKind>,
    pub fractions: Option<String>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub deterministic: Option<bool>,
    pub rule: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub params: Vec<String>,
    pub classifier_params: Vec<String>,
}

fn parse_fractions_flag(s: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad fractions '{s}'")))?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(CliError::Usage(format!(
            "fractions need three comma-separated values, got '{s}'"
        ))),
    }
}

fn merge_params(
    base: Option<&BTreeMap<String, serde_json::Value>>,
    flags: &[String],
    kind: &str,
) -> CliResult<Vec<(String, ParamValue)>> {
    let mut out: Vec<(String, ParamValue)> = Vec::new();
    for (name, v) in base.into_iter().flatten() {
        out.push((name.clone(), json_param_value(name, v)?));
    }
    for flag in flags {
        let (name, v) = parse_param_flag(flag)
            .map_err(|e| match e {
                CliError::Usage(m) => CliError::Usage(m.replace("--param", kind)),
                other => other,
            })?;
        match out.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = v,
            None => out.push((name, v)),
        }
    }
    Ok(out)
}

/// Merge config-file values and flag overrides into final settings.
pub fn resolve(file: FileConfig, flags: Overrides) -> CliResult<Settings> {
    let task = match (flags.task, &file.task) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(s.parse().map_err(CliError::Core)?),
        (None, None) => None,
    };
    let method = match (flags.method, &file.method) {
        (Some(m), _) => Some(m),
        (None, Some(s)) => Some(s.parse().map_err(CliError::Core)?),
        (None, None) => None,
    };
    let classifier = match (flags.classifier, &file.classifier) {
        (Some(c), _) => Some(c),
        (None, Some(s)) => Some(s.parse().map_err(CliError::Core)?),
        (None, None) => None,
    };
    let fractions = match (&flags.fractions, file.fractions) {
        (Some(s), _) => parse_fractions_flag(s)?,
        (None, Some(f)) => f,
        (None, None) => [0.5, 0.25, 0.25],
    };
    let label_mode = flags
        .label_mode
        .or(file.label_mode)
        .unwrap_or_else(|| "strict".to_string());
    let intersect_labels = match label_mode.as_str() {
        "strict" => false,
        "intersect" => true,
        other => {
            return Err(CliError::Usage(format!(
                "unknown label mode '{other}' (expected strict or intersect)"
            )))
        }
    };
    let rule = parse_rule(
        flags
            .rule
            .or(file.rule)
            .unwrap_or_else(|| "top_k".to_string())
            .as_str(),
    )?;
    let edges = flags.edges.or(file.edges);
    let dataset = flags.dataset.or(file.dataset).unwrap_or_else(|| {
        edges
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });
    let trials = flags.trials.or(file.trials).unwrap_or(25);
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    Ok(Settings {
        dataset,
        edges,
        labels: flags.labels.or(file.labels),
        task,
        directed: flags.directed.or(file.directed).unwrap_or(false),
        weighted: flags.weighted.or(file.weighted).unwrap_or(false),
        intersect_labels,
        method,
        classifier,
        fractions: (fractions[0], fractions[1], fractions[2]),
        trials,
        master_seed: flags.master_seed.or(file.master_seed).unwrap_or(0),
        workers: flags.workers.or(file.workers),
        deterministic: flags.deterministic.or(file.deterministic).unwrap_or(true),
        rule,
        out_dir: flags
            .out_dir
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        params: merge_params(file.params.as_ref(), &flags.params, "--param")?,
        classifier_params: merge_params(
            file.classifier_params.as_ref(),
            &flags.classifier_params,
            "--classifier-param",
        )?,
        sweep_fractions: file
            .sweep_fractions
            .unwrap_or_else(|| (1..=10).map(|i| i as f64 / 10.0).collect()),
        space: file.space,
    })
}
