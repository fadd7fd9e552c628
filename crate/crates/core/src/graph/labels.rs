//! Per-node label storage with read counters for leak auditing.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use super::Graph;
use crate::error::{Error, Result};

/// Shape of the downstream classification task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Exactly two classes, one label per labeled node.
    Binary,
    /// One label per labeled node.
    Multiclass,
    /// At least one label per labeled node.
    Multilabel,
}

impl TaskKind {
    pub fn single_label(self) -> bool {
        !matches!(self, TaskKind::Multilabel)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Binary => "binary",
            TaskKind::Multiclass => "multiclass",
            TaskKind::Multilabel => "multilabel",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TaskKind::Binary),
            "multiclass" => Ok(TaskKind::Multiclass),
            "multilabel" => Ok(TaskKind::Multilabel),
            other => Err(Error::data(format!(
                "unknown task '{other}' (expected binary, multiclass, or multilabel)"
            ))),
        }
    }
}

/// Label sets per node, plus an audit trail of which nodes' labels were
/// actually read. The counters let tests prove that training never
/// touches held-out labels: reset after splitting, train, then assert the
/// held-out counters are still zero.
#[derive(Debug)]
pub struct LabelStore {
    task: TaskKind,
    vocab: Vec<String>,
    labels: Vec<Vec<u32>>,
    reads: Vec<AtomicU64>,
}

/// Counts reported by the lenient loader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelLoadStats {
    /// Label lines whose node exists in the graph.
    pub labeled_nodes: usize,
    /// Label lines skipped because the node is absent from the graph.
    pub unknown_ids_skipped: usize,
    /// Graph nodes with no label line.
    pub unlabeled_nodes: usize,
}

impl LabelStore {
    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn n_labels(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn label_name(&self, label: u32) -> &str {
        &self.vocab[label as usize]
    }

    /// Label indices of `node`, sorted ascending; empty means unlabeled.
    /// Every call is counted against `node` for leak auditing.
    pub fn labels_of(&self, node: usize) -> &[u32] {
        self.reads[node].fetch_add(1, Ordering::Relaxed);
        &self.labels[node]
    }

    /// Whether `node` has any label. Not counted: availability is split
    /// metadata, not label content.
    pub fn is_labeled(&self, node: usize) -> bool {
        !self.labels[node].is_empty()
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&n| self.is_labeled(n)).collect()
    }

    pub fn reads(&self, node: usize) -> u64 {
        self.reads[node].load(Ordering::Relaxed)
    }

    pub fn reset_reads(&self) {
        for c in &self.reads {
            c.store(0, Ordering::Relaxed);
        }
    }

    /// Build a store directly; used by tests and synthetic benchmarks.
    /// `labels` must have one entry per node; indices must fit the vocab.
    pub fn from_parts(task: TaskKind, vocab: Vec<String>, labels: Vec<Vec<u32>>) -> Result<Self> {
        let n_vocab = vocab.len() as u32;
        let mut labels = labels;
        for set in &mut labels {
            set.sort_unstable();
            set.dedup();
            if set.iter().any(|&l| l >= n_vocab) {
                return Err(Error::data("label index out of vocab range"));
            }
        }
        let store = LabelStore {
            task,
            vocab,
            reads: (0..labels.len()).map(|_| AtomicU64::new(0)).collect(),
            labels,
        };
        store.validate()?;
        Ok(store)
    }

    fn validate(&self) -> Result<()> {
        for (node, set) in self.labels.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            if self.task.single_label() && set.len() > 1 {
                return Err(Error::data(format!(
                    "node {node}: {} labels in a single-label task",
                    set.len()
                )));
            }
        }
        if self.task == TaskKind::Binary && self.vocab.len() != 2 {
            return Err(Error::data(format!(
                "binary task needs exactly 2 classes, found {}",
                self.vocab.len()
            )));
        }
        Ok(())
    }
}

/// Loads "node_id label[,label...]" lines. Vocab order is first
/// appearance; graph nodes absent from the file stay unlabeled. Unknown
/// node IDs are an error.
pub fn load_labels(path: impl AsRef<Path>, graph: &Graph, task: TaskKind) -> Result<LabelStore> {
    let (store, stats) = load_impl(path.as_ref(), graph, task, true)?;
    debug_assert_eq!(stats.unknown_ids_skipped, 0);
    Ok(store)
}

/// Like `load_labels` but skips label lines whose node ID is not in the
/// graph, reporting how many were dropped. For datasets where the edge
/// list and label file cover different node sets, the usable population
/// is their intersection.
pub fn load_labels_intersect(
    path: impl AsRef<Path>,
    graph: &Graph,
    task: TaskKind,
) -> Result<(LabelStore, LabelLoadStats)> {
    load_impl(path.as_ref(), graph, task, false)
}

fn load_impl(
    path: &Path,
    graph: &Graph,
    task: TaskKind,
    strict: bool,
) -> Result<(LabelStore, LabelLoadStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut vocab: Vec<String> = Vec::new();
    let mut vocab_index: HashMap<String, u32> = HashMap::new();
    let mut labels: Vec<Vec<u32>> = vec![Vec::new(); graph.n_nodes()];
    let mut labeled = 0usize;
    let mut skipped = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(id), Some(label_field)) = (tokens.next(), tokens.next()) else {
            return Err(Error::parse(path, lineno, "expected \"node_id label[,label...]\""));
        };
        let mut parsed: Vec<u32> = Vec::new();
        for tok in label_field.split(',') {
            if tok.is_empty() {
                return Err(Error::parse(path, lineno, "empty label token"));
            }
            let idx = *vocab_index.entry(tok.to_string()).or_insert_with(|| {
                vocab.push(tok.to_string());
                (vocab.len() - 1) as u32
            });
            parsed.push(idx);
        }
        parsed.sort_unstable();
        parsed.dedup();
        if task.single_label() && parsed.len() > 1 {
            return Err(Error::parse(
                path,
                lineno,
                format!("{} labels for one node in a single-label task", parsed.len()),
            ));
        }
        let Some(node) = graph.node_index(id) else {
            if strict {
                return Err(Error::parse(path, lineno, format!("unknown node ID {id:?}")));
            }
            skipped += 1;
            continue;
        };
        let slot = &mut labels[node as usize];
        if slot.is_empty() {
            labeled += 1;
        }
        for l in parsed {
            if !slot.contains(&l) {
                slot.push(l);
            }
        }
        slot.sort_unstable();
        if task.single_label() && slot.len() > 1 {
            return Err(Error::parse(
                path,
                lineno,
                format!("node {id:?} relabeled with a different class"),
            ));
        }
    }

    let stats = LabelLoadStats {
        labeled_nodes: labeled,
        unknown_ids_skipped: skipped,
        unlabeled_nodes: graph.n_nodes() - labeled,
    };
    let store = LabelStore {
        task,
        vocab,
        reads: (0..labels.len()).map(|_| AtomicU64::new(0)).collect(),
        labels,
    };
    store.validate()?;
    Ok((store, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;
    use std::io::Write as _;

    fn graph_ab_c() -> Graph {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"a b\nb c\n").unwrap();
        load_edge_list(f.path(), false, false).unwrap().0
    }

    fn labels_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_class_store() {
        let g = graph_ab_c();
        let f = labels_file("a x\nb x\n");
        let store = load_labels(f.path(), &g, TaskKind::Multiclass).unwrap();
        assert_eq!(store.vocab(), &["x".to_string()]);
        assert_eq!(store.labels_of(0), &[0]);
        assert_eq!(store.labels_of(1), &[0]);
        assert!(!store.is_labeled(2));
    }

    #[test]
    fn multilabel_line_parsed_as_set() {
        let g = graph_ab_c();
        let f = labels_file("a x,y\n");
        let store = load_labels(f.path(), &g, TaskKind::Multilabel).unwrap();
        assert_eq!(store.labels_of(0), &[0, 1]);
        assert_eq!(store.n_labels(), 2);
    }

    #[test]
    fn unknown_id_is_error_in_strict_mode() {
        let g = graph_ab_c();
        let f = labels_file("zzz x\n");
        let err = load_labels(f.path(), &g, TaskKind::Multiclass).unwrap_err();
        assert!(err.to_string().contains("zzz"), "{err}");
    }

    #[test]
    fn intersect_mode_skips_and_counts() {
        let g = graph_ab_c();
        let f = labels_file("a x\nzzz x\nqqq y\n");
        let (store, stats) = load_labels_intersect(f.path(), &g, TaskKind::Multiclass).unwrap();
        assert_eq!(stats.unknown_ids_skipped, 2);
        assert_eq!(stats.labeled_nodes, 1);
        assert_eq!(stats.unlabeled_nodes, 2);
        // vocab keeps first-appearance order even for skipped lines
        assert_eq!(store.n_labels(), 2);
    }

    #[test]
    fn multiclass_rejects_multiple_labels() {
        let g = graph_ab_c();
        let f = labels_file("a x,y\n");
        assert!(load_labels(f.path(), &g, TaskKind::Multiclass).is_err());
        let f2 = labels_file("a x\na y\n");
        assert!(load_labels(f2.path(), &g, TaskKind::Multiclass).is_err());
    }

    #[test]
    fn empty_label_token_rejected() {
        let g = graph_ab_c();
        for bad in ["a x,,y\n", "a ,x\n", "a x,\n"] {
            let f = labels_file(bad);
            assert!(load_labels(f.path(), &g, TaskKind::Multilabel).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn binary_requires_two_classes() {
        let g = graph_ab_c();
        let f = labels_file("a x\nb x\n");
        assert!(load_labels(f.path(), &g, TaskKind::Binary).is_err());
        let f2 = labels_file("a x\nb y\n");
        assert!(load_labels(f2.path(), &g, TaskKind::Binary).is_ok());
    }

    #[test]
    fn read_counters_track_label_access() {
        let g = graph_ab_c();
        let f = labels_file("a x\nb y\n");
        let store = load_labels(f.path(), &g, TaskKind::Multiclass).unwrap();
        assert_eq!(store.reads(0), 0);
        store.labels_of(0);
        store.labels_of(0);
        assert_eq!(store.reads(0), 2);
        assert_eq!(store.reads(1), 0);
        store.reset_reads();
        assert_eq!(store.reads(0), 0);
    }

    #[test]
    fn duplicate_same_label_lines_tolerated() {
        let g = graph_ab_c();
        let f = labels_file("a x\na x\n");
        let store = load_labels(f.path(), &g, TaskKind::Multiclass).unwrap();
        assert_eq!(store.labels_of(0), &[0]);
    }
}
