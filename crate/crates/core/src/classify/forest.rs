//! Random forest of CART trees: Gini splits, bootstrap resampling,
//! per-node feature subsampling, binary relevance for multi-label tasks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{LabelStore, TaskKind};
use crate::numerics::DenseMatrix;
use crate::seeds::derive_seed;

#[derive(Debug, Clone)]
pub struct ForestParams {
    pub n_trees: usize,
    /// None = unlimited depth.
    pub max_depth: Option<usize>,
    /// Features tried per node; None = floor(sqrt(d)), at least 1.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            mtry: None,
            min_leaf: 1,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::data("forest: n_trees must be at least 1"));
        }
        if self.min_leaf < 1 {
            return Err(Error::data("forest: min_leaf must be at least 1"));
        }
        if self.mtry == Some(0) {
            return Err(Error::data("forest: mtry must be at least 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::data("forest: max_depth must be at least 1"));
        }
        Ok(())
    }
}

const SALT_TREE: u64 = 40;

#[derive(Debug, Clone)]
pub(crate) enum TreeNode {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Class distribution at the leaf, sums to 1.
        dist: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub(crate) nodes: Vec<TreeNode>,
}

impl Tree {
    /// Leaf distribution reached by a feature row.
    fn leaf_dist(&self, row: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { dist } => return dist,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

struct ForestGroup {
    trees: Vec<Tree>,
    /// Bootstrap draw per tree: positions into the training row slice.
    in_bag: Vec<Vec<u32>>,
}

pub struct ForestModel {
    task: TaskKind,
    n_vocab: usize,
    groups: Vec<ForestGroup>,
}

impl ForestModel {
    pub fn n_vocab(&self) -> usize {
        self.n_vocab
    }

    pub fn n_trees(&self) -> usize {
        self.groups[0].trees.len()
    }

    /// Bootstrap positions (into the training `rows` slice) for one tree.
    pub fn in_bag(&self, group: usize, tree: usize) -> &[u32] {
        &self.groups[group].in_bag[tree]
    }

    #[cfg(test)]
    pub(crate) fn tree(&self, group: usize, tree: usize) -> &Tree {
        &self.groups[group].trees[tree]
    }
}

/// Per-position class targets for one group: the label index for
/// single-label tasks, membership (0/1) of one label for multi-label.
fn group_targets(labels: &LabelStore, rows: &[usize], group: usize) -> Vec<u32> {
    if labels.task().single_label() {
        rows.iter().map(|&r| labels.labels_of(r)[0]).collect()
    } else {
        rows.iter()
            .map(|&r| u32::from(labels.labels_of(r).contains(&(group as u32))))
            .collect()
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c / total).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    x: &'a DenseMatrix,
    rows: &'a [usize],
    targets: &'a [u32],
    n_classes: usize,
    mtry: usize,
    max_depth: usize,
    min_leaf: usize,
}

impl TreeBuilder<'_> {
    /// `members` holds positions into the bootstrap multiset.
    fn build(&self, boot: &[u32], rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let members: Vec<u32> = (0..boot.len() as u32).collect();
        let mut feat_scratch: Vec<u32> = (0..self.x.cols() as u32).collect();
        self.grow(boot, members, 0, &mut nodes, &mut feat_scratch, rng);
        Tree { nodes }
    }

    fn leaf(&self, boot: &[u32], members: &[u32], nodes: &mut Vec<TreeNode>) -> u32 {
        let mut counts = vec![0.0; self.n_classes];
        for &m in members {
            counts[self.targets[boot[m as usize] as usize] as usize] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        for c in counts.iter_mut() {
            *c /= total;
        }
        nodes.push(TreeNode::Leaf { dist: counts });
        (nodes.len() - 1) as u32
    }

    fn grow(
        &self,
        boot: &[u32],
        members: Vec<u32>,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
        feat_scratch: &mut [u32],
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        let mut counts = vec![0.0; self.n_classes];
        for &m in &members {
            counts[self.targets[boot[m as usize] as usize] as usize] += 1.0;
        }
        let total = members.len() as f64;
        let pure = counts.iter().any(|&c| c == total);
        if pure || depth >= self.max_depth || members.len() < 2 * self.min_leaf {
            return self.leaf(boot, &members, nodes);
        }

        // sample mtry distinct features by partial Fisher-Yates
        for i in 0..self.mtry.min(feat_scratch.len()) {
            let j = rng.gen_range(i..feat_scratch.len());
            feat_scratch.swap(i, j);
        }
        let chosen = &feat_scratch[..self.mtry.min(feat_scratch.len())];

        let mut best: Option<(f64, u32, f64)> = None; // (impurity, feature, threshold)
        let mut sorted: Vec<(f64, u32)> = Vec::with_capacity(members.len());
        for &f in chosen {
            sorted.clear();
            for &m in &members {
                let row = self.rows[boot[m as usize] as usize];
                sorted.push((self.x.get(row, f as usize), self.targets[boot[m as usize] as usize]));
            }
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

            let mut left = vec![0.0; self.n_classes];
            let mut right = counts.clone();
            for i in 0..sorted.len() - 1 {
                left[sorted[i].1 as usize] += 1.0;
                right[sorted[i].1 as usize] -= 1.0;
                let nl = (i + 1) as f64;
                let nr = total - nl;
                if (i + 1) < self.min_leaf || (sorted.len() - i - 1) < self.min_leaf {
                    continue;
                }
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let imp = nl / total * gini(&left, nl) + nr / total * gini(&right, nr);
                if best.is_none() || imp < best.unwrap().0 {
                    let threshold = sorted[i].0 + (sorted[i + 1].0 - sorted[i].0) / 2.0;
                    best = Some((imp, f, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.leaf(boot, &members, nodes);
        };
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = members.iter().partition(|&&m| {
            let row = self.rows[boot[m as usize] as usize];
            self.x.get(row, feature as usize) <= threshold
        });
        nodes.push(TreeNode::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let at = nodes.len() - 1;
        let left = self.grow(boot, left_rows, depth + 1, nodes, feat_scratch, rng);
        let right = self.grow(boot, right_rows, depth + 1, nodes, feat_scratch, rng);
        let TreeNode::Split {
            left: l, right: r, ..
        } = &mut nodes[at]
        else {
            unreachable!("node at is a split");
        };
        *l = left;
        *r = right;
        at as u32
    }
}

/// Train one forest per label for multi-label tasks, otherwise a single
/// multiclass forest. Each tree is fully determined by (seed, group,
/// tree index).
pub fn train_random_forest(
    x: &DenseMatrix,
    labels: &LabelStore,
    rows: &[usize],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::data("forest: no training rows"));
    }
    if let Some(mtry) = params.mtry {
        if mtry > x.cols() {
            return Err(Error::data(format!(
                "forest: mtry {mtry} exceeds feature count {}",
                x.cols()
            )));
        }
    }
    let task = labels.task();
    let n_vocab = labels.n_labels();
    let n_groups = if task.single_label() { 1 } else { n_vocab };
    let mtry = params
        .mtry
        .unwrap_or_else(|| (x.cols() as f64).sqrt().floor() as usize)
        .max(1);

    let groups: Vec<ForestGroup> = (0..n_groups)
        .map(|g| {
            let targets = group_targets(labels, rows, g);
            let n_classes = if task.single_label() { n_vocab } else { 2 };
            let builder = TreeBuilder {
                x,
                rows,
                targets: &targets,
                n_classes,
                mtry,
                max_depth: params.max_depth.unwrap_or(usize::MAX),
                min_leaf: params.min_leaf,
            };
            let built: Vec<(Tree, Vec<u32>)> = (0..params.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        seed,
                        &[SALT_TREE, g as u64, t as u64],
                    ));
                    let boot: Vec<u32> = (0..rows.len())
                        .map(|_| rng.gen_range(0..rows.len()) as u32)
                        .collect();
                    let tree = builder.build(&boot, &mut rng);
                    (tree, boot)
                })
                .collect();
            let (trees, in_bag) = built.into_iter().unzip();
            ForestGroup { trees, in_bag }
        })
        .collect();

    Ok(ForestModel {
        task,
        n_vocab,
        groups,
    })
}

/// Mean of leaf distributions across trees: `n_vocab` columns. For
/// multi-label models column l is the positive-class probability of
/// label l's forest.
pub fn forest_predict_proba(model: &ForestModel, x: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows.len(), model.n_vocab);
    for (i, &node) in rows.iter().enumerate() {
        let row = x.row(node);
        if model.task.single_label() {
            let group = &model.groups[0];
            let acc = out.row_mut(i);
            for tree in &group.trees {
                for (c, &p) in tree.leaf_dist(row).iter().enumerate() {
                    acc[c] += p;
                }
            }
            let nt = group.trees.len() as f64;
            for v in acc.iter_mut() {
                *v /= nt;
            }
        } else {
            for (l, group) in model.groups.iter().enumerate() {
                let mean: f64 = group
                    .trees
                    .iter()
                    .map(|t| t.leaf_dist(row)[1])
                    .sum::<f64>()
                    / group.trees.len() as f64;
                out.set(i, l, mean);
            }
        }
    }
    out
}
