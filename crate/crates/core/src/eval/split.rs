//! Train/validation/test splits over labeled nodes, stratified for
//! single-label tasks.

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::LabelStore;
use crate::seeds::derive_seed;

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl Split {
    pub fn n_labeled(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

const SALT_SPLIT: u64 = 50;
/// Classes smaller than this cannot be stratified three ways.
const MIN_STRATIFIED_CLASS: usize = 3;

/// Largest-remainder apportionment of `total` into three parts.
fn apportion(total: usize, fractions: (f64, f64, f64)) -> [usize; 3] {
    let f = [fractions.0, fractions.1, fractions.2];
    let mut sizes = [0usize; 3];
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(3);
    let mut assigned = 0;
    for i in 0..3 {
        let ideal = f[i] * total as f64;
        sizes[i] = ideal.floor() as usize;
        assigned += sizes[i];
        remainders.push((ideal - ideal.floor(), i));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for k in 0..(total - assigned) {
        sizes[remainders[k].1] += 1;
    }
    sizes
}

/// Deterministic split of the labeled nodes. Stratified mode preserves
/// per-class proportions within one node per class for single-label
/// tasks; classes under 3 members fall back to random placement with a
/// warning. Multi-label tasks always split randomly.
pub fn make_split(
    labels: &LabelStore,
    fractions: (f64, f64, f64),
    stratified: bool,
    seed: u64,
) -> Result<Split> {
    let (ft, fv, fs) = fractions;
    if ft <= 0.0 || fv <= 0.0 || fs <= 0.0 {
        return Err(Error::data("split: fractions must all be positive"));
    }
    if ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::data(format!(
            "split: fractions sum to {}, expected 1",
            ft + fv + fs
        )));
    }
    let labeled = labels.labeled_nodes();
    if labeled.is_empty() {
        return Err(Error::data("split: no labeled nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SALT_SPLIT]));
    let targets = apportion(labeled.len(), fractions);
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    let stratify = stratified && labels.task().single_label();
    if stratify {
        // group nodes by class, in stable node order
        let n_classes = labels.n_labels();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for &node in &labeled {
            by_class[labels.labels_of(node)[0] as usize].push(node);
        }
        let mut pool: Vec<usize> = Vec::new();
        let mut small_classes = 0usize;
        let mut need = targets;
        // per-class floors first, extras placed by largest remainder
        // into splits that still have global capacity
        struct ClassAlloc {
            members: Vec<usize>,
            counts: [usize; 3],
            remainders: [f64; 3],
        }
        let mut allocs: Vec<ClassAlloc> = Vec::new();
        for members in by_class {
            if members.is_empty() {
                continue;
            }
            if members.len() < MIN_STRATIFIED_CLASS {
                small_classes += 1;
                pool.extend(members);
                continue;
            }
            let m = members.len() as f64;
            let ideal = [ft * m, fv * m, fs * m];
            let counts = [
                ideal[0].floor() as usize,
                ideal[1].floor() as usize,
                ideal[2].floor() as usize,
            ];
            let remainders = [
                ideal[0] - ideal[0].floor(),
                ideal[1] - ideal[1].floor(),
                ideal[2] - ideal[2].floor(),
            ];
            allocs.push(ClassAlloc {
                members,
                counts,
                remainders,
            });
        }
        for a in &allocs {
            for s in 0..3 {
                need[s] = need[s].saturating_sub(a.counts[s]);
            }
        }
        // distribute per-class leftovers: highest remainder first, into
        // splits with remaining need, one extra per class per split
        let mut leftovers: Vec<(f64, usize, usize)> = Vec::new(); // (remainder, class, split)
        for (ci, a) in allocs.iter().enumerate() {
            for s in 0..3 {
                leftovers.push((a.remainders[s], ci, s));
            }
        }
        leftovers.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        for &(_, ci, s) in &leftovers {
            let a = &mut allocs[ci];
            let unplaced = a.members.len() - (a.counts[0] + a.counts[1] + a.counts[2]);
            if unplaced == 0 || need[s] == 0 {
                continue;
            }
            a.counts[s] += 1;
            need[s] -= 1;
        }
        for a in &mut allocs {
            a.members.shuffle(&mut rng);
            let mut at = 0;
            for s in 0..3 {
                parts[s].extend(&a.members[at..at + a.counts[s]]);
                at += a.counts[s];
            }
            // a class can keep unplaced members when every split it
            // wanted was already full; they join the random pool
            pool.extend(&a.members[at..]);
        }
        if small_classes > 0 {
            warn!(
                "{small_classes} class(es) have fewer than {MIN_STRATIFIED_CLASS} members; placing their nodes randomly"
            );
        }
        pool.shuffle(&mut rng);
        for node in pool {
            let s = (0..3)
                .max_by_key(|&s| (need[s], std::cmp::Reverse(s)))
                .unwrap();
            parts[s].push(node);
            need[s] = need[s].saturating_sub(1);
        }
    } else {
        let mut order = labeled;
        order.shuffle(&mut rng);
        let mut at = 0;
        for s in 0..3 {
            parts[s].extend(&order[at..at + targets[s]]);
            at += targets[s];
        }
    }

    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(Split {
        train,
        val,
        test,
        fractions,
        seed,
    })
}
