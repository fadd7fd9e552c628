//! Alias-method sampling: O(n) build, O(1) draws from a fixed discrete
//! distribution.

use rand::Rng;

use crate::error::{Error, Result};

/// Alias table over `n` outcomes. Each cell holds a coin probability and
/// a fallback outcome; a draw picks a uniform cell, then flips its coin.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// Per-outcome mass implied by the table. Rebuilding the input
    /// distribution this way is how the construction is audited.
    pub fn reconstructed_mass(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut mass = vec![0.0; n];
        for i in 0..n {
            mass[i] += self.prob[i] / n as f64;
            mass[self.alias[i] as usize] += (1.0 - self.prob[i]) / n as f64;
        }
        mass
    }
}

/// Builds an alias table from unnormalized nonnegative weights.
pub fn build_alias_table(probs: &[f64]) -> Result<AliasTable> {
    if probs.is_empty() {
        return Err(Error::data("alias table: empty distribution"));
    }
    if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::data("alias table: negative or non-finite entry"));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::data("alias table: all entries are zero"));
    }

    let n = probs.len();
    // Scale so the average cell holds exactly 1.
    let mut scaled: Vec<f64> = probs.iter().map(|&p| p * n as f64 / total).collect();
    let mut prob = vec![0.0; n];
    let mut alias: Vec<u32> = (0..n as u32).collect();
    let mut small: Vec<u32> = Vec::new();
    let mut large: Vec<u32> = Vec::new();
    for (i, &s) in scaled.iter().enumerate() {
        if s < 1.0 {
            small.push(i as u32);
        } else {
            large.push(i as u32);
        }
    }
    while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
        prob[s as usize] = scaled[s as usize];
        alias[s as usize] = l;
        scaled[l as usize] -= 1.0 - scaled[s as usize];
        if scaled[l as usize] < 1.0 {
            small.push(l);
        } else {
            large.push(l);
        }
    }
    // Leftovers are full cells up to rounding.
    for i in small.into_iter().chain(large) {
        prob[i as usize] = 1.0;
    }
    Ok(AliasTable { prob, alias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_outcome_always_zero() {
        let t = build_alias_table(&[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut rng), 0);
        }
    }

    #[test]
    fn zero_mass_outcome_never_drawn() {
        let t = build_alias_table(&[0.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng), 1);
        }
    }

    #[test]
    fn empirical_frequencies_within_chi2_bound() {
        // target (0.25, 0.25, 0.5); chi-square 99th percentile at 2 dof
        let t = build_alias_table(&[1.0, 1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[t.sample(&mut rng)] += 1;
        }
        let expected = [0.25, 0.25, 0.5].map(|p| p * draws as f64);
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&o, e)| (o as f64 - e).powi(2) / e)
            .sum();
        assert!(chi2 <= 9.21, "chi2 = {chi2}");
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(build_alias_table(&[]).is_err());
        assert!(build_alias_table(&[0.0, 0.0]).is_err());
        assert!(build_alias_table(&[1.0, -0.5]).is_err());
        assert!(build_alias_table(&[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn mass_reconstruction_exact_for_small_tables(
            weights in proptest::collection::vec(0.0f64..10.0, 1..=16)
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 1e-6);
            let table = build_alias_table(&weights).unwrap();
            let total: f64 = weights.iter().sum();
            let mass = table.reconstructed_mass();
            for (i, &w) in weights.iter().enumerate() {
                prop_assert!(
                    (mass[i] - w / total).abs() <= 1e-12,
                    "outcome {} mass {} want {}", i, mass[i], w / total
                );
            }
        }
    }
}
