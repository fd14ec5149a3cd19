//! Monte Carlo check of the majority-vote argument: with `k` independent
//! queries each answered correctly with probability `p`, how often is a
//! strict majority correct?

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AqsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajoritySimConfig {
    pub success_prob: f64,
    pub queries_per_doc: usize,
    pub trials: usize,
    pub rng_seed: u64,
}

impl MajoritySimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.success_prob) {
            return Err(AqsError::InvalidConfig(format!(
                "success probability {} outside [0, 1]",
                self.success_prob
            )));
        }
        if self.queries_per_doc == 0 || self.trials == 0 {
            return Err(AqsError::InvalidConfig(
                "queries per document and trials must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityOutcome {
    /// Fraction of trials where successes > k/2.
    pub rate: f64,
    /// Number of trials per success count, for every count in `0..=k`.
    pub histogram: BTreeMap<usize, u64>,
}

pub fn simulate_majority_success(config: &MajoritySimConfig) -> Result<MajorityOutcome> {
    config.validate()?;
    let k = config.queries_per_doc;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut histogram: BTreeMap<usize, u64> = (0..=k).map(|c| (c, 0)).collect();
    let mut wins = 0u64;
    for _ in 0..config.trials {
        let successes = (0..k)
            .filter(|_| rng.gen::<f64>() < config.success_prob)
            .count();
        *histogram.entry(successes).or_insert(0) += 1;
        if 2 * successes > k {
            wins += 1;
        }
    }
    Ok(MajorityOutcome {
        rate: wins as f64 / config.trials as f64,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: f64, k: usize, trials: usize) -> MajoritySimConfig {
        MajoritySimConfig {
            success_prob: p,
            queries_per_doc: k,
            trials,
            rng_seed: 7,
        }
    }

    #[test]
    fn certain_outcomes() {
        assert_eq!(simulate_majority_success(&cfg(1.0, 5, 100)).unwrap().rate, 1.0);
        let zero = simulate_majority_success(&cfg(0.0, 5, 100)).unwrap();
        assert_eq!(zero.rate, 0.0);
        assert_eq!(zero.histogram[&0], 100);
    }

    #[test]
    fn histogram_counts_every_trial() {
        let out = simulate_majority_success(&cfg(0.4, 6, 1000)).unwrap();
        assert_eq!(out.histogram.len(), 7);
        assert_eq!(out.histogram.values().sum::<u64>(), 1000);
    }

    #[test]
    fn even_k_needs_strict_majority() {
        // k = 2 with p = 1/2: only both-correct counts, probability 1/4.
        let out = simulate_majority_success(&cfg(0.5, 2, 40_000)).unwrap();
        assert!((out.rate - 0.25).abs() < 0.01);
    }

    #[test]
    fn invalid_probability() {
        assert!(simulate_majority_success(&cfg(1.5, 3, 10)).is_err());
        assert!(simulate_majority_success(&cfg(-0.1, 3, 10)).is_err());
    }
}
