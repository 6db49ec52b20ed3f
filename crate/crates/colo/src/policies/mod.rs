//! Base K-armed bandit policies on `[0,1]` losses with bandit feedback.
//!
//! Both policies expose the same surface: a full-support probability
//! distribution over arms, importance-weighted updates at the played arm,
//! and seeded sampling. States are plain values; independent runs own their
//! state and random stream.

mod exp3;
mod ftrl;

pub use exp3::Exp3;
pub use ftrl::{solve_lambda, FtrlTsallis, LambdaSolution};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the probability simplex over `K` arms.
///
/// Entries are strictly positive (both policies keep full support for
/// finite learning rates) and sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let dist = Self { probs };
        dist.validate()?;
        Ok(dist)
    }

    /// Constructor for boundary points (grid oracles): allows zero entries
    /// but still requires nonnegative, finite values summing to 1.
    pub(crate) fn from_probs_unchecked(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Parameter("distribution needs >= 1 arm".into()));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NumericState(format!(
                "invalid simplex point (sum {sum})"
            )));
        }
        Ok(Self { probs })
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::Parameter("distribution needs >= 1 arm".into()));
        }
        let mut sum = 0.0;
        for &p in &self.probs {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::NumericState(format!(
                    "distribution entry {p} not in (0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NumericState(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_arms(&self) -> usize {
        self.probs.len()
    }

    /// Draw an arm by inverse-CDF walk; deterministic given the stream state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for (arm, &p) in self.probs.iter().enumerate() {
            acc += p;
            if r < acc {
                return arm;
            }
        }
        self.probs.len() - 1
    }

    /// One-sided movement to `next`: `sum_i (next(i) - self(i))^+`.
    pub fn positive_movement(&self, next: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(next.probs.iter())
            .map(|(&a, &b)| (b - a).max(0.0))
            .sum()
    }
}

/// Which base algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Exp3,
    Ftrl,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algo::Exp3 => write!(f, "exp3"),
            Algo::Ftrl => write!(f, "ftrl"),
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp3" => Ok(Algo::Exp3),
            "ftrl" => Ok(Algo::Ftrl),
            other => Err(Error::Parameter(format!(
                "unknown algorithm {other:?} (expected \"exp3\" or \"ftrl\")"
            ))),
        }
    }
}

/// Construction record for a base policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub algo: Algo,
    pub eta: f64,
    #[serde(rename = "K")]
    pub num_arms: usize,
}

/// A base policy instance with its learning state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum Policy {
    Exp3(Exp3),
    Ftrl(FtrlTsallis),
}

impl Policy {
    pub fn new(config: &PolicyConfig) -> Result<Self> {
        match config.algo {
            Algo::Exp3 => Ok(Policy::Exp3(Exp3::new(config.num_arms, config.eta)?)),
            Algo::Ftrl => Ok(Policy::Ftrl(FtrlTsallis::new(config.num_arms, config.eta)?)),
        }
    }

    pub fn num_arms(&self) -> usize {
        match self {
            Policy::Exp3(p) => p.num_arms(),
            Policy::Ftrl(p) => p.num_arms(),
        }
    }

    pub fn round(&self) -> u64 {
        match self {
            Policy::Exp3(p) => p.round(),
            Policy::Ftrl(p) => p.round(),
        }
    }

    /// The distribution the policy plays from this round.
    pub fn distribution(&self) -> Result<Distribution> {
        match self {
            Policy::Exp3(p) => p.distribution(),
            Policy::Ftrl(p) => p.distribution(),
        }
    }

    /// Bandit feedback for the played arm: importance-weighted estimate
    /// added at that arm only, round counter incremented.
    pub fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        match self {
            Policy::Exp3(p) => p.update(arm, loss),
            Policy::Ftrl(p) => p.update(arm, loss),
        }
    }

    /// Draw an arm from the current distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        Ok(self.distribution()?.sample(rng))
    }

    /// Debug snapshot of the full learning state.
    pub fn snapshot_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Horizon-tuned learning rate and block bias `(eta, beta)`.
///
/// FTRL: `eta = sqrt(floor(T/(2d+1)) / 2)`. Exp3: `eta = sqrt(d ln K / (K T))`.
/// Both use `beta = 1/(2d+1)`. Degenerate cases (no full block fits the
/// horizon; an Exp3 rate of zero at `d = 0`) are rejected so the caller
/// picks a rate explicitly.
pub fn default_tunings(algo: Algo, num_arms: usize, horizon: usize, d: usize) -> Result<(f64, f64)> {
    if horizon == 0 {
        return Err(Error::Parameter("horizon T must be >= 1".into()));
    }
    let beta = 1.0 / (2 * d + 1) as f64;
    let eta = match algo {
        Algo::Ftrl => {
            let updates = horizon / (2 * d + 1);
            if updates == 0 {
                return Err(Error::Parameter(format!(
                    "T = {horizon} is shorter than one block (2d+1 = {}); pick eta manually",
                    2 * d + 1
                )));
            }
            (updates as f64 / 2.0).sqrt()
        }
        Algo::Exp3 => {
            if num_arms < 2 {
                return Err(Error::Parameter(
                    "Exp3 tuning requires K >= 2 (ln K > 0)".into(),
                ));
            }
            if d == 0 {
                return Err(Error::Parameter(
                    "Exp3 tuning degenerates to eta = 0 at d = 0; pick eta manually".into(),
                ));
            }
            (d as f64 * (num_arms as f64).ln() / (num_arms * horizon) as f64).sqrt()
        }
    };
    Ok((eta, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn ftrl_tuning_matches_formula() {
        let (eta, beta) = default_tunings(Algo::Ftrl, 4, 4200, 2).unwrap();
        assert!((eta - 420.0_f64.sqrt()).abs() < 1e-12);
        assert!((beta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn beta_is_one_at_d0() {
        let (_, beta) = default_tunings(Algo::Ftrl, 2, 100, 0).unwrap();
        assert_eq!(beta, 1.0);
    }

    #[test]
    fn exp3_tuning_matches_formula() {
        let (eta, beta) = default_tunings(Algo::Exp3, 4, 10_000, 4).unwrap();
        assert!((eta - (4.0 * 4.0_f64.ln() / 40_000.0).sqrt()).abs() < 1e-15);
        assert!((beta - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_tunings_are_rejected() {
        assert!(default_tunings(Algo::Ftrl, 2, 4, 2).is_err()); // T < 2d+1
        assert!(default_tunings(Algo::Exp3, 1, 100, 2).is_err()); // K < 2
        assert!(default_tunings(Algo::Exp3, 4, 100, 0).is_err()); // eta = 0
    }

    #[test]
    fn sampling_follows_the_distribution() {
        let dist = Distribution::new(vec![0.25; 4]).unwrap();
        let mut rng = seed::stream(7, "test-sample", 0);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[dist.sample(&mut rng)] += 1;
        }
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.25).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn near_degenerate_distribution_sticks_to_heavy_arm() {
        let eps = 1e-9;
        let dist = Distribution::new(vec![1.0 - eps, eps]).unwrap();
        let mut rng = seed::stream(11, "test-degenerate", 0);
        let hits = (0..10_000).filter(|_| dist.sample(&mut rng) == 0).count();
        assert!(hits as f64 >= 0.99 * 10_000.0);
    }

    #[test]
    fn fixed_seed_reproduces_draws() {
        let dist = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let draws = |seed_val: u64| -> Vec<usize> {
            let mut rng = seed::stream(seed_val, "test-repro", 0);
            (0..200).map(|_| dist.sample(&mut rng)).collect()
        };
        assert_eq!(draws(3), draws(3));
        assert_ne!(draws(3), draws(4));
    }

    #[test]
    fn policy_config_json_shape() {
        let cfg: PolicyConfig = serde_json::from_str(r#"{"algo":"ftrl","eta":2.5,"K":3}"#).unwrap();
        assert_eq!(cfg.algo, Algo::Ftrl);
        assert_eq!(cfg.num_arms, 3);
        let policy = Policy::new(&cfg).unwrap();
        assert!(policy.snapshot_json().unwrap().contains("\"algo\":\"ftrl\""));
    }
}
