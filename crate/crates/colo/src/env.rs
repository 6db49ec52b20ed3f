//! Generators of valid loss instances covering the model's regimes.
//!
//! All generators are pure functions of their parameters and a seed: the
//! tensor is frozen before play begins, so the adversary stays oblivious.
//! Every output passes full tensor validation.

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::loss::LossTensor;
use crate::seed;

/// Instance where each round's whole loss lands on a single delay slot:
/// component `delays[t]` carries `base_losses[t][i]`, the rest are zero.
pub fn make_delayed(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    base_losses: &[Vec<f64>],
    delays: &[usize],
) -> Result<LossTensor> {
    check_base(horizon, num_arms, base_losses)?;
    if delays.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "delays",
            expected: horizon,
            got: delays.len(),
        });
    }
    if let Some(&bad) = delays.iter().find(|&&dt| dt > max_delay) {
        return Err(Error::Parameter(format!(
            "delay {bad} exceeds the maximum {max_delay}"
        )));
    }
    let mut tensor = LossTensor::zeros(horizon, max_delay, num_arms)?;
    for t in 1..=horizon {
        for arm in 0..num_arms {
            tensor.set(t, delays[t - 1], arm, base_losses[t - 1][arm]);
        }
    }
    tensor.validate()?;
    Ok(tensor)
}

/// Instance where round `t`'s loss is spread over the delay slots with
/// per-round weights: `component(t, s, i) = base_losses[t][i] * weights[t][s]`.
pub fn make_spread(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    base_losses: &[Vec<f64>],
    weights: &[Vec<f64>],
) -> Result<LossTensor> {
    check_base(horizon, num_arms, base_losses)?;
    if weights.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "spread weights",
            expected: horizon,
            got: weights.len(),
        });
    }
    for (t, row) in weights.iter().enumerate() {
        if row.len() != max_delay + 1 {
            return Err(Error::LengthMismatch {
                what: "spread weight row",
                expected: max_delay + 1,
                got: row.len(),
            });
        }
        let mut sum = 0.0;
        for &w in row {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Parameter(format!(
                    "spread weight {w} at round {} must be finite and >= 0",
                    t + 1
                )));
            }
            sum += w;
        }
        if sum > 1.0 + crate::loss::SUM_TOLERANCE {
            return Err(Error::Parameter(format!(
                "spread weights at round {} sum to {sum} > 1",
                t + 1
            )));
        }
    }
    let mut tensor = LossTensor::zeros(horizon, max_delay, num_arms)?;
    for t in 1..=horizon {
        for s in 0..=max_delay {
            for arm in 0..num_arms {
                tensor.set(t, s, arm, base_losses[t - 1][arm] * weights[t - 1][s]);
            }
        }
    }
    tensor.validate()?;
    Ok(tensor)
}

/// The block-reduction instance family mapping composite-feedback play to
/// linear bandits on the simplex.
///
/// With `linear_losses[u]` in `[0,1]^K` for blocks `u = 1..T/(d+1)`:
/// `component(t, s, i) = linear_losses[ceil(t/(d+1))][i]` when
/// `(t + s) % (d+1) == 0`, else 0. The horizon must be a multiple of `d+1`;
/// shortening an experiment to the nearest multiple is the harness's call,
/// never done silently here.
pub fn make_reduction(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    linear_losses: &[Vec<f64>],
) -> Result<LossTensor> {
    let block = max_delay + 1;
    if horizon == 0 || horizon % block != 0 {
        return Err(Error::Parameter(format!(
            "reduction instances need T to be a multiple of d+1 = {block}, got T = {horizon}"
        )));
    }
    let blocks = horizon / block;
    if linear_losses.len() != blocks {
        return Err(Error::LengthMismatch {
            what: "linear loss vectors",
            expected: blocks,
            got: linear_losses.len(),
        });
    }
    for (u, row) in linear_losses.iter().enumerate() {
        if row.len() != num_arms {
            return Err(Error::LengthMismatch {
                what: "linear loss vector",
                expected: num_arms,
                got: row.len(),
            });
        }
        if let Some(&bad) = row.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Parameter(format!(
                "linear loss {bad} in block {} outside [0,1]",
                u + 1
            )));
        }
    }
    let mut tensor = LossTensor::zeros(horizon, max_delay, num_arms)?;
    for t in 1..=horizon {
        let u = t.div_ceil(block);
        for s in 0..=max_delay {
            if (t + s) % block == 0 {
                for arm in 0..num_arms {
                    tensor.set(t, s, arm, linear_losses[u - 1][arm]);
                }
            }
        }
    }
    tensor.validate()?;
    Ok(tensor)
}

/// Seeded random valid tensor for property tests.
///
/// Per `(t, i)`: total mass is uniform on `[0,1]` (mean 0.5), spread over a
/// random subset of delay slots with exponential-stick proportions. A slot
/// survives with probability `1 - sparsity`; at least one always does.
pub fn make_random_valid(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    seed_value: u64,
    sparsity: f64,
) -> Result<LossTensor> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Parameter(format!(
            "sparsity must be in [0,1], got {sparsity}"
        )));
    }
    let mut rng = seed::stream(seed_value, "env-random", 0);
    let mut tensor = LossTensor::zeros(horizon, max_delay, num_arms)?;
    let mut active = Vec::with_capacity(max_delay + 1);
    for t in 1..=horizon {
        for arm in 0..num_arms {
            active.clear();
            for s in 0..=max_delay {
                if rng.random::<f64>() >= sparsity {
                    active.push(s);
                }
            }
            if active.is_empty() {
                active.push(rng.random_range(0..=max_delay));
            }
            let mass: f64 = rng.random();
            let mut props: Vec<f64> = active
                .iter()
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = props.iter().sum();
            for p in &mut props {
                *p /= total;
            }
            for (&s, &p) in active.iter().zip(&props) {
                tensor.set(t, s, arm, mass * p);
            }
        }
    }
    tensor.validate()?;
    Ok(tensor)
}

/// Planted-gap stochastic instance: arm 0 has mean loss `1/2 - gap/2`, the
/// others `1/2 + gap/2`. Per-round losses are Bernoulli draws spread
/// uniformly over the `d+1` delay slots.
pub fn make_stochastic_gap(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    gap: f64,
    seed_value: u64,
) -> Result<LossTensor> {
    if !(0.0 < gap && gap <= 1.0) {
        return Err(Error::Parameter(format!("gap must be in (0,1], got {gap}")));
    }
    let mut rng = seed::stream(seed_value, "env-gap", 0);
    let mut tensor = LossTensor::zeros(horizon, max_delay, num_arms)?;
    let slot_value = 1.0 / (max_delay + 1) as f64;
    for t in 1..=horizon {
        for arm in 0..num_arms {
            let mean = if arm == PLANTED_ARM {
                0.5 - gap / 2.0
            } else {
                0.5 + gap / 2.0
            };
            if rng.random::<f64>() < mean {
                for s in 0..=max_delay {
                    tensor.set(t, s, arm, slot_value);
                }
            }
        }
    }
    tensor.validate()?;
    Ok(tensor)
}

/// The arm planted as best by [`make_stochastic_gap`] and
/// [`gap_linear_losses`].
pub const PLANTED_ARM: usize = 0;

/// Bernoulli gap-style linear loss vectors for reduction instances:
/// `blocks` vectors in `{0,1}^K` with arm 0's mean `1/2 - gap/2` and the
/// rest `1/2 + gap/2`.
pub fn gap_linear_losses(blocks: usize, num_arms: usize, gap: f64, seed_value: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::stream(seed_value, "env-reduction-gap", 0);
    (0..blocks)
        .map(|_| {
            (0..num_arms)
                .map(|arm| {
                    let mean = if arm == PLANTED_ARM {
                        0.5 - gap / 2.0
                    } else {
                        0.5 + gap / 2.0
                    };
                    f64::from(rng.random::<f64>() < mean)
                })
                .collect()
        })
        .collect()
}

/// Random per-round base losses in `[0,1]` and per-round delays, feeding
/// [`make_delayed`] from the CLI.
pub fn random_delayed(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    seed_value: u64,
) -> Result<LossTensor> {
    let mut rng = seed::stream(seed_value, "env-delayed", 0);
    let base: Vec<Vec<f64>> = (0..horizon)
        .map(|_| (0..num_arms).map(|_| rng.random()).collect())
        .collect();
    let delays: Vec<usize> = (0..horizon)
        .map(|_| rng.random_range(0..=max_delay))
        .collect();
    make_delayed(horizon, max_delay, num_arms, &base, &delays)
}

/// Random base losses with random simplex spread weights, feeding
/// [`make_spread`] from the CLI.
pub fn random_spread(
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    seed_value: u64,
) -> Result<LossTensor> {
    let mut rng = seed::stream(seed_value, "env-spread", 0);
    let base: Vec<Vec<f64>> = (0..horizon)
        .map(|_| (0..num_arms).map(|_| rng.random()).collect())
        .collect();
    let weights: Vec<Vec<f64>> = (0..horizon)
        .map(|_| {
            let mut row: Vec<f64> = (0..=max_delay)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = row.iter().sum();
            for w in &mut row {
                *w /= total;
            }
            row
        })
        .collect();
    make_spread(horizon, max_delay, num_arms, &base, &weights)
}

fn check_base(horizon: usize, num_arms: usize, base_losses: &[Vec<f64>]) -> Result<()> {
    if base_losses.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "base losses",
            expected: horizon,
            got: base_losses.len(),
        });
    }
    for (t, row) in base_losses.iter().enumerate() {
        if row.len() != num_arms {
            return Err(Error::LengthMismatch {
                what: "base loss row",
                expected: num_arms,
                got: row.len(),
            });
        }
        if let Some(&bad) = row.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Parameter(format!(
                "base loss {bad} at round {} outside [0,1]",
                t + 1
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Environment specs (CLI / config surface)
// ---------------------------------------------------------------------------

/// How to obtain a loss instance for an experiment.
///
/// Parsed from strings like `gap:0.2`, `random:0.5`, `delayed`, `spread`,
/// `reduction:0.2`, or `file:path/to/tensor.csv`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Gap { gap: f64 },
    Random { sparsity: f64 },
    Delayed,
    Spread,
    Reduction { gap: f64 },
    File { path: String },
}

impl EnvSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let parse_frac = |what: &str, default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|e| Error::Parameter(format!("bad {what} {a:?}: {e}"))),
            }
        };
        match name {
            "gap" => Ok(EnvSpec::Gap {
                gap: parse_frac("gap", 0.2)?,
            }),
            "random" => Ok(EnvSpec::Random {
                sparsity: parse_frac("sparsity", 0.0)?,
            }),
            "delayed" => Ok(EnvSpec::Delayed),
            "spread" => Ok(EnvSpec::Spread),
            "reduction" => Ok(EnvSpec::Reduction {
                gap: parse_frac("gap", 0.2)?,
            }),
            "file" => match arg {
                Some(path) if !path.is_empty() => Ok(EnvSpec::File { path: path.into() }),
                _ => Err(Error::Parameter("file env needs a path: file:<path>".into())),
            },
            other => Err(Error::Parameter(format!(
                "unknown environment {other:?} (expected gap, random, delayed, spread, reduction, or file:<path>)"
            ))),
        }
    }

    /// Build the tensor for given dimensions. `file:` tensors are loaded
    /// (CSV or JSON by extension) and must match the requested dimensions.
    pub fn build(
        &self,
        horizon: usize,
        max_delay: usize,
        num_arms: usize,
        seed_value: u64,
    ) -> Result<LossTensor> {
        match self {
            EnvSpec::Gap { gap } => {
                make_stochastic_gap(horizon, max_delay, num_arms, *gap, seed_value)
            }
            EnvSpec::Random { sparsity } => {
                make_random_valid(horizon, max_delay, num_arms, seed_value, *sparsity)
            }
            EnvSpec::Delayed => random_delayed(horizon, max_delay, num_arms, seed_value),
            EnvSpec::Spread => random_spread(horizon, max_delay, num_arms, seed_value),
            EnvSpec::Reduction { gap } => {
                let block = max_delay + 1;
                if horizon % block != 0 {
                    return Err(Error::Parameter(format!(
                        "reduction env needs T to be a multiple of d+1 = {block}; \
                         got T = {horizon} (nearest lower multiple: {})",
                        horizon - horizon % block
                    )));
                }
                let linear =
                    gap_linear_losses(horizon / block, num_arms, *gap, seed_value);
                make_reduction(horizon, max_delay, num_arms, &linear)
            }
            EnvSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let tensor = if path.ends_with(".json") {
                    LossTensor::from_json_str(&text)?
                } else {
                    LossTensor::from_csv_str(&text)?
                };
                if tensor.horizon() != horizon
                    || tensor.max_delay() != max_delay
                    || tensor.num_arms() != num_arms
                {
                    return Err(Error::Parameter(format!(
                        "tensor file {path} has (T={}, d={}, K={}), expected (T={horizon}, d={max_delay}, K={num_arms})",
                        tensor.horizon(),
                        tensor.max_delay(),
                        tensor.num_arms()
                    )));
                }
                Ok(tensor)
            }
        }
    }
}

impl std::fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvSpec::Gap { gap } => write!(f, "gap:{gap}"),
            EnvSpec::Random { sparsity } => write!(f, "random:{sparsity}"),
            EnvSpec::Delayed => write!(f, "delayed"),
            EnvSpec::Spread => write!(f, "spread"),
            EnvSpec::Reduction { gap } => write!(f, "reduction:{gap}"),
            EnvSpec::File { path } => write!(f, "file:{path}"),
        }
    }
}

impl std::str::FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for EnvSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EnvSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        EnvSpec::parse(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::ActionSequence;

    #[test]
    fn delayed_all_zero_delays_embeds_in_wider_tensor() {
        let base = vec![vec![0.3, 0.7]; 5];
        let tensor = make_delayed(5, 3, 2, &base, &[0; 5]).unwrap();
        for t in 1..=5 {
            assert_eq!(tensor.component(t as i64, 0, 1), 0.7);
            for s in 1..=3 {
                assert_eq!(tensor.component(t as i64, s, 1), 0.0);
            }
        }
    }

    #[test]
    fn delayed_full_delay_truncates_comparator() {
        // Arm 0 loses 1 every round, all charged d rounds late: components
        // for t > T-d fall past the horizon, so the comparator drops by d.
        let (horizon, d) = (12, 3);
        let base: Vec<Vec<f64>> = (0..horizon).map(|_| vec![1.0, 0.0]).collect();
        let tensor = make_delayed(horizon, d, 2, &base, &vec![d; horizon]).unwrap();
        let total = tensor.comparator_loss(0).unwrap();
        assert!((total - (horizon - d) as f64).abs() < 1e-12);
        // Per-(t,i) true losses stay the base losses exactly.
        for t in 1..=horizon {
            assert_eq!(tensor.true_loss(t, 0), 1.0);
        }
    }

    #[test]
    fn spread_with_all_weight_on_slot_zero_matches_delayed() {
        let base = vec![vec![0.4, 0.9, 0.1]; 6];
        let mut weights = vec![vec![0.0; 3]; 6];
        for row in &mut weights {
            row[0] = 1.0;
        }
        let spread = make_spread(6, 2, 3, &base, &weights).unwrap();
        let delayed = make_delayed(6, 2, 3, &base, &[0; 6]).unwrap();
        assert_eq!(spread, delayed);
    }

    #[test]
    fn spread_rejects_overweight_rows() {
        let base = vec![vec![0.5]; 2];
        let weights = vec![vec![0.8, 0.4], vec![0.5, 0.5]];
        assert!(make_spread(2, 1, 1, &base, &weights).is_err());
    }

    #[test]
    fn reduction_frozen_example() {
        // d=2, K=2, T=6, constant linear loss (0,1), always play arm 1:
        // composite losses must be (0,0,3,0,0,3).
        let linear = vec![vec![0.0, 1.0]; 2];
        let tensor = make_reduction(6, 2, 2, &linear).unwrap();
        let actions = ActionSequence(vec![1; 6]);
        let mut observed = Vec::new();
        for t in 1..=6usize {
            let m = t.min(3);
            observed.push(tensor.composite_loss(t, &vec![1; m]).unwrap());
        }
        assert_eq!(observed, vec![0.0, 0.0, 3.0, 0.0, 0.0, 3.0]);
        let record = tensor.regret(&actions).unwrap();
        assert_eq!(record.cumulative_composite_loss, 6.0);
    }

    #[test]
    fn reduction_with_d0_is_plain_linear_play() {
        let linear = vec![vec![0.2, 0.8], vec![0.6, 0.1], vec![0.5, 0.5]];
        let tensor = make_reduction(3, 0, 2, &linear).unwrap();
        for (t, row) in linear.iter().enumerate() {
            for arm in 0..2 {
                let loss = tensor.composite_loss(t + 1, &[arm]).unwrap();
                assert_eq!(loss, row[arm]);
            }
        }
    }

    #[test]
    fn reduction_rejects_bad_horizon() {
        let linear = vec![vec![0.0, 1.0]; 2];
        assert!(make_reduction(7, 2, 2, &linear).is_err());
    }

    #[test]
    fn random_valid_is_deterministic_and_valid() {
        let a = make_random_valid(30, 3, 4, 5, 0.4).unwrap();
        let b = make_random_valid(30, 3, 4, 5, 0.4).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let c = make_random_valid(30, 3, 4, 6, 0.4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_valid_hits_target_mean() {
        // Total per-(t,i) mass is uniform on [0,1]: mean 0.5 within 5%.
        let tensor = make_random_valid(2_000, 2, 3, 17, 0.3).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for t in 1..=2_000 {
            for arm in 0..3 {
                total += tensor.true_loss(t, arm);
                count += 1;
            }
        }
        let mean = total / count as f64;
        assert!((mean - 0.5).abs() < 0.025, "mean {mean}");
    }

    #[test]
    fn gap_one_separates_arms_completely() {
        let tensor = make_stochastic_gap(50, 1, 3, 1.0, 9).unwrap();
        for t in 1..=50 {
            assert_eq!(tensor.true_loss(t, PLANTED_ARM), 0.0);
            for arm in 1..3 {
                assert!((tensor.true_loss(t, arm) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gap_mass_is_binary_before_spreading() {
        let tensor = make_stochastic_gap(400, 3, 2, 0.2, 21).unwrap();
        for t in 1..=400 {
            for arm in 0..2 {
                let mass = tensor.true_loss(t, arm);
                assert!(
                    mass.abs() < 1e-12 || (mass - 1.0).abs() < 1e-12,
                    "mass {mass}"
                );
            }
        }
    }

    #[test]
    fn gap_planted_arm_wins_comparator() {
        for seed_value in 0..20 {
            let tensor = make_stochastic_gap(10_000, 2, 4, 0.2, seed_value).unwrap();
            let record = tensor.regret(&ActionSequence(vec![1; 10_000])).unwrap();
            assert_eq!(record.best_arm, PLANTED_ARM, "seed {seed_value}");
        }
    }

    #[test]
    fn env_spec_parse_and_display_round_trip() {
        for text in [
            "gap:0.2",
            "random:0.5",
            "delayed",
            "spread",
            "reduction:0.3",
            "file:foo.csv",
        ] {
            let spec = EnvSpec::parse(text).unwrap();
            let back = EnvSpec::parse(&spec.to_string()).unwrap();
            assert_eq!(spec, back);
        }
        assert_eq!(EnvSpec::parse("gap").unwrap(), EnvSpec::Gap { gap: 0.2 });
        assert!(EnvSpec::parse("nope").is_err());
        assert!(EnvSpec::parse("file:").is_err());
    }
}
