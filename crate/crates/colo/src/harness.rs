//! Seeded Monte Carlo experiment harness: episode fan-out, parameter
//! sweeps, stability measurement, and CSV/JSON reporting.
//!
//! Episodes are embarrassingly parallel: each owns its state and random
//! streams, sharing only an immutable tensor. With the `parallel` feature
//! (default) the fan-out runs on rayon; the `*_sequential` entry points run
//! the same jobs in order and produce byte-identical output, as does a
//! build without the feature.
//!
//! Seeds are derived as `hash(master_seed, cell-index, seed-index)` with a
//! fixed cross-platform scheme (see [`crate::seed`]), so any published
//! result can be regenerated from its config alone.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::loss::{format_float, LossTensor};
use crate::policies::{default_tunings, Algo, Distribution, Policy, PolicyConfig};
use crate::seed;
use crate::wrapper::{run_episode, RunRecord};

fn map_jobs<I, O>(jobs: Vec<I>, parallel: bool, f: impl Fn(I) -> O + Sync + Send) -> Vec<O>
where
    I: Send,
    O: Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return jobs.into_par_iter().map(f).collect();
    }
    let _ = parallel;
    jobs.into_iter().map(f).collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

// ---------------------------------------------------------------------------
// Single experiment (one cell, many seeds)
// ---------------------------------------------------------------------------

/// Configuration of one experiment cell.
///
/// `beta` defaults to `1/(2d+1)` and `eta` to the horizon tuning of the
/// chosen algorithm when left unset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algo: Algo,
    #[serde(rename = "K")]
    pub num_arms: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub d: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    pub env: EnvSpec,
    pub n_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolved_beta(&self) -> f64 {
        self.beta.unwrap_or(1.0 / (2 * self.d + 1) as f64)
    }

    pub fn resolved_eta(&self) -> Result<f64> {
        match self.eta {
            Some(eta) => Ok(eta),
            None => Ok(default_tunings(self.algo, self.num_arms, self.horizon, self.d)?.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 {
            return Err(Error::Parameter("n_seeds must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Parameter("horizon T must be >= 1".into()));
        }
        if self.num_arms == 0 {
            return Err(Error::Parameter("arm count K must be >= 1".into()));
        }
        self.resolved_eta()?;
        let beta = self.resolved_beta();
        if !(beta > 0.0 && beta <= 1.0) || (beta == 1.0 && self.d > 0) {
            return Err(Error::Parameter(format!(
                "beta {beta} invalid for d = {}",
                self.d
            )));
        }
        Ok(())
    }
}

/// Per-seed scalars of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed_index: u64,
    pub episode_seed: u64,
    pub regret: f64,
    pub best_arm: usize,
    pub n_updates: usize,
    pub cumulative_composite_loss: f64,
}

/// Everything a finished experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub summaries: Vec<EpisodeSummary>,
    pub records: Vec<RunRecord>,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub stderr_regret: f64,
}

impl ExperimentOutcome {
    /// JSON report (config echo plus aggregate and per-seed scalars).
    pub fn summary_json(&self, config: &ExperimentConfig) -> Result<String> {
        #[derive(Serialize)]
        struct Report<'a> {
            config: &'a ExperimentConfig,
            eta: f64,
            beta: f64,
            mean_regret: f64,
            std_regret: f64,
            stderr_regret: f64,
            runs: &'a [EpisodeSummary],
        }
        Ok(serde_json::to_string_pretty(&Report {
            config,
            eta: config.resolved_eta()?,
            beta: config.resolved_beta(),
            mean_regret: self.mean_regret,
            std_regret: self.std_regret,
            stderr_regret: self.stderr_regret,
            runs: &self.summaries,
        })?)
    }
}

/// Run `n_seeds` independent episodes of one configuration (parallel
/// fan-out when the `parallel` feature is enabled).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(config, true)
}

/// Same jobs, strictly in order on the calling thread.
pub fn run_experiment_sequential(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(config, false)
}

fn run_experiment_with(config: &ExperimentConfig, parallel: bool) -> Result<ExperimentOutcome> {
    config.validate()?;
    let eta = config.resolved_eta()?;
    let beta = config.resolved_beta();
    let tensor = config.env.build(
        config.horizon,
        config.d,
        config.num_arms,
        seed::derive(config.master_seed, "env", 0),
    )?;
    let policy_config = PolicyConfig {
        algo: config.algo,
        eta,
        num_arms: config.num_arms,
    };

    let jobs: Vec<u64> = (0..config.n_seeds as u64).collect();
    let results = map_jobs(jobs, parallel, |seed_index| {
        let episode_seed = seed::derive(config.master_seed, "episode", seed_index);
        run_episode(&tensor, &policy_config, beta, episode_seed)
            .map(|record| (seed_index, episode_seed, record))
    });

    let mut summaries = Vec::with_capacity(config.n_seeds);
    let mut records = Vec::with_capacity(config.n_seeds);
    for result in results {
        let (seed_index, episode_seed, record) = result?;
        summaries.push(EpisodeSummary {
            seed_index,
            episode_seed,
            regret: record.regret_record.regret,
            best_arm: record.regret_record.best_arm,
            n_updates: record.n_updates(),
            cumulative_composite_loss: record.regret_record.cumulative_composite_loss,
        });
        records.push(record);
    }
    let regrets: Vec<f64> = summaries.iter().map(|s| s.regret).collect();
    let std = sample_std(&regrets);
    Ok(ExperimentOutcome {
        mean_regret: mean(&regrets),
        std_regret: std,
        stderr_regret: std / (regrets.len() as f64).sqrt(),
        summaries,
        records,
    })
}

// ---------------------------------------------------------------------------
// Standalone base-policy runs (no wrapper)
// ---------------------------------------------------------------------------

/// Run a base policy directly on a `d = 0` tensor: the ordinary bandit
/// protocol, one draw and one update per round.
///
/// The action stream is seeded with the same label the wrapper uses, so a
/// wrapper run with `d = 0`, `beta = 1` and the same master seed faces
/// identical draws.
pub fn run_standalone(
    tensor: &LossTensor,
    policy_config: &PolicyConfig,
    master_seed: u64,
) -> Result<RunRecord> {
    if tensor.max_delay() != 0 {
        return Err(Error::Parameter(format!(
            "standalone runs take a d = 0 tensor, got d = {}",
            tensor.max_delay()
        )));
    }
    if policy_config.num_arms != tensor.num_arms() {
        return Err(Error::Parameter(format!(
            "policy has {} arms but the tensor has {}",
            policy_config.num_arms,
            tensor.num_arms()
        )));
    }
    let mut policy = Policy::new(policy_config)?;
    let mut rng = seed::stream(master_seed, "action", 0);
    let horizon = tensor.horizon();
    let mut actions = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    let mut update_rounds = Vec::with_capacity(horizon);
    let mut stability_trace = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let dist = policy.distribution()?;
        let arm = dist.sample(&mut rng);
        let loss = tensor.component(t as i64, 0, arm);
        policy.update(arm, loss)?;
        let after = policy.distribution()?;
        stability_trace.push(dist.positive_movement(&after));
        actions.push(arm);
        losses.push(loss);
        update_rounds.push(t);
    }
    let actions = crate::loss::ActionSequence(actions);
    let regret_record = tensor.regret(&actions)?;
    Ok(RunRecord {
        actions,
        composite_losses: losses.clone(),
        update_rounds,
        fed_losses: losses,
        regret_record,
        stability_trace,
    })
}

// ---------------------------------------------------------------------------
// Stability measurement
// ---------------------------------------------------------------------------

/// Loss sequences for standalone stability runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossStream {
    /// All-zero losses: the distribution never moves.
    Zero,
    /// Independent uniform `[0,1]` losses per arm per round.
    Uniform,
    /// Bernoulli losses with a planted best arm (arm 0).
    Gap { gap: f64 },
    /// Adversarial spikes: loss 1 on the currently most-probable arm.
    Spike,
}

impl LossStream {
    fn losses<R: rand::Rng + ?Sized>(&self, rng: &mut R, dist: &Distribution) -> Vec<f64> {
        let k = dist.num_arms();
        match self {
            LossStream::Zero => vec![0.0; k],
            LossStream::Uniform => (0..k).map(|_| rng.random()).collect(),
            LossStream::Gap { gap } => (0..k)
                .map(|arm| {
                    let p = if arm == crate::env::PLANTED_ARM {
                        0.5 - gap / 2.0
                    } else {
                        0.5 + gap / 2.0
                    };
                    f64::from(rng.random::<f64>() < p)
                })
                .collect(),
            LossStream::Spike => {
                let mut target = 0;
                for (arm, &p) in dist.probs().iter().enumerate() {
                    if p > dist.probs()[target] {
                        target = arm;
                    }
                }
                (0..k).map(|arm| f64::from(arm == target)).collect()
            }
        }
    }
}

impl std::str::FromStr for LossStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(LossStream::Zero),
            "uniform" => Ok(LossStream::Uniform),
            "spike" => Ok(LossStream::Spike),
            other => {
                if let Some(arg) = other.strip_prefix("gap:") {
                    let gap = arg
                        .parse::<f64>()
                        .map_err(|e| Error::Parameter(format!("bad gap {arg:?}: {e}")))?;
                    return Ok(LossStream::Gap { gap });
                }
                Err(Error::Parameter(format!(
                    "unknown loss stream {other:?} (expected zero, uniform, spike, or gap:<g>)"
                )))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub algo: Algo,
    pub eta: f64,
    #[serde(rename = "K")]
    pub num_arms: usize,
    pub stream: LossStream,
    pub n_rounds: usize,
    pub n_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// Observed one-sided distribution movement of a standalone policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub algo: Algo,
    pub eta: f64,
    #[serde(rename = "K")]
    pub num_arms: usize,
    /// Mean of `sum_i (q_next(i) - q(i))^+` over all observed updates.
    pub empirical_xi: f64,
    /// Maximum single-update movement.
    pub max_step: f64,
    pub n_updates: usize,
}

/// Run the base policy standalone on `[0,1]` losses and measure its
/// per-update distribution movement.
pub fn measure_stability(config: &StabilityConfig) -> Result<StabilityReport> {
    if config.n_rounds == 0 || config.n_seeds == 0 {
        return Err(Error::Parameter(
            "stability runs need n_rounds >= 1 and n_seeds >= 1".into(),
        ));
    }
    let policy_config = PolicyConfig {
        algo: config.algo,
        eta: config.eta,
        num_arms: config.num_arms,
    };
    let mut total = 0.0;
    let mut max_step = 0.0_f64;
    let mut count = 0usize;
    for seed_index in 0..config.n_seeds as u64 {
        let mut rng = seed::stream(config.master_seed, "stability", seed_index);
        let mut policy = Policy::new(&policy_config)?;
        let mut dist = policy.distribution()?;
        for _ in 0..config.n_rounds {
            let losses = config.stream.losses(&mut rng, &dist);
            let arm = dist.sample(&mut rng);
            policy.update(arm, losses[arm])?;
            let next = policy.distribution()?;
            let movement = dist.positive_movement(&next);
            total += movement;
            max_step = max_step.max(movement);
            count += 1;
            dist = next;
        }
    }
    Ok(StabilityReport {
        algo: config.algo,
        eta: config.eta,
        num_arms: config.num_arms,
        empirical_xi: total / count as f64,
        max_step,
        n_updates: count,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Grid sweep over `(d, K, T)` cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub algo: Algo,
    pub ds: Vec<usize>,
    pub ks: Vec<usize>,
    pub ts: Vec<usize>,
    pub env: EnvSpec,
    pub n_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// One `(cell, seed)` result. `bound_28` is the reference envelope
/// `28 sqrt((d+1) K T)` and `ratio = regret / bound_28`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    #[serde(rename = "K")]
    pub num_arms: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed_index: u64,
    pub regret: f64,
    pub bound_28: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Aggregate view of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub d: usize,
    pub num_arms: usize,
    pub horizon: usize,
    pub mean_regret: f64,
    pub max_ratio: f64,
    pub n_seeds: usize,
}

impl SweepResult {
    /// CSV with header `d,K,T,seed,regret,bound_28,ratio`, floats at full
    /// precision so the file round-trips bit-exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("d,K,T,seed,regret,bound_28,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.d,
                r.num_arms,
                r.horizon,
                r.seed_index,
                format_float(r.regret),
                format_float(r.bound_28),
                format_float(r.ratio),
            ));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty sweep CSV".into()))?;
        if header.trim() != "d,K,T,seed,regret,bound_28,ratio" {
            return Err(Error::Parse(format!(
                "unexpected sweep CSV header {header:?}"
            )));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!(
                    "sweep CSV line {}: expected 7 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let bad = |what: &str, e: &dyn std::fmt::Display| {
                Error::Parse(format!("sweep CSV line {}: bad {what}: {e}", lineno + 2))
            };
            rows.push(SweepRow {
                d: fields[0].trim().parse().map_err(|e| bad("d", &e))?,
                num_arms: fields[1].trim().parse().map_err(|e| bad("K", &e))?,
                horizon: fields[2].trim().parse().map_err(|e| bad("T", &e))?,
                seed_index: fields[3].trim().parse().map_err(|e| bad("seed", &e))?,
                regret: fields[4].trim().parse().map_err(|e| bad("regret", &e))?,
                bound_28: fields[5].trim().parse().map_err(|e| bad("bound_28", &e))?,
                ratio: fields[6].trim().parse().map_err(|e| bad("ratio", &e))?,
            });
        }
        Ok(SweepResult { rows })
    }

    /// Cell summaries in grid order (mean regret and worst ratio per cell).
    pub fn cell_summaries(&self) -> Vec<CellSummary> {
        let mut cells: Vec<(usize, usize, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.d, r.num_arms, r.horizon);
            if !cells.contains(&key) {
                cells.push(key);
            }
        }
        cells
            .into_iter()
            .map(|(d, k, t)| {
                let regrets: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| (r.d, r.num_arms, r.horizon) == (d, k, t))
                    .map(|r| r.regret)
                    .collect();
                let max_ratio = self
                    .rows
                    .iter()
                    .filter(|r| (r.d, r.num_arms, r.horizon) == (d, k, t))
                    .map(|r| r.ratio)
                    .fold(f64::NEG_INFINITY, f64::max);
                CellSummary {
                    d,
                    num_arms: k,
                    horizon: t,
                    mean_regret: mean(&regrets),
                    max_ratio,
                    n_seeds: regrets.len(),
                }
            })
            .collect()
    }
}

/// Run the full grid (parallel over `(cell, seed)` pairs when enabled).
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    sweep_with(config, true)
}

/// Same grid, strictly in order on the calling thread.
pub fn sweep_sequential(config: &SweepConfig) -> Result<SweepResult> {
    sweep_with(config, false)
}

fn sweep_with(config: &SweepConfig, parallel: bool) -> Result<SweepResult> {
    if config.n_seeds == 0 {
        return Err(Error::Parameter("n_seeds must be >= 1".into()));
    }
    if config.ds.is_empty() || config.ks.is_empty() || config.ts.is_empty() {
        return Err(Error::Parameter("sweep grid must be non-empty".into()));
    }

    // Cells in grid order; tensors and tunings prepared up front so job
    // failures surface as config errors before any episode runs.
    struct Cell {
        d: usize,
        num_arms: usize,
        horizon: usize,
        eta: f64,
        beta: f64,
        tensor: LossTensor,
    }
    let mut cells = Vec::new();
    for &d in &config.ds {
        for &k in &config.ks {
            for &t in &config.ts {
                let cell_index = cells.len() as u64;
                let (eta, beta) = default_tunings(config.algo, k, t, d)?;
                let tensor = config.env.build(
                    t,
                    d,
                    k,
                    seed::derive(config.master_seed, "env", cell_index),
                )?;
                cells.push(Cell {
                    d,
                    num_arms: k,
                    horizon: t,
                    eta,
                    beta,
                    tensor,
                });
            }
        }
    }

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.n_seeds as u64).map(move |s| (c, s)))
        .collect();
    let cells_ref = &cells;
    let results = map_jobs(jobs, parallel, move |(cell_index, seed_index)| {
        let cell = &cells_ref[cell_index];
        let episode_seed = seed::derive(
            seed::derive(config.master_seed, "cell", cell_index as u64),
            "episode",
            seed_index,
        );
        let policy_config = PolicyConfig {
            algo: config.algo,
            eta: cell.eta,
            num_arms: cell.num_arms,
        };
        run_episode(&cell.tensor, &policy_config, cell.beta, episode_seed).map(|record| {
            let bound_28 =
                28.0 * (((cell.d + 1) * cell.num_arms * cell.horizon) as f64).sqrt();
            SweepRow {
                d: cell.d,
                num_arms: cell.num_arms,
                horizon: cell.horizon,
                seed_index,
                regret: record.regret_record.regret,
                bound_28,
                ratio: record.regret_record.regret / bound_28,
            }
        })
    });

    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.d, a.num_arms, a.horizon, a.seed_index).cmp(&(b.d, b.num_arms, b.horizon, b.seed_index))
    });
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            algo: Algo::Ftrl,
            num_arms: 3,
            horizon: 600,
            d: 2,
            beta: None,
            eta: None,
            env: EnvSpec::Gap { gap: 0.3 },
            n_seeds: 4,
            master_seed: 11,
            output: None,
        }
    }

    #[test]
    fn single_seed_experiment_equals_run_episode() {
        let mut config = small_config();
        config.n_seeds = 1;
        let outcome = run_experiment(&config).unwrap();
        let tensor = config
            .env
            .build(600, 2, 3, seed::derive(11, "env", 0))
            .unwrap();
        let policy_config = PolicyConfig {
            algo: Algo::Ftrl,
            eta: config.resolved_eta().unwrap(),
            num_arms: 3,
        };
        let direct = run_episode(
            &tensor,
            &policy_config,
            config.resolved_beta(),
            seed::derive(11, "episode", 0),
        )
        .unwrap();
        assert_eq!(outcome.records[0], direct);
        assert_eq!(outcome.mean_regret, direct.regret_record.regret);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let config = small_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment_sequential(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_regret_is_order_invariant() {
        let outcome = run_experiment(&small_config()).unwrap();
        let mut regrets: Vec<f64> = outcome.summaries.iter().map(|s| s.regret).collect();
        regrets.reverse();
        assert!((mean(&regrets) - outcome.mean_regret).abs() < 1e-9);
    }

    #[test]
    fn emitted_regret_matches_recomputation() {
        let config = small_config();
        let tensor = config
            .env
            .build(600, 2, 3, seed::derive(config.master_seed, "env", 0))
            .unwrap();
        let outcome = run_experiment(&config).unwrap();
        for record in &outcome.records {
            let again = tensor.regret(&record.actions).unwrap();
            assert_eq!(again.regret, record.regret_record.regret);
        }
    }

    #[test]
    fn doubling_seeds_shrinks_stderr() {
        let mut config = small_config();
        config.horizon = 300;
        config.n_seeds = 64;
        let small = run_experiment(&config).unwrap();
        config.n_seeds = 128;
        let large = run_experiment(&config).unwrap();
        let ratio = large.stderr_regret / small.stderr_regret;
        // 1/sqrt(2) in expectation, wide band for Monte Carlo noise.
        assert!((0.4..1.05).contains(&ratio), "stderr ratio {ratio}");
    }

    #[test]
    fn zero_losses_never_move_ftrl() {
        let report = measure_stability(&StabilityConfig {
            algo: Algo::Ftrl,
            eta: 2.0,
            num_arms: 4,
            stream: LossStream::Zero,
            n_rounds: 200,
            n_seeds: 2,
            master_seed: 0,
        })
        .unwrap();
        assert_eq!(report.empirical_xi, 0.0);
        assert_eq!(report.max_step, 0.0);
        assert_eq!(report.n_updates, 400);
    }

    #[test]
    fn stability_report_invariants() {
        let report = measure_stability(&StabilityConfig {
            algo: Algo::Exp3,
            eta: 0.3,
            num_arms: 5,
            stream: LossStream::Spike,
            n_rounds: 500,
            n_seeds: 2,
            master_seed: 3,
        })
        .unwrap();
        assert!(report.empirical_xi >= 0.0);
        assert!(report.empirical_xi <= report.max_step);
        assert!(report.max_step <= 2.0);
    }

    #[test]
    fn sweep_single_cell_matches_run_experiment_regrets() {
        let sweep_cfg = SweepConfig {
            algo: Algo::Ftrl,
            ds: vec![1],
            ks: vec![2],
            ts: vec![300],
            env: EnvSpec::Gap { gap: 0.4 },
            n_seeds: 3,
            master_seed: 5,
        };
        let result = sweep(&sweep_cfg).unwrap();
        assert_eq!(result.rows.len(), 3);

        // A one-cell sweep runs the same episodes as run_experiment with
        // the cell-0 seed chain.
        let regrets: Vec<f64> = (0..3)
            .map(|s| {
                let tensor = sweep_cfg.env.build(300, 1, 2, seed::derive(5, "env", 0)).unwrap();
                let (eta, beta) = default_tunings(Algo::Ftrl, 2, 300, 1).unwrap();
                let episode_seed =
                    seed::derive(seed::derive(5, "cell", 0), "episode", s);
                run_episode(
                    &tensor,
                    &PolicyConfig {
                        algo: Algo::Ftrl,
                        eta,
                        num_arms: 2,
                    },
                    beta,
                    episode_seed,
                )
                .unwrap()
                .regret_record
                .regret
            })
            .collect();
        for (row, regret) in result.rows.iter().zip(regrets) {
            assert_eq!(row.regret, regret);
        }
    }

    #[test]
    fn sweep_csv_round_trips_bit_exactly() {
        let sweep_cfg = SweepConfig {
            algo: Algo::Ftrl,
            ds: vec![0, 1],
            ks: vec![2],
            ts: vec![200],
            env: EnvSpec::Random { sparsity: 0.2 },
            n_seeds: 2,
            master_seed: 9,
        };
        let result = sweep(&sweep_cfg).unwrap();
        let csv = result.to_csv_string();
        let back = SweepResult::from_csv_str(&csv).unwrap();
        assert_eq!(result, back);
        assert_eq!(csv, back.to_csv_string());
        assert_eq!(result.cell_summaries().len(), 2);
    }

    #[test]
    fn sweep_outputs_are_deterministic_across_modes() {
        let sweep_cfg = SweepConfig {
            algo: Algo::Ftrl,
            ds: vec![0, 2],
            ks: vec![2, 3],
            ts: vec![150],
            env: EnvSpec::Gap { gap: 0.3 },
            n_seeds: 2,
            master_seed: 77,
        };
        let a = sweep(&sweep_cfg).unwrap().to_csv_string();
        let b = sweep_sequential(&sweep_cfg).unwrap().to_csv_string();
        let c = sweep(&sweep_cfg).unwrap().to_csv_string();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
