//! `colo` — experiments for bandits with delayed composite anonymous
//! feedback.
//!
//! Subcommands: `run` (one experiment cell), `sweep` (a (d, K, T) grid),
//! `stability` (standalone policy movement), `validate` (re-check a tensor
//! file), and `reduction-check` (replay the block-reduction feedback
//! identities on a live run).
//!
//! Exit codes: 0 success, 1 invariant violation (corrupted tensor, broken
//! runtime identity), 2 configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use colo::env::{gap_linear_losses, make_reduction, EnvSpec};
use colo::harness::{
    measure_stability, run_experiment, sweep, ExperimentConfig, LossStream, StabilityConfig,
    SweepConfig,
};
use colo::loss::LossTensor;
use colo::policies::{default_tunings, Algo, PolicyConfig};
use colo::reference::{check_reduction_comparator, check_reduction_replay};
use colo::wrapper::run_episode;
use colo::{seed, Error, Result};

#[derive(Parser)]
#[command(
    name = "colo",
    about = "Bandit experiments under delayed composite anonymous feedback",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment cell and print a JSON summary.
    Run(RunArgs),
    /// Sweep a (d, K, T) grid and emit one CSV row per (cell, seed).
    Sweep(SweepArgs),
    /// Measure a standalone policy's per-update distribution movement.
    Stability(StabilityArgs),
    /// Load a tensor file and re-check every invariant.
    Validate(ValidateArgs),
    /// Run on a reduction instance and replay its feedback identities.
    ReductionCheck(ReductionCheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Load the full experiment config from a JSON file instead of flags.
    #[arg(long, conflicts_with_all = ["algo", "num_arms", "horizon", "d", "env"])]
    config: Option<PathBuf>,

    #[arg(long, required_unless_present = "config")]
    algo: Option<Algo>,
    #[arg(long = "K", required_unless_present = "config")]
    num_arms: Option<usize>,
    #[arg(long = "d", default_value_t = 0)]
    d: usize,
    #[arg(long = "T", required_unless_present = "config")]
    horizon: Option<usize>,
    /// Environment spec: gap:<g>, random:<sparsity>, delayed, spread,
    /// reduction:<g>, or file:<path>.
    #[arg(long, required_unless_present = "config")]
    env: Option<EnvSpec>,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Learning rate (defaults to the horizon tuning).
    #[arg(long)]
    eta: Option<f64>,
    /// Update-round bias (defaults to 1/(2d+1)).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Directory for summary.json and per-seed trace CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    algo: Algo,
    #[arg(long = "d", value_delimiter = ',', required = true)]
    ds: Vec<usize>,
    #[arg(long = "K", value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long = "T", value_delimiter = ',', required = true)]
    ts: Vec<usize>,
    #[arg(long)]
    env: EnvSpec,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    algo: Algo,
    #[arg(long)]
    eta: f64,
    #[arg(long = "K")]
    num_arms: usize,
    #[arg(long)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Loss stream: zero, uniform, spike, or gap:<g>.
    #[arg(long, default_value = "spike")]
    stream: LossStream,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Tensor file (.json, otherwise parsed as CSV).
    #[arg(long)]
    file: PathBuf,
}

#[derive(Args)]
struct ReductionCheckArgs {
    #[arg(long, default_value = "ftrl")]
    algo: Algo,
    #[arg(long = "K")]
    num_arms: usize,
    #[arg(long = "d")]
    d: usize,
    /// Horizon; must be a multiple of d+1.
    #[arg(long = "T")]
    horizon: usize,
    #[arg(long, default_value_t = 0.2)]
    gap: f64,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_invariant_violation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// Output-directory override: the only environment knob.
fn output_override(cli_out: Option<PathBuf>) -> Option<PathBuf> {
    std::env::var_os("COLO_OUTPUT_DIR")
        .map(PathBuf::from)
        .or(cli_out)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Validate(args) => cmd_validate(args),
        Command::ReductionCheck(args) => cmd_reduction_check(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&fs::read_to_string(path)?)?,
        None => ExperimentConfig {
            algo: args.algo.expect("required by clap"),
            num_arms: args.num_arms.expect("required by clap"),
            horizon: args.horizon.expect("required by clap"),
            d: args.d,
            beta: args.beta,
            eta: args.eta,
            env: args.env.expect("required by clap"),
            n_seeds: args.seeds,
            master_seed: args.master_seed,
            output: None,
        },
    };
    config.output = output_override(args.out.or(config.output.take()));

    let outcome = run_experiment(&config)?;
    let summary = outcome.summary_json(&config)?;
    println!("{summary}");

    if let Some(dir) = &config.output {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), &summary)?;
        for (summary, record) in outcome.summaries.iter().zip(&outcome.records) {
            let name = format!("run_{:03}.csv", summary.seed_index);
            fs::write(dir.join(name), record.to_csv_string())?;
        }
        eprintln!("wrote {} run traces to {}", outcome.records.len(), dir.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = SweepConfig {
        algo: args.algo,
        ds: args.ds,
        ks: args.ks,
        ts: args.ts,
        env: args.env,
        n_seeds: args.seeds,
        master_seed: args.master_seed,
    };
    let result = sweep(&config)?;
    let csv = result.to_csv_string();
    match output_override(args.out) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, &csv)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    for cell in result.cell_summaries() {
        eprintln!(
            "d={} K={} T={}: mean regret {:.2}, max ratio {:.4} over {} seeds",
            cell.d, cell.num_arms, cell.horizon, cell.mean_regret, cell.max_ratio, cell.n_seeds
        );
    }
    Ok(())
}

fn cmd_stability(args: StabilityArgs) -> Result<()> {
    let report = measure_stability(&StabilityConfig {
        algo: args.algo,
        eta: args.eta,
        num_arms: args.num_arms,
        stream: args.stream,
        n_rounds: args.rounds,
        n_seeds: args.seeds,
        master_seed: args.master_seed,
    })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.file)?;
    let tensor = if args.file.extension().is_some_and(|e| e == "json") {
        LossTensor::from_json_str(&text)?
    } else {
        LossTensor::from_csv_str(&text)?
    };
    tensor.validate()?;
    println!(
        "ok: T={} d={} K={}",
        tensor.horizon(),
        tensor.max_delay(),
        tensor.num_arms()
    );
    Ok(())
}

fn cmd_reduction_check(args: ReductionCheckArgs) -> Result<()> {
    let block = args.d + 1;
    if args.horizon == 0 || args.horizon % block != 0 {
        return Err(Error::Parameter(format!(
            "T must be a positive multiple of d+1 = {block}, got {}",
            args.horizon
        )));
    }
    let (default_eta, default_beta) =
        default_tunings(args.algo, args.num_arms, args.horizon, args.d)?;
    let eta = args.eta.unwrap_or(default_eta);
    let beta = args.beta.unwrap_or(default_beta);

    let linear = gap_linear_losses(
        args.horizon / block,
        args.num_arms,
        args.gap,
        seed::derive(args.master_seed, "env", 0),
    );
    let tensor = make_reduction(args.horizon, args.d, args.num_arms, &linear)?;
    if !check_reduction_comparator(&linear, &tensor, 0.0)? {
        return Err(Error::InternalInvariant(
            "reduction comparator identity failed".into(),
        ));
    }

    let policy_config = PolicyConfig {
        algo: args.algo,
        eta,
        num_arms: args.num_arms,
    };
    for seed_index in 0..args.seeds as u64 {
        let episode_seed = seed::derive(args.master_seed, "episode", seed_index);
        let record = run_episode(&tensor, &policy_config, beta, episode_seed)?;
        let ok = check_reduction_replay(
            &linear,
            args.d,
            &record.actions,
            &record.composite_losses,
        )?;
        if !ok {
            return Err(Error::InternalInvariant(format!(
                "reduction feedback replay failed on seed {seed_index}"
            )));
        }
        println!(
            "seed {seed_index}: replay ok over {} rounds ({} updates, regret {:.4})",
            args.horizon,
            record.n_updates(),
            record.regret_record.regret
        );
    }
    println!("reduction-check: all identities hold");
    Ok(())
}
