//! Nonstochastic K-armed bandits with delayed composite anonymous feedback.
//!
//! The loss an action incurs is spread adversarially over the following
//! `d+1` rounds, and the player only ever observes the per-round sum of
//! components falling due — never the pieces. This crate provides:
//!
//! - [`loss`]: loss-component tensors, the composite loss, and regret
//!   accounting.
//! - [`policies`]: base bandit algorithms on ordinary `[0,1]` losses —
//!   Exp3 and FTRL with the 1/2-Tsallis entropy regularizer, including the
//!   Lagrange-multiplier solver behind its closed-form distribution.
//! - [`wrapper`]: the block reduction that runs a base policy under
//!   composite feedback by freezing actions over randomized blocks of
//!   length at least `2d+1` and feeding back normalized window averages.
//! - [`env`]: generators of valid adversarial instances (delayed, spread,
//!   planted-gap, random, and the linear-bandit reduction family).
//! - [`harness`]: a seeded, reproducible Monte Carlo experiment runner
//!   with parameter sweeps, stability measurement, and CSV/JSON reports.
//! - [`reference`]: deliberately naive definition-replay oracles used by
//!   the test suite and the `validate`/`reduction-check` CLI commands.
//!
//! Episode fan-out is data-parallel via rayon behind the `parallel`
//! feature (enabled by default); disabling it leaves a sequential build
//! with identical outputs.

pub mod env;
pub mod error;
pub mod harness;
pub mod loss;
pub mod policies;
pub mod reference;
pub mod seed;
pub mod wrapper;

pub use error::{Error, Result};
pub use loss::{ActionSequence, LossTensor, RegretRecord};
pub use policies::{
    default_tunings, solve_lambda, Algo, Distribution, Exp3, FtrlTsallis, LambdaSolution, Policy,
    PolicyConfig,
};
pub use wrapper::{is_update_round, run_episode, BernoulliStream, Episode, RunRecord, WrapperState};
