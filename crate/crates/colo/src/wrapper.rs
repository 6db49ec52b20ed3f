//! Block reduction from composite anonymous feedback to a standard bandit.
//!
//! Play proceeds in blocks of random length at least `2d+1` during which the
//! action is frozen. A lazily generated Bernoulli stream marks update
//! rounds: round `t` is an update round when its bit is 1 and the previous
//! `2d` bits are all 0. At an update round, the last `d+1` observed
//! composite losses concern only the frozen action, so their sum divided by
//! `2d+1` is a legitimate `[0,1]` bandit feedback for it; the base policy
//! learns exactly there and a fresh action is drawn at the next round.
//!
//! Two independent seeded streams drive an episode (block boundaries and
//! action draws), derived from one master seed by fixed labels.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{format_float, ActionSequence, LossTensor, RegretRecord};
use crate::policies::{Distribution, Policy, PolicyConfig};
use crate::seed;

/// Slack for the `[0,1]` fed-loss assertion. Valid tensors can carry
/// per-(t,i) sums up to `1 + 1e-9`; anything past this margin means a
/// corrupted tensor or a bug.
const FED_LOSS_SLACK: f64 = 1e-8;

/// Round `t` is an update round iff `t >= 2d+1`, the bit at `t` is 1, and
/// the `2d` preceding bits are all 0. For `d = 0` this is just `b_t = 1`.
///
/// `bits` holds the most recent values ending with round `t`'s bit (so at
/// most `2d+1` entries are inspected). Rounds before `2d+1` are never
/// update rounds, whatever history is supplied.
pub fn is_update_round(t: usize, d: usize, bits: &[bool]) -> bool {
    let need = 2 * d + 1;
    if t < need || bits.len() < need {
        return false;
    }
    let last = bits.len() - 1;
    bits[last] && (1..=2 * d).all(|s| !bits[last - s])
}

/// Lazily generated i.i.d. Bernoulli bits with the short history needed to
/// classify update rounds. Bits are produced once, in round order, and
/// never regenerated.
#[derive(Debug, Clone)]
pub struct BernoulliStream {
    beta: f64,
    d: usize,
    rng: ChaCha12Rng,
    /// The last `min(t, 2d+1)` bits, oldest first.
    history: VecDeque<bool>,
    t: usize,
    window: Vec<bool>,
}

impl BernoulliStream {
    /// `beta` is the per-round bias. It must lie in `(0, 1)`, except that
    /// `beta = 1` is allowed when `d = 0` (where every round may update).
    pub fn new(beta: f64, d: usize, rng: ChaCha12Rng) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 || beta > 1.0 {
            return Err(Error::Parameter(format!(
                "Bernoulli bias must be in (0, 1], got {beta}"
            )));
        }
        if beta == 1.0 && d > 0 {
            return Err(Error::Parameter(
                "Bernoulli bias 1 only makes sense for d = 0 (no update round could ever fire)"
                    .into(),
            ));
        }
        Ok(Self {
            beta,
            d,
            rng,
            history: VecDeque::with_capacity(2 * d + 2),
            t: 0,
            window: Vec::with_capacity(2 * d + 1),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Generate the next round's bit.
    pub fn advance(&mut self) -> bool {
        let bit = self.rng.random::<f64>() < self.beta;
        self.t += 1;
        self.history.push_back(bit);
        if self.history.len() > 2 * self.d + 1 {
            self.history.pop_front();
        }
        bit
    }

    /// Whether the current round (the one whose bit [`advance`] just
    /// produced) is an update round.
    ///
    /// [`advance`]: BernoulliStream::advance
    pub fn is_update_now(&mut self) -> bool {
        self.window.clear();
        self.window.extend(self.history.iter().copied());
        is_update_round(self.t, self.d, &self.window)
    }
}

/// Runtime state of the block wrapper.
#[derive(Debug, Clone)]
pub struct WrapperState {
    /// Block counter `n_t`; increments exactly at rounds following an
    /// update round.
    pub block_index: usize,
    /// The distribution the current block's action was drawn from.
    pub current_dist: Distribution,
    /// The frozen action of the current block.
    pub current_action: usize,
    /// Ring of the last `min(t, d+1)` observed composite losses.
    pub window_buffer: VecDeque<f64>,
    /// The current round `t` (1-based; 0 before the first step).
    pub round: usize,
}

/// Full trace of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub actions: ActionSequence,
    /// Composite loss observed each round.
    pub composite_losses: Vec<f64>,
    /// Rounds (1-based, ascending) at which the base policy was updated.
    pub update_rounds: Vec<usize>,
    /// The `[0,1]` losses fed to the base policy, one per update round.
    pub fed_losses: Vec<f64>,
    pub regret_record: RegretRecord,
    /// Per-update one-sided distribution movement
    /// `sum_i (q_next(i) - q(i))^+`.
    pub stability_trace: Vec<f64>,
}

impl RunRecord {
    pub fn n_updates(&self) -> usize {
        self.update_rounds.len()
    }

    /// Per-round trace as CSV `t,action,composite_loss,is_update,fed_loss`
    /// (`fed_loss` is empty on non-update rounds).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,action,composite_loss,is_update,fed_loss\n");
        let mut next_update = 0usize;
        for (idx, (&action, &closs)) in self
            .actions
            .as_slice()
            .iter()
            .zip(&self.composite_losses)
            .enumerate()
        {
            let t = idx + 1;
            let is_update = next_update < self.update_rounds.len()
                && self.update_rounds[next_update] == t;
            let fed = if is_update {
                let s = format_float(self.fed_losses[next_update]);
                next_update += 1;
                s
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{t},{action},{},{},{fed}\n",
                format_float(closs),
                u8::from(is_update)
            ));
        }
        out
    }

    /// Compact JSON summary `{regret, best_arm, n_updates}`.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary {
            regret: f64,
            best_arm: usize,
            n_updates: usize,
        }
        Ok(serde_json::to_string(&Summary {
            regret: self.regret_record.regret,
            best_arm: self.regret_record.best_arm,
            n_updates: self.n_updates(),
        })?)
    }
}

/// A wrapper episode in progress. Step it once per round, or use
/// [`run_episode`] to drive a full horizon.
pub struct Episode<'a> {
    tensor: &'a LossTensor,
    policy: Policy,
    stream: BernoulliStream,
    action_rng: ChaCha12Rng,
    state: Option<WrapperState>,
    prev_was_update: bool,
    actions: Vec<usize>,
    composite_losses: Vec<f64>,
    update_rounds: Vec<usize>,
    fed_losses: Vec<f64>,
    stability_trace: Vec<f64>,
}

impl<'a> Episode<'a> {
    pub fn new(
        tensor: &'a LossTensor,
        policy_config: &PolicyConfig,
        beta: f64,
        master_seed: u64,
    ) -> Result<Self> {
        if policy_config.num_arms != tensor.num_arms() {
            return Err(Error::Parameter(format!(
                "policy has {} arms but the tensor has {}",
                policy_config.num_arms,
                tensor.num_arms()
            )));
        }
        let d = tensor.max_delay();
        let stream = BernoulliStream::new(beta, d, seed::stream(master_seed, "bernoulli", 0))?;
        Ok(Self {
            tensor,
            policy: Policy::new(policy_config)?,
            stream,
            action_rng: seed::stream(master_seed, "action", 0),
            state: None,
            prev_was_update: false,
            actions: Vec::with_capacity(tensor.horizon()),
            composite_losses: Vec::with_capacity(tensor.horizon()),
            update_rounds: Vec::new(),
            fed_losses: Vec::new(),
            stability_trace: Vec::new(),
        })
    }

    pub fn round(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.round)
    }

    pub fn state(&self) -> Option<&WrapperState> {
        self.state.as_ref()
    }

    /// Advance one round: draw or stay, observe the composite loss, and
    /// feed the base policy if this is an update round.
    pub fn step(&mut self) -> Result<()> {
        let d = self.tensor.max_delay();
        let t = self.round() + 1;
        if t > self.tensor.horizon() {
            return Err(Error::InvalidRound {
                t,
                horizon: self.tensor.horizon(),
            });
        }

        // Draw round: first round, or the previous round was an update round.
        if t == 1 || self.prev_was_update {
            let dist = self.policy.distribution()?;
            let action = dist.sample(&mut self.action_rng);
            let block_index = self.state.as_ref().map_or(1, |s| s.block_index + 1);
            self.state = Some(WrapperState {
                block_index,
                current_dist: dist,
                current_action: action,
                window_buffer: self
                    .state
                    .take()
                    .map_or_else(|| VecDeque::with_capacity(d + 2), |s| s.window_buffer),
                round: t,
            });
        } else {
            let state = self.state.as_mut().expect("state exists after round 1");
            state.round = t;
        }
        let state = self.state.as_mut().expect("state initialized above");

        // Play the frozen action and observe this round's composite loss.
        self.actions.push(state.current_action);
        let window_len = t.min(d + 1);
        let composite = self
            .tensor
            .composite_loss(t, &self.actions[t - window_len..t])?;
        self.composite_losses.push(composite);
        state.window_buffer.push_back(composite);
        if state.window_buffer.len() > d + 1 {
            state.window_buffer.pop_front();
        }

        self.stream.advance();
        let update = self.stream.is_update_now();
        self.prev_was_update = update;
        if update {
            // The window holds exactly d+1 losses here (t >= 2d+1), all
            // concerning the frozen action; normalize by 2d+1.
            let window_sum: f64 = state.window_buffer.iter().sum();
            let fed_raw = window_sum / (2 * d + 1) as f64;
            if !(-FED_LOSS_SLACK..=1.0 + FED_LOSS_SLACK).contains(&fed_raw) {
                return Err(Error::InternalInvariant(format!(
                    "fed loss {fed_raw} outside [0,1] at round {t}: corrupted tensor or bug"
                )));
            }
            let fed = fed_raw.clamp(0.0, 1.0);
            let before = state.current_dist.clone();
            self.policy.update(state.current_action, fed)?;
            let after = self.policy.distribution()?;
            self.stability_trace.push(before.positive_movement(&after));
            self.update_rounds.push(t);
            self.fed_losses.push(fed);
        }
        Ok(())
    }

    /// Run to the horizon and collect the full trace.
    pub fn finish(mut self) -> Result<RunRecord> {
        while self.round() < self.tensor.horizon() {
            self.step()?;
        }
        let actions = ActionSequence(self.actions);
        let regret_record = self.tensor.regret(&actions)?;
        Ok(RunRecord {
            actions,
            composite_losses: self.composite_losses,
            update_rounds: self.update_rounds,
            fed_losses: self.fed_losses,
            regret_record,
            stability_trace: self.stability_trace,
        })
    }
}

/// Run one full episode of the wrapper. Deterministic given the seed.
pub fn run_episode(
    tensor: &LossTensor,
    policy_config: &PolicyConfig,
    beta: f64,
    master_seed: u64,
) -> Result<RunRecord> {
    Episode::new(tensor, policy_config, beta, master_seed)?.finish()
}
