//! Exponential-weights bandit policy.
//!
//! Plays proportionally to `exp(-eta * Lhat(i))`, where `Lhat` accumulates
//! importance-weighted loss estimates. Weights live in log-space and the
//! distribution is formed by max-subtracted softmax: importance weights can
//! reach `1/q`, and the accumulated exponent would overflow a plain weight
//! representation over long horizons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::Distribution;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exp3 {
    eta: f64,
    /// `log_weights(i) = -eta * Lhat(i)`, starting at 0 (uniform play).
    log_weights: Vec<f64>,
    round: u64,
}

impl Exp3 {
    pub fn new(num_arms: usize, eta: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::Parameter("arm count K must be >= 1".into()));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::Parameter(format!(
                "Exp3 learning rate must be finite and > 0, got {eta}"
            )));
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; num_arms],
            round: 1,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn num_arms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn distribution(&self) -> Result<Distribution> {
        softmax(&self.log_weights)
    }

    /// Importance-weighted update at the played arm:
    /// `log_weights(arm) -= eta * loss / q(arm)` with the exact `q` played
    /// this round. No clipping is applied.
    pub fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.log_weights.len() {
            return Err(Error::InvalidArm {
                arm,
                num_arms: self.log_weights.len(),
            });
        }
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::FeedbackRange { loss });
        }
        let q = self.distribution()?;
        let estimate = loss / q.probs()[arm];
        if !estimate.is_finite() {
            return Err(Error::NumericState(format!(
                "importance-weighted estimate overflowed (q = {})",
                q.probs()[arm]
            )));
        }
        self.log_weights[arm] -= self.eta * estimate;
        self.round += 1;
        Ok(())
    }
}

/// Max-subtracted softmax over log-weights.
///
/// Entries whose exponent underflows are floored at the smallest positive
/// normal float: full support is a structural property of the policy, and
/// the floor is far below any observable probability.
pub(crate) fn softmax(log_weights: &[f64]) -> Result<Distribution> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericState("non-finite Exp3 log-weights".into()));
    }
    let unnormalized: Vec<f64> = log_weights
        .iter()
        .map(|&lw| (lw - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = unnormalized.iter().sum();
    Distribution::new(unnormalized.into_iter().map(|w| w / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_uniform() {
        let p = Exp3::new(4, 0.1).unwrap().distribution().unwrap();
        for &q in p.probs() {
            assert!((q - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_loss_changes_nothing_but_the_round() {
        let mut p = Exp3::new(3, 0.5).unwrap();
        let before = p.distribution().unwrap();
        p.update(1, 0.0).unwrap();
        assert_eq!(p.round(), 2);
        assert_eq!(before, p.distribution().unwrap());
    }

    #[test]
    fn one_step_exponential_weights() {
        // K=2, eta=0.5, uniform start, play arm 0 with loss 1:
        // estimate 1/0.5 = 2, so q_2 = (e^-1, 1) normalized.
        let mut p = Exp3::new(2, 0.5).unwrap();
        p.update(0, 1.0).unwrap();
        let q = p.distribution().unwrap();
        let z = 1.0 + (-1.0_f64).exp();
        assert!((q.probs()[0] - (-1.0_f64).exp() / z).abs() < 1e-12);
        assert!((q.probs()[1] - 1.0 / z).abs() < 1e-12);
        assert!((q.probs()[0] - 0.26894).abs() < 1e-5);
        assert!((q.probs()[1] - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn rejects_out_of_range_feedback() {
        let mut p = Exp3::new(2, 0.5).unwrap();
        assert!(matches!(
            p.update(0, 1.5),
            Err(Error::FeedbackRange { .. })
        ));
        assert!(matches!(
            p.update(0, -0.1),
            Err(Error::FeedbackRange { .. })
        ));
    }

    #[test]
    fn rejects_zero_learning_rate() {
        // eta = 0 would be follow-the-leader with arbitrary tie-breaking.
        assert!(Exp3::new(2, 0.0).is_err());
    }

    #[test]
    fn shifting_all_log_weights_is_invariant() {
        // Multiplying all unnormalized weights by a constant is a shift in
        // log-space and must not move the distribution.
        let lw = [0.0, -3.2, 1.7, -0.4];
        let shifted: Vec<f64> = lw.iter().map(|x| x + 123.456).collect();
        let a = softmax(&lw).unwrap();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn survives_deep_underflow() {
        let mut p = Exp3::new(3, 1.0).unwrap();
        // Push one arm's log-weight far below the others.
        for _ in 0..50 {
            p.update(2, 1.0).unwrap();
        }
        let q = p.distribution().unwrap();
        q.validate().unwrap();
        assert!(q.probs()[2] > 0.0);
    }
}
