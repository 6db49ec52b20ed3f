//! Follow-the-regularized-leader with the 1/2-Tsallis entropy penalty.
//!
//! Each round the policy plays the minimizer over the simplex of
//! `q -> sum_i Lhat(i) q(i) - 2 eta sum_i sqrt(q(i))`. The minimizer has the
//! closed form `q(i) = eta^2 / (Lhat(i) - lambda)^2`, where `lambda` is the
//! unique value below `min_i Lhat(i)` at which the closed form sums to 1.
//! [`solve_lambda`] finds it by safeguarded bisection with Newton polish.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::Distribution;

/// Residual tolerance on the simplex constraint `g(lambda) = 1`.
pub const LAMBDA_TOLERANCE: f64 = 1e-10;

/// Root of the normalization equation, with its achieved residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSolution {
    pub lambda: f64,
    /// `|g(lambda) - 1|` at the returned root.
    pub residual: f64,
}

/// Solve `g(lambda) = sum_i eta^2 / (w(i) - lambda)^2 = 1` for the unique
/// root below `min_i w(i)`.
///
/// The root is bracketed by `[min w - eta sqrt(K), min w - eta]`: at the
/// left end each of the K terms is at most 1/K, and at the right end the
/// minimum term alone is at least 1. `g` is strictly increasing on the
/// bracket, so bisection cannot fail; Newton steps are taken once the
/// residual is small, always guarded to stay inside the bracket.
pub fn solve_lambda(w: &[f64], eta: f64) -> Result<LambdaSolution> {
    if w.is_empty() {
        return Err(Error::Parameter("need at least one weight".into()));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::Parameter(format!(
            "eta must be finite and > 0, got {eta}"
        )));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericState("non-finite weight vector".into()));
    }
    let k = w.len();
    let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let g = |lam: f64| -> f64 {
        w.iter()
            .map(|&wi| {
                let r = eta / (wi - lam);
                r * r
            })
            .sum()
    };
    let g_prime = |lam: f64| -> f64 {
        w.iter()
            .map(|&wi| {
                let u = wi - lam;
                2.0 * eta * eta / (u * u * u)
            })
            .sum()
    };

    let mut lo = min_w - eta * (k as f64).sqrt();
    let mut hi = min_w - eta;
    if g(lo) > 1.0 + 1e-9 || g(hi) < 1.0 - 1e-9 {
        return Err(Error::InternalInvariant(format!(
            "lambda bracket sign check failed (g(lo)={}, g(hi)={})",
            g(lo),
            g(hi)
        )));
    }

    let mut lam = 0.5 * (lo + hi);
    for _ in 0..200 {
        let val = g(lam);
        let gap = (val - 1.0).abs();
        if gap <= LAMBDA_TOLERANCE {
            break;
        }
        if val < 1.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        let mut next = f64::NAN;
        if gap <= 1e-3 {
            let slope = g_prime(lam);
            if slope.is_finite() && slope > 0.0 {
                let candidate = lam - (val - 1.0) / slope;
                if candidate > lo && candidate < hi {
                    next = candidate;
                }
            }
        }
        if !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == lam {
            // Bracket exhausted at f64 resolution.
            break;
        }
        lam = next;
    }
    let residual = (g(lam) - 1.0).abs();
    if residual > LAMBDA_TOLERANCE {
        return Err(Error::InternalInvariant(format!(
            "lambda solver stalled at residual {residual}"
        )));
    }
    if !(lam < min_w) {
        return Err(Error::InternalInvariant(format!(
            "lambda {lam} not below min weight {min_w}"
        )));
    }
    Ok(LambdaSolution { lambda: lam, residual })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FtrlTsallis {
    eta: f64,
    /// Cumulative importance-weighted loss estimates `Lhat`.
    cum_est_loss: Vec<f64>,
    round: u64,
}

impl FtrlTsallis {
    pub fn new(num_arms: usize, eta: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::Parameter("arm count K must be >= 1".into()));
        }
        if !eta.is_finite() || eta <= 0.0 {
            // eta = 0 is follow-the-leader with arbitrary tie-breaking.
            return Err(Error::Parameter(format!(
                "FTRL learning rate must be finite and > 0, got {eta}"
            )));
        }
        Ok(Self {
            eta,
            cum_est_loss: vec![0.0; num_arms],
            round: 1,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn num_arms(&self) -> usize {
        self.cum_est_loss.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn cum_est_loss(&self) -> &[f64] {
        &self.cum_est_loss
    }

    /// The closed-form minimizer `q(i) = eta^2 / (Lhat(i) - lambda)^2`.
    pub fn distribution(&self) -> Result<Distribution> {
        let sol = solve_lambda(&self.cum_est_loss, self.eta)?;
        Distribution::new(
            self.cum_est_loss
                .iter()
                .map(|&wi| {
                    let r = self.eta / (wi - sol.lambda);
                    r * r
                })
                .collect(),
        )
    }

    /// Importance-weighted update at the played arm, using the exact
    /// probability played this round. No clipping is applied.
    pub fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.cum_est_loss.len() {
            return Err(Error::InvalidArm {
                arm,
                num_arms: self.cum_est_loss.len(),
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
        self.cum_est_loss[arm] += estimate;
        self.round += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_two_arm_lambda() {
        // 2 eta^2 / lambda^2 = 1 with w = 0 gives lambda = -sqrt(2) eta.
        let sol = solve_lambda(&[0.0, 0.0], 1.0).unwrap();
        assert!((sol.lambda + 2.0_f64.sqrt()).abs() < 1e-10);
        assert!(sol.residual <= LAMBDA_TOLERANCE);
    }

    #[test]
    fn single_arm_lambda_closed_form() {
        let sol = solve_lambda(&[5.0], 0.5).unwrap();
        assert!((sol.lambda - 4.5).abs() < 1e-12);
    }

    #[test]
    fn three_arm_lambda_matches_dense_scan() {
        // Dense 1e-6-step scan of g over the bracket, as an independent root
        // locator for w = (0, 1, 2), eta = 1.
        let w = [0.0, 1.0, 2.0];
        let eta = 1.0;
        let g = |lam: f64| -> f64 { w.iter().map(|&wi| (eta / (wi - lam)).powi(2)).sum() };
        let lo = -(3.0_f64.sqrt());
        let step = 1e-6;
        let mut scan_root = f64::NAN;
        let mut lam = lo;
        while lam < -1.0 {
            if g(lam) >= 1.0 {
                scan_root = lam;
                break;
            }
            lam += step;
        }
        let sol = solve_lambda(&w, eta).unwrap();
        assert!(
            (sol.lambda - scan_root).abs() <= step,
            "solver {} vs scan {scan_root}",
            sol.lambda
        );
    }

    #[test]
    fn uniform_start_and_single_arm_distributions() {
        let p = FtrlTsallis::new(2, 3.7).unwrap().distribution().unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-10);
        assert!((p.probs()[1] - 0.5).abs() < 1e-10);

        let single = FtrlTsallis::new(1, 1.0).unwrap().distribution().unwrap();
        assert!((single.probs()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn update_divides_by_played_probability() {
        // Uniform start, play arm 1 with loss 0.5: estimate 0.5/0.5 = 1.
        let mut p = FtrlTsallis::new(2, 1.0).unwrap();
        p.update(1, 0.5).unwrap();
        assert_eq!(p.cum_est_loss()[0], 0.0);
        assert!((p.cum_est_loss()[1] - 1.0).abs() < 1e-10);
        assert_eq!(p.round(), 2);
    }

    #[test]
    fn zero_loss_changes_nothing_but_the_round() {
        let mut p = FtrlTsallis::new(3, 2.0).unwrap();
        let before = p.distribution().unwrap();
        p.update(2, 0.0).unwrap();
        assert_eq!(p.round(), 2);
        assert_eq!(before, p.distribution().unwrap());
    }

    #[test]
    fn rejects_zero_learning_rate() {
        assert!(FtrlTsallis::new(2, 0.0).is_err());
    }

    #[test]
    fn lambda_below_min_weight() {
        let sol = solve_lambda(&[3.0, -1.0, 7.5, 0.25], 0.8).unwrap();
        assert!(sol.lambda < -1.0);
    }
}
