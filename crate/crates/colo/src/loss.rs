//! Loss instances, the composite loss, and regret accounting.
//!
//! An adversarial instance is a dense tensor of loss components
//! `component(t, s, i)`: the portion of arm `i`'s round-`t` loss that is
//! charged `s` rounds later, for `s` in `0..=d`. Components are
//! nonnegative and, for each `(t, i)`, sum over `s` to at most 1, so the
//! true per-round loss of every arm stays in `[0, 1]`.
//!
//! What a player observes at round `t` is only the composite loss: the sum
//! of components falling due at `t` from its own last `d+1` actions.
//! Regret is defined against the best fixed arm under the same composite
//! accounting.
//!
//! Rounds are 1-based (`t` in `1..=T`); arm ids are 0-based (`0..K`).
//! Component reads outside `1..=T` return 0: losses before the start never
//! existed, and the simulator truncates at the horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack accepted when validating the per-(t, i) component sum against 1.
/// Generators legitimately produce sums of exactly 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Format a float with 17 significant digits (exact round-trip).
pub(crate) fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Dense loss-component tensor over rounds × delay slots × arms.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTensor {
    horizon: usize,
    max_delay: usize,
    num_arms: usize,
    /// Row-major, `t` outermost: `values[((t-1)*(d+1) + s)*K + i]`.
    values: Vec<f64>,
}

impl LossTensor {
    /// Build a tensor from raw component values and validate it.
    pub fn from_values(
        horizon: usize,
        max_delay: usize,
        num_arms: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let tensor = Self {
            horizon,
            max_delay,
            num_arms,
            values,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    /// All-zero tensor with the given dimensions.
    pub fn zeros(horizon: usize, max_delay: usize, num_arms: usize) -> Result<Self> {
        let len = horizon
            .checked_mul(max_delay + 1)
            .and_then(|n| n.checked_mul(num_arms))
            .ok_or_else(|| Error::Parameter("tensor dimensions overflow".into()))?;
        Self::from_values(horizon, max_delay, num_arms, vec![0.0; len])
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn max_delay(&self) -> usize {
        self.max_delay
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    #[inline]
    fn offset(&self, t: usize, s: usize, arm: usize) -> usize {
        ((t - 1) * (self.max_delay + 1) + s) * self.num_arms + arm
    }

    /// Loss component of arm `arm` charged `s` rounds after round `t`.
    ///
    /// Reads with `t` outside `1..=T` (including nonpositive `t`) return 0,
    /// as do delay slots beyond `d`.
    #[inline]
    pub fn component(&self, t: i64, s: usize, arm: usize) -> f64 {
        debug_assert!(arm < self.num_arms);
        if t < 1 || t > self.horizon as i64 || s > self.max_delay {
            return 0.0;
        }
        self.values[self.offset(t as usize, s, arm)]
    }

    /// The true round-`t` loss of an arm: the sum of its components.
    pub fn true_loss(&self, t: usize, arm: usize) -> f64 {
        (0..=self.max_delay)
            .map(|s| self.component(t as i64, s, arm))
            .sum()
    }

    pub(crate) fn set(&mut self, t: usize, s: usize, arm: usize, value: f64) {
        let off = self.offset(t, s, arm);
        self.values[off] = value;
    }

    /// Check every tensor invariant: shape, finiteness, nonnegativity, and
    /// the per-(t, i) component-sum bound.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Parameter("horizon T must be >= 1".into()));
        }
        if self.num_arms == 0 {
            return Err(Error::Parameter("arm count K must be >= 1".into()));
        }
        let expected = self.horizon * (self.max_delay + 1) * self.num_arms;
        if self.values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "tensor values",
                expected,
                got: self.values.len(),
            });
        }
        for t in 1..=self.horizon {
            for arm in 0..self.num_arms {
                let mut sum = 0.0;
                for s in 0..=self.max_delay {
                    let v = self.values[self.offset(t, s, arm)];
                    if !v.is_finite() {
                        return Err(Error::TensorInvariant {
                            t,
                            arm,
                            detail: format!("non-finite component at s={s}"),
                        });
                    }
                    if v < 0.0 {
                        return Err(Error::TensorInvariant {
                            t,
                            arm,
                            detail: format!("negative component {v} at s={s}"),
                        });
                    }
                    sum += v;
                }
                if sum > 1.0 + SUM_TOLERANCE {
                    return Err(Error::TensorInvariant {
                        t,
                        arm,
                        detail: format!("component sum {sum} exceeds 1"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Composite loss observed at round `t` given the actions of the last
    /// `min(t, d+1)` rounds, oldest first and ending with round `t`'s action.
    ///
    /// A full `d+1`-length window is also accepted when `t <= d`; its leading
    /// entries correspond to rounds before the start and are ignored.
    pub fn composite_loss(&self, t: usize, window: &[usize]) -> Result<f64> {
        if t < 1 || t > self.horizon {
            return Err(Error::InvalidRound {
                t,
                horizon: self.horizon,
            });
        }
        let needed = t.min(self.max_delay + 1);
        if window.len() != needed && window.len() != self.max_delay + 1 {
            return Err(Error::LengthMismatch {
                what: "action window",
                expected: needed,
                got: window.len(),
            });
        }
        for &arm in window {
            if arm >= self.num_arms {
                return Err(Error::InvalidArm {
                    arm,
                    num_arms: self.num_arms,
                });
            }
        }
        let mut total = 0.0;
        // Component s comes from the action taken at round t - s.
        for s in 0..=self.max_delay.min(t - 1) {
            let arm = window[window.len() - 1 - s];
            total += self.component(t as i64 - s as i64, s, arm);
        }
        Ok(total)
    }

    /// Cumulative composite loss of playing `arm` on every round.
    pub fn comparator_loss(&self, arm: usize) -> Result<f64> {
        if arm >= self.num_arms {
            return Err(Error::InvalidArm {
                arm,
                num_arms: self.num_arms,
            });
        }
        let window = vec![arm; self.max_delay + 1];
        let mut total = 0.0;
        for t in 1..=self.horizon {
            let m = t.min(self.max_delay + 1);
            total += self.composite_loss(t, &window[..m])?;
        }
        Ok(total)
    }

    /// Regret of an action sequence against the best fixed arm.
    pub fn regret(&self, actions: &ActionSequence) -> Result<RegretRecord> {
        if actions.len() != self.horizon {
            return Err(Error::LengthMismatch {
                what: "action sequence",
                expected: self.horizon,
                got: actions.len(),
            });
        }
        actions.validate(self.num_arms)?;
        let a = actions.as_slice();
        let mut cumulative = 0.0;
        for t in 1..=self.horizon {
            let m = t.min(self.max_delay + 1);
            cumulative += self.composite_loss(t, &a[t - m..t])?;
        }
        let comparator_losses: Vec<f64> = (0..self.num_arms)
            .map(|arm| self.comparator_loss(arm))
            .collect::<Result<_>>()?;
        let best_arm = argmin(&comparator_losses);
        let regret = cumulative - comparator_losses[best_arm];
        Ok(RegretRecord {
            cumulative_composite_loss: cumulative,
            comparator_losses,
            best_arm,
            regret,
        })
    }
}

/// Index of the minimum value, lowest index on ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// The arms played over a run, one entry per round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSequence(pub Vec<usize>);

impl ActionSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, num_arms: usize) -> Result<()> {
        for &arm in &self.0 {
            if arm >= num_arms {
                return Err(Error::InvalidArm { arm, num_arms });
            }
        }
        Ok(())
    }
}

/// Outcome of regret accounting for one action sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    /// Total composite loss paid by the sequence.
    pub cumulative_composite_loss: f64,
    /// Cumulative composite loss of each fixed arm.
    pub comparator_losses: Vec<f64>,
    /// Best fixed arm in hindsight (lowest index on ties).
    pub best_arm: usize,
    /// `cumulative_composite_loss - comparator_losses[best_arm]`. May be
    /// negative for a lucky sequence.
    pub regret: f64,
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TensorJson {
    #[serde(rename = "T")]
    horizon: usize,
    d: usize,
    #[serde(rename = "K")]
    num_arms: usize,
    /// Nested `[t][s][i]`, all entries present.
    values: Vec<Vec<Vec<f64>>>,
}

impl LossTensor {
    /// CSV with header `t,s,i,value`: `t` is the 1-based round, `s` the
    /// delay slot, `i` the 0-based arm. Zero components are omitted;
    /// loaders default missing entries to 0.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,s,i,value\n");
        for t in 1..=self.horizon {
            for s in 0..=self.max_delay {
                for arm in 0..self.num_arms {
                    let v = self.values[self.offset(t, s, arm)];
                    if v != 0.0 {
                        out.push_str(&format!("{t},{s},{arm},{}\n", format_float(v)));
                    }
                }
            }
        }
        out
    }

    /// Parse the CSV form. Dimensions are inferred from the maximum indices
    /// present, with the result re-validated.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tensor CSV".into()))?;
        if header.trim() != "t,s,i,value" {
            return Err(Error::Parse(format!(
                "unexpected tensor CSV header {header:?}, want \"t,s,i,value\""
            )));
        }
        let mut entries = Vec::new();
        let (mut t_max, mut s_max, mut i_max) = (0usize, 0usize, 0usize);
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "tensor CSV line {}: expected 4 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse_idx = |s: &str, what: &str| {
                s.trim().parse::<usize>().map_err(|e| {
                    Error::Parse(format!("tensor CSV line {}: bad {what}: {e}", lineno + 2))
                })
            };
            let t = parse_idx(fields[0], "round t")?;
            let s = parse_idx(fields[1], "delay slot s")?;
            let i = parse_idx(fields[2], "arm i")?;
            let v = fields[3].trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("tensor CSV line {}: bad value: {e}", lineno + 2))
            })?;
            if t == 0 {
                return Err(Error::Parse(format!(
                    "tensor CSV line {}: round t must be >= 1",
                    lineno + 2
                )));
            }
            t_max = t_max.max(t);
            s_max = s_max.max(s);
            i_max = i_max.max(i);
            entries.push((t, s, i, v));
        }
        if entries.is_empty() {
            return Err(Error::Parse("tensor CSV has no data rows".into()));
        }
        let (horizon, max_delay, num_arms) = (t_max, s_max, i_max + 1);
        let mut values = vec![0.0; horizon * (max_delay + 1) * num_arms];
        for (t, s, i, v) in entries {
            values[((t - 1) * (max_delay + 1) + s) * num_arms + i] = v;
        }
        Self::from_values(horizon, max_delay, num_arms, values)
    }

    /// Compact JSON form `{T, d, K, values}` with `values[t][s][i]` nested.
    pub fn to_json_string(&self) -> Result<String> {
        let mut nested = Vec::with_capacity(self.horizon);
        for t in 1..=self.horizon {
            let mut by_slot = Vec::with_capacity(self.max_delay + 1);
            for s in 0..=self.max_delay {
                let row: Vec<f64> = (0..self.num_arms)
                    .map(|arm| self.values[self.offset(t, s, arm)])
                    .collect();
                by_slot.push(row);
            }
            nested.push(by_slot);
        }
        Ok(serde_json::to_string(&TensorJson {
            horizon: self.horizon,
            d: self.max_delay,
            num_arms: self.num_arms,
            values: nested,
        })?)
    }

    /// Parse and re-validate the JSON form.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let parsed: TensorJson = serde_json::from_str(text)?;
        let mut values = Vec::with_capacity(parsed.horizon * (parsed.d + 1) * parsed.num_arms);
        if parsed.values.len() != parsed.horizon {
            return Err(Error::LengthMismatch {
                what: "tensor JSON rounds",
                expected: parsed.horizon,
                got: parsed.values.len(),
            });
        }
        for by_slot in &parsed.values {
            if by_slot.len() != parsed.d + 1 {
                return Err(Error::LengthMismatch {
                    what: "tensor JSON delay slots",
                    expected: parsed.d + 1,
                    got: by_slot.len(),
                });
            }
            for row in by_slot {
                if row.len() != parsed.num_arms {
                    return Err(Error::LengthMismatch {
                        what: "tensor JSON arms",
                        expected: parsed.num_arms,
                        got: row.len(),
                    });
                }
                values.extend_from_slice(row);
            }
        }
        Self::from_values(parsed.horizon, parsed.d, parsed.num_arms, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_spread(horizon: usize, d: usize, k: usize) -> LossTensor {
        // Every component equals 1/(d+1), so every true loss is exactly 1.
        let v = 1.0 / (d + 1) as f64;
        let values = vec![v; horizon * (d + 1) * k];
        LossTensor::from_values(horizon, d, k, values).unwrap()
    }

    #[test]
    fn composite_with_d0_is_the_plain_loss() {
        let mut tensor = LossTensor::zeros(3, 0, 2).unwrap();
        tensor.set(1, 0, 0, 0.25);
        tensor.set(2, 0, 1, 0.5);
        assert_eq!(tensor.composite_loss(1, &[0]).unwrap(), 0.25);
        assert_eq!(tensor.composite_loss(2, &[1]).unwrap(), 0.5);
        assert_eq!(tensor.composite_loss(3, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_spread_boundary() {
        let d = 3;
        let tensor = constant_spread(10, d, 2);
        // t >= d+1: a constant window sums d+1 components of 1/(d+1).
        let w = vec![0usize; d + 1];
        for t in d + 1..=10 {
            let v = tensor.composite_loss(t, &w).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "t={t}: {v}");
        }
        // t = 1: only the s=0 component exists.
        let v1 = tensor.composite_loss(1, &[0]).unwrap();
        assert!((v1 - 1.0 / (d + 1) as f64).abs() < 1e-15);
    }

    #[test]
    fn full_width_window_ignores_prehistory_entries() {
        let d = 2;
        let tensor = constant_spread(5, d, 3);
        let short = tensor.composite_loss(1, &[2]).unwrap();
        // Leading entries map to rounds <= 0 and must not matter.
        let padded = tensor.composite_loss(1, &[0, 1, 2]).unwrap();
        assert_eq!(short, padded);
    }

    #[test]
    fn comparator_on_zero_tensor_is_zero() {
        let tensor = LossTensor::zeros(7, 2, 3).unwrap();
        for arm in 0..3 {
            assert_eq!(tensor.comparator_loss(arm).unwrap(), 0.0);
        }
    }

    #[test]
    fn comparator_with_d0_is_loss_sum() {
        let mut tensor = LossTensor::zeros(4, 0, 2).unwrap();
        for t in 1..=4 {
            tensor.set(t, 0, 0, 0.1 * t as f64);
        }
        let expected: f64 = (1..=4).map(|t| 0.1 * t as f64).sum();
        assert!((tensor.comparator_loss(0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn forced_regret_arithmetic() {
        // K=2, d=0, T=2, losses (0,1) per round, always play arm 1.
        let mut tensor = LossTensor::zeros(2, 0, 2).unwrap();
        tensor.set(1, 0, 1, 1.0);
        tensor.set(2, 0, 1, 1.0);
        let record = tensor.regret(&ActionSequence(vec![1, 1])).unwrap();
        assert_eq!(record.regret, 2.0);
        assert_eq!(record.best_arm, 0);
    }

    #[test]
    fn playing_best_arm_gives_zero_regret() {
        let tensor = constant_spread(9, 2, 3);
        let record = tensor.regret(&ActionSequence(vec![0; 9])).unwrap();
        assert!(record.regret.abs() < 1e-12);
    }

    #[test]
    fn best_arm_ties_break_low() {
        let tensor = LossTensor::zeros(3, 1, 4).unwrap();
        let record = tensor.regret(&ActionSequence(vec![3, 3, 3])).unwrap();
        assert_eq!(record.best_arm, 0);
    }

    #[test]
    fn invalid_window_arm_rejected() {
        let tensor = LossTensor::zeros(3, 0, 2).unwrap();
        assert!(matches!(
            tensor.composite_loss(1, &[5]),
            Err(Error::InvalidArm { .. })
        ));
    }

    #[test]
    fn sum_violation_reports_offending_cell() {
        let mut values = vec![0.0; 3 * 2 * 2];
        // t=2, arm 1: components 0.8 + 0.4 > 1.
        values[((2 - 1) * 2) * 2 + 1] = 0.8;
        values[((2 - 1) * 2 + 1) * 2 + 1] = 0.4;
        let err = LossTensor::from_values(3, 1, 2, values).unwrap_err();
        match err {
            Error::TensorInvariant { t, arm, .. } => {
                assert_eq!((t, arm), (2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut tensor = LossTensor::zeros(4, 2, 3).unwrap();
        tensor.set(1, 0, 0, 0.125);
        tensor.set(2, 1, 2, 0.1);
        tensor.set(4, 2, 1, 1.0 / 3.0);
        let csv = tensor.to_csv_string();
        let back = LossTensor::from_csv_str(&csv).unwrap();
        assert_eq!(tensor, back);

        let json = tensor.to_json_string().unwrap();
        let back = LossTensor::from_json_str(&json).unwrap();
        assert_eq!(tensor, back);
    }

    #[test]
    fn csv_loader_revalidates() {
        let csv = "t,s,i,value\n1,0,0,0.9\n1,1,0,0.9\n";
        let err = LossTensor::from_csv_str(csv).unwrap_err();
        assert!(matches!(err, Error::TensorInvariant { .. }));
    }
}
