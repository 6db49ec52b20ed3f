//! Independent brute-force oracles for the test suite and the
//! `validate`/`reduction-check` CLI subcommands.
//!
//! Everything here replays a definition literally and naively. None of it
//! shares logic with the optimized paths it checks; the only shared surface
//! is raw data access (`LossTensor::component` and friends).

use crate::error::{Error, Result};
use crate::loss::{ActionSequence, LossTensor};
use crate::policies::Distribution;

/// Literal replay of the composite-loss regret definition.
///
/// Triple loop over rounds, delay slots, and arms; no windows, no reuse of
/// the production accounting.
pub fn oracle_composite_regret(tensor: &LossTensor, actions: &ActionSequence) -> Result<f64> {
    let horizon = tensor.horizon();
    let d = tensor.max_delay();
    let k = tensor.num_arms();
    if actions.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "action sequence",
            expected: horizon,
            got: actions.len(),
        });
    }
    actions.validate(k)?;
    let a = actions.as_slice();

    let mut played = 0.0;
    for t in 1..=horizon as i64 {
        for s in 0..=d {
            let tp = t - s as i64;
            if tp >= 1 {
                played += tensor.component(tp, s, a[(tp - 1) as usize]);
            }
        }
    }

    let mut best = f64::INFINITY;
    for arm in 0..k {
        let mut total = 0.0;
        for t in 1..=horizon as i64 {
            for s in 0..=d {
                total += tensor.component(t - s as i64, s, arm);
            }
        }
        if total < best {
            best = total;
        }
    }
    Ok(played - best)
}

/// Exhaustive simplex-grid minimizer of the Tsallis objective
/// `q -> sum_i w(i) q(i) - 2 eta sum_i sqrt(q(i))`.
///
/// Capped at K <= 4 so a full grid stays affordable; the step divides the
/// simplex into multiples of `grid_step`.
pub fn oracle_tsallis_argmin(w: &[f64], eta: f64, grid_step: f64) -> Result<Distribution> {
    let k = w.len();
    if k == 0 || k > 4 {
        return Err(Error::Parameter(format!(
            "grid argmin supports 1 <= K <= 4, got {k}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1e-2) {
        return Err(Error::Parameter(format!(
            "grid step must be in (0, 1e-2], got {grid_step}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::Parameter("eta must be > 0".into()));
    }
    let n = (1.0 / grid_step).round() as usize;
    let h = 1.0 / n as f64;

    // Precompute w * (m*h) and sqrt(m*h) for m = 0..=n; the loops below
    // only add table entries.
    let sqrt_tab: Vec<f64> = (0..=n).map(|m| (m as f64 * h).sqrt()).collect();
    let lin_tab: Vec<Vec<f64>> = w
        .iter()
        .map(|&wi| (0..=n).map(|m| wi * (m as f64 * h)).collect())
        .collect();

    let two_eta = 2.0 * eta;
    let mut best_val = f64::INFINITY;
    let mut best = vec![0usize; k];

    match k {
        1 => {
            best[0] = n;
        }
        2 => {
            for m0 in 0..=n {
                let m1 = n - m0;
                let val = lin_tab[0][m0] + lin_tab[1][m1] - two_eta * (sqrt_tab[m0] + sqrt_tab[m1]);
                if val < best_val {
                    best_val = val;
                    best = vec![m0, m1];
                }
            }
        }
        3 => {
            for m0 in 0..=n {
                let c0 = lin_tab[0][m0] - two_eta * sqrt_tab[m0];
                for m1 in 0..=n - m0 {
                    let m2 = n - m0 - m1;
                    let val = c0 + lin_tab[1][m1] + lin_tab[2][m2]
                        - two_eta * (sqrt_tab[m1] + sqrt_tab[m2]);
                    if val < best_val {
                        best_val = val;
                        best = vec![m0, m1, m2];
                    }
                }
            }
        }
        _ => {
            for m0 in 0..=n {
                let c0 = lin_tab[0][m0] - two_eta * sqrt_tab[m0];
                for m1 in 0..=n - m0 {
                    let c1 = c0 + lin_tab[1][m1] - two_eta * sqrt_tab[m1];
                    for m2 in 0..=n - m0 - m1 {
                        let m3 = n - m0 - m1 - m2;
                        let val = c1 + lin_tab[2][m2] + lin_tab[3][m3]
                            - two_eta * (sqrt_tab[m2] + sqrt_tab[m3]);
                        if val < best_val {
                            best_val = val;
                            best = vec![m0, m1, m2, m3];
                        }
                    }
                }
            }
        }
    }

    let probs: Vec<f64> = best.iter().map(|&m| m as f64 * h).collect();
    Distribution::from_probs_unchecked(probs)
}

/// Tsallis objective value at a point (grid points may sit on the simplex
/// boundary, where sqrt is still fine).
pub fn tsallis_objective(w: &[f64], eta: f64, q: &[f64]) -> f64 {
    let linear: f64 = w.iter().zip(q).map(|(wi, qi)| wi * qi).sum();
    let reg: f64 = q.iter().map(|qi| qi.sqrt()).sum();
    linear - 2.0 * eta * reg
}

/// Literal two-sided evaluation of the sum-reordering identity
///
/// `sum_{t=a-d}^{a-1} (t-a+d+1) c_t + (d+1) sum_{t=a}^{b} c_t
///   + sum_{t=b+1}^{b+d} (b+d+1-t) c_t  =  sum_{tau=a}^{b+d} sum_{t=tau-d}^{tau} c_t`.
///
/// `c` covers the index range `[a-d, b+d]`, so `c[0]` is `c_{a-d}`.
/// Returns true iff both sides agree to relative tolerance 1e-9.
pub fn check_ragionieri(c: &[f64], a: i64, b: i64, d: i64) -> Result<bool> {
    if a > b || d < 0 {
        return Err(Error::Parameter(format!(
            "need a <= b and d >= 0, got a={a}, b={b}, d={d}"
        )));
    }
    let expected_len = (b + d - (a - d) + 1) as usize;
    if c.len() != expected_len {
        return Err(Error::LengthMismatch {
            what: "coefficient array",
            expected: expected_len,
            got: c.len(),
        });
    }
    let at = |t: i64| -> f64 { c[(t - (a - d)) as usize] };

    let mut lhs = 0.0;
    for t in a - d..=a - 1 {
        lhs += (t - a + d + 1) as f64 * at(t);
    }
    for t in a..=b {
        lhs += (d + 1) as f64 * at(t);
    }
    for t in b + 1..=b + d {
        lhs += (b + d + 1 - t) as f64 * at(t);
    }

    let mut rhs = 0.0;
    for tau in a..=b + d {
        for t in tau - d..=tau {
            rhs += at(t);
        }
    }

    Ok((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()))
}

/// True iff for every arm `i` and every `t` in `[2d+1, T-d]`, the composite
/// losses of the constant-`i` window over `t-d..=t` sum to at most `2d+1`.
pub fn check_window_bound(tensor: &LossTensor) -> Result<bool> {
    let horizon = tensor.horizon();
    let d = tensor.max_delay();
    if horizon < 2 * d + 1 {
        return Ok(true);
    }
    for arm in 0..tensor.num_arms() {
        let window = vec![arm; d + 1];
        for t in 2 * d + 1..=horizon.saturating_sub(d) {
            let mut sum = 0.0;
            for tau in t - d..=t {
                sum += tensor.composite_loss(tau, &window)?;
            }
            if sum > (2 * d + 1) as f64 + 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Definition replay of the update-round rule over a whole boolean stream:
/// round `t` (1-based) is an update round iff `t >= 2d+1`, `b_t = 1`, and
/// the preceding `2d` values are all 0.
pub fn oracle_update_rounds(bits: &[bool], d: usize) -> Vec<usize> {
    let mut rounds = Vec::new();
    for t in 1..=bits.len() {
        if t < 2 * d + 1 || !bits[t - 1] {
            continue;
        }
        if (1..=2 * d).all(|s| !bits[t - 1 - s]) {
            rounds.push(t);
        }
    }
    rounds
}

/// Replay of the block-reduction feedback structure on a run.
///
/// Given the linear loss vectors the instance was built from and a played
/// action sequence, checks that the observed composite losses vanish off
/// multiples of `d+1` and equal `(d+1) * <l_u, q_t>` on them, where `q_t`
/// is the empirical distribution of the last `d+1` actions. Tolerance 1e-12.
pub fn check_reduction_replay(
    linear_losses: &[Vec<f64>],
    d: usize,
    actions: &ActionSequence,
    composite_losses: &[f64],
) -> Result<bool> {
    let horizon = actions.len();
    if composite_losses.len() != horizon {
        return Err(Error::LengthMismatch {
            what: "composite losses",
            expected: horizon,
            got: composite_losses.len(),
        });
    }
    let a = actions.as_slice();
    for t in 1..=horizon {
        let observed = composite_losses[t - 1];
        if t % (d + 1) != 0 {
            if observed.abs() > 1e-12 {
                return Ok(false);
            }
            continue;
        }
        let u = t / (d + 1); // == ceil(t/(d+1)) at multiples
        let lu = &linear_losses[u - 1];
        let mut expected = 0.0;
        // (d+1) * <l_u, q_t> with q_t(j) = |{s in t-d..=t : a_s = j}| / (d+1):
        // the normalizations cancel, leaving a plain sum over the window.
        for s in t - d..=t {
            expected += lu[a[s - 1]];
        }
        if (observed - expected).abs() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Comparator identity on reduction instances:
/// `min_k sum_t composite(k,...,k) = (d+1) * min_k sum_u l_u(k)`.
///
/// Exact (bit-level) when the linear losses are 0/1-valued; otherwise both
/// sides agree to relative tolerance `tol`.
pub fn check_reduction_comparator(
    linear_losses: &[Vec<f64>],
    tensor: &LossTensor,
    tol: f64,
) -> Result<bool> {
    let k = tensor.num_arms();
    let d = tensor.max_delay();
    let mut lhs = f64::INFINITY;
    for arm in 0..k {
        let total = tensor.comparator_loss(arm)?;
        if total < lhs {
            lhs = total;
        }
    }
    let mut rhs = f64::INFINITY;
    for arm in 0..k {
        let total: f64 = linear_losses.iter().map(|lu| lu[arm]).sum();
        if total < rhs {
            rhs = total;
        }
    }
    rhs *= (d + 1) as f64;
    if tol == 0.0 {
        return Ok(lhs == rhs);
    }
    Ok((lhs - rhs).abs() <= tol * (1.0 + rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::ActionSequence;

    #[test]
    fn ragionieri_zero_sequence() {
        let d = 3;
        let (a, b) = (2i64, 6i64);
        let len = (b + d - (a - d) + 1) as usize;
        assert!(check_ragionieri(&vec![0.0; len], a, b, d).unwrap());
    }

    #[test]
    fn ragionieri_d0_is_plain_sum() {
        let c = [1.0, 2.0, 3.0, 4.0];
        assert!(check_ragionieri(&c, 5, 8, 0).unwrap());
    }

    #[test]
    fn oracle_regret_on_zero_tensor() {
        let tensor = LossTensor::zeros(6, 2, 3).unwrap();
        let r = oracle_composite_regret(&tensor, &ActionSequence(vec![0, 1, 2, 0, 1, 2])).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn grid_argmin_symmetric_two_arms() {
        let q = oracle_tsallis_argmin(&[0.0, 0.0], 1.0, 1e-2).unwrap();
        assert!((q.probs()[0] - 0.5).abs() < 1e-2 + 1e-12);
        assert!((q.probs()[1] - 0.5).abs() < 1e-2 + 1e-12);
    }

    #[test]
    fn grid_argmin_single_arm() {
        let q = oracle_tsallis_argmin(&[5.0], 0.5, 1e-2).unwrap();
        assert_eq!(q.probs(), &[1.0]);
    }

    #[test]
    fn update_round_replay_matches_by_hand() {
        // d=1: update at t >= 3 with pattern 0,0,1.
        let bits = [true, false, false, true, true, false, false, true];
        assert_eq!(oracle_update_rounds(&bits, 1), vec![4, 8]);
    }
}
