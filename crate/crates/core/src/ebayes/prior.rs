use crate::error::{Error, Result};
use crate::nodemodel::transition_matrix;

/// Prior joint alternative probability of one indicator chain on a tree with
/// levels `0..=max_level`: one minus the probability that the chain never
/// leaves state 0. Only 0-to-0 transitions enter, so `gamma` affects the
/// chain's dynamics but not this probability; it is validated all the same.
pub fn prior_pjap(eta: f64, gamma: f64, max_level: u32) -> Result<f64> {
    Ok(-prior_log_pjnp(eta, gamma, max_level)?.exp_m1())
}

/// `log` of the prior joint null probability.
pub fn prior_log_pjnp(eta: f64, gamma: f64, max_level: u32) -> Result<f64> {
    // log P(subtree below a level-j node stays null | node null)
    let mut below = 0.0;
    for j in (1..=max_level).rev() {
        let stay = transition_matrix(j, eta, gamma)?.rows[0][0];
        below = 2.0 * (stay.ln() + below);
    }
    let root = transition_matrix(0, eta, gamma)?.initial[0];
    Ok(root.ln() + below)
}

/// Solves `prior_pjap(eta, gamma, max_level) = target` for `eta` by
/// bisection. The probability increases continuously from 0 at `eta = 0` to 1
/// at `eta = 1`, so every target in `(0, 1)` is reachable.
pub fn calibrate_sparsity(target: f64, gamma: f64, max_level: u32) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Range(format!(
            "prior PJAP target {target} is not reachable with eta in (0, 1]"
        )));
    }
    transition_matrix(0, 0.5, gamma)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prior_pjap(mid, gamma, max_level)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let eta = 0.5 * (lo + hi);
    let achieved = prior_pjap(eta, gamma, max_level)?;
    if (achieved - target).abs() > 1e-6 {
        return Err(Error::Range(format!(
            "bisection reached prior PJAP {achieved} for target {target}"
        )));
    }
    Ok(eta)
}
