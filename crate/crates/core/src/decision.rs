//! Node-level calls from posterior marginal alternative probabilities:
//! thresholding, expected false positives and Bayesian FDR.

use crate::error::{Error, Result};
use crate::wavelet::NodeIndex;

/// Calls for one factor at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionReport {
    pub factor: usize,
    pub delta: f64,
    /// Nodes with `PMAP > delta`, breadth-first.
    pub called: Vec<NodeIndex>,
    /// Expected number of false positives among the calls.
    pub nfp: f64,
    /// `nfp / |called|`, or 0 when nothing is called.
    pub fdr: f64,
    pub pjap: Option<f64>,
}

/// Outcome of an FDR-targeted threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Calling every PMAP strictly above `delta` achieves the target.
    Delta(f64),
    /// Even the top tie block exceeds the target; `delta` lies above every
    /// PMAP so nothing is called.
    NoCalls(f64),
}

impl Threshold {
    pub fn delta(self) -> f64 {
        match self {
            Threshold::Delta(d) | Threshold::NoCalls(d) => d,
        }
    }
}

fn check_pmaps(pmaps: &[f64]) -> Result<()> {
    match pmaps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(bad) => Err(Error::Domain(format!("PMAP {bad} outside [0,1]"))),
        None => Ok(()),
    }
}

/// PMAPs are given breadth-first (`pmaps[node.flat()]`).
pub fn evaluate(pmaps: &[f64], delta: f64, factor: usize, pjap: Option<f64>) -> Result<DecisionReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("threshold {delta} outside (0,1)")));
    }
    check_pmaps(pmaps)?;
    let called: Vec<NodeIndex> = (0..pmaps.len())
        .filter(|&i| pmaps[i] > delta)
        .map(NodeIndex::from_flat)
        .collect();
    let nfp: f64 = called.iter().map(|n| 1.0 - pmaps[n.flat()]).sum();
    let fdr = if called.is_empty() { 0.0 } else { nfp / called.len() as f64 };
    Ok(DecisionReport {
        factor,
        delta,
        called,
        nfp,
        fdr,
        pjap,
    })
}

/// Largest call set, grown in decreasing PMAP order one tie block at a time,
/// whose running FDR stays within `target`. The returned threshold sits
/// halfway between the last included PMAP and the next lower one (or 0).
pub fn threshold_for_fdr(pmaps: &[f64], target: f64) -> Result<Threshold> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target FDR {target} outside (0,1)")));
    }
    check_pmaps(pmaps)?;
    let mut sorted = pmaps.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("checked finite"));
    let top = sorted.first().copied().unwrap_or(0.0);
    let mut nfp = 0.0;
    let mut best: Option<usize> = None;
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i];
        let mut end = i;
        while end < sorted.len() && sorted[end] == value {
            nfp += 1.0 - sorted[end];
            end += 1;
        }
        // a zero-PMAP block can never be called with delta > 0
        if value > 0.0 && nfp / end as f64 <= target {
            best = Some(end);
        }
        i = end;
    }
    match best {
        Some(end) => {
            let last = sorted[end - 1];
            let next = sorted.get(end).copied().unwrap_or(0.0);
            Ok(Threshold::Delta(0.5 * (last + next)))
        }
        None => Ok(Threshold::NoCalls(0.5 * (top + 1.0))),
    }
}
