use crate::error::{Error, Result};
use crate::nodemodel::{transition_matrix, HyperParams, StateSpace};
use crate::scalar::{log_add_exp, Real};
use crate::wavelet::TreeShape;

use super::marginals::Indicator;

/// Largest number of joint configurations the brute-force oracle will visit.
pub const ORACLE_MAX_CONFIGS: u64 = 1 << 24;

/// Exact quantities by enumerating every hidden configuration of the grove.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub log_evidence: T,
    /// Posterior joint-state marginals, `node.flat() * S + state`.
    pub marginals: Vec<T>,
    /// `log P(indicator off at every node | D)` for the baseline followed by
    /// each factor.
    pub log_pjnp: Vec<T>,
}

/// Enumerates all `S^(nodes)` joint-state configurations for a node
/// likelihood table laid out as in
/// [`PosteriorGrove::from_log_likelihoods`](super::PosteriorGrove::from_log_likelihoods).
/// Each tree's prior is built directly from its own 2x2 transition matrices.
pub fn brute_force_oracle<T: Real>(
    shape: TreeShape,
    factors: usize,
    hp: &HyperParams<T>,
    log_m: &[T],
) -> Result<OracleResult<T>> {
    let states = StateSpace::new(factors);
    let size = states.size();
    let nodes = shape.node_count();
    if log_m.len() != nodes * size {
        return Err(Error::Shape("likelihood table does not match the grove".into()));
    }
    let configs = (size as f64).powi(nodes as i32);
    if configs > ORACLE_MAX_CONFIGS as f64 {
        return Err(Error::TooLarge(format!(
            "{configs} configurations exceed the oracle limit of {ORACLE_MAX_CONFIGS}"
        )));
    }
    let max_level = shape.max_level();
    let mut rho = Vec::new();
    let mut kappa = Vec::new();
    for j in 0..=max_level {
        rho.push(transition_matrix(j, hp.eta_rho, hp.gamma_rho)?);
        kappa.push(transition_matrix(j, hp.eta_kappa, hp.gamma_kappa)?);
    }
    let bit = |x: bool| usize::from(x);
    let log_prior_tree = |node: crate::wavelet::NodeIndex, parent: Option<usize>, child: usize| -> T {
        let mut lp = T::zero();
        let j = node.j as usize;
        let s_child = bit(states.s(child));
        lp = lp + match parent {
            None => rho[j].initial[s_child].ln(),
            Some(a) => rho[j].rows[bit(states.s(a))][s_child].ln(),
        };
        for l in 0..factors {
            let r_child = bit(states.r(child, l));
            lp = lp + match parent {
                None => kappa[j].initial[r_child].ln(),
                Some(a) => kappa[j].rows[bit(states.r(a, l))][r_child].ln(),
            };
        }
        lp
    };

    let indicators: Vec<Indicator> = std::iter::once(Indicator::Baseline)
        .chain((0..factors).map(Indicator::Factor))
        .collect();
    let mut log_evidence = T::neg_infinity();
    let mut log_marg = vec![T::neg_infinity(); nodes * size];
    let mut log_null = vec![T::neg_infinity(); indicators.len()];
    let mut config = vec![0usize; nodes];
    let all: Vec<_> = shape.top_down().collect();
    loop {
        let mut lj = T::zero();
        for &node in &all {
            let b = config[node.flat()];
            let parent = node.parent().map(|p| config[p.flat()]);
            lj = lj + log_prior_tree(node, parent, b) + log_m[node.flat() * size + b];
        }
        log_evidence = log_add_exp(log_evidence, lj);
        for (i, slot) in config.iter().enumerate() {
            let at = i * size + slot;
            log_marg[at] = log_add_exp(log_marg[at], lj);
        }
        for (ind, acc) in indicators.iter().zip(log_null.iter_mut()) {
            if config.iter().all(|&b| !ind.is_on(states, b)) {
                *acc = log_add_exp(*acc, lj);
            }
        }
        // mixed-radix increment
        let mut pos = 0;
        loop {
            if pos == nodes {
                let marginals = log_marg.iter().map(|&v| (v - log_evidence).exp()).collect();
                let log_pjnp = log_null.iter().map(|&v| v - log_evidence).collect();
                return Ok(OracleResult {
                    log_evidence,
                    marginals,
                    log_pjnp,
                });
            }
            config[pos] += 1;
            if config[pos] < size {
                break;
            }
            config[pos] = 0;
            pos += 1;
        }
    }
}
