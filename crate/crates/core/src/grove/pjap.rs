use crate::error::Result;
use crate::scalar::{log_sum_exp, Real};

use super::marginals::Indicator;
use super::PosteriorGrove;

/// `log P(indicator = 0 at every node | D)`.
///
/// Bottom-up over the posterior Markov tree, tracking the full joint state of
/// the other chains while forcing the chosen indicator to stay at 0: for a
/// parent state `a` with the indicator off,
/// `psi(a) = sum_{b: off} P(b | a, D) * prod_children psi_child(b)`.
pub fn log_pjnp<T: Real>(g: &PosteriorGrove<T>, indicator: Indicator) -> Result<T> {
    let states = g.states();
    indicator.check(states)?;
    let shape = g.shape();
    let size = states.size();
    let off: Vec<usize> = states.iter().filter(|&b| !indicator.is_on(states, b)).collect();
    // log psi for every node, indexed by parent state (only `off` entries used)
    let mut log_psi = vec![T::neg_infinity(); shape.node_count() * size];
    let mut terms = Vec::with_capacity(off.len());
    let subtree = |log_psi: &[T], node: crate::wavelet::NodeIndex, b: usize| -> T {
        if shape.is_leaf(node) {
            T::zero()
        } else {
            node.children()
                .iter()
                .map(|c| log_psi[c.flat() * size + b])
                .fold(T::zero(), |acc, v| acc + v)
        }
    };
    for node in shape.bottom_up() {
        if node.is_root() {
            break;
        }
        let trans = g.log_post_trans(node);
        for &a in &off {
            terms.clear();
            for &b in &off {
                terms.push(trans[a * size + b] + subtree(&log_psi, node, b));
            }
            log_psi[node.flat() * size + a] = log_sum_exp(&terms);
        }
    }
    let root = crate::wavelet::NodeIndex::ROOT;
    let root_dist = g.log_root_dist();
    terms.clear();
    for &b in &off {
        terms.push(root_dist[b] + subtree(&log_psi, root, b));
    }
    Ok(log_sum_exp(&terms).min(T::zero()))
}

/// Posterior joint alternative probability `1 - PJNP` for one indicator.
pub fn pjap<T: Real>(g: &PosteriorGrove<T>, indicator: Indicator) -> Result<T> {
    Ok(-log_pjnp(g, indicator)?.exp_m1())
}
