use crate::error::{Error, Result};
use crate::nodemodel::StateSpace;
use crate::scalar::Real;
use crate::wavelet::{CoefficientTree, NodeIndex, TreeShape};

use super::PosteriorGrove;

/// Which Markov tree an indicator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Indicator {
    /// `S`, the baseline-signal indicator.
    Baseline,
    /// `R_l` for factor `l` (0-based).
    Factor(usize),
}

impl Indicator {
    pub(crate) fn is_on(self, states: StateSpace, state: usize) -> bool {
        match self {
            Indicator::Baseline => states.s(state),
            Indicator::Factor(l) => states.r(state, l),
        }
    }

    pub(crate) fn check(self, states: StateSpace) -> Result<()> {
        match self {
            Indicator::Factor(l) if l >= states.factors() => Err(Error::Domain(format!(
                "factor index {l} out of range for {} factor(s)",
                states.factors()
            ))),
            _ => Ok(()),
        }
    }
}

/// Posterior marginal distribution of the joint state at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMarginals<T> {
    shape: TreeShape,
    states: StateSpace,
    probs: Vec<T>,
}

impl<T: Real> NodeMarginals<T> {
    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn states(&self) -> StateSpace {
        self.states
    }

    /// Distribution over joint states at `node`.
    pub fn at(&self, node: NodeIndex) -> &[T] {
        let size = self.states.size();
        &self.probs[node.flat() * size..(node.flat() + 1) * size]
    }

    /// `P(indicator = 1 | D)` at `node`, clamped to `[0, 1]` against
    /// rounding in the sum.
    pub fn pmap(&self, indicator: Indicator, node: NodeIndex) -> T {
        let states = self.states;
        let p: T = self
            .at(node)
            .iter()
            .enumerate()
            .filter(|(b, _)| indicator.is_on(states, *b))
            .map(|(_, &p)| p)
            .sum();
        p.max(T::zero()).min(T::one())
    }

    /// PMAPs for every node in breadth-first order.
    pub fn pmap_table(&self, indicator: Indicator) -> Result<Vec<T>> {
        indicator.check(self.states)?;
        Ok(self.shape.top_down().map(|node| self.pmap(indicator, node)).collect())
    }
}

/// Top-down recursion: child marginal = sum over parent states of
/// parent marginal times posterior transition.
pub fn downward_marginals<T: Real>(g: &PosteriorGrove<T>) -> NodeMarginals<T> {
    let shape = g.shape();
    let states = g.states();
    let size = states.size();
    let mut probs = vec![T::zero(); shape.node_count() * size];
    probs[..size].copy_from_slice(&g.root_dist());
    for node in shape.top_down().skip(1) {
        let parent = node.parent().expect("non-root").flat();
        let trans = g.log_post_trans(node);
        let idx = node.flat();
        for b in 0..size {
            let mut acc = T::zero();
            for a in 0..size {
                let pa = probs[parent * size + a];
                if pa > T::zero() {
                    acc = acc + pa * trans[a * size + b].exp();
                }
            }
            probs[idx * size + b] = acc;
        }
    }
    NodeMarginals { shape, states, probs }
}

/// `E(z_{j,k} | D)` at every node (and the father when available).
///
/// With no factors this is `P(S=1|D) n / (n + 1/tau_j) dbar`; in general it
/// averages the conditional means of the baseline coefficient over the joint
/// state marginals.
pub fn posterior_mean_z<T: Real>(g: &PosteriorGrove<T>, marginals: &NodeMarginals<T>) -> CoefficientTree<T> {
    posterior_mean_column(g, marginals, 0)
}

/// Posterior mean of coefficient column `c` (0 is `z`, then the contrasts).
pub fn posterior_mean_column<T: Real>(
    g: &PosteriorGrove<T>,
    marginals: &NodeMarginals<T>,
    column: usize,
) -> CoefficientTree<T> {
    let shape = g.shape();
    let size = g.states().size();
    let mut tree = CoefficientTree::zeros(shape);
    if g.node_model().is_none() {
        return tree;
    }
    for node in shape.top_down() {
        let probs = marginals.at(node);
        let value = (0..size)
            .map(|b| probs[b] * g.state_mean(node, b).expect("fitted")[column])
            .sum();
        tree.set(node, value);
    }
    if let (Some(father), Some(model)) = (g.father(), g.node_model()) {
        let p = model.coef_dim();
        tree.father = (0..size)
            .map(|b| father.log_dist[b].exp() * father.means[b * p + column])
            .sum();
    }
    tree
}
