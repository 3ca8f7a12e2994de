//! Pyramid inference on the Markov grove.
//!
//! The hidden states of all `L + 1` Markov trees are handled jointly on the
//! product space `{0,1}^(L+1)` (see [`StateSpace`] for the ordering). One
//! bottom-up pass produces, for every node, `log phi(b)` (likelihood of the
//! node's subtree given its own state `b`) and `log xi(a)` (the same given the
//! parent's state `a`). Everything else (posterior transitions, marginals,
//! joint-null probabilities, exact draws) follows from those tables.

mod bands;
mod data;
mod marginals;
mod oracle;
mod pjap;
mod sample;

pub use bands::{credible_bands, target_columns, BandTarget, CredibleBand};
pub use data::GroveData;
pub use marginals::{downward_marginals, posterior_mean_column, posterior_mean_z, Indicator, NodeMarginals};
pub use oracle::{brute_force_oracle, OracleResult, ORACLE_MAX_CONFIGS};
pub use pjap::{log_pjnp, pjap};
pub use sample::{sample_posterior, NodeDraw, PosteriorDraw};

use crate::error::{Error, Result};
use crate::nodemodel::{transition_matrix, FactorDesign, HyperParams, NodeModel, StateSpace};
use crate::scalar::{log_sum_exp, Real};
use crate::wavelet::{NodeIndex, TreeShape};

/// Prior log transition tables on the joint state space.
#[derive(Debug, Clone)]
pub(crate) struct JointPrior<T> {
    /// `[level][a * S + b]`; level 0 is unused.
    pub log_trans: Vec<Vec<T>>,
    /// Root (and father) prior over joint states.
    pub log_initial: Vec<T>,
}

impl<T: Real> JointPrior<T> {
    pub fn new(states: StateSpace, hp: &HyperParams<T>, max_level: u32) -> Result<Self> {
        let size = states.size();
        let mut log_trans = Vec::with_capacity(max_level as usize + 1);
        let mut log_initial = Vec::new();
        for j in 0..=max_level {
            let rho = transition_matrix(j, hp.eta_rho, hp.gamma_rho)?;
            let kappa = transition_matrix(j, hp.eta_kappa, hp.gamma_kappa)?;
            let (lr, lk) = (rho.log_rows(), kappa.log_rows());
            if j == 0 {
                let (ir, ik) = (rho.log_initial(), kappa.log_initial());
                log_initial = states
                    .iter()
                    .map(|b| {
                        (0..states.factors())
                            .fold(ir[states.s(b) as usize], |acc, l| acc + ik[states.r(b, l) as usize])
                    })
                    .collect();
            }
            let mut table = vec![T::zero(); size * size];
            for a in states.iter() {
                for b in states.iter() {
                    let mut v = lr[states.s(a) as usize][states.s(b) as usize];
                    for l in 0..states.factors() {
                        v = v + lk[states.r(a, l) as usize][states.r(b, l) as usize];
                    }
                    table[a * size + b] = v;
                }
            }
            log_trans.push(table);
        }
        Ok(Self { log_trans, log_initial })
    }
}

/// Father-coefficient posterior: a standalone node at level 0 with the root
/// prior.
#[derive(Debug, Clone, PartialEq)]
pub struct FatherPosterior<T> {
    pub log_marginal_lik: Vec<T>,
    /// Posterior over joint states.
    pub log_dist: Vec<T>,
    pub ig_rate: Vec<T>,
    /// `state * p + c`.
    pub means: Vec<T>,
    pub log_evidence: T,
}

/// Exact posterior of the grove after the bottom-up pass. Immutable and
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct PosteriorGrove<T> {
    shape: TreeShape,
    states: StateSpace,
    hp: HyperParams<T>,
    model: Option<NodeModel<T>>,
    n: usize,
    log_m: Vec<T>,
    log_phi: Vec<T>,
    log_xi: Vec<T>,
    log_post_trans: Vec<T>,
    log_root_dist: Vec<T>,
    log_evidence: T,
    ig_rate: Vec<T>,
    means: Vec<T>,
    father: Option<FatherPosterior<T>>,
}

/// Output of the bottom-up recursion.
struct Pyramid<T> {
    log_phi: Vec<T>,
    log_xi: Vec<T>,
    log_evidence: T,
}

fn pyramid<T: Real>(shape: TreeShape, states: StateSpace, prior: &JointPrior<T>, log_m: &[T]) -> Pyramid<T> {
    let size = states.size();
    let nodes = shape.node_count();
    let mut log_phi = vec![T::zero(); nodes * size];
    let mut log_xi = vec![T::zero(); nodes * size];
    let mut terms = vec![T::zero(); size];
    let mut log_evidence = T::neg_infinity();
    for node in shape.bottom_up() {
        let idx = node.flat();
        let row = idx * size;
        for b in 0..size {
            let mut v = log_m[row + b];
            if !shape.is_leaf(node) {
                for child in node.children() {
                    v = v + log_xi[child.flat() * size + b];
                }
            }
            log_phi[row + b] = v;
        }
        if node.is_root() {
            for b in 0..size {
                terms[b] = prior.log_initial[b] + log_phi[row + b];
            }
            log_evidence = log_sum_exp(&terms);
            log_xi[row..row + size].iter_mut().for_each(|x| *x = log_evidence);
        } else {
            let table = &prior.log_trans[node.j as usize];
            for a in 0..size {
                for b in 0..size {
                    terms[b] = table[a * size + b] + log_phi[row + b];
                }
                log_xi[row + a] = log_sum_exp(&terms);
            }
        }
    }
    Pyramid {
        log_phi,
        log_xi,
        log_evidence,
    }
}

fn check_inputs<T: Real>(data: &GroveData<T>, design: &FactorDesign, hp: &HyperParams<T>) -> Result<()> {
    if data.n() != design.n() {
        return Err(Error::Shape(format!(
            "{} observations but design describes {}",
            data.n(),
            design.n()
        )));
    }
    if hp.factor_count() != design.factor_count() {
        return Err(Error::Shape(format!(
            "{} effect scales for {} factors",
            hp.factor_count(),
            design.factor_count()
        )));
    }
    hp.validate()
}

/// Per-node log marginal likelihoods for all joint states, node-major.
fn node_log_marginals<T: Real>(data: &GroveData<T>, design: &FactorDesign, model: &NodeModel<T>) -> Vec<T> {
    let shape = data.shape();
    let size = model.states().size();
    let mut log_m = vec![T::zero(); shape.node_count() * size];
    let mut xtd = vec![T::zero(); design.coef_dim()];
    for node in shape.top_down() {
        let d = data.node(node);
        design.cross_into(d, &mut xtd);
        let dtd: T = d.iter().map(|&v| v * v).sum();
        let row = node.flat() * size;
        model.log_marginals(node.j, &xtd, dtd, &mut log_m[row..row + size]);
    }
    log_m
}

/// Overall log marginal likelihood `log xi_{0,0}` of the mother coefficients;
/// the cheap path used by hyperparameter search.
pub fn log_evidence<T: Real>(data: &GroveData<T>, design: &FactorDesign, hp: &HyperParams<T>) -> Result<T> {
    check_inputs(data, design, hp)?;
    let shape = data.shape();
    let model = NodeModel::new(design, hp, shape.max_level())?;
    let prior = JointPrior::new(model.states(), hp, shape.max_level())?;
    let log_m = node_log_marginals(data, design, &model);
    Ok(pyramid(shape, model.states(), &prior, &log_m).log_evidence)
}

/// Bottom-up pass over the mother tree plus the standalone father node.
pub fn upward_pass<T: Real>(data: &GroveData<T>, design: &FactorDesign, hp: &HyperParams<T>) -> Result<PosteriorGrove<T>> {
    check_inputs(data, design, hp)?;
    let shape = data.shape();
    let model = NodeModel::new(design, hp, shape.max_level())?;
    let states = model.states();
    let size = states.size();
    let p = model.coef_dim();
    let prior = JointPrior::new(states, hp, shape.max_level())?;

    let nodes = shape.node_count();
    let mut log_m = vec![T::zero(); nodes * size];
    let mut ig_rate = vec![T::zero(); nodes * size];
    let mut means = vec![T::zero(); nodes * size * p];
    let mut xtd = vec![T::zero(); p];
    for node in shape.top_down() {
        let d = data.node(node);
        design.cross_into(d, &mut xtd);
        let dtd: T = d.iter().map(|&v| v * v).sum();
        let idx = node.flat();
        for b in 0..size {
            let fit = model.fit(node.j, &xtd, dtd, b);
            log_m[idx * size + b] = fit.log_marginal;
            ig_rate[idx * size + b] = fit.ig_rate;
            means[(idx * size + b) * p..(idx * size + b + 1) * p].copy_from_slice(&fit.mean);
        }
    }

    let father = {
        let d = data.father();
        let xtd = design.cross(d);
        let dtd: T = d.iter().map(|&v| v * v).sum();
        let fits: Vec<_> = (0..size).map(|b| model.fit(0, &xtd, dtd, b)).collect();
        let log_marginal_lik: Vec<T> = fits.iter().map(|f| f.log_marginal).collect();
        let joint: Vec<T> = (0..size)
            .map(|b| prior.log_initial[b] + log_marginal_lik[b])
            .collect();
        let log_evidence = log_sum_exp(&joint);
        FatherPosterior {
            log_dist: joint.iter().map(|&v| v - log_evidence).collect(),
            ig_rate: fits.iter().map(|f| f.ig_rate).collect(),
            means: fits.iter().flat_map(|f| f.mean.iter().copied()).collect(),
            log_marginal_lik,
            log_evidence,
        }
    };

    let mut grove = PosteriorGrove::assemble(shape, states, hp.clone(), &prior, log_m)?;
    grove.model = Some(model);
    grove.n = design.n();
    grove.ig_rate = ig_rate;
    grove.means = means;
    grove.father = Some(father);
    Ok(grove)
}

impl<T: Real> PosteriorGrove<T> {
    /// Runs the recursion on an arbitrary node likelihood table
    /// (`log_m[node.flat() * 2^(L+1) + state]`). With a constant table this
    /// reproduces the prior Markov grove.
    pub fn from_log_likelihoods(
        shape: TreeShape,
        factors: usize,
        hp: &HyperParams<T>,
        log_m: Vec<T>,
    ) -> Result<Self> {
        let states = StateSpace::new(factors);
        if hp.factor_count() != factors {
            return Err(Error::Shape("hyperparameters do not match factor count".into()));
        }
        if log_m.len() != shape.node_count() * states.size() {
            return Err(Error::Shape(format!(
                "likelihood table has {} entries, expected {}",
                log_m.len(),
                shape.node_count() * states.size()
            )));
        }
        let prior = JointPrior::new(states, hp, shape.max_level())?;
        Self::assemble(shape, states, hp.clone(), &prior, log_m)
    }

    fn assemble(
        shape: TreeShape,
        states: StateSpace,
        hp: HyperParams<T>,
        prior: &JointPrior<T>,
        log_m: Vec<T>,
    ) -> Result<Self> {
        let size = states.size();
        let pyr = pyramid(shape, states, prior, &log_m);
        if !pyr.log_evidence.is_finite() {
            return Err(Error::Numerical(format!(
                "log evidence is {}",
                pyr.log_evidence
            )));
        }
        let root_row = NodeIndex::ROOT.flat() * size;
        let log_root_dist: Vec<T> = (0..size)
            .map(|b| prior.log_initial[b] + pyr.log_phi[root_row + b] - pyr.log_evidence)
            .collect();
        let nodes = shape.node_count();
        let mut log_post_trans = vec![T::neg_infinity(); nodes * size * size];
        for node in shape.top_down() {
            let idx = node.flat();
            let block = &mut log_post_trans[idx * size * size..(idx + 1) * size * size];
            if node.is_root() {
                for a in 0..size {
                    block[a * size..(a + 1) * size].copy_from_slice(&log_root_dist);
                }
                continue;
            }
            let table = &prior.log_trans[node.j as usize];
            for a in 0..size {
                let xi = pyr.log_xi[idx * size + a];
                for b in 0..size {
                    let prior_ab = table[a * size + b];
                    block[a * size + b] = if xi == T::neg_infinity() {
                        // parent state `a` has zero posterior mass; keep the prior row
                        prior_ab
                    } else {
                        prior_ab + pyr.log_phi[idx * size + b] - xi
                    };
                }
            }
        }
        Ok(Self {
            shape,
            states,
            hp,
            model: None,
            n: 0,
            log_m,
            log_phi: pyr.log_phi,
            log_xi: pyr.log_xi,
            log_post_trans,
            log_root_dist,
            log_evidence: pyr.log_evidence,
            ig_rate: Vec::new(),
            means: Vec::new(),
            father: None,
        })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn states(&self) -> StateSpace {
        self.states
    }

    pub fn hyper(&self) -> &HyperParams<T> {
        &self.hp
    }

    pub fn factor_count(&self) -> usize {
        self.states.factors()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log xi_{0,0}`: log marginal likelihood of all mother coefficients.
    pub fn log_evidence(&self) -> T {
        self.log_evidence
    }

    pub fn node_model(&self) -> Option<&NodeModel<T>> {
        self.model.as_ref()
    }

    pub fn father(&self) -> Option<&FatherPosterior<T>> {
        self.father.as_ref()
    }

    pub fn log_marginal_lik(&self, node: NodeIndex) -> &[T] {
        self.row(&self.log_m, node)
    }

    pub fn log_phi(&self, node: NodeIndex) -> &[T] {
        self.row(&self.log_phi, node)
    }

    pub fn log_xi(&self, node: NodeIndex) -> &[T] {
        self.row(&self.log_xi, node)
    }

    /// Posterior distribution of the root's joint state (log scale).
    pub fn log_root_dist(&self) -> &[T] {
        &self.log_root_dist
    }

    pub fn root_dist(&self) -> Vec<T> {
        self.log_root_dist.iter().map(|v| v.exp()).collect()
    }

    /// `log P(child = b | parent = a, D)` at `node`, row-major `a * S + b`.
    /// For the root every row equals the root distribution.
    pub fn log_post_trans(&self, node: NodeIndex) -> &[T] {
        let s2 = self.states.size() * self.states.size();
        &self.log_post_trans[node.flat() * s2..(node.flat() + 1) * s2]
    }

    /// Conditional posterior rate `nu sigma0^2 + Upsilon` for one state.
    pub fn ig_rate(&self, node: NodeIndex, state: usize) -> Option<T> {
        self.ig_rate.get(node.flat() * self.states.size() + state).copied()
    }

    /// Conditional posterior mean vector for one state.
    pub fn state_mean(&self, node: NodeIndex, state: usize) -> Option<&[T]> {
        let p = self.model.as_ref()?.coef_dim();
        let at = (node.flat() * self.states.size() + state) * p;
        self.means.get(at..at + p)
    }

    fn row<'a>(&self, table: &'a [T], node: NodeIndex) -> &'a [T] {
        let size = self.states.size();
        &table[node.flat() * size..(node.flat() + 1) * size]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodemodel::marginal_mg;

    fn small_instance(factors: usize) -> (GroveData<f64>, FactorDesign, HyperParams<f64>) {
        let design = if factors == 0 {
            FactorDesign::intercept_only(3)
        } else {
            FactorDesign::one_way(2, 2).unwrap()
        };
        let shape = TreeShape::new(2);
        let n = design.n();
        let mothers: Vec<f64> = (0..shape.node_count() * n)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3)
            .collect();
        let father: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let data = GroveData::from_parts(shape, n, father, mothers).unwrap();
        (data, design, HyperParams::with_factors(factors))
    }

    #[test]
    fn transitions_rows_sum_to_one() {
        for factors in [0, 1] {
            let (data, design, hp) = small_instance(factors);
            let g = upward_pass(&data, &design, &hp).unwrap();
            let size = g.states().size();
            for node in g.shape().top_down() {
                let t = g.log_post_trans(node);
                for a in 0..size {
                    let s: f64 = t[a * size..(a + 1) * size].iter().map(|v| v.exp()).sum();
                    assert!((s - 1.0).abs() < 1e-12, "{node}: {s}");
                }
            }
            assert!((g.root_dist().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(g.log_evidence().is_finite());
            assert_eq!(g.log_evidence(), log_evidence(&data, &design, &hp).unwrap());
        }
    }

    #[test]
    fn all_null_prior_gives_single_path_evidence() {
        let (data, design, mut hp) = small_instance(1);
        hp.eta_rho = 0.0;
        hp.eta_kappa = 0.0;
        let g = upward_pass(&data, &design, &hp).unwrap();
        let expect: f64 = data
            .shape()
            .top_down()
            .map(|node| marginal_mg(data.node(node), &design, false, &[false], node.j, &hp).unwrap())
            .sum();
        assert!((g.log_evidence() - expect).abs() < 1e-10 * expect.abs());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (data, _, hp) = small_instance(1);
        let design = FactorDesign::one_way(2, 3).unwrap();
        assert!(matches!(upward_pass(&data, &design, &hp), Err(Error::Shape(_))));
    }
}
