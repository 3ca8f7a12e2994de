//! Closed-form node-level marginal likelihoods and conditional posteriors.
//!
//! At node `(j, k)` the observations follow `d = X(s, r) theta + u` with
//! `u ~ N(0, sigma^2 I)`, `theta | sigma^2 ~ N(0, sigma^2 Lambda_j^{-1})` and
//! `sigma^2 ~ Inv-Gamma(nu + 1, nu sigma0^2)`. Columns switched off by the
//! hidden state are zero in `X(s, r)`, so only the active block of
//! `Lambda*_j = X'X + Lambda_j` enters the determinant ratio and the quadratic
//! form.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::design::FactorDesign;
use super::hyper::HyperParams;
use super::linalg::Cholesky;
use super::state::StateSpace;

/// Log marginal likelihood of the one-factor-free model from sufficient
/// statistics `dbar`, `sumsq = sum_i d_i^2`, `n`.
pub fn marginal_mt<T: Real>(dbar: T, sumsq: T, n: usize, s: bool, j: u32, hp: &HyperParams<T>) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("marginal likelihood needs n >= 1".into()));
    }
    let nf = T::from_usize_lossy(n);
    let explained = nf * dbar * dbar;
    if !(sumsq >= explained * (T::one() - T::lit(1e-12))) {
        return Err(Error::Domain(format!(
            "impossible moments: sum of squares {sumsq} < n * mean^2 = {explained}"
        )));
    }
    let half = T::lit(0.5);
    let prior_rate = hp.nu * hp.sigma0_sq;
    let mut log_m = log_norm(hp.nu + T::one(), nf * half);
    let inv_tau = hp.tau_at(j).recip();
    let mut quad = sumsq;
    if s {
        log_m = log_m + half * (inv_tau / (nf + inv_tau)).ln();
        quad = quad - (nf * dbar) * (nf * dbar) / (nf + inv_tau);
    }
    let upsilon = (quad * half).max(T::zero());
    Ok(log_m + log_kernel(hp.nu + T::one(), nf * half, prior_rate, upsilon))
}

/// `ln Gamma(a + m) - ln Gamma(a)`, computed without cancellation for
/// large `a` (the Stirling remainder is below 1e-24 there).
fn log_gamma_ratio<T: Real>(a: T, m: T) -> T {
    if a < T::lit(1e3) {
        return (a + m).log_gamma() - a.log_gamma();
    }
    let tail = |x: T| {
        let x2 = x * x;
        (T::lit(1.0 / 12.0) - (T::lit(1.0 / 360.0) - T::lit(1.0 / 1260.0) / x2) / x2) / x
    };
    (a - T::lit(0.5)) * (m / a).ln_1p() + m * (a + m).ln() - m + tail(a + m) - tail(a)
}

/// State-free part of the log marginal for IG shape `a` and `m = n/2`.
fn log_norm<T: Real>(a: T, m: T) -> T {
    log_gamma_ratio(a, m) - m * T::TAU().ln()
}

/// `a ln b - (a + m) ln(b + U)`, rearranged so that huge `a` stays accurate.
fn log_kernel<T: Real>(a: T, m: T, prior_rate: T, upsilon: T) -> T {
    -a * (upsilon / prior_rate).ln_1p() - m * (prior_rate + upsilon).ln()
}

#[derive(Debug, Clone)]
struct StateBlock<T> {
    active: Vec<usize>,
    chol: Option<Cholesky<T>>,
    /// `0.5 * (log|Lambda_A| - log|Lambda*_A|)`.
    log_det_ratio: T,
}

/// Node model precomputed for one design and one hyperparameter vector.
///
/// `X'X` is shared by every node, so the active-block factorizations depend
/// only on the level and the joint state; per node only `X'd` and `d'd`
/// change.
#[derive(Debug, Clone)]
pub struct NodeModel<T> {
    states: StateSpace,
    p: usize,
    n: usize,
    gram: Vec<T>,
    prior_rate: T,
    exponent: T,
    log_const: T,
    prior_diag: Vec<Vec<T>>,
    blocks: Vec<Vec<StateBlock<T>>>,
}

/// Node-level fit under one joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFit<T> {
    pub log_marginal: T,
    /// `nu sigma0^2 + Upsilon`.
    pub ig_rate: T,
    /// Posterior mean over all `p` coefficients; inactive entries are zero.
    pub mean: Vec<T>,
}

impl<T: Real> NodeModel<T> {
    /// Precomputes levels `0..=max_level`.
    pub fn new(design: &FactorDesign, hp: &HyperParams<T>, max_level: u32) -> Result<Self> {
        hp.validate()?;
        if hp.factor_count() != design.factor_count() {
            return Err(Error::Shape(format!(
                "{} effect scales for {} factors",
                hp.factor_count(),
                design.factor_count()
            )));
        }
        let states = StateSpace::new(design.factor_count());
        let p = design.coef_dim();
        let n = design.n();
        let nf = T::from_usize_lossy(n);
        let half = T::lit(0.5);
        let gram: Vec<T> = design.gram();
        let prior_rate = hp.nu * hp.sigma0_sq;
        let exponent = hp.nu + nf * half + T::one();
        let log_const = log_norm(hp.nu + T::one(), nf * half);

        let owner: Vec<Option<usize>> = (0..p).map(|c| design.column_owner(c)).collect();
        let mut prior_diag = Vec::with_capacity(max_level as usize + 1);
        let mut blocks = Vec::with_capacity(max_level as usize + 1);
        for j in 0..=max_level {
            let diag: Vec<T> = owner
                .iter()
                .map(|o| match o {
                    None => hp.tau_at(j).recip(),
                    Some(l) => hp.upsilon_at(*l, j).recip(),
                })
                .collect();
            let mut level_blocks = Vec::with_capacity(states.size());
            for state in states.iter() {
                let active: Vec<usize> = (0..p)
                    .filter(|&c| match owner[c] {
                        None => states.s(state),
                        Some(l) => states.r(state, l),
                    })
                    .collect();
                let (chol, log_det_ratio) = if active.is_empty() {
                    (None, T::zero())
                } else {
                    let m = active.len();
                    let mut a = vec![T::zero(); m * m];
                    for (ai, &ca) in active.iter().enumerate() {
                        for (bi, &cb) in active.iter().enumerate() {
                            a[ai * m + bi] = gram[ca * p + cb];
                        }
                        a[ai * m + ai] = a[ai * m + ai] + diag[ca];
                    }
                    let chol = Cholesky::new(&a, m).ok_or_else(|| {
                        Error::Numerical(format!("posterior precision not positive definite at level {j}"))
                    })?;
                    let log_prior: T = active.iter().map(|&c| diag[c].ln()).sum();
                    let ratio = half * (log_prior - chol.log_det());
                    (Some(chol), ratio)
                };
                level_blocks.push(StateBlock { active, chol, log_det_ratio });
            }
            prior_diag.push(diag);
            blocks.push(level_blocks);
        }
        Ok(Self {
            states,
            p,
            n,
            gram,
            prior_rate,
            exponent,
            log_const,
            prior_diag,
            blocks,
        })
    }

    pub fn states(&self) -> StateSpace {
        self.states
    }

    pub fn coef_dim(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_level(&self) -> u32 {
        (self.blocks.len() - 1) as u32
    }

    /// Inverse-Gamma shape `nu + 1 + n/2`, shared by every node and state.
    pub fn ig_shape(&self) -> T {
        self.exponent
    }

    fn kernel(&self, upsilon: T) -> T {
        let m = T::lit(0.5) * T::from_usize_lossy(self.n);
        log_kernel(self.exponent - m, m, self.prior_rate, upsilon)
    }

    fn block(&self, j: u32, state: usize) -> &StateBlock<T> {
        &self.blocks[j as usize][state]
    }

    /// `(Upsilon, mu*_A)` for the active block.
    fn solve_state(&self, block: &StateBlock<T>, xtd: &[T], dtd: T) -> (T, Vec<T>) {
        let half = T::lit(0.5);
        match &block.chol {
            None => ((dtd * half).max(T::zero()), Vec::new()),
            Some(chol) => {
                let rhs: Vec<T> = block.active.iter().map(|&c| xtd[c]).collect();
                let mu = chol.solve(&rhs);
                let explained: T = mu.iter().zip(&rhs).map(|(&m, &r)| m * r).sum();
                (((dtd - explained) * half).max(T::zero()), mu)
            }
        }
    }

    /// Log marginal likelihood for every joint state, written into `out`.
    pub fn log_marginals(&self, j: u32, xtd: &[T], dtd: T, out: &mut [T]) {
        for (state, slot) in out.iter_mut().enumerate().take(self.states.size()) {
            let block = self.block(j, state);
            let (upsilon, _) = self.solve_state(block, xtd, dtd);
            *slot = self.log_const + block.log_det_ratio
                + self.kernel(upsilon);
        }
    }

    pub fn fit(&self, j: u32, xtd: &[T], dtd: T, state: usize) -> StateFit<T> {
        let block = self.block(j, state);
        let (upsilon, mu) = self.solve_state(block, xtd, dtd);
        let mut mean = vec![T::zero(); self.p];
        for (&c, &m) in block.active.iter().zip(&mu) {
            mean[c] = m;
        }
        StateFit {
            log_marginal: self.log_const + block.log_det_ratio
                + self.kernel(upsilon),
            ig_rate: self.prior_rate + upsilon,
            mean,
        }
    }

    /// Active coefficient columns under `state`.
    pub fn active(&self, state: usize) -> &[usize] {
        &self.block(0, state).active
    }

    /// Draws `theta ~ N(mean, sigma_sq * M o Lambda*^{-1})` given a standard
    /// normal vector `eps` of length `active.len()`; inactive entries stay 0.
    pub fn gaussian_draw(&self, j: u32, state: usize, mean: &[T], sigma_sq: T, eps: &mut [T]) -> Vec<T> {
        let block = self.block(j, state);
        let mut theta = vec![T::zero(); self.p];
        if let Some(chol) = &block.chol {
            // L' x = eps gives x ~ N(0, (L L')^{-1}).
            chol.backward_sub(eps);
            let sd = sigma_sq.sqrt();
            for (i, &c) in block.active.iter().enumerate() {
                theta[c] = mean[c] + sd * eps[i];
            }
        }
        theta
    }

    /// Full conditional posterior for one node and state.
    pub fn conditional(&self, j: u32, xtd: &[T], dtd: T, state: usize) -> NigConditional<T> {
        let fit = self.fit(j, xtd, dtd, state);
        let p = self.p;
        let block = self.block(j, state);
        let mut active = vec![false; p];
        for &c in &block.active {
            active[c] = true;
        }
        let diag = &self.prior_diag[j as usize];
        let mut precision = vec![T::zero(); p * p];
        for a in 0..p {
            for b in 0..p {
                if active[a] && active[b] {
                    precision[a * p + b] = self.gram[a * p + b];
                }
            }
            precision[a * p + a] = precision[a * p + a] + diag[a];
        }
        NigConditional {
            ig_shape: self.exponent,
            ig_rate: fit.ig_rate,
            mean: fit.mean,
            precision,
            active,
        }
    }
}

/// Conditional posterior at one node given its joint state:
/// `sigma^2 ~ Inv-Gamma(ig_shape, ig_rate)` and
/// `theta | sigma^2 ~ N(mean, sigma^2 * M o precision^{-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigConditional<T> {
    pub ig_shape: T,
    pub ig_rate: T,
    pub mean: Vec<T>,
    /// Row-major `Lambda*(s, r) = X(s, r)'X(s, r) + Lambda_j`.
    pub precision: Vec<T>,
    /// Coefficients whose indicator is on; `M(s, r)` is the outer product.
    pub active: Vec<bool>,
}

impl<T: Real> NigConditional<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Entry of the selector matrix `M(s, r)`.
    pub fn mask(&self, a: usize, b: usize) -> bool {
        self.active[a] && self.active[b]
    }

    /// `sigma_sq * M o [Lambda*]^{-1}`, row-major.
    pub fn covariance(&self, sigma_sq: T) -> Vec<T> {
        let p = self.dim();
        let inv = Cholesky::new(&self.precision, p)
            .expect("precision is positive definite")
            .inverse();
        let mut cov = vec![T::zero(); p * p];
        for a in 0..p {
            for b in 0..p {
                if self.mask(a, b) {
                    cov[a * p + b] = sigma_sq * inv[a * p + b];
                }
            }
        }
        cov
    }
}

fn state_index(design: &FactorDesign, s: bool, r: &[bool]) -> Result<usize> {
    if r.len() != design.factor_count() {
        return Err(Error::Shape(format!(
            "{} factor indicators for {} factors",
            r.len(),
            design.factor_count()
        )));
    }
    Ok(StateSpace::new(design.factor_count()).compose(s, r))
}

fn node_stats<T: Real>(d: &[T], design: &FactorDesign) -> Result<(Vec<T>, T)> {
    if d.len() != design.n() {
        return Err(Error::Shape(format!(
            "{} observations at node, design has {}",
            d.len(),
            design.n()
        )));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coefficient".into()));
    }
    Ok((design.cross(d), d.iter().map(|&v| v * v).sum()))
}

/// Log marginal likelihood `log m_{j,k}(s, r)` of one node's observations.
pub fn marginal_mg<T: Real>(
    d: &[T],
    design: &FactorDesign,
    s: bool,
    r: &[bool],
    j: u32,
    hp: &HyperParams<T>,
) -> Result<T> {
    let state = state_index(design, s, r)?;
    let (xtd, dtd) = node_stats(d, design)?;
    let model = NodeModel::new(design, hp, j)?;
    Ok(model.fit(j, &xtd, dtd, state).log_marginal)
}

/// Conditional Inverse-Gamma and masked Gaussian parameters at one node.
pub fn nig_conditional<T: Real>(
    d: &[T],
    design: &FactorDesign,
    s: bool,
    r: &[bool],
    j: u32,
    hp: &HyperParams<T>,
) -> Result<NigConditional<T>> {
    let state = state_index(design, s, r)?;
    let (xtd, dtd) = node_stats(d, design)?;
    let model = NodeModel::new(design, hp, j)?;
    Ok(model.conditional(j, &xtd, dtd, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp0() -> HyperParams<f64> {
        HyperParams {
            alpha: 0.5,
            tau: 4.0,
            nu: 2.0,
            sigma0_sq: 1.0,
            ..HyperParams::with_factors(0)
        }
    }

    #[test]
    fn zero_mean_ratio_is_the_determinant_term() {
        // tau_0 = 1 and dbar = 0: only the [tau^-1 / (n + tau^-1)]^(1/2) factor differs.
        let hp = HyperParams { tau: 1.0, ..hp0() };
        let m1 = marginal_mt(0.0, 2.5, 1, true, 0, &hp).unwrap();
        let m0 = marginal_mt(0.0, 2.5, 1, false, 0, &hp).unwrap();
        assert!(((m1 - m0).exp() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn impossible_moments_rejected() {
        assert!(matches!(
            marginal_mt(2.0, 3.0, 2, true, 0, &hp0()),
            Err(Error::Domain(_))
        ));
        assert!(marginal_mt(0.0, 0.0, 0, true, 0, &hp0()).is_err());
    }

    #[test]
    fn slab_marginal_approaches_flat_prior_limit_monotonically() {
        // Large |dbar|: the slab likelihood grows with tau_j up to a point but
        // the Occam factor eventually wins; for small data it decreases.
        let d = [0.1, -0.2, 0.15];
        let n = d.len();
        let dbar = d.iter().sum::<f64>() / n as f64;
        let ss: f64 = d.iter().map(|v| v * v).sum();
        let mut prev = f64::INFINITY;
        for tau in [1.0, 10.0, 100.0, 1e3, 1e4, 1e6] {
            let hp = HyperParams { tau, ..hp0() };
            let m = marginal_mt(dbar, ss, n, true, 0, &hp).unwrap();
            assert!(m < prev);
            prev = m;
        }
        assert!(prev.is_finite());
    }

    #[test]
    fn null_state_conditional() {
        let design = FactorDesign::one_way(2, 2).unwrap();
        let hp = HyperParams::with_factors(1);
        let d = [0.5, -1.0, 2.0, 0.25];
        let c = nig_conditional(&d, &design, false, &[false], 1, &hp).unwrap();
        assert!(c.mean.iter().all(|&m| m == 0.0));
        assert!(c.active.iter().all(|&a| !a));
        let dtd: f64 = d.iter().map(|v| v * v).sum();
        assert!((c.ig_rate - (hp.nu * hp.sigma0_sq + dtd / 2.0)).abs() < 1e-14);
        assert!(c.covariance(2.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn huge_nu_reaches_the_gaussian_limit() {
        let d = [0.3, -0.1, 0.4, 1.2];
        let sigma0_sq = 0.7;
        let gauss: f64 = d
            .iter()
            .map(|x| -0.5 * (std::f64::consts::TAU * sigma0_sq).ln() - x * x / (2.0 * sigma0_sq))
            .sum();
        let dbar = d.iter().sum::<f64>() / 4.0;
        let sumsq = d.iter().map(|x| x * x).sum::<f64>();
        let design = FactorDesign::intercept_only(4);
        let model_at = |nu: f64| {
            let hp = HyperParams { nu, sigma0_sq, ..hp0() };
            let mt = marginal_mt(dbar, sumsq, 4, false, 1, &hp).unwrap();
            let model = NodeModel::new(&design, &hp, 1).unwrap();
            let mut out = [0.0; 2];
            model.log_marginals(1, &design.cross(&d), sumsq, &mut out);
            (mt, out[0])
        };
        for nu in [1e8, 1e12, 1e20, 1e30] {
            let (mt, mg) = model_at(nu);
            assert!((mt - gauss).abs() < 1e-6, "nu {nu}: {mt} vs {gauss}");
            assert!((mg - gauss).abs() < 1e-6, "nu {nu}: {mg} vs {gauss}");
        }
        // both branches of the gamma ratio agree where they meet
        let (below, _) = model_at(999.0 - 1e-9);
        let (above, _) = model_at(999.0 + 1e-9);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn large_nu_centers_sigma_on_sigma0() {
        let design = FactorDesign::intercept_only(3);
        let d = [0.3, -0.1, 0.4];
        for nu in [1e6, 1e9] {
            let hp = HyperParams { nu, sigma0_sq: 2.5, ..hp0() };
            let c = nig_conditional(&d, &design, true, &[], 2, &hp).unwrap();
            assert!((c.ig_rate / c.ig_shape - 2.5).abs() < 1e-5);
        }
    }

    #[test]
    fn mt_is_the_factor_free_mg() {
        let design = FactorDesign::intercept_only(4);
        let d = [1.0, 0.4, -0.3, 2.2];
        let n = d.len();
        let dbar = d.iter().sum::<f64>() / n as f64;
        let ss: f64 = d.iter().map(|v| v * v).sum();
        for s in [false, true] {
            for j in 0..4 {
                let a = marginal_mt(dbar, ss, n, s, j, &hp0()).unwrap();
                let b = marginal_mg(&d, &design, s, &[], j, &hp0()).unwrap();
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn precision_is_positive_definite_for_every_state() {
        let a = crate::nodemodel::Factor::from_indices("a", 3, vec![0, 1, 2, 0, 1, 2, 0]).unwrap();
        let b = crate::nodemodel::Factor::from_indices("b", 2, vec![0, 0, 0, 1, 1, 1, 1]).unwrap();
        let design = FactorDesign::new(vec![a, b]).unwrap();
        let hp = HyperParams::with_factors(2);
        let d = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7];
        let sp = StateSpace::new(2);
        for state in sp.iter() {
            let (s, r) = sp.decompose(state);
            let c = nig_conditional(&d, &design, s, &r, 3, &hp).unwrap();
            assert!(Cholesky::new(&c.precision, c.dim()).is_some());
            assert!(c.ig_rate > 0.0);
        }
    }
}
