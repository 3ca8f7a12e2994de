//! Hyperparameter selection by maximum marginal likelihood, and prior
//! elicitation of the factor-sparsity parameters.

mod prior;
mod simplex;

pub use prior::{calibrate_sparsity, prior_log_pjnp, prior_pjap};
pub use simplex::{nelder_mead, Minimum};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grove::{log_evidence, GroveData};
use crate::nodemodel::{FactorDesign, HyperParams};

/// Which hyperparameters are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Everything by marginal likelihood.
    FullEb,
    /// `(eta_kappa, gamma_kappa)` fixed, the rest by marginal likelihood.
    Hybrid,
    /// Nothing is fitted.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub mode: FitMode,
    /// `(eta_kappa, gamma_kappa)`, required in hybrid mode.
    pub fixed_sparsity: Option<(f64, f64)>,
    /// Search `alpha` too; otherwise it stays at the initial value.
    pub fit_alpha: bool,
    pub max_iters: usize,
    /// Relative tolerance on the simplex's spread of objective values.
    pub tolerance: f64,
    pub restarts: usize,
    /// Seeds the jitter of restart points.
    pub seed: u64,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            mode: FitMode::FullEb,
            fixed_sparsity: None,
            fit_alpha: true,
            max_iters: 2000,
            tolerance: 1e-8,
            restarts: 3,
            seed: 0,
        }
    }
}

impl FitSpec {
    pub fn hybrid(eta_kappa: f64, gamma_kappa: f64) -> Self {
        Self {
            mode: FitMode::Hybrid,
            fixed_sparsity: Some((eta_kappa, gamma_kappa)),
            ..Self::default()
        }
    }

    pub fn fixed() -> Self {
        Self {
            mode: FitMode::Fixed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == FitMode::Hybrid && self.fixed_sparsity.is_none() {
            return Err(Error::Domain("hybrid fitting needs fixed (eta_kappa, gamma_kappa)".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restarts == 0 {
            return Err(Error::Domain("need at least one optimizer run".into()));
        }
        Ok(())
    }
}

/// Fitted hyperparameters and optimizer diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub hyper: HyperParams<f64>,
    pub log_evidence: f64,
    pub initial_log_evidence: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Log marginal likelihood of the mother coefficients under `hp`.
pub fn log_marginal(hp: &HyperParams<f64>, data: &GroveData<f64>, design: &FactorDesign) -> Result<f64> {
    log_evidence(data, design, hp)
}

/// Data-driven starting point: `sigma0^2` from the median absolute deviation
/// of the finest-level coefficients, `tau` and every `upsilon` from the
/// excess mean square of all mother coefficients over that noise level.
/// Sparsity parameters keep their defaults.
pub fn default_init(data: &GroveData<f64>, factors: usize) -> HyperParams<f64> {
    let mut hp = HyperParams::with_factors(factors);
    let shape = data.shape();
    let mut finest: Vec<f64> = shape
        .level(shape.max_level())
        .flat_map(|node| data.node(node).iter().map(|v| v.abs()))
        .collect();
    finest.sort_by(f64::total_cmp);
    let mad = finest[finest.len() / 2] / 0.6745;
    let noise = (mad * mad).max(1e-8);
    let (mut total, mut count) = (0.0, 0usize);
    for node in shape.top_down() {
        for v in data.node(node) {
            total += v * v;
            count += 1;
        }
    }
    let scale = (total / count as f64 / noise - 1.0).max(1.0);
    hp.sigma0_sq = noise;
    hp.tau = scale;
    hp.upsilon = vec![scale; factors];
    hp
}

/// Map between hyperparameters and the unconstrained search space: logs for
/// positive quantities, logits for the persistence probabilities.
#[derive(Debug, Clone, Copy)]
struct Packing {
    alpha: bool,
    kappa: bool,
    factors: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Packing {
    fn pack(&self, hp: &HyperParams<f64>) -> Vec<f64> {
        let mut x = Vec::new();
        if self.alpha {
            x.push(hp.alpha.ln());
        }
        x.push(hp.tau.ln());
        x.extend(hp.upsilon.iter().map(|u| u.ln()));
        x.push(hp.sigma0_sq.ln());
        x.push(hp.nu.ln());
        x.push(hp.eta_rho.ln());
        x.push(logit(hp.gamma_rho));
        if self.kappa {
            x.push(hp.eta_kappa.ln());
            x.push(logit(hp.gamma_kappa));
        }
        x
    }

    fn unpack(&self, x: &[f64], base: &HyperParams<f64>) -> HyperParams<f64> {
        let mut it = x.iter().copied();
        let mut next = || it.next().expect("packed length");
        let mut hp = base.clone();
        if self.alpha {
            hp.alpha = next().exp();
        }
        hp.tau = next().exp();
        for l in 0..self.factors {
            hp.upsilon[l] = next().exp();
        }
        hp.sigma0_sq = next().exp();
        hp.nu = next().exp();
        hp.eta_rho = next().exp();
        hp.gamma_rho = expit(next());
        if self.kappa {
            hp.eta_kappa = next().exp();
            hp.gamma_kappa = expit(next());
        }
        hp
    }
}

/// Nelder–Mead restarted from its own result until a fresh simplex stops
/// improving, which gets it off flat stretches where it can stall early.
fn restarted_simplex(objective: impl Fn(&[f64]) -> f64, start: &[f64], spec: &FitSpec) -> Minimum {
    let mut best = nelder_mead(&objective, start, 0.5, spec.max_iters, spec.tolerance);
    for _ in 0..MAX_SIMPLEX_RESTARTS {
        let budget = spec.max_iters.saturating_sub(best.iterations);
        if budget == 0 {
            break;
        }
        let next = nelder_mead(&objective, &best.x, 0.5, budget, spec.tolerance);
        let gain = best.value - next.value;
        let iterations = best.iterations + next.iterations;
        if !(next.value < best.value) {
            best.iterations = iterations;
            break;
        }
        best = Minimum { iterations, ..next };
        if gain <= spec.tolerance * (best.value.abs() + spec.tolerance) {
            break;
        }
    }
    best
}

const MAX_SIMPLEX_RESTARTS: usize = 10;

/// Maximizes the marginal likelihood with Nelder–Mead in the transformed
/// space. The first run starts at `init`; further runs start from Gaussian
/// jitters of it. Runs execute in parallel and the best is returned, so the
/// result never has lower evidence than `init`.
pub fn mmle_fit(
    data: &GroveData<f64>,
    design: &FactorDesign,
    spec: &FitSpec,
    init: &HyperParams<f64>,
) -> Result<FitResult> {
    spec.validate()?;
    init.validate()?;
    let mut base = init.clone();
    if let (FitMode::Hybrid, Some((eta, gamma))) = (spec.mode, spec.fixed_sparsity) {
        base.eta_kappa = eta;
        base.gamma_kappa = gamma;
        base.validate()?;
    }
    let start = log_marginal(&base, data, design)
        .map_err(|e| Error::Init(format!("objective at the initial point: {e}")))?;
    if !start.is_finite() {
        return Err(Error::Init(format!("objective at the initial point is {start}")));
    }
    if spec.mode == FitMode::Fixed {
        return Ok(FitResult {
            hyper: base,
            log_evidence: start,
            initial_log_evidence: start,
            iterations: 0,
            converged: true,
        });
    }
    let packing = Packing {
        alpha: spec.fit_alpha,
        kappa: spec.mode == FitMode::FullEb && design.factor_count() > 0,
        factors: design.factor_count(),
    };
    let x0 = packing.pack(&base);
    let objective = |x: &[f64]| -> f64 {
        let hp = packing.unpack(x, &base);
        match log_marginal(&hp, data, design) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    };
    let jitter = Normal::new(0.0, 0.5).expect("valid normal");
    let starts: Vec<Vec<f64>> = (0..spec.restarts)
        .map(|r| {
            if r == 0 {
                x0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(r as u64);
                x0.iter().map(|v| v + jitter.sample(&mut rng)).collect()
            }
        })
        .collect();
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|s| restarted_simplex(objective, s, spec))
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one run");
    let iterations = runs.iter().map(|m| m.iterations).sum();
    if !(best.value <= -start) {
        return Ok(FitResult {
            hyper: base,
            log_evidence: start,
            initial_log_evidence: start,
            iterations,
            converged: best.converged,
        });
    }
    let hyper = packing.unpack(&best.x, &base);
    hyper.validate().map_err(|e| Error::Numerical(format!("optimizer left the parameter space: {e}")))?;
    Ok(FitResult {
        hyper,
        log_evidence: -best.value,
        initial_log_evidence: start,
        iterations,
        converged: best.converged,
    })
}
