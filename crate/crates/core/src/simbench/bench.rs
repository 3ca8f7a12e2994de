use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ebayes::{calibrate_sparsity, default_init, mmle_fit, FitSpec};
use crate::error::{Error, Result};
use crate::grove::{log_pjnp, upward_pass, GroveData, Indicator};
use crate::wavelet::WaveletFilter;

use super::ftest::{pointwise_f_test, FDomain};
use super::metrics::{roc, Roc};
use super::scenario::{generate, Dataset, Scenario};

/// Global test of a group effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Joint alternative probability of the factor chain.
    NigMg,
    /// Wavelet-domain pointwise F-tests.
    WfAnova,
    /// Time-domain pointwise F-tests.
    TAnova,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::NigMg => "nigmg",
            Method::WfAnova => "wfanova",
            Method::TAnova => "tanova",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nigmg" => Ok(Method::NigMg),
            "wfanova" => Ok(Method::WfAnova),
            "tanova" => Ok(Method::TAnova),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

/// Settings for the NIG-MG test.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Prior joint alternative probability the factor chain is calibrated to.
    pub prior_pjap: f64,
    pub gamma_kappa: f64,
    /// Optimizer settings; the mode is forced to hybrid.
    pub fit: FitSpec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            prior_pjap: 0.5,
            gamma_kappa: 0.4,
            fit: FitSpec {
                restarts: 1,
                ..FitSpec::default()
            },
        }
    }
}

/// Test statistic of `method` on `data`; larger means more evidence of a
/// group effect. NIG-MG reports `-ln PJNP`, which orders datasets like PJAP
/// but does not saturate at 1.
pub fn score(method: Method, data: &Dataset, filter: &WaveletFilter<f64>, config: &BenchConfig) -> Result<f64> {
    match method {
        Method::WfAnova => Ok(pointwise_f_test(&data.signals, &data.groups, FDomain::Wavelet, filter)?.score),
        Method::TAnova => Ok(pointwise_f_test(&data.signals, &data.groups, FDomain::Time, filter)?.score),
        Method::NigMg => {
            let grove_data = GroveData::from_signals(&data.signals, filter)?;
            let max_level = grove_data.shape().max_level();
            let eta = calibrate_sparsity(config.prior_pjap, config.gamma_kappa, max_level)?;
            let mut init = default_init(&grove_data, 1);
            init.eta_kappa = eta;
            init.gamma_kappa = config.gamma_kappa;
            let spec = FitSpec {
                fixed_sparsity: Some((eta, config.gamma_kappa)),
                mode: crate::ebayes::FitMode::Hybrid,
                ..config.fit.clone()
            };
            let fit = mmle_fit(&grove_data, &data.design, &spec, &init)?;
            let g = upward_pass(&grove_data, &data.design, &fit.hyper)?;
            Ok(-log_pjnp(&g, Indicator::Factor(0))?)
        }
    }
}

/// One statistic from one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub replicate: usize,
    /// `true` for data with the effect, `false` for its null counterpart.
    pub alternative: bool,
    pub method: Method,
    pub statistic: f64,
}

/// Statistics for every replicate and method plus one ROC per method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub roc: Vec<(Method, Roc)>,
}

/// Simulates `replicates` datasets with the effect and as many with `b = 0`,
/// scores each with every method, and summarizes by ROC. Dataset seeds come
/// from one ChaCha stream seeded with `seed`, so output is reproducible.
pub fn run_benchmark(
    scenario: &Scenario,
    replicates: usize,
    methods: &[Method],
    seed: u64,
    config: &BenchConfig,
) -> Result<BenchOutput> {
    scenario.validate()?;
    if replicates == 0 || methods.is_empty() {
        return Err(Error::Domain("need at least one replicate and one method".into()));
    }
    let filter = WaveletFilter::new(scenario.wavelet);
    let null = scenario.null();
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(usize, bool, u64)> = (0..replicates)
        .flat_map(|r| [(r, true), (r, false)])
        .map(|(r, alt)| (r, alt, master.next_u64()))
        .collect();
    let per_job: Vec<Vec<BenchRow>> = jobs
        .par_iter()
        .map(|&(replicate, alternative, s)| {
            let data = generate(if alternative { scenario } else { &null }, s)?;
            methods
                .iter()
                .map(|&method| {
                    Ok(BenchRow {
                        replicate,
                        alternative,
                        method,
                        statistic: score(method, &data, &filter, config)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<BenchRow> = per_job.into_iter().flatten().collect();
    let mut curves = Vec::new();
    for &method in methods {
        let pick = |alt: bool| -> Vec<f64> {
            rows.iter()
                .filter(|r| r.method == method && r.alternative == alt)
                .map(|r| r.statistic)
                .collect()
        };
        curves.push((method, roc(&pick(true), &pick(false))?));
    }
    Ok(BenchOutput { rows, roc: curves })
}
