use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodemodel::FactorDesign;
use crate::wavelet::{dyadic_levels, forward_dwt, Signal, WaveletFilter, WaveletName};

use super::functions::{noise_sigma_for_rsnr, unit_test_function, TestFunction};

/// Shape of the factor effect `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    None,
    /// `b` is a (unit-sd) test function.
    Global(TestFunction),
    /// `b = proportion * f` on `[start, end)`, zero elsewhere.
    Local { start: f64, end: f64, proportion: f64 },
}

impl Effect {
    /// Local effect on `[0.4, 0.45)` at a fifth of the baseline.
    pub fn default_local() -> Self {
        Effect::Local {
            start: 0.4,
            end: 0.45,
            proportion: 0.2,
        }
    }
}

/// One-way simulation setting: `y = f + c_g b + noise` with `c = (0, 1, -1,
/// 1, -1, ...)`, so for three groups `b^(2) = -b^(3) = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub baseline: TestFunction,
    pub effect: Effect,
    pub groups: usize,
    pub replicates: usize,
    pub length: usize,
    pub rsnr: f64,
    #[serde(default)]
    pub wavelet: WaveletName,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            baseline: TestFunction::Doppler,
            effect: Effect::default_local(),
            groups: 3,
            replicates: 3,
            length: 1024,
            rsnr: 3.0,
            wavelet: WaveletName::La10,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        dyadic_levels(self.length)?;
        if !(self.rsnr > 0.0 && self.rsnr.is_finite()) {
            return Err(Error::Domain(format!("RSNR must be positive, got {}", self.rsnr)));
        }
        if self.groups < 2 || self.replicates == 0 {
            return Err(Error::Design("need at least two groups with one replicate each".into()));
        }
        if let Effect::Local { start, end, proportion } = self.effect {
            if !(0.0..=1.0).contains(&start) || !(start < end && end <= 1.0) || !proportion.is_finite() {
                return Err(Error::Domain(format!("bad local effect [{start}, {end}) x {proportion}")));
            }
        }
        Ok(())
    }

    /// Same scenario with `b = 0`.
    pub fn null(&self) -> Self {
        Self {
            effect: Effect::None,
            ..self.clone()
        }
    }

    /// Group multiplier of `b`.
    pub fn contrast(group: usize) -> f64 {
        match group {
            0 => 0.0,
            g if g % 2 == 1 => 1.0,
            _ => -1.0,
        }
    }
}

/// Simulated one-way data with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub signals: Vec<Signal<f64>>,
    pub design: FactorDesign,
    /// Group of each observation.
    pub groups: Vec<usize>,
    pub baseline: Vec<f64>,
    pub effect: Vec<f64>,
    pub sigma: f64,
    /// Nonzero wavelet coefficients of `b`, breadth-first over mother nodes.
    pub truth: Vec<bool>,
}

impl Dataset {
    /// Noise-free mean of group `g`.
    pub fn group_mean(&self, g: usize) -> Vec<f64> {
        let c = Scenario::contrast(g);
        self.baseline
            .iter()
            .zip(&self.effect)
            .map(|(f, b)| f + c * b)
            .collect()
    }
}

fn effect_curve(effect: &Effect, baseline: &[f64]) -> Result<Vec<f64>> {
    let t = baseline.len();
    Ok(match effect {
        Effect::None => vec![0.0; t],
        Effect::Global(name) => unit_test_function(*name, t)?.into_inner(),
        Effect::Local { start, end, proportion } => super::functions::grid(t)
            .iter()
            .zip(baseline)
            .map(|(&x, &f)| if x >= *start && x < *end { proportion * f } else { 0.0 })
            .collect(),
    })
}

/// Draws one dataset. The noise level is set from the baseline's RSNR.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<Dataset> {
    scenario.validate()?;
    let t = scenario.length;
    let baseline = unit_test_function(scenario.baseline, t)?.into_inner();
    let effect = effect_curve(&scenario.effect, &baseline)?;
    let sigma = noise_sigma_for_rsnr(&baseline, scenario.rsnr)?;
    let filter = WaveletFilter::new(scenario.wavelet);
    let truth = forward_dwt(&Signal::new(effect.clone())?, &filter)
        .mothers()
        .iter()
        .map(|&v| v != 0.0)
        .collect();
    let design = FactorDesign::one_way(scenario.groups, scenario.replicates)?;
    let groups: Vec<usize> = design.factor(0).labels.clone();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals = groups
        .iter()
        .map(|&g| {
            let c = Scenario::contrast(g);
            let y = baseline
                .iter()
                .zip(&effect)
                .map(|(f, b)| f + c * b + noise.sample(&mut rng))
                .collect();
            Signal::new(y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        signals,
        design,
        groups,
        baseline,
        effect,
        sigma,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_effect_means_no_truth() {
        let s = Scenario {
            effect: Effect::None,
            length: 64,
            ..Scenario::default()
        };
        let d = generate(&s, 1).unwrap();
        assert!(d.truth.iter().all(|&t| !t));
        assert_eq!(d.signals.len(), 9);
    }

    #[test]
    fn deterministic() {
        let s = Scenario {
            length: 128,
            ..Scenario::default()
        };
        let a = generate(&s, 7).unwrap();
        let b = generate(&s, 7).unwrap();
        assert_eq!(a.signals, b.signals);
        assert_ne!(generate(&s, 8).unwrap().signals, a.signals);
    }

    #[test]
    fn validation() {
        let mut s = Scenario::default();
        s.length = 1000;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.groups = 1;
        assert!(s.validate().is_err());
        assert_eq!(Scenario::contrast(0), 0.0);
        assert_eq!(Scenario::contrast(1), -Scenario::contrast(2));
    }
}
