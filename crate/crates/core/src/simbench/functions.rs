use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{dyadic_levels, Signal};

/// The four Donoho–Johnstone test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Blocks,
    Bumps,
    Doppler,
    Heavisine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::Blocks,
        TestFunction::Bumps,
        TestFunction::Doppler,
        TestFunction::Heavisine,
    ];

    /// Value at `t` in `[0, 1]`. Blocks steps are right-continuous, so a
    /// grid point falling exactly on a jump takes the new level.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TestFunction::Blocks => BLOCK_POS
                .iter()
                .zip(BLOCK_HEIGHT)
                .map(|(&tj, hj)| if t >= tj { hj } else { 0.0 })
                .sum(),
            TestFunction::Bumps => BLOCK_POS
                .iter()
                .zip(BUMP_HEIGHT)
                .zip(BUMP_WIDTH)
                .map(|((&tj, hj), wj)| hj * (1.0 + ((t - tj) / wj).abs()).powi(-4))
                .sum(),
            TestFunction::Doppler => {
                (t * (1.0 - t)).sqrt() * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
            }
            TestFunction::Heavisine => {
                4.0 * (4.0 * std::f64::consts::PI * t).sin() - sign(t - 0.3) - sign(0.72 - t)
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

const BLOCK_POS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHT: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTH: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFunction::Blocks => "blocks",
            TestFunction::Bumps => "bumps",
            TestFunction::Doppler => "doppler",
            TestFunction::Heavisine => "heavisine",
        })
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocks" => Ok(TestFunction::Blocks),
            "bumps" => Ok(TestFunction::Bumps),
            "doppler" => Ok(TestFunction::Doppler),
            "heavisine" => Ok(TestFunction::Heavisine),
            other => Err(Error::Domain(format!("unknown test function '{other}'"))),
        }
    }
}

/// Sampling grid `t_i = i / T`, `i = 1..=T`.
pub fn grid(t: usize) -> Vec<f64> {
    (1..=t).map(|i| i as f64 / t as f64).collect()
}

/// Raw test function on the grid.
pub fn test_function(name: TestFunction, t: usize) -> Result<Signal<f64>> {
    dyadic_levels(t)?;
    Signal::new(grid(t).into_iter().map(|x| name.eval(x)).collect())
}

/// Test function rescaled to unit standard deviation (`T - 1` denominator).
pub fn unit_test_function(name: TestFunction, t: usize) -> Result<Signal<f64>> {
    let raw = test_function(name, t)?;
    let sd = sample_sd(raw.values());
    Signal::new(raw.values().iter().map(|v| v / sd).collect())
}

/// Standard deviation with the `T - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `sigma = sd(f) / rsnr`.
pub fn noise_sigma_for_rsnr(f: &[f64], rsnr: f64) -> Result<f64> {
    if !(rsnr > 0.0 && rsnr.is_finite()) {
        return Err(Error::Domain(format!("RSNR must be positive, got {rsnr}")));
    }
    if f.len() < 2 || f.iter().all(|&v| v == f[0]) {
        return Err(Error::Domain("signal is constant; RSNR undefined".into()));
    }
    Ok(sample_sd(f) / rsnr)
}
