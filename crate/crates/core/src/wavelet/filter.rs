use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Daubechies least-asymmetric lowpass filter with 10 vanishing moments
/// (20 taps, unit norm).
const LA10_LOWPASS: [f64; 20] = [
    0.0007701598091144901,
    9.563267072289475e-05,
    -0.008641299277022422,
    -0.0014653825813050513,
    0.0459272392310922,
    0.011609893903711381,
    -0.15949427888491757,
    -0.07088053578324385,
    0.47169066693843925,
    0.7695100370211071,
    0.38382676106708546,
    -0.03553674047381755,
    -0.0319900568824278,
    0.04999497207737669,
    0.005764912033581909,
    -0.02035493981231129,
    -0.0008043589320165449,
    0.004593173585311828,
    5.7036083618494284e-05,
    -0.0004593294210046588,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveletName {
    Haar,
    #[default]
    La10,
}

impl std::str::FromStr for WaveletName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Self::Haar),
            "la10" | "la20" | "sym10" => Ok(Self::La10),
            other => Err(Error::Domain(format!("unknown wavelet '{other}'"))),
        }
    }
}

impl std::fmt::Display for WaveletName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Haar => "haar",
            Self::La10 => "la10",
        })
    }
}

/// Orthonormal two-channel filter pair.
///
/// The highpass taps follow the quadrature-mirror relation
/// `g[k] = (-1)^k h[L-1-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter<T> {
    name: WaveletName,
    lowpass: Vec<T>,
    highpass: Vec<T>,
}

impl<T: Real> WaveletFilter<T> {
    pub fn new(name: WaveletName) -> Self {
        let taps: Vec<f64> = match name {
            WaveletName::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletName::La10 => LA10_LOWPASS.to_vec(),
        };
        Self::from_lowpass(name, &taps)
    }

    pub fn haar() -> Self {
        Self::new(WaveletName::Haar)
    }

    pub fn la10() -> Self {
        Self::new(WaveletName::La10)
    }

    fn from_lowpass(name: WaveletName, taps: &[f64]) -> Self {
        // Renormalize so that sum h^2 == 1 to working precision.
        let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
        let lowpass: Vec<T> = taps.iter().map(|&h| T::lit(h / norm)).collect();
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let h = lowpass[len - 1 - k];
                if k % 2 == 0 { h } else { -h }
            })
            .collect();
        Self { name, lowpass, highpass }
    }

    pub fn name(&self) -> WaveletName {
        self.name
    }

    pub fn lowpass(&self) -> &[T] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[T] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for name in [WaveletName::Haar, WaveletName::La10] {
            let f = WaveletFilter::<f64>::new(name);
            let h = f.lowpass();
            let g = f.highpass();
            let energy: f64 = h.iter().map(|x| x * x).sum();
            assert!((energy - 1.0).abs() < 1e-15);
            assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
            assert!(g.iter().sum::<f64>().abs() < 1e-12);
            // even shifts are orthogonal
            for shift in (2..h.len()).step_by(2) {
                let dot: f64 = (0..h.len() - shift).map(|i| h[i] * h[i + shift]).sum();
                assert!(dot.abs() < 1e-12, "{name} shift {shift}: {dot}");
            }
            let cross: f64 = h.iter().zip(g).map(|(a, b)| a * b).sum();
            assert!(cross.abs() < 1e-15);
        }
    }

    #[test]
    fn la10_has_ten_vanishing_moments() {
        let f = WaveletFilter::<f64>::la10();
        for p in 0..10 {
            let moment: f64 = f
                .highpass()
                .iter()
                .enumerate()
                .map(|(k, g)| g * (k as f64).powi(p))
                .sum();
            let scale = 20f64.powi(p);
            assert!(moment.abs() / scale < 1e-9, "moment {p}: {moment}");
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("LA10".parse::<WaveletName>().unwrap(), WaveletName::La10);
        assert_eq!("haar".parse::<WaveletName>().unwrap(), WaveletName::Haar);
        assert!("db4".parse::<WaveletName>().is_err());
    }
}
