use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hyperparameters of the normal-inverse-Gamma Markov grove.
///
/// Level-specific scales decay geometrically: `tau_j = 2^(-alpha j) tau` and
/// `upsilon_{l,j} = 2^(-alpha j) upsilon_l`, with one `alpha` shared by all of
/// them. The error variances have an `Inv-Gamma(nu + 1, nu sigma0_sq)` prior,
/// whose mean is `sigma0_sq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams<T> {
    pub alpha: T,
    pub tau: T,
    /// One effect scale per factor.
    pub upsilon: Vec<T>,
    pub sigma0_sq: T,
    pub nu: T,
    pub eta_rho: T,
    pub gamma_rho: T,
    pub eta_kappa: T,
    pub gamma_kappa: T,
}

impl<T: Real> HyperParams<T> {
    /// Defaults for an `factors`-factor model; `alpha = 0.5`.
    pub fn with_factors(factors: usize) -> Self {
        Self {
            alpha: T::lit(0.5),
            tau: T::one(),
            upsilon: vec![T::one(); factors],
            sigma0_sq: T::one(),
            nu: T::one(),
            eta_rho: T::lit(0.5),
            gamma_rho: T::lit(0.5),
            eta_kappa: T::lit(0.3),
            gamma_kappa: T::lit(0.4),
        }
    }

    pub fn factor_count(&self) -> usize {
        self.upsilon.len()
    }

    /// `tau_j = 2^(-alpha j) tau`.
    pub fn tau_at(&self, j: u32) -> T {
        self.level_decay(j) * self.tau
    }

    /// `upsilon_{l,j} = 2^(-alpha j) upsilon_l`.
    pub fn upsilon_at(&self, factor: usize, j: u32) -> T {
        self.level_decay(j) * self.upsilon[factor]
    }

    fn level_decay(&self, j: u32) -> T {
        T::lit(2.0).powf(-self.alpha * T::from_usize_lossy(j as usize))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let non_negative = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be non-negative and finite, got {v}")))
            }
        };
        let unit = |name: &str, v: T| {
            if v > T::zero() && v < T::one() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("tau", self.tau)?;
        for (l, &u) in self.upsilon.iter().enumerate() {
            positive(&format!("upsilon[{l}]"), u)?;
        }
        positive("sigma0_sq", self.sigma0_sq)?;
        positive("nu", self.nu)?;
        non_negative("eta_rho", self.eta_rho)?;
        unit("gamma_rho", self.gamma_rho)?;
        non_negative("eta_kappa", self.eta_kappa)?;
        unit("gamma_kappa", self.gamma_kappa)?;
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> HyperParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        HyperParams {
            alpha: c(self.alpha),
            tau: c(self.tau),
            upsilon: self.upsilon.iter().map(|&u| c(u)).collect(),
            sigma0_sq: c(self.sigma0_sq),
            nu: c(self.nu),
            eta_rho: c(self.eta_rho),
            gamma_rho: c(self.gamma_rho),
            eta_kappa: c(self.eta_kappa),
            gamma_kappa: c(self.gamma_kappa),
        }
    }
}
