use crate::error::{Error, Result};
use crate::nodemodel::FactorDesign;
use crate::scalar::Real;
use crate::wavelet::{inverse_dwt, WaveletFilter};

use super::sample::PosteriorDraw;

/// Curve whose posterior draws a band summarizes.
#[derive(Debug, Clone, PartialEq)]
pub enum BandTarget<T> {
    /// Baseline mean function `f = W^{-1} z`.
    Baseline,
    /// `sum_g w_g b_l^(g)` for factor `l`; weights are per level, the baseline
    /// level's contrast being identically zero.
    Contrast { factor: usize, weights: Vec<T> },
    /// Arbitrary linear combination of coefficient columns.
    Columns(Vec<(usize, T)>),
}

/// Pointwise equal-tailed credible band.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand<T> {
    pub level: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub mean: Vec<T>,
}

/// Linear-interpolation quantile of sorted values.
fn quantile<T: Real>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * T::from_usize_lossy(n - 1);
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_usize_lossy(lo);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Resolves a target to `(column, weight)` pairs given the draws' layout.
pub fn target_columns<T: Real>(target: &BandTarget<T>, design: &FactorDesign) -> Result<Vec<(usize, T)>> {
    match target {
        BandTarget::Baseline => Ok(vec![(0, T::one())]),
        BandTarget::Columns(c) => Ok(c.clone()),
        BandTarget::Contrast { factor, weights } => {
            if *factor >= design.factor_count() {
                return Err(Error::Domain(format!("no factor {factor}")));
            }
            let cols = design.factor_columns(*factor);
            if weights.len() != cols.len() + 1 {
                return Err(Error::Shape(format!(
                    "{} contrast weights for a factor with {} levels",
                    weights.len(),
                    cols.len() + 1
                )));
            }
            Ok(cols.zip(weights.iter().skip(1).copied()).collect())
        }
    }
}

/// Pointwise bands at quantiles `(1 - level)/2` and `(1 + level)/2` of the
/// reconstructed curves. The father coefficient enters only when
/// `include_father` is set.
pub fn credible_bands<T: Real>(
    draws: &[PosteriorDraw<T>],
    target: &BandTarget<T>,
    design: &FactorDesign,
    level: T,
    include_father: bool,
    filter: &WaveletFilter<T>,
) -> Result<CredibleBand<T>> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::Domain(format!("credible level must lie in (0,1), got {level}")));
    }
    let columns = target_columns(target, design)?;
    let first = draws
        .first()
        .ok_or_else(|| Error::Domain("no posterior draws".into()))?;
    if let Some(&(bad, _)) = columns.iter().find(|(c, _)| *c >= first.coef_dim()) {
        return Err(Error::Shape(format!("coefficient column {bad} out of range")));
    }
    let t = first.shape().signal_len();
    let curves: Vec<Vec<T>> = draws
        .iter()
        .map(|d| inverse_dwt(&d.combination_tree(&columns, include_father), filter).into_inner())
        .collect();
    let half = T::lit(0.5);
    let (q_lo, q_hi) = ((T::one() - level) * half, (T::one() + level) * half);
    let count = T::from_usize_lossy(curves.len());
    let mut lower = Vec::with_capacity(t);
    let mut upper = Vec::with_capacity(t);
    let mut mean = Vec::with_capacity(t);
    let mut column = vec![T::zero(); curves.len()];
    for loc in 0..t {
        for (slot, curve) in column.iter_mut().zip(&curves) {
            *slot = curve[loc];
        }
        mean.push(column.iter().copied().sum::<T>() / count);
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        lower.push(quantile(&column, q_lo));
        upper.push(quantile(&column, q_hi));
    }
    Ok(CredibleBand {
        level,
        lower,
        upper,
        mean,
    })
}
