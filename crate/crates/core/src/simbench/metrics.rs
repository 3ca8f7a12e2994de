use serde::Serialize;

use crate::error::{Error, Result};

/// `sum (estimate - truth)^2 / T`.
pub fn amse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || truth.is_empty() {
        return Err(Error::Length(estimate.len()));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / truth.len() as f64)
}

/// Empirical ROC curve; larger statistics count as stronger evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Roc {
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps the threshold over every distinct observed value; tied alternative
/// and null statistics move together, so the trapezoid AUC equals the
/// Mann–Whitney probability with ties counted one half.
pub fn roc(alt: &[f64], null: &[f64]) -> Result<Roc> {
    if alt.is_empty() || null.is_empty() {
        return Err(Error::Domain("ROC needs alternative and null statistics".into()));
    }
    if alt.iter().chain(null).any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN statistic".into()));
    }
    let mut pooled: Vec<(f64, bool)> = alt
        .iter()
        .map(|&v| (v, true))
        .chain(null.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (na, nn) = (alt.len() as f64, null.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let v = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == v {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / nn, tp as f64 / na));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(Roc { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amse_cases() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(amse(&t, &t).unwrap(), 0.0);
        let e: Vec<f64> = t.iter().map(|v| v + 0.1).collect();
        assert!((amse(&e, &t).unwrap() - 0.01).abs() < 1e-15);
        assert!(amse(&t[..2], &t).is_err());
    }

    #[test]
    fn roc_extremes() {
        let r = roc(&[3.0, 4.0, 5.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc(&[0.0, 1.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.auc, 0.0);
        let r = roc(&[1.0, 1.0], &[1.0]).unwrap();
        assert!((r.auc - 0.5).abs() < 1e-15);
        assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
        assert!(roc(&[], &[1.0]).is_err());
    }
}
