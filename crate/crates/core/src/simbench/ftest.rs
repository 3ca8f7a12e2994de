use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::wavelet::{forward_dwt, Signal, WaveletFilter};

/// Coordinates on which the pointwise F-tests run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FDomain {
    /// Every mother wavelet coefficient.
    Wavelet,
    /// Every time point.
    Time,
}

/// Per-coordinate one-way F statistics and their global summary.
#[derive(Debug, Clone, PartialEq)]
pub struct FTest {
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    /// Bonferroni-adjusted minimum p-value, capped at 1.
    pub global_p: f64,
    /// `-ln(min p)`: same ordering as `global_p` without the cap, so it
    /// stays informative as a ROC statistic.
    pub score: f64,
}

/// Classical one-way F statistic; `+inf` when the within-group variance is 0
/// and the groups differ, NaN when everything is identical.
pub fn one_way_f(values: &[f64], groups: &[usize], group_count: usize) -> f64 {
    let n = values.len();
    let mut sum = vec![0.0; group_count];
    let mut count = vec![0usize; group_count];
    for (&v, &g) in values.iter().zip(groups) {
        sum[g] += v;
        count[g] += 1;
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let between: f64 = means
        .iter()
        .zip(&count)
        .map(|(m, &c)| c as f64 * (m - grand).powi(2))
        .sum();
    let within: f64 = values
        .iter()
        .zip(groups)
        .map(|(v, &g)| (v - means[g]).powi(2))
        .sum();
    let df1 = (group_count - 1) as f64;
    let df2 = (n - group_count) as f64;
    if within == 0.0 {
        return if between > 0.0 { f64::INFINITY } else { f64::NAN };
    }
    (between / df1) / (within / df2)
}

/// Upper tail of the F distribution.
pub fn f_survival(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_nan() {
        return 1.0;
    }
    if f == f64::INFINITY {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))
}

/// F-test at every coordinate of the chosen domain, grouping observations by
/// `groups` (labels `0..G`).
pub fn pointwise_f_test(
    signals: &[Signal<f64>],
    groups: &[usize],
    domain: FDomain,
    filter: &WaveletFilter<f64>,
) -> Result<FTest> {
    if signals.len() != groups.len() {
        return Err(Error::Shape(format!(
            "{} observations but {} group labels",
            signals.len(),
            groups.len()
        )));
    }
    let group_count = groups.iter().max().map_or(0, |g| g + 1);
    if group_count < 2 {
        return Err(Error::Design("F-test needs at least two groups".into()));
    }
    if (0..group_count).any(|g| !groups.contains(&g)) {
        return Err(Error::Design("empty group".into()));
    }
    if signals.len() <= group_count {
        return Err(Error::Design("no within-group degrees of freedom".into()));
    }
    let t = signals[0].len();
    if signals.iter().any(|s| s.len() != t) {
        return Err(Error::Shape("observations differ in length".into()));
    }
    let rows: Vec<Vec<f64>> = match domain {
        FDomain::Time => signals.iter().map(|s| s.values().to_vec()).collect(),
        FDomain::Wavelet => signals
            .iter()
            .map(|s| forward_dwt(s, filter).mothers().to_vec())
            .collect(),
    };
    let coords = rows[0].len();
    let df1 = (group_count - 1) as f64;
    let df2 = (signals.len() - group_count) as f64;
    let mut f = Vec::with_capacity(coords);
    let mut p = Vec::with_capacity(coords);
    let mut column = vec![0.0; rows.len()];
    for c in 0..coords {
        for (slot, row) in column.iter_mut().zip(&rows) {
            *slot = row[c];
        }
        let stat = one_way_f(&column, groups, group_count);
        p.push(f_survival(stat, df1, df2));
        f.push(stat);
    }
    let min_p = p.iter().copied().fold(1.0, f64::min);
    Ok(FTest {
        global_p: (min_p * coords as f64).min(1.0),
        score: -min_p.max(f64::MIN_POSITIVE).ln(),
        f,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_f() {
        // groups {0,2} and {1,3}: between MS 1, within MS 2
        let f = one_way_f(&[0.0, 2.0, 1.0, 3.0], &[0, 0, 1, 1], 2);
        assert!((f - 0.5).abs() < 1e-15);
        assert_eq!(one_way_f(&[1.0, 1.0, 2.0, 2.0], &[0, 0, 1, 1], 2), f64::INFINITY);
    }

    #[test]
    fn survival_matches_known_quantile() {
        // F(2, 10) upper 5% point is 4.1028
        assert!((f_survival(4.102821, 2.0, 10.0) - 0.05).abs() < 1e-6);
        assert_eq!(f_survival(f64::INFINITY, 2.0, 10.0), 0.0);
    }
}
