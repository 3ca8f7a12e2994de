use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One categorical factor. Level 0 is the baseline group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    /// Level index per observation.
    pub labels: Vec<usize>,
}

impl Factor {
    /// Builds a factor from raw string labels; levels are sorted so the
    /// baseline is the smallest label.
    pub fn from_labels<S: AsRef<str>>(name: impl Into<String>, raw: &[S]) -> Result<Self> {
        let name = name.into();
        let mut levels: Vec<String> = raw.iter().map(|s| s.as_ref().to_string()).collect();
        levels.sort_by(|a, b| natural_cmp(a, b));
        levels.dedup();
        let labels = raw
            .iter()
            .map(|s| levels.iter().position(|l| l == s.as_ref()).expect("label present"))
            .collect();
        let f = Self { name, levels, labels };
        f.check()?;
        Ok(f)
    }

    pub fn from_indices(name: impl Into<String>, groups: usize, labels: Vec<usize>) -> Result<Self> {
        let f = Self {
            name: name.into(),
            levels: (1..=groups).map(|g| g.to_string()).collect(),
            labels,
        };
        f.check()?;
        Ok(f)
    }

    pub fn group_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    fn check(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::Design(format!(
                "factor '{}' has {} level(s); at least 2 are needed",
                self.name,
                self.levels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&g| g >= self.levels.len()) {
            return Err(Error::Design(format!(
                "factor '{}': label index {bad} out of range",
                self.name
            )));
        }
        Ok(())
    }
}

/// Numeric labels compare numerically, everything else lexicographically.
fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Group membership of `n` observations for `L >= 0` factors.
///
/// Coefficient layout (and design-matrix columns) is
/// `(z, beta_1^(2..G_1), ..., beta_L^(2..G_L))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDesign {
    n: usize,
    factors: Vec<Factor>,
}

impl FactorDesign {
    /// No factors: `n` replicates of one function (the Markov-tree model).
    pub fn intercept_only(n: usize) -> Self {
        assert!(n >= 1, "need at least one observation");
        Self { n, factors: Vec::new() }
    }

    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        let n = factors
            .first()
            .map(|f| f.labels.len())
            .ok_or_else(|| Error::Design("no factors given".into()))?;
        if n == 0 {
            return Err(Error::Design("no observations".into()));
        }
        for f in &factors {
            f.check()?;
            if f.labels.len() != n {
                return Err(Error::Design(format!(
                    "factor '{}' labels {} observations, expected {n}",
                    f.name,
                    f.labels.len()
                )));
            }
        }
        Ok(Self { n, factors })
    }

    /// Balanced one-way layout: `groups` groups of `replicates`, grouped
    /// contiguously.
    pub fn one_way(groups: usize, replicates: usize) -> Result<Self> {
        let labels = (0..groups).flat_map(|g| std::iter::repeat_n(g, replicates)).collect();
        Self::new(vec![Factor::from_indices("factor1", groups, labels)?])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, l: usize) -> &Factor {
        &self.factors[l]
    }

    /// Length `1 + sum_l (G_l - 1)` of the coefficient vector.
    pub fn coef_dim(&self) -> usize {
        1 + self.factors.iter().map(|f| f.group_count() - 1).sum::<usize>()
    }

    /// Column range holding the contrasts of factor `l`.
    pub fn factor_columns(&self, l: usize) -> std::ops::Range<usize> {
        let start = 1 + self.factors[..l]
            .iter()
            .map(|f| f.group_count() - 1)
            .sum::<usize>();
        start..start + self.factors[l].group_count() - 1
    }

    /// Which factor (if any) owns column `c`; column 0 is the baseline.
    pub fn column_owner(&self, c: usize) -> Option<usize> {
        (0..self.factor_count()).find(|&l| self.factor_columns(l).contains(&c))
    }

    /// Nonzero columns of the design row for observation `i` (all ones).
    pub fn row_columns(&self, i: usize) -> Vec<usize> {
        let mut cols = vec![0];
        for l in 0..self.factor_count() {
            let g = self.factors[l].labels[i];
            if g > 0 {
                cols.push(self.factor_columns(l).start + g - 1);
            }
        }
        cols
    }

    /// Dense `X'X`, row-major `p x p`.
    pub fn gram<T: Real>(&self) -> Vec<T> {
        let p = self.coef_dim();
        let mut g = vec![T::zero(); p * p];
        for i in 0..self.n {
            let cols = self.row_columns(i);
            for &a in &cols {
                for &b in &cols {
                    g[a * p + b] = g[a * p + b] + T::one();
                }
            }
        }
        g
    }

    /// `X'd` for one node's observation vector.
    pub fn cross<T: Real>(&self, d: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.coef_dim()];
        self.cross_into(d, &mut out);
        out
    }

    pub fn cross_into<T: Real>(&self, d: &[T], out: &mut [T]) {
        debug_assert_eq!(d.len(), self.n);
        out.iter_mut().for_each(|v| *v = T::zero());
        out[0] = d.iter().copied().sum();
        for l in 0..self.factor_count() {
            let start = self.factor_columns(l).start;
            for (i, &g) in self.factors[l].labels.iter().enumerate() {
                if g > 0 {
                    out[start + g - 1] = out[start + g - 1] + d[i];
                }
            }
        }
    }

    /// Replicate count per observed cell (tuple of level indices).
    pub fn cell_counts(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut counts = BTreeMap::new();
        for i in 0..self.n {
            let cell: Vec<usize> = self.factors.iter().map(|f| f.labels[i]).collect();
            *counts.entry(cell).or_insert(0) += 1;
        }
        counts
    }

    /// Same design restricted to a subset of observations, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if self.factors.is_empty() {
            return Ok(Self::intercept_only(rows.len()));
        }
        Self::new(
            self.factors
                .iter()
                .map(|f| Factor {
                    name: f.name.clone(),
                    levels: f.levels.clone(),
                    labels: rows.iter().map(|&i| f.labels[i]).collect(),
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_labels_pick_the_baseline() {
        let f = Factor::from_labels("cond", &["b", "a", "c", "a"]).unwrap();
        assert_eq!(f.levels, vec!["a", "b", "c"]);
        assert_eq!(f.labels, vec![1, 0, 2, 0]);
        let n = Factor::from_labels("subject", &["10", "9", "2"]).unwrap();
        assert_eq!(n.levels, vec!["2", "9", "10"]);
    }

    #[test]
    fn single_level_factor_is_rejected() {
        assert!(matches!(
            Factor::from_labels("x", &["a", "a"]),
            Err(Error::Design(_))
        ));
    }

    #[test]
    fn two_way_columns_and_gram() {
        let a = Factor::from_indices("a", 3, vec![0, 1, 2, 0, 1, 2]).unwrap();
        let b = Factor::from_indices("b", 2, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let design = FactorDesign::new(vec![a, b]).unwrap();
        assert_eq!(design.coef_dim(), 4);
        assert_eq!(design.factor_columns(0), 1..3);
        assert_eq!(design.factor_columns(1), 3..4);
        assert_eq!(design.row_columns(5), vec![0, 2, 3]);
        let g: Vec<f64> = design.gram();
        // diagonal: n, n_(a=2), n_(a=3), n_(b=2)
        assert_eq!([g[0], g[5], g[10], g[15]], [6.0, 2.0, 2.0, 3.0]);
        assert_eq!(g[1 * 4 + 3], 1.0);
        let d = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(design.cross(&d), vec![21.0, 7.0, 9.0, 15.0]);
        assert_eq!(design.cell_counts().len(), 6);
        assert_eq!(design.column_owner(3), Some(1));
        assert_eq!(design.column_owner(0), None);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let a = Factor::from_indices("a", 2, vec![0, 1]).unwrap();
        let b = Factor::from_indices("b", 2, vec![0, 1, 1]).unwrap();
        assert!(FactorDesign::new(vec![a, b]).is_err());
    }
}
