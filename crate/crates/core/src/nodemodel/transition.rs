use crate::error::{Error, Result};
use crate::scalar::Real;

/// Prior hidden-state transition for one Markov tree at one level.
///
/// For `j >= 1` the rows are `P(child = s' | parent = s)`; at the root
/// (`j = 0`) only [`TransitionMatrix::initial`] is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix<T> {
    pub rows: [[T; 2]; 2],
    pub initial: [T; 2],
}

/// `[[max(1 - eta 2^-j, 0), min(eta 2^-j, 1)], [1 - gamma, gamma]]`; at the
/// root the initial distribution `(1 - min(eta, 1), min(eta, 1))`.
pub fn transition_matrix<T: Real>(j: u32, eta: T, gamma: T) -> Result<TransitionMatrix<T>> {
    if !(eta >= T::zero() && eta.is_finite()) {
        return Err(Error::Domain(format!("eta must be >= 0, got {eta}")));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::Domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let scaled = eta * T::lit(2.0).powi(-(j as i32));
    let birth = scaled.min(T::one());
    let rows = [[T::one() - birth, birth], [T::one() - gamma, gamma]];
    let root = eta.min(T::one());
    Ok(TransitionMatrix {
        rows,
        initial: [T::one() - root, root],
    })
}

impl<T: Real> TransitionMatrix<T> {
    pub fn log_rows(&self) -> [[T; 2]; 2] {
        self.rows.map(|r| r.map(T::ln))
    }

    pub fn log_initial(&self) -> [T; 2] {
        self.initial.map(T::ln)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_substitution() {
        let m = transition_matrix(1, 0.5_f64, 0.8).unwrap();
        let expect = [[0.75, 0.25], [0.2, 0.8]];
        for (row, exp) in m.rows.iter().zip(expect) {
            for (a, b) in row.iter().zip(exp) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn clipping_at_coarse_levels() {
        let m = transition_matrix(0, 2.0_f64, 0.5).unwrap();
        assert_eq!(m.rows[0], [0.0, 1.0]);
        assert_eq!(m.initial, [0.0, 1.0]);
    }

    #[test]
    fn root_initial_distribution() {
        let m = transition_matrix(0, 0.3_f64, 0.5).unwrap();
        assert!((m.initial[0] - 0.7).abs() < 1e-15);
        assert!((m.initial[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rows_are_distributions() {
        for j in 0..12 {
            for &eta in &[0.0, 0.01, 0.7, 3.0, 50.0] {
                for &gamma in &[0.01, 0.5, 0.99] {
                    let m = transition_matrix(j, eta, gamma).unwrap();
                    for row in m.rows.iter().chain(std::iter::once(&m.initial)) {
                        assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
                        assert_eq!(row[0] + row[1], 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(transition_matrix(1, -0.1_f64, 0.5).is_err());
        assert!(transition_matrix(1, 0.1_f64, 0.0).is_err());
        assert!(transition_matrix(1, 0.1_f64, 1.0).is_err());
    }
}
