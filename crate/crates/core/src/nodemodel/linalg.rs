//! Dense Cholesky for the small `(1 + sum (G_l - 1))`-dimensional precision
//! matrices of the node model.

use crate::scalar::Real;

/// Lower-triangular factor `L` with `A = L L'`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    dim: usize,
    lower: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Returns `None` unless `a` (row-major, symmetric) is positive definite.
    pub fn new(a: &[T], dim: usize) -> Option<Self> {
        assert_eq!(a.len(), dim * dim);
        let mut l = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = a[i * dim + j];
                for k in 0..j {
                    sum = sum - l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if !(sum > T::zero()) {
                        return None;
                    }
                    l[i * dim + i] = sum.sqrt();
                } else {
                    l[i * dim + j] = sum / l[j * dim + j];
                }
            }
        }
        Some(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim).map(|i| two * self.lower[i * self.dim + i].ln()).sum()
    }

    /// Solves `L y = b` in place.
    pub fn forward_sub(&self, b: &mut [T]) {
        let n = self.dim;
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v = v - self.lower[i * n + k] * b[k];
            }
            b[i] = v / self.lower[i * n + i];
        }
    }

    /// Solves `L' x = y` in place.
    pub fn backward_sub(&self, y: &mut [T]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v = v - self.lower[k * n + i] * y[k];
            }
            y[i] = v / self.lower[i * n + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.forward_sub(&mut x);
        self.backward_sub(&mut x);
        x
    }

    pub fn inverse(&self) -> Vec<T> {
        let n = self.dim;
        let mut inv = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[c] = T::one();
            let col = self.solve(&e);
            for r in 0..n {
                inv[r * n + c] = col[r];
            }
        }
        inv
    }
}
