//! Periodized orthonormal DWT via the Mallat pyramid.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::filter::WaveletFilter;
use super::tree::{dyadic_levels, CoefficientTree, TreeShape};

/// Finite samples of dyadic length `T = 2^(J+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T>(Vec<T>);

impl<T: Real> Signal<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        dyadic_levels(values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample at position {pos}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape::for_length(self.0.len()).expect("validated at construction")
    }
}

impl<T> AsRef<[T]> for Signal<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// One analysis step: `x` (even length) to approximation and detail halves.
fn analysis_step<T: Real>(x: &[T], filter: &WaveletFilter<T>, approx: &mut [T], detail: &mut [T]) {
    let n = x.len();
    let h = filter.lowpass();
    let g = filter.highpass();
    for i in 0..n / 2 {
        let mut a = T::zero();
        let mut d = T::zero();
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let xv = x[(2 * i + k) % n];
            a = a + hk * xv;
            d = d + gk * xv;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

/// Adjoint of [`analysis_step`]; writes a signal of length `2 * approx.len()`.
fn synthesis_step<T: Real>(approx: &[T], detail: &[T], filter: &WaveletFilter<T>, out: &mut [T]) {
    let n = out.len();
    out.iter_mut().for_each(|v| *v = T::zero());
    let h = filter.lowpass();
    let g = filter.highpass();
    for i in 0..n / 2 {
        let (a, d) = (approx[i], detail[i]);
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let idx = (2 * i + k) % n;
            out[idx] = out[idx] + hk * a + gk * d;
        }
    }
}

/// Full-depth forward transform; the father coefficient is the single
/// scaling coefficient at the coarsest level.
pub fn forward_dwt<T: Real>(y: &Signal<T>, filter: &WaveletFilter<T>) -> CoefficientTree<T> {
    let shape = y.shape();
    let mut tree = CoefficientTree::zeros(shape);
    let mut current = y.values().to_vec();
    let mut approx = vec![T::zero(); current.len() / 2];
    let mut j = shape.max_level() as i64;
    while current.len() >= 2 {
        let half = current.len() / 2;
        let start = half - 1;
        analysis_step(
            &current,
            filter,
            &mut approx[..half],
            &mut tree.mothers_mut()[start..start + half],
        );
        current.truncate(half);
        current.copy_from_slice(&approx[..half]);
        j -= 1;
    }
    debug_assert_eq!(j, -1);
    tree.father = current[0];
    tree
}

/// Convenience wrapper validating raw samples first.
pub fn forward_dwt_slice<T: Real>(y: &[T], filter: &WaveletFilter<T>) -> Result<CoefficientTree<T>> {
    Ok(forward_dwt(&Signal::new(y.to_vec())?, filter))
}

/// Exact inverse of [`forward_dwt`].
pub fn inverse_dwt<T: Real>(c: &CoefficientTree<T>, filter: &WaveletFilter<T>) -> Signal<T> {
    let t = c.signal_len();
    let mut current = vec![c.father];
    let mut out = Vec::with_capacity(t);
    let mut j = 0u32;
    while current.len() < t {
        out.resize(2 * current.len(), T::zero());
        synthesis_step(&current, c.level(j), filter, &mut out);
        std::mem::swap(&mut current, &mut out);
        j += 1;
    }
    Signal(current)
}

/// Inverse transform of a tree whose size must match `t`.
pub fn inverse_dwt_checked<T: Real>(
    c: &CoefficientTree<T>,
    filter: &WaveletFilter<T>,
    t: usize,
) -> Result<Signal<T>> {
    if c.signal_len() != t {
        return Err(Error::Shape(format!(
            "coefficient tree holds {} coefficients, expected {t}",
            c.signal_len()
        )));
    }
    Ok(inverse_dwt(c, filter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::tree::NodeIndex;

    fn haar() -> WaveletFilter<f64> {
        WaveletFilter::haar()
    }

    #[test]
    fn haar_constant_signal() {
        let tree = forward_dwt_slice(&[1.0, 1.0, 1.0, 1.0], &haar()).unwrap();
        assert!((tree.father - 2.0).abs() < 1e-15);
        assert!(tree.mothers().iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn haar_alternating_signal() {
        let tree = forward_dwt_slice(&[1.0, -1.0, 1.0, -1.0], &haar()).unwrap();
        let root2 = 2f64.sqrt();
        assert!(tree.father.abs() < 1e-15);
        assert!(tree.get(NodeIndex::ROOT).abs() < 1e-15);
        for &d in tree.level(1) {
            assert!((d - root2).abs() < 1e-15);
        }
        assert!((tree.energy() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn haar_inverse_of_constant() {
        let tree = CoefficientTree::new(2.0, vec![0.0; 3]).unwrap();
        let y = inverse_dwt(&tree, &haar());
        for v in y.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            forward_dwt_slice(&[1.0; 6], &haar()).unwrap_err(),
            Error::Length(6)
        );
        assert!(matches!(
            forward_dwt_slice(&[1.0, f64::NAN], &haar()),
            Err(Error::Domain(_))
        ));
        let tree = CoefficientTree::new(0.0, vec![0.0; 7]).unwrap();
        assert!(matches!(
            inverse_dwt_checked(&tree, &haar(), 16),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn shortest_signal() {
        let tree = forward_dwt_slice(&[3.0_f64, 1.0], &WaveletFilter::la10()).unwrap();
        assert!((tree.energy() - 10.0).abs() < 1e-12);
        let back = inverse_dwt(&tree, &WaveletFilter::la10());
        assert!((back.values()[0] - 3.0).abs() < 1e-12);
        assert!((back.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let y: Vec<f32> = (0..64).map(|i| (i as f32 * 0.3).sin()).collect();
        let f = WaveletFilter::<f32>::la10();
        let tree = forward_dwt_slice(&y, &f).unwrap();
        let back = inverse_dwt(&tree, &f);
        for (a, b) in y.iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
