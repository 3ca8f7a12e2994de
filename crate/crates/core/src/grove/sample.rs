use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nodemodel::NodeModel;
use crate::scalar::Real;
use crate::wavelet::{CoefficientTree, TreeShape};

use super::PosteriorGrove;

/// Joint state, error variance and coefficients drawn at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDraw<T> {
    pub state: usize,
    pub sigma_sq: T,
    /// `(z, beta_1^(2..G_1), ...)`; exactly zero where the indicator is off.
    pub coeffs: Vec<T>,
}

/// One exact draw from the joint posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw<T> {
    shape: TreeShape,
    p: usize,
    pub states: Vec<usize>,
    pub sigma_sq: Vec<T>,
    /// Node-major `node.flat() * p + column`.
    pub coeffs: Vec<T>,
    pub father: Option<NodeDraw<T>>,
}

impl<T: Real> PosteriorDraw<T> {
    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn coef_dim(&self) -> usize {
        self.p
    }

    pub fn node_coeffs(&self, node: crate::wavelet::NodeIndex) -> &[T] {
        &self.coeffs[node.flat() * self.p..(node.flat() + 1) * self.p]
    }

    /// Coefficient tree of a linear combination of columns; the father enters
    /// only when `include_father` is set.
    pub fn combination_tree(&self, weights: &[(usize, T)], include_father: bool) -> CoefficientTree<T> {
        let mut tree = CoefficientTree::zeros(self.shape);
        let combine = |c: &[T]| weights.iter().map(|&(col, w)| w * c[col]).sum::<T>();
        for (node, slot) in tree.mothers_mut().iter_mut().enumerate() {
            *slot = combine(&self.coeffs[node * self.p..(node + 1) * self.p]);
        }
        if include_father {
            if let Some(f) = &self.father {
                tree.father = combine(&f.coeffs);
            }
        }
        tree
    }
}

fn categorical<T: Real, R: Rng + ?Sized>(log_probs: &[T], rng: &mut R) -> usize {
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    let mut last = 0;
    for (i, &lp) in log_probs.iter().enumerate() {
        let p = lp.exp();
        if p > T::zero() {
            last = i;
            acc = acc + p;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn draw_node<T: Real, R: Rng + ?Sized>(
    model: &NodeModel<T>,
    level: u32,
    state: usize,
    rate: T,
    mean: &[T],
    rng: &mut R,
) -> (T, Vec<T>) {
    let gamma = T::standard_gamma(model.ig_shape(), rng);
    let sigma_sq = rate / gamma;
    let mut eps: Vec<T> = (0..model.active(state).len())
        .map(|_| T::standard_normal(rng))
        .collect();
    let coeffs = model.gaussian_draw(level, state, mean, sigma_sq, &mut eps);
    (sigma_sq, coeffs)
}

impl<T: Real> PosteriorGrove<T> {
    fn draw_one(&self, model: &NodeModel<T>, seed: u64, index: u64) -> PosteriorDraw<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let shape = self.shape();
        let size = self.states().size();
        let p = model.coef_dim();
        let nodes = shape.node_count();
        let mut states = vec![0usize; nodes];
        for node in shape.top_down() {
            let a = node.parent().map_or(0, |par| states[par.flat()]);
            let row = &self.log_post_trans(node)[a * size..(a + 1) * size];
            states[node.flat()] = categorical(row, &mut rng);
        }
        let mut sigma_sq = vec![T::zero(); nodes];
        let mut coeffs = vec![T::zero(); nodes * p];
        for node in shape.top_down() {
            let idx = node.flat();
            let b = states[idx];
            let rate = self.ig_rate(node, b).expect("fitted");
            let mean = self.state_mean(node, b).expect("fitted");
            let (s2, theta) = draw_node(model, node.j, b, rate, mean, &mut rng);
            sigma_sq[idx] = s2;
            coeffs[idx * p..(idx + 1) * p].copy_from_slice(&theta);
        }
        let father = self.father().map(|f| {
            let b = categorical(&f.log_dist, &mut rng);
            let (s2, theta) = draw_node(model, 0, b, f.ig_rate[b], &f.means[b * p..(b + 1) * p], &mut rng);
            NodeDraw {
                state: b,
                sigma_sq: s2,
                coeffs: theta,
            }
        });
        PosteriorDraw {
            shape,
            p,
            states,
            sigma_sq,
            coeffs,
            father,
        }
    }
}

/// Exact i.i.d. posterior draws by ancestral sampling: joint states top-down
/// from the posterior transitions, then `sigma^2` from its Inverse-Gamma and
/// the coefficients from the masked Gaussian. Draw `i` uses stream `i` of a
/// ChaCha generator seeded with `seed`, so results do not depend on thread
/// scheduling.
pub fn sample_posterior<T: Real>(g: &PosteriorGrove<T>, n_draws: usize, seed: u64) -> Result<Vec<PosteriorDraw<T>>> {
    let model = g
        .node_model()
        .ok_or_else(|| Error::Shape("grove was built without node data; nothing to sample".into()))?;
    if n_draws == 0 {
        return Err(Error::Domain("need at least one draw".into()));
    }
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|i| g.draw_one(model, seed, i))
        .collect())
}
