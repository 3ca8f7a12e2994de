//! Nelder–Mead simplex minimization.

/// Result of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial simplex of axis steps `step`.
/// Stops when `f_max - f_min <= tol * (|f_min| + tol)` or after `max_iters`
/// iterations. Non-finite values are treated as `+inf`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_iters: usize, tol: f64) -> Minimum {
    let dim = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if dim == 0 {
        return Minimum {
            x: Vec::new(),
            value: eval(x0),
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut order: Vec<usize> = (0..=dim).collect();
    let mut iterations = 0;
    let mut converged = false;

    let along = |centroid: &[f64], worst: &[f64], coef: f64| -> Vec<f64> {
        centroid
            .iter()
            .zip(worst)
            .map(|(&c, &w)| c + coef * (c - w))
            .collect()
    };

    while iterations < max_iters {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[dim], order[dim - 1]);
        let spread = values[worst] - values[best];
        if values[best].is_finite() && spread <= tol * (values[best].abs() + tol) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; dim];
        for &i in &order[..dim] {
            for (c, &v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / dim as f64;
            }
        }
        let reflected = along(&centroid, &simplex[worst], 1.0);
        let fr = eval(&reflected);
        if fr < values[best] {
            let expanded = along(&centroid, &simplex[worst], 2.0);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (candidate, fc) = if fr < values[worst] {
            let outside = along(&centroid, &simplex[worst], 0.5);
            let fo = eval(&outside);
            (outside, fo)
        } else {
            let inside = along(&centroid, &simplex[worst], -0.5);
            let fi = eval(&inside);
            (inside, fi)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = candidate;
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (v, &a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + 0.5 * (*v - a);
            }
            values[i] = eval(&simplex[i]);
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty simplex");
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}
