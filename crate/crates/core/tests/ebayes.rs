use nigmg::ebayes::{calibrate_sparsity, default_init, log_marginal, mmle_fit, prior_log_pjnp, prior_pjap, FitSpec};
use nigmg::grove::{log_pjnp, GroveData, Indicator, PosteriorGrove};
use nigmg::nodemodel::{Factor, FactorDesign, HyperParams};
use nigmg::wavelet::TreeShape;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

/// Whether a chain started from the root prior stays off on every node of a
/// tree with levels `0..=max_level`.
fn chain_all_off(rng: &mut impl Rng, eta: f64, max_level: u32) -> bool {
    if rng.random::<f64>() < eta.min(1.0) {
        return false;
    }
    let mut width = 1u64;
    for j in 1..=max_level {
        width *= 2;
        let on = (eta * 0.5f64.powi(j as i32)).min(1.0);
        for _ in 0..width {
            if rng.random::<f64>() < on {
                return false;
            }
        }
    }
    true
}

fn mc_pjap(eta: f64, max_level: u32, paths: u64, seed: u64) -> f64 {
    let chunks = 64u64;
    let nulls: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            (0..paths / chunks).filter(|_| chain_all_off(&mut rng, eta, max_level)).count() as u64
        })
        .sum();
    1.0 - nulls as f64 / (paths / chunks * chunks) as f64
}

#[test]
fn closed_form_matches_simulation() {
    for (i, &(eta, j)) in [(0.3, 7u32), (0.05, 4), (0.8, 2), (1.5, 5)].iter().enumerate() {
        let exact = prior_pjap(eta, 0.4, j).unwrap();
        let mc = mc_pjap(eta, j, 200_000, i as u64);
        let se = (exact * (1.0 - exact) / 200_000.0).sqrt().max(1e-6);
        assert!((exact - mc).abs() < 5.0 * se, "eta {eta} J {j}: {exact} vs {mc}");
    }
}

#[test]
fn closed_form_matches_the_prior_grove() {
    // A constant likelihood leaves the prior untouched, so the engine's PJNP
    // is the prior one.
    for (eta_k, gamma_k, eta_r) in [(0.3, 0.4, 0.5), (0.02, 0.9, 0.1), (0.9, 0.1, 1.2)] {
        let shape = TreeShape::new(5);
        let hp = HyperParams {
            eta_kappa: eta_k,
            gamma_kappa: gamma_k,
            eta_rho: eta_r,
            ..HyperParams::with_factors(2)
        };
        let g = PosteriorGrove::from_log_likelihoods(shape, 2, &hp, vec![0.0; shape.node_count() * 8]).unwrap();
        for ind in [Indicator::Factor(0), Indicator::Factor(1)] {
            let got = log_pjnp(&g, ind).unwrap();
            let want = prior_log_pjnp(eta_k, gamma_k, 5).unwrap();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
        }
        let base = log_pjnp(&g, Indicator::Baseline).unwrap();
        let want = prior_log_pjnp(eta_r, 0.5, 5).unwrap();
        // eta_rho >= 1 switches the root on for sure
        assert!(base == want || (base - want).abs() < 1e-10, "{base} vs {want}");
    }
}

#[test]
fn prior_pjap_is_monotone_and_calibrates() {
    let mut last = 0.0;
    for i in 1..=40 {
        let eta = i as f64 / 40.0;
        let p = prior_pjap(eta, 0.4, 6).unwrap();
        assert!(p >= last);
        last = p;
    }
    for gamma in [0.1, 0.5, 0.9] {
        assert_eq!(prior_pjap(0.2, gamma, 6).unwrap(), prior_pjap(0.2, 0.4, 6).unwrap());
    }
    for target in [0.01, 0.2, 0.5, 0.95] {
        let eta = calibrate_sparsity(target, 0.4, 9).unwrap();
        assert!((prior_pjap(eta, 0.4, 9).unwrap() - target).abs() < 1e-10);
    }
}

/// One draw of a factor-free dataset from the model: indicator chain,
/// node-level variance and mean, then `n` noisy coefficients per node.
fn draw_from_prior(hp: &HyperParams<f64>, max_level: u32, n: usize, rng: &mut impl Rng) -> GroveData<f64> {
    let shape = TreeShape::new(max_level);
    let nodes = shape.node_count();
    let ig = Gamma::new(hp.nu + 1.0, 1.0 / (hp.nu * hp.sigma0_sq)).unwrap();
    let mut on = vec![false; nodes];
    let mut mothers = vec![0.0; nodes * n];
    for node in 0..nodes {
        let j = (node + 1).ilog2();
        let p_on = if node == 0 {
            hp.eta_rho.min(1.0)
        } else if on[(node - 1) / 2] {
            hp.gamma_rho
        } else {
            (hp.eta_rho * 0.5f64.powi(j as i32)).min(1.0)
        };
        on[node] = rng.random::<f64>() < p_on;
        let sigma_sq = 1.0 / ig.sample(rng);
        let theta = if on[node] {
            (sigma_sq * hp.tau_at(j)).sqrt() * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        for i in 0..n {
            mothers[node * n + i] = theta + sigma_sq.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
    }
    GroveData::from_parts(shape, n, vec![0.0; n], mothers).unwrap()
}

#[test]
fn recovers_noise_scale_from_prior_draws() {
    let truth = HyperParams {
        alpha: 1.0,
        tau: 20.0,
        sigma0_sq: 1.0,
        nu: 50.0,
        eta_rho: 0.6,
        gamma_rho: 0.6,
        ..HyperParams::with_factors(0)
    };
    let design = FactorDesign::intercept_only(10);
    let spec = FitSpec {
        restarts: 1,
        ..FitSpec::default()
    };
    let hits = (0..20u64)
        .into_par_iter()
        .filter(|&run| {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + run);
            let data = draw_from_prior(&truth, 9, 10, &mut rng);
            let fit = mmle_fit(&data, &design, &spec, &default_init(&data, 0)).unwrap();
            let sigma0 = fit.hyper.sigma0_sq.sqrt();
            (0.8..=1.2).contains(&sigma0)
        })
        .count();
    assert!(hits >= 18, "sigma0 recovered in {hits}/20 runs");
}

fn two_group_data(seed: u64) -> (GroveData<f64>, FactorDesign) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hp = HyperParams {
        tau: 5.0,
        eta_rho: 0.8,
        ..HyperParams::with_factors(0)
    };
    let base = draw_from_prior(&hp, 5, 8, &mut rng);
    let shape = base.shape();
    let mut mothers = Vec::new();
    for node in 0..shape.node_count() {
        let shift = if node % 5 == 1 { 2.5 } else { 0.0 };
        for i in 0..8 {
            mothers.push(base.node(nigmg::wavelet::NodeIndex::from_flat(node))[i] + if i >= 4 { shift } else { 0.0 });
        }
    }
    let data = GroveData::from_parts(shape, 8, vec![0.0; 8], mothers).unwrap();
    (data, FactorDesign::one_way(2, 4).unwrap())
}

#[test]
fn fit_never_loses_evidence_and_is_deterministic() {
    for seed in 0..3 {
        let (data, design) = two_group_data(seed);
        let init = default_init(&data, 1);
        let a = mmle_fit(&data, &design, &FitSpec::default(), &init).unwrap();
        let b = mmle_fit(&data, &design, &FitSpec::default(), &init).unwrap();
        assert_eq!(a, b);
        assert!(a.log_evidence >= a.initial_log_evidence);
        let direct = log_marginal(&a.hyper, &data, &design).unwrap();
        assert!((direct - a.log_evidence).abs() < 1e-9 * direct.abs());
        let hybrid = mmle_fit(&data, &design, &FitSpec::hybrid(0.1, 0.3), &init).unwrap();
        assert_eq!((hybrid.hyper.eta_kappa, hybrid.hyper.gamma_kappa), (0.1, 0.3));
    }
}

#[test]
fn evidence_is_exchangeable_in_observations() {
    let (data, design) = two_group_data(7);
    let hp = default_init(&data, 1);
    let before = log_marginal(&hp, &data, &design).unwrap();
    let perm = [5usize, 2, 7, 0, 3, 6, 1, 4];
    let shape = data.shape();
    let mut mothers = Vec::new();
    for node in 0..shape.node_count() {
        let d = data.node(nigmg::wavelet::NodeIndex::from_flat(node));
        mothers.extend(perm.iter().map(|&i| d[i]));
    }
    let permuted = GroveData::from_parts(shape, 8, vec![0.0; 8], mothers).unwrap();
    let labels: Vec<usize> = perm.iter().map(|&i| design.factor(0).labels[i]).collect();
    let design2 = FactorDesign::new(vec![Factor::from_indices("g", 2, labels).unwrap()]).unwrap();
    let after = log_marginal(&hp, &permuted, &design2).unwrap();
    assert!((before - after).abs() < 1e-10 * before.abs());
}

#[test]
fn evidence_scales_with_the_data() {
    // Scaling the data by c and sigma0^2 by c^2 only shifts the log density by
    // the Jacobian -N ln c.
    let (data, design) = two_group_data(11);
    let hp = default_init(&data, 1);
    let c: f64 = 3.7;
    let shape = data.shape();
    let mut mothers = Vec::new();
    for node in 0..shape.node_count() {
        mothers.extend(data.node(nigmg::wavelet::NodeIndex::from_flat(node)).iter().map(|v| v * c));
    }
    let scaled = GroveData::from_parts(shape, 8, vec![0.0; 8], mothers).unwrap();
    let hp2 = HyperParams {
        sigma0_sq: hp.sigma0_sq * c * c,
        ..hp.clone()
    };
    let a = log_marginal(&hp, &data, &design).unwrap();
    let b = log_marginal(&hp2, &scaled, &design).unwrap();
    let total = (shape.node_count() * 8) as f64;
    assert!((b - (a - total * c.ln())).abs() < 1e-8 * a.abs());
    // while a wrong noise level costs evidence
    let off = HyperParams {
        sigma0_sq: hp.sigma0_sq * 25.0,
        ..hp.clone()
    };
    assert!(log_marginal(&off, &data, &design).unwrap() < a);
}
