mod common;

use affine_ts::canonical::{check_canonical, transform_model, AffineMap};
use affine_ts::closed_form::{cir_gamma, cir_gh, vasicek_gh};
use affine_ts::functionals::{evaluate_f, evaluate_r};
use affine_ts::inference::{cir_transition_logpdf, conditional_moment, FourierConfig, FourierDensity};
use affine_ts::model::ModelSpec;
use affine_ts::pricing::{bond_price, price_european_call, yield_curve, QuadratureConfig};
use affine_ts::quadrature::{integrate_adaptive, AdaptiveOptions};
use affine_ts::riccati::{solve_extended, solve_riccati, SolverConfig};
use affine_ts::simulate::{simulate_cir_exact, simulate_euler, simulate_ou_exact, ScalarParams};
use common::*;
use nalgebra::{DMatrix, DVector};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn functionals_on_scalar_examples() {
    let vas = ModelSpec::vasicek(0.05, -0.5, 0.1);
    let cir = ModelSpec::cir(0.02, -0.3, 0.1);
    for u0 in [-2.0, 0.5, 3.0] {
        let f = evaluate_f(&vas, &[c(u0, 0.0)]).unwrap();
        assert!((f.re - (0.005 * u0 * u0 + 0.05 * u0)).abs() < 1e-15);
        let r = evaluate_r(&cir, &[c(u0, 0.0)]).unwrap();
        assert!((r[0].re - (0.005 * u0 * u0 - 0.3 * u0)).abs() < 1e-15);
    }
}

#[test]
fn vasicek_psi_is_exponential_decay() {
    let spec = ModelSpec::vasicek(0.05, -0.5, 0.1);
    let sol = solve_riccati(&spec, &[c(1.0, 0.0)], &[2.0], &SolverConfig::with_tolerances(1e-10, 1e-14)).unwrap();
    let (_, psi) = sol.last();
    assert!((psi[0].re - 0.3678794).abs() < 1e-7);
    assert!((psi[0].re - (-1.0f64).exp()).abs() < 1e-10);
}

#[test]
fn cir_psi_matches_scalar_riccati() {
    let spec = ModelSpec::cir(0.02, -0.3, 0.1);
    for u in [c(0.5, 0.0), c(0.0, 3.0), c(-2.0, 1.0)] {
        let sol = solve_riccati(&spec, &[u], &[1.0, 5.0, 10.0], &SolverConfig::default()).unwrap();
        for (k, &t) in [1.0, 5.0, 10.0].iter().enumerate() {
            let want = scalar_riccati(0.005, -0.3, u, t);
            assert!((sol.psi[k + 1][0] - want).norm() <= 1e-9, "t={t}: {} vs {want}", sol.psi[k + 1][0]);
        }
    }
}

#[test]
fn vasicek_extended_h_value() {
    let spec = ModelSpec::vasicek(0.05, -0.5, 0.1);
    let sol = solve_extended(&spec, &[c(0.0, 0.0)], &[2.0], &SolverConfig::default()).unwrap();
    let h = (1.0 - (-1.0f64).exp()) / -0.5;
    assert!((sol.psi[1][0].re - h).abs() < 1e-10);
    assert!((h + 1.2642411).abs() < 1e-7);
}

#[test]
fn cir_gamma_and_extended_pair() {
    assert!((cir_gamma(-0.3, 0.1) - 0.3316625).abs() < 1e-7);
    let spec = ModelSpec::cir(0.02, -0.3, 0.1);
    let sol = solve_extended(&spec, &[c(0.0, 0.0)], &[5.0], &SolverConfig::default()).unwrap();
    let gh = cir_gh(0.02, -0.3, 0.1, 5.0).unwrap();
    assert!((sol.phi[1].re - gh.g).abs() <= 1e-9);
    assert!((sol.psi[1][0].re - gh.h).abs() <= 1e-9);
}

#[test]
fn bond_price_and_curve_match_closed_form() {
    let spec = ModelSpec::vasicek(0.05, -0.5, 0.1);
    let p = bond_price(&spec, &[0.03], 5.0).unwrap();
    let gh = vasicek_gh(0.05, -0.5, 0.1, 5.0).unwrap();
    assert!((p - gh.bond_price(0.03)).abs() <= 1e-9);

    let mats: Vec<f64> = (1..=30).map(f64::from).collect();
    let curve = yield_curve(&spec, &[0.03], &mats).unwrap();
    for (k, &tau) in mats.iter().enumerate() {
        let want = -vasicek_gh(0.05, -0.5, 0.1, tau).unwrap().bond_price(0.03).ln() / tau;
        assert!((curve.zero_rates[k] - want).abs() <= 1e-9);
    }
}

#[test]
fn call_prices_decrease_in_strike_and_approach_forward() {
    let spec = ModelSpec::gaussian_log_price(0.2);
    let q = QuadratureConfig::default();
    let mut prev = f64::INFINITY;
    for j in 0..20 {
        let k = -0.5 + j as f64 * 0.05;
        let price = price_european_call(&spec, &[0.0], 1.0, k, &q).unwrap().price;
        assert!(price <= prev + 1e-12, "k={k}");
        prev = price;
    }
    // deep in the money the call is the forward minus the strike
    let k = (0.01f64).ln();
    let price = price_european_call(&spec, &[0.0], 1.0, k, &q).unwrap().price;
    assert!((price - (1.0 - k.exp())).abs() < 1e-6, "{price}");
}

#[test]
fn cir_density_normalized_and_mean_consistent() {
    let p = ScalarParams::new(0.02, -0.3, 0.1);
    let (dt, x) = (0.25, 0.04);
    let opts = AdaptiveOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 5000 };
    // the transition law has mean ~0.04 and sd ~0.01; 0.5 is far beyond the 1 - 1e-10 quantile
    let mass = integrate_adaptive(|y| Ok(cir_transition_logpdf(&p, dt, x, y).exp()), 0.0, 0.5, &opts).unwrap();
    assert!((mass.value - 1.0).abs() <= 1e-6, "{}", mass.value);
    let mean = integrate_adaptive(|y| Ok(y * cir_transition_logpdf(&p, dt, x, y).exp()), 0.0, 0.5, &opts).unwrap();
    let mut spec = ModelSpec::cir(p.b, p.beta, p.sigma);
    spec.lambda[0] = 0.0;
    let m1 = conditional_moment(&spec, &[x], dt, &[1]).unwrap();
    assert!((mean.value - m1).abs() <= 1e-6, "{} vs {m1}", mean.value);

    let mut fourier = FourierDensity::new(&spec, dt, FourierConfig::default()).unwrap();
    for y in [0.01, 0.03, 0.04, 0.05, 0.08] {
        let a = cir_transition_logpdf(&p, dt, x, y).exp();
        let b = fourier.density(x, y).unwrap();
        assert!((a - b).abs() <= 1e-6, "y={y}: {a} vs {b}");
    }
}

#[test]
fn ou_exact_sample_mean() {
    let (b, beta, sigma, x0) = (0.05, -0.5, 0.1, 0.03);
    let ps = simulate_ou_exact(b, beta, sigma, x0, 0.1, 10, 10_000, 5).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|p| ps.terminal(p)[0]).collect();
    let (mean, se) = mean_and_se(&xs);
    let want = (-0.5f64).exp() * x0 + b * ((-0.5f64).exp() - 1.0) / beta;
    assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn ou_vanishing_noise_is_deterministic() {
    let ps = simulate_ou_exact(0.05, -0.5, 1e-8, 0.03, 0.01, 100, 3, 1).unwrap();
    let want = (-0.5f64).exp() * 0.03 + 0.05 * ((-0.5f64).exp() - 1.0) / -0.5;
    for p in 0..3 {
        assert!((ps.terminal(p)[0] - want).abs() < 1e-4);
    }
}

#[test]
fn cir_exact_sample_mean() {
    let ps = simulate_cir_exact(0.02, -0.3, 0.1, 0.04, 0.5, 2, 10_000, 6).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|p| ps.terminal(p)[0]).collect();
    let (mean, se) = mean_and_se(&xs);
    let want = (-0.3f64).exp() * 0.04 + 0.02 * ((-0.3f64).exp() - 1.0) / -0.3;
    assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn euler_cir_agrees_with_exact() {
    let spec = ModelSpec::cir(0.02, -0.3, 0.1);
    let n = 2000;
    let euler = simulate_euler(&spec, &[0.04], 1e-4, 10_000, n, 7).unwrap();
    let exact = simulate_cir_exact(0.02, -0.3, 0.1, 0.04, 1.0, 1, n, 8).unwrap();
    let (me, se_e) = mean_and_se(&(0..n).map(|p| euler.terminal(p)[0]).collect::<Vec<_>>());
    let (mx, se_x) = mean_and_se(&(0..n).map(|p| exact.terminal(p)[0]).collect::<Vec<_>>());
    let bias = 1e-4;
    assert!((me - mx).abs() <= 3.0 * (se_e * se_e + se_x * se_x).sqrt() + bias, "{me} vs {mx}");
}

#[test]
fn euler_two_factor_stays_in_state_space() {
    let spec = two_factor_model();
    let ps = simulate_euler(&spec, &[0.05, 0.0], 1.0 / 52.0, 520, 50, 9).unwrap();
    assert!((0..50).all(|p| (0..=520).all(|s| ps.state(p, s)[0] >= 0.0)));
}

#[test]
fn transforms_compose_as_a_group_action() {
    let spec = two_factor_model();
    let k1 = AffineMap::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.3, 1.5]), DVector::from_vec(vec![0.0, 0.1])).unwrap();
    let k2 = AffineMap::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, -0.2, 0.8]), DVector::from_vec(vec![0.0, -0.05])).unwrap();
    let stepwise = transform_model(&transform_model(&spec, &k1).unwrap(), &k2).unwrap();
    let direct = transform_model(&spec, &k1.then(&k2)).unwrap();
    let close = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).amax() < 1e-13;
    assert!(close(&stepwise.a, &direct.a));
    for i in 0..2 {
        assert!((&stepwise.beta[i] - &direct.beta[i]).amax() < 1e-13);
    }
    assert!(close(&stepwise.alpha[0], &direct.alpha[0]));
    assert!((&stepwise.b - &direct.b).amax() < 1e-13);
    assert!((stepwise.l - direct.l).abs() < 1e-13);
    assert!((&stepwise.lambda - &direct.lambda).amax() < 1e-13);
}

#[test]
fn scaled_cir_is_canonical_only_at_unit_scale() {
    let mut spec = ModelSpec::cir(0.02, -0.3, 1.0);
    let check = check_canonical(&spec).unwrap();
    assert!(check.is_canonical);
    assert_eq!(check.m, 1);
    spec.alpha[0][(0, 0)] *= 2.0;
    assert!(!check_canonical(&spec).unwrap().is_canonical);
    let unit = transform_model(&spec, &AffineMap::new(DMatrix::from_element(1, 1, 0.5), DVector::zeros(1)).unwrap()).unwrap();
    assert!(check_canonical(&unit).unwrap().is_canonical);
}
