//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::time::Instant;

use affine_ts::admissibility::{validate_admissibility, Condition};
use affine_ts::canonical::{verify_observable_invariance, AffineMap};
use affine_ts::closed_form::{cir_gh, vasicek_gh};
use affine_ts::functionals::generator_exponent;
use affine_ts::inference::{
    cir_log_densities, fourier_log_densities, gmm_estimate, mle_estimate, ou_log_densities, EstimationConfig, Family,
    MomentSpec,
};
use affine_ts::model::{JumpKind, JumpLaw, JumpSpec, ModelSpec, StateSpace};
use affine_ts::pricing::{price_european_call, QuadratureConfig};
use affine_ts::riccati::{characteristic_function, characteristic_function_with, exponents_at, solve_extended, SolverConfig};
use affine_ts::simulate::{simulate_cir_exact, simulate_ou_exact, ScalarParams};
use common::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const MATURITIES: [f64; 8] = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0];

fn closed_form_match(spec: &ModelSpec, gh: impl Fn(f64) -> (f64, f64)) -> Outcome {
    let start = Instant::now();
    let sol = solve_extended(spec, &[c(0.0, 0.0)], &MATURITIES, &SolverConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for (k, &tau) in sol.grid.iter().enumerate().skip(1) {
        let (g, h) = gh(tau);
        worst = worst.max((sol.phi[k].re - g).abs()).max((sol.psi[k][0].re - h).abs());
        worst = worst.max(sol.phi[k].im.abs()).max(sol.psi[k][0].im.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 1.0, format!("max |error| = {worst:.2e} (tol 1e-8), {secs:.3} s (limit 1 s)"))
}

fn criterion_1() -> Outcome {
    let spec = ModelSpec::vasicek(0.05, -0.5, 0.1);
    closed_form_match(&spec, |tau| {
        let p = vasicek_gh(0.05, -0.5, 0.1, tau).unwrap();
        (p.g, p.h)
    })
}

fn criterion_2() -> Outcome {
    let spec = ModelSpec::cir(0.02, -0.3, 0.1);
    closed_form_match(&spec, |tau| {
        let p = cir_gh(0.02, -0.3, 0.1, tau).unwrap();
        (p.g, p.h)
    })
}

fn criterion_3() -> Outcome {
    let (b, beta, sigma) = (0.05, -0.5, 0.1);
    let spec = ModelSpec::vasicek(b, beta, sigma);
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = r.random_range(-0.1..0.2);
        let t = r.random_range(0.01..5.0);
        let v = r.random_range(-20.0..20.0);
        let got = characteristic_function(&spec, &[x], t, &[c(0.0, v)]).unwrap();
        let want = ou_cf(b, beta, sigma, x, t, v);
        worst = worst.max((got - want).norm() / want.norm());
    }
    outcome(worst <= 1e-9, format!("max relative error = {worst:.2e} over 50 triples (tol 1e-9)"))
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let cfg = SolverConfig::with_tolerances(1e-13, 1e-15);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let spec = random_admissible_2d(&mut r);
        let x = random_state(&mut r, &spec);
        let u: Vec<Complex64> = (0..2).map(|_| c(0.0, r.random_range(-3.0..3.0))).collect();
        let e0 = (u[0] * x[0] + u[1] * x[1]).exp();
        let exact = generator_exponent(&spec, &u, &x).unwrap() * e0;
        // forward differences at h, h/2, h/4, h/8 and a Richardson table
        let h = 0.01;
        let mut table: Vec<Complex64> = (0..4)
            .map(|k| {
                let hk = h / f64::powi(2.0, k);
                (characteristic_function_with(&spec, &x, hk, &u, &cfg).unwrap() - e0) / hk
            })
            .collect();
        for level in 1..4 {
            let factor = f64::powi(2.0, level as i32);
            for k in (level..4).rev() {
                table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
            }
        }
        worst = worst.max((table[3] - exact).norm() / exact.norm().max(1e-300));
    }
    outcome(worst <= 1e-6, format!("max relative error = {worst:.2e} over 20 random specs (tol 1e-6)"))
}

const BS_TIMES: [f64; 3] = [0.25, 1.0, 2.0];
const MONEYNESS: [f64; 3] = [0.8, 1.0, 1.2];

fn call_grid(damping: f64) -> Vec<f64> {
    let spec = ModelSpec::gaussian_log_price(0.2);
    let q = QuadratureConfig { damping, ..QuadratureConfig::default() };
    let mut out = Vec::new();
    for &t in &BS_TIMES {
        for &mny in &MONEYNESS {
            out.push(price_european_call(&spec, &[0.0], t, f64::ln(mny), &q).unwrap().price);
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let prices = call_grid(1.5);
    let secs = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for &t in &BS_TIMES {
        for &mny in &MONEYNESS {
            worst = worst.max((prices[k] - black_scholes_call(1.0, mny, 0.2, t)).abs());
            k += 1;
        }
    }
    let atm = black_scholes_call(1.0, 1.0, 0.2, 1.0);
    outcome(
        worst <= 1e-6 && secs < 5.0,
        format!("max |error| = {worst:.2e} (tol 1e-6), {secs:.3} s for 9 cells (limit 5 s); ATM t=1 oracle {atm:.7}"),
    )
}

fn criterion_6() -> Outcome {
    let a = call_grid(1.5);
    let b = call_grid(2.5);
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max |C=1.5 - C=2.5| = {worst:.2e} (tol 1e-8)"))
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let maturities: Vec<f64> = (1..=30).map(f64::from).collect();
    let mut worst: f64 = 0.0;
    let mut all_pass = true;
    for (spec, x, positive) in [
        (ModelSpec::vasicek(0.05, -0.5, 0.1), 0.03, false),
        (ModelSpec::cir(0.02, -0.3, 0.1), 0.04, true),
    ] {
        for _ in 0..10 {
            let scale = r.random_range(0.2..5.0);
            let kappa = if positive { 0.0 } else { r.random_range(-0.5..0.5) };
            let map = AffineMap::new(DMatrix::from_element(1, 1, scale), DVector::from_element(1, kappa)).unwrap();
            let report = verify_observable_invariance(&spec, &map, &[x], &maturities).unwrap();
            worst = worst.max(report.max_abs_yield_diff);
            all_pass &= report.passed;
        }
    }
    outcome(all_pass && worst <= 1e-9, format!("max yield discrepancy = {worst:.2e} over 20 maps (tol 1e-9)"))
}

fn criterion_8() -> Outcome {
    let spec = two_factor_model();
    let cfg = SolverConfig::default();
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = r.random_range(0.05..3.0);
        let t = r.random_range(0.05..3.0);
        let u: Vec<Complex64> = (0..2).map(|_| c(0.0, r.random_range(-5.0..5.0))).collect();
        let (phi_t, psi_t) = exponents_at(&spec, &u, t, false, &cfg).unwrap();
        let (phi_s, psi_s) = exponents_at(&spec, &psi_t, s, false, &cfg).unwrap();
        let (phi_ts, psi_ts) = exponents_at(&spec, &u, t + s, false, &cfg).unwrap();
        worst = worst.max((phi_ts - phi_t - phi_s).norm());
        for i in 0..2 {
            worst = worst.max((psi_ts[i] - psi_s[i]).norm());
        }
    }
    outcome(worst <= 1e-8, format!("max semigroup violation = {worst:.2e} over 20 triples (tol 1e-8)"))
}

fn criterion_9() -> Outcome {
    let (b, beta, sigma, x0) = (0.05, -0.5, 0.1, 0.03);
    let n = 100_000;
    let ps = simulate_ou_exact(b, beta, sigma, x0, 0.25, 4, n, 2024).unwrap();
    let spec = ModelSpec::vasicek(b, beta, sigma);
    let bound = 4.0 / (n as f64).sqrt();
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        let v = 3.0 * k as f64;
        let emp: Complex64 = (0..n).map(|p| c(0.0, v * ps.terminal(p)[0]).exp()).sum::<Complex64>() / n as f64;
        let cf = characteristic_function(&spec, &[x0], 1.0, &[c(0.0, v)]).unwrap();
        worst = worst.max((emp - cf).norm());
    }
    let cir_a = simulate_cir_exact(0.002, -0.3, 0.1, 0.01, 0.05, 400, 500, 11).unwrap();
    let cir_b = simulate_cir_exact(0.02, -0.3, 0.1, 0.04, 1.0 / 12.0, 240, 500, 12).unwrap();
    let nonneg = cir_a.values.iter().chain(&cir_b.values).all(|&v| v >= 0.0);
    let bytes = |ps: &affine_ts::simulate::PathSet| {
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        buf
    };
    let ou_again = simulate_ou_exact(b, beta, sigma, x0, 0.25, 4, 200, 2024).unwrap();
    let ou_first = simulate_ou_exact(b, beta, sigma, x0, 0.25, 4, 200, 2024).unwrap();
    let cir_again = simulate_cir_exact(0.02, -0.3, 0.1, 0.04, 1.0 / 12.0, 240, 500, 12).unwrap();
    let identical = bytes(&ou_first) == bytes(&ou_again) && bytes(&cir_b) == bytes(&cir_again);
    outcome(
        worst <= bound && nonneg && identical,
        format!(
            "max |empirical - analytic CF| = {worst:.2e} (bound {bound:.2e}); CIR nonnegative: {nonneg}; byte-identical: {identical}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let dt = 1.0 / 12.0;
    let ou = ScalarParams::new(0.05, -0.5, 0.1);
    let ou_series = simulate_ou_exact(ou.b, ou.beta, ou.sigma, 0.1, dt, 1000, 1, 100).unwrap().series(0, 0);
    let ou_ref = ou_log_densities(&ou_series, &ou, dt).unwrap();
    let ou_fourier = fourier_log_densities(&ou_series, &ModelSpec::vasicek(ou.b, ou.beta, ou.sigma), dt).unwrap();
    let ou_worst = ou_ref.iter().zip(&ou_fourier).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let cir = ScalarParams::new(0.02, -0.3, 0.1);
    let cir_series = simulate_cir_exact(cir.b, cir.beta, cir.sigma, 0.04, dt, 1000, 1, 101).unwrap().series(0, 0);
    let cir_ref = cir_log_densities(&cir_series, &cir, dt).unwrap();
    let cir_fourier = fourier_log_densities(&cir_series, &ModelSpec::cir(cir.b, cir.beta, cir.sigma), dt).unwrap();
    let cir_worst = cir_ref.iter().zip(&cir_fourier).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        ou_worst <= 1e-6 && cir_worst <= 1e-6,
        format!("max per-transition |log density difference|: OU {ou_worst:.2e}, CIR {cir_worst:.2e} (tol 1e-6)"),
    )
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let truth = ScalarParams::new(0.05, -0.5, 0.1);
    let dt = 1.0 / 12.0;
    let init = ScalarParams::new(0.03, -0.3, 0.15);
    let mut covered = 0;
    let mut converged = 0;
    for rep in 0..20u64 {
        let series = simulate_ou_exact(truth.b, truth.beta, truth.sigma, 0.1, dt, 50_000, 1, 5000 + rep).unwrap().series(0, 0);
        let fit = mle_estimate(&series, &Family::Ou, dt, &init, &EstimationConfig::default()).unwrap();
        converged += fit.converged as usize;
        if let Some(se) = &fit.std_errors {
            let t = [truth.b, truth.beta, truth.sigma];
            if (0..3).all(|k| (fit.params[k] - t[k]).abs() <= 3.0 * se[k]) {
                covered += 1;
            }
        }
    }
    let series = simulate_ou_exact(truth.b, truth.beta, truth.sigma, 0.1, dt, 5_000, 1, 77).unwrap().series(0, 0);
    let gmm = gmm_estimate(&series, &Family::Ou, dt, &MomentSpec::exactly_identified(dt), &init, &EstimationConfig::default())
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        covered >= 18 && gmm.objective < 1e-10 && secs < 60.0,
        format!(
            "MLE coverage {covered}/20 (need 18), converged {converged}/20; GMM criterion {:.2e} (tol 1e-10); {secs:.1} s (limit 60 s)",
            gmm.objective
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut cases: Vec<(&str, ModelSpec, Option<Condition>)> = Vec::new();
    cases.push(("vasicek", ModelSpec::vasicek(0.05, -0.5, 0.1), None));
    cases.push(("cir", ModelSpec::cir(0.02, -0.3, 0.1), None));
    cases.push(("two-factor", two_factor_model(), None));

    let mut cross = ModelSpec::zero(StateSpace::new(2, 2).unwrap());
    cross.alpha[0] = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.3, 0.5]);
    cases.push(("alpha cross-term on positive block", cross, Some(Condition::AlphaCrossTerm)));
    cases.push(("negative boundary drift", ModelSpec::cir(-0.1, -0.3, 0.1), Some(Condition::DriftBoundary)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 0).unwrap());
    s.a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]);
    cases.push(("asymmetric a", s, Some(Condition::ASymmetric)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 0).unwrap());
    s.a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.1]);
    cases.push(("indefinite a", s, Some(Condition::APsd)));

    let mut s = ModelSpec::cir(0.02, -0.3, 0.1);
    s.a[(0, 0)] = 0.01;
    cases.push(("constant diffusion on positive coordinate", s, Some(Condition::APositiveBlock)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 1).unwrap());
    s.alpha[0] = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.05, 0.5]);
    cases.push(("asymmetric alpha", s, Some(Condition::AlphaSymmetric)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 1).unwrap());
    s.alpha[0] = DMatrix::from_row_slice(2, 2, &[0.1, 0.5, 0.5, 0.1]);
    cases.push(("indefinite alpha", s, Some(Condition::AlphaPsd)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 2).unwrap());
    s.alpha[0][(0, 0)] = 0.5;
    s.alpha[1][(1, 1)] = 0.5;
    s.beta[0] = DVector::from_vec(vec![-0.5, -0.2]);
    cases.push(("negative inward coupling", s, Some(Condition::DriftInwardCoupling)));

    let mut s = ModelSpec::zero(StateSpace::new(2, 1).unwrap());
    s.alpha[0][(0, 0)] = 0.5;
    s.a[(1, 1)] = 0.5;
    s.beta[1] = DVector::from_vec(vec![0.3, -0.5]);
    cases.push(("real coordinate in positive drift", s, Some(Condition::DriftRealToPositive)));

    let mut s = ModelSpec::vasicek(0.05, -0.5, 0.1);
    s.c = -0.01;
    cases.push(("negative constant discount", s, Some(Condition::DiscountNegative)));

    let mut s = ModelSpec::cir(0.02, -0.3, 0.1);
    s.gamma[0] = -0.2;
    cases.push(("negative state discount", s, Some(Condition::DiscountNegative)));

    let mut s = ModelSpec::cir(0.02, -0.3, 0.1);
    s.jumps.push(JumpSpec { kind: JumpKind::Constant, intensity: -1.0, law: JumpLaw::Exponential { coord: 0, eta: 10.0 } });
    cases.push(("negative jump intensity", s, Some(Condition::JumpIntensityNegative)));

    let mut s = ModelSpec::cir(0.02, -0.3, 0.1);
    s.jumps.push(JumpSpec { kind: JumpKind::Constant, intensity: 1.0, law: JumpLaw::PointMass { at: vec![-0.01] } });
    cases.push(("jump leaving the orthant", s, Some(Condition::JumpSupport)));

    let mut s = ModelSpec::vasicek(0.05, -0.5, 0.1);
    s.jumps.push(JumpSpec { kind: JumpKind::Constant, intensity: 1.0, law: JumpLaw::Exponential { coord: 0, eta: 10.0 } });
    cases.push(("exponential jump on a real coordinate", s, Some(Condition::JumpSupport)));

    let total = cases.len();
    let mut wrong = Vec::new();
    for (name, spec, expected) in &cases {
        let report = validate_admissibility(spec).unwrap();
        let right = match expected {
            None => report.ok,
            Some(cond) => !report.ok && report.violations.iter().all(|v| v.condition == *cond),
        };
        if !right {
            wrong.push(format!("{name}: {:?}", report.violations.iter().map(|v| v.condition).collect::<Vec<_>>()));
        }
    }
    let crafted = cases.iter().filter(|c| c.2.is_some()).count();
    outcome(
        wrong.is_empty() && crafted >= 12,
        if wrong.is_empty() {
            format!("{total} cases classified correctly ({crafted} violations)")
        } else {
            format!("misclassified: {}", wrong.join("; "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Vasicek closed-form equivalence", criterion_1),
        ("CIR closed-form equivalence", criterion_2),
        ("OU characteristic function", criterion_3),
        ("generator identity", criterion_4),
        ("Fourier call vs Black-Scholes", criterion_5),
        ("damping invariance", criterion_6),
        ("canonical invariance", criterion_7),
        ("Riccati flow property", criterion_8),
        ("simulation consistency", criterion_9),
        ("likelihood triangle", criterion_10),
        ("estimation recovery", criterion_11),
        ("admissibility suite", criterion_12),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        failures += (!result.pass) as usize;
        println!("criterion {:>2} {tag} {name}: {}", k + 1, result.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
