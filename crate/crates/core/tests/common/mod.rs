#![allow(dead_code)]

use affine_ts::admissibility::validate_admissibility;
use affine_ts::model::{JumpKind, JumpLaw, JumpSpec, ModelSpec, StateSpace};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Black-Scholes call with zero rates.
pub fn black_scholes_call(spot: f64, strike: f64, vol: f64, t: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let s = vol * t.sqrt();
    let d1 = ((spot / strike).ln() + 0.5 * s * s) / s;
    spot * n.cdf(d1) - strike * n.cdf(d1 - s)
}

/// Gaussian characteristic function of the OU transition over `t`.
pub fn ou_cf(b: f64, beta: f64, sigma: f64, x: f64, t: f64, v: f64) -> Complex64 {
    let mean = (beta * t).exp() * x + b * ((beta * t).exp() - 1.0) / beta;
    let var = sigma * sigma * ((2.0 * beta * t).exp() - 1.0) / (2.0 * beta);
    c(-0.5 * var * v * v, v * mean).exp()
}

/// Scalar Riccati `psi' = k psi^2 + beta psi` from `psi(0) = u`.
pub fn scalar_riccati(k: f64, beta: f64, u: Complex64, t: f64) -> Complex64 {
    let e = (beta * t).exp();
    u * e / (1.0 - u * (k / beta) * (e - 1.0))
}

fn psd2<R: Rng>(r: &mut R, scale: f64) -> DMatrix<f64> {
    let l = DMatrix::from_fn(2, 2, |i, j| if j <= i { r.random_range(-scale..scale) } else { 0.0 });
    &l * l.transpose() * 0.5
}

/// Random admissible model on `R_+^m x R^(2-m)`, `m` drawn from {0, 1, 2}.
pub fn random_admissible_2d<R: Rng>(r: &mut R) -> ModelSpec {
    let m = r.random_range(0..3usize);
    let mut spec = ModelSpec::zero(StateSpace::new(2, m).unwrap());
    match m {
        0 => {
            spec.a = psd2(r, 0.4);
            spec.b = DVector::from_fn(2, |_, _| r.random_range(-0.1..0.1));
            for i in 0..2 {
                spec.beta[i] = DVector::from_fn(2, |_, _| r.random_range(-1.0..1.0));
            }
        }
        1 => {
            spec.a[(1, 1)] = r.random_range(0.0..0.05);
            spec.alpha[0] = psd2(r, 0.5);
            spec.b = DVector::from_vec(vec![r.random_range(0.0..0.1), r.random_range(-0.1..0.1)]);
            spec.beta[0] = DVector::from_vec(vec![r.random_range(-1.0..0.2), r.random_range(-0.5..0.5)]);
            spec.beta[1] = DVector::from_vec(vec![0.0, r.random_range(-1.0..0.2)]);
            spec.gamma[0] = r.random_range(0.0..0.05);
            spec.jumps.push(JumpSpec {
                kind: JumpKind::Linear(0),
                intensity: r.random_range(0.0..1.0),
                law: JumpLaw::Exponential { coord: 0, eta: r.random_range(5.0..20.0) },
            });
            spec.jumps.push(JumpSpec {
                kind: JumpKind::Constant,
                intensity: r.random_range(0.0..0.5),
                law: JumpLaw::PointMass { at: vec![r.random_range(0.0..0.1), r.random_range(-0.1..0.1)] },
            });
        }
        _ => {
            spec.alpha[0][(0, 0)] = r.random_range(0.01..0.5);
            spec.alpha[1][(1, 1)] = r.random_range(0.01..0.5);
            spec.b = DVector::from_fn(2, |_, _| r.random_range(0.0..0.1));
            spec.beta[0] = DVector::from_vec(vec![r.random_range(-1.0..0.2), r.random_range(0.0..0.3)]);
            spec.beta[1] = DVector::from_vec(vec![r.random_range(0.0..0.3), r.random_range(-1.0..0.2)]);
            spec.jumps.push(JumpSpec {
                kind: JumpKind::Constant,
                intensity: r.random_range(0.0..0.5),
                law: JumpLaw::Exponential { coord: 1, eta: r.random_range(5.0..20.0) },
            });
        }
    }
    spec.c = r.random_range(0.0..0.03);
    assert!(validate_admissibility(&spec).unwrap().ok, "generator produced an inadmissible spec");
    spec
}

/// A point of the state space of `spec` with coordinates of order 0.1.
pub fn random_state<R: Rng>(r: &mut R, spec: &ModelSpec) -> Vec<f64> {
    (0..spec.n()).map(|i| if i < spec.m() { r.random_range(0.0..0.2) } else { r.random_range(-0.1..0.1) }).collect()
}

/// Two-factor model: a square-root factor driving the volatility of a Gaussian one.
pub fn two_factor_model() -> ModelSpec {
    let mut spec = ModelSpec::zero(StateSpace::new(2, 1).unwrap());
    spec.alpha[0] = DMatrix::from_row_slice(2, 2, &[0.02, 0.005, 0.005, 0.01]);
    spec.a[(1, 1)] = 0.002;
    spec.b = DVector::from_vec(vec![0.03, 0.01]);
    spec.beta[0] = DVector::from_vec(vec![-0.4, 0.1]);
    spec.beta[1] = DVector::from_vec(vec![0.0, -0.8]);
    spec.l = 0.01;
    spec.lambda = DVector::from_vec(vec![1.0, 1.0]);
    spec
}
