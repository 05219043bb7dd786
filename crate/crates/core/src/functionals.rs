//! The Riccati functionals `F` and `R`.
//!
//! Bilinear forms are extended to complex arguments without conjugation,
//! `<a u, u> = sum_kl a_kl u_k u_l`. Jumps use the truncation `chi = 0`, so the
//! drift `b` carries no jump compensator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{JumpKind, ModelSpec};

fn quad_form(mat: &nalgebra::DMatrix<f64>, u: &[Complex64]) -> Complex64 {
    let n = u.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for l in 0..n {
            let v = mat[(k, l)];
            if v != 0.0 {
                row += v * u[l];
            }
        }
        acc += row * u[k];
    }
    acc
}

fn dot(v: &nalgebra::DVector<f64>, u: &[Complex64]) -> Complex64 {
    v.iter().zip(u).map(|(a, z)| *a * z).sum()
}

fn check_len(spec: &ModelSpec, u: &[Complex64]) -> Result<()> {
    if u.len() != spec.n() {
        return Err(Error::Structure(format!("argument has length {}, expected {}", u.len(), spec.n())));
    }
    Ok(())
}

/// `F(u) = <a u, u> + <b, u> - c + sum of constant jump transforms`.
pub fn evaluate_f(spec: &ModelSpec, u: &[Complex64]) -> Result<Complex64> {
    check_len(spec, u)?;
    let mut out = quad_form(&spec.a, u) + dot(&spec.b, u) - spec.c;
    for (j, jump) in spec.jumps.iter().enumerate() {
        if jump.kind == JumpKind::Constant {
            out += jump.transform(j, u)?;
        }
    }
    Ok(out)
}

/// `R(u)`: quadratic, linear, discount and jump terms on the positive block;
/// exactly `<beta_i, u>` on the real block.
pub fn evaluate_r(spec: &ModelSpec, u: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(spec, u)?;
    let mut out = vec![Complex64::new(0.0, 0.0); spec.n()];
    r_into(spec, u, &mut out)?;
    Ok(out)
}

/// Writes `R(u)` into `out` without allocating.
pub(crate) fn r_into(spec: &ModelSpec, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
    let m = spec.m();
    for (i, slot) in out.iter_mut().enumerate() {
        let mut r = dot(&spec.beta[i], u);
        if i < m {
            r += quad_form(&spec.alpha[i], u) - spec.gamma[i];
        }
        *slot = r;
    }
    for (j, jump) in spec.jumps.iter().enumerate() {
        if let JumpKind::Linear(i) = jump.kind {
            out[i] += jump.transform(j, u)?;
        }
    }
    Ok(())
}

/// `F(u) + <R(u), x>`, the exponent rate of the generator applied to `e^{<u,x>}`.
pub fn generator_exponent(spec: &ModelSpec, u: &[Complex64], x: &[f64]) -> Result<Complex64> {
    let f = evaluate_f(spec, u)?;
    let r = evaluate_r(spec, u)?;
    Ok(f + r.iter().zip(x).map(|(ri, xi)| ri * xi).sum::<Complex64>())
}
