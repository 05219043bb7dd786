//! Conditional moments from derivatives of the characteristic function.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::riccati::{affine_exp, check_state, exponents_at, SolverConfig};

/// Highest supported total differentiation order.
pub const MAX_MOMENT_ORDER: usize = 4;

// Central O(h^2) stencils (offset, weight) for derivative orders 0..=4.
const STENCILS: [&[(i32, f64)]; 5] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
];

// Step relative to the scale |mean| + sd, indexed by total order - 1.
const STEP_FACTORS: [f64; 4] = [0.01, 0.01, 0.03, 0.05];

fn moment_solver() -> SolverConfig {
    SolverConfig::with_tolerances(1e-12, 1e-14)
}

/// `E[X_t^order | X_0 = x]` for a multi-index `order` with total at most 4,
/// i.e. the `order` derivative of `u -> E[exp(<u, X_t>)]` at `u = 0`.
///
/// Uses tensor central differences along imaginary directions at steps `h`
/// and `h/2` combined by Richardson extrapolation. The Riccati flow is
/// integrated with a fixed step sequence shared by all stencil points, so the
/// differenced function is smooth in `u`.
pub fn conditional_moment(spec: &ModelSpec, x: &[f64], t: f64, order: &[usize]) -> Result<f64> {
    spec.check_structure()?;
    check_state(spec, x)?;
    let n = spec.n();
    if order.len() != n {
        return Err(Error::Structure(format!("moment order has length {}, expected {n}", order.len())));
    }
    let total: usize = order.iter().sum();
    if total > MAX_MOMENT_ORDER {
        return Err(Error::Unsupported(format!(
            "moment order {total} exceeds the supported depth {MAX_MOMENT_ORDER}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        let mut prod = 1.0;
        for (&k, &xi) in order.iter().zip(x) {
            for _ in 0..k {
                prod *= xi;
            }
        }
        return Ok(prod);
    }
    let adaptive = moment_solver();
    let eval = |v: &[f64], cfg: &SolverConfig| -> Result<Complex64> {
        let u: Vec<Complex64> = v.iter().map(|&vi| Complex64::new(0.0, vi)).collect();
        let (phi, psi) = exponents_at(spec, &u, t, false, cfg)?;
        Ok(affine_exp(phi, &psi, x))
    };
    if total == 0 {
        return Ok(eval(&vec![0.0; n], &adaptive)?.re);
    }

    let active: Vec<usize> = (0..n).filter(|&j| order[j] > 0).collect();
    let mut steps = vec![0.0; n];
    for &j in &active {
        let scale = coordinate_scale(n, j, x[j], &|v| eval(v, &adaptive))?;
        steps[j] = STEP_FACTORS[total - 1] / scale;
    }

    // step sequence taken from an adaptive solve at the outermost stencil point
    let corner: Vec<f64> = (0..n).map(|j| if order[j] > 0 { 2.0 * steps[j] } else { 0.0 }).collect();
    let corner_u: Vec<Complex64> = corner.iter().map(|&v| Complex64::new(0.0, v)).collect();
    let probe = crate::riccati::solve_riccati(spec, &corner_u, &[t], &adaptive)?;
    let fixed = SolverConfig { fixed_steps: Some((2 * probe.stats.accepted).max(24)), ..adaptive };

    let coarse = tensor_difference(n, order, &active, &steps, &|v| eval(v, &fixed))?;
    let half: Vec<f64> = steps.iter().map(|h| 0.5 * h).collect();
    let fine = tensor_difference(n, order, &active, &half, &|v| eval(v, &fixed))?;
    let derivative = (4.0 * fine - coarse) / 3.0;
    // d^k/dv^k f(iv) = i^k d^k/du^k f(u)
    let value = derivative / Complex64::i().powu(total as u32);
    Ok(value.re)
}

/// `|mean| + sd` of coordinate `j`, from two rounds of three-point differences.
fn coordinate_scale(n: usize, j: usize, xj: f64, eval: &dyn Fn(&[f64]) -> Result<Complex64>) -> Result<f64> {
    let mut h = 0.1 / (1.0 + xj.abs());
    let mut scale = 1.0;
    let f0 = eval(&vec![0.0; n])?;
    for _ in 0..2 {
        let mut v = vec![0.0; n];
        v[j] = h;
        let fp = eval(&v)?;
        v[j] = -h;
        let fm = eval(&v)?;
        let mean = ((fp - fm) / (2.0 * h)).im;
        let second = -((fp - 2.0 * f0 + fm) / (h * h)).re;
        let sd = (second - mean * mean).abs().sqrt();
        scale = mean.abs() + sd;
        if !(scale > 0.0 && scale.is_finite()) {
            scale = 1.0;
        }
        h = 0.1 / scale;
    }
    Ok(scale)
}

fn tensor_difference(
    n: usize,
    order: &[usize],
    active: &[usize],
    steps: &[f64],
    eval: &dyn Fn(&[f64]) -> Result<Complex64>,
) -> Result<Complex64> {
    let stencils: Vec<&[(i32, f64)]> = active.iter().map(|&j| STENCILS[order[j]]).collect();
    let mut idx = vec![0usize; active.len()];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut v = vec![0.0; n];
    loop {
        let mut weight = 1.0;
        for (a, &j) in active.iter().enumerate() {
            let (offset, w) = stencils[a][idx[a]];
            v[j] = offset as f64 * steps[j];
            weight *= w / steps[j].powi(order[j] as i32);
        }
        sum += eval(&v)? * weight;
        let mut a = 0;
        loop {
            if a == active.len() {
                return Ok(sum);
            }
            idx[a] += 1;
            if idx[a] < stencils[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}
