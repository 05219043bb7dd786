//! Seeded sample paths: exact OU and CIR transitions, and Euler-Maruyama with
//! full truncation for general affine diffusions.
//!
//! Every path draws from its own ChaCha8 stream `(seed, path index)`, so the
//! output does not depend on the order in which paths are generated. Normals
//! come from the Ziggurat sampler of `rand_distr`.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::special::phi1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExactOu,
    ExactCir,
    Euler,
}

/// Parameters of `dX = (b + beta X) dt + sigma X^p dW` with `p` = 0 (OU)
/// or 1/2 (CIR).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarParams {
    pub b: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl ScalarParams {
    pub fn new(b: f64, beta: f64, sigma: f64) -> Self {
        Self { b, beta, sigma }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub seed: u64,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub dim: usize,
    pub scheme: Scheme,
    /// Path-major, then time, then coordinate.
    pub values: Vec<f64>,
}

impl PathSet {
    fn stride(&self) -> usize {
        (self.steps + 1) * self.dim
    }

    /// All states of one path, `(steps + 1) * dim` values.
    pub fn path(&self, p: usize) -> &[f64] {
        &self.values[p * self.stride()..(p + 1) * self.stride()]
    }

    pub fn state(&self, p: usize, step: usize) -> &[f64] {
        let start = p * self.stride() + step * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn terminal(&self, p: usize) -> &[f64] {
        self.state(p, self.steps)
    }

    /// Coordinate `coord` of one path as a time series.
    pub fn series(&self, p: usize, coord: usize) -> Vec<f64> {
        (0..=self.steps).map(|k| self.state(p, k)[coord]).collect()
    }

    /// CSV with header `path,time,x_1,..,x_N`, reals to 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "path,time")?;
        for j in 1..=self.dim {
            write!(w, ",x_{j}")?;
        }
        writeln!(w)?;
        for p in 0..self.n_paths {
            for k in 0..=self.steps {
                write!(w, "{p},{:.16e}", k as f64 * self.dt)?;
                for v in self.state(p, k) {
                    write!(w, ",{v:.16e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn check_grid(dt: f64, n_paths: usize) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive and finite, got {dt}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("at least one path is required".into()));
    }
    Ok(())
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Exact Gaussian transitions of the OU process.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ou_exact(
    b: f64,
    beta: f64,
    sigma: f64,
    x0: f64,
    dt: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    check_grid(dt, n_paths)?;
    if ![b, beta, sigma, x0].iter().all(|v| v.is_finite()) || sigma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "OU parameters must be finite with sigma >= 0 (b = {b}, beta = {beta}, sigma = {sigma}, x0 = {x0})"
        )));
    }
    let decay = (beta * dt).exp();
    let shift = b * dt * phi1(beta * dt);
    let sd = (sigma * sigma * dt * phi1(2.0 * beta * dt)).sqrt();
    let mut values = Vec::with_capacity(n_paths * (steps + 1));
    for p in 0..n_paths {
        let mut rng = path_rng(seed, p);
        let mut x = x0;
        values.push(x);
        for _ in 0..steps {
            x = decay * x + shift + sd * normal(&mut rng);
            values.push(x);
        }
    }
    Ok(PathSet { seed, dt, steps, n_paths, dim: 1, scheme: Scheme::ExactOu, values })
}

/// One exact CIR transition: Poisson mixture of Gamma laws, i.e. the scaled
/// noncentral chi-square with `4b/sigma^2` degrees of freedom.
fn cir_step<R: Rng>(rng: &mut R, x: f64, shape0: f64, scale_c: f64, decay: f64) -> f64 {
    let mean = scale_c * x * decay;
    let n = if mean <= 0.0 {
        0.0
    } else {
        match Poisson::new(mean) {
            Ok(dist) => dist.sample(rng),
            // beyond the sampler's range the normal limit is exact to rounding
            Err(_) => (mean + mean.sqrt() * normal(rng)).round().max(0.0),
        }
    };
    let shape = shape0 + n;
    if shape <= 0.0 {
        return 0.0;
    }
    let g: f64 = Gamma::new(shape, 1.0).expect("positive gamma shape").sample(rng);
    g / scale_c
}

/// Exact transitions of the square-root process.
#[allow(clippy::too_many_arguments)]
pub fn simulate_cir_exact(
    b: f64,
    beta: f64,
    sigma: f64,
    x0: f64,
    dt: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    check_grid(dt, n_paths)?;
    if !(b >= 0.0 && sigma > 0.0 && x0 >= 0.0 && beta.is_finite() && b.is_finite() && sigma.is_finite() && x0.is_finite())
    {
        return Err(Error::Inadmissible(format!(
            "CIR simulation needs b >= 0, sigma > 0, x0 >= 0 (b = {b}, sigma = {sigma}, x0 = {x0})"
        )));
    }
    let decay = (beta * dt).exp();
    let scale_c = 2.0 / (sigma * sigma * dt * phi1(beta * dt));
    let shape0 = 2.0 * b / (sigma * sigma);
    let mut values = Vec::with_capacity(n_paths * (steps + 1));
    for p in 0..n_paths {
        let mut rng = path_rng(seed, p);
        let mut x = x0;
        values.push(x);
        for _ in 0..steps {
            x = cir_step(&mut rng, x, shape0, scale_c, decay);
            values.push(x);
        }
    }
    Ok(PathSet { seed, dt, steps, n_paths, dim: 1, scheme: Scheme::ExactCir, values })
}

/// Lower Cholesky factor of a symmetric positive semidefinite matrix.
/// Pivots down to `-tol * scale` are clamped to zero.
fn clamped_cholesky(mat: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = mat.nrows();
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = mat[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return None;
        }
        if d <= tol {
            // degenerate direction: the rest of the column must vanish too
            for i in j + 1..n {
                let mut s = mat[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > tol.sqrt() * scale.sqrt() {
                    return None;
                }
            }
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = mat[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

/// Euler-Maruyama with full truncation: positive coordinates are clamped at
/// zero inside drift and diffusion and floored at zero after each step.
pub fn simulate_euler(spec: &ModelSpec, x0: &[f64], dt: f64, steps: usize, n_paths: usize, seed: u64) -> Result<PathSet> {
    spec.check_structure()?;
    check_grid(dt, n_paths)?;
    if spec.has_jumps() {
        return Err(Error::Unsupported("Euler simulation covers diffusions only".into()));
    }
    let n = spec.n();
    let m = spec.m();
    if x0.len() != n || !spec.space.contains(x0) {
        return Err(Error::InvalidInput(format!("initial state {x0:?} is not in the state space")));
    }
    let sqrt_dt = dt.sqrt();
    let mut values = Vec::with_capacity(n_paths * (steps + 1) * n);
    let mut z = DVector::zeros(n);
    let mut clamped = vec![0.0; n];
    for p in 0..n_paths {
        let mut rng = path_rng(seed, p);
        let mut x = x0.to_vec();
        values.extend_from_slice(&x);
        for _ in 0..steps {
            clamped.copy_from_slice(&x);
            for v in clamped.iter_mut().take(m) {
                *v = v.max(0.0);
            }
            let drift = spec.drift_at(&clamped);
            let cov = spec.diffusion_at(&clamped) * 2.0;
            let sym = (&cov + cov.transpose()) * 0.5;
            let chol = clamped_cholesky(&sym).ok_or_else(|| {
                Error::Numerical(format!("diffusion matrix is not positive semidefinite at state {clamped:?}"))
            })?;
            for zi in z.iter_mut() {
                *zi = normal(&mut rng);
            }
            let shock = chol * &z;
            for i in 0..n {
                x[i] += drift[i] * dt + sqrt_dt * shock[i];
                if i < m {
                    x[i] = x[i].max(0.0);
                }
            }
            values.extend_from_slice(&x);
        }
    }
    Ok(PathSet { seed, dt, steps, n_paths, dim: n, scheme: Scheme::Euler, values })
}
