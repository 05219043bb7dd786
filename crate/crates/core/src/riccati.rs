//! Generalized Riccati equations
//!
//! ```text
//! d/dt phi = F(psi),  phi(0) = 0
//! d/dt psi = R(psi),  psi(0) = u
//! ```
//!
//! and the discounted variant with `F - l` and `R - lambda`. `psi` is the
//! primary state; `phi` is carried as an extra quadrature component so both
//! share one error control. Complex components are integrated as real pairs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{evaluate_f, r_into};
use crate::model::ModelSpec;
use crate::ode::{integrate, StepControl, StepStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Uniform step count; disables error control.
    pub fixed_steps: Option<usize>,
    /// `|psi_i|` above this aborts the solve as a blow-up.
    pub overflow_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000, initial_step: None, fixed_steps: None, overflow_guard: 1e12 }
    }
}

impl SolverConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Trajectory `t -> (phi(t, u0), psi(t, u0))` on a time grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub u0: Vec<Complex64>,
    pub grid: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub psi: Vec<Vec<Complex64>>,
    pub extended: bool,
    pub stats: StepStats,
}

impl RiccatiSolution {
    /// `exp(phi(t_k) + <psi(t_k), x>)` at grid index `k`.
    pub fn transform_at(&self, k: usize, x: &[f64]) -> Complex64 {
        affine_exp(self.phi[k], &self.psi[k], x)
    }

    pub fn last(&self) -> (Complex64, &[Complex64]) {
        let k = self.grid.len() - 1;
        (self.phi[k], &self.psi[k])
    }
}

pub(crate) fn affine_exp(phi: Complex64, psi: &[Complex64], x: &[f64]) -> Complex64 {
    (phi + psi.iter().zip(x).map(|(p, xi)| p * xi).sum::<Complex64>()).exp()
}

/// Solves the plain Riccati system on `grid` (nonnegative, nondecreasing).
/// The returned grid always starts at 0.
pub fn solve_riccati(spec: &ModelSpec, u0: &[Complex64], grid: &[f64], cfg: &SolverConfig) -> Result<RiccatiSolution> {
    solve(spec, u0, grid, cfg, false)
}

/// Solves the discounted system with `F - l` and `R - lambda`.
pub fn solve_extended(spec: &ModelSpec, u0: &[Complex64], grid: &[f64], cfg: &SolverConfig) -> Result<RiccatiSolution> {
    solve(spec, u0, grid, cfg, true)
}

/// `(phi(t,u), psi(t,u))` at a single time.
pub fn exponents_at(
    spec: &ModelSpec,
    u: &[Complex64],
    t: f64,
    extended: bool,
    cfg: &SolverConfig,
) -> Result<(Complex64, Vec<Complex64>)> {
    let sol = solve(spec, u, &[t], cfg, extended)?;
    let k = sol.grid.len() - 1;
    Ok((sol.phi[k], sol.psi[k].clone()))
}

/// `E[exp(<u, X_t>) | X_0 = x] = exp(phi(t,u) + <psi(t,u), x>)`.
pub fn characteristic_function(spec: &ModelSpec, x: &[f64], t: f64, u: &[Complex64]) -> Result<Complex64> {
    characteristic_function_with(spec, x, t, u, &SolverConfig::default())
}

pub fn characteristic_function_with(
    spec: &ModelSpec,
    x: &[f64],
    t: f64,
    u: &[Complex64],
    cfg: &SolverConfig,
) -> Result<Complex64> {
    check_state(spec, x)?;
    let (phi, psi) = exponents_at(spec, u, t, false, cfg)?;
    Ok(affine_exp(phi, &psi, x))
}

pub(crate) fn check_state(spec: &ModelSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.n() {
        return Err(Error::Structure(format!("state has length {}, expected {}", x.len(), spec.n())));
    }
    if !spec.space.contains(x) {
        return Err(Error::InvalidInput(format!("state {x:?} is outside the state space")));
    }
    Ok(())
}

fn solve(spec: &ModelSpec, u0: &[Complex64], grid: &[f64], cfg: &SolverConfig, extended: bool) -> Result<RiccatiSolution> {
    cfg.validate()?;
    let n = spec.n();
    if u0.len() != n {
        return Err(Error::Structure(format!("u0 has length {}, expected {n}", u0.len())));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("grid times must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("grid times must be nondecreasing".into()));
    }
    let mut full_grid = Vec::with_capacity(grid.len() + 1);
    if grid.first() != Some(&0.0) {
        full_grid.push(0.0);
    }
    full_grid.extend_from_slice(grid);

    let mut y0 = vec![0.0; 2 + 2 * n];
    for (i, u) in u0.iter().enumerate() {
        y0[2 + 2 * i] = u.re;
        y0[3 + 2 * i] = u.im;
    }
    let shift_l = if extended { spec.l } else { 0.0 };
    let guard = cfg.overflow_guard;
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        for i in 0..n {
            psi[i] = Complex64::new(y[2 + 2 * i], y[3 + 2 * i]);
            if !(psi[i].norm() <= guard) {
                return Err(Error::BlowUp {
                    time: t,
                    reason: format!("|psi[{i}]| exceeded the overflow guard {guard:.1e}"),
                });
            }
        }
        let f = evaluate_f(spec, &psi).map_err(|e| blow_up_from_domain(e, t))? - shift_l;
        r_into(spec, &psi, &mut r).map_err(|e| blow_up_from_domain(e, t))?;
        dy[0] = f.re;
        dy[1] = f.im;
        for i in 0..n {
            let ri = if extended { r[i] - spec.lambda[i] } else { r[i] };
            dy[2 + 2 * i] = ri.re;
            dy[3 + 2 * i] = ri.im;
        }
        Ok(())
    };
    let ctl = StepControl {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_steps: cfg.max_steps,
        initial_step: cfg.initial_step,
        fixed_steps: cfg.fixed_steps,
    };
    let mut rows = Vec::with_capacity(full_grid.len());
    let stats = integrate(rhs, &y0, &full_grid, &ctl, &mut rows)?;

    let phi = rows.iter().map(|y| Complex64::new(y[0], y[1])).collect();
    let psi = rows
        .iter()
        .map(|y| (0..n).map(|i| Complex64::new(y[2 + 2 * i], y[3 + 2 * i])).collect())
        .collect();
    Ok(RiccatiSolution { u0: u0.to_vec(), grid: full_grid, phi, psi, extended, stats })
}

// A jump transform diverging mid-flight means the flow left the finiteness domain.
fn blow_up_from_domain(err: Error, t: f64) -> Error {
    match err {
        Error::JumpDomain { index, detail } => {
            Error::BlowUp { time: t, reason: format!("jump transform {index} diverged: {detail}") }
        }
        other => other,
    }
}
