//! Bond prices, yield curves, the discounted transform, and European calls by
//! damped Fourier inversion of the discounted transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::quadrature::{integrate_adaptive, integrate_simpson, AdaptiveOptions};
use crate::riccati::{affine_exp, check_state, exponents_at, solve_extended, SolverConfig};

/// Zero-coupon curve generated by a model from one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldCurve {
    pub maturities: Vec<f64>,
    pub discounts: Vec<f64>,
    pub zero_rates: Vec<f64>,
}

impl YieldCurve {
    pub fn len(&self) -> usize {
        self.maturities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maturities.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureRule {
    GaussKronrod,
    Simpson,
}

/// Settings for the damped Fourier call integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Damping `C > 1`.
    pub damping: f64,
    /// Integration limit in the frequency variable.
    pub truncation: f64,
    /// Subdivision budget (Gauss-Kronrod) or panel count (Simpson).
    pub nodes: usize,
    pub rule: QuadratureRule,
    /// Absolute quadrature tolerance on the price.
    pub tol: f64,
    /// Coordinate of the state holding the log price.
    pub coord: usize,
    pub solver: SolverConfig,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            damping: 1.5,
            truncation: 200.0,
            nodes: 2000,
            rule: QuadratureRule::GaussKronrod,
            tol: 1e-10,
            coord: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CallQuote {
    pub price: f64,
    /// Quadrature error estimate plus the truncation tail bound.
    pub error_estimate: f64,
    /// Bound on the neglected integral beyond the truncation, assuming
    /// at least `|lambda|^-2` decay of the integrand modulus.
    pub tail_bound: f64,
    pub evaluations: usize,
}

/// `P = exp(phi~(tau, 0) + <psi~(tau, 0), x>)`.
pub fn bond_price(spec: &ModelSpec, x: &[f64], tau: f64) -> Result<f64> {
    bond_price_with(spec, x, tau, &SolverConfig::default())
}

pub fn bond_price_with(spec: &ModelSpec, x: &[f64], tau: f64, cfg: &SolverConfig) -> Result<f64> {
    check_state(spec, x)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be finite and nonnegative, got {tau}")));
    }
    let zero = vec![Complex64::new(0.0, 0.0); spec.n()];
    let (phi, psi) = exponents_at(spec, &zero, tau, true, cfg)?;
    Ok(affine_exp(phi, &psi, x).re)
}

/// Discount factors and zero rates at strictly increasing positive maturities.
/// One Riccati solve covers the whole grid.
pub fn yield_curve(spec: &ModelSpec, x: &[f64], maturities: &[f64]) -> Result<YieldCurve> {
    yield_curve_with(spec, x, maturities, &SolverConfig::default())
}

pub fn yield_curve_with(spec: &ModelSpec, x: &[f64], maturities: &[f64], cfg: &SolverConfig) -> Result<YieldCurve> {
    check_state(spec, x)?;
    if maturities.is_empty() {
        return Err(Error::InvalidInput("no maturities given".into()));
    }
    if maturities[0] <= 0.0 || maturities.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("maturities must be positive and strictly increasing".into()));
    }
    let zero = vec![Complex64::new(0.0, 0.0); spec.n()];
    let sol = solve_extended(spec, &zero, maturities, cfg).map_err(|e| match e {
        Error::BlowUp { time, reason } => {
            let tau = maturities.iter().copied().find(|&m| m >= time).unwrap_or(time);
            Error::BlowUp { time, reason: format!("{reason} (maturity {tau})") }
        }
        other => other,
    })?;
    let mut discounts = Vec::with_capacity(maturities.len());
    let mut zero_rates = Vec::with_capacity(maturities.len());
    for (k, tau) in maturities.iter().enumerate() {
        // solution grid has t = 0 prepended
        let p = sol.transform_at(k + 1, x).re;
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Numerical(format!("non-positive discount factor {p} at maturity {tau}")));
        }
        discounts.push(p);
        zero_rates.push(-p.ln() / tau);
    }
    Ok(YieldCurve { maturities: maturities.to_vec(), discounts, zero_rates })
}

/// `E[exp(-int_0^t r_s ds) exp(<u, X_t>) | X_0 = x]`.
pub fn discounted_transform(spec: &ModelSpec, x: &[f64], t: f64, u: &[Complex64]) -> Result<Complex64> {
    discounted_transform_with(spec, x, t, u, &SolverConfig::default())
}

pub fn discounted_transform_with(
    spec: &ModelSpec,
    x: &[f64],
    t: f64,
    u: &[Complex64],
    cfg: &SolverConfig,
) -> Result<Complex64> {
    check_state(spec, x)?;
    let (phi, psi) = exponents_at(spec, u, t, true, cfg)?;
    Ok(affine_exp(phi, &psi, x))
}

/// European call on `exp(X_t[coord])` with log strike `k`:
///
/// ```text
/// (1/pi) Re int_0^L exp(phi~(t, z e_j) + <psi~(t, z e_j), x>) e^{k(1-z)} / (z (z-1)) dlambda,
/// z = C + i lambda
/// ```
///
/// which is the damped inversion integral folded onto the half line (the
/// integrand at `-lambda` is the conjugate).
pub fn price_european_call(spec: &ModelSpec, x: &[f64], t: f64, k: f64, q: &QuadratureConfig) -> Result<CallQuote> {
    check_state(spec, x)?;
    let n = spec.n();
    if q.coord >= n {
        return Err(Error::InvalidInput(format!("log-price coordinate {} out of range", q.coord)));
    }
    if !(q.damping > 1.0) {
        return Err(Error::InvalidInput(format!("damping must exceed 1, got {}", q.damping)));
    }
    if !(q.truncation > 0.0) || q.nodes == 0 {
        return Err(Error::InvalidInput("truncation and node count must be positive".into()));
    }
    if !(t >= 0.0 && t.is_finite()) || !k.is_finite() {
        return Err(Error::InvalidInput("maturity and log strike must be finite (t >= 0)".into()));
    }

    let direction = |z: Complex64| {
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        u[q.coord] = z;
        u
    };

    // Finiteness of E[exp(-int r) exp(C X_t)] at the damping itself.
    let probe = exponents_at(spec, &direction(Complex64::new(q.damping, 0.0)), t, true, &q.solver)
        .map_err(|e| Error::InfeasibleDamping { damping: q.damping, reason: e.to_string() })?;
    let probe_value = affine_exp(probe.0, &probe.1, x);
    if !probe_value.re.is_finite() {
        return Err(Error::InfeasibleDamping { damping: q.damping, reason: "probe transform is not finite".into() });
    }

    let integrand_complex = |lambda: f64| -> Result<Complex64> {
        let z = Complex64::new(q.damping, lambda);
        let (phi, psi) = exponents_at(spec, &direction(z), t, true, &q.solver)?;
        let exponent = phi + psi.iter().zip(x).map(|(p, xi)| p * xi).sum::<Complex64>() + k * (1.0 - z);
        Ok(exponent.exp() / (z * (z - 1.0)) / PI)
    };

    let result = match q.rule {
        QuadratureRule::GaussKronrod => {
            let opts = AdaptiveOptions { abs_tol: q.tol, rel_tol: 0.0, max_subdivisions: q.nodes };
            integrate_adaptive(|l| integrand_complex(l).map(|v| v.re), 0.0, q.truncation, &opts)?
        }
        QuadratureRule::Simpson => integrate_simpson(|l| integrand_complex(l).map(|v| v.re), 0.0, q.truncation, q.nodes)?,
    };
    let tail_bound = integrand_complex(q.truncation)?.norm() * q.truncation;
    if !result.converged {
        return Err(Error::Truncation { error_estimate: result.error, tail_bound });
    }
    if result.value < -1e-10 {
        return Err(Error::Numerical(format!("call price came out negative ({:.3e})", result.value)));
    }
    Ok(CallQuote {
        price: result.value.max(0.0),
        error_estimate: result.error + tail_bound,
        tail_bound,
        evaluations: result.evaluations,
    })
}
