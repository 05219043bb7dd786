//! Transition log-likelihoods: closed-form Gaussian and square-root laws,
//! and Fourier inversion of the characteristic function for scalar models.

use std::collections::HashMap;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::admissibility::validate_admissibility;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
use crate::riccati::{exponents_at, SolverConfig};
use crate::simulate::ScalarParams;
use crate::special::{ln_bessel_i, phi1};

/// Densities below this are floored before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;

fn check_series(series: &[f64], dt: f64) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least two observations, got {}", series.len())));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("observation {i} is not finite")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Gaussian transition moments `(mean, variance)` of the OU process.
pub fn ou_transition_moments(p: &ScalarParams, dt: f64, x: f64) -> (f64, f64) {
    let mean = (p.beta * dt).exp() * x + p.b * dt * phi1(p.beta * dt);
    let var = p.sigma * p.sigma * dt * phi1(2.0 * p.beta * dt);
    (mean, var)
}

pub fn ou_transition_logpdf(p: &ScalarParams, dt: f64, x: f64, y: f64) -> f64 {
    let (mean, var) = ou_transition_moments(p, dt, x);
    let r = y - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var)
}

fn check_ou(p: &ScalarParams) -> Result<()> {
    if !(p.sigma > 0.0 && p.sigma.is_finite() && p.b.is_finite() && p.beta.is_finite()) {
        return Err(Error::InvalidInput(format!("OU likelihood needs finite parameters and sigma > 0, got {p:?}")));
    }
    Ok(())
}

pub fn ou_log_densities(series: &[f64], p: &ScalarParams, dt: f64) -> Result<Vec<f64>> {
    check_series(series, dt)?;
    check_ou(p)?;
    Ok(series.windows(2).map(|w| ou_transition_logpdf(p, dt, w[0], w[1])).collect())
}

/// Sum of exact Gaussian transition log densities.
pub fn loglik_ou(series: &[f64], p: &ScalarParams, dt: f64) -> Result<f64> {
    check_series(series, dt)?;
    check_ou(p)?;
    let decay = (p.beta * dt).exp();
    let shift = p.b * dt * phi1(p.beta * dt);
    let var = p.sigma * p.sigma * dt * phi1(2.0 * p.beta * dt);
    let mut ss = 0.0;
    for w in series.windows(2) {
        let r = w[1] - decay * w[0] - shift;
        ss += r * r;
    }
    let count = (series.len() - 1) as f64;
    Ok(-0.5 * (count * (2.0 * std::f64::consts::PI * var).ln() + ss / var))
}

/// Log density of the square-root transition `x -> y` over `dt`: a scaled
/// noncentral chi-square with `c = 2 / (sigma^2 dt phi1(beta dt))`.
pub fn cir_transition_logpdf(p: &ScalarParams, dt: f64, x: f64, y: f64) -> f64 {
    let s2 = p.sigma * p.sigma;
    let c = 2.0 / (s2 * dt * phi1(p.beta * dt));
    let u = c * x * (p.beta * dt).exp();
    let v = c * y;
    let q = 2.0 * p.b / s2 - 1.0;
    if y == 0.0 {
        // limits of the density at the boundary
        return if q > 0.0 {
            f64::NEG_INFINITY
        } else if q == 0.0 {
            c.ln() - u
        } else if q == -1.0 {
            if u == 0.0 { f64::INFINITY } else { c.ln() - u + u.ln() }
        } else {
            f64::INFINITY
        };
    }
    if u == 0.0 {
        return c.ln() - v + q * v.ln() - ln_gamma(q + 1.0);
    }
    c.ln() - u - v + 0.5 * q * (v.ln() - u.ln()) + ln_bessel_i(q, 2.0 * (u * v).sqrt())
}

fn check_cir(series: &[f64], p: &ScalarParams) -> Result<()> {
    if !(p.sigma > 0.0 && p.b >= 0.0 && p.sigma.is_finite() && p.b.is_finite() && p.beta.is_finite()) {
        return Err(Error::InvalidInput(format!("CIR likelihood needs b >= 0 and sigma > 0, got {p:?}")));
    }
    if let Some(i) = series.iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!("observation {i} = {} is negative", series[i])));
    }
    Ok(())
}

pub fn cir_log_densities(series: &[f64], p: &ScalarParams, dt: f64) -> Result<Vec<f64>> {
    check_series(series, dt)?;
    check_cir(series, p)?;
    Ok(series.windows(2).map(|w| cir_transition_logpdf(p, dt, w[0], w[1])).collect())
}

/// Sum of square-root transition log densities.
pub fn loglik_cir(series: &[f64], p: &ScalarParams, dt: f64) -> Result<f64> {
    Ok(cir_log_densities(series, p, dt)?.iter().sum())
}

#[derive(Debug, Clone, Copy)]
pub struct FourierConfig {
    /// Truncation and quadrature accuracy relative to the peak density scale.
    pub rel_tail: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub max_frequency: f64,
    pub solver: SolverConfig,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            rel_tail: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 5000,
            max_frequency: 1e9,
            solver: SolverConfig::default(),
        }
    }
}

/// Transition density of a scalar model by inverting its characteristic
/// function. Riccati exponents depend only on the frequency, so they are
/// cached across transitions.
pub struct FourierDensity<'a> {
    spec: &'a ModelSpec,
    dt: f64,
    cfg: FourierConfig,
    cache: HashMap<u64, (Complex64, Complex64)>,
}

impl<'a> FourierDensity<'a> {
    pub fn new(spec: &'a ModelSpec, dt: f64, cfg: FourierConfig) -> Result<Self> {
        spec.check_structure()?;
        if spec.n() != 1 {
            return Err(Error::Unsupported(format!("Fourier likelihood needs a scalar model, got N = {}", spec.n())));
        }
        let report = validate_admissibility(spec)?;
        if !report.ok {
            let msgs: Vec<&str> = report.violations.iter().map(|v| v.message.as_str()).collect();
            return Err(Error::Inadmissible(msgs.join("; ")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { spec, dt, cfg, cache: HashMap::new() })
    }

    fn exponents(&mut self, lambda: f64) -> Result<(Complex64, Complex64)> {
        if let Some(v) = self.cache.get(&lambda.to_bits()) {
            return Ok(*v);
        }
        let (phi, psi) = exponents_at(self.spec, &[Complex64::new(0.0, lambda)], self.dt, false, &self.cfg.solver)?;
        self.cache.insert(lambda.to_bits(), (phi, psi[0]));
        Ok((phi, psi[0]))
    }

    /// `p(y | x) = (1/pi) Re int_0^inf e^{-i lambda y} E[e^{i lambda X_dt} | x] d lambda`,
    /// truncated where `|CF| * Lambda` falls below the tail target. Not floored.
    pub fn density(&mut self, x: f64, y: f64) -> Result<f64> {
        if !self.spec.space.contains(&[x]) {
            return Err(Error::InvalidInput(format!("state {x} is outside the state space")));
        }
        let modulus = |s: &mut Self, lam: f64| -> Result<f64> {
            let (phi, psi) = s.exponents(lam)?;
            Ok((phi.re + psi.re * x).exp())
        };
        // frequency where |CF| first halves sets the density scale
        let mut lam = 1.0;
        let mut half_width = None;
        loop {
            let env = modulus(self, lam)?;
            if half_width.is_none() && env < 0.5 {
                half_width = Some(lam);
            }
            if let Some(w) = half_width {
                let scale = w / std::f64::consts::PI;
                if env * lam / std::f64::consts::PI <= self.cfg.rel_tail * scale {
                    break;
                }
            }
            lam *= 2.0;
            if lam > self.cfg.max_frequency {
                return Err(Error::Truncation { error_estimate: f64::NAN, tail_bound: env * lam });
            }
        }
        let cutoff = lam;
        let scale = half_width.unwrap_or(1.0) / std::f64::consts::PI;
        let abs_tol = self.cfg.rel_tail * scale;
        let opts = AdaptiveOptions { abs_tol, rel_tol: self.cfg.rel_tol, max_subdivisions: self.cfg.max_subdivisions };
        let res = integrate_adaptive(
            |l| {
                let (phi, psi) = self.exponents(l)?;
                let z = phi + psi * x - Complex64::new(0.0, l * y);
                Ok(z.exp().re)
            },
            0.0,
            cutoff,
            &opts,
        )?;
        if !res.converged {
            return Err(Error::Truncation { error_estimate: res.error, tail_bound: abs_tol });
        }
        let p = res.value / std::f64::consts::PI;
        if p < -10.0 * (abs_tol + res.error) {
            return Err(Error::Numerical(format!("inverted density {p:.3e} is negative for transition {x} -> {y}")));
        }
        Ok(p)
    }

    pub fn log_density(&mut self, x: f64, y: f64) -> Result<f64> {
        Ok(self.density(x, y)?.max(DENSITY_FLOOR).ln())
    }
}

pub fn fourier_log_densities(series: &[f64], spec: &ModelSpec, dt: f64) -> Result<Vec<f64>> {
    check_series(series, dt)?;
    let mut dens = FourierDensity::new(spec, dt, FourierConfig::default())?;
    series
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            dens.log_density(w[0], w[1]).map_err(|e| match e {
                Error::Numerical(msg) => Error::Numerical(format!("transition {k}: {msg}")),
                other => other,
            })
        })
        .collect()
}

/// Sum of Fourier-inverted transition log densities, each floored at
/// [`DENSITY_FLOOR`].
pub fn loglik_fourier(series: &[f64], spec: &ModelSpec, dt: f64) -> Result<f64> {
    Ok(fourier_log_densities(series, spec, dt)?.iter().sum())
}
