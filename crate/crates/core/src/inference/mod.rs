//! Parameter estimation for scalar affine models.

mod gmm;
mod likelihood;
mod mle;
mod moments;
mod optim;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use gmm::{gmm_estimate, gmm_moment_vector, MomentCondition, MomentSpec};
pub use likelihood::{
    cir_log_densities, cir_transition_logpdf, fourier_log_densities, loglik_cir, loglik_fourier, loglik_ou,
    ou_log_densities, ou_transition_logpdf, ou_transition_moments, FourierConfig, FourierDensity, DENSITY_FLOOR,
};
pub use mle::mle_estimate;
pub use moments::{conditional_moment, MAX_MOMENT_ORDER};
pub use optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::simulate::ScalarParams;

/// Parameter names, in the order used by every estimator.
pub const PARAM_NAMES: [&str; 3] = ["b", "beta", "sigma"];

/// Scalar model family with parameters `(b, beta, sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Ou,
    Cir,
    /// Scalar template whose `b`, `beta` and diffusion loading are replaced;
    /// `sigma^2 / 2` goes into `a` for a real state and `alpha` otherwise.
    GeneralScalar(Box<ModelSpec>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ou => "ou",
            Family::Cir => "cir",
            Family::GeneralScalar(_) => "general_scalar",
        }
    }

    fn positive_state(&self) -> bool {
        match self {
            Family::Ou => false,
            Family::Cir => true,
            Family::GeneralScalar(t) => t.m() == 1,
        }
    }

    /// The model with parameters `p`.
    pub fn spec(&self, p: &ScalarParams) -> Result<ModelSpec> {
        Ok(match self {
            Family::Ou => ModelSpec::vasicek(p.b, p.beta, p.sigma),
            Family::Cir => ModelSpec::cir(p.b, p.beta, p.sigma),
            Family::GeneralScalar(template) => {
                template.check_structure()?;
                if template.n() != 1 {
                    return Err(Error::Unsupported(format!(
                        "general_scalar needs a one-dimensional template, got N = {}",
                        template.n()
                    )));
                }
                let mut spec = (**template).clone();
                spec.b[0] = p.b;
                spec.beta[0][0] = p.beta;
                let half_var = 0.5 * p.sigma * p.sigma;
                if spec.m() == 1 {
                    spec.a[(0, 0)] = 0.0;
                    spec.alpha[0][(0, 0)] = half_var;
                } else {
                    spec.a[(0, 0)] = half_var;
                }
                spec
            }
        })
    }

    pub fn loglik(&self, series: &[f64], p: &ScalarParams, dt: f64) -> Result<f64> {
        match self {
            Family::Ou => loglik_ou(series, p, dt),
            Family::Cir => loglik_cir(series, p, dt),
            Family::GeneralScalar(_) => loglik_fourier(series, &self.spec(p)?, dt),
        }
    }

    fn check_series(&self, series: &[f64]) -> Result<()> {
        if self.positive_state() {
            if let Some(i) = series.iter().position(|&v| v < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "observation {i} = {} is negative for a nonnegative family",
                    series[i]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `ou` or `cir`; `general_scalar` needs a template and is built directly.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ou" => Ok(Family::Ou),
            "cir" => Ok(Family::Cir),
            other => Err(Error::InvalidInput(format!("unknown family '{other}' (expected ou or cir)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub optimizer: NelderMeadOptions,
    pub std_errors: bool,
    /// Parameters held at the given value, by position in [`PARAM_NAMES`].
    pub fixed: [Option<f64>; 3],
    pub sigma_floor: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { optimizer: NelderMeadOptions::default(), std_errors: true, fixed: [None; 3], sigma_floor: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub method: String,
    pub family: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// Log-likelihood (MLE) or final GMM criterion.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Zero for fixed parameters.
    pub std_errors: Option<Vec<f64>>,
    /// GMM only: the estimated weighting matrix was singular and identity
    /// weighting was used instead.
    pub weighting_fallback: bool,
}

impl EstimationResult {
    pub fn scalar_params(&self) -> ScalarParams {
        ScalarParams::new(self.params[0], self.params[1], self.params[2])
    }
}

/// Maps unconstrained optimizer coordinates to `(b, beta, sigma)`: positive
/// parameters through `exp`, fixed ones held.
struct Parametrization {
    fixed: [Option<f64>; 3],
    positive: [bool; 3],
    free: Vec<usize>,
    sigma_floor: f64,
}

impl Parametrization {
    fn new(family: &Family, cfg: &EstimationConfig, init: &ScalarParams) -> Result<Self> {
        let positive = [family.positive_state(), false, true];
        let natural = [init.b, init.beta, init.sigma];
        for k in 0..3 {
            let v = cfg.fixed[k].unwrap_or(natural[k]);
            if !v.is_finite() || (positive[k] && !(v > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "initial {} = {v} is not admissible for family {}",
                    PARAM_NAMES[k],
                    family.name()
                )));
            }
        }
        let free = (0..3).filter(|&k| cfg.fixed[k].is_none()).collect();
        Ok(Self { fixed: cfg.fixed, positive, free, sigma_floor: cfg.sigma_floor })
    }

    fn natural(&self, theta: &[f64]) -> ScalarParams {
        let mut out = [0.0; 3];
        let mut it = theta.iter();
        for k in 0..3 {
            out[k] = match self.fixed[k] {
                Some(v) => v,
                None => {
                    let t = *it.next().expect("theta length matches free parameters");
                    if self.positive[k] { t.exp() } else { t }
                }
            };
        }
        out[2] = out[2].max(self.sigma_floor);
        ScalarParams::new(out[0], out[1], out[2])
    }

    fn theta(&self, p: &ScalarParams) -> Vec<f64> {
        let natural = [p.b, p.beta, p.sigma];
        self.free.iter().map(|&k| if self.positive[k] { natural[k].ln() } else { natural[k] }).collect()
    }
}

fn as_array(p: &ScalarParams) -> [f64; 3] {
    [p.b, p.beta, p.sigma]
}

fn from_array(a: [f64; 3]) -> ScalarParams {
    ScalarParams::new(a[0], a[1], a[2])
}
