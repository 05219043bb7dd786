//! Explicit bond-price exponents for the one-factor Vasicek and CIR models,
//! `P(t, T) = exp(G + H x)` with `tau = T - t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{phi1, phi2, phi3};

/// Exponents `G(t, T)` and `H(t, T)` of a one-factor bond price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GHPair {
    pub g: f64,
    pub h: f64,
}

impl GHPair {
    pub fn bond_price(&self, x: f64) -> f64 {
        (self.g + self.h * x).exp()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("time to maturity must be finite and nonnegative, got {tau}")));
    }
    Ok(())
}

/// Vasicek exponents for `dX = (b + beta X) dt + sigma dW`, `r = X`.
///
/// `H = (1 - e^{beta tau}) / beta` and `G = sigma^2/2 int H^2 + b int H`, with
/// both integrals taken analytically. Written through the entire functions
/// `phi_k`, so `beta = 0` gives the limit `H = -tau` without a special case.
pub fn vasicek_gh(b: f64, beta: f64, sigma: f64, tau: f64) -> Result<GHPair> {
    check_tau(tau)?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    let z = beta * tau;
    let h = -tau * phi1(z);
    let int_h = -tau * tau * phi2(z);
    let int_h2 = 2.0 * tau.powi(3) * (2.0 * phi3(2.0 * z) - phi3(z));
    let g = 0.5 * sigma * sigma * int_h2 + b * int_h;
    Ok(GHPair { g, h })
}

/// CIR exponents for `dX = (b + beta X) dt + sigma sqrt(X) dW`, `r = X`,
/// with `gamma = sqrt(beta^2 + 2 sigma^2)`.
///
/// Evaluated in the equivalent form scaled by `e^{-gamma tau}`, which stays
/// finite for long maturities.
pub fn cir_gh(b: f64, beta: f64, sigma: f64, tau: f64) -> Result<GHPair> {
    check_tau(tau)?;
    if sigma == 0.0 {
        return Err(Error::Unsupported(
            "CIR closed form requires sigma != 0; use vasicek_gh with sigma = 0 for the deterministic case".into(),
        ));
    }
    if !(sigma > 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidInput(format!("CIR needs b >= 0 and sigma > 0, got b = {b}, sigma = {sigma}")));
    }
    let gamma = cir_gamma(beta, sigma);
    let decay = (-gamma * tau).exp();
    let q = -(-gamma * tau).exp_m1();
    let den = (gamma - beta) * q + 2.0 * gamma * decay;
    let log_arg = 2.0 * gamma / den;
    assert!(log_arg > 0.0 && den > 0.0, "CIR log argument must be positive");
    let h = -2.0 * q / den;
    let g = 2.0 * b / (sigma * sigma) * (log_arg.ln() - 0.5 * (gamma + beta) * tau);
    Ok(GHPair { g, h })
}

/// `sqrt(beta^2 + 2 sigma^2)`.
pub fn cir_gamma(beta: f64, sigma: f64) -> f64 {
    (beta * beta + 2.0 * sigma * sigma).sqrt()
}
