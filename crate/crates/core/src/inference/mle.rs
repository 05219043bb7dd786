use nalgebra::DMatrix;

use super::optim::nelder_mead;
use super::{as_array, from_array, EstimationConfig, EstimationResult, Family, Parametrization, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::simulate::ScalarParams;

/// Maximum likelihood over `(b, beta, sigma)` by Nelder-Mead in transformed
/// coordinates. Standard errors come from a central-difference Hessian of
/// the log-likelihood in natural coordinates.
pub fn mle_estimate(
    series: &[f64],
    family: &Family,
    dt: f64,
    init: &ScalarParams,
    cfg: &EstimationConfig,
) -> Result<EstimationResult> {
    if series.len() < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    family.check_series(series)?;
    // surfaces input errors before optimizing
    family.loglik(series, init, dt)?;
    let param = Parametrization::new(family, cfg, init)?;
    let count = (series.len() - 1) as f64;
    let objective = |theta: &[f64]| match family.loglik(series, &param.natural(theta), dt) {
        Ok(ll) => -ll / count,
        Err(_) => f64::INFINITY,
    };
    let fit = nelder_mead(objective, &param.theta(init), &cfg.optimizer);
    let best = param.natural(&fit.x);
    let loglik = family.loglik(series, &best, dt)?;

    let std_errors = if cfg.std_errors { hessian_std_errors(series, family, dt, &best, &param.free) } else { None };
    Ok(EstimationResult {
        method: "mle".into(),
        family: family.name().into(),
        names: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
        params: as_array(&best).to_vec(),
        objective: loglik,
        converged: fit.converged,
        iterations: fit.iterations,
        std_errors,
        weighting_fallback: false,
    })
}

fn hessian_std_errors(series: &[f64], family: &Family, dt: f64, at: &ScalarParams, free: &[usize]) -> Option<Vec<f64>> {
    let base = as_array(at);
    let steps: Vec<f64> = free.iter().map(|&k| 1e-4 * base[k].abs().max(1e-3)).collect();
    let ll = |shift: &[(usize, f64)]| -> Option<f64> {
        let mut p = base;
        for &(k, d) in shift {
            p[k] += d;
        }
        family.loglik(series, &from_array(p), dt).ok().filter(|v| v.is_finite())
    };
    let f0 = ll(&[])?;
    let d = free.len();
    let mut info = DMatrix::zeros(d, d);
    for a in 0..d {
        let (ka, ha) = (free[a], steps[a]);
        let fp = ll(&[(ka, ha)])?;
        let fm = ll(&[(ka, -ha)])?;
        info[(a, a)] = -(fp - 2.0 * f0 + fm) / (ha * ha);
        for b in 0..a {
            let (kb, hb) = (free[b], steps[b]);
            let fpp = ll(&[(ka, ha), (kb, hb)])?;
            let fpm = ll(&[(ka, ha), (kb, -hb)])?;
            let fmp = ll(&[(ka, -ha), (kb, hb)])?;
            let fmm = ll(&[(ka, -ha), (kb, -hb)])?;
            let v = -(fpp - fpm - fmp + fmm) / (4.0 * ha * hb);
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }
    let cov = info.cholesky()?.inverse();
    let mut out = vec![0.0; 3];
    for (a, &k) in free.iter().enumerate() {
        out[k] = cov[(a, a)].sqrt();
    }
    Some(out)
}
