use std::collections::HashMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::moments::conditional_moment;
use super::optim::nelder_mead;
use super::{as_array, from_array, EstimationConfig, EstimationResult, Family, Parametrization, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::simulate::ScalarParams;

/// Selects `E[(X_t^m - E[X_t^m | X_{t-lag}]) X_{t-lag}^n] = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCondition {
    pub m: u32,
    pub n: u32,
    pub lag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSpec {
    pub conditions: Vec<MomentCondition>,
}

impl MomentSpec {
    pub fn new(conditions: Vec<MomentCondition>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::InvalidInput("moment specification is empty".into()));
        }
        for (j, c) in conditions.iter().enumerate() {
            if c.m + c.n < 1 {
                return Err(Error::InvalidInput(format!("moment {j}: m + n must be at least 1")));
            }
            if c.m == 0 {
                // X^0 has conditional expectation 1, so the condition vanishes identically
                return Err(Error::InvalidInput(format!("moment {j}: m = 0 carries no information about the dynamics")));
            }
            if c.m as usize > super::MAX_MOMENT_ORDER {
                return Err(Error::Unsupported(format!(
                    "moment {j}: order {} exceeds {}",
                    c.m,
                    super::MAX_MOMENT_ORDER
                )));
            }
            if !(c.lag > 0.0 && c.lag.is_finite()) {
                return Err(Error::InvalidInput(format!("moment {j}: lag must be positive, got {}", c.lag)));
            }
        }
        Ok(Self { conditions })
    }

    /// The exactly identified set `(1,0,dt), (2,0,dt), (1,1,dt)`.
    pub fn exactly_identified(dt: f64) -> Self {
        Self::new(vec![
            MomentCondition { m: 1, n: 0, lag: dt },
            MomentCondition { m: 2, n: 0, lag: dt },
            MomentCondition { m: 1, n: 1, lag: dt },
        ])
        .expect("valid built-in moment set")
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    fn lags_in_steps(&self, dt: f64) -> Result<Vec<usize>> {
        self.conditions
            .iter()
            .map(|c| {
                let k = (c.lag / dt).round();
                if k < 1.0 || ((c.lag / dt) - k).abs() > 1e-6 * k {
                    Err(Error::InvalidInput(format!("lag {} is not a positive multiple of dt = {dt}", c.lag)))
                } else {
                    Ok(k as usize)
                }
            })
            .collect()
    }
}

impl FromStr for MomentSpec {
    type Err = Error;

    /// `m,n,lag;m,n,lag;...`
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            let bad = || Error::InvalidInput(format!("moment '{item}' is not of the form m,n,lag"));
            if parts.len() != 3 {
                return Err(bad());
            }
            out.push(MomentCondition {
                m: parts[0].parse().map_err(|_| bad())?,
                n: parts[1].parse().map_err(|_| bad())?,
                lag: parts[2].parse().map_err(|_| bad())?,
            });
        }
        Self::new(out)
    }
}

struct MomentData<'a> {
    series: &'a [f64],
    lags: Vec<usize>,
    start: usize,
    /// Range of lagged states per distinct lag, for the interpolation nodes.
    ranges: HashMap<usize, (f64, f64)>,
    scales: Vec<f64>,
    /// Per condition: the sample mean of `X_t^m X_{t-lag}^n`, and the sample
    /// means of `z^i X_{t-lag}^n` for `i = 0..=m` with `z` the lagged state
    /// scaled to the interpolation interval.
    sums: Vec<(f64, Vec<f64>)>,
}

fn scaled_to((lo, hi): (f64, f64), x: f64) -> f64 {
    let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    (x - 0.5 * (lo + hi)) / half
}

impl<'a> MomentData<'a> {
    fn new(series: &'a [f64], spec: &MomentSpec, dt: f64) -> Result<Self> {
        let lags = spec.lags_in_steps(dt)?;
        let start = *lags.iter().max().expect("nonempty");
        let count = series.len().saturating_sub(start);
        if count < spec.len() + 2 {
            return Err(Error::InvalidInput(format!(
                "series of length {} is too short for lag {start} and {} conditions",
                series.len(),
                spec.len()
            )));
        }
        let mut ranges = HashMap::new();
        for &k in &lags {
            let lagged = &series[start - k..series.len() - k];
            let lo = lagged.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = lagged.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ranges.insert(k, (lo, hi));
        }
        let mut scales = Vec::with_capacity(spec.len());
        let mut sums = Vec::with_capacity(spec.len());
        for (c, &k) in spec.conditions.iter().zip(&lags) {
            let mut abs_sum = 0.0;
            let mut lhs = 0.0;
            let mut powers = vec![0.0; c.m as usize + 1];
            for t in start..series.len() {
                let prev = series[t - k];
                let weight = prev.powi(c.n as i32);
                let term = series[t].powi(c.m as i32) * weight;
                abs_sum += term.abs();
                lhs += term;
                let z = scaled_to(ranges[&k], prev);
                let mut zi = 1.0;
                for p in powers.iter_mut() {
                    *p += zi * weight;
                    zi *= z;
                }
            }
            let s = abs_sum / count as f64;
            scales.push(if s > 0.0 { s } else { 1.0 });
            sums.push((lhs / count as f64, powers.iter().map(|p| p / count as f64).collect()));
        }
        Ok(Self { series, lags, start, ranges, scales, sums })
    }

    fn count(&self) -> usize {
        self.series.len() - self.start
    }

    /// Model-implied conditional moments as polynomials in the lagged state,
    /// one per condition.
    fn model_polynomials(&self, family: &Family, spec: &MomentSpec, p: &ScalarParams, dt: f64) -> Result<Vec<Polynomial>> {
        let model = family.spec(p)?;
        let mut cache: HashMap<(u32, usize), usize> = HashMap::new();
        let mut polys: Vec<Polynomial> = Vec::new();
        let mut out = Vec::with_capacity(spec.len());
        for (c, &k) in spec.conditions.iter().zip(&self.lags) {
            let idx = match cache.get(&(c.m, k)) {
                Some(&i) => i,
                None => {
                    let (lo, hi) = self.ranges[&k];
                    let nodes = chebyshev_nodes(lo, hi, c.m as usize + 1);
                    let values = nodes
                        .iter()
                        .map(|&x| conditional_moment(&model, &[x], k as f64 * dt, &[c.m as usize]))
                        .collect::<Result<Vec<_>>>()?;
                    polys.push(Polynomial::through(&nodes, &values, (lo, hi))?);
                    cache.insert((c.m, k), polys.len() - 1);
                    polys.len() - 1
                }
            };
            out.push(idx);
        }
        Ok(out.into_iter().map(|i| polys[i].clone()).collect())
    }

    /// Sample means of the contributions, from the precomputed power sums.
    fn means(&self, family: &Family, spec: &MomentSpec, p: &ScalarParams, dt: f64) -> Result<DVector<f64>> {
        let polys = self.model_polynomials(family, spec, p, dt)?;
        Ok(DVector::from_iterator(
            spec.len(),
            polys.iter().zip(&self.sums).map(|(poly, (lhs, powers))| {
                lhs - poly.coeffs.iter().zip(powers).map(|(c, z)| c * z).sum::<f64>()
            }),
        ))
    }

    /// Per-observation contributions, one row per time and one column per condition.
    fn contributions(&self, family: &Family, spec: &MomentSpec, p: &ScalarParams, dt: f64) -> Result<DMatrix<f64>> {
        let polys = self.model_polynomials(family, spec, p, dt)?;
        let rows = self.count();
        let mut h = DMatrix::zeros(rows, spec.len());
        for (j, (c, &k)) in spec.conditions.iter().zip(&self.lags).enumerate() {
            for (r, t) in (self.start..self.series.len()).enumerate() {
                let prev = self.series[t - k];
                h[(r, j)] = (self.series[t].powi(c.m as i32) - polys[j].eval(prev)) * prev.powi(c.n as i32);
            }
        }
        Ok(h)
    }
}

fn column_means(h: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(h.ncols(), h.column_iter().map(|c| c.sum() / h.nrows() as f64))
}

/// Chebyshev points of the first kind on `[lo, hi]`, collapsing to `lo` for a
/// degenerate interval.
fn chebyshev_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * count) as f64;
            0.5 * (lo + hi) + 0.5 * (hi - lo) * theta.cos()
        })
        .collect()
}

/// Polynomial in the scaled variable `z = (x - mid) / half`, fitted exactly
/// through as many nodes as coefficients.
#[derive(Clone)]
struct Polynomial {
    mid: f64,
    half: f64,
    coeffs: Vec<f64>,
}

impl Polynomial {
    fn through(nodes: &[f64], values: &[f64], (lo, hi): (f64, f64)) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let k = nodes.len();
        let vander = DMatrix::from_fn(k, k, |r, c| ((nodes[r] - mid) / half).powi(c as i32));
        let coeffs = vander
            .lu()
            .solve(&DVector::from_column_slice(values))
            .ok_or_else(|| Error::Numerical("singular interpolation system".into()))?;
        Ok(Self { mid, half, coeffs: coeffs.iter().copied().collect() })
    }

    fn eval(&self, x: f64) -> f64 {
        let z = (x - self.mid) / self.half;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

/// Sample mean of the moment contributions at `p`.
pub fn gmm_moment_vector(series: &[f64], family: &Family, dt: f64, spec: &MomentSpec, p: &ScalarParams) -> Result<Vec<f64>> {
    let data = MomentData::new(series, spec, dt)?;
    Ok(data.means(family, spec, p, dt)?.iter().copied().collect())
}

/// Two-step GMM: per-condition scale-normalized identity weighting, then the
/// inverse sample covariance of the contributions at the first-step estimate.
pub fn gmm_estimate(
    series: &[f64],
    family: &Family,
    dt: f64,
    spec: &MomentSpec,
    init: &ScalarParams,
    cfg: &EstimationConfig,
) -> Result<EstimationResult> {
    family.check_series(series)?;
    let param = Parametrization::new(family, cfg, init)?;
    if spec.len() < param.free.len() {
        return Err(Error::InvalidInput(format!(
            "{} moment conditions cannot identify {} free parameters",
            spec.len(),
            param.free.len()
        )));
    }
    let data = MomentData::new(series, spec, dt)?;
    data.means(family, spec, init, dt)?;

    let criterion = |theta: &[f64], weight: &DMatrix<f64>| -> f64 {
        match data.means(family, spec, &param.natural(theta), dt) {
            Ok(g) => (g.transpose() * weight * &g)[(0, 0)],
            Err(_) => f64::INFINITY,
        }
    };
    let identity = step_one_weight(&data.scales);
    let opts = cfg.optimizer;
    let first = nelder_mead(|t| criterion(t, &identity), &param.theta(init), &opts);

    let h = data.contributions(family, spec, &param.natural(&first.x), dt)?;
    let g = column_means(&h);
    let centred = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| h[(r, c)] - g[c]);
    let cov = centred.transpose() * &centred / h.nrows() as f64;
    let (weight, fallback) = match invert_weighting(&cov) {
        Some(w) => (w, false),
        None => (identity.clone(), true),
    };
    let second = nelder_mead(|t| criterion(t, &weight), &first.x, &opts);
    let best = param.natural(&second.x);

    let std_errors = if cfg.std_errors { sandwich_std_errors(&data, family, spec, dt, &best, &param.free, &weight) } else { None };
    Ok(EstimationResult {
        method: "gmm".into(),
        family: family.name().into(),
        names: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
        params: as_array(&best).to_vec(),
        objective: second.f,
        converged: first.converged && second.converged,
        iterations: first.iterations + second.iterations,
        std_errors,
        weighting_fallback: fallback,
    })
}

/// Identity weighting after dividing each condition by its sample scale.
fn step_one_weight(scales: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(scales.len(), scales.iter().map(|s| 1.0 / (s * s))))
}

fn invert_weighting(cov: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let diag_max = cov.diagonal().amax();
    if !(diag_max > 0.0) {
        return None;
    }
    let eig = cov.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 1e-12 * max) {
        return None;
    }
    cov.clone().cholesky().map(|c| c.inverse())
}

fn sandwich_std_errors(
    data: &MomentData,
    family: &Family,
    spec: &MomentSpec,
    dt: f64,
    at: &ScalarParams,
    free: &[usize],
    weight: &DMatrix<f64>,
) -> Option<Vec<f64>> {
    let base = as_array(at);
    let mut jac = DMatrix::zeros(spec.len(), free.len());
    for (a, &k) in free.iter().enumerate() {
        let h = 1e-5 * base[k].abs().max(1e-3);
        let mut up = base;
        up[k] += h;
        let mut down = base;
        down[k] -= h;
        let gu = data.means(family, spec, &from_array(up), dt).ok()?;
        let gd = data.means(family, spec, &from_array(down), dt).ok()?;
        jac.set_column(a, &((gu - gd) / (2.0 * h)));
    }
    let info = jac.transpose() * weight * &jac;
    let cov = info.cholesky()?.inverse() / data.count() as f64;
    let mut out = vec![0.0; 3];
    for (a, &k) in free.iter().enumerate() {
        out[k] = cov[(a, a)].sqrt();
    }
    Some(out)
}
