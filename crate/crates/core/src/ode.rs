//! Dormand-Prince 5(4) integrator with PI step-size control and the
//! standard fourth-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step control settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// `None` selects the initial step automatically.
    pub initial_step: Option<f64>,
    /// Uniform steps without error control. The result is then a smooth
    /// function of the initial data, which finite differences rely on.
    pub fixed_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest scaled local error estimate among accepted steps.
    pub max_error: f64,
}

/// Integrates `y' = f(t, y)` from `t = 0`, writing the state at each time in
/// `times` (nondecreasing, nonnegative) into `out` (row per time).
///
/// The right-hand side may fail; its error is propagated unchanged.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    times: &[f64],
    ctl: &StepControl,
    out: &mut Vec<Vec<f64>>,
) -> Result<StepStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    out.clear();
    let mut stats = StepStats::default();
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut next_out = 0;
    while next_out < times.len() && times[next_out] <= 0.0 {
        out.push(y0.to_vec());
        next_out += 1;
    }
    if next_out == times.len() {
        return Ok(stats);
    }

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut rcont = vec![vec![0.0; dim]; 5];

    let mut t = 0.0;
    rhs(t, &y, &mut k1)?;
    stats.rhs_evals += 1;
    let mut h = match (ctl.fixed_steps, ctl.initial_step) {
        (Some(count), _) => t_end / count.max(1) as f64,
        (None, Some(h)) => h.min(t_end),
        (None, None) => initial_step(&mut rhs, &y, &k1, t_end, ctl, &mut stats)?,
    };

    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let fac_min = 0.2;
    let fac_max = 10.0;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::BlowUp { time: t, reason: format!("step budget of {} exhausted", ctl.max_steps) });
        }
        if h <= 1e-14 * t.abs().max(1e-300) || h < f64::MIN_POSITIVE * 1e6 {
            return Err(Error::BlowUp { time: t, reason: format!("step size underflow (h = {h:.3e})") });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }

        for i in 0..dim {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &tmp, &mut k2)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &tmp, &mut k3)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &tmp, &mut k4)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &tmp, &mut k5)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &tmp, &mut k6)?;
        for i in 0..dim {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &y_new, &mut k7)?;
        stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..dim {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let mut err = (err / dim as f64).sqrt();
        if ctl.fixed_steps.is_some() {
            if !y_new.iter().all(|v| v.is_finite()) {
                return Err(Error::BlowUp { time: t, reason: "non-finite state in fixed-step integration".into() });
            }
            stats.max_error = stats.max_error.max(err);
            err = 0.0;
        }
        if !err.is_finite() {
            last_rejected = true;
            stats.rejected += 1;
            h *= 0.1;
            continue;
        }

        let fac11 = err.powf(expo1);
        let mut fac = fac11 / fac_old.powf(beta);
        fac = (fac / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
        let mut h_new = if ctl.fixed_steps.is_some() { h } else { h / fac };

        if err <= 1.0 {
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            stats.max_error = stats.max_error.max(err);
            let t_new = t + h;

            if next_out < times.len() && times[next_out] <= t_new {
                for i in 0..dim {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - h * k7[i] - bspl;
                    rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next_out < times.len() && times[next_out] <= t_new {
                    let tq = times[next_out];
                    let row = if tq == t_new {
                        y_new.clone()
                    } else {
                        let theta = (tq - t) / h;
                        let theta1 = 1.0 - theta;
                        (0..dim)
                            .map(|i| {
                                rcont[0][i]
                                    + theta
                                        * (rcont[1][i]
                                            + theta1 * (rcont[2][i] + theta * (rcont[3][i] + theta1 * rcont[4][i])))
                            })
                            .collect()
                    };
                    out.push(row);
                    next_out += 1;
                }
            }

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y_new);
            t = t_new;
            if next_out == times.len() {
                return Ok(stats);
            }
            if last_rejected && ctl.fixed_steps.is_none() {
                h_new = h_new.min(h);
            }
            last_rejected = false;
        } else {
            h_new = h / (fac11 / safe).min(1.0 / fac_min);
            last_rejected = true;
            stats.rejected += 1;
        }
        h = h_new;
    }
}

fn initial_step<F>(
    rhs: &mut F,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    ctl: &StepControl,
    stats: &mut StepStats,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| ctl.abs_tol + ctl.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / dim as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; dim];
    rhs(h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(t_end))
}
