//! Adaptive Gauss-Kronrod (7/15) and composite Simpson quadrature for
//! real integrands that may fail.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 2000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error rescaling.
fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx)?;
        let f2 = f(centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error until the summed error is at
/// most `max(abs_tol, rel_tol * |I|)` or the subdivision budget runs out
/// (`converged = false` in that case).
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, opts: &AdaptiveOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evaluations = 15;
    let (v0, e0) = kronrod15(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v0, error: e0 });
    let mut total = v0;
    let mut total_err = e0;
    let mut splits = 0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(QuadResult { value: total, error: total_err, evaluations, converged: true });
        }
        if splits >= opts.max_subdivisions {
            return Ok(QuadResult { value: total, error: total_err, evaluations, converged: false });
        }
        let seg = heap.pop().expect("heap never empties");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval at machine resolution
            heap.push(seg);
            return Ok(QuadResult { value: total, error: total_err, evaluations, converged: false });
        }
        let (v1, e1) = kronrod15(&mut f, seg.a, mid)?;
        let (v2, e2) = kronrod15(&mut f, mid, seg.b)?;
        evaluations += 30;
        splits += 1;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // re-sum periodically to shed accumulated cancellation
        if splits % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels; the
/// error estimate is the Richardson difference against half as many panels.
pub fn integrate_simpson<F>(mut f: F, a: f64, b: f64, intervals: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = intervals.max(4).div_ceil(4) * 4;
    let h = (b - a) / n as f64;
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..=n {
        values.push(f(a + h * i as f64)?);
    }
    let simpson = |step: usize| -> f64 {
        let count = n / step;
        let hh = h * step as f64;
        let mut s = values[0] + values[n];
        for i in 1..count {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * values[i * step];
        }
        s * hh / 3.0
    };
    let fine = simpson(1);
    let coarse = simpson(2);
    Ok(QuadResult { value: fine, error: (fine - coarse).abs() / 15.0, evaluations: n + 1, converged: true })
}
