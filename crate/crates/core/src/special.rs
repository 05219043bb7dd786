//! Scalar special functions shared by the closed forms, the simulators and
//! the likelihoods.

use statrs::function::gamma::ln_gamma;

/// `expm1(z) / z`, continuous at zero.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        z.exp_m1() / z
    }
}

/// `(expm1(z) - z) / z^2`, continuous at zero.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 2.0 {
        exp_tail_series(z, 2)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `(expm1(z) - z - z^2/2) / z^3`, continuous at zero.
pub fn phi3(z: f64) -> f64 {
    if z.abs() < 2.0 {
        exp_tail_series(z, 3)
    } else {
        (z.exp_m1() - z - 0.5 * z * z) / (z * z * z)
    }
}

// sum_{j>=0} z^j / (j + k)!
fn exp_tail_series(z: f64, k: u32) -> f64 {
    let mut fact = 1.0;
    for i in 2..=k {
        fact *= i as f64;
    }
    let mut term = 1.0 / fact;
    let mut sum = term;
    let mut j = 0u32;
    while j < 60 {
        j += 1;
        term *= z / (j + k) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Natural logarithm of the modified Bessel function of the first kind,
/// `ln I_nu(x)`, for `nu > -1` and `x >= 0`.
///
/// Small arguments sum the (all-positive) power series relative to its first
/// term; large arguments use the uniform Debye expansion, which also covers the
/// large-order regime.
pub fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(x >= 0.0, "ln_bessel_i requires x >= 0");
    let mut nu = nu;
    if nu < 0.0 && nu == nu.round() {
        nu = -nu;
    }
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else if nu > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let s = (nu * nu + x * x).sqrt();
    if s >= 100.0 {
        // K_|nu| correction for negative order is below e^{-2x} relative.
        ln_bessel_i_debye(nu.abs(), x)
    } else {
        ln_bessel_i_series(nu, x)
    }
}

fn ln_bessel_i_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let ln_t0 = nu * half.ln() - ln_gamma(nu + 1.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term <= 1e-17 * sum && k > q.sqrt() {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    ln_t0 + sum.ln()
}

fn ln_bessel_i_debye(nu: f64, x: f64) -> f64 {
    let s = (nu * nu + x * x).sqrt();
    let t = nu / s;
    let t2 = t * t;
    let eta_nu = if nu > 0.0 { s + nu * (x / (nu + s)).ln() } else { s };
    let u1 = (3.0 - 5.0 * t2) / (24.0 * s);
    let u2 = (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / (1152.0 * s * s);
    let u3 = (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2)
        / (414720.0 * s * s * s);
    let u4 = (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2 * t2
        - 446185740.0 * t2 * t2 * t2
        + 185910725.0 * t2 * t2 * t2 * t2)
        / (39813120.0 * s * s * s * s);
    let series = 1.0 + u1 + u2 + u3 + u4;
    eta_nu - 0.5 * (2.0 * std::f64::consts::PI * s).ln() + series.ln()
}
