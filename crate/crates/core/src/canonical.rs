//! Nonsingular affine state transformations `Y = K X + kappa` and the
//! diagonal-diffusion canonical form.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::admissibility::validate_admissibility;
use crate::error::{Error, Result};
use crate::model::{JumpKind, JumpLaw, JumpSpec, ModelSpec};
use crate::pricing::yield_curve;

/// `y = K x + kappa` with `K` nonsingular.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub k_matrix: DMatrix<f64>,
    pub kappa: DVector<f64>,
}

impl AffineMap {
    pub fn new(k_matrix: DMatrix<f64>, kappa: DVector<f64>) -> Result<Self> {
        let n = k_matrix.nrows();
        if k_matrix.ncols() != n || kappa.len() != n {
            return Err(Error::Structure(format!(
                "affine map shapes {}x{} and {} disagree",
                k_matrix.nrows(),
                k_matrix.ncols(),
                kappa.len()
            )));
        }
        let det = k_matrix.determinant();
        let scale = k_matrix.amax().powi(n as i32);
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::SingularMap { det });
        }
        Ok(Self { k_matrix, kappa })
    }

    pub fn identity(n: usize) -> Self {
        Self { k_matrix: DMatrix::identity(n, n), kappa: DVector::zeros(n) }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.k_matrix * DVector::from_column_slice(x) + &self.kappa).iter().copied().collect()
    }

    /// The map `x -> next(self(x))`.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            k_matrix: &next.k_matrix * &self.k_matrix,
            kappa: &next.k_matrix * &self.kappa + &next.kappa,
        }
    }
}

/// Positive coordinate `i` of `X` lands on positive coordinate `target[i]`
/// of `Y` scaled by `scale[i] > 0`.
struct OrthantPlacement {
    target: Vec<usize>,
    scale: Vec<f64>,
}

fn orthant_placement(map: &AffineMap, m: usize) -> Result<OrthantPlacement> {
    let k = &map.k_matrix;
    let n = k.nrows();
    let mut target = vec![usize::MAX; m];
    let mut scale = vec![0.0; m];
    let mut hit = vec![false; m];
    for i in 0..m {
        for j in 0..m {
            let v = k[(j, i)];
            if v == 0.0 {
                continue;
            }
            if v < 0.0 || target[i] != usize::MAX || hit[j] {
                return Err(Error::Unrepresentable(format!(
                    "positive block of K must be a positive scaled permutation (K[{j},{i}] = {v})"
                )));
            }
            target[i] = j;
            scale[i] = v;
            hit[j] = true;
        }
        if target[i] == usize::MAX {
            return Err(Error::Unrepresentable(format!(
                "positive coordinate {i} is not mapped onto a positive coordinate"
            )));
        }
    }
    for j in 0..m {
        for l in m..n {
            if k[(j, l)] != 0.0 {
                return Err(Error::Unrepresentable(format!(
                    "real coordinate {l} feeds positive coordinate {j} (K[{j},{l}] = {})",
                    k[(j, l)]
                )));
            }
        }
        if map.kappa[j] != 0.0 {
            return Err(Error::Unrepresentable(format!(
                "shift kappa[{j}] = {} would move the boundary of a positive coordinate",
                map.kappa[j]
            )));
        }
    }
    Ok(OrthantPlacement { target, scale })
}

/// Coefficients of `Y = K X + kappa`.
///
/// Accepted maps keep the orthant: a positive scaled permutation on the
/// positive block, no feed from real into positive coordinates, and no shift
/// of positive coordinates. Exponential jump laws additionally require their
/// column of `K` to be a scaled unit vector.
pub fn transform_model(spec: &ModelSpec, map: &AffineMap) -> Result<ModelSpec> {
    spec.check_structure()?;
    let n = spec.n();
    let m = spec.m();
    if map.k_matrix.nrows() != n {
        return Err(Error::Structure(format!("map dimension {} does not match model dimension {n}", map.k_matrix.nrows())));
    }
    let placement = orthant_placement(map, m)?;
    let k = &map.k_matrix;
    let k_inv = k.clone().try_inverse().ok_or(Error::SingularMap { det: k.determinant() })?;
    let kt = k.transpose();

    let mut out = ModelSpec::zero(spec.space);
    out.a = k * &spec.a * &kt;
    for i in 0..m {
        let j = placement.target[i];
        out.alpha[j] = k * &spec.alpha[i] * &kt / placement.scale[i];
        out.gamma[j] = spec.gamma[i] / placement.scale[i];
    }
    let drift = spec.drift_matrix();
    let new_drift = k * &drift * &k_inv;
    out.b = k * &spec.b - &new_drift * &map.kappa;
    for i in 0..n {
        out.beta[i] = new_drift.column(i).into_owned();
    }
    out.c = spec.c;
    out.lambda = k_inv.transpose() * &spec.lambda;
    out.l = spec.l - out.lambda.dot(&map.kappa);

    for (idx, jump) in spec.jumps.iter().enumerate() {
        let (kind, intensity) = match jump.kind {
            JumpKind::Constant => (JumpKind::Constant, jump.intensity),
            JumpKind::Linear(i) => (JumpKind::Linear(placement.target[i]), jump.intensity / placement.scale[i]),
        };
        let law = match &jump.law {
            JumpLaw::PointMass { at } => {
                let moved = k * DVector::from_column_slice(at);
                JumpLaw::PointMass { at: moved.iter().copied().collect() }
            }
            JumpLaw::Exponential { coord, eta } => {
                let col = k.column(*coord);
                let nonzero: Vec<usize> = (0..n).filter(|&r| col[r] != 0.0).collect();
                if nonzero.len() != 1 || col[nonzero[0]] <= 0.0 {
                    return Err(Error::Unrepresentable(format!(
                        "jump {idx}: exponential jumps only move under positive scaled permutations of their coordinate"
                    )));
                }
                let r = nonzero[0];
                JumpLaw::Exponential { coord: r, eta: eta / col[r] }
            }
        };
        out.jumps.push(JumpSpec { kind, intensity, law });
    }

    if validate_admissibility(spec)?.ok {
        let report = validate_admissibility(&out)?;
        if !report.ok {
            let msgs: Vec<&str> = report.violations.iter().map(|v| v.message.as_str()).collect();
            return Err(Error::Unrepresentable(msgs.join("; ")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub max_abs_yield_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares yield curves of the original model at `x` and the transformed
/// model at `K x + kappa`.
pub fn verify_observable_invariance(
    spec: &ModelSpec,
    map: &AffineMap,
    x: &[f64],
    maturities: &[f64],
) -> Result<InvarianceReport> {
    let image = transform_model(spec, map)?;
    let y = map.apply(x);
    let before = yield_curve(spec, x, maturities)?;
    let after = yield_curve(&image, &y, maturities)?;
    let max_abs_yield_diff = before
        .zero_rates
        .iter()
        .zip(&after.zero_rates)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tolerance = 1e-9;
    Ok(InvarianceReport { max_abs_yield_diff, tolerance, passed: max_abs_yield_diff <= tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalCheck {
    pub is_canonical: bool,
    /// Number of state variables entering the diffusion matrix.
    pub m: usize,
    /// `lambda_{k,i}` for `k >= m` (rows) and `i < m` (columns), when canonical.
    pub lambda_loadings: Option<Vec<Vec<f64>>>,
}

/// Tests whether `sigma sigma^T(x) = 2 A(x)` is diagonal with entries `x_k`
/// on the positive block and `1 + sum_i lambda_{k,i} x_i` elsewhere.
pub fn check_canonical(spec: &ModelSpec) -> Result<CanonicalCheck> {
    spec.check_structure()?;
    if spec.has_jumps() {
        return Err(Error::Unsupported("canonical form is defined for diffusions without jumps".into()));
    }
    const TOL: f64 = 1e-12;
    let n = spec.n();
    let m = spec.m();
    let appearing = spec.alpha.iter().filter(|al| al.amax() > TOL).count();

    let mut ok = true;
    let off_diagonal_zero = |mat: &DMatrix<f64>| (0..n).all(|k| (0..n).all(|l| k == l || mat[(k, l)].abs() <= TOL));
    ok &= off_diagonal_zero(&spec.a);
    ok &= spec.alpha.iter().all(off_diagonal_zero);
    for k in 0..n {
        let target_const = if k < m { 0.0 } else { 1.0 };
        ok &= (2.0 * spec.a[(k, k)] - target_const).abs() <= TOL;
        if k < m {
            for (i, al) in spec.alpha.iter().enumerate() {
                let target = if i == k { 1.0 } else { 0.0 };
                ok &= (2.0 * al[(k, k)] - target).abs() <= TOL;
            }
        }
    }
    let lambda_loadings = ok.then(|| {
        (m..n)
            .map(|k| spec.alpha.iter().map(|al| 2.0 * al[(k, k)]).collect())
            .collect()
    });
    Ok(CanonicalCheck { is_canonical: ok, m: appearing, lambda_loadings })
}
