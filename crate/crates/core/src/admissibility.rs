//! Admissibility of affine parameters on `R_+^m x R^(n-m)`.
//!
//! Every violated condition is reported; nothing is repaired.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::Result;
use crate::model::{JumpKind, JumpLaw, ModelSpec};

/// Stable identifiers for each admissibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `a` not symmetric.
    ASymmetric,
    /// `a` not positive semidefinite.
    APsd,
    /// `a_kl != 0` with `k < m` or `l < m`.
    APositiveBlock,
    AlphaSymmetric,
    AlphaPsd,
    /// `alpha_{i,kl} != 0` for `k, l < m` unless `k = l = i`.
    AlphaCrossTerm,
    /// `b_i < 0` for a positive coordinate.
    DriftBoundary,
    /// Component `k != i` of `beta_i` negative, with `i, k < m`.
    DriftInwardCoupling,
    /// Real coordinates feeding the drift of a positive coordinate.
    DriftRealToPositive,
    DiscountNegative,
    JumpIntensityNegative,
    /// Jump law not supported on the state space.
    JumpSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub message: String,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_REL_TOL: f64 = 1e-12;

fn is_symmetric(mat: &DMatrix<f64>) -> bool {
    let scale = mat.amax().max(1.0);
    (0..mat.nrows()).all(|k| (0..k).all(|l| (mat[(k, l)] - mat[(l, k)]).abs() <= SYMMETRY_TOL * scale))
}

/// Smallest eigenvalue of the symmetrized matrix and its spectral norm.
fn spectrum_bounds(mat: &DMatrix<f64>) -> (f64, f64) {
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (min, norm)
}

fn is_psd(mat: &DMatrix<f64>) -> bool {
    let (min, norm) = spectrum_bounds(mat);
    min >= -PSD_REL_TOL * norm
}

/// Checks every admissibility condition; fails only on structural errors.
pub fn validate_admissibility(spec: &ModelSpec) -> Result<ValidationReport> {
    spec.check_structure()?;
    let n = spec.n();
    let m = spec.m();
    let mut v = Vec::new();
    let mut push = |condition, message: String, indices: Vec<usize>| v.push(Violation { condition, message, indices });

    if !is_symmetric(&spec.a) {
        push(Condition::ASymmetric, "constant diffusion matrix a is not symmetric".into(), vec![]);
    }
    if !is_psd(&spec.a) {
        push(Condition::APsd, "constant diffusion matrix a is not positive semidefinite".into(), vec![]);
    }
    for k in 0..n {
        for l in 0..n {
            if (k < m || l < m) && spec.a[(k, l)] != 0.0 && k <= l {
                push(
                    Condition::APositiveBlock,
                    format!("constant diffusion a[{k},{l}] = {} must vanish on positive coordinates", spec.a[(k, l)]),
                    vec![k, l],
                );
            }
        }
    }

    for (i, al) in spec.alpha.iter().enumerate() {
        if !is_symmetric(al) {
            push(Condition::AlphaSymmetric, format!("alpha[{i}] is not symmetric"), vec![i]);
        }
        if !is_psd(al) {
            push(Condition::AlphaPsd, format!("alpha[{i}] is not positive semidefinite"), vec![i]);
        }
        for k in 0..m {
            for l in k..m {
                if !(k == i && l == i) && al[(k, l)] != 0.0 {
                    push(
                        Condition::AlphaCrossTerm,
                        format!("alpha cross-term on positive block: alpha[{i}][{k},{l}] = {}", al[(k, l)]),
                        vec![i, k, l],
                    );
                }
            }
        }
    }

    for i in 0..m {
        if spec.b[i] < 0.0 {
            push(
                Condition::DriftBoundary,
                format!("constant drift points out of state space at boundary: b[{i}] = {}", spec.b[i]),
                vec![i],
            );
        }
    }
    for (i, col) in spec.beta.iter().enumerate() {
        for k in 0..m {
            if i < m {
                if k != i && col[k] < 0.0 {
                    push(
                        Condition::DriftInwardCoupling,
                        format!("beta[{i}][{k}] = {} must be nonnegative (x_{i} pushes x_{k} out of the orthant)", col[k]),
                        vec![i, k],
                    );
                }
            } else if col[k] != 0.0 {
                push(
                    Condition::DriftRealToPositive,
                    format!("beta[{i}][{k}] = {} must vanish: real coordinate {i} drives positive coordinate {k}", col[k]),
                    vec![i, k],
                );
            }
        }
    }

    if spec.c < 0.0 {
        push(Condition::DiscountNegative, format!("constant discount c = {} is negative", spec.c), vec![]);
    }
    for (i, g) in spec.gamma.iter().enumerate() {
        if *g < 0.0 {
            push(Condition::DiscountNegative, format!("state discount gamma[{i}] = {g} is negative"), vec![i]);
        }
    }

    for (j, jump) in spec.jumps.iter().enumerate() {
        if !(jump.intensity >= 0.0) {
            push(
                Condition::JumpIntensityNegative,
                format!("jump {j} has negative intensity {}", jump.intensity),
                vec![j],
            );
        }
        match &jump.law {
            JumpLaw::Exponential { coord, .. } => {
                if *coord >= m {
                    push(
                        Condition::JumpSupport,
                        format!("jump {j}: exponential jumps must act on a positive coordinate, got {coord}"),
                        vec![j, *coord],
                    );
                }
            }
            JumpLaw::PointMass { at } => {
                for (k, xi) in at.iter().enumerate().take(m) {
                    if *xi < 0.0 {
                        push(
                            Condition::JumpSupport,
                            format!("jump {j}: point mass leaves the state space in coordinate {k} ({xi})"),
                            vec![j, k],
                        );
                    }
                }
            }
        }
        if let JumpKind::Linear(i) = jump.kind {
            debug_assert!(i < m);
        }
    }

    Ok(ValidationReport { ok: v.is_empty(), violations: v })
}
