//! Model data types for regular affine processes on `R_+^m x R^(n-m)` and the
//! affine short rate `r = l + <lambda, x>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// State space `R_+^m x R^(n-m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub n: usize,
    pub m: usize,
}

impl StateSpace {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structure("state dimension n must be at least 1".into()));
        }
        if m > n {
            return Err(Error::Structure(format!("m = {m} exceeds n = {n}")));
        }
        Ok(Self { n, m })
    }

    /// Whether `x` lies in the state space (positive block nonnegative).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && x.iter().all(|v| v.is_finite()) && x[..self.m].iter().all(|&v| v >= 0.0)
    }
}

/// Whether a jump measure enters the constant part `m(dxi)` or the state-linear
/// part `x_i mu_i(dxi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Constant,
    /// Attached to positive coordinate `i` (zero-based, `i < m`).
    Linear(usize),
}

/// Jump size distribution with a closed-form moment generating function.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Exponential jump of mean `1/eta` in a single positive coordinate.
    Exponential { coord: usize, eta: f64 },
    /// Deterministic jump of size `at`.
    PointMass { at: Vec<f64> },
}

/// Compound-Poisson jump component.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub kind: JumpKind,
    pub intensity: f64,
    pub law: JumpLaw,
}

impl JumpSpec {
    /// `intensity * (E[e^{<u, xi>}] - 1)`.
    pub fn transform(&self, index: usize, u: &[Complex64]) -> Result<Complex64> {
        match &self.law {
            JumpLaw::Exponential { coord, eta } => {
                let uj = u[*coord];
                if uj.re >= *eta {
                    return Err(Error::JumpDomain {
                        index,
                        detail: format!("exponential jump needs Re u[{coord}] < eta = {eta}, got {}", uj.re),
                    });
                }
                Ok(self.intensity * uj / (*eta - uj))
            }
            JumpLaw::PointMass { at } => {
                let s: Complex64 = u.iter().zip(at).map(|(ui, xi)| ui * xi).sum();
                Ok(self.intensity * s.exp_m1())
            }
        }
    }
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    fn exp_m1(self) -> Self {
        if self.norm() < 1e-5 {
            self * (1.0 + self * (0.5 + self / 6.0))
        } else {
            self.exp() - 1.0
        }
    }
}

/// Full parameterization of a regular affine process plus the short-rate map.
///
/// Indices are zero-based: coordinates `0..m` are the nonnegative block.
/// `beta[i]` is the drift column multiplying `x_i`, so the drift is
/// `B(x) = b + sum_i x_i beta[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub space: StateSpace,
    pub a: DMatrix<f64>,
    pub alpha: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub beta: Vec<DVector<f64>>,
    pub c: f64,
    pub gamma: Vec<f64>,
    pub jumps: Vec<JumpSpec>,
    pub l: f64,
    pub lambda: DVector<f64>,
}

impl ModelSpec {
    /// A model with zero coefficients, zero short rate and no jumps.
    pub fn zero(space: StateSpace) -> Self {
        let n = space.n;
        Self {
            space,
            a: DMatrix::zeros(n, n),
            alpha: vec![DMatrix::zeros(n, n); space.m],
            b: DVector::zeros(n),
            beta: vec![DVector::zeros(n); n],
            c: 0.0,
            gamma: vec![0.0; space.m],
            jumps: Vec::new(),
            l: 0.0,
            lambda: DVector::zeros(n),
        }
    }

    /// Vasicek short rate: `dX = (b + beta X) dt + sigma dW`, `r = X`.
    pub fn vasicek(b: f64, beta: f64, sigma: f64) -> Self {
        let mut spec = Self::zero(StateSpace { n: 1, m: 0 });
        spec.a[(0, 0)] = 0.5 * sigma * sigma;
        spec.b[0] = b;
        spec.beta[0][0] = beta;
        spec.lambda[0] = 1.0;
        spec
    }

    /// Cox-Ingersoll-Ross short rate: `dX = (b + beta X) dt + sigma sqrt(X) dW`, `r = X`.
    pub fn cir(b: f64, beta: f64, sigma: f64) -> Self {
        let mut spec = Self::zero(StateSpace { n: 1, m: 1 });
        spec.alpha[0][(0, 0)] = 0.5 * sigma * sigma;
        spec.b[0] = b;
        spec.beta[0][0] = beta;
        spec.lambda[0] = 1.0;
        spec
    }

    /// Constant short rate `l` with a frozen state.
    pub fn constant_rate(rate: f64) -> Self {
        let mut spec = Self::zero(StateSpace { n: 1, m: 0 });
        spec.l = rate;
        spec
    }

    /// Arithmetic Brownian log-price with martingale drift `-vol^2/2` and zero rates.
    pub fn gaussian_log_price(vol: f64) -> Self {
        let mut spec = Self::zero(StateSpace { n: 1, m: 0 });
        spec.a[(0, 0)] = 0.5 * vol * vol;
        spec.b[0] = -0.5 * vol * vol;
        spec
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn m(&self) -> usize {
        self.space.m
    }

    /// Drift matrix whose column `i` is `beta[i]`.
    pub fn drift_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |k, i| self.beta[i][k])
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    /// Checks that all array shapes agree with the declared dimensions.
    pub fn check_structure(&self) -> Result<()> {
        let StateSpace { n, m } = self.space;
        StateSpace::new(n, m)?;
        let square = |mat: &DMatrix<f64>, name: &str| -> Result<()> {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::Structure(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            Ok(())
        };
        square(&self.a, "a")?;
        if self.alpha.len() != m {
            return Err(Error::Structure(format!("alpha has {} matrices, expected m = {m}", self.alpha.len())));
        }
        for (i, al) in self.alpha.iter().enumerate() {
            square(al, &format!("alpha[{i}]"))?;
        }
        if self.b.len() != n {
            return Err(Error::Structure(format!("b has length {}, expected {n}", self.b.len())));
        }
        if self.beta.len() != n {
            return Err(Error::Structure(format!("beta has {} columns, expected n = {n}", self.beta.len())));
        }
        for (i, col) in self.beta.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Structure(format!("beta[{i}] has length {}, expected {n}", col.len())));
            }
        }
        if self.gamma.len() != m {
            return Err(Error::Structure(format!("gamma has length {}, expected m = {m}", self.gamma.len())));
        }
        if self.lambda.len() != n {
            return Err(Error::Structure(format!("lambda has length {}, expected {n}", self.lambda.len())));
        }
        let all_finite = self.a.iter().all(|v| v.is_finite())
            && self.alpha.iter().all(|al| al.iter().all(|v| v.is_finite()))
            && self.b.iter().all(|v| v.is_finite())
            && self.beta.iter().all(|col| col.iter().all(|v| v.is_finite()))
            && self.c.is_finite()
            && self.gamma.iter().all(|v| v.is_finite())
            && self.l.is_finite()
            && self.lambda.iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Structure("coefficients must be finite".into()));
        }
        for (j, jump) in self.jumps.iter().enumerate() {
            if let JumpKind::Linear(i) = jump.kind {
                if i >= m {
                    return Err(Error::Structure(format!(
                        "jump {j} is attached to coordinate {i}, which is not in the positive block (m = {m})"
                    )));
                }
            }
            match &jump.law {
                JumpLaw::Exponential { coord, eta } => {
                    if *coord >= n {
                        return Err(Error::Structure(format!("jump {j}: coordinate {coord} out of range")));
                    }
                    if !(*eta > 0.0) || !eta.is_finite() {
                        return Err(Error::Structure(format!("jump {j}: eta must be positive, got {eta}")));
                    }
                }
                JumpLaw::PointMass { at } => {
                    if at.len() != n {
                        return Err(Error::Structure(format!(
                            "jump {j}: point mass has length {}, expected {n}",
                            at.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Diffusion matrix `A(x) = a + sum_{i<m} x_i alpha_i`.
    pub fn diffusion_at(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.a.clone();
        for (i, al) in self.alpha.iter().enumerate() {
            out += al * x[i];
        }
        out
    }

    /// Drift `B(x) = b + sum_i x_i beta_i`.
    pub fn drift_at(&self, x: &[f64]) -> DVector<f64> {
        let mut out = self.b.clone();
        for (i, col) in self.beta.iter().enumerate() {
            out += col * x[i];
        }
        out
    }

    /// Short rate `l + <lambda, x>`.
    pub fn short_rate(&self, x: &[f64]) -> f64 {
        self.l + self.lambda.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}
