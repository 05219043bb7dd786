use thiserror::Error;

/// Errors raised by the model, solver, pricing and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Declared dimensions disagree with the shapes of the coefficient arrays.
    #[error("structural error: {0}")]
    Structure(String),

    /// A jump transform is infinite at the requested argument.
    #[error("jump transform {index} diverges at the requested argument: {detail}")]
    JumpDomain { index: usize, detail: String },

    /// The Riccati flow left the domain of finiteness (or the step size underflowed).
    #[error("Riccati solution blew up at t = {time:.6e}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inadmissible model: {0}")]
    Inadmissible(String),

    /// The discounted transform is not finite at the damping used for Fourier pricing.
    #[error("damping C = {damping} is infeasible ({reason}); try a smaller damping above 1")]
    InfeasibleDamping { damping: f64, reason: String },

    /// Quadrature did not reach the requested accuracy.
    #[error("quadrature did not converge: error estimate {error_estimate:.3e}, tail bound {tail_bound:.3e}")]
    Truncation {
        error_estimate: f64,
        tail_bound: f64,
    },

    #[error("affine map is singular (|det K| = {det:.3e})")]
    SingularMap { det: f64 },

    /// The transformed coefficients do not fit the model class on the target state space.
    #[error("transformed model is not representable: {0}")]
    Unrepresentable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
