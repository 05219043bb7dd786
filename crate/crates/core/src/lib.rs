pub mod admissibility;
pub mod canonical;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod functionals;
pub mod inference;
pub mod model;
pub mod ode;
pub mod pricing;
pub mod quadrature;
pub mod riccati;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
