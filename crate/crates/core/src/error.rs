use thiserror::Error;

use crate::rootsolve::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain { what: &'static str, value: f64, expected: &'static str },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("root finding did not converge after {} start(s); best residual {:.3e}", .0.multistart_attempts, .0.final_residual_norm)]
    NonConvergence(Box<SolveReport>),

    #[error("integration produced a non-finite value at tau = {tau}")]
    Integration { tau: f64 },

    #[error("cost quadrature needs at least 2 samples, got {0}")]
    InsufficientSamples(usize),
}
