//! Energy-time optimal point-to-point trajectories for a unicycle-model wheeled
//! mobile robot, in closed form via Jacobi elliptic functions.

pub mod elliptic;
pub mod error;
pub mod fixedv;
pub mod form1;
pub mod form2;
pub mod model;
mod nonfinite;
pub mod plan;
pub mod rootsolve;
pub mod shooting;
pub mod study;
pub mod trajectory;
pub mod verify;

pub use elliptic::EllipticTriple;
pub use error::{Error, Result};
pub use fixedv::FixedVParams;
pub use form1::Form1Params;
pub use form2::Form2Params;
pub use model::{Control, Formulation, Problem, State, Target, TrajectorySample};
pub use plan::Solution;
pub use rootsolve::{SearchOptions, SolveReport, SolverOptions};
pub use shooting::Shot;
pub use trajectory::ClosedForm;
pub use verify::{Check, VerificationReport};
