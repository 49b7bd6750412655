// NaN must fail the positivity checks, and dense kernels read better with index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod ensemble;
pub mod error;
pub mod feasibility;
pub mod linalg;
pub mod lp;
pub mod lsd;
pub mod oracle;
pub mod solution;

pub use ensemble::{DualFrame, Ensemble, StateVector, Tolerances};
pub use error::{Result, UsdError};
pub use feasibility::{FeasibilityCertificate, ProbabilityVector, Region};
pub use linalg::{HermitianMatrix, C64};
pub use solution::{Method, PovmSolution};
