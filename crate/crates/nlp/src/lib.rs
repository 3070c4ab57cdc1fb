//! A sparse primal-dual interior-point solver for smooth nonlinear programs
//! with bounds, equality and inequality constraints, plus a finite-difference
//! derivative checker.

pub mod check;
pub mod ipm;
pub mod problem;
pub mod sparse;

pub use check::{check_derivatives, check_hessian, Block, CheckError, DerivativeReport, FlaggedEntry};
pub use ipm::{hash_iterate, solve, IterationLog, Multipliers, SolveError, SolveResult, SolveStatus, SolverOptions};
pub use problem::{NlpFunctions, NlpProblem};
