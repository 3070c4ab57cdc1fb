//! Independent checks of restoration schedules: a Newton-Raphson AC power
//! flow for the transmission network, a DistFlow sweep for feeders, and an
//! auditor that recomputes every constraint from raw case data. Nothing here
//! reuses the optimization model's evaluators.

pub mod audit;
pub mod kkt;
pub mod newton;
pub mod sweep;

pub use audit::{audit_solution, tn_injections, AuditError, AuditFailure, Check, ValidationReport, Verdict, AUDIT_TOLERANCE};
pub use kkt::recompute_kkt_residual;
pub use newton::{bus_injections, newton_power_flow, ybus, PowerFlowSolution, SlackBus, MAX_NEWTON_ITERATIONS, ORACLE_TOLERANCE};
pub use sweep::{distflow_sweep, SweepSolution, MAX_SWEEP_ITERATIONS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("diverged after {iterations} iterations (mismatch {mismatch:.3e})")]
    Diverged { iterations: usize, mismatch: f64 },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular Jacobian")]
    Singular,
    #[error("feeder {0} is not a radial tree rooted at its substation")]
    NotRadial(String),
}
