//! Command-line front end: case loading, solve/audit orchestration and the
//! boundary, generation and served-load reports.

pub mod app;
pub mod schedule;

pub use app::{run, run_case, Cli, EXIT_AUDIT, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_OK};
pub use schedule::{
    emit_boundary_table, emit_generation_table, emit_schedule_csv, read_csv, read_state, BoundaryRow, GenerationRow, ReportError,
    RestorationSchedule, ServedFraction, ServedRow, SolverSummary, StateRow, Summary, Table,
};
