//! Coupled transmission/distribution restoration cases: data model,
//! structural validation, per-unit conversion, case files and the bundled
//! IEEE 14-bus system with three modified 13-node feeders.

pub mod ingest;
pub mod model;
pub mod solution;
pub mod units;
pub mod validate;

pub use ingest::{load_bundled, BundledCaseId, IngestError};
pub use model::*;
pub use solution::*;
pub use units::{to_per_unit, UnitsError};
pub use validate::{validate_case, IssueKind, ValidationIssue, ValidationOutcome};
