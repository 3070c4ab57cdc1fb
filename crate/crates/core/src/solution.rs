//! Structured restoration state, per period, in per-unit.
//!
//! Produced from a solver point by the formulation and consumed by the
//! auditor and report writers. Vectors follow the element order of the case
//! (buses, generators, nodes, lines, devices).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerPair {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EssDispatch {
    pub p: f64,
    pub q: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LineState {
    /// Sending-end active flow, parent to child.
    pub p: f64,
    pub q: f64,
    /// Squared current magnitude.
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransmissionState {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub gen: Vec<PowerPair>,
    /// Served load per bus. `None` for buses without load or feeder. At a
    /// boundary bus this is the exchange with the feeder.
    pub served: Vec<Option<PowerPair>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeederState {
    /// Squared voltage magnitude per node.
    pub v_sq: Vec<f64>,
    /// Indexed like the feeder's line list, flows oriented away from the
    /// substation.
    pub lines: Vec<LineState>,
    pub dg: Vec<PowerPair>,
    pub ess: Vec<EssDispatch>,
    pub pv: Vec<PowerPair>,
    pub served: Vec<Option<PowerPair>>,
    /// Import from the transmission system at the substation node.
    pub grid: PowerPair,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodState {
    pub transmission: TransmissionState,
    pub feeders: Vec<FeederState>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RestorationSolution {
    pub periods: Vec<PeriodState>,
}
