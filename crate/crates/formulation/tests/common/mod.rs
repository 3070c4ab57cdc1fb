#![allow(dead_code)]

use tdrestore_core::*;

pub fn bus(id: usize, p: f64, q: f64) -> TransmissionBus {
    TransmissionBus { id, p_load_total: p, q_load_total: q, p_load_critical: 0.0, q_load_critical: 0.0, v_min: 0.9, v_max: 1.1 }
}

pub fn node(id: usize, p: f64, q: f64) -> FeederNode {
    FeederNode { id, p_load_total: p, q_load_total: q, p_load_critical: 0.0, q_load_critical: 0.0, v_sq_min: 0.81, v_sq_max: 1.21 }
}

pub fn gen(bus: usize, p_max: f64) -> CentralGenerator {
    CentralGenerator { bus, p_min: 0.0, p_max, q_min: -p_max, q_max: p_max }
}

/// Two buses joined by one branch, generator at bus 1, load (MW, MVAr) at
/// bus 2, base 100 MVA, one period.
pub fn two_bus(r: f64, x: f64, load: (f64, f64)) -> CoupledCase {
    let tn = TransmissionNetwork {
        base_mva: 100.0,
        buses: vec![bus(1, 0.0, 0.0), bus(2, load.0, load.1)],
        branches: vec![TransmissionBranch { from_bus: 1, to_bus: 2, r, x, b_shunt: 0.0 }],
        generators: vec![gen(1, 200.0)],
    };
    let scenario = ScenarioConfig { periods: 1, ..ScenarioConfig::default() };
    CoupledCase::new(tn, Vec::new(), scenario, ProfileSeries::flat(1))
}

/// A one-bus transmission network feeding a single-line feeder: substation
/// node 1, load node 2 with the given load in MW/MVAr.
pub fn single_line_feeder(r: f64, x: f64, load: (f64, f64)) -> CoupledCase {
    let tn = TransmissionNetwork { base_mva: 100.0, buses: vec![bus(1, 0.0, 0.0)], branches: Vec::new(), generators: vec![gen(1, 500.0)] };
    let feeder = DistributionFeeder {
        id: "F".into(),
        nodes: vec![node(1, 0.0, 0.0), node(2, load.0, load.1)],
        lines: vec![FeederLine { from_node: 1, to_node: 2, r, x }],
        dgs: Vec::new(),
        esss: Vec::new(),
        pvs: Vec::new(),
        substation_node: 1,
        boundary_bus: 1,
    };
    let scenario = ScenarioConfig { periods: 1, ..ScenarioConfig::default() };
    CoupledCase::new(tn, vec![feeder], scenario, ProfileSeries::flat(1))
}

pub fn bundled(id: BundledCaseId) -> CoupledCase {
    load_bundled(id).unwrap()
}
