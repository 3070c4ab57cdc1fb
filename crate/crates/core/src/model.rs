//! Immutable description of a coupled transmission/distribution system.
//!
//! All containers are plain data. A [`CoupledCase`] is built once from its
//! parts (see [`CoupledCase::new`]), which derives the critical loads from the
//! scenario's critical fraction. Quantities are either physical (MW, MVAr,
//! MWh, MVA) or per-unit on the system base, as recorded by [`Units`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionBus {
    pub id: usize,
    pub p_load_total: f64,
    pub q_load_total: f64,
    pub p_load_critical: f64,
    pub q_load_critical: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl TransmissionBus {
    pub fn has_load(&self) -> bool {
        self.p_load_total != 0.0 || self.q_load_total != 0.0
    }
}

/// Pi-model line. `b_shunt` is the total line charging, split evenly between
/// the two ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionBranch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    pub b_shunt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralGenerator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionNetwork {
    pub base_mva: f64,
    pub buses: Vec<TransmissionBus>,
    pub branches: Vec<TransmissionBranch>,
    pub generators: Vec<CentralGenerator>,
}

impl TransmissionNetwork {
    /// Position of the bus with the given id.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// The angle reference is the first listed bus.
    pub fn reference_bus(&self) -> usize {
        0
    }
}

/// Distribution node. Voltage bounds are on the squared magnitude, which is
/// the DistFlow state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederNode {
    pub id: usize,
    pub p_load_total: f64,
    pub q_load_total: f64,
    pub p_load_critical: f64,
    pub q_load_critical: f64,
    pub v_sq_min: f64,
    pub v_sq_max: f64,
}

impl FeederNode {
    pub fn has_load(&self) -> bool {
        self.p_load_total != 0.0 || self.q_load_total != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederLine {
    pub from_node: usize,
    pub to_node: usize,
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgDevice {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// Energy storage. Positive power means discharge into the feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssDevice {
    pub node: usize,
    pub e_surplus: f64,
    pub e_max: f64,
    pub s_max: f64,
    pub r_eq: f64,
    pub r_cvt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvDevice {
    pub node: usize,
    pub p_max: f64,
    pub power_factor: f64,
}

/// Line oriented away from the substation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedLine {
    pub line: usize,
    /// Sending-end node position.
    pub parent: usize,
    /// Receiving-end node position.
    pub child: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFeeder {
    pub id: String,
    pub nodes: Vec<FeederNode>,
    pub lines: Vec<FeederLine>,
    pub dgs: Vec<DgDevice>,
    pub esss: Vec<EssDevice>,
    pub pvs: Vec<PvDevice>,
    pub substation_node: usize,
    pub boundary_bus: usize,
}

impl DistributionFeeder {
    pub fn node_index(&self, id: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn substation_index(&self) -> Option<usize> {
        self.node_index(self.substation_node)
    }

    /// Lines oriented from the substation outwards, in breadth-first order,
    /// so every line appears after the line feeding its parent. Returns `None`
    /// when the line set is not a spanning tree rooted at the substation.
    pub fn oriented_lines(&self) -> Option<Vec<OrientedLine>> {
        let root = self.substation_index()?;
        let n = self.nodes.len();
        if self.lines.len() + 1 != n {
            return None;
        }
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, line) in self.lines.iter().enumerate() {
            let a = self.node_index(line.from_node)?;
            let b = self.node_index(line.to_node)?;
            if a == b {
                return None;
            }
            incident[a].push((k, b));
            incident[b].push((k, a));
        }
        let mut seen = vec![false; n];
        let mut used = vec![false; self.lines.len()];
        let mut order = Vec::with_capacity(self.lines.len());
        let mut queue = std::collections::VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for &(k, w) in &incident[u] {
                if used[k] {
                    continue;
                }
                if seen[w] {
                    return None;
                }
                used[k] = true;
                seen[w] = true;
                order.push(OrientedLine { line: k, parent: u, child: w });
                queue.push_back(w);
            }
        }
        if seen.iter().all(|&s| s) {
            Some(order)
        } else {
            None
        }
    }

    pub fn total_p_load(&self) -> f64 {
        self.nodes.iter().map(|n| n.p_load_total).sum()
    }

    pub fn total_q_load(&self) -> f64 {
        self.nodes.iter().map(|n| n.q_load_total).sum()
    }
}

/// Per-period multipliers applied to load totals and PV capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSeries {
    pub load: Vec<f64>,
    pub pv: Vec<f64>,
}

impl ProfileSeries {
    pub fn flat(periods: usize) -> Self {
        ProfileSeries { load: vec![1.0; periods], pv: vec![1.0; periods] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseProfiles {
    /// Load multipliers for transmission buses.
    pub transmission_load: Vec<f64>,
    /// One series per feeder, in feeder order.
    pub feeders: Vec<ProfileSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub periods: usize,
    /// Hours per period.
    pub delta_t: f64,
    pub w_t: f64,
    pub w_d: f64,
    /// Objective units per MW of central generation per period.
    pub central_gen_penalty: f64,
    pub critical_fraction: f64,
    pub intertie_s_max: f64,
    pub system_base: f64,
    /// Optional limit on period-to-period change of central active power.
    pub ramp_limit: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            periods: 6,
            delta_t: 1.0,
            w_t: 1.0,
            w_d: 1.0,
            central_gen_penalty: 1.0e7,
            critical_fraction: 0.5,
            intertie_s_max: 100.0,
            system_base: 100.0,
            ramp_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    Physical,
    PerUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledCase {
    pub transmission: TransmissionNetwork,
    pub feeders: Vec<DistributionFeeder>,
    pub profiles: CaseProfiles,
    pub scenario: ScenarioConfig,
    pub units: Units,
}

/// Load totals and critical floor for one bus or node in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodLoad {
    pub p_total: f64,
    pub q_total: f64,
    pub p_critical: f64,
    pub q_critical: f64,
}

impl PeriodLoad {
    /// `[lower, upper]` for served active power, ordered for either sign.
    pub fn p_range(&self) -> (f64, f64) {
        ordered(self.p_critical, self.p_total)
    }

    pub fn q_range(&self) -> (f64, f64) {
        ordered(self.q_critical, self.q_total)
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CoupledCase {
    /// Assembles a case in physical units. The system base is taken from the
    /// transmission network, critical loads are set to
    /// `critical_fraction * total` everywhere, and the single profile series
    /// is applied to transmission loads and every feeder.
    pub fn new(
        mut transmission: TransmissionNetwork,
        mut feeders: Vec<DistributionFeeder>,
        mut scenario: ScenarioConfig,
        profile: ProfileSeries,
    ) -> Self {
        scenario.system_base = transmission.base_mva;
        let frac = scenario.critical_fraction;
        for bus in &mut transmission.buses {
            bus.p_load_critical = frac * bus.p_load_total;
            bus.q_load_critical = frac * bus.q_load_total;
        }
        for feeder in &mut feeders {
            for node in &mut feeder.nodes {
                node.p_load_critical = frac * node.p_load_total;
                node.q_load_critical = frac * node.q_load_total;
            }
        }
        let profiles = CaseProfiles { transmission_load: profile.load.clone(), feeders: vec![profile; feeders.len()] };
        CoupledCase { transmission, feeders, profiles, scenario, units: Units::Physical }
    }

    pub fn periods(&self) -> usize {
        self.scenario.periods
    }

    /// Transmission bus positions that host a feeder, per feeder.
    pub fn boundary_bus_positions(&self) -> Vec<Option<usize>> {
        self.feeders.iter().map(|f| self.transmission.bus_index(f.boundary_bus)).collect()
    }

    /// Feeder attached at transmission bus position `bus`, if any.
    pub fn feeder_at_bus(&self, bus: usize) -> Option<usize> {
        let id = self.transmission.buses[bus].id;
        self.feeders.iter().position(|f| f.boundary_bus == id)
    }

    pub fn tn_load(&self, bus: usize, t: usize) -> PeriodLoad {
        let b = &self.transmission.buses[bus];
        let m = self.profiles.transmission_load[t];
        PeriodLoad {
            p_total: m * b.p_load_total,
            q_total: m * b.q_load_total,
            p_critical: m * b.p_load_critical,
            q_critical: m * b.q_load_critical,
        }
    }

    pub fn dn_load(&self, feeder: usize, node: usize, t: usize) -> PeriodLoad {
        let n = &self.feeders[feeder].nodes[node];
        let m = self.profiles.feeders[feeder].load[t];
        PeriodLoad {
            p_total: m * n.p_load_total,
            q_total: m * n.q_load_total,
            p_critical: m * n.p_load_critical,
            q_critical: m * n.q_load_critical,
        }
    }

    /// Available PV active power in period `t`.
    pub fn pv_cap(&self, feeder: usize, pv: usize, t: usize) -> f64 {
        self.feeders[feeder].pvs[pv].p_max * self.profiles.feeders[feeder].pv[t]
    }

    /// Copy with the scenario edited by `f`. Critical loads are re-derived
    /// when the critical fraction changes.
    pub fn with_scenario(&self, f: impl FnOnce(&mut ScenarioConfig)) -> Self {
        let mut case = self.clone();
        let old_fraction = case.scenario.critical_fraction;
        f(&mut case.scenario);
        if case.scenario.critical_fraction != old_fraction {
            case.rederive_critical();
        }
        case
    }

    fn rederive_critical(&mut self) {
        let frac = self.scenario.critical_fraction;
        for bus in &mut self.transmission.buses {
            bus.p_load_critical = frac * bus.p_load_total;
            bus.q_load_critical = frac * bus.q_load_total;
        }
        for feeder in &mut self.feeders {
            for node in &mut feeder.nodes {
                node.p_load_critical = frac * node.p_load_total;
                node.q_load_critical = frac * node.q_load_total;
            }
        }
    }
}
