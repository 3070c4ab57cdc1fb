//! Structural validation of a [`CoupledCase`].
//!
//! Every violation is collected; nothing short-circuits. Issues carry a path
//! to the offending element and a unit-free kind, so validating a case and its
//! per-unit conversion gives identical outcomes.

use std::collections::HashSet;
use std::fmt;

use crate::model::CoupledCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    EmptyNetwork,
    DuplicateId,
    DanglingReference,
    SelfLoop,
    ZeroReactance,
    NonPositiveVoltageBound,
    EmptyVoltageRange,
    CriticalExceedsTotal,
    EmptyPowerRange,
    EnergyOutOfRange,
    NonPositiveCapacity,
    NegativeResistance,
    PowerFactorOutOfRange,
    NegativeCapacity,
    NotRadial,
    MissingSubstation,
    DuplicateBoundaryBus,
    BoundaryBusHasLoad,
    Disconnected,
    BadPeriods,
    BadTimeStep,
    NonPositiveWeight,
    FractionOutOfRange,
    NonPositiveBase,
    ProfileLength,
    ProfileValue,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub path: String,
    pub kind: IssueKind,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.path, self.kind)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationOutcome {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationOutcome {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    fn push(&mut self, path: impl Into<String>, kind: IssueKind) {
        self.issues.push(ValidationIssue { path: path.into(), kind });
    }
}

impl fmt::Display for ValidationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// `critical` must lie between 0 and `total`, with the same sign.
fn critical_ok(critical: f64, total: f64) -> bool {
    critical * total >= 0.0 && critical.abs() <= total.abs() * (1.0 + 1e-12)
}

pub fn validate_case(case: &CoupledCase) -> ValidationOutcome {
    let mut out = ValidationOutcome::default();
    let tn = &case.transmission;

    if !(tn.base_mva > 0.0) {
        out.push("transmission.base", IssueKind::NonPositiveBase);
    }
    if tn.buses.is_empty() {
        out.push("transmission.bus", IssueKind::EmptyNetwork);
    }
    let mut ids = HashSet::new();
    for (k, bus) in tn.buses.iter().enumerate() {
        let path = format!("transmission.bus[{k}] (id {})", bus.id);
        if !ids.insert(bus.id) {
            out.push(&path, IssueKind::DuplicateId);
        }
        let values = [bus.p_load_total, bus.q_load_total, bus.p_load_critical, bus.q_load_critical, bus.v_min, bus.v_max];
        if !finite(&values) {
            out.push(&path, IssueKind::NonFinite);
            continue;
        }
        if bus.v_min <= 0.0 {
            out.push(&path, IssueKind::NonPositiveVoltageBound);
        }
        if bus.v_min >= bus.v_max {
            out.push(&path, IssueKind::EmptyVoltageRange);
        }
        if !critical_ok(bus.p_load_critical, bus.p_load_total) || !critical_ok(bus.q_load_critical, bus.q_load_total) {
            out.push(&path, IssueKind::CriticalExceedsTotal);
        }
    }
    for (k, br) in tn.branches.iter().enumerate() {
        let path = format!("transmission.branch[{k}] ({}-{})", br.from_bus, br.to_bus);
        if tn.bus_index(br.from_bus).is_none() || tn.bus_index(br.to_bus).is_none() {
            out.push(&path, IssueKind::DanglingReference);
        }
        if br.from_bus == br.to_bus {
            out.push(&path, IssueKind::SelfLoop);
        }
        if !finite(&[br.r, br.x, br.b_shunt]) {
            out.push(&path, IssueKind::NonFinite);
        } else if br.x == 0.0 {
            out.push(&path, IssueKind::ZeroReactance);
        }
    }
    for (k, g) in tn.generators.iter().enumerate() {
        let path = format!("transmission.gen[{k}] (bus {})", g.bus);
        if tn.bus_index(g.bus).is_none() {
            out.push(&path, IssueKind::DanglingReference);
        }
        if !finite(&[g.p_min, g.p_max, g.q_min, g.q_max]) {
            out.push(&path, IssueKind::NonFinite);
        } else if g.p_min > g.p_max || g.q_min > g.q_max {
            out.push(&path, IssueKind::EmptyPowerRange);
        }
    }
    if !tn.buses.is_empty() && !transmission_connected(case) {
        out.push("transmission", IssueKind::Disconnected);
    }

    let mut feeder_ids = HashSet::new();
    let mut boundary = HashSet::new();
    for (f, feeder) in case.feeders.iter().enumerate() {
        let root = format!("feeder[{f}] ({})", feeder.id);
        if !feeder_ids.insert(feeder.id.clone()) {
            out.push(&root, IssueKind::DuplicateId);
        }
        if feeder.nodes.is_empty() {
            out.push(format!("{root}.node"), IssueKind::EmptyNetwork);
        }
        match tn.bus_index(feeder.boundary_bus) {
            None => out.push(format!("{root}.boundary"), IssueKind::DanglingReference),
            Some(b) => {
                if tn.buses[b].has_load() {
                    out.push(format!("{root}.boundary"), IssueKind::BoundaryBusHasLoad);
                }
            }
        }
        if !boundary.insert(feeder.boundary_bus) {
            out.push(format!("{root}.boundary"), IssueKind::DuplicateBoundaryBus);
        }
        let substation_known = feeder.substation_index().is_some();
        if !substation_known {
            out.push(format!("{root}.boundary"), IssueKind::MissingSubstation);
        }

        let mut node_ids = HashSet::new();
        for (k, node) in feeder.nodes.iter().enumerate() {
            let path = format!("{root}.node[{k}] (id {})", node.id);
            if !node_ids.insert(node.id) {
                out.push(&path, IssueKind::DuplicateId);
            }
            let values = [node.p_load_total, node.q_load_total, node.p_load_critical, node.q_load_critical, node.v_sq_min, node.v_sq_max];
            if !finite(&values) {
                out.push(&path, IssueKind::NonFinite);
                continue;
            }
            if node.v_sq_min <= 0.0 {
                out.push(&path, IssueKind::NonPositiveVoltageBound);
            }
            if node.v_sq_min >= node.v_sq_max {
                out.push(&path, IssueKind::EmptyVoltageRange);
            }
            if !critical_ok(node.p_load_critical, node.p_load_total) || !critical_ok(node.q_load_critical, node.q_load_total) {
                out.push(&path, IssueKind::CriticalExceedsTotal);
            }
        }
        let mut lines_ok = true;
        for (k, line) in feeder.lines.iter().enumerate() {
            let path = format!("{root}.line[{k}] ({}-{})", line.from_node, line.to_node);
            if feeder.node_index(line.from_node).is_none() || feeder.node_index(line.to_node).is_none() {
                out.push(&path, IssueKind::DanglingReference);
                lines_ok = false;
            }
            if line.from_node == line.to_node {
                out.push(&path, IssueKind::SelfLoop);
                lines_ok = false;
            }
            if !finite(&[line.r, line.x]) {
                out.push(&path, IssueKind::NonFinite);
            } else if line.r < 0.0 {
                out.push(&path, IssueKind::NegativeResistance);
            }
        }
        if lines_ok && substation_known && feeder.oriented_lines().is_none() {
            out.push(format!("{root}.line"), IssueKind::NotRadial);
        }
        for (k, dg) in feeder.dgs.iter().enumerate() {
            let path = format!("{root}.dg[{k}] (node {})", dg.node);
            if feeder.node_index(dg.node).is_none() {
                out.push(&path, IssueKind::DanglingReference);
            }
            if !finite(&[dg.p_min, dg.p_max, dg.q_min, dg.q_max]) {
                out.push(&path, IssueKind::NonFinite);
            } else if dg.p_min > dg.p_max || dg.q_min > dg.q_max {
                out.push(&path, IssueKind::EmptyPowerRange);
            }
        }
        for (k, ess) in feeder.esss.iter().enumerate() {
            let path = format!("{root}.ess[{k}] (node {})", ess.node);
            if feeder.node_index(ess.node).is_none() {
                out.push(&path, IssueKind::DanglingReference);
            }
            if !finite(&[ess.e_surplus, ess.e_max, ess.s_max, ess.r_eq, ess.r_cvt]) {
                out.push(&path, IssueKind::NonFinite);
                continue;
            }
            if ess.e_surplus < 0.0 || ess.e_surplus > ess.e_max {
                out.push(&path, IssueKind::EnergyOutOfRange);
            }
            if ess.s_max <= 0.0 {
                out.push(&path, IssueKind::NonPositiveCapacity);
            }
            if ess.r_eq < 0.0 || ess.r_cvt < 0.0 {
                out.push(&path, IssueKind::NegativeResistance);
            }
        }
        for (k, pv) in feeder.pvs.iter().enumerate() {
            let path = format!("{root}.pv[{k}] (node {})", pv.node);
            if feeder.node_index(pv.node).is_none() {
                out.push(&path, IssueKind::DanglingReference);
            }
            if !finite(&[pv.p_max, pv.power_factor]) {
                out.push(&path, IssueKind::NonFinite);
                continue;
            }
            if pv.p_max < 0.0 {
                out.push(&path, IssueKind::NegativeCapacity);
            }
            if !(pv.power_factor > 0.0 && pv.power_factor <= 1.0) {
                out.push(&path, IssueKind::PowerFactorOutOfRange);
            }
        }
    }

    let sc = &case.scenario;
    if sc.periods < 1 {
        out.push("scenario.periods", IssueKind::BadPeriods);
    }
    if !(sc.delta_t > 0.0) || !sc.delta_t.is_finite() {
        out.push("scenario.delta_t", IssueKind::BadTimeStep);
    }
    if !(sc.w_t > 0.0) || !(sc.w_d > 0.0) {
        out.push("scenario.weights", IssueKind::NonPositiveWeight);
    }
    if !(0.0..=1.0).contains(&sc.critical_fraction) {
        out.push("scenario.critical_fraction", IssueKind::FractionOutOfRange);
    }
    if !(sc.central_gen_penalty >= 0.0) || !sc.central_gen_penalty.is_finite() {
        out.push("scenario.central_gen_penalty", IssueKind::NonFinite);
    }
    if !(sc.intertie_s_max > 0.0) {
        out.push("scenario.intertie_s_max", IssueKind::NonPositiveCapacity);
    }
    if !(sc.system_base > 0.0) {
        out.push("scenario.system_base", IssueKind::NonPositiveBase);
    }
    if let Some(r) = sc.ramp_limit {
        if !(r > 0.0) {
            out.push("scenario.ramp_limit", IssueKind::NonPositiveCapacity);
        }
    }
    check_profile(&mut out, "profiles.transmission.load", &case.profiles.transmission_load, sc.periods);
    if case.profiles.feeders.len() != case.feeders.len() {
        out.push("profiles.feeders", IssueKind::ProfileLength);
    }
    for (f, p) in case.profiles.feeders.iter().enumerate() {
        check_profile(&mut out, &format!("profiles.feeder[{f}].load"), &p.load, sc.periods);
        check_profile(&mut out, &format!("profiles.feeder[{f}].pv"), &p.pv, sc.periods);
    }
    out
}

fn check_profile(out: &mut ValidationOutcome, path: &str, values: &[f64], periods: usize) {
    if values.len() != periods {
        out.push(path, IssueKind::ProfileLength);
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        out.push(path, IssueKind::ProfileValue);
    }
}

fn transmission_connected(case: &CoupledCase) -> bool {
    let tn = &case.transmission;
    let n = tn.buses.len();
    let mut adj = vec![Vec::new(); n];
    for br in &tn.branches {
        if let (Some(a), Some(b)) = (tn.bus_index(br.from_bus), tn.bus_index(br.to_bus)) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
