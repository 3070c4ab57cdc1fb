//! Browser demo for the restoration study. Three operations take and return
//! JSON so the page needs no bindings beyond strings:
//!
//! - [`restore`]: solve a bundled case with edited weights and penalty;
//! - [`feeder_profile`]: DistFlow sweep of one feeder under scaled load;
//! - [`power_flow`]: Newton power flow of the transmission network under
//!   scaled load, with each feeder lumped at its boundary bus.
//!
//! The `*_json` wrappers are exported to JavaScript and never throw; errors
//! come back as `{"error": "..."}`.

use serde::{Deserialize, Serialize};
use tdrestore_core::ingest::load_bundled_by_name;
use tdrestore_core::{to_per_unit, CoupledCase, IngestError, PowerPair, UnitsError};
use tdrestore_formulation::{assemble, extract_solution, FormulationError, ObjectiveBreakdown};
use tdrestore_nlp::{solve, SolveError, SolveStatus, SolverOptions};
use tdrestore_verify::{audit_solution, distflow_sweep, newton_power_flow, AuditError, OracleError, SlackBus};
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("bad request: {0}")]
    Request(#[from] serde_json::Error),
    #[error(transparent)]
    Case(#[from] IngestError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("power flow: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{0}")]
    Invalid(String),
}

fn default_case() -> String {
    "case_study_1".into()
}

fn one() -> f64 {
    1.0
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), DemoError> {
    if ok {
        Ok(())
    } else {
        Err(DemoError::Invalid(what()))
    }
}

fn nonnegative(name: &str, v: Option<f64>) -> Result<(), DemoError> {
    match v {
        Some(v) => require(v.is_finite() && v >= 0.0, || format!("{name} must be a non-negative number, got {v}")),
        None => Ok(()),
    }
}

fn load_scale_ok(s: f64) -> Result<(), DemoError> {
    require(s.is_finite() && s >= 0.0, || format!("load_scale must be a non-negative number, got {s}"))
}

/// Unset fields keep the bundled scenario's values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestoreRequest {
    #[serde(default = "default_case")]
    pub case: String,
    pub w_t: Option<f64>,
    pub w_d: Option<f64>,
    /// Objective charge per MW of central generation.
    pub penalty: Option<f64>,
    pub critical_fraction: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exchange {
    pub feeder: String,
    pub p_mw: f64,
    pub q_mvar: f64,
    pub v_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generation {
    pub bus: usize,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodView {
    pub period: usize,
    /// Served over total active load, transmission loads and feeder nodes.
    pub served_fraction: f64,
    pub served_mw: f64,
    pub load_mw: f64,
    pub boundary: Vec<Exchange>,
    pub generation: Vec<Generation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestoreResponse {
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: ObjectiveBreakdown,
    /// `None` when the solver did not converge and no audit was run.
    pub audit_passed: Option<bool>,
    pub periods: Vec<PeriodView>,
}

pub fn restore(req: &RestoreRequest) -> Result<RestoreResponse, DemoError> {
    nonnegative("w_t", req.w_t)?;
    nonnegative("w_d", req.w_d)?;
    nonnegative("penalty", req.penalty)?;
    if let Some(c) = req.critical_fraction {
        require((0.0..=1.0).contains(&c), || format!("critical_fraction must lie in [0, 1], got {c}"))?;
    }
    let case = load_bundled_by_name(&req.case)?.with_scenario(|s| {
        s.w_t = req.w_t.unwrap_or(s.w_t);
        s.w_d = req.w_d.unwrap_or(s.w_d);
        s.central_gen_penalty = req.penalty.unwrap_or(s.central_gen_penalty);
        s.critical_fraction = req.critical_fraction.unwrap_or(s.critical_fraction);
    });
    let f = assemble(&case)?;
    let opts = SolverOptions { max_iterations: req.max_iterations.unwrap_or(500), ..SolverOptions::default() };
    let result = solve(&f.problem, &f.default_start(), &opts)?;
    let converged = result.status == SolveStatus::Converged;
    let solution = extract_solution(&f.index, &result.x);
    let audit_passed = if converged { Some(audit_solution(&f.case, &solution)?.passed()) } else { None };

    let pu = &f.case;
    let base = pu.scenario.system_base;
    let positions = pu.boundary_bus_positions();
    let periods = solution
        .periods
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let (mut served, mut load) = (0.0, 0.0);
            for (i, s) in p.transmission.served.iter().enumerate() {
                if let (Some(s), None) = (s, pu.feeder_at_bus(i)) {
                    served += s.p;
                    load += pu.tn_load(i, t).p_total;
                }
            }
            for (k, fs) in p.feeders.iter().enumerate() {
                for (j, s) in fs.served.iter().enumerate() {
                    if let Some(s) = s {
                        served += s.p;
                        load += pu.dn_load(k, j, t).p_total;
                    }
                }
            }
            let boundary = pu
                .feeders
                .iter()
                .zip(&positions)
                .map(|(feeder, b)| {
                    let b = b.expect("validated boundary bus");
                    let ex = p.transmission.served[b].unwrap_or_default();
                    Exchange { feeder: feeder.id.clone(), p_mw: ex.p * base, q_mvar: ex.q * base, v_pu: p.transmission.vm[b] }
                })
                .collect();
            let generation = pu
                .transmission
                .generators
                .iter()
                .zip(&p.transmission.gen)
                .map(|(g, pq)| Generation { bus: g.bus, p_mw: pq.p * base, q_mvar: pq.q * base })
                .collect();
            PeriodView {
                period: t + 1,
                served_fraction: if load > 0.0 { served / load } else { 1.0 },
                served_mw: served * base,
                load_mw: load * base,
                boundary,
                generation,
            }
        })
        .collect();
    Ok(RestoreResponse {
        converged,
        iterations: result.iterations,
        kkt_residual: result.kkt_residual,
        objective: f.objective.evaluate(&result.x),
        audit_passed,
        periods,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRequest {
    #[serde(default = "default_case")]
    pub case: String,
    pub feeder: String,
    /// Multiplier on every node's total load.
    #[serde(default = "one")]
    pub load_scale: f64,
    /// Substation voltage magnitude.
    #[serde(default = "one")]
    pub v_sub: f64,
    /// Run DGs at rated output and PV at rating, offsetting load.
    #[serde(default)]
    pub with_der: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeView {
    pub id: usize,
    /// Parent node id, `None` at the substation.
    pub parent: Option<usize>,
    /// Lines between the node and the substation.
    pub depth: usize,
    pub v_pu: f64,
    pub net_load_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileResponse {
    pub feeder: String,
    pub nodes: Vec<NodeView>,
    pub import_mw: f64,
    pub import_mvar: f64,
    pub losses_mw: f64,
    pub min_v_pu: f64,
    pub iterations: usize,
}

fn per_unit_case(name: &str) -> Result<CoupledCase, DemoError> {
    Ok(to_per_unit(&load_bundled_by_name(name)?)?)
}

pub fn feeder_profile(req: &ProfileRequest) -> Result<ProfileResponse, DemoError> {
    load_scale_ok(req.load_scale)?;
    require(req.v_sub.is_finite() && req.v_sub > 0.5 && req.v_sub < 1.5, || format!("v_sub must lie in (0.5, 1.5), got {}", req.v_sub))?;
    let case = per_unit_case(&req.case)?;
    let base = case.scenario.system_base;
    let feeder = case
        .feeders
        .iter()
        .find(|f| f.id == req.feeder)
        .ok_or_else(|| DemoError::Invalid(format!("no feeder `{}` in {}", req.feeder, req.case)))?;
    let mut load: Vec<PowerPair> =
        feeder.nodes.iter().map(|n| PowerPair { p: req.load_scale * n.p_load_total, q: req.load_scale * n.q_load_total }).collect();
    if req.with_der {
        for d in &feeder.dgs {
            let j = feeder.node_index(d.node).expect("validated node");
            load[j].p -= d.p_max;
        }
        for v in &feeder.pvs {
            let j = feeder.node_index(v.node).expect("validated node");
            load[j].p -= v.p_max;
        }
    }
    let sw = distflow_sweep(feeder, &load, req.v_sub * req.v_sub)?;
    let oriented = feeder.oriented_lines().ok_or_else(|| OracleError::NotRadial(feeder.id.clone()))?;
    let mut parent = vec![None; feeder.nodes.len()];
    let mut depth = vec![0; feeder.nodes.len()];
    for l in &oriented {
        parent[l.child] = Some(feeder.nodes[l.parent].id);
        depth[l.child] = depth[l.parent] + 1;
    }
    let nodes: Vec<NodeView> = feeder
        .nodes
        .iter()
        .enumerate()
        .map(|(j, n)| NodeView { id: n.id, parent: parent[j], depth: depth[j], v_pu: sw.v[j].sqrt(), net_load_mw: load[j].p * base })
        .collect();
    let losses: f64 = feeder.lines.iter().zip(&sw.lines).map(|(l, s)| l.r * s.l).sum();
    Ok(ProfileResponse {
        feeder: feeder.id.clone(),
        min_v_pu: nodes.iter().map(|n| n.v_pu).fold(f64::INFINITY, f64::min),
        nodes,
        import_mw: sw.import.p * base,
        import_mvar: sw.import.q * base,
        losses_mw: losses * base,
        iterations: sw.iterations,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFlowRequest {
    #[serde(default = "default_case")]
    pub case: String,
    #[serde(default = "one")]
    pub load_scale: f64,
    /// Voltage magnitude held at the reference bus.
    #[serde(default = "one")]
    pub slack_vm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusView {
    pub id: usize,
    pub vm: f64,
    pub va_deg: f64,
    pub load_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFlowResponse {
    pub buses: Vec<BusView>,
    pub slack_bus: usize,
    pub slack_mw: f64,
    pub slack_mvar: f64,
    pub losses_mw: f64,
    pub iterations: usize,
    pub mismatch: f64,
}

/// All load is served from the reference bus; every other bus is PQ.
pub fn power_flow(req: &PowerFlowRequest) -> Result<PowerFlowResponse, DemoError> {
    load_scale_ok(req.load_scale)?;
    require(req.slack_vm.is_finite() && req.slack_vm > 0.5 && req.slack_vm < 1.5, || {
        format!("slack_vm must lie in (0.5, 1.5), got {}", req.slack_vm)
    })?;
    let case = per_unit_case(&req.case)?;
    let tn = &case.transmission;
    let base = case.scenario.system_base;
    let load: Vec<PowerPair> = (0..tn.buses.len())
        .map(|i| match case.feeder_at_bus(i) {
            Some(k) => PowerPair { p: case.feeders[k].total_p_load(), q: case.feeders[k].total_q_load() },
            None => PowerPair { p: tn.buses[i].p_load_total, q: tn.buses[i].q_load_total },
        })
        .map(|l| PowerPair { p: req.load_scale * l.p, q: req.load_scale * l.q })
        .collect();
    let injections: Vec<PowerPair> = load.iter().map(|l| PowerPair { p: -l.p, q: -l.q }).collect();
    let slack = tn.reference_bus();
    let pf = newton_power_flow(tn, &injections, SlackBus { index: slack, vm: req.slack_vm, va: 0.0 })?;
    let total_load: f64 = load.iter().map(|l| l.p).sum();
    let s = pf.injections[slack];
    Ok(PowerFlowResponse {
        buses: tn
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| BusView { id: b.id, vm: pf.vm[i], va_deg: pf.va[i].to_degrees(), load_mw: load[i].p * base })
            .collect(),
        slack_bus: tn.buses[slack].id,
        slack_mw: (s.p + load[slack].p) * base,
        slack_mvar: (s.q + load[slack].q) * base,
        losses_mw: (s.p + load[slack].p - total_load) * base,
        iterations: pf.iterations,
        mismatch: pf.mismatch,
    })
}

fn respond<Req, Resp>(json: &str, op: impl FnOnce(&Req) -> Result<Resp, DemoError>) -> String
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let out = serde_json::from_str::<Req>(json).map_err(DemoError::from).and_then(|r| op(&r));
    match out {
        Ok(v) => serde_json::to_string(&v).expect("responses serialize"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[wasm_bindgen]
pub fn restore_json(request: &str) -> String {
    respond(request, restore)
}

#[wasm_bindgen]
pub fn feeder_profile_json(request: &str) -> String {
    respond(request, feeder_profile)
}

#[wasm_bindgen]
pub fn power_flow_json(request: &str) -> String {
    respond(request, power_flow)
}
