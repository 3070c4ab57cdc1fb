//! Recomputes every physical and operational constraint of a restoration
//! schedule from raw case data and runs both power-flow oracles on it.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::Serialize;
use tdrestore_core::{to_per_unit, CoupledCase, PeriodState, PowerPair, RestorationSolution, UnitsError};

use crate::newton::{bus_injections, newton_power_flow, ybus, SlackBus};
use crate::sweep::distflow_sweep;

/// Pass threshold for every audited residual, pu.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("solution shape does not match the case: {0}")]
    Dimension(String),
    #[error(transparent)]
    Units(#[from] UnitsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    TnBalance,
    DnBalance,
    Bound,
    Boundary,
    EnergyClosure,
    Oracle,
    Kkt,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::TnBalance => "transmission balance",
            Check::DnBalance => "distribution balance",
            Check::Bound => "bound",
            Check::Boundary => "boundary consensus",
            Check::EnergyClosure => "energy closure",
            Check::Oracle => "oracle",
            Check::Kkt => "kkt",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFailure {
    pub check: Check,
    /// 1-based period, absent for whole-run checks.
    pub period: Option<usize>,
    pub element: String,
    pub value: f64,
    pub threshold: f64,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.period {
            write!(f, "t{t} ")?;
        }
        write!(f, "{} {}: {:.3e} exceeds {:.0e}", self.element, self.check, self.value, self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_tn_balance_residual: f64,
    /// Node balances, branch equations and storage losses.
    pub max_dn_balance_residual: f64,
    pub max_bound_violation: f64,
    pub max_boundary_mismatch: f64,
    pub max_energy_closure: f64,
    /// Largest deviation of V, θ and v from the oracles.
    pub oracle_voltage_deviation: f64,
    /// Largest deviation of feeder flows and currents from the sweep.
    pub oracle_flow_deviation: f64,
    pub kkt_residual: Option<f64>,
    pub verdict: Verdict,
    pub failures: Vec<AuditFailure>,
}

impl ValidationReport {
    /// Adds the solver's KKT residual, failing the report when it exceeds
    /// `tolerance`.
    pub fn with_kkt(mut self, kkt: f64, tolerance: f64) -> Self {
        self.kkt_residual = Some(kkt);
        if !(kkt <= tolerance) {
            self.failures.push(AuditFailure {
                check: Check::Kkt,
                period: None,
                element: "solver".into(),
                value: kkt,
                threshold: tolerance,
            });
            self.verdict = Verdict::Fail;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// First failure of `check` whose element contains `needle`.
    pub fn find(&self, check: Check, needle: &str) -> Option<&AuditFailure> {
        self.failures.iter().find(|f| f.check == check && f.element.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict                    {:?}", self.verdict)?;
        writeln!(f, "max tn balance residual    {:.3e}", self.max_tn_balance_residual)?;
        writeln!(f, "max dn balance residual    {:.3e}", self.max_dn_balance_residual)?;
        writeln!(f, "max bound violation        {:.3e}", self.max_bound_violation)?;
        writeln!(f, "max boundary mismatch      {:.3e}", self.max_boundary_mismatch)?;
        writeln!(f, "max energy closure         {:.3e}", self.max_energy_closure)?;
        writeln!(f, "oracle voltage deviation   {:.3e}", self.oracle_voltage_deviation)?;
        writeln!(f, "oracle flow deviation      {:.3e}", self.oracle_flow_deviation)?;
        if let Some(k) = self.kkt_residual {
            writeln!(f, "kkt residual               {k:.3e}")?;
        }
        for fail in self.failures.iter().take(20) {
            writeln!(f, "  FAIL {fail}")?;
        }
        if self.failures.len() > 20 {
            writeln!(f, "  ... {} more", self.failures.len() - 20)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Collector {
    max: [f64; 7],
    flow: f64,
    failures: Vec<AuditFailure>,
}

impl Collector {
    fn slot(check: Check) -> usize {
        check as usize
    }

    fn record(&mut self, check: Check, period: Option<usize>, element: impl FnOnce() -> String, value: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value.abs() };
        let m = &mut self.max[Self::slot(check)];
        *m = m.max(value);
        if value > AUDIT_TOLERANCE {
            self.failures.push(AuditFailure { check, period, element: element(), value, threshold: AUDIT_TOLERANCE });
        }
    }

    /// Amount by which `x` leaves `[lo, hi]`.
    fn bound(&mut self, period: usize, element: impl FnOnce() -> String, x: f64, lo: f64, hi: f64) {
        let v = if x.is_nan() { f64::INFINITY } else { (lo - x).max(x - hi).max(0.0) };
        self.record(Check::Bound, Some(period), element, v);
    }
}

fn shape(solution: &RestorationSolution, case: &CoupledCase) -> Result<(), AuditError> {
    let fail = |m: String| Err(AuditError::Dimension(m));
    if solution.periods.len() != case.periods() {
        return fail(format!("{} periods, case has {}", solution.periods.len(), case.periods()));
    }
    let tn = &case.transmission;
    for (t, p) in solution.periods.iter().enumerate() {
        let s = &p.transmission;
        let nb = tn.buses.len();
        if s.vm.len() != nb || s.va.len() != nb || s.served.len() != nb || s.gen.len() != tn.generators.len() {
            return fail(format!("t{} transmission vectors", t + 1));
        }
        if p.feeders.len() != case.feeders.len() {
            return fail(format!("t{} has {} feeders", t + 1, p.feeders.len()));
        }
        for (fs, f) in p.feeders.iter().zip(&case.feeders) {
            if fs.v_sq.len() != f.nodes.len()
                || fs.served.len() != f.nodes.len()
                || fs.lines.len() != f.lines.len()
                || fs.dg.len() != f.dgs.len()
                || fs.ess.len() != f.esss.len()
                || fs.pv.len() != f.pvs.len()
            {
                return fail(format!("t{} feeder {} vectors", t + 1, f.id));
            }
        }
    }
    Ok(())
}

fn served(p: Option<PowerPair>) -> PowerPair {
    p.unwrap_or_default()
}

/// Audits `solution` (per-unit) against `case` (any units).
pub fn audit_solution(case: &CoupledCase, solution: &RestorationSolution) -> Result<ValidationReport, AuditError> {
    let case = to_per_unit(case)?;
    shape(solution, &case)?;
    let mut c = Collector::default();
    let tn = &case.transmission;
    let y = ybus(tn);
    let boundary = case.boundary_bus_positions();
    let reference = tn.reference_bus();
    let s_max = case.scenario.intertie_s_max;

    for (t, p) in solution.periods.iter().enumerate() {
        let period = t + 1;
        let s = &p.transmission;

        // Transmission bus balance.
        let flow = bus_injections(&y, &s.vm, &s.va);
        let net = tn_injections(&case, p);
        for i in 0..tn.buses.len() {
            let id = tn.buses[i].id;
            c.record(Check::TnBalance, Some(period), || format!("bus {id} P"), net[i].p - flow[i].re);
            c.record(Check::TnBalance, Some(period), || format!("bus {id} Q"), net[i].q - flow[i].im);
        }

        // Transmission bounds.
        for (i, bus) in tn.buses.iter().enumerate() {
            c.bound(period, || format!("bus {} V", bus.id), s.vm[i], bus.v_min, bus.v_max);
            let (lo, hi) = if i == reference { (0.0, 0.0) } else { (-FRAC_PI_2, FRAC_PI_2) };
            c.bound(period, || format!("bus {} angle", bus.id), s.va[i], lo, hi);
            let exchange = case.feeder_at_bus(i).is_some();
            match s.served[i] {
                Some(d) if exchange => {
                    c.bound(period, || format!("bus {} exchange P", bus.id), d.p, -s_max, s_max);
                    c.bound(period, || format!("bus {} exchange Q", bus.id), d.q, -s_max, s_max);
                }
                Some(d) => {
                    let load = case.tn_load(i, t);
                    let (pl, ph) = load.p_range();
                    let (ql, qh) = load.q_range();
                    c.bound(period, || format!("bus {} served P", bus.id), d.p, pl, ph);
                    c.bound(period, || format!("bus {} served Q", bus.id), d.q, ql, qh);
                }
                None if bus.has_load() || exchange => {
                    c.record(Check::Bound, Some(period), || format!("bus {} served load missing", bus.id), f64::INFINITY);
                }
                None => {}
            }
        }
        for (g, gen) in tn.generators.iter().enumerate() {
            c.bound(period, || format!("gen{} at bus {} P", g + 1, gen.bus), s.gen[g].p, gen.p_min, gen.p_max);
            c.bound(period, || format!("gen{} at bus {} Q", g + 1, gen.bus), s.gen[g].q, gen.q_min, gen.q_max);
            if let (Some(r), true) = (case.scenario.ramp_limit, t > 0) {
                let prev = solution.periods[t - 1].transmission.gen[g].p;
                c.bound(period, || format!("gen{} at bus {} ramp", g + 1, gen.bus), s.gen[g].p - prev, -r, r);
            }
        }

        // Transmission losses are the sum of all bus injections.
        let mut generation: f64 = s.gen.iter().map(|g| g.p).sum();
        let mut load = 0.0;
        for (i, d) in s.served.iter().enumerate() {
            if case.feeder_at_bus(i).is_none() {
                load += served(*d).p;
            }
        }
        let mut losses: f64 = flow.iter().map(|s| s.re).sum();

        // Feeders.
        for (f, feeder) in case.feeders.iter().enumerate() {
            let fs = &p.feeders[f];
            let fid = &feeder.id;
            let Some(order) = feeder.oriented_lines() else {
                return Err(AuditError::Dimension(format!("feeder {fid} is not radial")));
            };
            let sub = feeder.substation_index().ok_or_else(|| AuditError::Dimension(format!("feeder {fid} has no substation")))?;

            // Net injection per node, consumption positive.
            let mut net_load: Vec<PowerPair> = fs.served.iter().map(|d| served(*d)).collect();
            let mut inject = |node: usize, pq: PowerPair| {
                if let Some(j) = feeder.node_index(node) {
                    net_load[j].p -= pq.p;
                    net_load[j].q -= pq.q;
                }
            };
            for (k, d) in feeder.dgs.iter().enumerate() {
                inject(d.node, fs.dg[k]);
            }
            for (k, e) in feeder.esss.iter().enumerate() {
                inject(e.node, PowerPair { p: fs.ess[k].p, q: fs.ess[k].q });
            }
            for (k, pv) in feeder.pvs.iter().enumerate() {
                inject(pv.node, fs.pv[k]);
            }

            // Node balance: import + inflow from parent (after losses) = load + outflow.
            let mut balance: Vec<PowerPair> = net_load.iter().map(|l| PowerPair { p: -l.p, q: -l.q }).collect();
            balance[sub].p += fs.grid.p;
            balance[sub].q += fs.grid.q;
            for ol in &order {
                let line = &feeder.lines[ol.line];
                let st = fs.lines[ol.line];
                balance[ol.child].p += st.p - line.r * st.l;
                balance[ol.child].q += st.q - line.x * st.l;
                balance[ol.parent].p -= st.p;
                balance[ol.parent].q -= st.q;
                let name = || format!("{fid} line {}-{}", line.from_node, line.to_node);
                let (vi, vk) = (fs.v_sq[ol.parent], fs.v_sq[ol.child]);
                let drop = vk - vi + 2.0 * (line.r * st.p + line.x * st.q) - (line.r * line.r + line.x * line.x) * st.l;
                c.record(Check::DnBalance, Some(period), || format!("{} voltage drop", name()), drop);
                c.record(Check::DnBalance, Some(period), || format!("{} current", name()), st.l * vi - st.p * st.p - st.q * st.q);
                losses += line.r * st.l;
            }
            for (j, b) in balance.iter().enumerate() {
                let id = feeder.nodes[j].id;
                c.record(Check::DnBalance, Some(period), || format!("{fid} node {id} P"), b.p);
                c.record(Check::DnBalance, Some(period), || format!("{fid} node {id} Q"), b.q);
            }

            // Feeder bounds and devices.
            for (j, node) in feeder.nodes.iter().enumerate() {
                c.bound(period, || format!("{fid} node {} v", node.id), fs.v_sq[j], node.v_sq_min, node.v_sq_max);
                match fs.served[j] {
                    Some(d) => {
                        let l = case.dn_load(f, j, t);
                        let ((pl, ph), (ql, qh)) = (l.p_range(), l.q_range());
                        c.bound(period, || format!("{fid} node {} served P", node.id), d.p, pl, ph);
                        c.bound(period, || format!("{fid} node {} served Q", node.id), d.q, ql, qh);
                        load += d.p;
                    }
                    None if node.has_load() => {
                        c.record(Check::Bound, Some(period), || format!("{fid} node {} served load missing", node.id), f64::INFINITY);
                    }
                    None => {}
                }
            }
            for (k, d) in feeder.dgs.iter().enumerate() {
                c.bound(period, || format!("{fid} dg{} P", k + 1), fs.dg[k].p, d.p_min, d.p_max);
                c.bound(period, || format!("{fid} dg{} Q", k + 1), fs.dg[k].q, d.q_min, d.q_max);
                generation += fs.dg[k].p;
            }
            for (k, e) in feeder.esss.iter().enumerate() {
                let st = fs.ess[k];
                let name = format!("{fid} ess{}", k + 1);
                c.bound(period, || format!("{name} MVA"), st.p.hypot(st.q), 0.0, e.s_max);
                let node = feeder.node_index(e.node).expect("device node exists in a validated case");
                let loss = e.r_eq * st.p * st.p + e.r_cvt * st.q * st.q - st.loss * fs.v_sq[node];
                c.record(Check::DnBalance, Some(period), || format!("{name} loss"), loss);
                let drawn: f64 = solution.periods[..=t].iter().map(|q| q.feeders[f].ess[k].p + q.feeders[f].ess[k].loss).sum();
                let energy = e.e_surplus - drawn * case.scenario.delta_t;
                c.bound(period, || format!("{name} energy"), energy, 0.0, e.e_max);
                generation += st.p;
            }
            for (k, pv) in feeder.pvs.iter().enumerate() {
                let st = fs.pv[k];
                let cap = case.pv_cap(f, k, t);
                c.bound(period, || format!("{fid} pv{} P", k + 1), st.p, 0.0, cap);
                let band = pv.power_factor * st.p.max(0.0);
                c.bound(period, || format!("{fid} pv{} Q", k + 1), st.q, -band, band);
                generation += st.p;
            }
            c.bound(period, || format!("{fid} grid P"), fs.grid.p, -s_max, s_max);
            c.bound(period, || format!("{fid} grid Q"), fs.grid.q, -s_max, s_max);

            // Boundary consensus.
            if let Some(b) = boundary[f] {
                let ex = served(s.served[b]);
                c.record(Check::Boundary, Some(period), || format!("{fid} P"), ex.p - fs.grid.p);
                c.record(Check::Boundary, Some(period), || format!("{fid} Q"), ex.q - fs.grid.q);
                c.record(Check::Boundary, Some(period), || format!("{fid} V"), s.vm[b] * s.vm[b] - fs.v_sq[sub]);
            }

            // Sweep oracle.
            match distflow_sweep(feeder, &net_load, fs.v_sq[sub]) {
                Ok(sw) => {
                    for j in 0..feeder.nodes.len() {
                        let id = feeder.nodes[j].id;
                        c.record(Check::Oracle, Some(period), || format!("{fid} node {id} v vs sweep"), sw.v[j] - fs.v_sq[j]);
                    }
                    for (k, line) in feeder.lines.iter().enumerate() {
                        let (a, b) = (sw.lines[k], fs.lines[k]);
                        let dev = (a.p - b.p).abs().max((a.q - b.q).abs()).max((a.l - b.l).abs());
                        c.flow = c.flow.max(dev);
                        if dev > AUDIT_TOLERANCE {
                            c.failures.push(AuditFailure {
                                check: Check::Oracle,
                                period: Some(period),
                                element: format!("{fid} line {}-{} flow vs sweep", line.from_node, line.to_node),
                                value: dev,
                                threshold: AUDIT_TOLERANCE,
                            });
                        }
                    }
                }
                Err(e) => c.record(Check::Oracle, Some(period), || format!("{fid} sweep: {e}"), f64::INFINITY),
            }
        }
        c.record(Check::EnergyClosure, Some(period), || "system".into(), generation - load - losses);

        // Newton oracle with the optimizer's injections, the reference bus as slack.
        let slack = SlackBus { index: reference, vm: s.vm[reference], va: s.va[reference] };
        match newton_power_flow(tn, &net, slack) {
            Ok(pf) => {
                for (i, bus) in tn.buses.iter().enumerate() {
                    c.record(Check::Oracle, Some(period), || format!("bus {} V vs newton", bus.id), pf.vm[i] - s.vm[i]);
                    c.record(Check::Oracle, Some(period), || format!("bus {} angle vs newton", bus.id), pf.va[i] - s.va[i]);
                }
            }
            Err(e) => c.record(Check::Oracle, Some(period), || format!("newton: {e}"), f64::INFINITY),
        }
    }

    let m = |k: Check| c.max[Collector::slot(k)];
    Ok(ValidationReport {
        max_tn_balance_residual: m(Check::TnBalance),
        max_dn_balance_residual: m(Check::DnBalance),
        max_bound_violation: m(Check::Bound),
        max_boundary_mismatch: m(Check::Boundary),
        max_energy_closure: m(Check::EnergyClosure),
        oracle_voltage_deviation: m(Check::Oracle),
        oracle_flow_deviation: c.flow,
        kkt_residual: None,
        verdict: if c.failures.is_empty() { Verdict::Pass } else { Verdict::Fail },
        failures: c.failures,
    })
}

/// Net injection per transmission bus: generation minus served load, with
/// feeder exchanges as loads.
pub fn tn_injections(case: &CoupledCase, p: &PeriodState) -> Vec<PowerPair> {
    let tn = &case.transmission;
    let s = &p.transmission;
    let mut net: Vec<PowerPair> = s
        .served
        .iter()
        .map(|d| {
            let d = served(*d);
            PowerPair { p: -d.p, q: -d.q }
        })
        .collect();
    for (g, gen) in tn.generators.iter().enumerate() {
        if let Some(i) = tn.bus_index(gen.bus) {
            net[i].p += s.gen[g].p;
            net[i].q += s.gen[g].q;
        }
    }
    net
}
