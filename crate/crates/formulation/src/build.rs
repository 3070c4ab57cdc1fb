//! Objective, constraints and bounds of the restoration problem.
//!
//! Every builder expects a case in per-unit (see `tdrestore_core::to_per_unit`)
//! and a matching `VariableIndex`. Equalities are `expr = 0`, inequalities
//! `expr <= 0`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use tdrestore_core::{CoupledCase, Units};

use crate::expr::{Constraint, ConstraintSet, Expr, Term};
use crate::index::VariableIndex;

fn assert_per_unit(case: &CoupledCase) {
    debug_assert_eq!(case.units, Units::PerUnit, "builders need a per-unit case");
}

/// Bus admittance matrix entries `(i, k) -> (G, B)` over bus positions,
/// from π-model branches. Only nonzero entries are present.
pub fn admittance(case: &CoupledCase) -> BTreeMap<(usize, usize), (f64, f64)> {
    let tn = &case.transmission;
    let mut y: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for br in &tn.branches {
        let (Some(i), Some(k)) = (tn.bus_index(br.from_bus), tn.bus_index(br.to_bus)) else {
            continue;
        };
        let z2 = br.r * br.r + br.x * br.x;
        let (g, b) = (br.r / z2, -br.x / z2);
        for (a, c, gg, bb) in [(i, i, g, b + br.b_shunt / 2.0), (k, k, g, b + br.b_shunt / 2.0), (i, k, -g, -b), (k, i, -g, -b)] {
            let e = y.entry((a, c)).or_insert((0.0, 0.0));
            e.0 += gg;
            e.1 += bb;
        }
    }
    y
}

/// The three parts of the objective, each in MW (or MWh) units: unserved
/// transmission load, unserved distribution load, central generation penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveParts {
    pub unserved_tn: Expr,
    pub unserved_dn: Expr,
    pub central_generation: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ObjectiveBreakdown {
    pub unserved_tn: f64,
    pub unserved_dn: f64,
    pub central_generation: f64,
    pub total: f64,
}

impl ObjectiveParts {
    pub fn evaluate(&self, x: &[f64]) -> ObjectiveBreakdown {
        let (a, b, c) = (self.unserved_tn.value(x), self.unserved_dn.value(x), self.central_generation.value(x));
        ObjectiveBreakdown { unserved_tn: a, unserved_dn: b, central_generation: c, total: a + b + c }
    }

    pub fn combined(&self) -> Expr {
        let mut e = self.unserved_tn.clone();
        e.constant += self.unserved_dn.constant + self.central_generation.constant;
        e.terms.extend(&self.unserved_dn.terms);
        e.terms.extend(&self.central_generation.terms);
        e
    }
}

/// Weighted energy not served plus the central-generation penalty:
///
/// ```txt
/// f = base * [ Σ_t Δt ( W_T Σ_i (P_tot − P_served) + W_D Σ_feeders Σ_j (P_tot − P_served) )
///              + penalty Σ_t Σ_g P_g ]
/// ```
///
/// Boundary buses carry the feeder exchange rather than load and are left
/// out of the transmission sum. The penalty is charged per MW per period.
pub fn build_objective(case: &CoupledCase, idx: &VariableIndex) -> ObjectiveParts {
    assert_per_unit(case);
    let s = &case.scenario;
    let base = s.system_base;
    let mut tn = Expr::default();
    let mut dn = Expr::default();
    let mut gen = Expr::default();
    for (t, slots) in idx.periods.iter().enumerate() {
        let w = base * s.delta_t;
        for (i, served) in slots.tn.served_p.iter().enumerate() {
            if let (Some(v), None) = (served, case.feeder_at_bus(i)) {
                tn.constant += w * s.w_t * case.tn_load(i, t).p_total;
                tn.push(Term::Lin { c: -w * s.w_t, i: *v });
            }
        }
        for (f, fs) in slots.feeders.iter().enumerate() {
            for (j, served) in fs.served_p.iter().enumerate() {
                if let Some(v) = served {
                    dn.constant += w * s.w_d * case.dn_load(f, j, t).p_total;
                    dn.push(Term::Lin { c: -w * s.w_d, i: *v });
                }
            }
        }
        for &g in &slots.tn.gen_p {
            gen.push(Term::Lin { c: base * s.central_gen_penalty, i: g });
        }
    }
    ObjectiveParts { unserved_tn: tn, unserved_dn: dn, central_generation: gen }
}

/// Polar AC power balance at every transmission bus and period:
///
/// ```txt
/// Σ P_g − P_served − Σ_k V_i V_k (G_ik cos θ_ik + B_ik sin θ_ik) = 0
/// Σ Q_g − Q_served − Σ_k V_i V_k (G_ik sin θ_ik − B_ik cos θ_ik) = 0
/// ```
pub fn add_tn_power_flow(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let tn = &case.transmission;
    let y = admittance(case);
    let mut out = ConstraintSet::default();
    for (t, slots) in idx.periods.iter().enumerate() {
        let s = &slots.tn;
        let mut p_rows: Vec<Expr> = vec![Expr::default(); tn.buses.len()];
        let mut q_rows: Vec<Expr> = vec![Expr::default(); tn.buses.len()];
        for (g, gen) in tn.generators.iter().enumerate() {
            if let Some(i) = tn.bus_index(gen.bus) {
                p_rows[i].push(Term::Lin { c: 1.0, i: s.gen_p[g] });
                q_rows[i].push(Term::Lin { c: 1.0, i: s.gen_q[g] });
            }
        }
        for i in 0..tn.buses.len() {
            if let Some(v) = s.served_p[i] {
                p_rows[i].push(Term::Lin { c: -1.0, i: v });
            }
            if let Some(v) = s.served_q[i] {
                q_rows[i].push(Term::Lin { c: -1.0, i: v });
            }
        }
        for (&(i, k), &(g, b)) in &y {
            let (vi, vk, ti, tk) = (s.vm[i], s.vm[k], s.va[i], s.va[k]);
            if i == k {
                if g != 0.0 {
                    p_rows[i].push(Term::Prod { c: -g, a: vi, b: vi });
                }
                if b != 0.0 {
                    q_rows[i].push(Term::Prod { c: b, a: vi, b: vi });
                }
                continue;
            }
            if g != 0.0 {
                p_rows[i].push(Term::Cos { c: -g, vi, vk, ti, tk });
                q_rows[i].push(Term::Sin { c: -g, vi, vk, ti, tk });
            }
            if b != 0.0 {
                p_rows[i].push(Term::Sin { c: -b, vi, vk, ti, tk });
                q_rows[i].push(Term::Cos { c: b, vi, vk, ti, tk });
            }
        }
        for (i, (p, q)) in p_rows.into_iter().zip(q_rows).enumerate() {
            let id = tn.buses[i].id;
            out.eq.push(Constraint::new(format!("t{}.TN.bus{id}.Pbal", t + 1), p));
            out.eq.push(Constraint::new(format!("t{}.TN.bus{id}.Qbal", t + 1), q));
        }
    }
    out
}

/// DistFlow on every feeder and period. For each line i→k
///
/// ```txt
/// v_k − v_i + 2 (r P_ik + x Q_ik) − (r² + x²) ℓ_ik = 0
/// ℓ_ik v_i − P_ik² − Q_ik² = 0
/// ```
///
/// and at each node j, with p_j the net injection (exchange at the
/// substation, DG, ESS and PV output minus served load),
///
/// ```txt
/// p_j + (P_parent − r ℓ_parent) − Σ_children P_jc = 0
/// ```
///
/// and the same for Q with x.
pub fn add_dn_power_flow(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let mut out = ConstraintSet::default();
    for (t, slots) in idx.periods.iter().enumerate() {
        for (f, feeder) in case.feeders.iter().enumerate() {
            let s = &slots.feeders[f];
            let prefix = format!("t{}.{}", t + 1, feeder.id);
            let oriented = feeder.oriented_lines().expect("validated feeder is radial");
            let mut p_rows: Vec<Expr> = vec![Expr::default(); feeder.nodes.len()];
            let mut q_rows: Vec<Expr> = vec![Expr::default(); feeder.nodes.len()];
            for ol in &oriented {
                let line = &feeder.lines[ol.line];
                let (pv, qv, lv) = (s.line_p[ol.line], s.line_q[ol.line], s.line_l[ol.line]);
                let (vi, vk) = (s.v[ol.parent], s.v[ol.child]);
                let name = format!("{prefix}.line{}-{}", line.from_node, line.to_node);
                let drop = Expr::default()
                    .lin(1.0, vk)
                    .lin(-1.0, vi)
                    .lin(2.0 * line.r, pv)
                    .lin(2.0 * line.x, qv)
                    .lin(-(line.r * line.r + line.x * line.x), lv);
                out.eq.push(Constraint::new(format!("{name}.vdrop"), drop));
                let current = Expr::default().prod(1.0, lv, vi).prod(-1.0, pv, pv).prod(-1.0, qv, qv);
                out.eq.push(Constraint::new(format!("{name}.current"), current));

                p_rows[ol.child].push(Term::Lin { c: 1.0, i: pv });
                p_rows[ol.child].push(Term::Lin { c: -line.r, i: lv });
                q_rows[ol.child].push(Term::Lin { c: 1.0, i: qv });
                q_rows[ol.child].push(Term::Lin { c: -line.x, i: lv });
                p_rows[ol.parent].push(Term::Lin { c: -1.0, i: pv });
                q_rows[ol.parent].push(Term::Lin { c: -1.0, i: qv });
            }
            let sub = feeder.substation_index().expect("validated feeder has a substation");
            p_rows[sub].push(Term::Lin { c: 1.0, i: s.grid_p });
            q_rows[sub].push(Term::Lin { c: 1.0, i: s.grid_q });
            let mut inject = |node: usize, p: usize, q: usize| {
                if let Some(j) = feeder.node_index(node) {
                    p_rows[j].push(Term::Lin { c: 1.0, i: p });
                    q_rows[j].push(Term::Lin { c: 1.0, i: q });
                }
            };
            for (k, d) in feeder.dgs.iter().enumerate() {
                inject(d.node, s.dg_p[k], s.dg_q[k]);
            }
            for (k, e) in feeder.esss.iter().enumerate() {
                inject(e.node, s.ess_p[k], s.ess_q[k]);
            }
            for (k, pv) in feeder.pvs.iter().enumerate() {
                inject(pv.node, s.pv_p[k], s.pv_q[k]);
            }
            for j in 0..feeder.nodes.len() {
                if let Some(v) = s.served_p[j] {
                    p_rows[j].push(Term::Lin { c: -1.0, i: v });
                }
                if let Some(v) = s.served_q[j] {
                    q_rows[j].push(Term::Lin { c: -1.0, i: v });
                }
            }
            for (j, (p, q)) in p_rows.into_iter().zip(q_rows).enumerate() {
                let id = feeder.nodes[j].id;
                out.eq.push(Constraint::new(format!("{prefix}.node{id}.Pbal"), p));
                out.eq.push(Constraint::new(format!("{prefix}.node{id}.Qbal"), q));
            }
        }
    }
    out
}

/// Storage losses, converter rating and state-of-charge windows:
///
/// ```txt
/// r_eq P² + r_cvt Q² − loss · v_node = 0              every period
/// P² + Q² − S_max² <= 0                               every period
/// 0 <= E_spl − Σ_{t<=τ} (P_t + loss_t) Δt <= E_max    every prefix τ
/// ```
///
/// P is positive when discharging.
pub fn add_ess_constraints(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let dt = case.scenario.delta_t;
    let mut out = ConstraintSet::default();
    for (t, slots) in idx.periods.iter().enumerate() {
        for (f, feeder) in case.feeders.iter().enumerate() {
            let s = &slots.feeders[f];
            for (k, e) in feeder.esss.iter().enumerate() {
                let name = format!("t{}.{}.ess{}", t + 1, feeder.id, k + 1);
                let node = feeder.node_index(e.node).expect("validated ESS node");
                let (p, q, loss) = (s.ess_p[k], s.ess_q[k], s.ess_loss[k]);
                let loss_eq = Expr::default().prod(e.r_eq, p, p).prod(e.r_cvt, q, q).prod(-1.0, loss, s.v[node]);
                out.eq.push(Constraint::new(format!("{name}.loss"), loss_eq));
                let circle = Expr::constant(-e.s_max * e.s_max).prod(1.0, p, p).prod(1.0, q, q);
                out.ineq.push(Constraint::new(format!("{name}.mva"), circle));
            }
        }
    }
    for (f, feeder) in case.feeders.iter().enumerate() {
        for (k, e) in feeder.esss.iter().enumerate() {
            // drawn(τ) = Σ_{t<=τ} (P_t + loss_t) Δt
            let mut drawn = Expr::default();
            for (t, slots) in idx.periods.iter().enumerate() {
                let s = &slots.feeders[f];
                drawn.push(Term::Lin { c: dt, i: s.ess_p[k] });
                drawn.push(Term::Lin { c: dt, i: s.ess_loss[k] });
                let name = format!("t{}.{}.ess{}", t + 1, feeder.id, k + 1);
                // E_spl − drawn >= 0  <=>  drawn − E_spl <= 0
                let mut low = drawn.clone();
                low.constant = -e.e_surplus;
                out.ineq.push(Constraint::new(format!("{name}.energy_min"), low));
                // E_spl − drawn − E_max <= 0
                let mut high = Expr::constant(e.e_surplus - e.e_max);
                high.terms.extend(drawn.terms.iter().map(|t| match *t {
                    Term::Lin { c, i } => Term::Lin { c: -c, i },
                    other => other,
                }));
                out.ineq.push(Constraint::new(format!("{name}.energy_max"), high));
            }
        }
    }
    out
}

/// Fixed power-factor band `−pf P <= Q <= pf P`. Periods with no PV
/// available fix P and Q to zero through bounds instead, so the band is only
/// emitted when the cap is positive.
pub fn add_pv_constraints(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let mut out = ConstraintSet::default();
    for (t, slots) in idx.periods.iter().enumerate() {
        for (f, feeder) in case.feeders.iter().enumerate() {
            let s = &slots.feeders[f];
            for (k, pv) in feeder.pvs.iter().enumerate() {
                if case.pv_cap(f, k, t) <= 0.0 {
                    continue;
                }
                let name = format!("t{}.{}.pv{}", t + 1, feeder.id, k + 1);
                let pf = pv.power_factor;
                let up = Expr::default().lin(1.0, s.pv_q[k]).lin(-pf, s.pv_p[k]);
                let lo = Expr::default().lin(-1.0, s.pv_q[k]).lin(-pf, s.pv_p[k]);
                out.ineq.push(Constraint::new(format!("{name}.q_max"), up));
                out.ineq.push(Constraint::new(format!("{name}.q_min"), lo));
            }
        }
    }
    out
}

/// Consensus at each boundary bus: the bus's served load equals the
/// feeder's import, and the squared bus voltage equals the substation's.
pub fn add_boundary(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let mut out = ConstraintSet::default();
    let positions = case.boundary_bus_positions();
    for (t, slots) in idx.periods.iter().enumerate() {
        for (f, feeder) in case.feeders.iter().enumerate() {
            let b = positions[f].expect("validated boundary bus");
            let s = &slots.feeders[f];
            let tn = &slots.tn;
            let sub = feeder.substation_index().expect("validated feeder has a substation");
            let name = format!("t{}.{}.boundary", t + 1, feeder.id);
            let (Some(bp), Some(bq)) = (tn.served_p[b], tn.served_q[b]) else { unreachable!("boundary buses always carry exchange slots") };
            out.eq.push(Constraint::new(format!("{name}.P"), Expr::default().lin(1.0, bp).lin(-1.0, s.grid_p)));
            out.eq.push(Constraint::new(format!("{name}.Q"), Expr::default().lin(1.0, bq).lin(-1.0, s.grid_q)));
            out.eq.push(Constraint::new(format!("{name}.V"), Expr::default().prod(1.0, tn.vm[b], tn.vm[b]).lin(-1.0, s.v[sub])));
        }
    }
    out
}

/// Optional `|P_g,t+1 − P_g,t| <= R` for every central generator.
pub fn add_ramp_limits(case: &CoupledCase, idx: &VariableIndex) -> ConstraintSet {
    assert_per_unit(case);
    let mut out = ConstraintSet::default();
    let Some(r) = case.scenario.ramp_limit else {
        return out;
    };
    for t in 1..idx.periods.len() {
        let (prev, cur) = (&idx.periods[t - 1].tn, &idx.periods[t].tn);
        for (g, gen) in case.transmission.generators.iter().enumerate() {
            let name = format!("t{}.TN.gen{}@bus{}", t + 1, g + 1, gen.bus);
            let up = Expr::constant(-r).lin(1.0, cur.gen_p[g]).lin(-1.0, prev.gen_p[g]);
            let down = Expr::constant(-r).lin(-1.0, cur.gen_p[g]).lin(1.0, prev.gen_p[g]);
            out.ineq.push(Constraint::new(format!("{name}.ramp_up"), up));
            out.ineq.push(Constraint::new(format!("{name}.ramp_down"), down));
        }
    }
    out
}

/// Variable bounds. Angles lie in [−π/2, π/2] with the reference angle
/// fixed at zero; line flows, squared currents and ESS dispatch and losses
/// are left free (ℓ >= 0 and the ESS box follow from the equalities and the
/// MVA circle).
pub fn apply_bounds(case: &CoupledCase, idx: &VariableIndex) -> (Vec<f64>, Vec<f64>) {
    assert_per_unit(case);
    let n = idx.n();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut up = vec![f64::INFINITY; n];
    let mut set = |i: usize, (l, u): (f64, f64)| {
        lo[i] = l;
        up[i] = u;
    };
    let tn = &case.transmission;
    let s_max = case.scenario.intertie_s_max;
    let reference = tn.reference_bus();
    for (t, slots) in idx.periods.iter().enumerate() {
        let s = &slots.tn;
        for (i, bus) in tn.buses.iter().enumerate() {
            set(s.vm[i], (bus.v_min, bus.v_max));
            set(s.va[i], if i == reference { (0.0, 0.0) } else { (-FRAC_PI_2, FRAC_PI_2) });
            let exchange = case.feeder_at_bus(i).is_some();
            if let Some(v) = s.served_p[i] {
                set(v, if exchange { (-s_max, s_max) } else { case.tn_load(i, t).p_range() });
            }
            if let Some(v) = s.served_q[i] {
                set(v, if exchange { (-s_max, s_max) } else { case.tn_load(i, t).q_range() });
            }
        }
        for (g, gen) in tn.generators.iter().enumerate() {
            set(s.gen_p[g], (gen.p_min, gen.p_max));
            set(s.gen_q[g], (gen.q_min, gen.q_max));
        }
        for (f, feeder) in case.feeders.iter().enumerate() {
            let fs = &slots.feeders[f];
            for (j, node) in feeder.nodes.iter().enumerate() {
                set(fs.v[j], (node.v_sq_min, node.v_sq_max));
                let load = case.dn_load(f, j, t);
                if let Some(v) = fs.served_p[j] {
                    set(v, load.p_range());
                }
                if let Some(v) = fs.served_q[j] {
                    set(v, load.q_range());
                }
            }
            for (k, d) in feeder.dgs.iter().enumerate() {
                set(fs.dg_p[k], (d.p_min, d.p_max));
                set(fs.dg_q[k], (d.q_min, d.q_max));
            }
            for (k, pv) in feeder.pvs.iter().enumerate() {
                let cap = case.pv_cap(f, k, t);
                set(fs.pv_p[k], (0.0, cap));
                let qcap = pv.power_factor * cap;
                set(fs.pv_q[k], (-qcap, qcap));
            }
            set(fs.grid_p, (-s_max, s_max));
            set(fs.grid_q, (-s_max, s_max));
        }
    }
    (lo, up)
}

/// Flat start: V = 1, θ = 0, v = 1, ℓ = 0, served loads at their critical
/// floor, generator, DG and PV outputs at bound midpoints, exchanges and ESS
/// dispatch at zero. Values are clipped into the bounds; the solver moves
/// them strictly inside.
pub fn default_start(case: &CoupledCase, idx: &VariableIndex, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    assert_per_unit(case);
    let mut x = vec![0.0; idx.n()];
    let mid = |i: usize| {
        let (l, u) = (lower[i], upper[i]);
        if l.is_finite() && u.is_finite() {
            0.5 * (l + u)
        } else {
            0.0
        }
    };
    for (t, slots) in idx.periods.iter().enumerate() {
        let s = &slots.tn;
        for i in 0..s.vm.len() {
            x[s.vm[i]] = 1.0;
            x[s.va[i]] = 0.0;
            let exchange = case.feeder_at_bus(i).is_some();
            if let (Some(v), false) = (s.served_p[i], exchange) {
                x[v] = case.tn_load(i, t).p_critical;
            }
            if let (Some(v), false) = (s.served_q[i], exchange) {
                x[v] = case.tn_load(i, t).q_critical;
            }
        }
        for k in 0..s.gen_p.len() {
            x[s.gen_p[k]] = mid(s.gen_p[k]);
            x[s.gen_q[k]] = mid(s.gen_q[k]);
        }
        for (f, fs) in slots.feeders.iter().enumerate() {
            for (j, &v) in fs.v.iter().enumerate() {
                x[v] = 1.0;
                let load = case.dn_load(f, j, t);
                if let Some(p) = fs.served_p[j] {
                    x[p] = load.p_critical;
                }
                if let Some(q) = fs.served_q[j] {
                    x[q] = load.q_critical;
                }
            }
            for &i in fs.dg_p.iter().chain(&fs.dg_q).chain(&fs.pv_p).chain(&fs.pv_q) {
                x[i] = mid(i);
            }
        }
    }
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
    x
}
