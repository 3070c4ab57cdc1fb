//! Decision-variable layout.
//!
//! Variables are ordered period-major. Within a period the transmission
//! network comes first (per bus V and θ, then generators, then served
//! loads), followed by each feeder in case order (node voltages, line
//! states, DGs, ESSs, PVs, served loads, substation exchange).

use std::collections::HashMap;
use std::fmt;

use tdrestore_core::CoupledCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    BusVoltage,
    BusAngle,
    GenP,
    GenQ,
    TnServedP,
    TnServedQ,
    NodeVoltageSq,
    LineP,
    LineQ,
    LineCurrentSq,
    DgP,
    DgQ,
    EssP,
    EssQ,
    EssLoss,
    PvP,
    PvQ,
    DnServedP,
    DnServedQ,
    GridP,
    GridQ,
}

impl VarKind {
    pub const ALL: [VarKind; 21] = [
        VarKind::BusVoltage,
        VarKind::BusAngle,
        VarKind::GenP,
        VarKind::GenQ,
        VarKind::TnServedP,
        VarKind::TnServedQ,
        VarKind::NodeVoltageSq,
        VarKind::LineP,
        VarKind::LineQ,
        VarKind::LineCurrentSq,
        VarKind::DgP,
        VarKind::DgQ,
        VarKind::EssP,
        VarKind::EssQ,
        VarKind::EssLoss,
        VarKind::PvP,
        VarKind::PvQ,
        VarKind::DnServedP,
        VarKind::DnServedQ,
        VarKind::GridP,
        VarKind::GridQ,
    ];
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TnSlots {
    pub vm: Vec<usize>,
    pub va: Vec<usize>,
    pub gen_p: Vec<usize>,
    pub gen_q: Vec<usize>,
    /// Per bus; present for buses with load or a feeder.
    pub served_p: Vec<Option<usize>>,
    pub served_q: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeederSlots {
    pub v: Vec<usize>,
    /// Indexed like the feeder's line list.
    pub line_p: Vec<usize>,
    pub line_q: Vec<usize>,
    pub line_l: Vec<usize>,
    pub dg_p: Vec<usize>,
    pub dg_q: Vec<usize>,
    pub ess_p: Vec<usize>,
    pub ess_q: Vec<usize>,
    pub ess_loss: Vec<usize>,
    pub pv_p: Vec<usize>,
    pub pv_q: Vec<usize>,
    /// Per node; present for nodes with load.
    pub served_p: Vec<Option<usize>>,
    pub served_q: Vec<Option<usize>>,
    pub grid_p: usize,
    pub grid_q: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSlots {
    pub tn: TnSlots,
    pub feeders: Vec<FeederSlots>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableIndex {
    pub periods: Vec<PeriodSlots>,
    names: Vec<String>,
    kinds: Vec<VarKind>,
    per_period: usize,
}

struct Alloc {
    names: Vec<String>,
    kinds: Vec<VarKind>,
}

impl Alloc {
    fn add(&mut self, kind: VarKind, name: String) -> usize {
        self.names.push(name);
        self.kinds.push(kind);
        self.names.len() - 1
    }
}

/// Lays out every decision variable of `case`.
pub fn index_variables(case: &CoupledCase) -> VariableIndex {
    let mut a = Alloc { names: Vec::new(), kinds: Vec::new() };
    let tn = &case.transmission;
    let mut periods = Vec::with_capacity(case.periods());
    for t in 0..case.periods() {
        let p = format!("t{}", t + 1);
        let mut vm = Vec::new();
        let mut va = Vec::new();
        for bus in &tn.buses {
            vm.push(a.add(VarKind::BusVoltage, format!("{p}.TN.bus{}.V", bus.id)));
            va.push(a.add(VarKind::BusAngle, format!("{p}.TN.bus{}.theta", bus.id)));
        }
        let mut gen_p = Vec::new();
        let mut gen_q = Vec::new();
        for (k, g) in tn.generators.iter().enumerate() {
            gen_p.push(a.add(VarKind::GenP, format!("{p}.TN.gen{}@bus{}.P", k + 1, g.bus)));
            gen_q.push(a.add(VarKind::GenQ, format!("{p}.TN.gen{}@bus{}.Q", k + 1, g.bus)));
        }
        let mut served_p = Vec::new();
        let mut served_q = Vec::new();
        for (i, bus) in tn.buses.iter().enumerate() {
            if bus.has_load() || case.feeder_at_bus(i).is_some() {
                served_p.push(Some(a.add(VarKind::TnServedP, format!("{p}.TN.bus{}.Pload", bus.id))));
                served_q.push(Some(a.add(VarKind::TnServedQ, format!("{p}.TN.bus{}.Qload", bus.id))));
            } else {
                served_p.push(None);
                served_q.push(None);
            }
        }
        let tn_slots = TnSlots { vm, va, gen_p, gen_q, served_p, served_q };

        let mut feeders = Vec::new();
        for f in &case.feeders {
            let fp = format!("{p}.{}", f.id);
            let v = f.nodes.iter().map(|n| a.add(VarKind::NodeVoltageSq, format!("{fp}.node{}.v", n.id))).collect();
            let mut line_p = Vec::new();
            let mut line_q = Vec::new();
            let mut line_l = Vec::new();
            for l in &f.lines {
                let ln = format!("{fp}.line{}-{}", l.from_node, l.to_node);
                line_p.push(a.add(VarKind::LineP, format!("{ln}.P")));
                line_q.push(a.add(VarKind::LineQ, format!("{ln}.Q")));
                line_l.push(a.add(VarKind::LineCurrentSq, format!("{ln}.l")));
            }
            let mut dg_p = Vec::new();
            let mut dg_q = Vec::new();
            for (k, d) in f.dgs.iter().enumerate() {
                dg_p.push(a.add(VarKind::DgP, format!("{fp}.dg{}@node{}.P", k + 1, d.node)));
                dg_q.push(a.add(VarKind::DgQ, format!("{fp}.dg{}@node{}.Q", k + 1, d.node)));
            }
            let mut ess_p = Vec::new();
            let mut ess_q = Vec::new();
            let mut ess_loss = Vec::new();
            for (k, e) in f.esss.iter().enumerate() {
                let en = format!("{fp}.ess{}@node{}", k + 1, e.node);
                ess_p.push(a.add(VarKind::EssP, format!("{en}.P")));
                ess_q.push(a.add(VarKind::EssQ, format!("{en}.Q")));
                ess_loss.push(a.add(VarKind::EssLoss, format!("{en}.loss")));
            }
            let mut pv_p = Vec::new();
            let mut pv_q = Vec::new();
            for (k, pv) in f.pvs.iter().enumerate() {
                pv_p.push(a.add(VarKind::PvP, format!("{fp}.pv{}@node{}.P", k + 1, pv.node)));
                pv_q.push(a.add(VarKind::PvQ, format!("{fp}.pv{}@node{}.Q", k + 1, pv.node)));
            }
            let mut served_p = Vec::new();
            let mut served_q = Vec::new();
            for n in &f.nodes {
                if n.has_load() {
                    served_p.push(Some(a.add(VarKind::DnServedP, format!("{fp}.node{}.Pload", n.id))));
                    served_q.push(Some(a.add(VarKind::DnServedQ, format!("{fp}.node{}.Qload", n.id))));
                } else {
                    served_p.push(None);
                    served_q.push(None);
                }
            }
            let grid_p = a.add(VarKind::GridP, format!("{fp}.grid.P"));
            let grid_q = a.add(VarKind::GridQ, format!("{fp}.grid.Q"));
            feeders.push(FeederSlots {
                v,
                line_p,
                line_q,
                line_l,
                dg_p,
                dg_q,
                ess_p,
                ess_q,
                ess_loss,
                pv_p,
                pv_q,
                served_p,
                served_q,
                grid_p,
                grid_q,
            });
        }
        periods.push(PeriodSlots { tn: tn_slots, feeders });
    }
    let per_period = if case.periods() == 0 { 0 } else { a.names.len() / case.periods() };
    VariableIndex { periods, names: a.names, kinds: a.kinds, per_period }
}

impl VariableIndex {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// Variables per period; identical for every period.
    pub fn per_period(&self) -> usize {
        self.per_period
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, i: usize) -> VarKind {
        self.kinds[i]
    }

    /// Period of variable `i` (0-based).
    pub fn period_of(&self, i: usize) -> usize {
        i / self.per_period
    }

    /// Map from variable name to position.
    pub fn lookup(&self) -> HashMap<&str, usize> {
        self.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }

    /// Every slot listed in the per-period tables, in table order.
    pub fn all_slots(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n());
        for p in &self.periods {
            let tn = &p.tn;
            for k in 0..tn.vm.len() {
                out.push(tn.vm[k]);
                out.push(tn.va[k]);
            }
            for k in 0..tn.gen_p.len() {
                out.push(tn.gen_p[k]);
                out.push(tn.gen_q[k]);
            }
            for (sp, sq) in tn.served_p.iter().zip(&tn.served_q) {
                out.extend(sp);
                out.extend(sq);
            }
            for f in &p.feeders {
                out.extend(&f.v);
                for k in 0..f.line_p.len() {
                    out.extend([f.line_p[k], f.line_q[k], f.line_l[k]]);
                }
                for k in 0..f.dg_p.len() {
                    out.extend([f.dg_p[k], f.dg_q[k]]);
                }
                for k in 0..f.ess_p.len() {
                    out.extend([f.ess_p[k], f.ess_q[k], f.ess_loss[k]]);
                }
                for k in 0..f.pv_p.len() {
                    out.extend([f.pv_p[k], f.pv_q[k]]);
                }
                for (sp, sq) in f.served_p.iter().zip(&f.served_q) {
                    out.extend(sp);
                    out.extend(sq);
                }
                out.extend([f.grid_p, f.grid_q]);
            }
        }
        out
    }
}
