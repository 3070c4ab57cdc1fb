use crate::model::{CoupledCase, Units};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UnitsError {
    #[error("system base must be positive, got {0}")]
    BadBase(f64),
}

/// Converts powers to per-unit on the system base and energies to per-unit
/// hours. Impedances and voltages are already per-unit in the case files.
/// The central generation penalty stays per MW. A case that is already
/// per-unit is returned unchanged.
pub fn to_per_unit(case: &CoupledCase) -> Result<CoupledCase, UnitsError> {
    let base = case.scenario.system_base;
    if !(base > 0.0) {
        return Err(UnitsError::BadBase(base));
    }
    if case.units == Units::PerUnit {
        return Ok(case.clone());
    }
    let mut pu = case.clone();
    let s = 1.0 / base;
    for bus in &mut pu.transmission.buses {
        bus.p_load_total *= s;
        bus.q_load_total *= s;
        bus.p_load_critical *= s;
        bus.q_load_critical *= s;
    }
    for g in &mut pu.transmission.generators {
        g.p_min *= s;
        g.p_max *= s;
        g.q_min *= s;
        g.q_max *= s;
    }
    for feeder in &mut pu.feeders {
        for node in &mut feeder.nodes {
            node.p_load_total *= s;
            node.q_load_total *= s;
            node.p_load_critical *= s;
            node.q_load_critical *= s;
        }
        for dg in &mut feeder.dgs {
            dg.p_min *= s;
            dg.p_max *= s;
            dg.q_min *= s;
            dg.q_max *= s;
        }
        for ess in &mut feeder.esss {
            ess.e_surplus *= s;
            ess.e_max *= s;
            ess.s_max *= s;
        }
        for pv in &mut feeder.pvs {
            pv.p_max *= s;
        }
    }
    pu.scenario.intertie_s_max *= s;
    if let Some(r) = pu.scenario.ramp_limit.as_mut() {
        *r *= s;
    }
    pu.units = Units::PerUnit;
    Ok(pu)
}
