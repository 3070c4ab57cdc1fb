//! Backward/forward sweep on the DistFlow branch equations of a radial
//! feeder.

use tdrestore_core::{DistributionFeeder, LineState, PowerPair};

use crate::newton::ORACLE_TOLERANCE;
use crate::OracleError;

pub const MAX_SWEEP_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSolution {
    /// Squared voltage per node.
    pub v: Vec<f64>,
    /// Indexed like the feeder's line list, oriented away from the substation.
    pub lines: Vec<LineState>,
    /// Power drawn from the substation.
    pub import: PowerPair,
    pub iterations: usize,
}

/// Fixed-point sweep for a feeder with net load per node (consumption
/// positive, pu) and squared substation voltage `v_sub`.
///
/// Backward: `P_ik = p_k + Σ_children P_kc + r ℓ_ik`, `ℓ_ik = (P² + Q²) / v_i`.
/// Forward: `v_k = v_i − 2 (r P + x Q) + (r² + x²) ℓ`.
pub fn distflow_sweep(feeder: &DistributionFeeder, net_load: &[PowerPair], v_sub: f64) -> Result<SweepSolution, OracleError> {
    let n = feeder.nodes.len();
    if net_load.len() != n {
        return Err(OracleError::Dimension { expected: n, got: net_load.len() });
    }
    let order = feeder.oriented_lines().ok_or_else(|| OracleError::NotRadial(feeder.id.clone()))?;
    let sub = feeder.substation_index().ok_or_else(|| OracleError::NotRadial(feeder.id.clone()))?;
    let mut v = vec![v_sub; n];
    let mut lines = vec![LineState::default(); feeder.lines.len()];
    let mut iterations = 0;
    loop {
        // Power leaving each node towards its children.
        let mut down = vec![PowerPair::default(); n];
        let mut change = 0.0f64;
        for ol in order.iter().rev() {
            let line = &feeder.lines[ol.line];
            let st = &mut lines[ol.line];
            let p = net_load[ol.child].p + down[ol.child].p + line.r * st.l;
            let q = net_load[ol.child].q + down[ol.child].q + line.x * st.l;
            change = change.max((p - st.p).abs()).max((q - st.q).abs());
            st.p = p;
            st.q = q;
            down[ol.parent].p += p;
            down[ol.parent].q += q;
        }
        for ol in &order {
            let line = &feeder.lines[ol.line];
            let st = &mut lines[ol.line];
            let l = (st.p * st.p + st.q * st.q) / v[ol.parent];
            let vk = v[ol.parent] - 2.0 * (line.r * st.p + line.x * st.q) + (line.r * line.r + line.x * line.x) * l;
            change = change.max((l - st.l).abs()).max((vk - v[ol.child]).abs());
            st.l = l;
            v[ol.child] = vk;
        }
        iterations += 1;
        if !change.is_finite() || v.iter().any(|&x| !(x > 0.0)) {
            return Err(OracleError::Diverged { iterations, mismatch: change });
        }
        if change < ORACLE_TOLERANCE * 1e-2 {
            let import = PowerPair { p: net_load[sub].p + down[sub].p, q: net_load[sub].q + down[sub].q };
            return Ok(SweepSolution { v, lines, import, iterations });
        }
        if iterations >= MAX_SWEEP_ITERATIONS {
            return Err(OracleError::Diverged { iterations, mismatch: change });
        }
    }
}
