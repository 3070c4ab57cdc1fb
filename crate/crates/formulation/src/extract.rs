//! Structured solution from a flat solver point.

use tdrestore_core::{EssDispatch, FeederState, LineState, PeriodState, PowerPair, RestorationSolution, TransmissionState};

use crate::index::VariableIndex;

fn pair(x: &[f64], p: usize, q: usize) -> PowerPair {
    PowerPair { p: x[p], q: x[q] }
}

fn optional(x: &[f64], p: Option<usize>, q: Option<usize>) -> Option<PowerPair> {
    match (p, q) {
        (Some(p), Some(q)) => Some(pair(x, p, q)),
        _ => None,
    }
}

/// Reads every slot of `idx` out of `x`, in per-unit.
pub fn extract_solution(idx: &VariableIndex, x: &[f64]) -> RestorationSolution {
    let periods = idx
        .periods
        .iter()
        .map(|slots| {
            let s = &slots.tn;
            let transmission = TransmissionState {
                vm: s.vm.iter().map(|&i| x[i]).collect(),
                va: s.va.iter().map(|&i| x[i]).collect(),
                gen: s.gen_p.iter().zip(&s.gen_q).map(|(&p, &q)| pair(x, p, q)).collect(),
                served: s.served_p.iter().zip(&s.served_q).map(|(&p, &q)| optional(x, p, q)).collect(),
            };
            let feeders = slots
                .feeders
                .iter()
                .map(|f| FeederState {
                    v_sq: f.v.iter().map(|&i| x[i]).collect(),
                    lines: (0..f.line_p.len()).map(|k| LineState { p: x[f.line_p[k]], q: x[f.line_q[k]], l: x[f.line_l[k]] }).collect(),
                    dg: f.dg_p.iter().zip(&f.dg_q).map(|(&p, &q)| pair(x, p, q)).collect(),
                    ess: (0..f.ess_p.len()).map(|k| EssDispatch { p: x[f.ess_p[k]], q: x[f.ess_q[k]], loss: x[f.ess_loss[k]] }).collect(),
                    pv: f.pv_p.iter().zip(&f.pv_q).map(|(&p, &q)| pair(x, p, q)).collect(),
                    served: f.served_p.iter().zip(&f.served_q).map(|(&p, &q)| optional(x, p, q)).collect(),
                    grid: pair(x, f.grid_p, f.grid_q),
                })
                .collect();
            PeriodState { transmission, feeders }
        })
        .collect();
    RestorationSolution { periods }
}
