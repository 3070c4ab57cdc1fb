//! Newton-Raphson AC power flow in polar coordinates.

use nalgebra::{Complex, DMatrix, DVector};
use tdrestore_core::{PowerPair, TransmissionNetwork};

use crate::OracleError;

/// Mismatch tolerance (inf-norm, pu) of both oracles.
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const MAX_NEWTON_ITERATIONS: usize = 50;

/// The bus whose voltage is held and whose injection balances the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackBus {
    /// Position in the bus list.
    pub index: usize,
    pub vm: f64,
    pub va: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    /// Complex injection at every bus, the slack's included.
    pub injections: Vec<PowerPair>,
    pub iterations: usize,
    pub mismatch: f64,
}

/// Dense bus admittance matrix from π-model branches.
pub fn ybus(tn: &TransmissionNetwork) -> DMatrix<Complex<f64>> {
    let n = tn.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for br in &tn.branches {
        let (Some(i), Some(k)) = (tn.bus_index(br.from_bus), tn.bus_index(br.to_bus)) else {
            continue;
        };
        let ys = Complex::new(1.0, 0.0) / Complex::new(br.r, br.x);
        let half = Complex::new(0.0, br.b_shunt / 2.0);
        y[(i, i)] += ys + half;
        y[(k, k)] += ys + half;
        y[(i, k)] -= ys;
        y[(k, i)] -= ys;
    }
    y
}

/// Complex power injected at every bus for the given voltages.
pub fn bus_injections(y: &DMatrix<Complex<f64>>, vm: &[f64], va: &[f64]) -> Vec<Complex<f64>> {
    let v = DVector::from_iterator(vm.len(), vm.iter().zip(va).map(|(&m, &a)| Complex::from_polar(m, a)));
    let i = y * &v;
    v.iter().zip(i.iter()).map(|(v, i)| v * i.conj()).collect()
}

/// Solves for bus voltages given the net injection (generation minus load,
/// pu) at every bus except the slack. Starts flat.
pub fn newton_power_flow(tn: &TransmissionNetwork, injections: &[PowerPair], slack: SlackBus) -> Result<PowerFlowSolution, OracleError> {
    let n = tn.buses.len();
    if injections.len() != n {
        return Err(OracleError::Dimension { expected: n, got: injections.len() });
    }
    if slack.index >= n {
        return Err(OracleError::Dimension { expected: n, got: slack.index + 1 });
    }
    let y = ybus(tn);
    let pq: Vec<usize> = (0..n).filter(|&i| i != slack.index).collect();
    let m = pq.len();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    vm[slack.index] = slack.vm;
    va[slack.index] = slack.va;

    let mismatch = |vm: &[f64], va: &[f64]| -> (DVector<f64>, Vec<Complex<f64>>) {
        let s = bus_injections(&y, vm, va);
        let mut f = DVector::zeros(2 * m);
        for (r, &i) in pq.iter().enumerate() {
            f[r] = s[i].re - injections[i].p;
            f[m + r] = s[i].im - injections[i].q;
        }
        (f, s)
    };

    let (mut f, mut s) = mismatch(&vm, &va);
    let mut norm = f.amax();
    let mut iterations = 0;
    while norm > ORACLE_TOLERANCE {
        if iterations >= MAX_NEWTON_ITERATIONS || !norm.is_finite() {
            return Err(OracleError::Diverged { iterations, mismatch: norm });
        }
        let v: Vec<Complex<f64>> = vm.iter().zip(&va).map(|(&m, &a)| Complex::from_polar(m, a)).collect();
        let current: Vec<Complex<f64>> = (0..n).map(|i| (0..n).map(|k| y[(i, k)] * v[k]).sum()).collect();
        // dS_i/dθ_k and dS_i/d|V_k| in closed form.
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        let j = Complex::new(0.0, 1.0);
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pq.iter().enumerate() {
                let mut ds_da = -j * v[i] * (y[(i, k)] * v[k]).conj();
                let mut ds_dm = v[i] * (y[(i, k)] * v[k] / vm[k]).conj();
                if i == k {
                    ds_da += j * v[i] * current[i].conj();
                    ds_dm += current[i].conj() * v[i] / vm[i];
                }
                jac[(r, c)] = ds_da.re;
                jac[(r, m + c)] = ds_dm.re;
                jac[(m + r, c)] = ds_da.im;
                jac[(m + r, m + c)] = ds_dm.im;
            }
        }
        let dx = jac.lu().solve(&(-&f)).ok_or(OracleError::Singular)?;
        for (r, &i) in pq.iter().enumerate() {
            va[i] += dx[r];
            vm[i] += dx[m + r];
        }
        iterations += 1;
        (f, s) = mismatch(&vm, &va);
        norm = f.amax();
    }
    let injections = s.iter().map(|s| PowerPair { p: s.re, q: s.im }).collect();
    Ok(PowerFlowSolution { vm, va, injections, iterations, mismatch: norm })
}
