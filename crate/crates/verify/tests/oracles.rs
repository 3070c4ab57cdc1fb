use approx::assert_abs_diff_eq;
use tdrestore_core::*;
use tdrestore_verify::*;

fn bus(id: usize) -> TransmissionBus {
    TransmissionBus { id, p_load_total: 0.0, q_load_total: 0.0, p_load_critical: 0.0, q_load_critical: 0.0, v_min: 0.9, v_max: 1.1 }
}

fn two_bus(r: f64, x: f64) -> TransmissionNetwork {
    TransmissionNetwork {
        base_mva: 100.0,
        buses: vec![bus(1), bus(2)],
        branches: vec![TransmissionBranch { from_bus: 1, to_bus: 2, r, x, b_shunt: 0.0 }],
        generators: Vec::new(),
    }
}

fn slack() -> SlackBus {
    SlackBus { index: 0, vm: 1.0, va: 0.0 }
}

fn node(id: usize) -> FeederNode {
    FeederNode { id, p_load_total: 0.0, q_load_total: 0.0, p_load_critical: 0.0, q_load_critical: 0.0, v_sq_min: 0.81, v_sq_max: 1.21 }
}

fn feeder(lines: &[(usize, usize, f64, f64)], nodes: usize) -> DistributionFeeder {
    DistributionFeeder {
        id: "F".into(),
        nodes: (1..=nodes).map(node).collect(),
        lines: lines.iter().map(|&(from_node, to_node, r, x)| FeederLine { from_node, to_node, r, x }).collect(),
        dgs: Vec::new(),
        esss: Vec::new(),
        pvs: Vec::new(),
        substation_node: 1,
        boundary_bus: 1,
    }
}

#[test]
fn zero_injection_gives_flat_voltages() {
    let case = load_bundled(BundledCaseId::CaseStudy1).unwrap();
    let tn = &case.transmission;
    let pf = newton_power_flow(tn, &vec![PowerPair::default(); tn.buses.len()], slack()).unwrap();
    // Line charging lifts voltages slightly; without shunts the start is exact.
    assert!(pf.vm.iter().all(|v| (v - 1.0).abs() < 0.1));
    let mut bare = tn.clone();
    bare.branches.iter_mut().for_each(|b| b.b_shunt = 0.0);
    let pf = newton_power_flow(&bare, &vec![PowerPair::default(); tn.buses.len()], slack()).unwrap();
    assert_eq!(pf.iterations, 0);
    assert!(pf.vm.iter().all(|&v| v == 1.0) && pf.va.iter().all(|&a| a == 0.0));
}

#[test]
fn two_bus_matches_closed_form() {
    // Lossless line, load 0.5 + j0 at bus 2. Q balance at bus 2 gives
    // V2 = cos δ, P balance V2 sin δ / x = 0.5, so V2⁴ − V2² + (0.05)² = 0.
    let pf = newton_power_flow(&two_bus(0.0, 0.1), &[PowerPair::default(), PowerPair { p: -0.5, q: 0.0 }], slack()).unwrap();
    let v2 = ((1.0 + (1.0f64 - 4.0 * 0.05 * 0.05).sqrt()) / 2.0).sqrt();
    let theta2 = -(0.05 / v2).asin();
    assert_abs_diff_eq!(pf.vm[1], v2, epsilon = 1e-10);
    assert_abs_diff_eq!(pf.va[1], theta2, epsilon = 1e-10);
    // The flat-voltage approximation of the angle is close but not exact.
    assert!((theta2 + 0.05f64.asin()).abs() < 1e-4);
    assert_abs_diff_eq!(pf.injections[0].p, 0.5, epsilon = 1e-10);
    assert!(pf.mismatch < ORACLE_TOLERANCE);
}

#[test]
fn impossible_transfer_is_reported_as_divergence() {
    let err = newton_power_flow(&two_bus(0.0, 0.1), &[PowerPair::default(), PowerPair { p: -20.0, q: 0.0 }], slack()).unwrap_err();
    assert!(matches!(err, OracleError::Diverged { .. } | OracleError::Singular), "{err:?}");
}

#[test]
fn newton_rejects_wrong_lengths() {
    let err = newton_power_flow(&two_bus(0.0, 0.1), &[PowerPair::default()], slack()).unwrap_err();
    assert_eq!(err, OracleError::Dimension { expected: 2, got: 1 });
}

#[test]
fn ybus_rows_sum_to_shunts() {
    let case = load_bundled(BundledCaseId::CaseStudy1).unwrap();
    let y = ybus(&case.transmission);
    for i in 0..y.nrows() {
        let sum: nalgebra::Complex<f64> = y.row(i).iter().sum();
        let shunt: f64 = case
            .transmission
            .branches
            .iter()
            .filter(|b| case.transmission.bus_index(b.from_bus) == Some(i) || case.transmission.bus_index(b.to_bus) == Some(i))
            .map(|b| b.b_shunt / 2.0)
            .sum();
        assert_abs_diff_eq!(sum.re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sum.im, shunt, epsilon = 1e-9);
    }
}

#[test]
fn unloaded_feeder_sweeps_to_uniform_voltage() {
    let f = feeder(&[(1, 2, 0.01, 0.02), (2, 3, 0.01, 0.02), (2, 4, 0.02, 0.01)], 4);
    let sw = distflow_sweep(&f, &[PowerPair::default(); 4], 1.05).unwrap();
    assert!(sw.v.iter().all(|&v| v == 1.05));
    assert!(sw.lines.iter().all(|l| l.p == 0.0 && l.q == 0.0 && l.l == 0.0));
    assert_eq!(sw.import, PowerPair::default());
}

#[test]
fn single_line_matches_scalar_fixed_point() {
    let (r, x) = (0.01, 0.02);
    let f = feeder(&[(1, 2, r, x)], 2);
    let sw = distflow_sweep(&f, &[PowerPair::default(), PowerPair { p: 1.0, q: 0.5 }], 1.0).unwrap();
    let mut l = 0.0;
    for _ in 0..100 {
        l = (1.0 + r * l).powi(2) + (0.5 + x * l).powi(2);
    }
    let (p, q) = (1.0 + r * l, 0.5 + x * l);
    assert_abs_diff_eq!(sw.lines[0].l, l, epsilon = 1e-10);
    assert_abs_diff_eq!(sw.v[1], 1.0 - 2.0 * (r * p + x * q) + (r * r + x * x) * l, epsilon = 1e-10);
    assert_abs_diff_eq!(sw.import.p, p, epsilon = 1e-10);
}

#[test]
fn sweep_follows_line_orientation_and_branches() {
    // Lines listed child-first and reversed still orient from the substation.
    let f = feeder(&[(3, 2, 0.01, 0.01), (2, 1, 0.01, 0.01), (4, 2, 0.01, 0.01)], 4);
    let load = [PowerPair::default(), PowerPair { p: 0.1, q: 0.0 }, PowerPair { p: 0.2, q: 0.1 }, PowerPair { p: 0.3, q: 0.0 }];
    let sw = distflow_sweep(&f, &load, 1.0).unwrap();
    let trunk = sw.lines[1];
    let losses: f64 = sw.lines.iter().map(|l| 0.01 * l.l).sum();
    assert_abs_diff_eq!(trunk.p, 0.6 + losses, epsilon = 1e-12);
    assert!(sw.v[2] < sw.v[1] && sw.v[1] < sw.v[0]);
}

#[test]
fn voltage_collapse_is_reported() {
    let f = feeder(&[(1, 2, 0.5, 0.5)], 2);
    let err = distflow_sweep(&f, &[PowerPair::default(), PowerPair { p: 3.0, q: 3.0 }], 1.0).unwrap_err();
    assert!(matches!(err, OracleError::Diverged { .. }));
}

#[test]
fn meshed_feeder_is_rejected() {
    let f = feeder(&[(1, 2, 0.01, 0.01), (2, 3, 0.01, 0.01), (3, 1, 0.01, 0.01)], 3);
    assert!(matches!(distflow_sweep(&f, &[PowerPair::default(); 3], 1.0), Err(OracleError::NotRadial(_))));
}
