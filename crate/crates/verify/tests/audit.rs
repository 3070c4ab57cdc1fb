use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use tdrestore_core::*;
use tdrestore_formulation::{assemble, extract_solution, Formulation};
use tdrestore_nlp::{solve, SolveResult, SolveStatus, SolverOptions};
use tdrestore_verify::*;

struct Run {
    case: CoupledCase,
    formulation: Formulation,
    result: SolveResult,
    solution: RestorationSolution,
}

fn run(id: BundledCaseId) -> Run {
    let case = load_bundled(id).unwrap();
    let formulation = assemble(&case).unwrap();
    let result = solve(&formulation.problem, &formulation.default_start(), &SolverOptions::default()).unwrap();
    assert_eq!(result.status, SolveStatus::Converged);
    let solution = extract_solution(&formulation.index, &result.x);
    Run { case, formulation, result, solution }
}

fn case_study_1() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run(BundledCaseId::CaseStudy1))
}

#[test]
fn converged_case_passes_audit() {
    let r = case_study_1();
    let report = audit_solution(&r.case, &r.solution).unwrap().with_kkt(r.result.kkt_residual, 1e-6);
    assert!(report.passed(), "{report}");
    assert!(report.max_tn_balance_residual < 1e-6);
    assert!(report.max_dn_balance_residual < 1e-6);
    assert!(report.max_boundary_mismatch < 1e-6);
    assert!(report.max_energy_closure < 1e-6);
    assert!(report.oracle_voltage_deviation < 1e-6);
    assert!(report.oracle_flow_deviation < 1e-6);
    assert_eq!(report.max_bound_violation, 0.0);
}

#[test]
fn second_case_passes_audit() {
    let r = run(BundledCaseId::CaseStudy2);
    let report = audit_solution(&r.case, &r.solution).unwrap();
    assert!(report.passed(), "{report}");
}

#[test]
fn per_unit_and_physical_cases_audit_alike() {
    let r = case_study_1();
    let a = audit_solution(&r.case, &r.solution).unwrap();
    let b = audit_solution(&r.formulation.case, &r.solution).unwrap();
    assert_eq!(a, b);
}

#[test]
fn raised_served_load_fails_its_bus_balance() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    let b3 = r.case.transmission.bus_index(3).unwrap();
    sol.periods[1].transmission.served[b3].as_mut().unwrap().p += 0.01;
    let report = audit_solution(&r.case, &sol).unwrap();
    assert!(!report.passed());
    let f = report.find(Check::TnBalance, "bus 3 P").expect("bus 3 named");
    assert_eq!(f.period, Some(2));
    assert_abs_diff_eq!(f.value, 0.01, epsilon = 1e-6);
    assert_abs_diff_eq!(report.max_tn_balance_residual, 0.01, epsilon = 1e-6);
    assert!(report.failures.iter().filter(|f| f.check == Check::TnBalance).all(|f| f.element == "bus 3 P"));
}

#[test]
fn storage_outside_its_rating_is_named() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    let s_max = r.formulation.case.feeders[0].esss[0].s_max;
    let e = &mut sol.periods[3].feeders[0].ess[0];
    let scale = 1.01 * s_max / e.p.hypot(e.q);
    e.p *= scale;
    e.q *= scale;
    let report = audit_solution(&r.case, &sol).unwrap();
    let f = report.find(Check::Bound, "D1 ess1 MVA").expect("ESS named");
    assert_eq!(f.period, Some(4));
    assert_abs_diff_eq!(f.value, 0.01 * s_max, epsilon = 1e-12);
}

#[test]
fn boundary_voltage_mismatch_is_caught() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    let sub = r.case.feeders[2].substation_index().unwrap();
    sol.periods[0].feeders[2].v_sq[sub] += 1e-4;
    let report = audit_solution(&r.case, &sol).unwrap();
    let f = report.find(Check::Boundary, "D3 V").unwrap();
    assert_abs_diff_eq!(f.value, 1e-4, epsilon = 1e-9);
}

#[test]
fn overdrawn_storage_breaks_its_energy_window() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    let e = &r.formulation.case.feeders[1].esss[0];
    // Draw the whole surplus in period 1 and keep discharging in period 2.
    sol.periods[0].feeders[1].ess[0].p = e.e_surplus;
    let report = audit_solution(&r.case, &sol).unwrap();
    let f = report.find(Check::Bound, "D2 ess1 energy").unwrap();
    assert!(f.period.unwrap() >= 1);
}

#[test]
fn out_of_band_voltage_is_a_bound_violation() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    let b = r.case.transmission.bus_index(8).unwrap();
    sol.periods[5].transmission.vm[b] = 1.2;
    let report = audit_solution(&r.case, &sol).unwrap();
    assert!(report.find(Check::Bound, "bus 8 V").is_some());
    assert!(report.find(Check::Oracle, "vs newton").is_some());
}

#[test]
fn wrong_shape_is_an_error() {
    let r = case_study_1();
    let mut sol = r.solution.clone();
    sol.periods.pop();
    assert!(matches!(audit_solution(&r.case, &sol), Err(AuditError::Dimension(_))));
    let mut sol = r.solution.clone();
    sol.periods[2].feeders[1].lines.pop();
    assert!(matches!(audit_solution(&r.case, &sol), Err(AuditError::Dimension(_))));
}

#[test]
fn large_kkt_fails_the_report() {
    let r = case_study_1();
    let report = audit_solution(&r.case, &r.solution).unwrap().with_kkt(1e-3, 1e-6);
    assert!(!report.passed());
    assert_eq!(report.kkt_residual, Some(1e-3));
}

#[test]
fn report_serializes_with_verdict_and_failures() {
    let r = case_study_1();
    let report = audit_solution(&r.case, &r.solution).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert!(v["failures"].as_array().unwrap().is_empty());
    assert!(v["max_tn_balance_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn kkt_residual_recomputes_exactly() {
    let r = case_study_1();
    let kkt = recompute_kkt_residual(&r.formulation.problem, &r.result);
    assert!((kkt - r.result.kkt_residual).abs() <= 1e-10, "{kkt:e} vs {:e}", r.result.kkt_residual);
}

#[test]
fn newton_reproduces_optimizer_voltages() {
    let r = case_study_1();
    let tn = &r.formulation.case.transmission;
    for p in &r.solution.periods {
        let s = &p.transmission;
        let pf = newton_power_flow(tn, &tn_injections(&r.formulation.case, p), SlackBus { index: 0, vm: s.vm[0], va: 0.0 }).unwrap();
        for i in 0..tn.buses.len() {
            assert!((pf.vm[i] - s.vm[i]).abs() < 1e-6);
            assert!((pf.va[i] - s.va[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn sweep_reproduces_second_feeder() {
    let r = case_study_1();
    let case = &r.formulation.case;
    let f = &case.feeders[1];
    for p in &r.solution.periods {
        let fs = &p.feeders[1];
        let mut load: Vec<PowerPair> = fs.served.iter().map(|d| d.unwrap_or_default()).collect();
        for (k, d) in f.dgs.iter().enumerate() {
            let j = f.node_index(d.node).unwrap();
            load[j].p -= fs.dg[k].p;
            load[j].q -= fs.dg[k].q;
        }
        for (k, e) in f.esss.iter().enumerate() {
            let j = f.node_index(e.node).unwrap();
            load[j].p -= fs.ess[k].p;
            load[j].q -= fs.ess[k].q;
        }
        for (k, pv) in f.pvs.iter().enumerate() {
            let j = f.node_index(pv.node).unwrap();
            load[j].p -= fs.pv[k].p;
            load[j].q -= fs.pv[k].q;
        }
        let sub = f.substation_index().unwrap();
        let sw = distflow_sweep(f, &load, fs.v_sq[sub]).unwrap();
        for j in 0..f.nodes.len() {
            assert!((sw.v[j] - fs.v_sq[j]).abs() < 1e-6);
        }
        for (a, b) in sw.lines.iter().zip(&fs.lines) {
            assert!((a.p - b.p).abs() < 1e-6 && (a.q - b.q).abs() < 1e-6 && (a.l - b.l).abs() < 1e-6);
        }
        assert!((sw.import.p - fs.grid.p).abs() < 1e-6);
    }
}
