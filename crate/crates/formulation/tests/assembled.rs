mod common;

use approx::assert_abs_diff_eq;
use common::*;
use tdrestore_core::*;
use tdrestore_formulation::*;
use tdrestore_nlp::*;

fn eq_values(f: &Formulation, x: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; f.problem.n_eq()];
    f.problem.functions.eq_values(x, &mut c);
    c
}

fn row_value(f: &Formulation, c: &[f64], name: &str) -> f64 {
    c[f.problem.eq_names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no row {name}"))]
}

fn tight() -> SolverOptions {
    SolverOptions { kkt_tolerance: 1e-10, ..SolverOptions::default() }
}

#[test]
fn empty_case_is_feasible_at_flat_start() {
    let tn = TransmissionNetwork { base_mva: 100.0, buses: vec![bus(1, 0.0, 0.0)], branches: Vec::new(), generators: Vec::new() };
    let scenario = ScenarioConfig { periods: 1, ..ScenarioConfig::default() };
    let case = CoupledCase::new(tn, Vec::new(), scenario, ProfileSeries::flat(1));
    let f = assemble(&case).unwrap();
    assert_eq!(f.problem.n(), 2);
    let x0 = f.default_start();
    assert_eq!(x0, [1.0, 0.0]);
    assert_eq!(f.problem.functions.objective(&x0), 0.0);
    assert!(eq_values(&f, &x0).iter().all(|&c| c == 0.0));
}

#[test]
fn published_counts_for_bundled_case() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let p = &f.problem;
    assert_eq!(p.n(), 6 * f.index.per_period());
    assert_eq!(p.var_names.len(), p.n());
    assert_eq!(p.lower.len(), p.n());
    assert_eq!(p.upper.len(), p.n());
    assert_eq!(p.functions.eq_jacobian_structure().iter().map(|e| e.0).max().unwrap() + 1, p.n_eq());
    assert_eq!(p.functions.ineq_jacobian_structure().iter().map(|e| e.0).max().unwrap() + 1, p.n_ineq());
    // 14 buses x 2 + 39 nodes x 2 + 36 lines x 2 + 3 ESS losses + 3 feeders x 3 boundary rows.
    assert_eq!(p.n_eq(), 6 * (28 + 78 + 72 + 3 + 9));
}

#[test]
fn second_case_changes_only_bounds_and_weights() {
    let a = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let b = assemble(&bundled(BundledCaseId::CaseStudy2)).unwrap();
    let (pa, pb) = (&a.problem, &b.problem);
    assert_eq!(pa.var_names, pb.var_names);
    assert_eq!(pa.eq_names, pb.eq_names);
    assert_eq!(pa.ineq_names, pb.ineq_names);
    assert_eq!(pa.functions.eq_jacobian_structure(), pb.functions.eq_jacobian_structure());
    assert_eq!(pa.functions.ineq_jacobian_structure(), pb.functions.ineq_jacobian_structure());
    assert_eq!(pa.functions.hessian_structure(), pb.functions.hessian_structure());
    let x = random_interior_point(&a, 3);
    assert_eq!(eq_values(&a, &x), eq_values(&b, &x));
    let changed: Vec<&str> =
        (0..pa.n()).filter(|&i| pa.lower[i] != pb.lower[i] || pa.upper[i] != pb.upper[i]).map(|i| pa.var_names[i].as_str()).collect();
    assert!(!changed.is_empty());
    assert!(changed.iter().all(|n| n.contains("gen")), "{changed:?}");
    assert_ne!(pa.functions.objective(&x), pb.functions.objective(&x));
}

#[test]
fn derivatives_match_finite_differences_at_seeded_points() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    for seed in 0..5 {
        let x = random_interior_point(&f, seed);
        let report = check_derivatives(&f.problem, &x, 1e-6).unwrap();
        assert!(report.is_ok(), "seed {seed}: {:?}", report.flagged.first());
        assert!(report.max_error() < 1e-5);
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy2).with_scenario(|s| s.ramp_limit = Some(30.0))).unwrap();
    let x = random_interior_point(&f, 11);
    let eq: Vec<f64> = (0..f.problem.n_eq()).map(|k| ((k * 7 % 13) as f64 - 6.0) / 6.0).collect();
    let ineq: Vec<f64> = (0..f.problem.n_ineq()).map(|k| (k % 5) as f64 * 0.25).collect();
    let (err, flagged) = check_hessian(&f.problem, &x, 1e-7, &eq, &ineq, 1e-6).unwrap();
    assert!(flagged.is_empty(), "{:?}", flagged.first());
    assert!(err < 1e-5);
}

#[test]
fn random_points_are_interior_and_seeded() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let x = random_interior_point(&f, 7);
    assert_eq!(x, random_interior_point(&f, 7));
    assert_ne!(x, random_interior_point(&f, 8));
    for i in 0..x.len() {
        let (l, u) = (f.problem.lower[i], f.problem.upper[i]);
        assert!(l == u || (x[i] > l && x[i] < u), "{}", f.problem.var_names[i]);
    }
}

#[test]
fn flat_start_sits_inside_bounds_with_loads_at_their_floor() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let x = f.default_start();
    for i in 0..x.len() {
        let (l, u) = (f.problem.lower[i], f.problem.upper[i]);
        if l == u {
            assert_eq!(x[i], l);
            continue;
        }
        match f.index.kind(i) {
            VarKind::TnServedP | VarKind::TnServedQ | VarKind::DnServedP | VarKind::DnServedQ if l > -1.0 => {
                // Critical value is the end nearer zero; for negative loads that is the upper end.
                assert!(x[i] == l || x[i] == u, "{}", f.problem.var_names[i]);
            }
            _ => assert!(x[i] > l && x[i] < u, "{} = {} not in ({l}, {u})", f.problem.var_names[i], x[i]),
        }
    }
}

#[test]
fn fully_critical_load_is_pinned() {
    let mut case = bundled(BundledCaseId::CaseStudy1);
    let b = case.transmission.bus_index(4).unwrap();
    let bus = &mut case.transmission.buses[b];
    bus.p_load_critical = bus.p_load_total;
    let f = assemble(&case).unwrap();
    let x0 = f.default_start();
    for p in &f.index.periods {
        let v = p.tn.served_p[b].unwrap();
        assert_eq!(f.problem.lower[v], f.problem.upper[v]);
        assert_eq!(x0[v], f.problem.lower[v]);
    }
    let r = solve(&f.problem, &x0, &SolverOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    let v = f.index.periods[2].tn.served_p[b].unwrap();
    assert_eq!(r.x[v], f.problem.lower[v]);
}

/// Branch losses of the transmission network at `x`, from the series
/// conductance of each branch.
fn tn_losses(case: &CoupledCase, idx: &VariableIndex, x: &[f64], t: usize) -> f64 {
    let tn = &case.transmission;
    let s = &idx.periods[t].tn;
    tn.branches
        .iter()
        .map(|br| {
            let i = tn.bus_index(br.from_bus).unwrap();
            let k = tn.bus_index(br.to_bus).unwrap();
            let g = br.r / (br.r * br.r + br.x * br.x);
            let (vi, vk) = (x[s.vm[i]], x[s.vm[k]]);
            g * (vi * vi + vk * vk - 2.0 * vi * vk * (x[s.va[i]] - x[s.va[k]]).cos())
        })
        .sum()
}

#[test]
fn balance_rows_sum_to_generation_minus_load_minus_losses() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let (case, idx) = (&f.case, &f.index);
    for seed in 0..3 {
        let x = random_interior_point(&f, 100 + seed);
        let c = eq_values(&f, &x);
        for (t, p) in idx.periods.iter().enumerate() {
            let prefix = format!("t{}", t + 1);
            let tn_rows: f64 = case.transmission.buses.iter().map(|b| row_value(&f, &c, &format!("{prefix}.TN.bus{}.Pbal", b.id))).sum();
            let gen: f64 = p.tn.gen_p.iter().map(|&g| x[g]).sum();
            let served: f64 = p.tn.served_p.iter().flatten().map(|&v| x[v]).sum();
            assert_abs_diff_eq!(tn_rows, gen - served - tn_losses(case, idx, &x, t), epsilon = 1e-10);

            for (k, feeder) in case.feeders.iter().enumerate() {
                let s = &p.feeders[k];
                let rows: f64 = feeder.nodes.iter().map(|n| row_value(&f, &c, &format!("{prefix}.{}.node{}.Pbal", feeder.id, n.id))).sum();
                let inject: f64 = [s.grid_p].iter().chain(&s.dg_p).chain(&s.ess_p).chain(&s.pv_p).map(|&i| x[i]).sum();
                let served: f64 = s.served_p.iter().flatten().map(|&v| x[v]).sum();
                let losses: f64 = feeder.lines.iter().zip(&s.line_l).map(|(l, &v)| l.r * x[v]).sum();
                assert_abs_diff_eq!(rows, inject - served - losses, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn solved_system_closes_energy_balance() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let r = solve(&f.problem, &f.default_start(), &tight()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    let (case, x) = (&f.case, &r.x);
    for (t, p) in f.index.periods.iter().enumerate() {
        let mut generation: f64 = p.tn.gen_p.iter().map(|&g| x[g]).sum();
        let mut served = 0.0;
        for (i, v) in p.tn.served_p.iter().enumerate() {
            if let (Some(v), None) = (v, case.feeder_at_bus(i)) {
                served += x[*v];
            }
        }
        let mut losses = tn_losses(case, &f.index, x, t);
        for (k, feeder) in case.feeders.iter().enumerate() {
            let s = &p.feeders[k];
            generation += s.dg_p.iter().chain(&s.ess_p).chain(&s.pv_p).map(|&i| x[i]).sum::<f64>();
            served += s.served_p.iter().flatten().map(|&v| x[v]).sum::<f64>();
            losses += feeder.lines.iter().zip(&s.line_l).map(|(l, &v)| l.r * x[v]).sum::<f64>();
        }
        assert!((generation - served - losses).abs() < 1e-8, "t{}: {:e}", t + 1, generation - served - losses);
    }
}

#[test]
fn solved_feeder_voltages_follow_from_the_substation() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let r = solve(&f.problem, &f.default_start(), &tight()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    let x = &r.x;
    for p in &f.index.periods {
        for (k, feeder) in f.case.feeders.iter().enumerate() {
            let s = &p.feeders[k];
            let mut v = vec![f64::NAN; feeder.nodes.len()];
            let sub = feeder.substation_index().unwrap();
            v[sub] = x[s.v[sub]];
            // Oriented lines are listed parents first.
            for ol in feeder.oriented_lines().unwrap() {
                let line = &feeder.lines[ol.line];
                let (pv, qv, lv) = (x[s.line_p[ol.line]], x[s.line_q[ol.line]], x[s.line_l[ol.line]]);
                v[ol.child] = v[ol.parent] - 2.0 * (line.r * pv + line.x * qv) + (line.r * line.r + line.x * line.x) * lv;
            }
            for j in 0..v.len() {
                assert!((v[j] - x[s.v[j]]).abs() < 1e-8, "{} node {}", feeder.id, feeder.nodes[j].id);
            }
        }
    }
}

#[test]
fn extracted_solution_mirrors_the_index() {
    let f = assemble(&bundled(BundledCaseId::CaseStudy1)).unwrap();
    let x = random_interior_point(&f, 5);
    let sol = extract_solution(&f.index, &x);
    assert_eq!(sol.periods.len(), 6);
    let p = &sol.periods[4];
    let s = &f.index.periods[4];
    assert_eq!(p.transmission.vm[7], x[s.tn.vm[7]]);
    assert_eq!(p.transmission.gen[1].q, x[s.tn.gen_q[1]]);
    assert_eq!(p.transmission.served[0], None);
    assert_eq!(p.feeders[1].lines[3].l, x[s.feeders[1].line_l[3]]);
    assert_eq!(p.feeders[2].ess[0].loss, x[s.feeders[2].ess_loss[0]]);
    assert_eq!(p.feeders[0].grid.p, x[s.feeders[0].grid_p]);
}
