use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use tdrestore_core::ingest::*;
use tdrestore_core::*;

fn cs1() -> CoupledCase {
    load_bundled(BundledCaseId::CaseStudy1).unwrap()
}

fn cs2() -> CoupledCase {
    load_bundled(BundledCaseId::CaseStudy2).unwrap()
}

#[test]
fn transmission_loads_match_table() {
    let case = cs1();
    let expected = [
        (1, 0.0, 0.0),
        (2, 21.70, 12.70),
        (3, 94.20, 19.0),
        (4, 47.80, -3.90),
        (6, 11.20, 7.50),
        (7, 0.0, 0.0),
        (8, 0.0, 0.0),
        (10, 9.0, 5.80),
        (11, 3.50, 1.80),
        (12, 6.10, 1.60),
        (13, 13.50, 5.80),
    ];
    assert_eq!(case.transmission.buses.len(), 14);
    for (id, p, q) in expected {
        let b = &case.transmission.buses[case.transmission.bus_index(id).unwrap()];
        assert_eq!((b.p_load_total, b.q_load_total), (p, q), "bus {id}");
    }
}

#[test]
fn feeder_loads_replace_boundary_bus_loads() {
    let case = cs1();
    let expected = [("D1", 5, 10.398, 5.0448), ("D2", 9, 34.66, 16.816), ("D3", 14, 17.33, 8.408)];
    for (feeder, (id, bus, p, q)) in case.feeders.iter().zip(expected) {
        assert_eq!(feeder.id, id);
        assert_eq!(feeder.boundary_bus, bus);
        assert_abs_diff_eq!(feeder.total_p_load(), p, epsilon = 1e-12);
        assert_abs_diff_eq!(feeder.total_q_load(), q, epsilon = 1e-12);
        let b = &case.transmission.buses[case.transmission.bus_index(bus).unwrap()];
        assert_eq!(b.p_load_total, 0.0);
    }
}

#[test]
fn der_placement_matches_table() {
    let case = cs1();
    let rows = [(4.0, 3.2, 50.0, 25.0), (1.0, 0.8, 12.5, 6.25), (14.0, 9.0, 50.0, 25.0)];
    for (feeder, (dg_p, dg_q, e, s)) in case.feeders.iter().zip(rows) {
        let dg_nodes: Vec<_> = feeder.dgs.iter().map(|d| d.node).collect();
        assert_eq!(dg_nodes, vec![1, 8]);
        for dg in &feeder.dgs {
            assert_eq!((dg.p_max, dg.q_max), (dg_p, dg_q));
        }
        assert_eq!(feeder.esss.len(), 1);
        assert_eq!(feeder.esss[0].node, 3);
        assert_eq!((feeder.esss[0].e_max, feeder.esss[0].s_max), (e, s));
        assert_eq!(feeder.pvs.len(), 1);
        assert_eq!((feeder.pvs[0].node, feeder.pvs[0].p_max), (11, 3.0));
    }
}

#[test]
fn generator_tables() {
    let table_iv = [
        (1, 332.4, 0.0, 10.0, 0.0),
        (2, 140.0, 0.0, 50.0, -40.0),
        (3, 0.0, 0.0, 40.0, 0.0),
        (6, 0.0, 0.0, 24.0, -6.0),
        (8, 0.0, 0.0, 24.0, -6.0),
    ];
    let table_vii = [
        (1, 114.62, 0.0, 5.26, 0.0),
        (2, 48.28, 0.0, 26.32, -40.0),
        (3, 0.0, 0.0, 21.05, 0.0),
        (6, 0.0, 0.0, 12.63, -6.0),
        (8, 0.0, 0.0, 12.63, -6.0),
    ];
    for (case, table) in [(cs1(), table_iv), (cs2(), table_vii)] {
        let got: Vec<_> = case.transmission.generators.iter().map(|g| (g.bus, g.p_max, g.p_min, g.q_max, g.q_min)).collect();
        assert_eq!(got, table.to_vec());
    }
}

#[test]
fn scenario_weights() {
    let a = cs1().scenario;
    assert_eq!((a.w_t, a.w_d, a.central_gen_penalty, a.critical_fraction), (1.0, 1.0, 1e7, 0.5));
    let b = cs2().scenario;
    assert_eq!((b.w_t, b.w_d), (2.0, 1.0));
}

#[test]
fn bundled_cases_are_valid() {
    for id in BundledCaseId::ALL {
        let case = load_bundled(id).unwrap();
        assert!(validate_case(&case).is_ok(), "{id}");
        assert!(validate_case(&to_per_unit(&case).unwrap()).is_ok(), "{id} per-unit");
    }
}

#[test]
fn bundles_differ_only_in_generators_and_weights() {
    let a = cs1();
    let mut b = cs2();
    assert_ne!(a.transmission.generators, b.transmission.generators);
    b.transmission.generators = a.transmission.generators.clone();
    b.scenario.w_t = a.scenario.w_t;
    b.scenario.w_d = a.scenario.w_d;
    assert_eq!(a, b);
}

#[test]
fn critical_loads_follow_fraction() {
    let case = cs1();
    let f = case.scenario.critical_fraction;
    for b in &case.transmission.buses {
        assert_eq!(b.p_load_critical, f * b.p_load_total);
        assert_eq!(b.q_load_critical, f * b.q_load_total);
    }
    for feeder in &case.feeders {
        for n in &feeder.nodes {
            assert_eq!(n.p_load_critical, f * n.p_load_total);
            assert_eq!(n.q_load_critical, f * n.q_load_total);
        }
    }
}

#[test]
fn validation_is_unit_invariant_for_broken_cases() {
    let mut case = cs1();
    case.feeders[0].esss[0].e_surplus = 60.0;
    case.transmission.buses[2].v_min = 1.2;
    case.feeders[1].lines.push(FeederLine { from_node: 1, to_node: 4, r: 0.01, x: 0.01 });
    let physical = validate_case(&case);
    assert!(!physical.is_ok());
    assert_eq!(physical, validate_case(&to_per_unit(&case).unwrap()));
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let case = cs2();
    let tn_path = dir.path().join("tn.toml");
    std::fs::write(&tn_path, write_transmission(&case.transmission)).unwrap();
    let mut feeder_paths = Vec::new();
    for f in &case.feeders {
        let p = dir.path().join(format!("{}.toml", f.id));
        std::fs::write(&p, write_feeder(f)).unwrap();
        feeder_paths.push(p);
    }
    let sc_path = dir.path().join("scenario.toml");
    std::fs::write(&sc_path, write_scenario(&case.scenario, &case.profiles.feeders[0])).unwrap();
    let files = CaseFileSet { transmission_path: tn_path, feeder_paths, scenario_path: sc_path };
    assert_eq!(load_case(&files).unwrap(), case);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(parse_transmission("/nonexistent/missing.toml"), Err(IngestError::Io { .. })));
}

proptest! {
    #[test]
    fn feeder_round_trip(
        loads in prop::collection::vec((0.0f64..20.0, -5.0f64..5.0), 13),
        v_min in 0.80f64..0.99,
        v_max in 1.01f64..1.2,
        e_frac in 0.0f64..1.0,
    ) {
        let mut feeder = cs1().feeders[0].clone();
        for (node, (p, q)) in feeder.nodes.iter_mut().zip(&loads) {
            node.p_load_total = *p;
            node.q_load_total = *q;
            node.p_load_critical = 0.0;
            node.q_load_critical = 0.0;
            node.v_sq_min = v_min * v_min;
            node.v_sq_max = v_max * v_max;
        }
        feeder.esss[0].e_surplus = e_frac * feeder.esss[0].e_max;
        let once = parse_feeder_str(&write_feeder(&feeder), "a").unwrap();
        let twice = parse_feeder_str(&write_feeder(&once), "b").unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once, &feeder);
    }

    #[test]
    fn transmission_round_trip(scale in 0.0f64..3.0, shift in -0.2f64..0.2) {
        let mut tn = cs1().transmission;
        for b in &mut tn.buses {
            b.p_load_total *= scale;
            b.q_load_total += shift;
            b.p_load_critical = 0.0;
            b.q_load_critical = 0.0;
        }
        let back = parse_transmission_str(&write_transmission(&tn), "rt").unwrap();
        prop_assert_eq!(back, tn);
    }
}
