mod common;

use common::*;
use tdrestore_nlp::*;

#[test]
fn quadratic_is_exact() {
    let r = check_derivatives(&bounded_quadratic(), &[4.2], 1e-6).unwrap();
    assert!(r.is_ok());
    assert!(r.max_error() < 1e-9, "{}", r.max_error());
}

#[test]
fn hs071_passes() {
    let p = hs071();
    let x = [1.5, 4.0, 3.5, 1.4];
    let r = check_derivatives(&p, &x, 1e-6).unwrap();
    assert!(r.is_ok(), "{:?}", r.flagged);
    assert!(r.max_error() < 1e-5);
    let (err, flagged) = check_hessian(&p, &x, 0.7, &[1.3], &[0.4], 1e-6).unwrap();
    assert!(flagged.is_empty(), "{flagged:?}");
    assert!(err < 1e-5);
}

#[test]
fn corrupted_jacobian_entry_is_named() {
    let dense = Dense::new(
        2,
        1,
        0,
        Box::new(|x| x[0] + x[1]),
        Box::new(|_, g| g.fill(1.0)),
        Box::new(|x, c| c[0] = x[0] * x[0] + x[1] * x[1] - 2.0),
        Box::new(|x, j| {
            j[0] = 2.0 * x[0];
            j[1] = 3.0 * x[1];
        }),
        none(),
        none(),
        Box::new(|_, _, _, _, h| h.fill(0.0)),
    );
    let mut p = dense.into_problem(vec![0.0; 2], vec![5.0; 2]);
    p.eq_names = vec!["arc".into()];
    p.var_names = vec!["a".into(), "b".into()];
    let r = check_derivatives(&p, &[1.0, 1.0], 1e-6).unwrap();
    assert_eq!(r.flagged.len(), 1);
    let f = &r.flagged[0];
    assert_eq!((f.block, f.row.as_str(), f.variable.as_str()), (Block::EqJacobian, "arc", "b"));
    assert!((f.analytic - 3.0).abs() < 1e-12);
    assert!((f.numeric - 2.0).abs() < 1e-6);
    assert!(f.to_string().contains("[arc, b]"));
}

#[test]
fn entries_missing_from_pattern_are_caught() {
    // Analytic gradient forgets the x2 term entirely.
    let p = Dense::new(
        2,
        0,
        0,
        Box::new(|x| x[0] * x[1]),
        Box::new(|x, g| {
            g[0] = x[1];
            g[1] = 0.0;
        }),
        none(),
        none(),
        none(),
        none(),
        Box::new(|_, _, _, _, h| h.fill(0.0)),
    )
    .into_problem(vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2]);
    let r = check_derivatives(&p, &[2.0, 3.0], 1e-6).unwrap();
    assert_eq!(r.flagged.len(), 1);
    assert_eq!(r.flagged[0].variable, "x2");
    assert_eq!(r.gradient_error, 1.0);
}

#[test]
fn bad_step_is_rejected() {
    assert!(matches!(check_derivatives(&bounded_quadratic(), &[1.0], 0.0), Err(CheckError::BadStep(_))));
}
