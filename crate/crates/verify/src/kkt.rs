use tdrestore_nlp::{NlpProblem, SolveResult};

/// Recomputes the KKT residual of `result` from fresh function evaluations:
/// the inf-norm of Lagrangian stationarity over non-fixed variables, bound
/// and inequality complementarity, equality residuals and slack
/// consistency. Multipliers are taken as reported, i.e. for the objective
/// scaled by `result.objective_scale`.
pub fn recompute_kkt_residual(problem: &NlpProblem, result: &SolveResult) -> f64 {
    let fns = &problem.functions;
    let x = &result.x;
    let (n, me, mi) = (problem.n(), problem.n_eq(), problem.n_ineq());
    let m = &result.multipliers;

    let mut grad = vec![0.0; n];
    fns.gradient(x, &mut grad);
    let mut r: Vec<f64> = grad.iter().map(|g| result.objective_scale * g).collect();
    let mut jc = vec![0.0; fns.eq_jacobian_structure().len()];
    fns.eq_jacobian_values(x, &mut jc);
    for (&(row, col), v) in fns.eq_jacobian_structure().iter().zip(&jc) {
        r[col] += v * m.eq[row];
    }
    let mut jd = vec![0.0; fns.ineq_jacobian_structure().len()];
    fns.ineq_jacobian_values(x, &mut jd);
    for (&(row, col), v) in fns.ineq_jacobian_structure().iter().zip(&jd) {
        r[col] += v * m.ineq[row];
    }

    let mut err = 0.0f64;
    for i in (0..n).filter(|&i| !problem.is_fixed(i)) {
        err = err.max((r[i] - m.lower[i] + m.upper[i]).abs());
        if problem.lower[i].is_finite() {
            err = err.max(((x[i] - problem.lower[i]) * m.lower[i]).abs());
        }
        if problem.upper[i].is_finite() {
            err = err.max(((problem.upper[i] - x[i]) * m.upper[i]).abs());
        }
    }
    let mut c = vec![0.0; me];
    fns.eq_values(x, &mut c);
    err = c.iter().fold(err, |e, v| e.max(v.abs()));
    let mut d = vec![0.0; mi];
    fns.ineq_values(x, &mut d);
    for j in 0..mi {
        err = err.max((d[j] + result.slacks[j]).abs());
        err = err.max((result.slacks[j] * m.ineq[j]).abs());
    }
    err
}
