//! Central-difference verification of user derivatives.

use std::fmt;

use crate::problem::NlpProblem;

/// Relative error above which an entry is flagged.
pub const RELATIVE_TOLERANCE: f64 = 1e-5;
/// Absolute differences below this are never flagged.
pub const ABSOLUTE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Gradient,
    EqJacobian,
    IneqJacobian,
    Hessian,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Block::Gradient => "gradient",
            Block::EqJacobian => "equality Jacobian",
            Block::IneqJacobian => "inequality Jacobian",
            Block::Hessian => "Lagrangian Hessian",
        })
    }
}

#[derive(Debug, Clone)]
pub struct FlaggedEntry {
    pub block: Block,
    /// Constraint name, "objective", or for the Hessian the first variable.
    pub row: String,
    pub variable: String,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

impl fmt::Display for FlaggedEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}, {}]: analytic {:e}, numeric {:e}, relative error {:.2e}",
            self.block, self.row, self.variable, self.analytic, self.numeric, self.relative_error
        )
    }
}

/// Largest relative error per block. Entries whose absolute difference is
/// below the noise floor count as exact.
#[derive(Debug, Clone, Default)]
pub struct DerivativeReport {
    pub gradient_error: f64,
    pub eq_jacobian_error: f64,
    pub ineq_jacobian_error: f64,
    /// Largest absolute analytic/numeric difference over both constraint
    /// Jacobians, floor included.
    pub largest_jacobian_difference: f64,
    pub flagged: Vec<FlaggedEntry>,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.gradient_error.max(self.eq_jacobian_error).max(self.ineq_jacobian_error)
    }

    pub fn is_ok(&self) -> bool {
        self.flagged.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("point has length {got}, problem has {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite evaluation when perturbing {0}")]
    NonFinite(String),
}

struct Comparison {
    max_error: f64,
    max_difference: f64,
    flagged: Vec<FlaggedEntry>,
}

impl Comparison {
    fn new() -> Self {
        Comparison { max_error: 0.0, max_difference: 0.0, flagged: Vec::new() }
    }

    /// `scale` is the magnitude of the differenced function values, used to
    /// estimate roundoff in the quotient.
    #[allow(clippy::too_many_arguments)]
    fn compare(&mut self, block: Block, row: &str, var: &str, a: f64, n: f64, scale: f64, step: f64) {
        let diff = (a - n).abs();
        self.max_difference = self.max_difference.max(diff);
        let noise = 16.0 * f64::EPSILON * scale / step;
        if diff <= ABSOLUTE_FLOOR.max(noise) {
            return;
        }
        let rel = diff / a.abs().max(n.abs());
        self.max_error = self.max_error.max(rel);
        if rel > RELATIVE_TOLERANCE {
            self.flagged.push(FlaggedEntry {
                block,
                row: row.to_string(),
                variable: var.to_string(),
                analytic: a,
                numeric: n,
                relative_error: rel,
            });
        }
    }
}

fn column_index(n: usize, structure: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut cols = vec![Vec::new(); n];
    for (k, &(r, c)) in structure.iter().enumerate() {
        cols[c].push((r, k));
    }
    cols
}

/// Compares the gradient and both constraint Jacobians at `x` against
/// central differences with step `step`, including entries outside the
/// declared sparsity pattern.
pub fn check_derivatives(problem: &NlpProblem, x: &[f64], step: f64) -> Result<DerivativeReport, CheckError> {
    if !(step > 0.0) {
        return Err(CheckError::BadStep(step));
    }
    let n = problem.n();
    if x.len() != n {
        return Err(CheckError::Dimension { expected: n, got: x.len() });
    }
    let f = &problem.functions;
    let (me, mi) = (problem.n_eq(), problem.n_ineq());
    let mut grad = vec![0.0; n];
    f.gradient(x, &mut grad);
    let jc_struct = f.eq_jacobian_structure();
    let jd_struct = f.ineq_jacobian_structure();
    let mut jc = vec![0.0; jc_struct.len()];
    let mut jd = vec![0.0; jd_struct.len()];
    f.eq_jacobian_values(x, &mut jc);
    f.ineq_jacobian_values(x, &mut jd);
    let jc_cols = column_index(n, jc_struct);
    let jd_cols = column_index(n, jd_struct);

    let mut g_cmp = Comparison::new();
    let mut c_cmp = Comparison::new();
    let mut d_cmp = Comparison::new();
    let mut xp = x.to_vec();
    let (mut cp, mut cm) = (vec![0.0; me], vec![0.0; me]);
    let (mut dp, mut dm) = (vec![0.0; mi], vec![0.0; mi]);
    let mut col_c = vec![0.0; me];
    let mut col_d = vec![0.0; mi];
    for j in 0..n {
        xp[j] = x[j] + step;
        let fp = f.objective(&xp);
        f.eq_values(&xp, &mut cp);
        f.ineq_values(&xp, &mut dp);
        xp[j] = x[j] - step;
        let fm = f.objective(&xp);
        f.eq_values(&xp, &mut cm);
        f.ineq_values(&xp, &mut dm);
        xp[j] = x[j];
        let finite = fp.is_finite() && fm.is_finite() && cp.iter().chain(&cm).chain(&dp).chain(&dm).all(|v| v.is_finite());
        if !finite {
            return Err(CheckError::NonFinite(problem.var_names[j].clone()));
        }
        let var = &problem.var_names[j];
        let h2 = 2.0 * step;

        g_cmp.compare(Block::Gradient, "objective", var, grad[j], (fp - fm) / h2, fp.abs().max(fm.abs()), step);

        col_c.iter_mut().for_each(|v| *v = 0.0);
        for &(r, k) in &jc_cols[j] {
            col_c[r] += jc[k];
        }
        for r in 0..me {
            let scale = cp[r].abs().max(cm[r].abs());
            c_cmp.compare(Block::EqJacobian, &problem.eq_names[r], var, col_c[r], (cp[r] - cm[r]) / h2, scale, step);
        }
        col_d.iter_mut().for_each(|v| *v = 0.0);
        for &(r, k) in &jd_cols[j] {
            col_d[r] += jd[k];
        }
        for r in 0..mi {
            let scale = dp[r].abs().max(dm[r].abs());
            d_cmp.compare(Block::IneqJacobian, &problem.ineq_names[r], var, col_d[r], (dp[r] - dm[r]) / h2, scale, step);
        }
    }
    let mut flagged = g_cmp.flagged;
    flagged.extend(c_cmp.flagged);
    flagged.extend(d_cmp.flagged);
    Ok(DerivativeReport {
        gradient_error: g_cmp.max_error,
        eq_jacobian_error: c_cmp.max_error,
        ineq_jacobian_error: d_cmp.max_error,
        largest_jacobian_difference: c_cmp.max_difference.max(d_cmp.max_difference),
        flagged,
    })
}

/// Compares the Hessian of `obj_factor * f + eq_mult . c + ineq_mult . d`
/// against central differences of its analytic gradient. Returns the largest
/// relative error and the flagged entries.
pub fn check_hessian(
    problem: &NlpProblem,
    x: &[f64],
    obj_factor: f64,
    eq_mult: &[f64],
    ineq_mult: &[f64],
    step: f64,
) -> Result<(f64, Vec<FlaggedEntry>), CheckError> {
    if !(step > 0.0) {
        return Err(CheckError::BadStep(step));
    }
    let n = problem.n();
    let f = &problem.functions;
    let jc_struct = f.eq_jacobian_structure();
    let jd_struct = f.ineq_jacobian_structure();
    let lagrangian_gradient = |x: &[f64]| {
        let mut g = vec![0.0; n];
        f.gradient(x, &mut g);
        g.iter_mut().for_each(|v| *v *= obj_factor);
        let mut jc = vec![0.0; jc_struct.len()];
        let mut jd = vec![0.0; jd_struct.len()];
        f.eq_jacobian_values(x, &mut jc);
        f.ineq_jacobian_values(x, &mut jd);
        for (&(r, c), v) in jc_struct.iter().zip(&jc) {
            g[c] += v * eq_mult[r];
        }
        for (&(r, c), v) in jd_struct.iter().zip(&jd) {
            g[c] += v * ineq_mult[r];
        }
        g
    };
    let h_struct = f.hessian_structure();
    let mut h = vec![0.0; h_struct.len()];
    f.hessian_values(x, obj_factor, eq_mult, ineq_mult, &mut h);
    let mut dense_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(r, c), &v) in h_struct.iter().zip(&h) {
        dense_cols[c].push((r, v));
        if r != c {
            dense_cols[r].push((c, v));
        }
    }
    let mut cmp = Comparison::new();
    let mut xp = x.to_vec();
    let mut col = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + step;
        let gp = lagrangian_gradient(&xp);
        xp[j] = x[j] - step;
        let gm = lagrangian_gradient(&xp);
        xp[j] = x[j];
        if gp.iter().chain(&gm).any(|v| !v.is_finite()) {
            return Err(CheckError::NonFinite(problem.var_names[j].clone()));
        }
        col.iter_mut().for_each(|v| *v = 0.0);
        for &(r, v) in &dense_cols[j] {
            col[r] += v;
        }
        for i in 0..n {
            let num = (gp[i] - gm[i]) / (2.0 * step);
            let scale = gp[i].abs().max(gm[i].abs());
            cmp.compare(Block::Hessian, &problem.var_names[i], &problem.var_names[j], col[i], num, scale, step);
        }
    }
    Ok((cmp.max_error, cmp.flagged))
}
