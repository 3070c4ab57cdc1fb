use std::fmt;

/// Callbacks of a smooth nonlinear program
///
/// ```txt
///     min f(x)   s.t.   c(x) = 0,   d(x) <= 0,   lower <= x <= upper
/// ```
///
/// Jacobian and Hessian sparsity patterns are fixed: the `*_structure`
/// methods return the same pattern on every call, and the `*_values`
/// methods fill values in that order. Hessian entries are `(row, col)` with
/// `row >= col`.
pub trait NlpFunctions: Send + Sync {
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn eq_values(&self, x: &[f64], out: &mut [f64]);
    fn ineq_values(&self, x: &[f64], out: &mut [f64]);

    fn eq_jacobian_structure(&self) -> &[(usize, usize)];
    fn eq_jacobian_values(&self, x: &[f64], out: &mut [f64]);
    fn ineq_jacobian_structure(&self) -> &[(usize, usize)];
    fn ineq_jacobian_values(&self, x: &[f64], out: &mut [f64]);

    fn hessian_structure(&self) -> &[(usize, usize)];
    /// Hessian of `obj_factor * f + eq_mult . c + ineq_mult . d`.
    fn hessian_values(&self, x: &[f64], obj_factor: f64, eq_mult: &[f64], ineq_mult: &[f64], out: &mut [f64]);
}

/// A nonlinear program with bounds and labels.
pub struct NlpProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_names: Vec<String>,
    pub eq_names: Vec<String>,
    pub ineq_names: Vec<String>,
    pub functions: Box<dyn NlpFunctions>,
}

impl NlpProblem {
    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_names.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_names.len()
    }

    /// True when the variable has equal bounds and is held constant.
    pub fn is_fixed(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }
}

impl fmt::Debug for NlpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlpProblem").field("n", &self.n()).field("n_eq", &self.n_eq()).field("n_ineq", &self.n_ineq()).finish()
    }
}
