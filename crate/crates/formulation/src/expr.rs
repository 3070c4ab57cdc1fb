//! Sparse scalar expressions built from a handful of term shapes, with exact
//! first and second derivatives, and an `NlpFunctions` implementation over
//! rows of them.

use std::collections::BTreeMap;

use tdrestore_nlp::NlpFunctions;

/// One additive term of an expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `c * x[i]`
    Lin { c: f64, i: usize },
    /// `c * x[a] * x[b]`; `a == b` gives a square.
    Prod { c: f64, a: usize, b: usize },
    /// `c * x[vi] * x[vk] * cos(x[ti] - x[tk])`
    Cos { c: f64, vi: usize, vk: usize, ti: usize, tk: usize },
    /// `c * x[vi] * x[vk] * sin(x[ti] - x[tk])`
    Sin { c: f64, vi: usize, vk: usize, ti: usize, tk: usize },
}

impl Term {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Lin { c, i } => c * x[i],
            Term::Prod { c, a, b } => c * x[a] * x[b],
            Term::Cos { c, vi, vk, ti, tk } => c * x[vi] * x[vk] * (x[ti] - x[tk]).cos(),
            Term::Sin { c, vi, vk, ti, tk } => c * x[vi] * x[vk] * (x[ti] - x[tk]).sin(),
        }
    }

    /// Emits `(variable, partial derivative)` pairs. The sequence of
    /// variables does not depend on `x`.
    pub fn gradient(&self, x: &[f64], mut emit: impl FnMut(usize, f64)) {
        match *self {
            Term::Lin { c, i } => emit(i, c),
            Term::Prod { c, a, b } => {
                if a == b {
                    emit(a, 2.0 * c * x[a]);
                } else {
                    emit(a, c * x[b]);
                    emit(b, c * x[a]);
                }
            }
            Term::Cos { c, vi, vk, ti, tk } => {
                let (cs, sn) = ((x[ti] - x[tk]).cos(), (x[ti] - x[tk]).sin());
                let vv = x[vi] * x[vk];
                emit(vi, c * x[vk] * cs);
                emit(vk, c * x[vi] * cs);
                emit(ti, -c * vv * sn);
                emit(tk, c * vv * sn);
            }
            Term::Sin { c, vi, vk, ti, tk } => {
                let (cs, sn) = ((x[ti] - x[tk]).cos(), (x[ti] - x[tk]).sin());
                let vv = x[vi] * x[vk];
                emit(vi, c * x[vk] * sn);
                emit(vk, c * x[vi] * sn);
                emit(ti, c * vv * cs);
                emit(tk, -c * vv * cs);
            }
        }
    }

    /// Emits `(row, col, second derivative)` for each unordered pair once.
    /// The sequence of pairs does not depend on `x`.
    pub fn hessian(&self, x: &[f64], mut emit: impl FnMut(usize, usize, f64)) {
        match *self {
            Term::Lin { .. } => {}
            Term::Prod { c, a, b } => emit(a, b, if a == b { 2.0 * c } else { c }),
            Term::Cos { c, vi, vk, ti, tk } => {
                let (cs, sn) = ((x[ti] - x[tk]).cos(), (x[ti] - x[tk]).sin());
                let vv = x[vi] * x[vk];
                emit(vi, vk, c * cs);
                emit(vi, ti, -c * x[vk] * sn);
                emit(vi, tk, c * x[vk] * sn);
                emit(vk, ti, -c * x[vi] * sn);
                emit(vk, tk, c * x[vi] * sn);
                emit(ti, ti, -c * vv * cs);
                emit(tk, tk, -c * vv * cs);
                emit(ti, tk, c * vv * cs);
            }
            Term::Sin { c, vi, vk, ti, tk } => {
                let (cs, sn) = ((x[ti] - x[tk]).cos(), (x[ti] - x[tk]).sin());
                let vv = x[vi] * x[vk];
                emit(vi, vk, c * sn);
                emit(vi, ti, c * x[vk] * cs);
                emit(vi, tk, -c * x[vk] * cs);
                emit(vk, ti, c * x[vi] * cs);
                emit(vk, tk, -c * x[vi] * cs);
                emit(ti, ti, -c * vv * sn);
                emit(tk, tk, -c * vv * sn);
                emit(ti, tk, c * vv * sn);
            }
        }
    }

    fn max_var(&self) -> usize {
        match *self {
            Term::Lin { i, .. } => i,
            Term::Prod { a, b, .. } => a.max(b),
            Term::Cos { vi, vk, ti, tk, .. } | Term::Sin { vi, vk, ti, tk, .. } => vi.max(vk).max(ti).max(tk),
        }
    }
}

/// `constant + Σ terms`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    pub constant: f64,
    pub terms: Vec<Term>,
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr { constant: c, terms: Vec::new() }
    }

    pub fn lin(mut self, c: f64, i: usize) -> Self {
        self.terms.push(Term::Lin { c, i });
        self
    }

    pub fn prod(mut self, c: f64, a: usize, b: usize) -> Self {
        self.terms.push(Term::Prod { c, a, b });
        self
    }

    pub fn push(&mut self, t: Term) {
        self.terms.push(t);
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value(x)).sum::<f64>()
    }

    /// Dense-free gradient as `(variable, value)` with repeated variables
    /// merged, sorted by variable.
    pub fn gradient(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut g: BTreeMap<usize, f64> = BTreeMap::new();
        for t in &self.terms {
            t.gradient(x, |i, v| *g.entry(i).or_insert(0.0) += v);
        }
        g.into_iter().collect()
    }

    /// Coefficient of the linear term in `i`, summed over repeats.
    pub fn linear_coefficient(&self, i: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                Term::Lin { c, i: j } if j == i => c,
                _ => 0.0,
            })
            .sum()
    }
}

/// A named constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
}

impl Constraint {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        Constraint { name: name.into(), expr }
    }
}

/// Equality rows `expr = 0` and inequality rows `expr <= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub eq: Vec<Constraint>,
    pub ineq: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn extend(&mut self, other: ConstraintSet) {
        self.eq.extend(other.eq);
        self.ineq.extend(other.ineq);
    }
}

struct Rows {
    exprs: Vec<Expr>,
    structure: Vec<(usize, usize)>,
    /// Jacobian slot for each gradient emission, in evaluation order.
    slots: Vec<usize>,
}

impl Rows {
    fn new(exprs: Vec<Expr>, probe: &[f64]) -> Self {
        let mut structure = Vec::new();
        let mut slots = Vec::new();
        for (r, e) in exprs.iter().enumerate() {
            let mut row: BTreeMap<usize, usize> = BTreeMap::new();
            let mut emitted = Vec::new();
            for t in &e.terms {
                t.gradient(probe, |i, _| {
                    row.entry(i).or_insert(0);
                    emitted.push(i);
                });
            }
            let base = structure.len();
            for (k, (col, slot)) in row.iter_mut().enumerate() {
                *slot = base + k;
                structure.push((r, *col));
            }
            slots.extend(emitted.iter().map(|i| row[i]));
        }
        Rows { exprs, structure, slots }
    }

    fn values(&self, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.value(x);
        }
    }

    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        for e in &self.exprs {
            for t in &e.terms {
                t.gradient(x, |_, v| {
                    out[self.slots[k]] += v;
                    k += 1;
                });
            }
        }
    }
}

/// An NLP whose objective and constraints are `Expr` rows.
pub struct ExprProblem {
    n: usize,
    objective: Expr,
    obj_slots: Vec<usize>,
    eq: Rows,
    ineq: Rows,
    hess_structure: Vec<(usize, usize)>,
    /// Hessian slot for each Hessian emission: objective, eq rows, ineq rows.
    hess_slots: Vec<usize>,
}

impl ExprProblem {
    pub fn new(n: usize, objective: Expr, eq: Vec<Expr>, ineq: Vec<Expr>) -> Self {
        let all_terms = objective.terms.iter().chain(eq.iter().chain(&ineq).flat_map(|e| &e.terms));
        if let Some(m) = all_terms.map(Term::max_var).max() {
            assert!(m < n, "term references variable {m} of {n}");
        }
        let probe = vec![1.0; n];
        // The gradient is dense, so the objective's slots are the variables.
        let mut obj_slots = Vec::new();
        for t in &objective.terms {
            t.gradient(&probe, |i, _| obj_slots.push(i));
        }

        let mut hess_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut hess_emitted = Vec::new();
        for e in std::iter::once(&objective).chain(&eq).chain(&ineq) {
            for t in &e.terms {
                t.hessian(&probe, |a, b, _| {
                    let key = (a.max(b), a.min(b));
                    hess_map.entry(key).or_insert(0);
                    hess_emitted.push(key);
                });
            }
        }
        for (k, slot) in hess_map.values_mut().enumerate() {
            *slot = k;
        }
        let hess_structure = hess_map.keys().copied().collect();
        let hess_slots = hess_emitted.iter().map(|key| hess_map[key]).collect();
        ExprProblem { n, obj_slots, objective, eq: Rows::new(eq, &probe), ineq: Rows::new(ineq, &probe), hess_structure, hess_slots }
    }

    pub fn objective_expr(&self) -> &Expr {
        &self.objective
    }

    pub fn eq_exprs(&self) -> &[Expr] {
        &self.eq.exprs
    }

    pub fn ineq_exprs(&self) -> &[Expr] {
        &self.ineq.exprs
    }
}

impl NlpFunctions for ExprProblem {
    fn objective(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.n);
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        for t in &self.objective.terms {
            t.gradient(x, |_, v| {
                grad[self.obj_slots[k]] += v;
                k += 1;
            });
        }
    }

    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        self.eq.values(x, out)
    }

    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        self.ineq.values(x, out)
    }

    fn eq_jacobian_structure(&self) -> &[(usize, usize)] {
        &self.eq.structure
    }

    fn eq_jacobian_values(&self, x: &[f64], out: &mut [f64]) {
        self.eq.jacobian(x, out)
    }

    fn ineq_jacobian_structure(&self) -> &[(usize, usize)] {
        &self.ineq.structure
    }

    fn ineq_jacobian_values(&self, x: &[f64], out: &mut [f64]) {
        self.ineq.jacobian(x, out)
    }

    fn hessian_structure(&self) -> &[(usize, usize)] {
        &self.hess_structure
    }

    fn hessian_values(&self, x: &[f64], obj_factor: f64, eq_mult: &[f64], ineq_mult: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        let rows = std::iter::once((&self.objective, obj_factor))
            .chain(self.eq.exprs.iter().zip(eq_mult.iter().copied()))
            .chain(self.ineq.exprs.iter().zip(ineq_mult.iter().copied()));
        for (e, w) in rows {
            for t in &e.terms {
                t.hessian(x, |_, _, v| {
                    out[self.hess_slots[k]] += w * v;
                    k += 1;
                });
            }
        }
    }
}
