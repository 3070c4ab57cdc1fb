//! The multi-period restoration problem as a nonlinear program: AC power
//! flow on the transmission network, DistFlow on each feeder, storage and PV
//! limits, boundary consensus, and a weighted energy-not-served objective
//! with a central-generation penalty.

pub mod build;
pub mod expr;
pub mod extract;
pub mod index;

use tdrestore_core::{to_per_unit, validate_case, CoupledCase, UnitsError, ValidationOutcome};
use tdrestore_nlp::NlpProblem;

pub use build::{
    add_boundary, add_dn_power_flow, add_ess_constraints, add_pv_constraints, add_ramp_limits, add_tn_power_flow, admittance, apply_bounds,
    build_objective, default_start, ObjectiveBreakdown, ObjectiveParts,
};
pub use expr::{Constraint, ConstraintSet, Expr, ExprProblem, Term};
pub use extract::extract_solution;
pub use index::{index_variables, FeederSlots, PeriodSlots, TnSlots, VarKind, VariableIndex};

#[derive(Debug, thiserror::Error)]
pub enum FormulationError {
    #[error("case failed validation:\n{0}")]
    Invalid(ValidationOutcome),
    #[error(transparent)]
    Units(#[from] UnitsError),
}

/// An assembled problem together with the per-unit case and layout it was
/// built from.
#[derive(Debug)]
pub struct Formulation {
    /// The case in per-unit.
    pub case: CoupledCase,
    pub index: VariableIndex,
    pub objective: ObjectiveParts,
    pub constraints: ConstraintSet,
    pub problem: NlpProblem,
}

impl Formulation {
    /// Flat start for this problem.
    pub fn default_start(&self) -> Vec<f64> {
        default_start(&self.case, &self.index, &self.problem.lower, &self.problem.upper)
    }
}

/// Validates `case`, converts it to per-unit and builds the full problem.
pub fn assemble(case: &CoupledCase) -> Result<Formulation, FormulationError> {
    let outcome = validate_case(case);
    if !outcome.is_ok() {
        return Err(FormulationError::Invalid(outcome));
    }
    let case = to_per_unit(case)?;
    let index = index_variables(&case);
    let objective = build_objective(&case, &index);
    let mut constraints = add_tn_power_flow(&case, &index);
    constraints.extend(add_dn_power_flow(&case, &index));
    constraints.extend(add_ess_constraints(&case, &index));
    constraints.extend(add_pv_constraints(&case, &index));
    constraints.extend(add_boundary(&case, &index));
    constraints.extend(add_ramp_limits(&case, &index));
    let (lower, upper) = apply_bounds(&case, &index);
    let functions = ExprProblem::new(
        index.n(),
        objective.combined(),
        constraints.eq.iter().map(|c| c.expr.clone()).collect(),
        constraints.ineq.iter().map(|c| c.expr.clone()).collect(),
    );
    let problem = NlpProblem {
        lower,
        upper,
        var_names: index.names().to_vec(),
        eq_names: constraints.eq.iter().map(|c| c.name.clone()).collect(),
        ineq_names: constraints.ineq.iter().map(|c| c.name.clone()).collect(),
        functions: Box::new(functions),
    };
    Ok(Formulation { case, index, objective, constraints, problem })
}

/// A seeded random point strictly inside the bounds of `f`'s problem.
/// Bounded variables are drawn uniformly from the middle 90% of their range;
/// free variables (line flows, currents, ESS dispatch) from small ranges
/// around plausible values, with squared currents and losses positive.
pub fn random_interior_point(f: &Formulation, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let p = &f.problem;
    (0..p.n())
        .map(|i| {
            let (l, u) = (p.lower[i], p.upper[i]);
            if l == u {
                return l;
            }
            if l.is_finite() && u.is_finite() {
                return l + (u - l) * rng.gen_range(0.05..0.95);
            }
            match f.index.kind(i) {
                VarKind::LineCurrentSq | VarKind::EssLoss => rng.gen_range(1e-4..0.05),
                _ => rng.gen_range(-0.3..0.3),
            }
        })
        .collect()
}
