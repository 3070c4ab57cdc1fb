//! Restoration schedules in physical units and the tables, CSV files and
//! JSON summary written for each run.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tdrestore_core::{CoupledCase, RestorationSolution};
use tdrestore_formulation::{extract_solution, Formulation, ObjectiveBreakdown};
use tdrestore_nlp::{SolveResult, SolveStatus};
use tdrestore_verify::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("period {period} is outside the horizon 1..={periods}")]
    PeriodOutOfRange { period: usize, periods: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    State { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub status: String,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub seconds: f64,
}

impl SolverSummary {
    pub fn new(result: &SolveResult, seconds: f64) -> Self {
        let status = match result.status {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::InfeasibleDetected => "infeasible_detected",
        };
        SolverSummary {
            status: status.into(),
            iterations: result.iterations,
            kkt_residual: result.kkt_residual,
            objective: result.objective,
            seconds,
        }
    }
}

/// A solved (or candidate) schedule with everything the reports need.
#[derive(Debug, Clone)]
pub struct RestorationSchedule {
    /// The case in per-unit.
    pub case: CoupledCase,
    pub variable_names: Vec<String>,
    /// Solver point, per-unit.
    pub x: Vec<f64>,
    pub solution: RestorationSolution,
    pub objective: ObjectiveBreakdown,
    pub solver: Option<SolverSummary>,
    /// `None` marks an unaudited schedule.
    pub audit: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub period: usize,
    pub feeder: String,
    pub p_mw: f64,
    pub q_mvar: f64,
    pub v_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub period: usize,
    pub bus: usize,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedRow {
    pub period: usize,
    /// `TN` or the feeder id.
    pub network: String,
    /// Bus or node id.
    pub element: usize,
    pub p_served_mw: f64,
    pub p_total_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub variable: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServedFraction {
    pub period: usize,
    pub transmission: f64,
    pub distribution: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub periods: usize,
    pub base_mva: f64,
    pub objective: ObjectiveBreakdown,
    pub served_fraction: Vec<ServedFraction>,
    pub solver: Option<SolverSummary>,
    pub audited: bool,
    pub audit: Option<ValidationReport>,
}

impl RestorationSchedule {
    pub fn from_point(f: &Formulation, x: Vec<f64>) -> Self {
        RestorationSchedule {
            case: f.case.clone(),
            variable_names: f.index.names().to_vec(),
            solution: extract_solution(&f.index, &x),
            objective: f.objective.evaluate(&x),
            x,
            solver: None,
            audit: None,
        }
    }

    pub fn periods(&self) -> usize {
        self.solution.periods.len()
    }

    fn base(&self) -> f64 {
        self.case.scenario.system_base
    }

    fn check_period(&self, period: usize) -> Result<usize, ReportError> {
        if period == 0 || period > self.periods() {
            return Err(ReportError::PeriodOutOfRange { period, periods: self.periods() });
        }
        Ok(period - 1)
    }

    /// Exchange at each boundary, load convention: negative when the feeder
    /// exports to the transmission system.
    pub fn boundary_rows(&self, period: usize) -> Result<Vec<BoundaryRow>, ReportError> {
        let t = self.check_period(period)?;
        let p = &self.solution.periods[t];
        let positions = self.case.boundary_bus_positions();
        Ok(self
            .case
            .feeders
            .iter()
            .enumerate()
            .map(|(f, feeder)| {
                let b = positions[f].expect("validated boundary bus");
                let ex = p.transmission.served[b].unwrap_or_default();
                BoundaryRow {
                    period,
                    feeder: feeder.id.clone(),
                    p_mw: ex.p * self.base(),
                    q_mvar: ex.q * self.base(),
                    v_pu: p.transmission.vm[b],
                }
            })
            .collect())
    }

    pub fn generation_rows(&self, period: usize) -> Result<Vec<GenerationRow>, ReportError> {
        let t = self.check_period(period)?;
        let gen = &self.solution.periods[t].transmission.gen;
        Ok(self
            .case
            .transmission
            .generators
            .iter()
            .zip(gen)
            .map(|(g, pq)| GenerationRow { period, bus: g.bus, p_mw: pq.p * self.base(), q_mvar: pq.q * self.base() })
            .collect())
    }

    /// Served versus total active load for every loaded bus (boundary buses
    /// excluded) and feeder node.
    pub fn served_rows(&self, period: usize) -> Result<Vec<ServedRow>, ReportError> {
        let t = self.check_period(period)?;
        let p = &self.solution.periods[t];
        let base = self.base();
        let mut rows = Vec::new();
        for (i, bus) in self.case.transmission.buses.iter().enumerate() {
            if let (Some(d), None) = (p.transmission.served[i], self.case.feeder_at_bus(i)) {
                rows.push(ServedRow {
                    period,
                    network: "TN".into(),
                    element: bus.id,
                    p_served_mw: d.p * base,
                    p_total_mw: self.case.tn_load(i, t).p_total * base,
                });
            }
        }
        for (f, feeder) in self.case.feeders.iter().enumerate() {
            for (j, node) in feeder.nodes.iter().enumerate() {
                if let Some(d) = p.feeders[f].served[j] {
                    rows.push(ServedRow {
                        period,
                        network: feeder.id.clone(),
                        element: node.id,
                        p_served_mw: d.p * base,
                        p_total_mw: self.case.dn_load(f, j, t).p_total * base,
                    });
                }
            }
        }
        Ok(rows)
    }

    pub fn served_fraction(&self, period: usize) -> Result<ServedFraction, ReportError> {
        let rows = self.served_rows(period)?;
        let ratio = |pred: &dyn Fn(&ServedRow) -> bool| {
            let (s, tot) = rows.iter().filter(|r| pred(r)).fold((0.0, 0.0), |a, r| (a.0 + r.p_served_mw, a.1 + r.p_total_mw));
            if tot > 0.0 {
                s / tot
            } else {
                1.0
            }
        };
        Ok(ServedFraction {
            period,
            transmission: ratio(&|r| r.network == "TN"),
            distribution: ratio(&|r| r.network != "TN"),
            total: ratio(&|_| true),
        })
    }

    pub fn summary(&self) -> Summary {
        Summary {
            periods: self.periods(),
            base_mva: self.base(),
            objective: self.objective,
            served_fraction: (1..=self.periods()).map(|t| self.served_fraction(t).expect("period in range")).collect(),
            solver: self.solver.clone(),
            audited: self.audit.is_some(),
            audit: self.audit.clone(),
        }
    }
}

/// A fixed-precision text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<(String, Vec<f64>)>,
    /// Decimal places per value column.
    pub precision: Vec<usize>,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        write!(f, "{:<8}", self.headers[0])?;
        for h in &self.headers[1..] {
            write!(f, "{h:>12}")?;
        }
        writeln!(f)?;
        for (label, values) in &self.rows {
            write!(f, "{label:<8}")?;
            for (v, &p) in values.iter().zip(&self.precision) {
                // Avoid printing "-0.00".
                let v = if format!("{v:.p$}").parse::<f64>() == Ok(0.0) { 0.0 } else { *v };
                write!(f, "{v:>12.p$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn emit_boundary_table(schedule: &RestorationSchedule, period: usize) -> Result<Table, ReportError> {
    Ok(Table {
        title: format!("Boundary variables, period {period}"),
        headers: vec!["feeder", "P (MW)", "Q (MVAr)", "V (pu)"],
        rows: schedule.boundary_rows(period)?.into_iter().map(|r| (r.feeder, vec![r.p_mw, r.q_mvar, r.v_pu])).collect(),
        precision: vec![2, 2, 4],
    })
}

pub fn emit_generation_table(schedule: &RestorationSchedule, period: usize) -> Result<Table, ReportError> {
    Ok(Table {
        title: format!("Transmission generation, period {period}"),
        headers: vec!["bus", "P (MW)", "Q (MVAr)"],
        rows: schedule.generation_rows(period)?.into_iter().map(|r| (r.bus.to_string(), vec![r.p_mw, r.q_mvar])).collect(),
        precision: vec![2, 2],
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ReportError> {
    let wrap = |source| ReportError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let wrap = |source| ReportError::Csv { path: path.display().to_string(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(wrap)
}

/// Writes `boundary.csv`, `generation.csv`, `served.csv`, `state.csv` and
/// `summary.json` into `dir`, creating it if needed.
pub fn emit_schedule_csv(schedule: &RestorationSchedule, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.display().to_string(), source })?;
    let periods = 1..=schedule.periods();
    let mut boundary = Vec::new();
    let mut generation = Vec::new();
    let mut served = Vec::new();
    for t in periods {
        boundary.extend(schedule.boundary_rows(t)?);
        generation.extend(schedule.generation_rows(t)?);
        served.extend(schedule.served_rows(t)?);
    }
    write_csv(&dir.join("boundary.csv"), boundary)?;
    write_csv(&dir.join("generation.csv"), generation)?;
    write_csv(&dir.join("served.csv"), served)?;
    write_csv(
        &dir.join("state.csv"),
        schedule.variable_names.iter().zip(&schedule.x).map(|(n, &v)| StateRow { variable: n.clone(), value: v }),
    )?;
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&schedule.summary()).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

/// Reads a `state.csv` back into a point for `f`'s variable layout.
pub fn read_state(f: &Formulation, path: &Path) -> Result<Vec<f64>, ReportError> {
    let rows: Vec<StateRow> = read_csv(path)?;
    let lookup = f.index.lookup();
    let mut x = vec![f64::NAN; f.index.n()];
    let err = |message: String| ReportError::State { path: path.display().to_string(), message };
    for r in rows {
        let i = *lookup.get(r.variable.as_str()).ok_or_else(|| err(format!("unknown variable `{}`", r.variable)))?;
        x[i] = r.value;
    }
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(err(format!("missing variable `{}`", f.index.name(i))));
    }
    Ok(x)
}
