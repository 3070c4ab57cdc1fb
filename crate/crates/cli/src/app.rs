//! Subcommands and the exit-code contract.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tdrestore_core::ingest::{load_bundled_by_name, load_case, CaseFileSet};
use tdrestore_core::CoupledCase;
use tdrestore_formulation::{assemble, random_interior_point, Formulation};
use tdrestore_nlp::{check_derivatives, solve, SolveStatus, SolverOptions};
use tdrestore_verify::audit_solution;

use crate::schedule::{emit_boundary_table, emit_generation_table, emit_schedule_csv, read_state, RestorationSchedule, SolverSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tdrestore", version, about = "Coupled transmission/distribution load restoration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a case, audit the result and write reports.
    Solve {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for CSV and JSON reports.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Period shown in the printed tables (1-based).
        #[arg(long, default_value_t = 3)]
        period: usize,
    },
    /// Audit a schedule (`state.csv` from a previous run) against a case.
    Validate {
        #[command(flatten)]
        case: CaseArgs,
        /// The `state.csv` to audit.
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Compare analytic derivatives with finite differences at seeded
    /// random interior points.
    CheckDerivatives {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        points: u64,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// Print a summary of the parsed case.
    ShowCase {
        #[command(flatten)]
        case: CaseArgs,
    },
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Bundled case: case_study_1 or case_study_2.
    #[arg(long, conflicts_with_all = ["case", "feeder", "scenario"])]
    pub bundled: Option<String>,
    /// Transmission network file.
    #[arg(long, requires = "scenario")]
    pub case: Option<PathBuf>,
    /// Feeder file; repeat once per feeder.
    #[arg(long)]
    pub feeder: Vec<PathBuf>,
    /// Scenario file.
    #[arg(long, requires = "case")]
    pub scenario: Option<PathBuf>,
    /// Enables the inter-period ramp limit on central generation (MW per period).
    #[arg(long)]
    pub ramp_limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions { kkt_tolerance: self.tol, max_iterations: self.max_iter, seed: self.seed, ..SolverOptions::default() }
    }
}

impl CaseArgs {
    pub fn load(&self) -> Result<CoupledCase> {
        let case = match (&self.bundled, &self.case, &self.scenario) {
            (Some(name), _, _) => load_bundled_by_name(name)?,
            (None, Some(tn), Some(sc)) => {
                load_case(&CaseFileSet { transmission_path: tn.clone(), feeder_paths: self.feeder.clone(), scenario_path: sc.clone() })?
            }
            _ => bail!("give either --bundled NAME or --case FILE --scenario FILE [--feeder FILE ...]"),
        };
        Ok(match self.ramp_limit {
            Some(r) if !(r > 0.0) => bail!("--ramp-limit must be positive, got {r}"),
            Some(r) => case.with_scenario(|s| s.ramp_limit = Some(r)),
            None => case,
        })
    }
}

fn formulate(args: &CaseArgs) -> Result<Formulation> {
    let case = args.load()?;
    Ok(assemble(&case)?)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve { case, solver, out, period } => run_solve(&case, &solver, out, period),
        Command::Validate { case, schedule } => run_validate(&case, schedule),
        Command::CheckDerivatives { case, seed, points, step } => run_check(&case, seed, points, step),
        Command::ShowCase { case } => run_show(&case),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            EXIT_INPUT
        }
    }
}

/// The error and its causes, skipping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

/// Parses `args` (program name first) and runs; usage errors exit 1.
pub fn run_case<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

fn run_solve(case: &CaseArgs, solver: &SolverArgs, out: Option<PathBuf>, period: usize) -> Result<i32> {
    let f = formulate(case)?;
    if period == 0 || period > f.case.periods() {
        bail!("--period {period} is outside the horizon 1..={}", f.case.periods());
    }
    let opts = solver.options();
    println!("problem: {} variables, {} equalities, {} inequalities", f.problem.n(), f.problem.n_eq(), f.problem.n_ineq());
    let started = Instant::now();
    let result = match solve(&f.problem, &f.default_start(), &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("solver failed: {e}");
            return Ok(EXIT_NONCONVERGED);
        }
    };
    let stats = SolverSummary::new(&result, started.elapsed().as_secs_f64());
    println!("solver: {} after {} iterations, kkt {:.3e}, {:.3} s", stats.status, stats.iterations, stats.kkt_residual, stats.seconds);
    let mut schedule = RestorationSchedule::from_point(&f, result.x.clone());
    schedule.solver = Some(stats);

    if result.status != SolveStatus::Converged {
        eprintln!("NOT CONVERGED ({}); reports are unaudited", schedule.solver.as_ref().unwrap().status);
        if let Some(dir) = &out {
            emit_schedule_csv(&schedule, dir)?;
        }
        return Ok(EXIT_NONCONVERGED);
    }

    let report = audit_solution(&f.case, &schedule.solution)?.with_kkt(result.kkt_residual, opts.kkt_tolerance);
    let passed = report.passed();
    schedule.audit = Some(report);
    print_schedule(&schedule, period)?;
    println!("\naudit:\n{}", schedule.audit.as_ref().unwrap());
    if let Some(dir) = &out {
        emit_schedule_csv(&schedule, dir)?;
        println!("reports written to {}", dir.display());
    }
    Ok(if passed { EXIT_OK } else { EXIT_AUDIT })
}

fn print_schedule(schedule: &RestorationSchedule, period: usize) -> Result<()> {
    let o = &schedule.objective;
    println!(
        "objective: {:.6e} = unserved TN {:.4} + unserved DN {:.4} + central generation {:.6e}",
        o.total, o.unserved_tn, o.unserved_dn, o.central_generation
    );
    println!("\n{}", emit_boundary_table(schedule, period)?);
    println!("{}", emit_generation_table(schedule, period)?);
    println!("served fraction (active power)");
    for t in 1..=schedule.periods() {
        let s = schedule.served_fraction(t)?;
        println!("  t{t}: TN {:.2}  DN {:.2}  total {:.2}", s.transmission, s.distribution, s.total);
    }
    Ok(())
}

fn run_validate(case: &CaseArgs, path: PathBuf) -> Result<i32> {
    let f = formulate(case)?;
    let x = read_state(&f, &path)?;
    let schedule = RestorationSchedule::from_point(&f, x);
    let report = audit_solution(&f.case, &schedule.solution)?;
    println!("{report}");
    Ok(if report.passed() { EXIT_OK } else { EXIT_AUDIT })
}

fn run_check(case: &CaseArgs, seed: u64, points: u64, step: f64) -> Result<i32> {
    let f = formulate(case)?;
    let mut ok = true;
    for s in seed..seed + points {
        let x = random_interior_point(&f, s);
        let r = check_derivatives(&f.problem, &x, step).with_context(|| format!("point with seed {s}"))?;
        println!(
            "seed {s}: gradient {:.2e}  eq jacobian {:.2e}  ineq jacobian {:.2e}  {}",
            r.gradient_error,
            r.eq_jacobian_error,
            r.ineq_jacobian_error,
            if r.is_ok() { "ok" } else { "FLAGGED" }
        );
        for e in r.flagged.iter().take(10) {
            println!("  {e}");
        }
        ok &= r.is_ok();
    }
    Ok(if ok { EXIT_OK } else { EXIT_AUDIT })
}

fn run_show(case: &CaseArgs) -> Result<i32> {
    let c = case.load()?;
    let tn = &c.transmission;
    let s = &c.scenario;
    println!("transmission: {} buses, {} branches, base {} MVA", tn.buses.len(), tn.branches.len(), tn.base_mva);
    let load: f64 = tn.buses.iter().map(|b| b.p_load_total).sum();
    println!("  transmission load {load:.2} MW");
    for g in &tn.generators {
        println!("  gen at bus {:>2}: P [{:.2}, {:.2}] MW, Q [{:.2}, {:.2}] MVAr", g.bus, g.p_min, g.p_max, g.q_min, g.q_max);
    }
    for f in &c.feeders {
        println!(
            "feeder {} at bus {}: {} nodes, {} lines, load {:.3} MW / {:.4} MVAr, {} DG, {} ESS, {} PV",
            f.id,
            f.boundary_bus,
            f.nodes.len(),
            f.lines.len(),
            f.total_p_load(),
            f.total_q_load(),
            f.dgs.len(),
            f.esss.len(),
            f.pvs.len()
        );
    }
    println!(
        "scenario: T = {}, dt = {} h, W_T = {}, W_D = {}, penalty = {:e}/MW, critical fraction {}, ramp limit {}",
        s.periods,
        s.delta_t,
        s.w_t,
        s.w_d,
        s.central_gen_penalty,
        s.critical_fraction,
        s.ramp_limit.map_or("off".to_string(), |r| format!("{r} MW"))
    );
    Ok(EXIT_OK)
}
