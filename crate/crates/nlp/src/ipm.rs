//! Primal-dual interior-point method.
//!
//! Inequalities get slacks (`d(x) + s = 0`, `s >= 0`), bounds get barrier
//! terms, and each iteration takes a Newton step on the perturbed KKT
//! conditions. The reduced system
//!
//! ```txt
//!   [ W + Σx + δw I    Jcᵀ      Jdᵀ          ] [dx]
//!   [ Jc              -δc I     0            ] [dy]
//!   [ Jd               0       -S Λ⁻¹ - δc I ] [dλ]
//! ```
//!
//! is factorized by sparse LDLᵀ. `δw` is raised until the inertia is
//! (n, m, 0). The barrier parameter follows the monotone rule: divide by ten
//! whenever the barrier subproblem error drops to μ. Steps respect the
//! fraction-to-boundary rule and are accepted by backtracking on the ℓ₁
//! exact penalty merit function, with one second-order correction try.
//!
//! The objective is scaled by `min(1, 100 / |∇f(x0)|∞)` before solving;
//! reported multipliers belong to the scaled problem.

use log::{debug, trace};

use crate::problem::NlpProblem;
use crate::sparse::{sym_matvec, LdlFactor};

const NONE: usize = usize::MAX;
const KAPPA_SIGMA: f64 = 1e10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub initial_barrier: f64,
    pub step_fraction: f64,
    pub regularization_floor: f64,
    /// Reserved for randomized perturbations; the current algorithm is fully
    /// deterministic and does not draw from it.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kkt_tolerance: 1e-6,
            max_iterations: 500,
            initial_barrier: 0.1,
            step_fraction: 0.995,
            regularization_floor: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    InfeasibleDetected,
}

#[derive(Debug, Clone, Default)]
pub struct Multipliers {
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
    /// Lower and upper bound multipliers, zero for fixed variables and
    /// infinite bounds.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IterationLog {
    pub iteration: usize,
    pub mu: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub step: f64,
    pub regularization: f64,
    /// FNV-1a hash of the bit patterns of the iterate.
    pub x_hash: u64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Inequality slacks, `d(x) + s = 0`.
    pub slacks: Vec<f64>,
    pub multipliers: Multipliers,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Unscaled objective value at `x`.
    pub objective: f64,
    pub objective_scale: f64,
    pub history: Vec<IterationLog>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("start point has length {got}, problem has {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite {0} at the start point")]
    NonFinite(&'static str),
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBounds(String),
}

pub fn hash_iterate(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Function values and derivatives at one point.
struct Eval {
    f: f64,
    grad: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    jc: Vec<f64>,
    jd: Vec<f64>,
}

struct Dims {
    n: usize,
    me: usize,
    mi: usize,
    free: Vec<usize>,
    pos: Vec<usize>,
    lo: Vec<f64>,
    up: Vec<f64>,
}

impl Dims {
    fn nf(&self) -> usize {
        self.free.len()
    }
}

/// Primal-dual iterate over the free variables.
#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    lam: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

struct Solver<'a> {
    p: &'a NlpProblem,
    dims: Dims,
    opts: &'a SolverOptions,
    obj_scale: f64,
    jc_struct: Vec<(usize, usize)>,
    jd_struct: Vec<(usize, usize)>,
    /// KKT lower-triangle entries: Hessian (free-free), then Jc, then Jd.
    kkt_entries: Vec<(usize, usize)>,
    /// Source of each KKT entry value.
    kkt_src: Vec<KktSource>,
    factor: LdlFactor,
    last_delta_w: f64,
    h_vals: Vec<f64>,
}

#[derive(Clone, Copy)]
enum KktSource {
    Hess(usize),
    Jc(usize),
    Jd(usize),
}

impl<'a> Solver<'a> {
    fn new(p: &'a NlpProblem, opts: &'a SolverOptions) -> Self {
        let n = p.n();
        let free: Vec<usize> = (0..n).filter(|&i| !p.is_fixed(i)).collect();
        let mut pos = vec![NONE; n];
        for (k, &i) in free.iter().enumerate() {
            pos[i] = k;
        }
        let dims = Dims {
            n,
            me: p.n_eq(),
            mi: p.n_ineq(),
            lo: free.iter().map(|&i| p.lower[i]).collect(),
            up: free.iter().map(|&i| p.upper[i]).collect(),
            free,
            pos,
        };
        let f = &p.functions;
        let jc_struct = f.eq_jacobian_structure().to_vec();
        let jd_struct = f.ineq_jacobian_structure().to_vec();
        let h_struct = f.hessian_structure().to_vec();
        let nf = dims.nf();
        let mut kkt_entries = Vec::new();
        let mut kkt_src = Vec::new();
        for (k, &(r, c)) in h_struct.iter().enumerate() {
            let (a, b) = (dims.pos[r], dims.pos[c]);
            if a != NONE && b != NONE {
                kkt_entries.push((a.max(b), a.min(b)));
                kkt_src.push(KktSource::Hess(k));
            }
        }
        for (k, &(r, c)) in jc_struct.iter().enumerate() {
            if dims.pos[c] != NONE {
                kkt_entries.push((nf + r, dims.pos[c]));
                kkt_src.push(KktSource::Jc(k));
            }
        }
        for (k, &(r, c)) in jd_struct.iter().enumerate() {
            if dims.pos[c] != NONE {
                kkt_entries.push((nf + dims.me + r, dims.pos[c]));
                kkt_src.push(KktSource::Jd(k));
            }
        }
        let factor = LdlFactor::analyse(nf + dims.me + dims.mi, &kkt_entries);
        debug!("kkt: {} free vars, {} eq, {} ineq, {} entries, nnz(L) = {}", nf, dims.me, dims.mi, kkt_entries.len(), factor.nnz_l());
        Solver {
            p,
            h_vals: vec![0.0; h_struct.len()],
            dims,
            opts,
            obj_scale: 1.0,
            jc_struct,
            jd_struct,
            kkt_entries,
            kkt_src,
            factor,
            last_delta_w: 0.0,
        }
    }

    fn full_x(&self, base: &[f64], xf: &[f64]) -> Vec<f64> {
        let mut x = base.to_vec();
        for (k, &i) in self.dims.free.iter().enumerate() {
            x[i] = xf[k];
        }
        x
    }

    fn values(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let f = &self.p.functions;
        let mut c = vec![0.0; self.dims.me];
        let mut d = vec![0.0; self.dims.mi];
        f.eq_values(x, &mut c);
        f.ineq_values(x, &mut d);
        (f.objective(x), c, d)
    }

    fn evaluate(&self, x: &[f64]) -> Eval {
        let f = &self.p.functions;
        let (fx, c, d) = self.values(x);
        let mut grad = vec![0.0; self.dims.n];
        f.gradient(x, &mut grad);
        let mut jc = vec![0.0; self.jc_struct.len()];
        let mut jd = vec![0.0; self.jd_struct.len()];
        f.eq_jacobian_values(x, &mut jc);
        f.ineq_jacobian_values(x, &mut jd);
        Eval { f: fx, grad, c, d, jc, jd }
    }

    /// Gradient of the scaled Lagrangian over free variables, without the
    /// bound multipliers.
    fn lagrangian_gradient(&self, ev: &Eval, y: &[f64], lam: &[f64]) -> Vec<f64> {
        let dims = &self.dims;
        let mut r: Vec<f64> = dims.free.iter().map(|&i| self.obj_scale * ev.grad[i]).collect();
        for (k, &(row, col)) in self.jc_struct.iter().enumerate() {
            let p = dims.pos[col];
            if p != NONE {
                r[p] += ev.jc[k] * y[row];
            }
        }
        for (k, &(row, col)) in self.jd_struct.iter().enumerate() {
            let p = dims.pos[col];
            if p != NONE {
                r[p] += ev.jd[k] * lam[row];
            }
        }
        r
    }

    /// KKT error of the barrier problem with parameter `mu` (0 for the
    /// original problem).
    fn kkt_error(&self, ev: &Eval, it: &Iterate, mu: f64) -> f64 {
        let dims = &self.dims;
        let lg = self.lagrangian_gradient(ev, &it.y, &it.lam);
        let mut err = 0.0f64;
        for k in 0..dims.nf() {
            err = err.max((lg[k] - it.zl[k] + it.zu[k]).abs());
            if dims.lo[k].is_finite() {
                err = err.max(((it.x[k] - dims.lo[k]) * it.zl[k] - mu).abs());
            }
            if dims.up[k].is_finite() {
                err = err.max(((dims.up[k] - it.x[k]) * it.zu[k] - mu).abs());
            }
        }
        err = err.max(inf_norm(&ev.c));
        for j in 0..dims.mi {
            err = err.max((ev.d[j] + it.s[j]).abs());
            err = err.max((it.s[j] * it.lam[j] - mu).abs());
        }
        err
    }

    fn merit(&self, f: f64, c: &[f64], d: &[f64], xf: &[f64], s: &[f64], mu: f64, nu: f64) -> f64 {
        let dims = &self.dims;
        let mut barrier = 0.0;
        for k in 0..dims.nf() {
            if dims.lo[k].is_finite() {
                barrier += (xf[k] - dims.lo[k]).ln();
            }
            if dims.up[k].is_finite() {
                barrier += (dims.up[k] - xf[k]).ln();
            }
        }
        barrier += s.iter().map(|v| v.ln()).sum::<f64>();
        let theta: f64 = c.iter().map(|v| v.abs()).sum::<f64>() + d.iter().zip(s).map(|(a, b)| (a + b).abs()).sum::<f64>();
        self.obj_scale * f - mu * barrier + nu * theta
    }

    fn kkt_values(&self, ev: &Eval) -> Vec<f64> {
        self.kkt_src
            .iter()
            .map(|src| match *src {
                KktSource::Hess(k) => self.h_vals[k],
                KktSource::Jc(k) => ev.jc[k],
                KktSource::Jd(k) => ev.jd[k],
            })
            .collect()
    }

    /// Factorizes with the smallest `δw` giving inertia (n, m, 0). Returns
    /// the diagonal used and `δw`, or `None` if regularization runs out.
    fn factorize(&mut self, values: &[f64], base_diag: &[f64]) -> Option<(Vec<f64>, f64)> {
        let nf = self.dims.nf();
        let m = self.dims.me + self.dims.mi;
        let floor = self.opts.regularization_floor;
        let mut delta_w = 0.0;
        let mut diag = base_diag.to_vec();
        loop {
            for k in 0..nf {
                diag[k] = base_diag[k] + delta_w;
            }
            let ok = match self.factor.factor(values, &diag) {
                Ok(()) => self.factor.inertia() == (nf, m),
                Err(_) => false,
            };
            if ok {
                if delta_w > 0.0 {
                    self.last_delta_w = delta_w;
                }
                return Some((diag, delta_w));
            }
            delta_w = if delta_w == 0.0 {
                if self.last_delta_w == 0.0 {
                    1e-4
                } else {
                    (self.last_delta_w / 3.0).max(floor)
                }
            } else if self.last_delta_w == 0.0 {
                delta_w * 100.0
            } else {
                delta_w * 8.0
            };
            trace!("inertia correction, delta_w = {delta_w:e}");
            if delta_w > 1e40 {
                return None;
            }
        }
    }

    /// Solves with the current factorization plus a few steps of iterative
    /// refinement against the assembled matrix.
    fn solve_refined(&self, values: &[f64], diag: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut sol = rhs.to_vec();
        self.factor.solve(&mut sol);
        let scale = 1.0 + inf_norm(rhs);
        let mut kx = vec![0.0; rhs.len()];
        for _ in 0..3 {
            sym_matvec(&self.kkt_entries, values, diag, &sol, &mut kx);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
            if inf_norm(&r) <= 1e-15 * scale {
                break;
            }
            self.factor.solve(&mut r);
            for (x, d) in sol.iter_mut().zip(&r) {
                *x += d;
            }
        }
        sol
    }

    /// Newton direction for barrier parameter `mu` with equality residual
    /// `r_c` and inequality residual `r_d` (`d + s` for a normal step).
    #[allow(clippy::too_many_arguments)]
    fn direction(&self, it: &Iterate, lg: &[f64], mu: f64, values: &[f64], diag: &[f64], r_c: &[f64], r_d: &[f64]) -> Direction {
        let dims = &self.dims;
        let nf = dims.nf();
        let mut rhs = Vec::with_capacity(nf + dims.me + dims.mi);
        for k in 0..nf {
            let mut r = lg[k];
            if dims.lo[k].is_finite() {
                r -= mu / (it.x[k] - dims.lo[k]);
            }
            if dims.up[k].is_finite() {
                r += mu / (dims.up[k] - it.x[k]);
            }
            rhs.push(-r);
        }
        rhs.extend(r_c.iter().map(|v| -v));
        for j in 0..dims.mi {
            rhs.push(-r_d[j] - mu / it.lam[j] + it.s[j]);
        }
        let sol = self.solve_refined(values, diag, &rhs);
        let dx = sol[..nf].to_vec();
        let dy = sol[nf..nf + dims.me].to_vec();
        let dlam = sol[nf + dims.me..].to_vec();
        let ds = (0..dims.mi).map(|j| mu / it.lam[j] - it.s[j] - it.s[j] / it.lam[j] * dlam[j]).collect();
        let mut dzl = vec![0.0; nf];
        let mut dzu = vec![0.0; nf];
        for k in 0..nf {
            if dims.lo[k].is_finite() {
                let gap = it.x[k] - dims.lo[k];
                dzl[k] = mu / gap - it.zl[k] - it.zl[k] / gap * dx[k];
            }
            if dims.up[k].is_finite() {
                let gap = dims.up[k] - it.x[k];
                dzu[k] = mu / gap - it.zu[k] + it.zu[k] / gap * dx[k];
            }
        }
        Direction { dx, ds, dy, dlam, dzl, dzu }
    }

    /// Largest step in (0, 1] keeping primal variables a fraction `tau`
    /// away from their bounds.
    fn primal_step_bound(&self, it: &Iterate, dir: &Direction, tau: f64) -> f64 {
        let dims = &self.dims;
        let mut alpha = 1.0f64;
        for k in 0..dims.nf() {
            let d = dir.dx[k];
            if d < 0.0 && dims.lo[k].is_finite() {
                alpha = alpha.min(-tau * (it.x[k] - dims.lo[k]) / d);
            }
            if d > 0.0 && dims.up[k].is_finite() {
                alpha = alpha.min(tau * (dims.up[k] - it.x[k]) / d);
            }
        }
        for (s, ds) in it.s.iter().zip(&dir.ds) {
            if *ds < 0.0 {
                alpha = alpha.min(-tau * s / ds);
            }
        }
        alpha
    }

    fn dual_step_bound(&self, it: &Iterate, dir: &Direction, tau: f64) -> f64 {
        let mut alpha = 1.0f64;
        let pairs = it.zl.iter().zip(&dir.dzl).chain(it.zu.iter().zip(&dir.dzu)).chain(it.lam.iter().zip(&dir.dlam));
        for (z, dz) in pairs {
            if *dz < 0.0 && *z > 0.0 {
                alpha = alpha.min(-tau * z / dz);
            }
        }
        alpha
    }

    /// Keeps bound multipliers within a factor of their primal-dual centre.
    fn safeguard_duals(&self, it: &mut Iterate, mu: f64) {
        let dims = &self.dims;
        let clamp = |z: f64, gap: f64| z.clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
        for k in 0..dims.nf() {
            if dims.lo[k].is_finite() {
                it.zl[k] = clamp(it.zl[k], it.x[k] - dims.lo[k]);
            }
            if dims.up[k].is_finite() {
                it.zu[k] = clamp(it.zu[k], dims.up[k] - it.x[k]);
            }
        }
        for j in 0..dims.mi {
            it.lam[j] = clamp(it.lam[j], it.s[j]);
        }
    }

    fn start_point(&self, x0: &[f64]) -> Vec<f64> {
        let dims = &self.dims;
        dims.free
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let (l, u) = (dims.lo[k], dims.up[k]);
                let mut x = x0[i];
                let pad = |b: f64| if l.is_finite() && u.is_finite() { 1e-3 * (u - l) } else { 1e-3 * b.abs().max(1.0) };
                if l.is_finite() && x <= l + pad(l) {
                    x = l + pad(l);
                }
                if u.is_finite() && x >= u - pad(u) {
                    x = u - pad(u);
                }
                x
            })
            .collect()
    }
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dy: Vec<f64>,
    dlam: Vec<f64>,
    dzl: Vec<f64>,
    dzu: Vec<f64>,
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `problem` from `x0`.
pub fn solve(problem: &NlpProblem, x0: &[f64], opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    if x0.len() != problem.n() {
        return Err(SolveError::Dimension { expected: problem.n(), got: x0.len() });
    }
    for i in 0..problem.n() {
        if problem.lower[i] > problem.upper[i] {
            return Err(SolveError::EmptyBounds(problem.var_names[i].clone()));
        }
    }
    let mut sv = Solver::new(problem, opts);
    let mut base = x0.to_vec();
    for i in 0..problem.n() {
        if problem.is_fixed(i) {
            base[i] = problem.lower[i];
        }
    }
    let xf = sv.start_point(&base);
    let x_full = sv.full_x(&base, &xf);
    let mut ev = sv.evaluate(&x_full);
    if !ev.f.is_finite() {
        return Err(SolveError::NonFinite("objective"));
    }
    if !all_finite(&ev.grad) {
        return Err(SolveError::NonFinite("gradient"));
    }
    if !all_finite(&ev.c) || !all_finite(&ev.d) {
        return Err(SolveError::NonFinite("constraint value"));
    }
    if !all_finite(&ev.jc) || !all_finite(&ev.jd) {
        return Err(SolveError::NonFinite("constraint Jacobian"));
    }
    let gmax = sv.dims.free.iter().fold(0.0f64, |m, &i| m.max(ev.grad[i].abs()));
    sv.obj_scale = if gmax > 100.0 { 100.0 / gmax } else { 1.0 };

    let dims_nf = sv.dims.nf();
    let (me, mi) = (sv.dims.me, sv.dims.mi);
    let mut it = Iterate {
        s: ev.d.iter().map(|d| (-d).max(1e-2)).collect(),
        x: xf,
        y: vec![0.0; me],
        lam: vec![1.0; mi],
        zl: (0..dims_nf).map(|k| if sv.dims.lo[k].is_finite() { 1.0 } else { 0.0 }).collect(),
        zu: (0..dims_nf).map(|k| if sv.dims.up[k].is_finite() { 1.0 } else { 0.0 }).collect(),
    };

    let tol = opts.kkt_tolerance;
    let mu_min = tol / 10.0;
    let mut mu = opts.initial_barrier;
    let mut nu = 1.0f64;
    let mut history = Vec::new();
    let mut last_step = 0.0;
    let mut last_reg = 0.0;
    let mut status = SolveStatus::IterationLimit;
    let mut kkt;
    let mut iteration = 0;

    loop {
        let x_full = sv.full_x(&base, &it.x);
        kkt = sv.kkt_error(&ev, &it, 0.0);
        history.push(IterationLog {
            iteration,
            mu,
            objective: ev.f,
            kkt_residual: kkt,
            step: last_step,
            regularization: last_reg,
            x_hash: hash_iterate(&x_full),
        });
        debug!("iter {iteration:4} f {:+.8e} kkt {kkt:.3e} mu {mu:.1e} alpha {last_step:.3e} dw {last_reg:.1e}", ev.f);
        if kkt <= tol {
            status = SolveStatus::Converged;
            break;
        }
        if iteration >= opts.max_iterations {
            break;
        }
        while mu > mu_min && sv.kkt_error(&ev, &it, mu) <= mu {
            mu = (mu / 10.0).max(mu_min);
        }
        let tau = opts.step_fraction.max(1.0 - mu);

        let y_full = &it.y;
        sv.p.functions.hessian_values(&x_full, sv.obj_scale, y_full, &it.lam, &mut sv.h_vals);
        let values = sv.kkt_values(&ev);
        let mut base_diag = vec![0.0; dims_nf + me + mi];
        for k in 0..dims_nf {
            if sv.dims.lo[k].is_finite() {
                base_diag[k] += it.zl[k] / (it.x[k] - sv.dims.lo[k]);
            }
            if sv.dims.up[k].is_finite() {
                base_diag[k] += it.zu[k] / (sv.dims.up[k] - it.x[k]);
            }
        }
        for r in 0..me {
            base_diag[dims_nf + r] = -opts.regularization_floor;
        }
        for j in 0..mi {
            base_diag[dims_nf + me + j] = -it.s[j] / it.lam[j] - opts.regularization_floor;
        }
        let Some((diag, delta_w)) = sv.factorize(&values, &base_diag) else {
            status = SolveStatus::InfeasibleDetected;
            break;
        };
        last_reg = delta_w;

        let lg = sv.lagrangian_gradient(&ev, &it.y, &it.lam);
        let r_d0: Vec<f64> = ev.d.iter().zip(&it.s).map(|(d, s)| d + s).collect();
        let dir = sv.direction(&it, &lg, mu, &values, &diag, &ev.c, &r_d0);

        // Merit slope and penalty update.
        let theta0: f64 = ev.c.iter().map(|v| v.abs()).sum::<f64>() + r_d0.iter().map(|v| v.abs()).sum::<f64>();
        let mut slope = 0.0;
        for (k, &i) in sv.dims.free.iter().enumerate() {
            let mut g = sv.obj_scale * ev.grad[i];
            if sv.dims.lo[k].is_finite() {
                g -= mu / (it.x[k] - sv.dims.lo[k]);
            }
            if sv.dims.up[k].is_finite() {
                g += mu / (sv.dims.up[k] - it.x[k]);
            }
            slope += g * dir.dx[k];
        }
        for j in 0..mi {
            slope -= mu / it.s[j] * dir.ds[j];
        }
        if theta0 > 0.0 {
            let mut padded = dir.dx.clone();
            padded.resize(dims_nf + me + mi, 0.0);
            let mut kp = vec![0.0; padded.len()];
            sym_matvec(&sv.kkt_entries, &values, &diag, &padded, &mut kp);
            let mut quad: f64 = (0..dims_nf).map(|k| dir.dx[k] * kp[k]).sum();
            quad += (0..mi).map(|j| it.lam[j] / it.s[j] * dir.ds[j] * dir.ds[j]).sum::<f64>();
            let needed = (slope + 0.5 * quad.max(0.0)) / (0.9 * theta0);
            if nu < needed {
                nu = 1.1 * needed + 1.0;
            }
        }
        let dphi = (slope - nu * theta0).min(0.0);
        let phi0 = sv.merit(ev.f, &ev.c, &ev.d, &it.x, &it.s, mu, nu);

        let alpha_max = sv.primal_step_bound(&it, &dir, tau);
        let mut alpha = alpha_max;
        let mut accepted: Option<f64> = None;
        let mut fallback = None;
        let mut soc_dir = None;
        for attempt in 0..MAX_BACKTRACKS {
            let xt = axpy(&it.x, alpha, &dir.dx);
            let st = axpy(&it.s, alpha, &dir.ds);
            let (ft, ct, dt) = sv.values(&sv.full_x(&base, &xt));
            let phit = sv.merit(ft, &ct, &dt, &xt, &st, mu, nu);
            if phit.is_finite() {
                if phit <= phi0 + ARMIJO * alpha * dphi {
                    accepted = Some(alpha);
                    break;
                }
                fallback = Some(alpha);
            }
            if attempt == 0 && phit.is_finite() {
                // One second-order correction on the full trial step.
                let r_c: Vec<f64> = ev.c.iter().zip(&ct).map(|(c0, c1)| alpha * c0 + c1).collect();
                let r_d: Vec<f64> = (0..mi).map(|j| alpha * r_d0[j] + dt[j] + st[j]).collect();
                let corr = sv.direction(&it, &lg, mu, &values, &diag, &r_c, &r_d);
                let a_soc = sv.primal_step_bound(&it, &corr, tau);
                let xs = axpy(&it.x, a_soc, &corr.dx);
                let ss = axpy(&it.s, a_soc, &corr.ds);
                let (fs, cs, ds) = sv.values(&sv.full_x(&base, &xs));
                let phis = sv.merit(fs, &cs, &ds, &xs, &ss, mu, nu);
                if phis.is_finite() && phis <= phi0 + ARMIJO * alpha * dphi {
                    soc_dir = Some((corr, a_soc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let (dir, alpha_p) = match (accepted, soc_dir) {
            (Some(a), _) => (dir, a),
            (None, Some((d, a))) => (d, a),
            (None, None) => match fallback {
                Some(_) => {
                    // No sufficient decrease: take the shortest step tried.
                    let a = alpha_max * 0.5f64.powi(MAX_BACKTRACKS as i32 - 1);
                    (dir, a)
                }
                None => {
                    status = SolveStatus::InfeasibleDetected;
                    break;
                }
            },
        };
        let alpha_d = sv.dual_step_bound(&it, &dir, tau);
        it.x = axpy(&it.x, alpha_p, &dir.dx);
        it.s = axpy(&it.s, alpha_p, &dir.ds);
        it.y = axpy(&it.y, alpha_p, &dir.dy);
        it.lam = axpy(&it.lam, alpha_d, &dir.dlam);
        it.zl = axpy(&it.zl, alpha_d, &dir.dzl);
        it.zu = axpy(&it.zu, alpha_d, &dir.dzu);
        sv.safeguard_duals(&mut it, mu);
        last_step = alpha_p;
        iteration += 1;
        ev = sv.evaluate(&sv.full_x(&base, &it.x));
    }

    let x = sv.full_x(&base, &it.x);
    let n = problem.n();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (k, &i) in sv.dims.free.iter().enumerate() {
        lower[i] = it.zl[k];
        upper[i] = it.zu[k];
    }
    Ok(SolveResult {
        status,
        objective: ev.f,
        x,
        slacks: it.s,
        multipliers: Multipliers { eq: it.y, ineq: it.lam, lower, upper },
        kkt_residual: kkt,
        iterations: iteration,
        objective_scale: sv.obj_scale,
        history,
    })
}
