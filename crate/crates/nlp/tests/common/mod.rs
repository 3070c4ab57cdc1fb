//! Small dense test problems built from closures.
#![allow(dead_code)]

use tdrestore_nlp::{NlpFunctions, NlpProblem};

type Scalar = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Vector = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes the dense row-major Jacobian.
type Matrix = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes the dense lower-triangle Lagrangian Hessian, row-major.
type Hessian = Box<dyn Fn(&[f64], f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

pub struct Dense {
    pub n: usize,
    pub me: usize,
    pub mi: usize,
    pub f: Scalar,
    pub g: Vector,
    pub c: Vector,
    pub jc: Matrix,
    pub d: Vector,
    pub jd: Matrix,
    pub h: Hessian,
    jc_s: Vec<(usize, usize)>,
    jd_s: Vec<(usize, usize)>,
    h_s: Vec<(usize, usize)>,
}

impl Dense {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, me: usize, mi: usize, f: Scalar, g: Vector, c: Vector, jc: Matrix, d: Vector, jd: Matrix, h: Hessian) -> Self {
        let dense = |m: usize| (0..m).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
        Dense {
            n,
            me,
            mi,
            f,
            g,
            c,
            jc,
            d,
            jd,
            h,
            jc_s: dense(me),
            jd_s: dense(mi),
            h_s: (0..n).flat_map(|r| (0..=r).map(move |c| (r, c))).collect(),
        }
    }

    pub fn into_problem(self, lower: Vec<f64>, upper: Vec<f64>) -> NlpProblem {
        NlpProblem {
            var_names: (0..self.n).map(|i| format!("x{}", i + 1)).collect(),
            eq_names: (0..self.me).map(|i| format!("c{}", i + 1)).collect(),
            ineq_names: (0..self.mi).map(|i| format!("d{}", i + 1)).collect(),
            lower,
            upper,
            functions: Box::new(self),
        }
    }
}

impl NlpFunctions for Dense {
    fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (self.g)(x, grad)
    }
    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        (self.c)(x, out)
    }
    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        (self.d)(x, out)
    }
    fn eq_jacobian_structure(&self) -> &[(usize, usize)] {
        &self.jc_s
    }
    fn eq_jacobian_values(&self, x: &[f64], out: &mut [f64]) {
        (self.jc)(x, out)
    }
    fn ineq_jacobian_structure(&self) -> &[(usize, usize)] {
        &self.jd_s
    }
    fn ineq_jacobian_values(&self, x: &[f64], out: &mut [f64]) {
        (self.jd)(x, out)
    }
    fn hessian_structure(&self) -> &[(usize, usize)] {
        &self.h_s
    }
    fn hessian_values(&self, x: &[f64], obj_factor: f64, eq_mult: &[f64], ineq_mult: &[f64], out: &mut [f64]) {
        (self.h)(x, obj_factor, eq_mult, ineq_mult, out)
    }
}

pub fn none() -> Vector {
    Box::new(|_, _| {})
}

/// min (x - 3)^2 on [0, 10].
pub fn bounded_quadratic() -> NlpProblem {
    Dense::new(
        1,
        0,
        0,
        Box::new(|x| (x[0] - 3.0).powi(2)),
        Box::new(|x, g| g[0] = 2.0 * (x[0] - 3.0)),
        none(),
        none(),
        none(),
        none(),
        Box::new(|_, s, _, _, h| h[0] = 2.0 * s),
    )
    .into_problem(vec![0.0], vec![10.0])
}

/// min sign * (x1 + x2) s.t. x1^2 + x2^2 = 2, x >= 0.
pub fn circle(sign: f64) -> NlpProblem {
    Dense::new(
        2,
        1,
        0,
        Box::new(move |x| sign * (x[0] + x[1])),
        Box::new(move |_, g| g.fill(sign)),
        Box::new(|x, c| c[0] = x[0] * x[0] + x[1] * x[1] - 2.0),
        Box::new(|x, j| {
            j[0] = 2.0 * x[0];
            j[1] = 2.0 * x[1];
        }),
        none(),
        none(),
        Box::new(|_, _, y, _, h| {
            h[0] = 2.0 * y[0];
            h[1] = 0.0;
            h[2] = 2.0 * y[0];
        }),
    )
    .into_problem(vec![0.0, 0.0], vec![f64::INFINITY, f64::INFINITY])
}

/// The Hock-Schittkowski problem 71.
pub fn hs071() -> NlpProblem {
    Dense::new(
        4,
        1,
        1,
        Box::new(|x| x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]),
        Box::new(|x, g| {
            g[0] = x[3] * (2.0 * x[0] + x[1] + x[2]);
            g[1] = x[0] * x[3];
            g[2] = x[0] * x[3] + 1.0;
            g[3] = x[0] * (x[0] + x[1] + x[2]);
        }),
        Box::new(|x, c| c[0] = x.iter().map(|v| v * v).sum::<f64>() - 40.0),
        Box::new(|x, j| {
            for i in 0..4 {
                j[i] = 2.0 * x[i];
            }
        }),
        Box::new(|x, d| d[0] = 25.0 - x[0] * x[1] * x[2] * x[3]),
        Box::new(|x, j| {
            j[0] = -x[1] * x[2] * x[3];
            j[1] = -x[0] * x[2] * x[3];
            j[2] = -x[0] * x[1] * x[3];
            j[3] = -x[0] * x[1] * x[2];
        }),
        Box::new(|x, s, y, l, h| {
            // Lower triangle row-major: (0,0) (1,0) (1,1) (2,0) (2,1) (2,2) (3,0) (3,1) (3,2) (3,3)
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let p = -l[0];
            h[0] = s * 2.0 * d + 2.0 * y[0];
            h[1] = s * d + p * c * d;
            h[2] = 2.0 * y[0];
            h[3] = s * d + p * b * d;
            h[4] = p * a * d;
            h[5] = 2.0 * y[0];
            h[6] = s * (2.0 * a + b + c) + p * b * c;
            h[7] = s * a + p * a * c;
            h[8] = s * a + p * a * b;
            h[9] = 2.0 * y[0];
        }),
    )
    .into_problem(vec![1.0; 4], vec![5.0; 4])
}

/// min x1^2 + x2^2 s.t. x1 + x2 >= 1, x2 fixed at `x2` when given.
pub fn halfplane(fixed_x2: Option<f64>) -> NlpProblem {
    let (lo, up) = match fixed_x2 {
        Some(v) => (vec![f64::NEG_INFINITY, v], vec![f64::INFINITY, v]),
        None => (vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2]),
    };
    Dense::new(
        2,
        0,
        1,
        Box::new(|x| x[0] * x[0] + x[1] * x[1]),
        Box::new(|x, g| {
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
        }),
        none(),
        none(),
        Box::new(|x, d| d[0] = 1.0 - x[0] - x[1]),
        Box::new(|_, j| j.fill(-1.0)),
        Box::new(|_, s, _, _, h| {
            h[0] = 2.0 * s;
            h[1] = 0.0;
            h[2] = 2.0 * s;
        }),
    )
    .into_problem(lo, up)
}

/// Unconstrained Rosenbrock function.
pub fn rosenbrock() -> NlpProblem {
    Dense::new(
        2,
        0,
        0,
        Box::new(|x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)),
        Box::new(|x, g| {
            g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
        }),
        none(),
        none(),
        none(),
        none(),
        Box::new(|x, s, _, _, h| {
            h[0] = s * (1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0);
            h[1] = s * (-400.0 * x[0]);
            h[2] = s * 200.0;
        }),
    )
    .into_problem(vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2])
}
