//! Time-scale analogues of `x' = f(x, t)` obtained from one-step schemes.
//!
//! On a right-scattered step from `t` to `t^s = t + mu` the schemes read
//!
//! | scheme              | relation                                                        |
//! |---------------------|-----------------------------------------------------------------|
//! | forward Euler       | `x^s = x + mu f(x, t)`                                          |
//! | backward Euler      | `x^s = x + mu f(x^s, t^s)`                                      |
//! | trapezoidal (1)     | `x^s = x + mu/2 (f(x, t) + f(x^s, t^s))`                        |
//! | trapezoidal (2)     | `x^s = x + mu/4 (f(x,t) + f(x^s,t) + f(x,t^s) + f(x^s,t^s))`    |
//! | implicit midpoint   | `x^s = x + mu/2 (f(m, t) + f(m, t^s))`, `m = (x + x^s)/2`       |
//! | discrete gradient   | `q^s = q + mu DT/Dp`, `p^s = p - mu DV/Dq`                      |
//!
//! The autonomous midpoint rule is `x^s = x + mu f(m)`. Dense stretches are
//! integrated with an adaptive Dormand–Prince 5(4) pair.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;

use crate::error::{Error, Result};
use crate::timescale::{GridFunction, Segment, TimeScale};

/// Relative part of the implicit-solver tolerance `1e-12 (1 + |x|)`.
pub const TAU_SOLVE: f64 = 1e-12;
/// Relative and absolute tolerance of the dense-stretch integrator.
pub const TAU_DENSE: f64 = 1e-12;
/// Relative gap below which discrete gradients switch to the derivative.
pub const TAU_GAP: f64 = 1e-8;

const MAX_ITERATIONS: usize = 50;
const SLOW_BEFORE_NEWTON: usize = 8;
const MAX_DENSE_STEPS: usize = 1_000_000;

type Field = dyn Fn(&[Complex64], f64) -> Vec<Complex64> + Send + Sync;
type Jacobian = dyn Fn(&[Complex64], f64) -> DMatrix<Complex64> + Send + Sync;
type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

fn max_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Right-hand side `f(x, t)` of a first-order system on `C^N`.
#[derive(Clone)]
pub struct VectorField {
    f: Arc<Field>,
    dim: usize,
    autonomous: bool,
    jacobian: Option<Arc<Jacobian>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("autonomous", &self.autonomous)
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(dim: usize, autonomous: bool, f: F) -> Self
    where
        F: Fn(&[Complex64], f64) -> Vec<Complex64> + Send + Sync + 'static,
    {
        VectorField {
            f: Arc::new(f),
            dim,
            autonomous,
            jacobian: None,
        }
    }

    /// Attaches a complex Jacobian `df/dx`, checked against finite
    /// differences at a fixed probe state.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Result<Self>
    where
        J: Fn(&[Complex64], f64) -> DMatrix<Complex64> + Send + Sync + 'static,
    {
        let probe: Vec<Complex64> = (0..self.dim)
            .map(|k| Complex64::new(0.3 + 0.17 * k as f64, 0.05 * k as f64))
            .collect();
        let t = 0.25;
        let j = jacobian(&probe, t);
        if j.nrows() != self.dim || j.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: j.nrows(),
            });
        }
        let f0 = self.eval(&probe, t);
        for col in 0..self.dim {
            let h = 1e-6 * (1.0 + probe[col].norm());
            let mut shifted = probe.clone();
            shifted[col] += h;
            let f1 = self.eval(&shifted, t);
            for row in 0..self.dim {
                let fd = (f1[row] - f0[row]) / h;
                let scale = 1.0 + j[(row, col)].norm();
                if (fd - j[(row, col)]).norm() > 1e-4 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "Jacobian entry ({row}, {col}) = {} disagrees with finite difference {fd}",
                        j[(row, col)]
                    )));
                }
            }
        }
        self.jacobian = Some(Arc::new(jacobian));
        Ok(self)
    }

    /// `x' = alpha(t) x` in one dimension.
    pub fn scalar_linear(alpha: crate::expfun::Coefficient) -> Self {
        let autonomous = alpha.constant_value().is_some();
        let a = alpha.clone();
        VectorField::new(1, autonomous, move |x, t| vec![a.at(t) * x[0]])
            .with_jacobian(move |_, t| DMatrix::from_element(1, 1, alpha.at(t)))
            .expect("linear Jacobian is exact")
    }

    /// `x' = M x` for a constant matrix.
    pub fn linear(matrix: DMatrix<Complex64>) -> Self {
        let dim = matrix.nrows();
        let m = matrix.clone();
        VectorField::new(dim, true, move |x, _| {
            let v = &m * DVector::from_column_slice(x);
            v.as_slice().to_vec()
        })
        .with_jacobian(move |_, _| matrix.clone())
        .expect("linear Jacobian is exact")
    }

    /// Harmonic oscillator `q' = p`, `p' = -w0^2 q` on the state `(q, p)`.
    pub fn harmonic(omega0: f64) -> Self {
        let w2 = Complex64::new(omega0 * omega0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Self::linear(DMatrix::from_row_slice(2, 2, &[zero, one, -w2, zero]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn eval(&self, x: &[Complex64], t: f64) -> Vec<Complex64> {
        (self.f)(x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    ForwardEuler,
    BackwardEuler,
    Trapezoidal1,
    Trapezoidal2,
    ImplicitMidpoint,
    DiscreteGradient,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::ForwardEuler,
        SchemeKind::BackwardEuler,
        SchemeKind::Trapezoidal1,
        SchemeKind::Trapezoidal2,
        SchemeKind::ImplicitMidpoint,
        SchemeKind::DiscreteGradient,
    ];
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::ForwardEuler => "forward-euler",
            SchemeKind::BackwardEuler => "backward-euler",
            SchemeKind::Trapezoidal1 => "trapezoidal1",
            SchemeKind::Trapezoidal2 => "trapezoidal2",
            SchemeKind::ImplicitMidpoint => "midpoint",
            SchemeKind::DiscreteGradient => "discrete-gradient",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "forwardeuler" | "euler" | "forward" | "delta" => Ok(SchemeKind::ForwardEuler),
            "backwardeuler" | "backward" | "nabla" => Ok(SchemeKind::BackwardEuler),
            "trapezoidal1" | "trapezoidal" | "trap1" => Ok(SchemeKind::Trapezoidal1),
            "trapezoidal2" | "trap2" => Ok(SchemeKind::Trapezoidal2),
            "midpoint" | "implicitmidpoint" => Ok(SchemeKind::ImplicitMidpoint),
            "discretegradient" | "dg" => Ok(SchemeKind::DiscreteGradient),
            _ => Err(Error::InvalidParameter(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Solver statistics for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub state: Vec<Complex64>,
    pub diagnostics: StepDiagnostics,
}

/// `x^s - x - mu * Phi(x^s)` for the implicit schemes.
struct Relation<'a> {
    scheme: SchemeKind,
    field: &'a VectorField,
    x: &'a [Complex64],
    f_x_t: Vec<Complex64>,
    f_x_ts: Vec<Complex64>,
    t: f64,
    mu: f64,
}

impl<'a> Relation<'a> {
    fn new(
        scheme: SchemeKind,
        field: &'a VectorField,
        x: &'a [Complex64],
        t: f64,
        mu: f64,
    ) -> Self {
        let f_x_t = field.eval(x, t);
        let f_x_ts = match scheme {
            SchemeKind::Trapezoidal2 => field.eval(x, t + mu),
            _ => Vec::new(),
        };
        Relation {
            scheme,
            field,
            x,
            f_x_t,
            f_x_ts,
            t,
            mu,
        }
    }

    fn midpoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.x.iter().zip(y).map(|(a, b)| (a + b) * 0.5).collect()
    }

    /// The averaged right-hand side, so that `y = x + mu * phi(y)`.
    fn phi(&self, y: &[Complex64]) -> Vec<Complex64> {
        let (t, ts) = (self.t, self.t + self.mu);
        let f = |x: &[Complex64], t: f64| self.field.eval(x, t);
        match self.scheme {
            SchemeKind::BackwardEuler => f(y, ts),
            SchemeKind::Trapezoidal1 => {
                let b = f(y, ts);
                self.f_x_t
                    .iter()
                    .zip(&b)
                    .map(|(a, b)| (a + b) * 0.5)
                    .collect()
            }
            SchemeKind::Trapezoidal2 => {
                let b = f(y, t);
                let d = f(y, ts);
                (0..y.len())
                    .map(|i| (self.f_x_t[i] + b[i] + self.f_x_ts[i] + d[i]) * 0.25)
                    .collect()
            }
            SchemeKind::ImplicitMidpoint => {
                let m = self.midpoint(y);
                if self.field.autonomous {
                    f(&m, t)
                } else {
                    let a = f(&m, t);
                    let b = f(&m, ts);
                    a.iter().zip(&b).map(|(a, b)| (a + b) * 0.5).collect()
                }
            }
            SchemeKind::ForwardEuler | SchemeKind::DiscreteGradient => {
                unreachable!("explicit schemes have no implicit relation")
            }
        }
    }

    fn residual_vector(&self, y: &[Complex64]) -> Vec<Complex64> {
        let phi = self.phi(y);
        (0..y.len())
            .map(|i| y[i] - self.x[i] - phi[i] * self.mu)
            .collect()
    }

    fn residual(&self, y: &[Complex64]) -> f64 {
        let r = max_norm(&self.residual_vector(y));
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    }

    /// `d phi / dy` from the supplied complex Jacobian.
    fn phi_jacobian(&self, y: &[Complex64]) -> Option<DMatrix<Complex64>> {
        let jac = self.field.jacobian.as_ref()?;
        let (t, ts) = (self.t, self.t + self.mu);
        Some(match self.scheme {
            SchemeKind::BackwardEuler => jac(y, ts),
            SchemeKind::Trapezoidal1 => jac(y, ts) * Complex64::new(0.5, 0.0),
            SchemeKind::Trapezoidal2 => (jac(y, t) + jac(y, ts)) * Complex64::new(0.25, 0.0),
            SchemeKind::ImplicitMidpoint => {
                let m = self.midpoint(y);
                if self.field.autonomous {
                    jac(&m, t) * Complex64::new(0.5, 0.0)
                } else {
                    (jac(&m, t) + jac(&m, ts)) * Complex64::new(0.25, 0.0)
                }
            }
            _ => return None,
        })
    }

    /// Real `2N x 2N` Jacobian of the residual in `(re, im)` coordinates.
    fn real_jacobian(&self, y: &[Complex64]) -> DMatrix<f64> {
        let n = y.len();
        let mut out = DMatrix::<f64>::identity(2 * n, 2 * n);
        if let Some(jp) = self.phi_jacobian(y) {
            for i in 0..n {
                for j in 0..n {
                    let v = jp[(i, j)] * self.mu;
                    out[(2 * i, 2 * j)] -= v.re;
                    out[(2 * i, 2 * j + 1)] += v.im;
                    out[(2 * i + 1, 2 * j)] -= v.im;
                    out[(2 * i + 1, 2 * j + 1)] -= v.re;
                }
            }
            return out;
        }
        let r0 = self.residual_vector(y);
        for j in 0..2 * n {
            let mut shifted = y.to_vec();
            let h = f64::EPSILON.sqrt() * (1.0 + y[j / 2].norm());
            if j % 2 == 0 {
                shifted[j / 2].re += h;
            } else {
                shifted[j / 2].im += h;
            }
            let r1 = self.residual_vector(&shifted);
            for i in 0..n {
                let d = (r1[i] - r0[i]) / h;
                out[(2 * i, j)] = d.re;
                out[(2 * i + 1, j)] = d.im;
            }
        }
        out
    }

    fn newton_step(&self, y: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = y.len();
        let r = self.residual_vector(y);
        let rhs = DVector::from_iterator(2 * n, r.iter().flat_map(|z| [-z.re, -z.im]));
        let delta = self.real_jacobian(y).lu().solve(&rhs)?;
        Some(
            (0..n)
                .map(|i| Complex64::new(delta[2 * i], delta[2 * i + 1]))
                .collect(),
        )
    }
}

fn tolerance(y: &[Complex64]) -> f64 {
    TAU_SOLVE * (1.0 + max_norm(y))
}

fn floor(y: &[Complex64]) -> f64 {
    8.0 * f64::EPSILON * (1.0 + max_norm(y))
}

/// Fixed-point iteration with a switch to damped Newton once it stops
/// contracting, polished until the residual stagnates near roundoff.
fn solve_implicit(rel: &Relation<'_>) -> Result<StepReport> {
    let f_x = &rel.f_x_t;
    let mut y: Vec<Complex64> = rel.x.iter().zip(f_x).map(|(a, b)| a + b * rel.mu).collect();
    let mut r = rel.residual(&y);
    let mut history = vec![r];
    let mut best = (y.clone(), r);
    let mut slow = 0;
    let mut newton = false;
    let mut converged_at: Option<f64> = None;

    for _ in 0..MAX_ITERATIONS {
        if r <= floor(&y) {
            break;
        }
        let candidate = if newton {
            let Some(delta) = rel.newton_step(&y) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let trial: Vec<Complex64> =
                    y.iter().zip(&delta).map(|(a, d)| a + d * lambda).collect();
                let rt = rel.residual(&trial);
                if rt < r {
                    accepted = Some((trial, rt));
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some(c) => c,
                None => break,
            }
        } else {
            let phi = rel.phi(&y);
            let trial: Vec<Complex64> = rel
                .x
                .iter()
                .zip(&phi)
                .map(|(a, p)| a + p * rel.mu)
                .collect();
            let rt = rel.residual(&trial);
            (trial, rt)
        };
        let (next, rn) = candidate;
        history.push(rn);
        if !newton && !(rn <= 0.5 * r) {
            slow += 1;
            if slow >= SLOW_BEFORE_NEWTON || !rn.is_finite() {
                newton = true;
            }
        }
        if rn < best.1 {
            best = (next.clone(), rn);
        }
        if newton && !(rn < r) {
            // Newton from the best iterate rather than a diverging one
            y = best.0.clone();
            r = best.1;
        } else {
            y = next;
            r = rn;
        }
        if let Some(previous) = converged_at {
            if !(r < 0.5 * previous) {
                break;
            }
        }
        if r <= tolerance(&y) {
            converged_at = Some(r);
        }
    }

    let (mut y, mut r) = best;
    if r <= tolerance(&y) {
        // at least one Newton correction, so the final error is not biased
        // towards the side the fixed-point iteration came from
        for polish in 0..4 {
            if polish > 0 && r <= floor(&y) {
                break;
            }
            let Some(delta) = rel.newton_step(&y) else {
                break;
            };
            let trial: Vec<Complex64> = y.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rt = rel.residual(&trial);
            history.push(rt);
            if !(rt <= r) {
                break;
            }
            y = trial;
            r = rt;
        }
    }
    if r <= tolerance(&y) {
        Ok(StepReport {
            state: y,
            diagnostics: StepDiagnostics {
                iterations: history.len() - 1,
                residual: r,
            },
        })
    } else {
        Err(Error::SolverDiverged {
            t: rel.t,
            residuals: history,
        })
    }
}

/// One right-scattered step of `scheme` from `(t, x)` with graininess `mu`.
pub fn step_with_diagnostics(
    scheme: SchemeKind,
    field: &VectorField,
    x: &[Complex64],
    t: f64,
    mu: f64,
) -> Result<StepReport> {
    if x.len() != field.dim {
        return Err(Error::DimensionMismatch {
            expected: field.dim,
            got: x.len(),
        });
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step needs mu > 0, got {mu}"
        )));
    }
    match scheme {
        SchemeKind::ForwardEuler => {
            let f = field.eval(x, t);
            Ok(StepReport {
                state: x.iter().zip(&f).map(|(a, b)| a + b * mu).collect(),
                diagnostics: StepDiagnostics::default(),
            })
        }
        SchemeKind::DiscreteGradient => Err(Error::InvalidScheme {
            scheme: scheme.to_string(),
            reason: "needs a separable Hamiltonian, not a general vector field".into(),
        }),
        _ => solve_implicit(&Relation::new(scheme, field, x, t, mu)),
    }
}

/// `x^s` after one step; see [`step_with_diagnostics`].
pub fn step(
    scheme: SchemeKind,
    field: &VectorField,
    x: &[Complex64],
    t: f64,
    mu: f64,
) -> Result<Vec<Complex64>> {
    step_with_diagnostics(scheme, field, x, t, mu).map(|r| r.state)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Statistics for the step that produced each state; the first entry
    /// belongs to the initial value.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    fn start(t0: f64, x0: Vec<Complex64>) -> Self {
        Trajectory {
            times: vec![t0],
            states: vec![x0],
            diagnostics: vec![StepDiagnostics::default()],
        }
    }

    fn push(&mut self, t: f64, x: Vec<Complex64>, diagnostics: StepDiagnostics) {
        self.times.push(t);
        self.states.push(x);
        self.diagnostics.push(diagnostics);
    }

    pub fn last(&self) -> (f64, &[Complex64]) {
        let i = self.times.len() - 1;
        (self.times[i], &self.states[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration of `x' = f(x, t)` from `lo` to `hi`,
/// recording every accepted step.
fn integrate_dense<F>(f: F, x0: &[Complex64], lo: f64, hi: f64, out: &mut Trajectory) -> Result<()>
where
    F: Fn(&[Complex64], f64) -> Vec<Complex64>,
{
    let n = x0.len();
    let mut t = lo;
    let mut x = x0.to_vec();
    let mut k1 = f(&x, t);
    let span = hi - lo;
    let scale0 = TAU_DENSE * (1.0 + max_norm(&x));
    let slope = max_norm(&k1);
    let mut h = if slope > 0.0 {
        (0.01 * (scale0 / slope).powf(0.2)).min(span)
    } else {
        span
    };
    h = h.max(span * 1e-9);
    let mut steps = 0;
    let mut last_error = 0.0;
    while t < hi {
        steps += 1;
        if steps > MAX_DENSE_STEPS {
            return Err(Error::SolverDiverged {
                t,
                residuals: vec![last_error],
            });
        }
        let last = t + h >= hi;
        if last {
            h = hi - t;
        }
        let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for stage in 1..7 {
            let xs: Vec<Complex64> = (0..n)
                .map(|i| {
                    let mut acc = x[i];
                    for (j, kj) in k.iter().enumerate() {
                        acc += kj[i] * (h * DP_A[stage][j]);
                    }
                    acc
                })
                .collect();
            k.push(f(&xs, t + DP_C[stage] * h));
        }
        let x_new: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut acc = x[i];
                for (j, kj) in k.iter().take(6).enumerate() {
                    acc += kj[i] * (h * DP_A[6][j]);
                }
                acc
            })
            .collect();
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                e += kj[i] * (h * DP_E[j]);
            }
            let sc = TAU_DENSE + TAU_DENSE * x[i].norm().max(x_new[i].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t = if last { hi } else { t + h };
            x = x_new;
            k1 = k[6].clone();
            last_error = err;
            out.push(
                t,
                x.clone(),
                StepDiagnostics {
                    iterations: 1,
                    residual: err * TAU_DENSE,
                },
            );
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < span * 1e-14 {
            return Err(Error::SolverDiverged {
                t,
                residuals: vec![err],
            });
        }
    }
    Ok(())
}

fn path(ts: &TimeScale, t0: f64, t1: f64) -> Result<(f64, f64, Vec<Segment>)> {
    let a = ts.snap(t0)?;
    let b = ts.snap(t1)?;
    if a > b {
        return Err(Error::InvalidParameter(format!(
            "integration needs t0 <= t1, got {t0} > {t1}"
        )));
    }
    Ok((a, b, ts.segments(a, b)?))
}

/// Trajectory of `scheme` over every scale point in `[t0, t1]`. Dense
/// stretches are resolved by the reference integrator.
pub fn integrate(
    scheme: SchemeKind,
    field: &VectorField,
    ts: &TimeScale,
    x0: &[Complex64],
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    if x0.len() != field.dim {
        return Err(Error::DimensionMismatch {
            expected: field.dim,
            got: x0.len(),
        });
    }
    let (a, _, segments) = path(ts, t0, t1)?;
    let mut out = Trajectory::start(a, x0.to_vec());
    for segment in segments {
        match segment {
            Segment::Step { t, mu } => {
                let report = step_with_diagnostics(scheme, field, out.last().1, t, mu)?;
                out.push(ts.sigma(t)?, report.state, report.diagnostics);
            }
            Segment::Dense { lo, hi } => {
                let x = out.last().1.to_vec();
                integrate_dense(|x, t| field.eval(x, t), &x, lo, hi, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// Separable Hamiltonian `H(p, q) = T(p) + V(q)` with analytic derivatives.
#[derive(Clone)]
pub struct HamiltonianSpec {
    t: Arc<RealFn>,
    v: Arc<RealFn>,
    dt: Arc<RealFn>,
    dv: Arc<RealFn>,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("HamiltonianSpec { .. }")
    }
}

impl HamiltonianSpec {
    pub fn new<T, V, DT, DV>(t: T, v: V, dt: DT, dv: DV) -> Self
    where
        T: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        DT: Fn(f64) -> f64 + Send + Sync + 'static,
        DV: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        HamiltonianSpec {
            t: Arc::new(t),
            v: Arc::new(v),
            dt: Arc::new(dt),
            dv: Arc::new(dv),
        }
    }

    /// `p^2/2 + w0^2 q^2/2`.
    pub fn harmonic(omega0: f64) -> Self {
        let w2 = omega0 * omega0;
        Self::new(
            |p| 0.5 * p * p,
            move |q| 0.5 * w2 * q * q,
            |p| p,
            move |q| w2 * q,
        )
    }

    /// `p^2/2 - w0^2 cos q`.
    pub fn pendulum(omega0: f64) -> Self {
        let w2 = omega0 * omega0;
        Self::new(
            |p| 0.5 * p * p,
            move |q| -w2 * q.cos(),
            |p| p,
            move |q| w2 * q.sin(),
        )
    }

    pub fn kinetic(&self, p: f64) -> f64 {
        (self.t)(p)
    }

    pub fn potential(&self, q: f64) -> f64 {
        (self.v)(q)
    }

    pub fn energy(&self, q: f64, p: f64) -> f64 {
        (self.t)(p) + (self.v)(q)
    }

    /// `(T(b) - T(a))/(b - a)`, or `T'(a)` when the gap is below `TAU_GAP (1 + |a|)`.
    pub fn kinetic_gradient(&self, a: f64, b: f64) -> f64 {
        discrete_gradient(&*self.t, &*self.dt, a, b)
    }

    pub fn potential_gradient(&self, a: f64, b: f64) -> f64 {
        discrete_gradient(&*self.v, &*self.dv, a, b)
    }
}

fn discrete_gradient(g: &RealFn, dg: &RealFn, a: f64, b: f64) -> f64 {
    if (b - a).abs() < TAU_GAP * (1.0 + a.abs()) {
        dg(a)
    } else {
        (g(b) - g(a)) / (b - a)
    }
}

/// Discrete-gradient step of a separable Hamiltonian, `(q, p) -> (q^s, p^s)`.
///
/// The pair is reduced to a scalar equation in `p^s` and solved by a
/// safeguarded secant iteration polished to roundoff.
pub fn discrete_gradient_step(h: &HamiltonianSpec, q: f64, p: f64, mu: f64) -> Result<(f64, f64)> {
    discrete_gradient_step_with_diagnostics(h, q, p, mu).map(|(q, p, _)| (q, p))
}

pub fn discrete_gradient_step_with_diagnostics(
    h: &HamiltonianSpec,
    q: f64,
    p: f64,
    mu: f64,
) -> Result<(f64, f64, StepDiagnostics)> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step needs mu > 0, got {mu}"
        )));
    }
    let q_of = |ps: f64| q + mu * h.kinetic_gradient(p, ps);
    let g = |ps: f64| ps - p + mu * h.potential_gradient(q, q_of(ps));
    let residual = |ps: f64| {
        let qs = q_of(ps);
        (ps - p + mu * h.potential_gradient(q, qs)).abs()
    };

    let mut x0 = p;
    let mut g0 = g(x0);
    let mut x1 = p - mu * (h.dv)(q);
    let mut g1 = g(x1);
    let mut history = vec![g1.abs()];
    let scale = |x: f64| 1.0 + x.abs();
    for _ in 0..MAX_ITERATIONS {
        if g1 == 0.0 || !g1.is_finite() {
            break;
        }
        let denom = g1 - g0;
        let mut x2 = if denom != 0.0 && x1 != x0 {
            x1 - g1 * (x1 - x0) / denom
        } else {
            x1
        };
        if !x2.is_finite() || x2 == x1 {
            // derivative of g by a symmetric difference as a fallback
            let d = 1e-7 * scale(x1);
            let slope = (g(x1 + d) - g(x1 - d)) / (2.0 * d);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            x2 = x1 - g1 / slope;
            if x2 == x1 {
                break;
            }
        }
        let g2 = g(x2);
        history.push(g2.abs());
        let done = g2.abs() <= 4.0 * f64::EPSILON * scale(x2)
            || (x2 - x1).abs() <= f64::EPSILON * scale(x2);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g2;
        if done {
            break;
        }
    }
    let r = residual(x1);
    if r <= TAU_SOLVE * scale(x1) {
        Ok((
            q_of(x1),
            x1,
            StepDiagnostics {
                iterations: history.len(),
                residual: r,
            },
        ))
    } else {
        Err(Error::SolverDiverged {
            t: f64::NAN,
            residuals: history,
        })
    }
}

/// Discrete-gradient trajectory on `ts`. States are `(q, p)`; dense stretches
/// follow Hamilton's equations.
pub fn integrate_hamiltonian(
    h: &HamiltonianSpec,
    ts: &TimeScale,
    q0: f64,
    p0: f64,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    let (a, _, segments) = path(ts, t0, t1)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut out = Trajectory::start(a, vec![c(q0), c(p0)]);
    for segment in segments {
        let state = out.last().1.to_vec();
        match segment {
            Segment::Step { t, mu } => {
                let (qs, ps, diag) =
                    discrete_gradient_step_with_diagnostics(h, state[0].re, state[1].re, mu)
                        .map_err(|e| match e {
                            Error::SolverDiverged { residuals, .. } => {
                                Error::SolverDiverged { t, residuals }
                            }
                            other => other,
                        })?;
                out.push(ts.sigma(t)?, vec![c(qs), c(ps)], diag);
            }
            Segment::Dense { lo, hi } => {
                let hamilton =
                    |x: &[Complex64], _: f64| vec![c((h.dt)(x[1].re)), c(-(h.dv)(x[0].re))];
                integrate_dense(hamilton, &state, lo, hi, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// Residual of `q^DD + w0^2 (q^ss + 2 q^s + q)/4` at `t`, with
/// `q^DD(t) = (q^D(s(t)) - q^D(t)) / mu(t)` at right-scattered `t`. At
/// right-dense `t` the classical `q'' + w0^2 q` is used.
pub fn oscillator_residual<F>(q: &GridFunction<'_, F>, omega0: f64, t: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let ts = q.scale();
    let t = ts.snap(t)?;
    let mu = ts.graininess(t)?;
    let w2 = omega0 * omega0;
    if mu > 0.0 {
        let s = ts.sigma(t)?;
        if s >= ts.max() {
            return Err(Error::DegenerateAtMax { t: s });
        }
        let ss = ts.sigma(s)?;
        let d2 = (q.delta_derivative(s)? - q.delta_derivative(t)?) / mu;
        let avg = (q.at(ss)? + q.at(s)? * 2.0 + q.at(t)?) * 0.25;
        Ok(d2 + avg * w2)
    } else {
        Ok(second_derivative(q, t)? + q.at(t)? * w2)
    }
}

/// Classical second derivative at a right-dense point by Richardson
/// extrapolation of second differences, central where the scale allows.
fn second_derivative<F>(q: &GridFunction<'_, F>, t: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let ts = q.scale();
    let h0 = 1e-2 * (1.0 + t.abs());
    let inside = |a: f64, b: f64| -> bool {
        ts.segments(a.min(b), a.max(b))
            .map(|segs| segs.iter().all(|s| matches!(s, Segment::Dense { .. })))
            .unwrap_or(false)
    };
    let mut h = h0;
    while h > 1e-6 * (1.0 + t.abs()) && !(ts.contains(t + 2.0 * h) && inside(t, t + 2.0 * h)) {
        h *= 0.5;
    }
    let central = ts.contains(t - h) && inside(t - h, t + h);
    let f = |s: f64| q.at(s);
    let estimate = |h: f64| -> Result<Complex64> {
        if central {
            Ok((f(t + h)? - f(t)? * 2.0 + f(t - h)?) / (h * h))
        } else {
            Ok((f(t + 2.0 * h)? - f(t + h)? * 2.0 + f(t)?) / (h * h))
        }
    };
    richardson(h, 4, central, &estimate)
}

/// Richardson extrapolation with error exponents in `h^2` (central) or `h`.
fn richardson<E>(h: f64, levels: usize, central: bool, estimate: &E) -> Result<Complex64>
where
    E: Fn(f64) -> Result<Complex64>,
{
    let ratio: f64 = if central { 4.0 } else { 2.0 };
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(levels);
    let mut hk = h;
    for i in 0..levels {
        let mut row = vec![estimate(hk)?];
        for j in 1..=i {
            let p = ratio.powi(j as i32);
            let prev = rows[i - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / (p - 1.0));
        }
        rows.push(row);
        hk *= 0.5;
    }
    Ok(rows[levels - 1][levels - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfun::{eval_exp, Coefficient, ExpScheme};
    use crate::trigfun::cayley_trig;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn identity_field() -> VectorField {
        VectorField::scalar_linear(Coefficient::constant(1.0))
    }

    #[test]
    fn forward_euler_and_midpoint_examples() {
        let f = identity_field();
        assert_eq!(
            step(SchemeKind::ForwardEuler, &f, &[c(1.0)], 0.0, 1.0).unwrap(),
            vec![c(2.0)]
        );
        let y = step(SchemeKind::ImplicitMidpoint, &f, &[c(1.0)], 0.0, 1.0).unwrap();
        assert!((y[0] - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_field_is_stationary() {
        let f = VectorField::new(2, true, |_, _| vec![c(0.0); 2]);
        let x = [c(1.5), Complex64::new(-2.0, 0.5)];
        for scheme in SchemeKind::ALL
            .iter()
            .filter(|s| **s != SchemeKind::DiscreteGradient)
        {
            assert_eq!(step(*scheme, &f, &x, 0.0, 0.7).unwrap(), x.to_vec());
        }
    }

    #[test]
    fn integrate_examples() {
        let z = TimeScale::uniform(0.0, 1.0, 3).unwrap();
        let f = identity_field();
        let tr = integrate(SchemeKind::ForwardEuler, &f, &z, &[c(1.0)], 0.0, 3.0).unwrap();
        let xs: Vec<f64> = tr.states.iter().map(|s| s[0].re).collect();
        assert_eq!(xs, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(tr.times, vec![0.0, 1.0, 2.0, 3.0]);

        let tr = integrate(SchemeKind::ImplicitMidpoint, &f, &z, &[c(1.0)], 0.0, 2.0).unwrap();
        let alpha = Coefficient::constant(1.0);
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let e = eval_exp(ExpScheme::Cayley, &alpha, &z, *t, 0.0).unwrap();
            assert!((s[0] - e).norm() <= 1e-12 * e.norm());
        }
    }

    #[test]
    fn linear_consistency() {
        let pts = TimeScale::points(&[0.0, 0.3, 0.5, 1.2, 1.25, 2.0]).unwrap();
        let a = Complex64::new(-0.7, 1.3);
        let alpha = Coefficient::constant(a);
        let f = VectorField::scalar_linear(alpha.clone());
        let cases = [
            (SchemeKind::ForwardEuler, ExpScheme::Delta),
            (SchemeKind::BackwardEuler, ExpScheme::Nabla),
            (SchemeKind::Trapezoidal1, ExpScheme::Cayley),
            (SchemeKind::Trapezoidal2, ExpScheme::Cayley),
            (SchemeKind::ImplicitMidpoint, ExpScheme::Cayley),
        ];
        for (scheme, exp) in cases {
            let tr = integrate(scheme, &f, &pts, &[c(1.0)], 0.0, 2.0).unwrap();
            let e = eval_exp(exp, &alpha, &pts, 2.0, 0.0).unwrap();
            assert!((tr.last().1[0] - e).norm() <= 1e-11 * e.norm(), "{scheme}");
        }
    }

    #[test]
    fn nonautonomous_trapezoidal_factors() {
        let alpha = Coefficient::from_real_fn(|t| 0.4 + t * t);
        let f = VectorField::scalar_linear(alpha.clone());
        let (t, mu) = (0.5, 0.3);
        let (a, b) = (alpha.at(t), alpha.at(t + mu));
        let one = c(1.0);
        let y1 = step(SchemeKind::Trapezoidal1, &f, &[one], t, mu).unwrap()[0];
        let exact1 = (one + a * (0.5 * mu)) / (one - b * (0.5 * mu));
        assert!((y1 - exact1).norm() < 1e-12);
        let y2 = step(SchemeKind::Trapezoidal2, &f, &[one], t, mu).unwrap()[0];
        let avg = (a + b) * 0.5;
        let exact2 = (one + avg * (0.5 * mu)) / (one - avg * (0.5 * mu));
        assert!((y2 - exact2).norm() < 1e-12);
    }

    #[test]
    fn stiff_linear_step_switches_to_newton() {
        let f = VectorField::scalar_linear(Coefficient::constant(-50.0));
        let report =
            step_with_diagnostics(SchemeKind::BackwardEuler, &f, &[c(1.0)], 0.0, 1.0).unwrap();
        assert!((report.state[0] - c(1.0 / 51.0)).norm() < 1e-14);
        assert!(report.diagnostics.residual <= 1e-12);
    }

    #[test]
    fn nonlinear_field_without_jacobian() {
        let f = VectorField::new(1, true, |x, _| vec![-x[0] * x[0] * x[0] * 8.0]);
        let report =
            step_with_diagnostics(SchemeKind::ImplicitMidpoint, &f, &[c(1.0)], 0.0, 2.0).unwrap();
        let y = report.state[0];
        let m = (c(1.0) + y) * 0.5;
        assert!((y - c(1.0) + m * m * m * 16.0).norm() < 1e-12);
    }

    #[test]
    fn bad_jacobian_is_rejected() {
        let f = VectorField::new(1, true, |x, _| vec![x[0] * 2.0]);
        assert!(f
            .with_jacobian(|_, _| DMatrix::from_element(1, 1, c(3.0)))
            .is_err());
    }

    #[test]
    fn dense_stretch_matches_exponential() {
        let ts = TimeScale::interval(0.0, 1.0)
            .unwrap()
            .union(&TimeScale::points(&[1.5, 2.0]).unwrap())
            .unwrap();
        let f = VectorField::harmonic(2.0);
        let tr = integrate(
            SchemeKind::ImplicitMidpoint,
            &f,
            &ts,
            &[c(1.0), c(0.0)],
            0.0,
            1.0,
        )
        .unwrap();
        let (t, x) = tr.last();
        assert_eq!(t, 1.0);
        assert!((x[0].re - 2f64.cos()).abs() < 1e-10);
        assert!((x[1].re + 2.0 * 2f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn discrete_gradient_hand_case() {
        let h = HamiltonianSpec::harmonic(1.0);
        let (q, p) = discrete_gradient_step(&h, 1.0, 0.0, 1.0).unwrap();
        assert!((q - 0.6).abs() < 1e-14 && (p + 0.8).abs() < 1e-14);
        assert!((h.energy(q, p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_gradient_conserves_variable_of_constant_part() {
        let h = HamiltonianSpec::new(|_| 2.0, |q| q * q, |_| 0.0, |q| 2.0 * q);
        let (q, p) = discrete_gradient_step(&h, 0.7, -0.2, 0.5).unwrap();
        assert_eq!(q, 0.7);
        assert!((p + 0.2 + 0.5 * 1.4).abs() < 1e-15);
    }

    #[test]
    fn pendulum_energy_drift() {
        let h = HamiltonianSpec::pendulum(1.0);
        let (q, p) = discrete_gradient_step(&h, 0.5, 0.3, 0.1).unwrap();
        assert!((h.energy(q, p) - h.energy(0.5, 0.3)).abs() <= 1e-12);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.to_string().parse::<SchemeKind>().unwrap(), s);
        }
    }

    #[test]
    fn discrete_gradient_rejects_vector_fields() {
        assert!(matches!(
            step(
                SchemeKind::DiscreteGradient,
                &identity_field(),
                &[c(1.0)],
                0.0,
                1.0
            ),
            Err(Error::InvalidScheme { .. })
        ));
    }

    #[test]
    fn oscillator_residual_on_integers() {
        let z = TimeScale::uniform(0.0, 1.0, 10).unwrap();
        let w = Coefficient::constant(1.0);
        let sin = GridFunction::new(&z, |t| cayley_trig(&z, &w, t, 0.0).unwrap().sin);
        for t in 0..9 {
            assert!(oscillator_residual(&sin, 1.0, f64::from(t)).unwrap().norm() <= 1e-12);
        }
        let zero = GridFunction::new(&z, |_| c(0.0));
        assert_eq!(oscillator_residual(&zero, 1.0, 3.0).unwrap(), c(0.0));
        assert!(matches!(
            oscillator_residual(&sin, 1.0, 9.0),
            Err(Error::DegenerateAtMax { .. })
        ));
    }

    #[test]
    fn cayley_sine_on_nonuniform_grid_needs_graininess_weights() {
        let ts = TimeScale::points(&[0.0, 0.5, 1.5, 2.0]).unwrap();
        let w0 = 0.7;
        let w = Coefficient::constant(w0);
        let sin = |t: f64| cayley_trig(&ts, &w, t, 0.0).unwrap().sin;
        let grid = GridFunction::new(&ts, sin);
        let (t, s, ss) = (0.0, 0.5, 1.5);
        let (mu, mu_s) = (0.5, 1.0);
        let d2 = ((sin(ss) - sin(s)) / mu_s - (sin(s) - sin(t)) / mu) / mu;
        let weighted = (sin(t) + sin(s) + (sin(s) + sin(ss)) * (mu_s / mu)) * 0.25;
        assert!((d2 + weighted * (w0 * w0)).norm() < 1e-14);
        assert!(oscillator_residual(&grid, w0, t).unwrap().norm() > 0.1);
    }

    #[test]
    fn oscillator_residual_classical_at_dense_points() {
        let r = TimeScale::interval(0.0, 4.0).unwrap();
        let cos = GridFunction::new(&r, |t| c((1.3 * t).cos()));
        for &t in &[0.0, 1.7, 3.99] {
            assert!(
                oscillator_residual(&cos, 1.3, t).unwrap().norm() < 1e-7,
                "t = {t}"
            );
        }
    }
}
