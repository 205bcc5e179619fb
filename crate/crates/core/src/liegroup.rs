//! Cayley flows on quadratic matrix groups `G = {X : X* J X = J}`.
//!
//! On a right-scattered step the flow is `Phi^s = cay(mu A) Phi` with
//! `cay(mu A) = (I - mu A/2)^{-1} (I + mu A/2)`; on a dense stretch it is the
//! exact solution of `Phi' = A Phi`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num::complex::Complex64;

use crate::error::{Error, Result};
use crate::expfun::{pade_coefficients, TAU_REG};
use crate::timescale::{Segment, TimeScale};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance of the non-constant dense-stretch evolution.
pub const TAU_DENSE: f64 = 1e-10;
const ALGEBRA_RTOL: f64 = 1e-10;
const GROUP_RTOL: f64 = 1e-10;
const MAGNUS_MAX_HALVINGS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    /// `X* = X^T`
    Real,
    /// `X* = conj(X)^T`
    Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGroupSpec {
    j: CMatrix,
    field: ScalarField,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl QuadraticGroupSpec {
    pub fn new(j: CMatrix, field: ScalarField) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::DimensionMismatch {
                expected: j.nrows(),
                got: j.ncols(),
            });
        }
        if j.nrows() == 0 || j.clone().try_inverse().is_none() {
            return Err(Error::InvalidParameter(
                "J must be an invertible matrix".into(),
            ));
        }
        Ok(QuadraticGroupSpec { j, field })
    }

    /// `O(n)`, with `J = I`.
    pub fn orthogonal(n: usize) -> Self {
        QuadraticGroupSpec {
            j: CMatrix::identity(n, n),
            field: ScalarField::Real,
        }
    }

    /// `U(n)`, with `J = I` and the conjugate transpose.
    pub fn unitary(n: usize) -> Self {
        QuadraticGroupSpec {
            j: CMatrix::identity(n, n),
            field: ScalarField::Complex,
        }
    }

    /// `Sp(n)` for even `n`, with `J = [[0, I], [-I, 0]]`.
    pub fn symplectic(n: usize) -> Result<Self> {
        if n == 0 || n % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "symplectic group needs even n, got {n}"
            )));
        }
        let h = n / 2;
        let mut j = CMatrix::zeros(n, n);
        for i in 0..h {
            j[(i, h + i)] = c(1.0);
            j[(h + i, i)] = c(-1.0);
        }
        Ok(QuadraticGroupSpec {
            j,
            field: ScalarField::Real,
        })
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn j(&self) -> &CMatrix {
        &self.j
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn star(&self, x: &CMatrix) -> CMatrix {
        match self.field {
            ScalarField::Real => x.transpose(),
            ScalarField::Complex => x.adjoint(),
        }
    }

    fn check_dim(&self, x: &CMatrix) -> Result<()> {
        let n = self.dim();
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.nrows(),
            });
        }
        Ok(())
    }

    /// `||A* J + J A||_F`.
    pub fn algebra_defect(&self, a: &CMatrix) -> Result<f64> {
        self.check_dim(a)?;
        Ok((self.star(a) * &self.j + &self.j * a).norm())
    }

    fn algebra_tol(&self, a: &CMatrix) -> f64 {
        ALGEBRA_RTOL * a.norm() * self.j.norm().max(1.0)
    }

    fn group_tol(&self) -> f64 {
        GROUP_RTOL * self.j.norm().max(1.0)
    }
}

/// `||Phi* J Phi - J||_F`.
pub fn membership_defect(group: &QuadraticGroupSpec, phi: &CMatrix) -> Result<f64> {
    group.check_dim(phi)?;
    Ok((group.star(phi) * &group.j * phi - &group.j).norm())
}

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(I - mu A/2)^{-1} (I + mu A/2)` by LU with one refinement step.
pub fn cayley_matrix(a: &CMatrix, mu: f64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let half = a * c(0.5 * mu);
    let id = CMatrix::identity(n, n);
    let lhs = &id - &half;
    let rhs = &id + &half;
    let lu = lhs.clone().lu();
    let singular = || Error::SingularCayley {
        condition: f64::INFINITY,
    };
    let inverse = lu.try_inverse().ok_or_else(singular)?;
    let condition = norm1(&lhs) * norm1(&inverse);
    if !(condition < 1.0 / TAU_REG) {
        return Err(Error::SingularCayley { condition });
    }
    let mut x = lu.solve(&rhs).ok_or_else(singular)?;
    let residual = &rhs - &lhs * &x;
    x += lu.solve(&residual).ok_or_else(singular)?;
    Ok(x)
}

/// Matrix exponential by scaling and squaring around the Pade (6, 6)
/// approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(squarings));
    let pade = pade_coefficients(6, 6).expect("order 12 is supported");
    let mut num = CMatrix::zeros(n, n);
    let mut den = CMatrix::zeros(n, n);
    let mut power = CMatrix::identity(n, n);
    for i in 0..=6 {
        num += &power * c(pade.p_coeffs[i]);
        den += &power * c(pade.q_coeffs[i]);
        power = &power * &scaled;
    }
    let mut result = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is well conditioned");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

type MatrixFn = dyn Fn(f64) -> CMatrix + Send + Sync;

/// `Phi^D = A <Phi>` on a time scale, started from `phi0`.
#[derive(Clone)]
pub struct LieFlowProblem {
    group: QuadraticGroupSpec,
    a: Arc<MatrixFn>,
    constant: bool,
    phi0: CMatrix,
    scale: TimeScale,
}

impl fmt::Debug for LieFlowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieFlowProblem")
            .field("group", &self.group)
            .field("constant", &self.constant)
            .field("phi0", &self.phi0)
            .field("scale", &self.scale)
            .finish()
    }
}

impl LieFlowProblem {
    /// Checks that `phi0` lies in the group; algebra membership of `A` is
    /// checked wherever it is evaluated.
    pub fn new<F>(group: QuadraticGroupSpec, a: F, phi0: CMatrix, scale: TimeScale) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        let defect = membership_defect(&group, &phi0)?;
        let tol = group.group_tol();
        if !(defect <= tol) {
            return Err(Error::GroupViolation { defect, tol });
        }
        Ok(LieFlowProblem {
            group,
            a: Arc::new(a),
            constant: false,
            phi0,
            scale,
        })
    }

    pub fn constant(
        group: QuadraticGroupSpec,
        a: CMatrix,
        phi0: CMatrix,
        scale: TimeScale,
    ) -> Result<Self> {
        let mut problem = Self::new(group, move |_| a.clone(), phi0, scale)?;
        problem.constant = true;
        Ok(problem)
    }

    pub fn group(&self) -> &QuadraticGroupSpec {
        &self.group
    }

    pub fn scale(&self) -> &TimeScale {
        &self.scale
    }

    fn coefficient(&self, t: f64) -> Result<CMatrix> {
        let a = (self.a)(t);
        let defect = self.group.algebra_defect(&a)?;
        let tol = self.group.algebra_tol(&a);
        if !(defect <= tol) {
            return Err(Error::AlgebraViolation { t, defect, tol });
        }
        Ok(a)
    }

    /// One fourth-order Magnus step over `[t, t + h]`.
    fn magnus_step(&self, t: f64, h: f64) -> Result<CMatrix> {
        let r = 3f64.sqrt() / 6.0;
        let a1 = self.coefficient(t + (0.5 - r) * h)?;
        let a2 = self.coefficient(t + (0.5 + r) * h)?;
        let commutator = &a2 * &a1 - &a1 * &a2;
        let omega = (&a1 + &a2) * c(0.5 * h) + commutator * c(3f64.sqrt() * h * h / 12.0);
        Ok(expm(&omega))
    }

    fn magnus(&self, lo: f64, hi: f64, pieces: usize) -> Result<CMatrix> {
        let n = self.group.dim();
        let h = (hi - lo) / pieces as f64;
        let mut u = CMatrix::identity(n, n);
        for i in 0..pieces {
            u = self.magnus_step(lo + i as f64 * h, h)? * u;
        }
        Ok(u)
    }

    /// Propagator over a dense stretch.
    fn dense_propagator(&self, lo: f64, hi: f64) -> Result<CMatrix> {
        if self.constant {
            let a = self.coefficient(lo)?;
            return Ok(expm(&(a * c(hi - lo))));
        }
        let mut pieces = 4;
        let mut coarse = self.magnus(lo, hi, pieces)?;
        for _ in 0..MAGNUS_MAX_HALVINGS {
            pieces *= 2;
            let fine = self.magnus(lo, hi, pieces)?;
            let estimate = (&fine - &coarse).norm() / 15.0;
            if estimate <= TAU_DENSE {
                return Ok(fine);
            }
            coarse = fine;
        }
        Err(Error::SolverDiverged {
            t: lo,
            residuals: vec![coarse.norm()],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPoint {
    pub t: f64,
    pub phi: CMatrix,
    pub defect: f64,
}

/// Flow from `t0` to `t1`, one entry per scale point reached (dense
/// stretches contribute their end point).
pub fn flow(problem: &LieFlowProblem, t0: f64, t1: f64) -> Result<Vec<FlowPoint>> {
    let ts = &problem.scale;
    let a = ts.snap(t0)?;
    let b = ts.snap(t1)?;
    if a > b {
        return Err(Error::InvalidParameter(format!(
            "flow needs t0 <= t1, got {t0} > {t1}"
        )));
    }
    let group = &problem.group;
    let mut phi = problem.phi0.clone();
    let mut out = vec![FlowPoint {
        t: a,
        defect: membership_defect(group, &phi)?,
        phi: phi.clone(),
    }];
    for segment in ts.segments(a, b)? {
        let (t, propagator) = match segment {
            Segment::Step { t, mu } => {
                let step = cayley_matrix(&problem.coefficient(t)?, mu)?;
                (ts.sigma(t)?, step)
            }
            Segment::Dense { lo, hi } => (hi, problem.dense_propagator(lo, hi)?),
        };
        phi = propagator * phi;
        out.push(FlowPoint {
            t,
            defect: membership_defect(group, &phi)?,
            phi: phi.clone(),
        });
    }
    Ok(out)
}
