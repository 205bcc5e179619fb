//! Exponential functions on time scales.
//!
//! Five families share one evaluation path: a product of one-step
//! multipliers over the scattered jumps between `t0` and `t`, times
//! `exp(int alpha)` over every dense stretch. They differ only in the
//! multiplier ([`step_factor`]):
//!
//! | scheme      | multiplier at a jump of size `mu`          |
//! |-------------|--------------------------------------------|
//! | `Delta`     | `1 + alpha(t) mu`                          |
//! | `Nabla`     | `1 / (1 - alpha(sigma(t)) mu)`             |
//! | `Cayley`    | `(1 + alpha mu / 2) / (1 - alpha mu / 2)`  |
//! | `Pade(j,k)` | `P_j(alpha mu) / Q_k(alpha mu)`            |
//! | `Exact`     | `exp(alpha mu)` (constant `alpha` only)    |

mod pade;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num::complex::Complex64;
use num::ToPrimitive;

pub use pade::{exp_taylor, leading_error, pade_coefficients, PadeApproximant, MAX_ORDER};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::timescale::{GridFunction, Segment, TimeScale};

/// Regressivity tolerance: a denominator smaller than
/// `TAU_REG * max(1, |numerator|)` is treated as zero.
pub const TAU_REG: f64 = 1e-10;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A coefficient function `alpha: T -> C`.
///
/// `constant` is set when the function is known to be constant; the exact
/// scheme requires it and dense stretches skip quadrature when it is present.
#[derive(Clone)]
pub struct Coefficient {
    eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    constant: Option<Complex64>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "Coefficient::constant({c})"),
            None => write!(f, "Coefficient::from_fn(..)"),
        }
    }
}

impl Coefficient {
    pub fn constant(value: impl Into<Complex64>) -> Self {
        let c = value.into();
        Coefficient {
            eval: Arc::new(move |_| c),
            constant: Some(c),
        }
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Coefficient {
            eval: Arc::new(f),
            constant: None,
        }
    }

    /// Real-valued coefficient from a real callable.
    pub fn from_real_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(move |t| Complex64::new(f(t), 0.0))
    }

    #[inline]
    pub fn at(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    pub fn constant_value(&self) -> Option<Complex64> {
        self.constant
    }

    /// Pointwise image under `g`; the constant hint is carried through.
    pub fn map<G>(&self, g: G) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let constant = self.constant.map(&g);
        let inner = Arc::clone(&self.eval);
        Coefficient {
            eval: Arc::new(move |t| g(inner(t))),
            constant,
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|z| -z)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(move |z| z * factor)
    }

    /// `i * alpha`, the argument of trigonometric functions.
    pub fn times_i(&self) -> Self {
        self.scale(Complex64::new(0.0, 1.0))
    }
}

/// Choice of exponential family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpScheme {
    Delta,
    Nabla,
    Cayley,
    Pade { j: u32, k: u32 },
    Exact,
}

impl fmt::Display for ExpScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpScheme::Delta => write!(f, "delta"),
            ExpScheme::Nabla => write!(f, "nabla"),
            ExpScheme::Cayley => write!(f, "cayley"),
            ExpScheme::Pade { j, k } => write!(f, "pade:{j}:{k}"),
            ExpScheme::Exact => write!(f, "exact"),
        }
    }
}

impl FromStr for ExpScheme {
    type Err = Error;

    /// Accepts `delta`, `nabla`, `cayley`, `exact` and `pade:J:K`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "delta" => return Ok(ExpScheme::Delta),
            "nabla" => return Ok(ExpScheme::Nabla),
            "cayley" => return Ok(ExpScheme::Cayley),
            "exact" => return Ok(ExpScheme::Exact),
            _ => {}
        }
        let bad = || Error::InvalidParameter(format!("unknown scheme '{s}'"));
        let rest = lower.strip_prefix("pade:").ok_or_else(bad)?;
        let (j, k) = rest.split_once(':').ok_or_else(bad)?;
        let j: u32 = j.parse().map_err(|_| bad())?;
        let k: u32 = k.parse().map_err(|_| bad())?;
        pade_coefficients(j, k)?;
        Ok(ExpScheme::Pade { j, k })
    }
}

fn too_small(den: Complex64, num: Complex64) -> bool {
    den.norm() < TAU_REG * num.norm().max(1.0)
}

fn not_regressive(scheme: ExpScheme, t: f64, mu: f64, value: Complex64) -> Error {
    Error::NotRegressive {
        scheme: scheme.to_string(),
        t,
        mu,
        value: value.to_string(),
    }
}

/// One-step multiplier `m` with `x(sigma(t)) = m x(t)` across a jump of size
/// `mu`.
///
/// Delta, Cayley and Padé read the coefficient at `t`; Nabla reads it at
/// `sigma(t)`.
pub fn step_factor(
    scheme: ExpScheme,
    alpha_at_t: Complex64,
    alpha_at_sigma: Complex64,
    mu: f64,
) -> Result<Complex64> {
    step_factor_at(scheme, alpha_at_t, alpha_at_sigma, mu, f64::NAN)
}

fn step_factor_at(
    scheme: ExpScheme,
    alpha_t: Complex64,
    alpha_s: Complex64,
    mu: f64,
    t: f64,
) -> Result<Complex64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "graininess {mu} must be nonnegative"
        )));
    }
    let x = alpha_t * mu;
    match scheme {
        ExpScheme::Delta => Ok(ONE + x),
        ExpScheme::Nabla => {
            let den = ONE - alpha_s * mu;
            if too_small(den, ONE) {
                return Err(not_regressive(scheme, t, mu, alpha_s));
            }
            Ok(ONE / den)
        }
        ExpScheme::Cayley => {
            let num = ONE + x * 0.5;
            let den = ONE - x * 0.5;
            if too_small(den, num) || too_small(num, den) {
                return Err(not_regressive(scheme, t, mu, alpha_t));
            }
            Ok(num / den)
        }
        ExpScheme::Pade { j, k } => {
            let r = pade_coefficients(j, k)?;
            let num = r.numerator(x);
            let den = r.denominator(x);
            if too_small(den, num) {
                return Err(not_regressive(scheme, t, mu, alpha_t));
            }
            Ok(num / den)
        }
        ExpScheme::Exact => Ok(x.exp()),
    }
}

fn dense_factor(alpha: &Coefficient, lo: f64, hi: f64) -> Result<Complex64> {
    let integral = match alpha.constant_value() {
        Some(c) => c * (hi - lo),
        None => quadrature::integrate(|s| alpha.at(s), lo, hi, quadrature::TAU_QUAD)?,
    };
    Ok(integral.exp())
}

/// Product of multipliers along the path `a -> b`, `a <= b`.
fn forward_product(
    scheme: ExpScheme,
    alpha: &Coefficient,
    ts: &TimeScale,
    a: f64,
    b: f64,
) -> Result<Complex64> {
    let mut value = ONE;
    for segment in ts.segments(a, b)? {
        value *= match segment {
            Segment::Dense { lo, hi } => dense_factor(alpha, lo, hi)?,
            Segment::Step { t, mu } => {
                let alpha_s = if scheme == ExpScheme::Nabla {
                    alpha.at(t + mu)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                step_factor_at(scheme, alpha.at(t), alpha_s, mu, t)?
            }
        };
    }
    Ok(value)
}

/// Exponential `E(t, t0)` of the chosen family.
///
/// For `t < t0` the value is the reciprocal of the forward product, so that
/// `E(t, t0) E(t0, t1) = E(t, t1)` for every ordering.
pub fn eval_exp(
    scheme: ExpScheme,
    alpha: &Coefficient,
    ts: &TimeScale,
    t: f64,
    t0: f64,
) -> Result<Complex64> {
    let t = ts.snap(t)?;
    let t0 = ts.snap(t0)?;
    if scheme == ExpScheme::Exact {
        let c = alpha.constant_value().ok_or_else(|| Error::InvalidScheme {
            scheme: scheme.to_string(),
            reason: "the exact exponential needs a constant coefficient".into(),
        })?;
        return Ok((c * (t - t0)).exp());
    }
    if t >= t0 {
        forward_product(scheme, alpha, ts, t0, t)
    } else {
        let forward = forward_product(scheme, alpha, ts, t, t0)?;
        if forward.norm() == 0.0 || !forward.is_finite() {
            return Err(not_regressive(
                scheme,
                t,
                0.0,
                Complex64::new(f64::NAN, 0.0),
            ));
        }
        Ok(ONE / forward)
    }
}

/// `zeta_mu(z) = log((1 + z mu/2) / (1 - z mu/2)) / mu`, with `zeta_0(z) = z`.
pub fn cylinder(mu: f64, z: Complex64) -> Result<Complex64> {
    if mu == 0.0 {
        return Ok(z);
    }
    let x = z * mu;
    let num = ONE + x * 0.5;
    let den = ONE - x * 0.5;
    if too_small(den, num) || too_small(num, den) {
        return Err(not_regressive(ExpScheme::Cayley, f64::NAN, mu, z));
    }
    Ok((num / den).ln() / mu)
}

/// Cayley exponential written as `exp(int zeta_mu(s)(alpha(s)) Delta s)`.
pub fn cylinder_exp(alpha: &Coefficient, ts: &TimeScale, t: f64, t0: f64) -> Result<Complex64> {
    let t = ts.snap(t)?;
    let t0 = ts.snap(t0)?;
    let (a, b, sign) = if t >= t0 { (t0, t, 1.0) } else { (t, t0, -1.0) };
    // graininess is zero inside dense stretches, so the integrand reduces to
    // alpha there; the quadrature never touches the stretch endpoints
    let integrand = |s: f64| {
        let mu = ts.graininess(s).unwrap_or(0.0);
        cylinder(mu, alpha.at(s)).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let integral = GridFunction::new(ts, integrand).delta_integral(a, b)?;
    if !integral.is_finite() {
        let s = ts
            .segments(a, b)?
            .into_iter()
            .find_map(|seg| match seg {
                Segment::Step { t, mu } if cylinder(mu, alpha.at(t)).is_err() => Some((t, mu)),
                _ => None,
            })
            .unwrap_or((f64::NAN, f64::NAN));
        return Err(not_regressive(ExpScheme::Cayley, s.0, s.1, alpha.at(s.0)));
    }
    Ok((integral * sign).exp())
}

/// `beta = alpha / (1 - mu alpha / 2)`: the delta coefficient with
/// `e_beta = E_alpha`.
pub fn alpha_to_beta(alpha: Complex64, mu: f64) -> Result<Complex64> {
    let den = ONE - alpha * (0.5 * mu);
    let num = ONE + alpha * (0.5 * mu);
    if too_small(den, alpha) || too_small(num, alpha) {
        return Err(not_regressive(ExpScheme::Cayley, f64::NAN, mu, alpha));
    }
    Ok(alpha / den)
}

/// `alpha = beta / (1 + mu beta / 2)`, inverse of [`alpha_to_beta`].
pub fn beta_to_alpha(beta: Complex64, mu: f64) -> Result<Complex64> {
    let den = ONE + beta * (0.5 * mu);
    if too_small(ONE + beta * mu, ONE) || too_small(den, beta) {
        return Err(not_regressive(ExpScheme::Delta, f64::NAN, mu, beta));
    }
    Ok(beta / den)
}

/// `(alpha + beta) / (1 + mu^2 alpha beta / 4)`.
pub fn circle_plus(alpha: Complex64, beta: Complex64, mu: f64) -> Result<Complex64> {
    let num = alpha + beta;
    let den = ONE + alpha * beta * (0.25 * mu * mu);
    if too_small(den, num) {
        return Err(Error::SingularOplus { mu });
    }
    Ok(num / den)
}

/// Delta coefficient `t -> alpha_to_beta(alpha(t), mu(t))` on `ts`.
///
/// Points where the map is singular evaluate to NaN, which then surfaces as a
/// non-finite exponential.
pub fn beta_coefficient(alpha: &Coefficient, ts: &TimeScale) -> Coefficient {
    let ts = ts.clone();
    let alpha = alpha.clone();
    Coefficient::from_fn(move |t| {
        let mu = ts.graininess(t).unwrap_or(0.0);
        alpha_to_beta(alpha.at(t), mu).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    })
}

/// Coefficient `t -> alpha(t) (+) beta(t)` with the local graininess.
pub fn oplus_coefficient(alpha: &Coefficient, beta: &Coefficient, ts: &TimeScale) -> Coefficient {
    let ts = ts.clone();
    let (alpha, beta) = (alpha.clone(), beta.clone());
    Coefficient::from_fn(move |t| {
        let mu = ts.graininess(t).unwrap_or(0.0);
        circle_plus(alpha.at(t), beta.at(t), mu).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    })
}

/// `psi_alpha(mu) = 2 tanh(alpha mu / 2) / (alpha mu)`, equal to 1 at
/// right-dense points and continuous at `alpha mu = 0`.
pub fn exact_psi(alpha: Complex64, mu: f64) -> Complex64 {
    if mu == 0.0 {
        return ONE;
    }
    let z = alpha * mu;
    if z.norm() == 0.0 {
        return ONE;
    }
    (z * 0.5).tanh() * 2.0 / z
}

/// Leading term `coefficient * z^order` of `step_factor(z) - e^z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingError {
    pub order: u32,
    /// Exact value as `(numerator, denominator)`.
    pub exact: (i128, i128),
    pub coefficient: f64,
}

/// Leading local error term of a scheme, from exact series subtraction.
/// `None` for the exact scheme.
pub fn local_error_expansion(scheme: ExpScheme) -> Result<Option<LeadingError>> {
    let (j, k) = match scheme {
        ExpScheme::Delta => (1, 0),
        ExpScheme::Nabla => (0, 1),
        ExpScheme::Cayley => (1, 1),
        ExpScheme::Pade { j, k } => (j, k),
        ExpScheme::Exact => return Ok(None),
    };
    let (order, c) = leading_error(pade_coefficients(j, k)?.as_ref());
    let num = c.numer().to_i128().unwrap_or(i128::MAX);
    let den = c.denom().to_i128().unwrap_or(i128::MAX);
    Ok(Some(LeadingError {
        order,
        exact: (num, den),
        coefficient: num as f64 / den as f64,
    }))
}

/// `|step_factor(z) - e^z|` for a scalar `z = alpha mu` with `mu = 1`.
pub fn local_error(scheme: ExpScheme, z: Complex64) -> Result<f64> {
    Ok((step_factor(scheme, z, z, 1.0)? - z.exp()).norm())
}
