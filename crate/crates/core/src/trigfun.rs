//! Hyperbolic and trigonometric families on time scales.
//!
//! Every family is assembled from exponentials in [`crate::expfun`]:
//!
//! * Cayley: `Cosh = (E_a + E_-a)/2`, `Cos = (E_iw + E_-iw)/2`, ...
//! * Hilger: `cosh = (e_a + 1/e_a)/2` with the delta exponential.
//! * Bohner–Peterson: `cosh = (e_a + e_-a)/2`, `cos = cosh_iw`,
//!   `sin = -i sinh_iw`.
//! * Exact: restrictions of `cos`, `sin` to the scale.

use std::fmt;
use std::str::FromStr;

use num::complex::Complex64;

use crate::error::{Error, Result};
use crate::expfun::{eval_exp, Coefficient, ExpScheme, TAU_REG};
use crate::timescale::{Segment, TimeScale};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrigFamily {
    Hilger,
    BohnerPeterson,
    Cayley,
    Exact,
}

impl fmt::Display for TrigFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrigFamily::Hilger => "hilger",
            TrigFamily::BohnerPeterson => "bp",
            TrigFamily::Cayley => "cayley",
            TrigFamily::Exact => "exact",
        })
    }
}

impl FromStr for TrigFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hilger" => Ok(TrigFamily::Hilger),
            "bp" | "bohner-peterson" | "bohnerpeterson" => Ok(TrigFamily::BohnerPeterson),
            "cayley" => Ok(TrigFamily::Cayley),
            "exact" => Ok(TrigFamily::Exact),
            _ => Err(Error::InvalidParameter(format!(
                "unknown trigonometric family '{s}'"
            ))),
        }
    }
}

/// A `(cosine-like, sine-like)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub cos: Complex64,
    pub sin: Complex64,
}

/// `(Cos_w, Sin_w)` from Cayley exponentials of `+-i w`.
pub fn cayley_trig(ts: &TimeScale, omega: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
    let iw = omega.times_i();
    let plus = eval_exp(ExpScheme::Cayley, &iw, ts, t, t0)?;
    let minus = eval_exp(ExpScheme::Cayley, &iw.neg(), ts, t, t0)?;
    Ok(Pair {
        cos: (plus + minus) * 0.5,
        sin: (plus - minus) / (I * 2.0),
    })
}

/// `(Cosh_a, Sinh_a)` from Cayley exponentials of `+-a`.
pub fn cayley_hyperbolic(ts: &TimeScale, alpha: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
    let plus = eval_exp(ExpScheme::Cayley, alpha, ts, t, t0)?;
    let minus = eval_exp(ExpScheme::Cayley, &alpha.neg(), ts, t, t0)?;
    Ok(Pair {
        cos: (plus + minus) * 0.5,
        sin: (plus - minus) * 0.5,
    })
}

/// Checks `1 + mu alpha != 0` on every jump between `t0` and `t`.
fn check_delta_regressive(
    ts: &TimeScale,
    alpha: &Coefficient,
    t: f64,
    t0: f64,
    scheme: &str,
) -> Result<()> {
    let (a, b) = if t >= t0 { (t0, t) } else { (t, t0) };
    for segment in ts.segments(ts.snap(a)?, ts.snap(b)?)? {
        if let Segment::Step { t, mu } = segment {
            let value = alpha.at(t);
            if (Complex64::new(1.0, 0.0) + value * mu).norm() < TAU_REG {
                return Err(Error::NotRegressive {
                    scheme: scheme.to_string(),
                    t,
                    mu,
                    value: value.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Hilger's `(cosh_a, sinh_a)` built from `e_a` and its reciprocal.
pub fn hilger_hyperbolic(ts: &TimeScale, alpha: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
    check_delta_regressive(ts, alpha, t, t0, "hilger")?;
    let e = eval_exp(ExpScheme::Delta, alpha, ts, t, t0)?;
    let inv = Complex64::new(1.0, 0.0) / e;
    Ok(Pair {
        cos: (e + inv) * 0.5,
        sin: (e - inv) * 0.5,
    })
}

/// Residuals of Hilger's derivative formulas at `t`:
///
/// ```text
/// cosh^D = (mu a^2/2)/(1 + mu a) cosh + (a + mu a^2/2)/(1 + mu a) sinh
/// sinh^D = (mu a^2/2)/(1 + mu a) sinh + (a + mu a^2/2)/(1 + mu a) cosh
/// ```
///
/// The functions are anchored at [`TimeScale::anchor`]. At right-dense
/// points the left sides are finite-difference estimates.
pub fn hilger_derivative_residual(
    ts: &TimeScale,
    alpha: &Coefficient,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let t = ts.snap(t)?;
    let t0 = ts.anchor();
    let mu = ts.graininess(t)?;
    let a = alpha.at(t);
    let here = hilger_hyperbolic(ts, alpha, t, t0)?;
    let (d_cosh, d_sinh) = if mu > 0.0 {
        let next = hilger_hyperbolic(ts, alpha, t + mu, t0)?;
        ((next.cos - here.cos) / mu, (next.sin - here.sin) / mu)
    } else {
        use crate::timescale::GridFunction;
        let cosh = GridFunction::new(ts, |s| {
            hilger_hyperbolic(ts, alpha, s, t0).map_or(Complex64::new(f64::NAN, 0.0), |p| p.cos)
        });
        let sinh = GridFunction::new(ts, |s| {
            hilger_hyperbolic(ts, alpha, s, t0).map_or(Complex64::new(f64::NAN, 0.0), |p| p.sin)
        });
        (cosh.delta_derivative(t)?, sinh.delta_derivative(t)?)
    };
    let den = Complex64::new(1.0, 0.0) + a * mu;
    let c1 = a * a * (0.5 * mu) / den;
    let c2 = (a + a * a * (0.5 * mu)) / den;
    Ok((
        d_cosh - (c1 * here.cos + c2 * here.sin),
        d_sinh - (c1 * here.sin + c2 * here.cos),
    ))
}

/// Bohner–Peterson `(cosh_a, sinh_a) = ((e_a + e_-a)/2, (e_a - e_-a)/2)`.
pub fn bp_hyperbolic(ts: &TimeScale, alpha: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
    check_delta_regressive(ts, alpha, t, t0, "bohner-peterson")?;
    check_delta_regressive(ts, &alpha.neg(), t, t0, "bohner-peterson")?;
    let plus = eval_exp(ExpScheme::Delta, alpha, ts, t, t0)?;
    let minus = eval_exp(ExpScheme::Delta, &alpha.neg(), ts, t, t0)?;
    Ok(Pair {
        cos: (plus + minus) * 0.5,
        sin: (plus - minus) * 0.5,
    })
}

/// Bohner–Peterson `(cos_w, sin_w) = (cosh_iw, -i sinh_iw)`.
pub fn bp_trig(ts: &TimeScale, omega: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
    let h = bp_hyperbolic(ts, &omega.times_i(), t, t0)?;
    Ok(Pair {
        cos: h.cos,
        sin: -I * h.sin,
    })
}

/// `(cos(w0 (t - t0)), sin(w0 (t - t0)))`.
pub fn exact_trig(omega0: f64, t: f64, t0: f64) -> Pair {
    let phase = omega0 * (t - t0);
    Pair {
        cos: Complex64::new(phase.cos(), 0.0),
        sin: Complex64::new(phase.sin(), 0.0),
    }
}

/// `(cosh(a (t - t0)), sinh(a (t - t0)))` for constant `a`.
pub fn exact_hyperbolic(alpha: Complex64, t: f64, t0: f64) -> Pair {
    let x = alpha * (t - t0);
    Pair {
        cos: x.cosh(),
        sin: x.sinh(),
    }
}

fn require_constant(coefficient: &Coefficient, family: TrigFamily) -> Result<Complex64> {
    coefficient
        .constant_value()
        .ok_or_else(|| Error::InvalidScheme {
            scheme: family.to_string(),
            reason: "needs a constant coefficient".into(),
        })
}

impl TrigFamily {
    /// Trigonometric pair of this family. Hilger's trigonometric functions
    /// are the exact ones, so both need a constant real `omega`.
    pub fn trig(&self, ts: &TimeScale, omega: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
        match self {
            TrigFamily::Cayley => cayley_trig(ts, omega, t, t0),
            TrigFamily::BohnerPeterson => bp_trig(ts, omega, t, t0),
            TrigFamily::Hilger | TrigFamily::Exact => {
                let w = require_constant(omega, *self)?;
                let t = ts.snap(t)?;
                let t0 = ts.snap(t0)?;
                if w.im != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "{self} trigonometric functions need a real frequency, got {w}"
                    )));
                }
                Ok(exact_trig(w.re, t, t0))
            }
        }
    }

    /// Hyperbolic pair of this family.
    pub fn hyperbolic(&self, ts: &TimeScale, alpha: &Coefficient, t: f64, t0: f64) -> Result<Pair> {
        match self {
            TrigFamily::Cayley => cayley_hyperbolic(ts, alpha, t, t0),
            TrigFamily::BohnerPeterson => bp_hyperbolic(ts, alpha, t, t0),
            TrigFamily::Hilger => hilger_hyperbolic(ts, alpha, t, t0),
            TrigFamily::Exact => {
                let a = require_constant(alpha, *self)?;
                Ok(exact_hyperbolic(a, ts.snap(t)?, ts.snap(t0)?))
            }
        }
    }
}
