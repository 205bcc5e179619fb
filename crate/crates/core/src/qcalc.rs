//! A q-calculus built around the Cayley-type q-exponential
//!
//! ```text
//! E_q(x) = prod_{k>=0} (1 + q^k (1-q) x/2) / (1 - q^k (1-q) x/2)
//!        = sum_{n>=0} x^n / {n}!
//! ```
//!
//! with the bracket `{k} = [k] / ((1 + q^(k-1))/2)` and `[k] = (1 - q^k)/(1 - q)`.
//! The classical Jackson exponentials `e_q`, `E_q` use `[k]`.
//!
//! Series are summed in double-double arithmetic since near the edge of the
//! disc of convergence the alternating terms exceed the result by up to
//! fifteen orders of magnitude.

use num::complex::Complex64;

use crate::dd::{CDd, Dd};
use crate::error::{Error, Result};
use crate::expfun::TAU_REG;

/// Environment variable overriding the default term budget.
pub const MAX_TERMS_ENV: &str = "TSCALE_MAX_TERMS";

const DEFAULT_MAX_TERMS: usize = 5000;
const DEFAULT_SERIES_TOL: f64 = 1e-14;
const LOG_SPACE_ABOVE: u32 = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    series_tol: f64,
    max_terms: usize,
}

impl QParams {
    /// Parameters with default tolerance and term budget.
    pub fn new(q: f64) -> Result<Self> {
        let max_terms = std::env::var(MAX_TERMS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n: &usize| n > 0)
            .unwrap_or(DEFAULT_MAX_TERMS);
        Self::with_limits(q, DEFAULT_SERIES_TOL, max_terms)
    }

    pub fn with_limits(q: f64, series_tol: f64, max_terms: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in (0, 1), got {q}"
            )));
        }
        if !(series_tol >= 10.0 * f64::EPSILON) || !series_tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "series tolerance must be at least 10 eps, got {series_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be positive".into()));
        }
        Ok(QParams {
            q,
            series_tol,
            max_terms,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn series_tol(&self) -> f64 {
        self.series_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    /// Radius `2/(1-q)` of the series and of the product's pole-free disc.
    pub fn radius(&self) -> f64 {
        2.0 / (1.0 - self.q)
    }
}

/// `[k] = 1 + q + ... + q^(k-1)`; equals `k` at `q = 1`.
pub fn jackson_bracket(k: u32, q: f64) -> f64 {
    if q == 1.0 {
        return f64::from(k);
    }
    let lq = q.ln();
    (f64::from(k) * lq).exp_m1() / lq.exp_m1()
}

/// `{k} = [k] / ((1 + q^(k-1))/2)`.
pub fn q_bracket(k: u32, q: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    jackson_bracket(k, q) / (0.5 * (1.0 + q.powi(k as i32 - 1)))
}

/// `{n}! = {1}{2}...{n}`. Above `n = 150` the product is accumulated as a
/// sum of logarithms.
pub fn q_factorial(n: u32, q: f64) -> f64 {
    if n <= LOG_SPACE_ABOVE {
        (1..=n).map(|k| q_bracket(k, q)).product()
    } else {
        (1..=n).map(|k| q_bracket(k, q).ln()).sum::<f64>().exp()
    }
}

/// Sums `sum_n t_n` where `t_{n+1} = t_n * x * w_n / d_n` with `d_n`
/// increasing and `w_n` non-increasing in `(0, 1]`, so that once the term
/// ratio bound drops below one the tail is bounded geometrically.
fn sum_series<S>(x: Complex64, params: &QParams, mut step: S) -> Result<Complex64>
where
    S: FnMut(u32) -> (Dd, Dd),
{
    let ax = x.norm();
    let mut term = CDd::ONE;
    let mut sum = CDd::ONE;
    if ax == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    for n in 1..=params.max_terms as u32 {
        let (weight, denominator) = step(n);
        term = term.mul_c64(x).mul_dd(weight).div_dd(denominator);
        sum = sum + term;
        // ratios only decrease, so the current one bounds the whole tail
        let ratio = ax * weight.to_f64() / denominator.to_f64();
        if ratio < 1.0 {
            let tail = term.norm() * ratio / (1.0 - ratio);
            if tail <= params.series_tol * sum.norm() || tail == 0.0 {
                return Ok(sum.to_c64());
            }
        }
    }
    Err(Error::NoConvergence {
        terms: params.max_terms,
    })
}

/// Double-double `q^k` values by repeated multiplication, indexed from 0.
struct Powers {
    q: f64,
    current: Dd,
    index: u32,
}

impl Powers {
    fn new(q: f64) -> Self {
        Powers {
            q,
            current: Dd::ONE,
            index: 0,
        }
    }

    /// `q^k`; must be called with non-decreasing `k`.
    fn get(&mut self, k: u32) -> Dd {
        while self.index < k {
            self.current = self.current.mul_f64(self.q);
            self.index += 1;
        }
        self.current
    }
}

fn dd_jackson_bracket(one_minus_q: Dd, q_to_k: Dd) -> Dd {
    (Dd::ONE - q_to_k) / one_minus_q
}

/// `sum x^n / {n}!`.
pub fn q_exp_series(x: Complex64, params: &QParams) -> Result<Complex64> {
    let one_minus_q = Dd::ONE - Dd::new(params.q);
    let mut powers = Powers::new(params.q);
    sum_series(x, params, |n| {
        let q_prev = powers.get(n - 1);
        let q_n = powers.get(n);
        let bracket = dd_jackson_bracket(one_minus_q, q_n) / (Dd::ONE + q_prev).mul_f64(0.5);
        (Dd::ONE, bracket)
    })
}

fn check_poles(x: Complex64, params: &QParams) -> Result<()> {
    let a0 = (1.0 - params.q) * 0.5 * x;
    if x.im == 0.0 && x.re > 0.0 {
        // real positive x is the only direction in which 1 - q^k a0 can vanish
        let k = ((1.0 / a0.re).ln() / params.q.ln()).round();
        if k >= 0.0 {
            let den = 1.0 - params.q.powf(k) * a0.re;
            if den.abs() < TAU_REG {
                return Err(Error::PoleInProduct { k: k as usize });
            }
        }
    }
    if x.norm() >= params.radius() * (1.0 - TAU_REG) {
        return Err(Error::InvalidParameter(format!(
            "|x| = {} outside the disc |x| < 2/(1-q) = {}",
            x.norm(),
            params.radius()
        )));
    }
    Ok(())
}

/// `prod_k (1 + q^k (1-q) x/2)/(1 - q^k (1-q) x/2)`, truncated once a factor
/// differs from one by less than `series_tol (1-q)`.
pub fn q_exp_product(x: Complex64, params: &QParams) -> Result<Complex64> {
    check_poles(x, params)?;
    let one = Complex64::new(1.0, 0.0);
    let mut a = (1.0 - params.q) * 0.5 * x;
    let mut value = one;
    let stop = params.series_tol * (1.0 - params.q);
    loop {
        let factor = (one + a) / (one - a);
        value *= factor;
        if (factor - one).norm() < stop {
            return Ok(value);
        }
        a *= params.q;
    }
}

/// Classical Jackson exponentials `(e_q^x, E_q^x)`:
/// `e_q^x = sum x^n/[n]!` for `|x| < 1/(1-q)` and
/// `E_q^x = sum q^(n(n-1)/2) x^n/[n]!`.
pub fn jackson_exponentials(x: Complex64, params: &QParams) -> Result<(Complex64, Complex64)> {
    let one_minus_q = Dd::ONE - Dd::new(params.q);
    let small = {
        let mut powers = Powers::new(params.q);
        sum_series(x, params, |n| {
            (Dd::ONE, dd_jackson_bracket(one_minus_q, powers.get(n)))
        })?
    };
    let big = {
        let mut powers = Powers::new(params.q);
        let mut brackets = Powers::new(params.q);
        sum_series(x, params, |n| {
            let weight = powers.get(n - 1);
            (weight, dd_jackson_bracket(one_minus_q, brackets.get(n)))
        })?
    };
    Ok((small, big))
}

/// `(Cos_q x, Sin_q x) = ((E^(ix) + E^(-ix))/2, (E^(ix) - E^(-ix))/(2i))`.
pub fn q_trig(x: f64, params: &QParams) -> Result<(f64, f64)> {
    let plus = q_exp_product(Complex64::new(0.0, x), params)?;
    let minus = q_exp_product(Complex64::new(0.0, -x), params)?;
    let cos = (plus + minus) * 0.5;
    let sin = (plus - minus) / Complex64::new(0.0, 2.0);
    Ok((cos.re, sin.re))
}

/// `D_q f(x) = (f(qx) - f(x)) / (qx - x)`.
pub fn q_derivative<F: Fn(f64) -> Complex64>(f: F, x: f64, q: f64) -> Result<Complex64> {
    if x == 0.0 || q == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "q-derivative needs x != 0 and q != 1 (x = {x}, q = {q})"
        )));
    }
    Ok((f(q * x) - f(x)) / (q * x - x))
}

/// `<f(x)> = (f(x) + f(qx)) / 2`.
pub fn q_average<F: Fn(f64) -> Complex64>(f: F, x: f64, q: f64) -> Complex64 {
    (f(x) + f(q * x)) * 0.5
}

/// Residuals `D_q Sin_q - <Cos_q>` and `D_q Cos_q + <Sin_q>` at `x`.
pub fn q_trig_derivative_residuals(x: f64, params: &QParams) -> Result<(f64, f64)> {
    let q = params.q;
    let (c0, s0) = q_trig(x, params)?;
    let (c1, s1) = q_trig(q * x, params)?;
    if x == 0.0 {
        return Err(Error::InvalidParameter("q-derivative needs x != 0".into()));
    }
    let h = q * x - x;
    let d_sin = (s1 - s0) / h;
    let d_cos = (c1 - c0) / h;
    Ok((d_sin - 0.5 * (c0 + c1), d_cos + 0.5 * (s0 + s1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(q: f64) -> QParams {
        QParams::with_limits(q, 1e-14, 20_000).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn bracket_values() {
        for &q in &[0.1, 0.5, 0.93] {
            assert_eq!(q_bracket(1, q), 1.0);
            assert!((q_bracket(2, q) - 2.0).abs() < 1e-15);
        }
        assert!((q_bracket(7, 1.0 - 1e-9) - 7.0).abs() < 1e-6);
        assert!((q_bracket(3, 0.5) - 1.75 / 0.625).abs() < 1e-15);
    }

    #[test]
    fn factorial_values() {
        assert_eq!(q_factorial(0, 0.5), 1.0);
        assert!((q_factorial(2, 0.5) - 2.0).abs() < 1e-15);
        assert!((q_factorial(3, 0.5) - 5.6).abs() < 1e-14);
        let direct: f64 = (1..=160).map(|k| q_bracket(k, 0.99)).product();
        assert!((q_factorial(160, 0.99) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_at_zero() {
        let params = p(0.5);
        assert_eq!(q_exp_series(c(0.0), &params).unwrap(), c(1.0));
        assert_eq!(q_exp_product(c(0.0), &params).unwrap(), c(1.0));
        assert_eq!(
            jackson_exponentials(c(0.0), &params).unwrap(),
            (c(1.0), c(1.0))
        );
    }

    #[test]
    fn series_matches_product() {
        let params = p(0.5);
        let s = q_exp_series(c(0.3), &params).unwrap();
        let r = q_exp_product(c(0.3), &params).unwrap();
        assert!((s - r).norm() <= 1e-12 * r.norm());
    }

    #[test]
    fn edge_of_disc_needs_extra_precision() {
        let params = p(0.9);
        for &x in &[-16.0, 16.0] {
            let s = q_exp_series(c(x), &params).unwrap();
            let r = q_exp_product(c(x), &params).unwrap();
            assert!((s - r).norm() <= 1e-12 * r.norm(), "x = {x}: {s} vs {r}");
        }
    }

    #[test]
    fn classical_limit() {
        let params = p(0.999);
        let v = q_exp_series(c(1.0), &params).unwrap();
        assert!((v.re - std::f64::consts::E).abs() < 5e-3);
        let (e, big) = jackson_exponentials(c(0.5), &params).unwrap();
        assert!((e.re - 0.5f64.exp()).abs() < 5e-3 && (big.re - 0.5f64.exp()).abs() < 5e-3);
    }

    #[test]
    fn pole_at_radius() {
        let params = p(0.5);
        assert!(matches!(
            q_exp_product(c(4.0), &params),
            Err(Error::PoleInProduct { k: 0 })
        ));
        assert!(q_trig(4.5, &params).is_err());
    }

    #[test]
    fn factorization() {
        let params = p(0.4);
        let x = c(0.5);
        let (e, big) = jackson_exponentials(x * 0.5, &params).unwrap();
        let v = q_exp_product(x, &params).unwrap();
        assert!((e * big - v).norm() < 1e-12);
    }

    #[test]
    fn trig_values() {
        let params = p(0.5);
        assert_eq!(q_trig(0.0, &params).unwrap(), (1.0, 0.0));
        let (cs, sn) = q_trig(1.0, &params).unwrap();
        assert!((cs * cs + sn * sn - 1.0).abs() < 1e-13);
        let (_, sm) = q_trig(-1.0, &params).unwrap();
        assert_eq!(sm, -sn);
    }

    #[test]
    fn q_derivative_examples() {
        for &(x, q) in &[(2.0, 0.5), (-0.3, 0.9)] {
            let d = q_derivative(c, x, q).unwrap();
            assert!((d - c(1.0)).norm() < 1e-15);
        }
        let d = q_derivative(|t| c(t * t), 2.0, 0.5).unwrap();
        assert_eq!(d, c(3.0));
        let (rs, rc) = q_trig_derivative_residuals(0.8, &p(0.6)).unwrap();
        assert!(rs.abs() <= 1e-11 && rc.abs() <= 1e-11);
    }

    #[test]
    fn params_are_validated() {
        assert!(QParams::new(1.0).is_err());
        assert!(QParams::new(0.0).is_err());
        assert!(QParams::with_limits(0.5, 1e-17, 10).is_err());
    }

    #[test]
    fn term_budget_is_enforced() {
        let params = QParams::with_limits(0.9, 1e-14, 5).unwrap();
        assert!(matches!(
            q_exp_series(c(10.0), &params),
            Err(Error::NoConvergence { terms: 5 })
        ));
    }
}
