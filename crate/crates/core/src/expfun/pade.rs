//! Padé table of the exponential.
//!
//! Coefficients are built in exact rational arithmetic and converted to
//! `f64` once; the converted tables are memoized.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest supported `j + k`.
pub const MAX_ORDER: u32 = 12;

/// `R_{j,k}(x) = P_j(x) / Q_k(x)`, both normalized to constant term 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeApproximant {
    pub j: u32,
    pub k: u32,
    /// Numerator coefficients, lowest degree first.
    pub p_coeffs: Vec<f64>,
    /// Denominator coefficients, lowest degree first.
    pub q_coeffs: Vec<f64>,
    p_exact: Vec<BigRational>,
    q_exact: Vec<BigRational>,
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // numerators and denominators stay far below 2^1023 for j + k <= 12
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn horner(coeffs: &[f64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(*coeffs.last().expect("nonempty coefficients"), 0.0);
    for &c in coeffs.iter().rev().skip(1) {
        acc = acc * x + c;
    }
    acc
}

impl PadeApproximant {
    fn build(j: u32, k: u32) -> Self {
        let n = j + k;
        let fn_ = factorial(n);
        let side = |m: u32, sign: bool| -> Vec<BigRational> {
            (0..=m)
                .map(|i| {
                    let num = factorial(m) * factorial(n - i);
                    let den = fn_.clone() * factorial(i) * factorial(m - i);
                    let r = BigRational::new(num, den);
                    if sign && i % 2 == 1 {
                        -r
                    } else {
                        r
                    }
                })
                .collect()
        };
        let p_exact = side(j, false);
        let q_exact = side(k, true);
        PadeApproximant {
            j,
            k,
            p_coeffs: p_exact.iter().map(ratio_to_f64).collect(),
            q_coeffs: q_exact.iter().map(ratio_to_f64).collect(),
            p_exact,
            q_exact,
        }
    }

    pub fn numerator(&self, x: Complex64) -> Complex64 {
        horner(&self.p_coeffs, x)
    }

    pub fn denominator(&self, x: Complex64) -> Complex64 {
        horner(&self.q_coeffs, x)
    }

    /// Exact rational coefficients `(P, Q)`.
    pub fn exact_coefficients(&self) -> (&[BigRational], &[BigRational]) {
        (&self.p_exact, &self.q_exact)
    }

    /// Taylor coefficients of `P/Q` at 0 up to degree `degree`, exactly.
    pub fn taylor(&self, degree: usize) -> Vec<BigRational> {
        let mut out: Vec<BigRational> = Vec::with_capacity(degree + 1);
        for m in 0..=degree {
            let mut c = self
                .p_exact
                .get(m)
                .cloned()
                .unwrap_or_else(BigRational::zero);
            for i in 1..=m.min(self.k as usize) {
                c -= &self.q_exact[i] * &out[m - i];
            }
            out.push(c);
        }
        out
    }
}

/// Exact Taylor coefficients `1/m!` of `e^x` up to `degree`.
pub fn exp_taylor(degree: usize) -> Vec<BigRational> {
    (0..=degree)
        .map(|m| BigRational::new(BigInt::one(), factorial(m as u32)))
        .collect()
}

/// First nonzero term of `R_{j,k}(x) - e^x` as `(order, coefficient)`.
pub fn leading_error(approx: &PadeApproximant) -> (u32, BigRational) {
    let degree = (approx.j + approx.k + 3) as usize;
    let series = approx.taylor(degree);
    let exp = exp_taylor(degree);
    series
        .iter()
        .zip(&exp)
        .enumerate()
        .find_map(|(m, (a, b))| {
            let d = a - b;
            (!d.is_zero()).then_some((m as u32, d))
        })
        .expect("Pade approximant differs from exp within j + k + 1 terms")
}

type Table = RwLock<HashMap<(u32, u32), Arc<PadeApproximant>>>;

fn cache() -> &'static Table {
    static CACHE: OnceLock<Table> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The `(j, k)` entry of the Padé table of `e^x`.
pub fn pade_coefficients(j: u32, k: u32) -> Result<Arc<PadeApproximant>> {
    if j + k == 0 || j + k > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            j,
            k,
            cap: MAX_ORDER,
        });
    }
    if let Some(hit) = cache().read().expect("pade cache poisoned").get(&(j, k)) {
        return Ok(Arc::clone(hit));
    }
    let built = Arc::new(PadeApproximant::build(j, k));
    cache()
        .write()
        .expect("pade cache poisoned")
        .entry((j, k))
        .or_insert_with(|| Arc::clone(&built));
    Ok(built)
}
