// negated float comparisons are deliberate: NaN must take the failure branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dd;
pub mod dynamics;
pub mod error;
pub mod expfun;
pub mod liegroup;
pub mod qcalc;
pub mod quadrature;
pub mod timescale;
pub mod trigfun;
pub mod verify;

pub use error::{Error, Result};
pub use num::complex::Complex64;
