//! Elliptic-integral rate functions, phase-diffusion simulation and the
//! variational problem for the counting statistics of the Sine_β and Sch_τ
//! point processes.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod mc_harness;
pub mod quad;
pub mod rate_fn;
pub mod roots;
pub mod special_fn;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};
pub use rate_fn::{Density, NuParam, RateValue, Slope};
pub use special_fn::{EllipticParam, EllipticValue};
