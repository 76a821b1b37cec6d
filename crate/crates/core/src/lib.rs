//! Boundedness certificates for `x(n+1) = A x(n) + y(n)` driven by
//! exponential sums `y(n) = e(f(n))`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod exec;
pub mod expsum;
pub mod factpoly;
pub mod jordan;
pub mod numeric;
pub mod phasefn;
pub mod scalar;
pub mod selftest;
