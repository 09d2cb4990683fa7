// `!(a > b)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfun;
pub mod densities;
pub mod domain;
pub mod error;
pub mod moments;
pub mod montecarlo;
pub mod quadrature;
pub mod specfun;
pub mod verify;
