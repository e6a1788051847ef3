#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chains;
pub mod cli;
pub mod config;
pub mod geodesic;
pub mod hyperbolic;
pub mod lyapunov;
pub mod metric;
pub mod ode;
pub mod orbits;
pub mod profile;
pub mod quadrature;
pub mod riccati;
