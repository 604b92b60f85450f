//! Infimal sub-differential size (IDS) tooling for first-order primal-dual
//! methods on convex-concave saddle problems and linear programs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod harness;
pub mod ids;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
