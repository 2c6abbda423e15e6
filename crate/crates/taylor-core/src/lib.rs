pub mod analytic_reference;
pub mod beltrami_solver;
pub mod error;
pub mod field_eval;
pub mod geometry;
pub mod modal_kernels;
pub mod par;
pub mod quad;
pub mod specfun;
pub mod surface_calculus;

pub use error::{Error, Result};
