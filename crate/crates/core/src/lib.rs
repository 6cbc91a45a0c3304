//! Numerical transmutation operators between half-line Sturm–Liouville operators
//! `P = -D^2` and `Q = -D^2 + q`.

pub mod corpus;
pub mod eigen;
pub mod error;
pub mod grids;
pub mod kernels;
pub mod levitan;
pub mod measure;
pub mod paleywiener;
pub mod potential;
pub mod quad;
pub mod scenario;
pub mod transforms;
pub mod transmute;

pub use error::{Error, Result};
