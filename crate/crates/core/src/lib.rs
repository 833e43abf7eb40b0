//! Discrete surfaces of revolution built as circular nets, closed-form constant
//! Gaussian curvature profiles, and the normalized Ricci flow on the profile data.
//!
//! - [`surface`]: vertices, normals, fundamental forms, curvatures, mixed areas.
//! - [`cgc`]: discrete CGC, catenoid and Delaunay parametrizations plus smooth references.
//! - [`flow`]: the flow state, right-hand sides, RK4 integration and curvature fits.
//! - [`io`], [`grid`], [`compare`], [`check`]: file formats and the CLI workflows.

pub mod cgc;
pub mod check;
pub mod compare;
pub mod error;
pub mod flow;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod surface;
pub mod tolerances;

pub use error::{Error, Result};
