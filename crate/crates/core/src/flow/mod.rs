//! Normalized (and unnormalized) Ricci flow on discrete surfaces of revolution.
//!
//! The metric of each band evolves by `d g_ii(n)/dt = (r - 2K(n)) g_ii(n)` with `r` the
//! area-weighted mean of `2K`; the unknowns are the radii and height differences
//! `X = (f(0..=k), Δh(0..k))`, the normal is pinned at the bottom layer, and one more
//! pin at the top (cone or cusp) closes the system.

pub mod fit;
pub mod fixtures;
mod integrate;
mod rhs;
mod state;

pub use integrate::{integrate, integrate_batch, FlowTrace, IntegrateOptions, Snapshots, StopRule, DEFAULT_DT};
pub use rhs::{
    constraint_jacobian, constraint_map, finite_difference_jacobian, r_of_t, rhs_explicit_flow5, rhs_generic,
    SINGULAR_PIVOT_RATIO,
};
pub use state::{BoundaryCondition, FlowState, Pin, ACCEPT_RESIDUAL};
pub use fit::{fit_cgc, negative_fit, positive_cone_from_heights, CgcFit, FitFamily};
