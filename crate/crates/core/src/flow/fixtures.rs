//! Initial data used by the tests, the acceptance suite and the CLI.

use std::f64::consts::{FRAC_PI_2, PI};

use super::state::{BoundaryCondition, FlowState};
use crate::error::Result;

/// Round unit sphere `f(n) = cos(πn/2k)`, `h(n) = sin(πn/2k)`.
pub fn round_sphere(k: usize, l: usize, bc: BoundaryCondition) -> Result<FlowState> {
    let theta = |n: usize| FRAC_PI_2 * n as f64 / k as f64;
    let f = (0..=k).map(|n| if n == k { 0.0 } else { theta(n).cos() }).collect();
    let dh = (0..k).map(|n| theta(n + 1).sin() - theta(n).sin()).collect();
    FlowState::new(f, dh, l, bc)
}

/// Profile whose reflected normals follow the angles `φ(τ_n)`, `τ_n = n/k`, with edges of
/// equal length `len`: edge `n` is orthogonal to the bisector of `φ_n` and `φ_{n+1}`, so
/// reflection carries `(cos φ_n, sin φ_n)` to `(cos φ_{n+1}, sin φ_{n+1})`. The radii are
/// anchored at `f(k) = f_top`.
pub fn from_normal_angles(
    k: usize,
    l: usize,
    len: f64,
    f_top: f64,
    phi: impl Fn(f64) -> f64,
    bc: BoundaryCondition,
) -> Result<FlowState> {
    let angle = |n: usize| phi(n as f64 / k as f64);
    let psi: Vec<f64> = (0..k).map(|n| 0.5 * (angle(n) + angle(n + 1))).collect();
    let mut f = vec![0.0; k + 1];
    f[k] = f_top;
    for n in (0..k).rev() {
        f[n] = f[n + 1] + len * psi[n].sin();
    }
    let dh = psi.iter().map(|p| len * p.cos()).collect();
    FlowState::new(f, dh, l, bc)
}

/// Half of a dumbbell cut at the middle of its neck: a narrow waist at `h = 0` with a
/// horizontal normal, a bulb, and a cone tip on the axis. The normal angle is
/// `φ(τ) = πτ/2 - 0.7 sin(πτ)`, which first turns downward (the radius grows out of the
/// neck) and then up to the vertical at the tip; edges have length `2.5/k`.
///
/// For `k = 6` the radii are about `0.72, 0.74, 0.77, 0.77, 0.67, 0.40, 0` and the
/// curvature runs from `-0.29` at the neck to `2.09` at the tip.
pub fn dumbbell(k: usize, l: usize) -> Result<FlowState> {
    from_normal_angles(k, l, 2.5 / k as f64, 0.0, |t| FRAC_PI_2 * t - 0.7 * (PI * t).sin(), BoundaryCondition::PosCone)
}

/// The dumbbell with a cusp: same angles, stopped where the normal turns vertical
/// (`φ = π/2` at `τ = 1`) but with the top layer `0.3` off the axis.
pub fn dumbbell_cusp(k: usize, l: usize) -> Result<FlowState> {
    from_normal_angles(k, l, 2.5 / k as f64, 0.3, |t| FRAC_PI_2 * t - 0.7 * (PI * t).sin(), BoundaryCondition::PosCusp)
}

/// Negative-curvature cone: the normal starts vertical (`φ = π/2`), tilts to `π/6` at the
/// tip, with `amplitude · sin(πτ)` added; total edge length `10`. With `amplitude = 0`
/// this is close to the sinh family with `q = 1/2` scaled by 8.
///
/// The stiffest mode of the flow scales like `1/size²`; at this size it stays inside the
/// stability interval of RK4 at `dt = 1e-3`, at an eighth of it it does not.
pub fn neg_cone(k: usize, l: usize, amplitude: f64) -> Result<FlowState> {
    let phi = |t: f64| FRAC_PI_2 - PI / 3.0 * t + amplitude * (PI * t).sin();
    from_normal_angles(k, l, 10.0 / k as f64, 0.0, phi, BoundaryCondition::NegCone)
}

/// Negative-curvature cusp: the normal turns from horizontal to pointing down
/// (`φ = -πτ/2 + amplitude · sin(πτ)`), total edge length `3.2`, top radius `4√2`. With
/// `amplitude = 0` this is close to the cosh family with `p = 1` scaled by 4, which again
/// keeps the flow non-stiff at `dt = 1e-3`.
pub fn neg_cusp(k: usize, l: usize, amplitude: f64) -> Result<FlowState> {
    let phi = |t: f64| -FRAC_PI_2 * t + amplitude * (PI * t).sin();
    from_normal_angles(k, l, 3.2 / k as f64, 4.0 * 2f64.sqrt(), phi, BoundaryCondition::NegCusp)
}
