//! Right-hand sides of the flow `dX/dt = F(X)`.
//!
//! The metric equations give `2k` conditions `d g_ii(n)/dt = (r - 2K(n)) g_ii(n)` on
//! the `2k + 1` unknowns; the pinned top condition supplies the last row. Writing
//! `Φ(X) = (g11(0..k), g22(0..k), pin(X))`, the velocity solves `J_Φ · dX/dt = rhs`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::state::{evaluate, BoundaryCondition, FlowState, Layers, Pin};
use crate::error::{Error, Result};

/// Pivot ratio of the LU factorization beyond which the Jacobian counts as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e13;

/// `r = Σ 2K(i) A(i) / Σ A(i)`.
pub fn r_of_t(state: &FlowState) -> Result<f64> {
    Ok(state.layers()?.r())
}

/// Derivatives of the normal recursion with respect to every state variable.
struct NormalJet {
    a: Vec<f64>,
    /// `∂a(k)/∂X`.
    da_top: Vec<f64>,
}

fn normal_jet(x: &[f64], k: usize, seed: (f64, f64)) -> Result<NormalJet> {
    let dim = 2 * k + 1;
    let (f, dh) = x.split_at(k + 1);
    let (mut a, mut b) = seed;
    let mut da = vec![0.0; dim];
    let mut db = vec![0.0; dim];
    let mut a_all = vec![a];
    for n in 0..k {
        let df = f[n + 1] - f[n];
        let d = dh[n];
        let len2 = df * df + d * d;
        if len2 == 0.0 {
            return Err(Error::ZeroEdge(n));
        }
        let dot = a * df + b * d;
        let s = 2.0 * dot / len2;
        // ∂s = 2(∂a Δf + a ∂Δf + ∂b Δh + b ∂Δh)/L - 4 dot (Δf ∂Δf + Δh ∂Δh)/L²
        let mut ds: Vec<f64> = (0..dim).map(|j| 2.0 * (da[j] * df + db[j] * d) / len2).collect();
        let ddf_coef = 2.0 * a / len2 - 4.0 * dot * df / (len2 * len2);
        let ddh_coef = 2.0 * b / len2 - 4.0 * dot * d / (len2 * len2);
        ds[n + 1] += ddf_coef;
        ds[n] -= ddf_coef;
        ds[k + 1 + n] += ddh_coef;
        for j in 0..dim {
            da[j] -= ds[j] * df;
            db[j] -= ds[j] * d;
        }
        da[n + 1] -= s;
        da[n] += s;
        db[k + 1 + n] -= s;
        a -= s * df;
        b -= s * d;
        a_all.push(a);
    }
    Ok(NormalJet { a: a_all, da_top: da })
}

/// Analytic Jacobian of `Φ(X) = (g11(0..k), g22(0..k), pin)`.
///
/// The pin row is `∂f(k)/∂X` for cones and `∂a(k)/∂X` for cusps; `b(k)` itself is
/// stationary on the pin (`b = ±1` is an extremum on the unit circle) so its gradient
/// vanishes there and cannot close the system.
pub fn constraint_jacobian(state: &FlowState) -> Result<DMatrix<f64>> {
    jacobian_at(&state.to_vector(), state.k(), state.l(), state.bc())
}

pub(crate) fn jacobian_at(x: &[f64], k: usize, l: usize, bc: BoundaryCondition) -> Result<DMatrix<f64>> {
    let dim = 2 * k + 1;
    let (f, dh) = x.split_at(k + 1);
    let (s, c) = (PI / l as f64).sin_cos();
    let (s2, c2) = (s * s, c * c);
    let mut jac = DMatrix::zeros(dim, dim);
    for n in 0..k {
        let df = f[n + 1] - f[n];
        jac[(n, n + 1)] = 2.0 * df * c2;
        jac[(n, n)] = -2.0 * df * c2;
        jac[(n, k + 1 + n)] = 2.0 * dh[n];
        let sum = f[n + 1] + f[n];
        jac[(k + n, n)] = 2.0 * sum * s2;
        jac[(k + n, n + 1)] = 2.0 * sum * s2;
    }
    match bc.pin() {
        Pin::Cone => jac[(2 * k, k)] = 1.0,
        Pin::Cusp(_) => {
            let jet = normal_jet(x, k, bc.seed())?;
            for j in 0..dim {
                jac[(2 * k, j)] = jet.da_top[j];
            }
        }
    }
    Ok(jac)
}

/// `Φ(X)` itself; the finite-difference oracle differentiates this.
pub fn constraint_map(state: &FlowState) -> Result<Vec<f64>> {
    constraint_map_at(&state.to_vector(), state.k(), state.l(), state.bc())
}

fn constraint_map_at(x: &[f64], k: usize, l: usize, bc: BoundaryCondition) -> Result<Vec<f64>> {
    let (s, c) = (PI / l as f64).sin_cos();
    let (f, dh) = x.split_at(k + 1);
    let mut out = Vec::with_capacity(2 * k + 1);
    for n in 0..k {
        let df = f[n + 1] - f[n];
        out.push(df * df * c * c + dh[n] * dh[n]);
    }
    for n in 0..k {
        let sum = f[n + 1] + f[n];
        out.push(sum * sum * s * s);
    }
    out.push(match bc.pin() {
        Pin::Cone => f[k],
        Pin::Cusp(_) => *normal_jet(x, k, bc.seed())?.a.last().unwrap(),
    });
    Ok(out)
}

/// Central-difference Jacobian of [`constraint_map`] with step `1e-6 · scale`.
pub fn finite_difference_jacobian(state: &FlowState) -> Result<DMatrix<f64>> {
    let x = state.to_vector();
    let (k, l, bc) = (state.k(), state.l(), state.bc());
    let dim = x.len();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let step = 1e-6 * scale;
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += step;
        minus[j] -= step;
        let fp = constraint_map_at(&plus, k, l, bc)?;
        let fm = constraint_map_at(&minus, k, l, bc)?;
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

fn flow_rate(layers: &Layers, bc: BoundaryCondition) -> f64 {
    if bc.is_normalized() {
        layers.r()
    } else {
        0.0
    }
}

/// Velocity at a raw state vector. Shared by the integrator.
pub(crate) fn velocity(x: &[f64], k: usize, l: usize, bc: BoundaryCondition) -> Result<Vec<f64>> {
    let layers = evaluate(x, k, l, bc.seed())?;
    let r = flow_rate(&layers, bc);
    let dim = 2 * k + 1;
    let mut rhs = DVector::zeros(dim);
    for (n, g) in layers.faces.iter().enumerate() {
        let rate = r - 2.0 * g.gauss;
        rhs[n] = rate * g.g11;
        rhs[k + n] = rate * g.g22;
    }
    let jac = jacobian_at(x, k, l, bc)?;
    let lu = jac.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..dim).map(|i| u[(i, i)].abs()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 || max / min > SINGULAR_PIVOT_RATIO {
        let jac = jacobian_at(x, k, l, bc)?;
        let sv = jac.singular_values();
        let condition = sv.max() / sv.min();
        return Err(Error::SingularJacobian { condition });
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
    let mut v: Vec<f64> = sol.iter().copied().collect();
    if bc.pin() == Pin::Cone {
        // the pin row says exactly this; the solve only gets it to rounding
        v[k] = 0.0;
    }
    Ok(v)
}

/// `dX/dt` for any boundary condition via the Jacobian solve.
pub fn rhs_generic(state: &FlowState) -> Result<Vec<f64>> {
    velocity(&state.to_vector(), state.k(), state.l(), state.bc())
}

/// Closed-form `dX/dt` for the cone flow with `a(0) = 1`.
///
/// Eliminating the `g22` equations from the top (`df(k)/dt = 0`) gives the radii; the
/// `g11` equations then give the height differences:
///
/// ```text
/// df(n)/dt  = Σ_{i=1}^{k-n-1} (-1)^{i-1} f(n+i) (K(n+i) - K(n+i-1)) + ½(r - 2K(n)) f(n)
/// dΔh(n)/dt = Σ_{i=1}^{k-n-1} 2(-1)^{i-1} f(n+i) Δf(n)/Δh(n) (K(n+i) - K(n+i-1)) cos²(π/l)
///             + ½(r - 2K(n)) Δh(n)
/// ```
pub fn rhs_explicit_flow5(state: &FlowState) -> Result<Vec<f64>> {
    let bc = state.bc();
    if !matches!(bc, BoundaryCondition::PosCone | BoundaryCondition::UnnormalizedPosCone) {
        return Err(Error::Config(format!("explicit cone velocity does not apply to {}", bc.name())));
    }
    let layers = state.layers()?;
    explicit_cone_velocity(state, &layers, flow_rate(&layers, bc), 1.0)
}

/// Shared body of the explicit cone velocity. `sign` multiplies the sums in the
/// height equation (`+1` for the derived form, `-1` reproduces `(-1)^i`).
pub(crate) fn explicit_cone_velocity(state: &FlowState, layers: &Layers, r: f64, sign: f64) -> Result<Vec<f64>> {
    let k = state.k();
    let (f, dh) = (state.f(), state.dh());
    let gauss: Vec<f64> = layers.faces.iter().map(|g| g.gauss).collect();
    let cos2 = (PI / state.l() as f64).cos().powi(2);
    // alternating sums S(n) = Σ_{i=1}^{k-n-1} (-1)^{i-1} f(n+i) (K(n+i) - K(n+i-1))
    let sums: Vec<f64> = (0..k)
        .map(|n| {
            (1..k - n)
                .map(|i| {
                    let alt = if i % 2 == 1 { 1.0 } else { -1.0 };
                    alt * f[n + i] * (gauss[n + i] - gauss[n + i - 1])
                })
                .sum()
        })
        .collect();
    let mut out = vec![0.0; 2 * k + 1];
    for n in 0..k {
        let half_rate = 0.5 * (r - 2.0 * gauss[n]);
        out[n] = sums[n] + half_rate * f[n];
        if dh[n] == 0.0 {
            return Err(Error::DivisionByZero(n));
        }
        let df = f[n + 1] - f[n];
        out[k + 1 + n] = sign * 2.0 * sums[n] * df / dh[n] * cos2 + half_rate * dh[n];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::fixtures;

    #[test]
    fn pinned_coordinate_does_not_move() {
        let s = FlowState::new(vec![1.0, 0.0], vec![1.0], 8, BoundaryCondition::PosCone).unwrap();
        let v = rhs_generic(&s).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v[1].abs() < 1e-15);
    }

    #[test]
    fn single_band_rate() {
        let s = FlowState::new(vec![1.0, 0.0], vec![1.0], 8, BoundaryCondition::PosCone).unwrap();
        let g = s.faces().unwrap()[0];
        assert!((r_of_t(&s).unwrap() - 2.0 * g.gauss).abs() < 1e-14);
    }

    #[test]
    fn round_sphere_is_stationary() {
        for bc in [BoundaryCondition::PosCone, BoundaryCondition::PosCusp] {
            let s = fixtures::round_sphere(6, 24, bc).unwrap();
            assert!((r_of_t(&s).unwrap() - 2.0).abs() < 1e-13);
            let v = rhs_generic(&s).unwrap();
            assert!(v.iter().all(|x| x.abs() < 1e-12), "{bc:?}: {v:?}");
        }
        let s = fixtures::round_sphere(6, 24, BoundaryCondition::PosCone).unwrap();
        assert!(rhs_explicit_flow5(&s).unwrap().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn unnormalized_sphere_shrinks_radially() {
        // ρ² = 1 - 2t, so dρ/dt = -1 at t = 0 and dX/dt = -X
        let s = fixtures::round_sphere(6, 24, BoundaryCondition::UnnormalizedPosCone).unwrap();
        let v = rhs_generic(&s).unwrap();
        for (vi, xi) in v.iter().zip(s.to_vector()) {
            assert!((vi + xi).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_rejects_other_pins() {
        let s = fixtures::round_sphere(4, 12, BoundaryCondition::PosCusp).unwrap();
        assert!(rhs_explicit_flow5(&s).is_err());
    }

    #[test]
    fn last_band_has_no_sum() {
        let s = fixtures::dumbbell(6, 24).unwrap();
        let v = rhs_explicit_flow5(&s).unwrap();
        let layers = s.layers().unwrap();
        let k = s.k();
        let expected = 0.5 * (layers.r() - 2.0 * layers.faces[k - 1].gauss) * s.f()[k - 1];
        assert!((v[k - 1] - expected).abs() < 1e-14);
        assert_eq!(v[k], 0.0);
    }
}
