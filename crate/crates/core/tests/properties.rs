use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use revflow::cgc::{cgc_positive, telescoped_heights, CgcFamily, SampleGrid};
use revflow::check::{random_cone_state, random_surface, STEINER_OFFSETS};
use revflow::flow::{
    constraint_jacobian, finite_difference_jacobian, fixtures, integrate, rhs_explicit_flow5, rhs_generic,
    BoundaryCondition, IntegrateOptions, Snapshots,
};
use revflow::surface::{
    circularity_residual, face_geometry, face_geometry_from_quads, mixed_area_identities, steiner_check,
};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn surface_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (surface, normal) = random_surface(&mut rng).unwrap();
        prop_assert!(normal.max_unit_defect() < 1e-12);
        for n in 0..surface.k() {
            let geom = face_geometry(&surface, &normal, n).unwrap();
            for m in [0, surface.l() / 2, surface.l() - 1] {
                let x = surface.quad(m, n);
                let nu = surface.normal_quad(&normal, m, n);
                prop_assert!(circularity_residual(&x) < 1e-10);
                for t in STEINER_OFFSETS {
                    let r = steiner_check(&x, &nu, t, geom.gauss, geom.mean).unwrap();
                    prop_assert!(r < 1e-10 * geom.area, "face {} t {} residual {}", n, t, r / geom.area);
                }
                let ids = mixed_area_identities(&x, &nu).unwrap();
                prop_assert!(ids.max_relative_mismatch() < 1e-10);
                // K = A(ν)/A(x), H = A(x, ν)/A(x)
                prop_assert!((ids.nu / ids.x - geom.gauss).abs() < 1e-9 * geom.gauss.abs().max(1.0));
                prop_assert!((ids.x_nu / ids.x - geom.mean).abs() < 1e-9 * geom.mean.abs().max(1.0));
                let shape = face_geometry_from_quads(&x, &nu);
                prop_assert!((shape.area - geom.area).abs() < 1e-10 * geom.area);
            }
        }
    }

    #[test]
    fn curvature_scaling(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (surface, normal) = random_surface(&mut rng).unwrap();
        let p = surface.profile();
        let scaled = revflow::surface::ProfileCurve::new(
            p.f().iter().map(|v| v * s).collect(),
            p.h().iter().map(|v| v * s).collect(),
        ).unwrap();
        let scaled = revflow::surface::RevolutionSurface::new(scaled, surface.l()).unwrap();
        for n in 0..surface.k() {
            let a = face_geometry(&surface, &normal, n).unwrap();
            let b = face_geometry(&scaled, &normal, n).unwrap();
            prop_assert!((b.gauss * s * s - a.gauss).abs() < 1e-9 * a.gauss.abs().max(1.0));
            prop_assert!((b.mean * s - a.mean).abs() < 1e-9 * a.mean.abs().max(1.0));
            prop_assert!((b.area / (s * s) - a.area).abs() < 1e-12 * a.area);
        }
    }

    #[test]
    fn positive_family_heights_telescope(p in 0.5f64..1.5, c in 0.5f64..2.0, m in 3i64..16) {
        let w = p * c.sqrt();
        let top = if w > 1.0 { (1.0 / w).asin() } else { std::f64::consts::FRAC_PI_2 } / c.sqrt();
        let grid = SampleGrid::from_fn(-m / 2, m, |n| n * 0.9 * top / m as f64).unwrap();
        let (profile, normal) = cgc_positive(p, c, &grid).unwrap();
        let h = telescoped_heights(profile.f(), normal.a(), normal.b(), grid.zero_index()).unwrap();
        prop_assert!(max_rel(&h, profile.h()) < 1e-12);
        let family = CgcFamily::SpherePositive { p, c };
        prop_assert_eq!(family.discretize(&grid).unwrap().0, profile);
    }

    #[test]
    fn rhs_forms_agree(seed in any::<u64>(), k in 2usize..10, l in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_cone_state(&mut rng, k, l).unwrap();
        let generic = rhs_generic(&state).unwrap();
        let explicit = rhs_explicit_flow5(&state).unwrap();
        prop_assert!(max_rel(&generic, &explicit) < 1e-10);
        let analytic = constraint_jacobian(&state).unwrap();
        let fd = finite_difference_jacobian(&state).unwrap();
        prop_assert!(max_rel(analytic.as_slice(), fd.as_slice()) < 1e-6);
    }

    #[test]
    fn velocity_scales_inversely(seed in any::<u64>(), s in 0.25f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_cone_state(&mut rng, 5, 16).unwrap();
        let v = rhs_generic(&state).unwrap();
        let w: Vec<f64> = rhs_generic(&state.scaled(s).unwrap()).unwrap().iter().map(|x| x * s).collect();
        prop_assert!(max_rel(&v, &w) < 1e-10);
    }

    #[test]
    fn round_spheres_are_stationary(k in 2usize..12, l in 3usize..40) {
        for bc in [BoundaryCondition::PosCone, BoundaryCondition::PosCusp] {
            let s = fixtures::round_sphere(k, l, bc).unwrap();
            prop_assert!(rhs_generic(&s).unwrap().iter().all(|v| v.abs() < 1e-10));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn pins_and_area_hold_along_the_flow(k in 4usize..9, amplitude in 0.0f64..0.15, which in 0usize..3) {
        let state = match which {
            0 => fixtures::dumbbell_cusp(k, 24).unwrap(),
            1 => fixtures::neg_cusp(k, 24, amplitude).unwrap(),
            _ => fixtures::neg_cone(k, 24, amplitude).unwrap(),
        };
        let opts = IntegrateOptions { snapshots: Snapshots::Every(10), stop: None, ..Default::default() };
        // edges shrink like 1/k, so the stiffest mode grows like k²; the fixtures are sized
        // for dt = 1e-3 at k = 6
        let dt = 1e-3 * (6.0 / k as f64).powi(2).min(1.0);
        let trace = integrate(&state, 0.1, dt, &opts).unwrap();
        let a0 = trace.area_history[0];
        for (res, area) in trace.constraint_history.iter().zip(&trace.area_history) {
            prop_assert!(*res < 1e-12);
            // the cusp dumbbell loses about 1e-9 in its opening transient (RK4 error, ~dt⁴)
            prop_assert!(((area - a0) / a0).abs() < 1e-8, "drift {}", (area - a0) / a0);
        }
        let (seed_a, seed_b) = state.bc().seed();
        let normal = trace.last().normal().unwrap();
        prop_assert_eq!((normal.a()[0], normal.b()[0]), (seed_a, seed_b));
    }
}
