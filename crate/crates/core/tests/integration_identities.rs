//! Phase-space integration identities: boundary-parametrized integrals
//! against direct quadrature, the hemisphere change of variables and the
//! boundary Jacobian.

use std::f64::consts::PI;

use freestream_core::geometry::{dot, Domain, Vec3};
use freestream_core::measure::{
    direct_phase_integral, jacobian, phase_integral_via_boundary, pushforward_identity_check, sphere_to_boundary, BoundaryGrid, DirectionRule, PhaseGrid, Side, VelocityMeasure,
};
use freestream_core::Error;
use proptest::prelude::*;

fn maxwell(v: Vec3) -> f64 {
    (-dot(v, v) / 2.0).exp() / (2.0 * PI)
}

fn disk_grid(extra: &[f64]) -> BoundaryGrid {
    let vm = VelocityMeasure::with_breaks(2, 8.0, 48, extra).unwrap();
    BoundaryGrid::new(Domain::unit_disk(), 64, 32, vm, DirectionRule::Gauss).unwrap()
}

#[test]
fn constant_on_unit_speed_ball_is_pi_squared() {
    let g = disk_grid(&[1.0]);
    let h = |_x: Vec3, v: Vec3| if dot(v, v) <= 1.0 { 1.0 } else { 0.0 };
    let exact = PI * PI;
    for side in [Side::Minus, Side::Plus] {
        let b = phase_integral_via_boundary(&g, &h, side, 8);
        assert!((b - exact).abs() / exact < 1e-6, "{side:?}: {b}");
    }
    let d = direct_phase_integral(&Domain::unit_disk(), &g.velocity, &h, 32, 16);
    assert!((d - exact).abs() / exact < 1e-6, "{d}");
}

#[test]
fn maxwellian_integrates_to_disk_area() {
    let g = disk_grid(&[]);
    let h = |_x: Vec3, v: Vec3| maxwell(v);
    let direct = direct_phase_integral(&Domain::unit_disk(), &g.velocity, &h, 64, 32);
    assert!((direct - PI).abs() < 1e-9, "{direct}");
    for side in [Side::Minus, Side::Plus] {
        let b = phase_integral_via_boundary(&g, &h, side, 8);
        assert!((b - direct).abs() / direct < 1e-6, "{side:?}: {b}");
    }
}

#[test]
fn pushforward_of_position_independent_data_is_exact() {
    let g = disk_grid(&[]);
    let c = pushforward_identity_check(&g, &|_z: Vec3, v: Vec3| maxwell(v));
    assert!(c.defect <= 1e-8, "{c:?}");
    let c = pushforward_identity_check(&g, &|z: Vec3, v: Vec3| (1.0 + z[0]) * maxwell(v));
    assert!(c.defect <= 1e-6, "{c:?}");
}

#[test]
fn jacobian_rejects_coincident_points() {
    let d = Domain::unit_disk();
    assert_eq!(jacobian(&d, d.disk_point(1.0), d.disk_point(1.0)), Err(Error::SingularPair));
}

#[test]
fn weighted_norms_grow_with_order() {
    let g = BoundaryGrid::new(Domain::unit_disk(), 16, 8, VelocityMeasure::canonical(2, 8.0, 24).unwrap(), DirectionRule::Gauss).unwrap();
    let pg = PhaseGrid::new(g, 4);
    let f = pg.sample(&|x: Vec3, v: Vec3| (1.0 + x[0] * x[1]) * maxwell(v));
    let norms: Vec<f64> = (0..=4).map(|k| pg.norm(&f, k)).collect();
    assert!(norms.windows(2).all(|w| w[1] >= w[0]), "{norms:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn change_of_variables_on_the_circle(phi0 in 0.0..2.0 * PI, decay in 0.2f64..3.0) {
        let d = Domain::unit_disk();
        let c = sphere_to_boundary(&d, d.disk_point(phi0), |r| (-decay * r).exp(), |y| 1.0 + 0.3 * y[0], 32);
        prop_assert!(c.defect <= 1e-6, "{:?}", c);
    }

    #[test]
    fn jacobian_is_symmetric(a in 0.0..2.0 * PI, b in 0.0..2.0 * PI, za in -1.0f64..1.0, zb in -1.0f64..1.0) {
        let d = Domain::unit_disk();
        let (x, y) = (d.disk_point(a), d.disk_point(b));
        if let (Ok(j1), Ok(j2)) = (jacobian(&d, x, y), jacobian(&d, y, x)) {
            prop_assert_eq!(j1.to_bits(), j2.to_bits());
        }
        let s = Domain::unit_ball();
        let (x, y) = (s.sphere_point(za, a), s.sphere_point(zb, b));
        if let (Ok(j1), Ok(j2)) = (jacobian(&s, x, y), jacobian(&s, y, x)) {
            prop_assert_eq!(j1.to_bits(), j2.to_bits());
            prop_assert!((j1 - 0.25).abs() <= 1e-12);
        }
    }
}
