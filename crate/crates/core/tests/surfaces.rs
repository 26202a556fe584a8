use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

use willmore_core::library::{Anchor, SurfaceSpec};
use willmore_core::surface::{Band, Region};
use willmore_core::{Error, SpaceForm};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn hyperbolic_sphere_area_and_energy() {
    // Reference values from tests/fixtures/reference_values.py.
    let spec = SurfaceSpec::geodesic_sphere(SpaceForm::hyperbolic(3), 1.0).unwrap();
    let s = spec.build().unwrap();
    let area = s.area().unwrap();
    assert!(rel(area, 17.355387381772235) < 1e-9, "area {area}");
    let w = s.integrate(&Region::all(), |g| 0.25 * g.h_norm2(s.form())).unwrap().value();
    assert!(rel(w, 29.921757996105616) < 1e-9, "W/4 {w}");
    let h = s.sample_intrinsic(2, 0.1, -0.3).unwrap();
    assert!((s.form().norm(&h.h_vec) - 2.626070571014376).abs() < 1e-9);
}

#[test]
fn spherical_sphere_areas() {
    for t in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        let spec = SurfaceSpec::geodesic_sphere(SpaceForm::spherical(3), t).unwrap();
        let s = spec.build().unwrap();
        let area = s.area().unwrap();
        assert!(rel(area, 4.0 * PI * t.sin().powi(2)) < 1e-9);
    }
}

#[test]
fn ball_beyond_the_surface_is_everything() {
    let spec = SurfaceSpec::geodesic_sphere(SpaceForm::hyperbolic(3), 0.5).unwrap();
    let s = spec.build().unwrap();
    let o = spec.base_point(&s).unwrap();
    let all = s.area().unwrap();
    let ball = s.integrate(&Region::ball(&o, 5.0), |_| 1.0).unwrap();
    assert_eq!(ball.cells, s.charts().len() * 64);
    assert!(rel(ball.value(), all) < 1e-14);
}

#[test]
fn hyperbolic_cap_area_by_ball() {
    // The ball of radius ρ about a point of a sphere of radius t cuts a cap of
    // polar angle θ with cosh ρ = cosh²t − sinh²t cos θ.
    let form = SpaceForm::hyperbolic(3);
    let t: f64 = 1.0;
    let spec = SurfaceSpec::geodesic_sphere(form, t).unwrap();
    let s = spec.build().unwrap();
    let o = spec.base_point(&s).unwrap();
    for rho in [0.3f64, 0.9, 1.7] {
        let cos_theta = (t.cosh().powi(2) - rho.cosh()) / t.sinh().powi(2);
        let exact = 2.0 * PI * t.sinh().powi(2) * (1.0 - cos_theta);
        let got = s.integrate(&Region::ball(&o, rho), |_| 1.0).unwrap();
        assert!(!got.budget_exceeded);
        assert!(rel(got.value(), exact) < 1e-9, "ρ={rho}: {} vs {exact}", got.value());
        let ann = s.integrate(&Region::annulus(&o, 0.1, rho), |_| 1.0).unwrap().value();
        let inner = s.integrate(&Region::ball(&o, 0.1), |_| 1.0).unwrap().value();
        assert!(rel(ann + inner, exact) < 1e-9);
    }
}

#[test]
fn cap_boundary_length() {
    let form = SpaceForm::hyperbolic(3);
    let (t, alpha): (f64, f64) = (1.0, 1.1);
    let spec = SurfaceSpec::geodesic_cap(form, t, alpha).unwrap();
    let s = spec.build().unwrap();
    let len = s.boundary_integral(&Region::all(), |_, _| 1.0).unwrap().value();
    assert!(rel(len, 2.0 * PI * t.sinh() * alpha.sin()) < 1e-12);
    let full = SurfaceSpec::geodesic_sphere(form, t).unwrap().build().unwrap();
    assert!(matches!(full.boundary_integral(&Region::all(), |_, _| 1.0), Err(Error::EmptyBoundary)));
}

#[test]
fn clifford_torus_reference() {
    let spec = SurfaceSpec::clifford_torus(0.6).unwrap();
    let s = spec.build().unwrap();
    let r = spec.reference_values();
    assert!(rel(s.area().unwrap(), r.area.unwrap()) < 1e-12);
    let w = s.integrate(&Region::all(), |g| 0.25 * g.h_norm2(s.form())).unwrap().value();
    assert!(rel(w, r.willmore_quarter.unwrap()) < 1e-10);
}

#[test]
fn multiplicities() {
    let form = SpaceForm::hyperbolic(3);
    let sphere = SurfaceSpec::geodesic_sphere(form, 1.0).unwrap();
    let s = sphere.build().unwrap();
    assert_eq!(s.multiplicity_at(&sphere.base_point(&s).unwrap()).unwrap(), 1);
    // Cube corner and edge points are shared by several charts.
    let corner = sphere.point_at(&s, Anchor { chart: 0, u: FRAC_PI_4, v: FRAC_PI_4 }).unwrap();
    assert_eq!(s.multiplicity_at(&corner).unwrap(), 1);
    let edge = sphere.point_at(&s, Anchor { chart: 2, u: -FRAC_PI_4, v: 0.1 }).unwrap();
    assert_eq!(s.multiplicity_at(&edge).unwrap(), 1);

    let pair = SurfaceSpec::tangent_sphere_pair(form, 1.0, 1.0).unwrap();
    let p = pair.build().unwrap();
    assert_eq!(p.multiplicity_at(&pair.base_point(&p).unwrap()).unwrap(), 2);

    let cap = SurfaceSpec::geodesic_cap(form, 1.0, 1.0).unwrap();
    let c = cap.build().unwrap();
    assert_eq!(c.multiplicity_at(&cap.base_point(&c).unwrap()).unwrap(), 1);

    let off = form.origin();
    assert!(matches!(s.multiplicity_at(&off), Err(Error::NotOnSurface(_))));
}

#[test]
fn outward_normals_on_sphere() {
    let form = SpaceForm::hyperbolic(3);
    let spec = SurfaceSpec::geodesic_sphere(form, 1.0).unwrap();
    let s = spec.build().unwrap();
    let normals = s.oriented_normals().unwrap();
    for ci in 0..6 {
        let g = s.sample_intrinsic(ci, 0.2, -0.1).unwrap();
        let nu = normals.at(&s, ci, 0.2, -0.1).unwrap();
        // H = −Hν with H = 2 coth 1 > 0.
        let h = -form.dot(&g.h_vec, &nu);
        assert!((h - 2.0 / 1f64.tanh()).abs() < 1e-9, "chart {ci}: {h}");
    }
}

#[test]
fn band_validation() {
    let form = SpaceForm::spherical(3);
    let spec = SurfaceSpec::geodesic_sphere(form, 1.0).unwrap();
    let s = spec.build().unwrap();
    let o = spec.base_point(&s).unwrap();
    assert!(s.integrate(&Region::ball(&o, PI), |_| 1.0).is_err());
    assert!(s.integrate(&Region::annulus(&o, 0.5, 0.4), |_| 1.0).is_err());
    let r = Region { base: None, band: Band::Ball { rho: 1.0 }, refine_near_base: false };
    assert!(s.integrate(&r, |_| 1.0).is_err());
}
