//! Comparisons against `fixtures/reference_values.txt`, produced by
//! `fixtures/reference_values.py` (mpmath, 40 digits).

use std::collections::HashMap;

use willmore_core::functionals::{embeddedness_criterion, sphere_finer_inequality, willmore_energy};
use willmore_core::library::{corpus_item, SurfaceSpec};
use willmore_core::spaceform::radial_weights;
use willmore_core::surface::Region;
use willmore_core::{ImmersedSurface, SpaceForm};

/// Closed forms on geodesic spheres and the Clifford torus.
const CLOSED_FORM_TOL: f64 = 1e-10;
/// Tori of revolution and perturbed spheres at the default quadrature.
const NUMERIC_TOL: f64 = 1e-10;
const WEIGHT_TOL: f64 = 1e-14;

fn reference() -> HashMap<String, f64> {
    let text = include_str!("fixtures/reference_values.txt");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l.split_once(" = ").expect("`name = value` lines");
            (k.to_string(), v.trim().parse().expect("numeric value"))
        })
        .collect()
}

fn get(r: &HashMap<String, f64>, key: &str) -> f64 {
    *r.get(key).unwrap_or_else(|| panic!("missing reference value {key}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn area_and_quarter_willmore(s: &ImmersedSurface) -> (f64, f64) {
    (s.area().unwrap(), 0.25 * willmore_energy(s).unwrap().value())
}

fn assert_close(what: &str, got: f64, want: f64, tol: f64) {
    assert!(rel(got, want) <= tol, "{what}: got {got:.17e}, reference {want:.17e}, relative {:.3e}", rel(got, want));
}

#[test]
fn radial_weights_match() {
    let r = reference();
    for (x, key) in [(0.5, "0.5"), (1.0, "1.0"), (2.0, "2.0")] {
        let h = radial_weights(&SpaceForm::hyperbolic(3), x).unwrap();
        assert_close("w", h.w, get(&r, &format!("h3.w.{key}")), WEIGHT_TOL);
        assert_close("phi", h.phi, get(&r, &format!("h3.phi.{key}")), WEIGHT_TOL);
        assert_close("phi'", h.phi_prime, get(&r, &format!("h3.phi_prime.{key}")), WEIGHT_TOL);
        let s = radial_weights(&SpaceForm::spherical(3), x).unwrap();
        assert_close("phi on S3", s.phi, get(&r, &format!("s3.phi.{key}")), WEIGHT_TOL);
    }
}

#[test]
fn geodesic_spheres() {
    let r = reference();
    for (item, key) in [
        ("sphere_h3_0.5", "sphere_h3.0.5"),
        ("sphere_h3_1", "sphere_h3.1.0"),
        ("sphere_h3_2", "sphere_h3.2.0"),
        ("sphere_s3_pi/6", "sphere_s3.pi/6"),
        ("sphere_s3_pi/4", "sphere_s3.pi/4"),
        ("sphere_s3_pi/3", "sphere_s3.pi/3"),
    ] {
        let s = corpus_item(item).unwrap().spec.build().unwrap();
        let (area, quarter) = area_and_quarter_willmore(&s);
        assert_close(&format!("{item} area"), area, get(&r, &format!("{key}.area")), CLOSED_FORM_TOL);
        assert_close(&format!("{item} W/4"), quarter, get(&r, &format!("{key}.quarter_willmore")), CLOSED_FORM_TOL);
    }
}

#[test]
fn ball_areas_on_a_sphere() {
    let r = reference();
    let spec = corpus_item("sphere_h3_1").unwrap().spec;
    let s = spec.build().unwrap();
    let o = spec.base_point(&s).unwrap();
    for rho in ["0.3", "0.9", "1.7"] {
        let got = s.integrate(&Region::ball(&o, rho.parse().unwrap()), |_| 1.0).unwrap().value();
        assert_close(&format!("ball area {rho}"), got, get(&r, &format!("sphere_h3.1.ball_area.{rho}")), CLOSED_FORM_TOL);
    }
}

#[test]
fn single_weight_fails_where_the_finer_bound_holds() {
    let r = reference();
    let spec = corpus_item("sphere_s3_pi/3").unwrap().spec;
    let s = spec.build().unwrap();
    let o = spec.base_point(&s).unwrap();
    let report = sphere_finer_inequality(&s, &o, 1.0).unwrap();
    let (lhs, single_rhs) = (get(&r, "sphere_s3.pi/3.rho1.lhs"), get(&r, "sphere_s3.pi/3.rho1.single_weight_rhs"));
    assert!(single_rhs < lhs);
    assert_close("lhs", report.lhs, lhs, CLOSED_FORM_TOL);
    let single = report.term("single_weight_margin").unwrap();
    assert!((single - (single_rhs - lhs)).abs() <= 1e-9, "single-weight margin {single} vs {}", single_rhs - lhs);
    assert!(report.holds(1e-9));
}

#[test]
fn clifford_torus() {
    let r = reference();
    let s = corpus_item("clifford_s3").unwrap().spec.build().unwrap();
    let (area, quarter) = area_and_quarter_willmore(&s);
    assert_close("area", area, get(&r, "clifford_s3.0.6.area"), CLOSED_FORM_TOL);
    assert_close("W/4", quarter, get(&r, "clifford_s3.0.6.quarter_willmore"), CLOSED_FORM_TOL);
}

#[test]
fn hyperbolic_tori() {
    let r = reference();
    for tube in ["0.6", "0.4"] {
        let s = SurfaceSpec::torus_of_revolution(1.0, tube.parse().unwrap()).unwrap().build().unwrap();
        let (area, quarter) = area_and_quarter_willmore(&s);
        assert_close("torus area", area, get(&r, &format!("torus_h3.1_{tube}.area")), NUMERIC_TOL);
        assert_close("torus W/4", quarter, get(&r, &format!("torus_h3.1_{tube}.quarter_willmore")), NUMERIC_TOL);
    }
}

#[test]
fn thin_torus_certificate_abstains() {
    // ¼W − |Σ| far above 8π: the criterion cannot certify embeddedness.
    let r = reference();
    let excess = get(&r, "torus_h3.1_0.4.quarter_willmore") - get(&r, "torus_h3.1_0.4.area");
    assert!(excess > 8.0 * std::f64::consts::PI);
    let s = SurfaceSpec::torus_of_revolution(1.0, 0.4).unwrap().build().unwrap();
    let (embedded, report) = embeddedness_criterion(&s, 1e-9).unwrap();
    assert!(!embedded);
    assert_close("margin", report.margin, 8.0 * std::f64::consts::PI - excess, NUMERIC_TOL);
}

#[test]
fn perturbed_spheres() {
    let r = reference();
    for name in ["perturbed_h3", "perturbed_s3"] {
        let s = corpus_item(name).unwrap().spec.build().unwrap();
        let (area, quarter) = area_and_quarter_willmore(&s);
        assert_close(&format!("{name} area"), area, get(&r, &format!("{name}.area")), NUMERIC_TOL);
        assert_close(&format!("{name} W/4"), quarter, get(&r, &format!("{name}.quarter_willmore")), NUMERIC_TOL);
    }
}
