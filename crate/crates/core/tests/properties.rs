use std::f64::consts::PI;

use proptest::prelude::*;

use willmore_core::functionals::{pointwise_square_decomposition, square_decomposition_scale};
use willmore_core::library::SurfaceSpec;
use willmore_core::quadrature::pairwise_sum;
use willmore_core::spaceform::{distance, geodesic_point, initial_velocity, radial_weights};
use willmore_core::{Coords, SpaceForm};

fn form(hyperbolic: bool) -> SpaceForm {
    if hyperbolic {
        SpaceForm::hyperbolic(3)
    } else {
        SpaceForm::spherical(3)
    }
}

/// A point at distance `r` from the origin in direction `(a, b)` (spherical angles).
fn point_at(f: &SpaceForm, r: f64, a: f64, b: f64) -> Coords {
    let (s, c) = if f.is_hyperbolic() { (r.sinh(), r.cosh()) } else { (r.sin(), r.cos()) };
    Coords::from_slice(&[c, s * a.sin() * b.cos(), s * a.sin() * b.sin(), s * a.cos()])
}

proptest! {
    #[test]
    fn weight_identity(hyp in any::<bool>(), r in 1e-3f64..3.1) {
        let f = form(hyp);
        let w = radial_weights(&f, r).unwrap();
        let size = (2.0 * w.phi * w.v).abs() + (w.phi_prime * w.sn).abs();
        prop_assert!((w.identity_value() + f.k()).abs() <= 1e-13 * size.max(1.0));
    }

    #[test]
    fn geodesics_have_unit_speed(hyp in any::<bool>(), r in 0.05f64..2.5, a in 0.1f64..3.0, b in 0.0f64..6.2, rho in 0.01f64..3.0) {
        let f = form(hyp);
        let x = f.point_from_coords(point_at(&f, r, a, b)).unwrap();
        let o = f.origin();
        let (d, z) = initial_velocity(&f, &x, &o).unwrap();
        prop_assert!((d - r).abs() <= 1e-12 * r.max(1.0));
        let rho = if hyp { rho } else { rho.min(PI - 0.01) };
        let y = geodesic_point(&f, &x, &z, rho).unwrap();
        prop_assert!((distance(&f, &x, &y).unwrap() - rho).abs() <= 1e-9 * rho.max(1.0));
    }

    #[test]
    fn radial_field_has_length_sn(hyp in any::<bool>(), r in 0.01f64..2.5, a in 0.1f64..3.0, b in 0.0f64..6.2) {
        let f = form(hyp);
        let x = point_at(&f, r, a, b);
        let o = *f.origin().coords();
        let sn = if hyp { r.sinh() } else { r.sin() };
        let xf = f.x_field_raw(&o, &x);
        prop_assert!((f.norm(&xf) - sn).abs() <= 1e-12 * sn.max(1.0));
        prop_assert!(f.dot(&xf, &x).abs() <= 1e-12 * sn.max(1.0) * x.euclidean_norm());
    }

    #[test]
    fn square_decomposition_on_perturbed_spheres(
        hyp in any::<bool>(),
        radius in 0.3f64..1.2,
        amp in -0.2f64..0.2,
        chart in 0usize..6,
        u in -0.78f64..0.78,
        v in -0.78f64..0.78,
    ) {
        let f = form(hyp);
        let spec = SurfaceSpec::perturbed_sphere(f, radius, amp, 2.0).unwrap();
        let s = spec.build().unwrap();
        let o = spec.base_point(&s).unwrap();
        let x = s.charts()[chart].position(u, v);
        prop_assume!(f.distance_raw(o.coords(), &x).unwrap() > 1e-3);
        let g = s.sample_geometry(chart, u, v, &o).unwrap();
        let res = pointwise_square_decomposition(&f, &g).unwrap();
        prop_assert!(res.abs() <= 1e-12 * square_decomposition_scale(&f, &g).unwrap().max(1.0));
    }

    #[test]
    fn pairwise_sum_matches_naive(xs in prop::collection::vec(-1e3f64..1e3, 1..400)) {
        let items: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        let naive: f64 = xs.iter().sum();
        let bound = 1e-13 * xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&items)[0] - naive).abs() <= bound);
    }

    #[test]
    fn spec_pairs_round_trip(hyp in any::<bool>(), radius in 0.1f64..1.4, second in 0.1f64..1.4, angle in 0.1f64..1.4) {
        let f = form(hyp);
        for spec in [
            SurfaceSpec::geodesic_sphere(f, radius),
            SurfaceSpec::tangent_sphere_pair(f, radius, second),
            SurfaceSpec::geodesic_cap(f, radius, angle),
        ] {
            let spec = spec.unwrap();
            prop_assert_eq!(SurfaceSpec::from_pairs(&spec.to_pairs()).unwrap(), spec);
        }
    }
}
