//! Analytic test surfaces with exact jets and closed-form reference values.
//!
//! Closed spheres are covered by the six faces of an equiangular cube map,
//! which avoids coordinate poles; caps use one polar chart whose pole edge is
//! degenerate. Every surface is moved into generic position by a fixed
//! isometry unless `generic_position` is off.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Real;
use crate::spaceform::{AmbientPoint, Coords, Curvature, Isometry, SpaceForm};
use crate::surface::{Chart, Edge, ImmersedSurface, OrientedNormals, ParamRect, Patch, QuadratureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    GeodesicSphere,
    TangentSpherePair,
    TorusOfRevolution,
    CliffordTorus,
    PerturbedSphere,
    GeodesicCap,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::GeodesicSphere,
        FamilyKind::TangentSpherePair,
        FamilyKind::TorusOfRevolution,
        FamilyKind::CliffordTorus,
        FamilyKind::PerturbedSphere,
        FamilyKind::GeodesicCap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::GeodesicSphere => "geodesic_sphere",
            FamilyKind::TangentSpherePair => "tangent_sphere_pair",
            FamilyKind::TorusOfRevolution => "torus_of_revolution_H3",
            FamilyKind::CliffordTorus => "clifford_torus_S3",
            FamilyKind::PerturbedSphere => "perturbed_sphere",
            FamilyKind::GeodesicCap => "geodesic_cap",
        }
    }

    pub fn parse(name: &str) -> Result<FamilyKind> {
        FamilyKind::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown surface family `{name}`")))
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Family and its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    GeodesicSphere { radius: f64 },
    /// Two spheres touching externally at one point, the base point.
    TangentSpherePair { radius: f64, second_radius: f64 },
    /// Revolution of a circle of radius `tube` whose centre lies at distance
    /// `core` from an axis geodesic of `ℍ³`.
    TorusOfRevolution { core_radius: f64, tube_radius: f64 },
    /// `(cos a cos u, cos a sin u, sin a cos v, sin a sin v)` in `𝕊³`.
    CliffordTorus { angle: f64 },
    /// Star-shaped about its centre with radius `t(1 + ε f)`, where
    /// `f(p) = cos(m p₁) cos(m p₂) cos(m p₃)`.
    PerturbedSphere { radius: f64, amplitude: f64, frequency: f64 },
    /// Polar angle `θ ≤ α` of a geodesic sphere.
    GeodesicCap { radius: f64, opening_angle: f64 },
}

impl Family {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::GeodesicSphere { .. } => FamilyKind::GeodesicSphere,
            Family::TangentSpherePair { .. } => FamilyKind::TangentSpherePair,
            Family::TorusOfRevolution { .. } => FamilyKind::TorusOfRevolution,
            Family::CliffordTorus { .. } => FamilyKind::CliffordTorus,
            Family::PerturbedSphere { .. } => FamilyKind::PerturbedSphere,
            Family::GeodesicCap { .. } => FamilyKind::GeodesicCap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSpec {
    pub family: Family,
    pub form: SpaceForm,
    /// Apply a fixed non-trivial isometry (and, for `n > 3`, tilt the
    /// totally geodesic 3-subspace containing the surface).
    pub generic_position: bool,
}

/// Parameter location of a distinguished point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub chart: usize,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReferenceValues {
    pub area: Option<f64>,
    /// `¼∫|H|²`.
    pub willmore_quarter: Option<f64>,
    /// `|H|`, where constant.
    pub mean_curvature: Option<f64>,
}

impl ReferenceValues {
    pub fn is_empty(&self) -> bool {
        self.area.is_none() && self.willmore_quarter.is_none() && self.mean_curvature.is_none()
    }
}

fn sn_cs(form: &SpaceForm, r: f64) -> (f64, f64) {
    if form.is_hyperbolic() {
        (r.sinh(), r.cosh())
    } else {
        (r.sin(), r.cos())
    }
}

impl SurfaceSpec {
    pub fn new(family: Family, form: SpaceForm) -> Result<SurfaceSpec> {
        let spec = SurfaceSpec { family, form, generic_position: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn geodesic_sphere(form: SpaceForm, radius: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::GeodesicSphere { radius }, form)
    }

    pub fn tangent_sphere_pair(form: SpaceForm, radius: f64, second_radius: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::TangentSpherePair { radius, second_radius }, form)
    }

    pub fn torus_of_revolution(core_radius: f64, tube_radius: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::TorusOfRevolution { core_radius, tube_radius }, SpaceForm::hyperbolic(3))
    }

    pub fn clifford_torus(angle: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::CliffordTorus { angle }, SpaceForm::spherical(3))
    }

    pub fn perturbed_sphere(form: SpaceForm, radius: f64, amplitude: f64, frequency: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::PerturbedSphere { radius, amplitude, frequency }, form)
    }

    pub fn geodesic_cap(form: SpaceForm, radius: f64, opening_angle: f64) -> Result<SurfaceSpec> {
        SurfaceSpec::new(Family::GeodesicCap { radius, opening_angle }, form)
    }

    pub fn with_generic_position(mut self, on: bool) -> SurfaceSpec {
        self.generic_position = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.form.require_curved()?;
        let sphere = self.form.is_spherical();
        let bad = |what: String| Err(Error::InvalidParameter(what));
        let radius_ok = |t: f64| t > 0.0 && t.is_finite() && (!sphere || t < PI);
        match self.family {
            Family::GeodesicSphere { radius } | Family::GeodesicCap { radius, .. } if !radius_ok(radius) => {
                bad(format!("radius {radius} outside the valid range"))
            }
            Family::GeodesicCap { opening_angle, .. } if !(opening_angle > 0.0 && opening_angle < PI) => {
                bad(format!("opening_angle {opening_angle} must lie in (0, π)"))
            }
            Family::TangentSpherePair { radius, second_radius } => {
                if !radius_ok(radius) || !radius_ok(second_radius) {
                    return bad(format!("radii {radius}, {second_radius} outside the valid range"));
                }
                if sphere && radius + second_radius >= PI {
                    return bad("on the sphere the two radii must sum to less than π".into());
                }
                Ok(())
            }
            Family::TorusOfRevolution { core_radius, tube_radius } => {
                if !self.form.is_hyperbolic() {
                    return Err(Error::Unsupported("torus_of_revolution_H3 lives in hyperbolic space".into()));
                }
                if !(tube_radius > 0.0 && tube_radius < core_radius && core_radius.is_finite()) {
                    return bad(format!("need 0 < tube_radius < core_radius, got {tube_radius}, {core_radius}"));
                }
                Ok(())
            }
            Family::CliffordTorus { angle } => {
                if !sphere {
                    return Err(Error::Unsupported("clifford_torus_S3 lives in the sphere".into()));
                }
                if !(angle > 0.0 && angle < FRAC_PI_2) {
                    return bad(format!("angle {angle} must lie in (0, π/2)"));
                }
                Ok(())
            }
            Family::PerturbedSphere { radius, amplitude, frequency } => {
                if !radius_ok(radius * (1.0 + amplitude.abs())) || !radius_ok(radius * (1.0 - amplitude.abs())) {
                    return bad(format!("perturbed radius leaves the valid range (radius {radius}, amplitude {amplitude})"));
                }
                if !(amplitude.abs() < 0.5) || !(frequency >= 0.0 && frequency <= 10.0) {
                    return bad("need |amplitude| < 0.5 and 0 ≤ frequency ≤ 10".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The fixed isometry applied after the family's own construction.
    pub fn placement(&self) -> Result<Isometry> {
        if !self.generic_position {
            return Ok(Isometry::identity());
        }
        let form = self.form;
        let dir = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let (s, c) = sn_cs(&form, 0.3);
        let target = Coords::from_slice(&[c, s * dir[0], s * dir[1], s * dir[2]]);
        let origin = *form.origin().coords();
        let mut g = Isometry::transvection(&form, &origin, &target)?
            .compose(&Isometry::rotation(1, 2, 0.7))
            .compose(&Isometry::rotation(2, 3, 0.4));
        if form.dim() > 3 {
            g = Isometry::rotation(3, 4, 0.5).compose(&g);
        }
        Ok(g)
    }

    /// Builds the surface with default quadrature.
    pub fn build(&self) -> Result<ImmersedSurface> {
        self.build_with(QuadratureSpec::default())
    }

    pub fn build_with(&self, quadrature: QuadratureSpec) -> Result<ImmersedSurface> {
        self.validate()?;
        let form = self.form;
        let hyperbolic = form.is_hyperbolic();
        let g = self.placement()?;
        let origin = *form.origin().coords();
        let charts = match self.family {
            Family::GeodesicSphere { radius } => sphere_charts(&form, radius, 0.0, 0.0, &Isometry::identity(), 0)?,
            Family::PerturbedSphere { radius, amplitude, frequency } => {
                sphere_charts(&form, radius, amplitude, frequency, &Isometry::identity(), 0)?
            }
            Family::TangentSpherePair { radius, second_radius } => {
                let (s, c) = sn_cs(&form, radius);
                let ca = Coords::from_slice(&[c, 0.0, 0.0, s]);
                let (s, c) = sn_cs(&form, second_radius);
                let cb = Coords::from_slice(&[c, 0.0, 0.0, -s]);
                let mut charts = sphere_charts(&form, radius, 0.0, 0.0, &Isometry::transvection(&form, &origin, &ca)?, 0)?;
                charts.extend(sphere_charts(&form, second_radius, 0.0, 0.0, &Isometry::transvection(&form, &origin, &cb)?, 1)?);
                charts
            }
            Family::GeodesicCap { radius, opening_angle } => {
                let chart = Chart::new(PolarCap { hyperbolic, radius }, ParamRect::new(0.0, opening_angle, 0.0, 2.0 * PI).periodic(false, true))
                    .with_boundary(&[Edge::UMax]);
                vec![orient_radially(&form, chart)?]
            }
            Family::TorusOfRevolution { core_radius, tube_radius } => {
                tiled(HyperbolicTorus { core: core_radius, tube: tube_radius })
            }
            Family::CliffordTorus { angle } => {
                tiled(Clifford { angle })
            }
        };
        let charts = charts.into_iter().map(|c| c.placed(&g)).collect();
        ImmersedSurface::new(form, charts, quadrature)
    }

    /// The designated base point: the tangency point for the pair, the
    /// pole for caps, and a fixed point otherwise.
    pub fn anchor(&self) -> Anchor {
        match self.family {
            Family::GeodesicSphere { .. } | Family::PerturbedSphere { .. } => Anchor { chart: 4, u: 0.0, v: 0.0 },
            Family::TangentSpherePair { .. } => Anchor { chart: 5, u: 0.0, v: 0.0 },
            Family::GeodesicCap { .. } => Anchor { chart: 0, u: 0.0, v: 0.0 },
            Family::TorusOfRevolution { .. } | Family::CliffordTorus { .. } => Anchor { chart: 0, u: 0.0, v: 0.0 },
        }
    }

    /// A point on the boundary circle of a cap.
    pub fn boundary_anchor(&self) -> Result<Anchor> {
        match self.family {
            Family::GeodesicCap { opening_angle, .. } => Ok(Anchor { chart: 0, u: opening_angle, v: 0.0 }),
            _ => Err(Error::EmptyBoundary),
        }
    }

    /// Image of an anchor on a surface built from this spec.
    pub fn point_at(&self, surface: &ImmersedSurface, anchor: Anchor) -> Result<AmbientPoint> {
        let chart = surface
            .charts()
            .get(anchor.chart)
            .ok_or_else(|| Error::InvalidParameter(format!("chart index {} out of range", anchor.chart)))?;
        if !chart.domain.contains(anchor.u, anchor.v) {
            return Err(Error::Domain(format!("({}, {}) outside chart {}", anchor.u, anchor.v, anchor.chart)));
        }
        self.form.point_from_coords(chart.position(anchor.u, anchor.v))
    }

    pub fn base_point(&self, surface: &ImmersedSurface) -> Result<AmbientPoint> {
        self.point_at(surface, self.anchor())
    }

    /// Multiplicity at the anchor, by construction.
    pub fn anchor_multiplicity(&self) -> usize {
        match self.family {
            Family::TangentSpherePair { .. } => 2,
            _ => 1,
        }
    }

    /// Largest distance from the anchor to the surface, bounded from above.
    pub fn max_distance_bound(&self) -> f64 {
        match self.family {
            Family::GeodesicSphere { radius } | Family::GeodesicCap { radius, .. } => 2.0 * radius,
            Family::PerturbedSphere { radius, amplitude, .. } => 2.0 * radius * (1.0 + amplitude.abs()),
            Family::TangentSpherePair { radius, second_radius } => 2.0 * radius.max(second_radius),
            Family::TorusOfRevolution { core_radius, tube_radius } => 2.0 * (core_radius + tube_radius),
            Family::CliffordTorus { .. } => PI,
        }
    }

    pub fn reference_values(&self) -> ReferenceValues {
        let hyp = self.form.is_hyperbolic();
        let sphere = |t: f64| -> (f64, f64) {
            // (sn², sn′²)
            let (s, c) = sn_cs(&self.form, t);
            (s * s, c * c)
        };
        match self.family {
            Family::GeodesicSphere { radius } => {
                let (s2, c2) = sphere(radius);
                let (s, c) = sn_cs(&self.form, radius);
                ReferenceValues {
                    area: Some(4.0 * PI * s2),
                    willmore_quarter: Some(4.0 * PI * c2),
                    mean_curvature: Some((2.0 * c / s).abs()),
                }
            }
            Family::TangentSpherePair { radius, second_radius } => {
                let (a2, b2) = sphere(radius);
                let (c2, d2) = sphere(second_radius);
                ReferenceValues { area: Some(4.0 * PI * (a2 + c2)), willmore_quarter: Some(4.0 * PI * (b2 + d2)), mean_curvature: None }
            }
            Family::GeodesicCap { radius, opening_angle } => {
                let (s, c) = sn_cs(&self.form, radius);
                let area = 2.0 * PI * s * s * (1.0 - opening_angle.cos());
                let h = 2.0 * c / s;
                ReferenceValues { area: Some(area), willmore_quarter: Some(0.25 * h * h * area), mean_curvature: Some(h.abs()) }
            }
            Family::CliffordTorus { angle } if !hyp => {
                let area = 4.0 * PI * PI * angle.sin() * angle.cos();
                let h = 1.0 / angle.tan() - angle.tan();
                ReferenceValues { area: Some(area), willmore_quarter: Some(0.25 * h * h * area), mean_curvature: Some(h.abs()) }
            }
            _ => ReferenceValues::default(),
        }
    }

    /// Flat `key = value` form, inverse of [`SurfaceSpec::from_pairs`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("family".to_string(), self.family.kind().name().to_string()),
            ("curvature".to_string(), format!("{}", self.form.k() as i32)),
            ("dim".to_string(), self.form.dim().to_string()),
        ];
        let mut put = |k: &str, v: f64| out.push((k.to_string(), format!("{v:?}")));
        match self.family {
            Family::GeodesicSphere { radius } => put("radius", radius),
            Family::TangentSpherePair { radius, second_radius } => {
                put("radius", radius);
                put("second_radius", second_radius);
            }
            Family::TorusOfRevolution { core_radius, tube_radius } => {
                put("core_radius", core_radius);
                put("tube_radius", tube_radius);
            }
            Family::CliffordTorus { angle } => put("angle", angle),
            Family::PerturbedSphere { radius, amplitude, frequency } => {
                put("radius", radius);
                put("amplitude", amplitude);
                put("frequency", frequency);
            }
            Family::GeodesicCap { radius, opening_angle } => {
                put("radius", radius);
                put("opening_angle", opening_angle);
            }
        }
        out.push(("generic_position".to_string(), self.generic_position.to_string()));
        out
    }

    /// Parses the flat form. Keys not used by the named family are rejected.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<SurfaceSpec> {
        let get = |key: &str| pairs.iter().find(|(k, _)| k.as_ref() == key).map(|(_, v)| v.as_ref().trim());
        let Some(family) = get("family") else {
            const KNOWN: [&str; 12] = [
                "family", "curvature", "dim", "generic_position", "radius", "second_radius", "core_radius", "tube_radius", "angle",
                "amplitude", "frequency", "opening_angle",
            ];
            let unknown: Vec<&str> = pairs.iter().map(|(k, _)| k.as_ref()).filter(|k| !KNOWN.contains(k)).collect();
            return Err(Error::InvalidParameter(match unknown.first() {
                Some(k) => format!("missing key `family` (unknown key `{k}`)"),
                None => "missing key `family`".into(),
            }));
        };
        let family = FamilyKind::parse(family)?;
        let curvature = match get("curvature") {
            None => match family {
                FamilyKind::CliffordTorus => Curvature::Spherical,
                _ => Curvature::Hyperbolic,
            },
            Some("-1") | Some("hyperbolic") => Curvature::Hyperbolic,
            Some("1") | Some("+1") | Some("spherical") => Curvature::Spherical,
            Some(other) => return Err(Error::InvalidParameter(format!("bad value `{other}` for key `curvature`"))),
        };
        let dim = match get("dim") {
            None => 3,
            Some(s) => s.parse().map_err(|_| Error::InvalidParameter(format!("bad value `{s}` for key `dim`")))?,
        };
        let form = SpaceForm::new(curvature, dim)?;
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match get(key) {
                Some(s) => s.parse().map_err(|_| Error::InvalidParameter(format!("bad value `{s}` for key `{key}`"))),
                None => default.ok_or_else(|| Error::InvalidParameter(format!("missing key `{key}` for family {family}"))),
            }
        };
        let (fam, keys): (Family, &[&str]) = match family {
            FamilyKind::GeodesicSphere => (Family::GeodesicSphere { radius: num("radius", None)? }, &["radius"]),
            FamilyKind::TangentSpherePair => {
                let radius = num("radius", None)?;
                (Family::TangentSpherePair { radius, second_radius: num("second_radius", Some(radius))? }, &["radius", "second_radius"])
            }
            FamilyKind::TorusOfRevolution => (
                Family::TorusOfRevolution { core_radius: num("core_radius", None)?, tube_radius: num("tube_radius", None)? },
                &["core_radius", "tube_radius"],
            ),
            FamilyKind::CliffordTorus => (Family::CliffordTorus { angle: num("angle", Some(FRAC_PI_4))? }, &["angle"]),
            FamilyKind::PerturbedSphere => (
                Family::PerturbedSphere {
                    radius: num("radius", None)?,
                    amplitude: num("amplitude", Some(0.1))?,
                    frequency: num("frequency", Some(2.0))?,
                },
                &["radius", "amplitude", "frequency"],
            ),
            FamilyKind::GeodesicCap => (
                Family::GeodesicCap { radius: num("radius", None)?, opening_angle: num("opening_angle", None)? },
                &["radius", "opening_angle"],
            ),
        };
        for (k, _) in pairs {
            let k = k.as_ref();
            if !matches!(k, "family" | "curvature" | "dim" | "generic_position") && !keys.contains(&k) {
                return Err(Error::InvalidParameter(format!("unknown key `{k}` for family {family}")));
            }
        }
        let generic_position = match get("generic_position") {
            None | Some("true") => true,
            Some("false") => false,
            Some(s) => return Err(Error::InvalidParameter(format!("bad value `{s}` for key `generic_position`"))),
        };
        let spec = SurfaceSpec { family: fam, form, generic_position };
        spec.validate()?;
        Ok(spec)
    }
}

/// Builds a surface from a spec (with default quadrature).
pub fn build_surface(spec: &SurfaceSpec) -> Result<ImmersedSurface> {
    spec.build()
}

#[inline]
fn radial<S: Real>(hyperbolic: bool, r: S, p: [S; 3]) -> [S; 4] {
    let (c, s) = if hyperbolic { (r.cosh(), r.sinh()) } else { (r.cos(), r.sin()) };
    [c, s * p[0], s * p[1], s * p[2]]
}

/// One face of the equiangular cube map, `u, v ∈ [−π/4, π/4]`.
#[derive(Clone, Copy, Debug)]
struct CubeFace {
    hyperbolic: bool,
    axis: usize,
    sign: f64,
    radius: f64,
    amplitude: f64,
    frequency: f64,
}

impl Patch for CubeFace {
    fn map<S: Real>(&self, u: S, v: S) -> [S; 4] {
        let mut q = [S::cst(0.0); 3];
        q[self.axis] = S::cst(self.sign);
        q[(self.axis + 1) % 3] = u.tan();
        q[(self.axis + 2) % 3] = v.tan();
        let inv = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt().recip();
        let p = [q[0] * inv, q[1] * inv, q[2] * inv];
        let mut r = S::cst(self.radius);
        if self.amplitude != 0.0 {
            let m = self.frequency;
            let f = (p[0] * m).cos() * (p[1] * m).cos() * (p[2] * m).cos();
            r = (f * self.amplitude + 1.0) * self.radius;
        }
        radial(self.hyperbolic, r, p)
    }
}

#[derive(Clone, Copy, Debug)]
struct PolarCap {
    hyperbolic: bool,
    radius: f64,
}

impl Patch for PolarCap {
    fn map<S: Real>(&self, theta: S, phi: S) -> [S; 4] {
        let st = theta.sin();
        radial(self.hyperbolic, S::cst(self.radius), [st * phi.cos(), st * phi.sin(), theta.cos()])
    }
}

#[derive(Clone, Copy, Debug)]
struct HyperbolicTorus {
    core: f64,
    tube: f64,
}

impl Patch for HyperbolicTorus {
    fn map<S: Real>(&self, u: S, v: S) -> [S; 4] {
        let (ca, sa) = (self.tube.cosh(), self.tube.sinh());
        let (cr, sr) = (self.core.cosh(), self.core.sinh());
        let su = u.sin();
        let p0 = su * (sa * sr) + ca * cr;
        let p1 = u.cos() * sa;
        let p2 = su * (sa * cr) + ca * sr;
        [p0, p1, p2 * v.cos(), p2 * v.sin()]
    }
}

#[derive(Clone, Copy, Debug)]
struct Clifford {
    angle: f64,
}

impl Patch for Clifford {
    fn map<S: Real>(&self, u: S, v: S) -> [S; 4] {
        let (sa, ca) = self.angle.sin_cos();
        [u.cos() * ca, u.sin() * ca, v.cos() * sa, v.sin() * sa]
    }
}

/// A doubly periodic patch on `[0, 2π]²`, split into 4×4 charts of side
/// `π/2` so that a given number of cells per chart axis resolves it as
/// finely as it resolves a cube-sphere face.
fn tiled<P: Patch + Clone + 'static>(patch: P) -> Vec<Chart> {
    let mut charts = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let (u0, v0) = (i as f64 * FRAC_PI_2, j as f64 * FRAC_PI_2);
            charts.push(Chart::new(patch.clone(), ParamRect::new(u0, u0 + FRAC_PI_2, v0, v0 + FRAC_PI_2)));
        }
    }
    charts
}

/// Face order: `+x, −x, +y, −y, +z, −z`.
fn sphere_charts(form: &SpaceForm, radius: f64, amplitude: f64, frequency: f64, placement: &Isometry, sheet: usize) -> Result<Vec<Chart>> {
    let mut charts = Vec::with_capacity(6);
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let face = CubeFace { hyperbolic: form.is_hyperbolic(), axis, sign, radius, amplitude, frequency };
            let chart = Chart::new(face, ParamRect::new(-FRAC_PI_4, FRAC_PI_4, -FRAC_PI_4, FRAC_PI_4))
                .with_placement(*placement)
                .with_sheet(sheet);
            charts.push(orient_radially(form, chart)?);
        }
    }
    Ok(charts)
}

/// Sets the chart orientation so its normal points away from the centre
/// (the placed image of the model origin). Only meaningful in 3 dimensions.
fn orient_radially(form: &SpaceForm, chart: Chart) -> Result<Chart> {
    if form.dim() != 3 {
        return Ok(chart);
    }
    let d = chart.domain;
    let jet = chart.jet(0.5 * (d.u0 + d.u1), 0.5 * (d.v0 + d.v1));
    let nu = OrientedNormals::unsigned(*form).raw(&jet)?;
    let centre = chart.placement().apply(form.origin().coords());
    let out = form.x_field_raw(&centre, &jet.f);
    let sign = form.dot(&nu, &out).signum();
    Ok(chart.with_orientation(sign))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        for spec in [
            SurfaceSpec::geodesic_sphere(SpaceForm::hyperbolic(3), 1.0).unwrap(),
            SurfaceSpec::tangent_sphere_pair(SpaceForm::spherical(4), 0.5, 0.7).unwrap(),
            SurfaceSpec::torus_of_revolution(1.5, 0.5).unwrap(),
            SurfaceSpec::clifford_torus(0.6).unwrap(),
            SurfaceSpec::perturbed_sphere(SpaceForm::hyperbolic(3), 1.0, 0.1, 2.0).unwrap(),
            SurfaceSpec::geodesic_cap(SpaceForm::spherical(3), 0.8, 1.2).unwrap().with_generic_position(false),
        ] {
            let back = SurfaceSpec::from_pairs(&spec.to_pairs()).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn rejects_foreign_keys() {
        let pairs = [("family", "geodesic_sphere"), ("radius", "1"), ("tube_radius", "0.2")];
        assert!(matches!(SurfaceSpec::from_pairs(&pairs), Err(Error::InvalidParameter(m)) if m.contains("tube_radius")));
        assert!(SurfaceSpec::from_pairs(&[("family", "geodesic_sphear"), ("radius", "1")]).is_err());
    }

    #[test]
    fn torus_needs_hyperbolic_ambient() {
        let f = Family::TorusOfRevolution { core_radius: 1.0, tube_radius: 0.3 };
        assert!(SurfaceSpec::new(f, SpaceForm::spherical(3)).is_err());
    }
}

/// A named member of the test corpus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusItem {
    pub name: &'static str,
    pub spec: SurfaceSpec,
}

/// The fixed test corpus: every family in both space forms where it exists.
pub fn corpus() -> Vec<CorpusItem> {
    let h = SpaceForm::hyperbolic(3);
    let s = SpaceForm::spherical(3);
    let item = |name, spec: Result<SurfaceSpec>| CorpusItem { name, spec: spec.expect("corpus parameters are valid") };
    vec![
        item("sphere_h3_0.5", SurfaceSpec::geodesic_sphere(h, 0.5)),
        item("sphere_h3_1", SurfaceSpec::geodesic_sphere(h, 1.0)),
        item("sphere_h3_2", SurfaceSpec::geodesic_sphere(h, 2.0)),
        item("sphere_s3_pi/6", SurfaceSpec::geodesic_sphere(s, PI / 6.0)),
        item("sphere_s3_pi/4", SurfaceSpec::geodesic_sphere(s, FRAC_PI_4)),
        item("sphere_s3_pi/3", SurfaceSpec::geodesic_sphere(s, PI / 3.0)),
        item("tangent_pair_h3", SurfaceSpec::tangent_sphere_pair(h, 1.0, 0.7)),
        item("tangent_pair_s3", SurfaceSpec::tangent_sphere_pair(s, 0.6, 0.8)),
        item("torus_h3", SurfaceSpec::torus_of_revolution(1.0, 0.6)),
        item("clifford_s3", SurfaceSpec::clifford_torus(0.6)),
        item("perturbed_h3", SurfaceSpec::perturbed_sphere(h, 1.0, 0.1, 2.0)),
        item("perturbed_s3", SurfaceSpec::perturbed_sphere(s, 0.8, 0.1, 2.0)),
        item("cap_h3", SurfaceSpec::geodesic_cap(h, 1.0, 1.1)),
        item("cap_s3", SurfaceSpec::geodesic_cap(s, 0.8, 1.0)),
    ]
}

/// Looks up a corpus member by name.
pub fn corpus_item(name: &str) -> Result<CorpusItem> {
    corpus()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("no corpus item named `{name}`")))
}
