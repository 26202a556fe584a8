//! Closed-form geometry of the two constant-curvature model spaces.
//!
//! Hyperbolic space is the upper sheet of the hyperboloid `⟨x,x⟩ = −1` in
//! Minkowski space with `⟨x,y⟩ = −x₀y₀ + Σ xᵢyᵢ`; the round sphere is the unit
//! sphere of Euclidean space. In both cases `⟨x,x⟩ = K`, and tangent vectors
//! at `x` are the `v` with `⟨x,v⟩ = 0`.
//!
//! Most of the formulas below are written once for both models in terms of
//! the curvature sign `K`:
//!
//! * `V = K⟨o,x⟩` is `cosh r` (resp. `cos r`),
//! * `w = ½⟨x−o, x−o⟩` is `cosh r − 1` (resp. `1 − cos r`),
//! * `X = (x − o) − K w x` is the radial field `sn(r) ∇r`.
//!
//! The difference-based forms are used wherever cancellation would otherwise
//! destroy relative accuracy near the base point.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Largest supported number of model coordinates (ambient dimension + 1).
pub const MAX_COORDS: usize = 8;

/// Tolerance for validating user-supplied model points and vectors.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Tolerance for model-membership drift of computed points before erroring.
pub const DRIFT_TOL: f64 = 1e-10;
/// Below this distance from the boundary of `acosh`/`acos` the chord formulas are used.
const STABLE_BRANCH: f64 = 1e-4;

/// Coordinates in the linear model space, zero-padded to [`MAX_COORDS`].
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Coords(pub [f64; MAX_COORDS]);

impl Coords {
    pub const ZERO: Coords = Coords([0.0; MAX_COORDS]);

    pub fn from_slice(s: &[f64]) -> Coords {
        assert!(s.len() <= MAX_COORDS, "at most {MAX_COORDS} coordinates");
        let mut c = Coords::ZERO;
        c.0[..s.len()].copy_from_slice(s);
        c
    }

    pub fn basis(i: usize) -> Coords {
        let mut c = Coords::ZERO;
        c.0[i] = 1.0;
        c
    }

    /// Plain Euclidean norm of the coordinate vector (not the model norm).
    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&x| x != 0.0).map_or(1, |i| i + 1);
        f.debug_list().entries(&self.0[..last.max(1)]).finish()
    }
}

impl Index<usize> for Coords {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Coords {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Coords {
    type Output = Coords;
    #[inline]
    fn add(mut self, o: Coords) -> Coords {
        self += o;
        self
    }
}

impl AddAssign for Coords {
    #[inline]
    fn add_assign(&mut self, o: Coords) {
        for i in 0..MAX_COORDS {
            self.0[i] += o.0[i];
        }
    }
}

impl Sub for Coords {
    type Output = Coords;
    #[inline]
    fn sub(mut self, o: Coords) -> Coords {
        self -= o;
        self
    }
}

impl SubAssign for Coords {
    #[inline]
    fn sub_assign(&mut self, o: Coords) {
        for i in 0..MAX_COORDS {
            self.0[i] -= o.0[i];
        }
    }
}

impl Mul<f64> for Coords {
    type Output = Coords;
    #[inline]
    fn mul(mut self, s: f64) -> Coords {
        for x in self.0.iter_mut() {
            *x *= s;
        }
        self
    }
}

impl Mul<Coords> for f64 {
    type Output = Coords;
    #[inline]
    fn mul(self, c: Coords) -> Coords {
        c * self
    }
}

impl Neg for Coords {
    type Output = Coords;
    #[inline]
    fn neg(self) -> Coords {
        self * -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Curvature {
    /// K = −1, hyperboloid model.
    Hyperbolic,
    /// K = 0. Only [`sn_pair`] accepts it.
    Flat,
    /// K = +1, unit sphere.
    Spherical,
}

/// Ambient model descriptor: curvature sign and dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceForm {
    curvature: Curvature,
    dim: usize,
}

impl SpaceForm {
    pub fn new(curvature: Curvature, dim: usize) -> Result<SpaceForm> {
        if dim < 3 {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension must be at least 3, got {dim}"
            )));
        }
        if dim + 1 > MAX_COORDS {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension at most {} supported, got {dim}",
                MAX_COORDS - 1
            )));
        }
        Ok(SpaceForm { curvature, dim })
    }

    /// Builds a form from the integer curvature sign.
    pub fn from_sign(k: i32, dim: usize) -> Result<SpaceForm> {
        let c = match k {
            -1 => Curvature::Hyperbolic,
            0 => Curvature::Flat,
            1 => Curvature::Spherical,
            _ => return Err(Error::InvalidParameter(format!("curvature sign must be -1, 0 or 1, got {k}"))),
        };
        SpaceForm::new(c, dim)
    }

    pub fn hyperbolic(dim: usize) -> SpaceForm {
        SpaceForm::new(Curvature::Hyperbolic, dim).expect("valid hyperbolic dimension")
    }

    pub fn spherical(dim: usize) -> SpaceForm {
        SpaceForm::new(Curvature::Spherical, dim).expect("valid spherical dimension")
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of model coordinates, `n + 1`.
    pub fn coords_len(&self) -> usize {
        self.dim + 1
    }

    /// Curvature sign as a float: −1, 0 or +1.
    pub fn k(&self) -> f64 {
        match self.curvature {
            Curvature::Hyperbolic => -1.0,
            Curvature::Flat => 0.0,
            Curvature::Spherical => 1.0,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.curvature == Curvature::Hyperbolic
    }

    pub fn is_spherical(&self) -> bool {
        self.curvature == Curvature::Spherical
    }

    pub(crate) fn require_curved(&self) -> Result<()> {
        if self.curvature == Curvature::Flat {
            Err(Error::Unsupported("Euclidean ambient (K = 0) is not a supported model".into()))
        } else {
            Ok(())
        }
    }

    /// Model bilinear form: Minkowski for K = −1, Euclidean otherwise.
    #[inline]
    pub fn dot(&self, a: &Coords, b: &Coords) -> f64 {
        let mut s = 0.0;
        for i in 1..MAX_COORDS {
            s += a.0[i] * b.0[i];
        }
        match self.curvature {
            Curvature::Hyperbolic => s - a.0[0] * b.0[0],
            _ => s + a.0[0] * b.0[0],
        }
    }

    /// `√⟨v,v⟩`, clamped at zero (tangent vectors are spacelike).
    #[inline]
    pub fn norm(&self, v: &Coords) -> f64 {
        self.dot(v, v).max(0.0).sqrt()
    }

    /// Orthogonal projection of an ambient vector onto `T_x`.
    #[inline]
    pub fn project_tangent(&self, x: &Coords, a: &Coords) -> Coords {
        *a - *x * (self.k() * self.dot(a, x))
    }

    /// The point `(1, 0, …, 0)`.
    pub fn origin(&self) -> AmbientPoint {
        AmbientPoint(Coords::basis(0))
    }

    fn membership_defect(&self, c: &Coords) -> f64 {
        let scale = self.dot_euclid(c).max(1.0);
        (self.dot(c, c) - self.k()).abs() / scale
    }

    fn dot_euclid(&self, c: &Coords) -> f64 {
        c.0.iter().map(|x| x * x).sum()
    }

    fn check_len(&self, c: &Coords) -> Result<()> {
        if c.0[self.coords_len()..].iter().any(|&x| x != 0.0) {
            return Err(Error::Model(format!(
                "coordinates beyond the model dimension {} are nonzero",
                self.coords_len()
            )));
        }
        Ok(())
    }

    fn validate_point(&self, c: Coords, tol: f64) -> Result<AmbientPoint> {
        self.require_curved()?;
        self.check_len(&c)?;
        if c.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Model("non-finite coordinates".into()));
        }
        let defect = self.membership_defect(&c);
        if defect > tol {
            return Err(Error::Model(format!("⟨x,x⟩ deviates from {} by {defect:.3e}", self.k())));
        }
        if self.is_hyperbolic() && c.0[0] <= 0.0 {
            return Err(Error::Model("hyperboloid point must have x₀ > 0".into()));
        }
        Ok(AmbientPoint(c))
    }

    /// Validates model coordinates as a point (tolerance 1e−12).
    pub fn point(&self, coords: &[f64]) -> Result<AmbientPoint> {
        if coords.len() != self.coords_len() {
            return Err(Error::Model(format!(
                "expected {} coordinates, got {}",
                self.coords_len(),
                coords.len()
            )));
        }
        self.validate_point(Coords::from_slice(coords), VALIDATION_TOL)
    }

    /// Validates coordinates produced by a computation (tolerance 1e−10).
    pub fn point_from_coords(&self, c: Coords) -> Result<AmbientPoint> {
        self.validate_point(c, DRIFT_TOL)
    }

    /// Validates a tangent vector at `base` (tolerance 1e−12, relative to the sizes involved).
    pub fn vector(&self, base: &AmbientPoint, components: &[f64]) -> Result<AmbientVector> {
        if components.len() != self.coords_len() {
            return Err(Error::Model(format!(
                "expected {} components, got {}",
                self.coords_len(),
                components.len()
            )));
        }
        self.vector_from_coords(base, Coords::from_slice(components), VALIDATION_TOL)
    }

    fn vector_from_coords(&self, base: &AmbientPoint, v: Coords, tol: f64) -> Result<AmbientVector> {
        self.check_len(&v)?;
        let scale = (base.0.euclidean_norm() * v.euclidean_norm()).max(1.0);
        let d = self.dot(&base.0, &v).abs() / scale;
        if d > tol {
            return Err(Error::Model(format!("vector not tangent: ⟨x,v⟩ = {d:.3e}")));
        }
        Ok(AmbientVector { base: *base, components: v })
    }

    /// `w = ½⟨x−o, x−o⟩`, equal to `cosh r − 1` (resp. `1 − cos r`).
    #[inline]
    pub fn half_chord2(&self, o: &Coords, x: &Coords) -> f64 {
        let d = *x - *o;
        (0.5 * self.dot(&d, &d)).max(0.0)
    }

    /// Geodesic distance on raw coordinates, without validation of inputs.
    pub fn distance_raw(&self, o: &Coords, x: &Coords) -> Result<f64> {
        let k = self.k();
        match self.curvature {
            Curvature::Hyperbolic => {
                let c = -self.dot(o, x);
                let scale = o.0[0].abs() * x.0[0].abs();
                if c < 1.0 - DRIFT_TOL * scale.max(1.0) {
                    return Err(Error::Model(format!("−⟨o,x⟩ = {c} < 1")));
                }
                if c - 1.0 < STABLE_BRANCH {
                    let q = 2.0 * self.half_chord2(o, x);
                    Ok(2.0 * (0.5 * q.sqrt()).asinh())
                } else {
                    Ok(c.acosh())
                }
            }
            Curvature::Spherical => {
                let c = self.dot(o, x);
                if c.abs() > 1.0 + DRIFT_TOL {
                    return Err(Error::Model(format!("|o·x| = {} > 1", c.abs())));
                }
                if c > 1.0 - STABLE_BRANCH {
                    let chord = (*x - *o).euclidean_norm();
                    Ok(2.0 * (0.5 * chord).min(1.0).asin())
                } else if c < -1.0 + STABLE_BRANCH {
                    let chord = (*x + *o).euclidean_norm();
                    Ok(PI - 2.0 * (0.5 * chord).min(1.0).asin())
                } else {
                    Ok(c.acos())
                }
            }
            Curvature::Flat => {
                let _ = k;
                Err(Error::Unsupported("distance in the flat model".into()))
            }
        }
    }

    /// The radial field `X = (x − o) − K w x` on raw coordinates.
    #[inline]
    pub fn x_field_raw(&self, o: &Coords, x: &Coords) -> Coords {
        let d = *x - *o;
        let w = 0.5 * self.dot(&d, &d);
        d - *x * (self.k() * w)
    }

    /// Static potential `V = K⟨o, x⟩ = 1 − K w`.
    #[inline]
    pub fn potential_raw(&self, o: &Coords, x: &Coords) -> f64 {
        1.0 - self.k() * self.half_chord2(o, x)
    }
}

/// Validated point of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientPoint(Coords);

impl AmbientPoint {
    pub fn coords(&self) -> &Coords {
        &self.0
    }

    pub fn to_vec(&self, form: &SpaceForm) -> Vec<f64> {
        self.0 .0[..form.coords_len()].to_vec()
    }
}

/// Validated tangent vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientVector {
    pub base: AmbientPoint,
    pub components: Coords,
}

/// Radial weight functions at geodesic distance `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialWeights {
    pub r: f64,
    pub sn: f64,
    pub sn_prime: f64,
    /// Static potential, equal to `sn_prime`.
    pub v: f64,
    /// `∫₀ʳ sn`, i.e. `cosh r − 1` or `1 − cos r`.
    pub w: f64,
    pub phi: f64,
    pub phi_prime: f64,
}

impl RadialWeights {
    /// `2φV + φ′ sn`, which equals `−K`.
    pub fn identity_value(&self) -> f64 {
        2.0 * self.phi * self.v + self.phi_prime * self.sn
    }
}

/// `(sn_K(r), sn_K′(r))`. Accepts the flat model for completeness.
pub fn sn_pair(form: &SpaceForm, r: f64) -> Result<(f64, f64)> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("r must be nonnegative, got {r}")));
    }
    match form.curvature {
        Curvature::Hyperbolic => Ok((r.sinh(), r.cosh())),
        Curvature::Flat => Ok((r, 1.0)),
        Curvature::Spherical => {
            if r >= PI {
                return Err(Error::Domain(format!("r = {r} ≥ π on the sphere")));
            }
            Ok((r.sin(), r.cos()))
        }
    }
}

pub fn radial_weights(form: &SpaceForm, r: f64) -> Result<RadialWeights> {
    form.require_curved()?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial weights need r > 0, got {r}")));
    }
    let (sn, cs) = sn_pair(form, r)?;
    let h = match form.curvature {
        Curvature::Hyperbolic => (0.5 * r).sinh(),
        _ => (0.5 * r).sin(),
    };
    let w = 2.0 * h * h;
    let phi = 1.0 / w;
    Ok(RadialWeights {
        r,
        sn,
        sn_prime: cs,
        v: cs,
        w,
        phi,
        phi_prime: -sn * phi * phi,
    })
}

pub fn distance(form: &SpaceForm, o: &AmbientPoint, x: &AmbientPoint) -> Result<f64> {
    form.require_curved()?;
    form.distance_raw(&o.0, &x.0)
}

/// Point at arc length `rho` along the geodesic from `x` with unit velocity `z`.
pub fn geodesic_point(form: &SpaceForm, x: &AmbientPoint, z: &AmbientVector, rho: f64) -> Result<AmbientPoint> {
    form.require_curved()?;
    let zc = z.components;
    let scale = (x.0.euclidean_norm() * zc.euclidean_norm()).max(1.0);
    if form.dot(&x.0, &zc).abs() > DRIFT_TOL * scale {
        return Err(Error::Model("velocity is not tangent at the start point".into()));
    }
    if (form.dot(&zc, &zc) - 1.0).abs() > DRIFT_TOL * zc.euclidean_norm().powi(2).max(1.0) {
        return Err(Error::Model("velocity is not a unit vector".into()));
    }
    let (s, c) = match form.curvature {
        Curvature::Hyperbolic => (rho.sinh(), rho.cosh()),
        _ => (rho.sin(), rho.cos()),
    };
    form.point_from_coords(x.0 * c + zc * s)
}

/// Length and unit initial velocity of the geodesic segment from `x` to `y`.
pub fn initial_velocity(form: &SpaceForm, x: &AmbientPoint, y: &AmbientPoint) -> Result<(f64, AmbientVector)> {
    form.require_curved()?;
    let rho = form.distance_raw(&x.0, &y.0)?;
    if rho <= 1e-15 {
        return Err(Error::Degenerate("coincident endpoints".into()));
    }
    if form.is_spherical() && PI - rho <= 1e-12 {
        return Err(Error::Degenerate("antipodal endpoints".into()));
    }
    let t = form.project_tangent(&x.0, &(y.0 - x.0));
    let n = form.norm(&t);
    if n <= 0.0 {
        return Err(Error::Degenerate("no unique initial velocity".into()));
    }
    Ok((rho, AmbientVector { base: *x, components: t * (1.0 / n) }))
}

/// Unit gradient of `r = dist(o, ·)` at `x`.
pub fn grad_r(form: &SpaceForm, o: &AmbientPoint, x: &AmbientPoint) -> Result<AmbientVector> {
    form.require_curved()?;
    let r = form.distance_raw(&o.0, &x.0)?;
    if r <= 1e-15 {
        return Err(Error::Degenerate("∇r is undefined at the base point".into()));
    }
    if form.is_spherical() && PI - r <= 1e-12 {
        return Err(Error::Degenerate("∇r is undefined at the antipode".into()));
    }
    let xf = form.x_field_raw(&o.0, &x.0);
    let n = form.norm(&xf);
    Ok(AmbientVector { base: *x, components: xf * (1.0 / n) })
}

/// `X = sn(r) ∇r`, extended by zero at `o`.
pub fn x_field(form: &SpaceForm, o: &AmbientPoint, x: &AmbientPoint) -> Result<AmbientVector> {
    form.require_curved()?;
    Ok(AmbientVector { base: *x, components: form.x_field_raw(&o.0, &x.0) })
}

/// Linear isometry of the model, acting on the first `n + 1` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    m: [[f64; MAX_COORDS]; MAX_COORDS],
}

impl Isometry {
    pub fn identity() -> Isometry {
        let mut m = [[0.0; MAX_COORDS]; MAX_COORDS];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Isometry { m }
    }

    /// The transvection carrying `a` to `b` along the geodesic joining them,
    /// as the product of the reflections in `(a + b)^⊥` and `b^⊥`.
    pub fn transvection(form: &SpaceForm, a: &Coords, b: &Coords) -> Result<Isometry> {
        form.require_curved()?;
        let k = form.k();
        let s = *a + *b;
        let denom = k + form.dot(a, b);
        if denom.abs() < 1e-14 {
            return Err(Error::Degenerate("transvection between antipodal points".into()));
        }
        let mut m = [[0.0; MAX_COORDS]; MAX_COORDS];
        for j in 0..form.coords_len() {
            let e = Coords::basis(j);
            let img = e - s * (form.dot(&s, &e) / denom) + *b * (2.0 * form.dot(a, &e) / k);
            for i in 0..MAX_COORDS {
                m[i][j] = img.0[i];
            }
        }
        Ok(Isometry { m })
    }

    /// Rotation by `angle` in the plane of spatial axes `i` and `j` (both ≥ 1).
    pub fn rotation(i: usize, j: usize, angle: f64) -> Isometry {
        assert!(i >= 1 && j >= 1 && i != j && i < MAX_COORDS && j < MAX_COORDS);
        let mut g = Isometry::identity();
        let (s, c) = angle.sin_cos();
        g.m[i][i] = c;
        g.m[i][j] = -s;
        g.m[j][i] = s;
        g.m[j][j] = c;
        g
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let mut m = [[0.0; MAX_COORDS]; MAX_COORDS];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..MAX_COORDS).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Isometry { m }
    }

    #[inline]
    pub fn apply(&self, x: &Coords) -> Coords {
        let mut out = Coords::ZERO;
        for i in 0..MAX_COORDS {
            let row = &self.m[i];
            let mut s = 0.0;
            for j in 0..MAX_COORDS {
                s += row[j] * x.0[j];
            }
            out.0[i] = s;
        }
        out
    }
}
