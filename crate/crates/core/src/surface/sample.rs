use std::f64::consts::PI;

use super::chart::JetData;
use super::ImmersedSurface;
use crate::error::{Error, Result};
use crate::spaceform::{radial_weights, AmbientPoint, Coords, RadialWeights, SpaceForm};

const DEGENERATE_METRIC: f64 = 1e-14;

/// Pointwise geometry of the surface at one parameter point, relative to a
/// base point `o`.
#[derive(Clone, Copy, Debug)]
pub struct GeometrySample {
    pub position: Coords,
    /// Orthonormal tangent frame, `e1` along `F_u`.
    pub e1: Coords,
    pub e2: Coords,
    pub area_element: f64,
    /// Mean curvature vector (trace of the second fundamental form).
    pub h_vec: Coords,
    /// Distance to the base point; NaN when sampled without one.
    pub r: f64,
    /// The radial field `X = sn(r)∇r`.
    pub x_field: Coords,
    pub x_perp: Coords,
    /// `∇^Σ r`, zero where `r` is not differentiable.
    pub grad_r_tangential: Coords,
    /// Present when `0 < r` (and `r < π` on the sphere).
    pub weights: Option<RadialWeights>,
}

impl GeometrySample {
    pub fn h_norm2(&self, form: &SpaceForm) -> f64 {
        form.dot(&self.h_vec, &self.h_vec)
    }

    pub fn x_perp_dot_h(&self, form: &SpaceForm) -> f64 {
        form.dot(&self.x_perp, &self.h_vec)
    }

    pub fn x_perp_norm2(&self, form: &SpaceForm) -> f64 {
        form.dot(&self.x_perp, &self.x_perp)
    }

    /// `|X^⊥/w + H/2|²`, or zero where the weights are undefined (a null set).
    pub fn square_term(&self, form: &SpaceForm) -> f64 {
        match self.weights {
            Some(w) => {
                let v = self.x_perp * w.phi + self.h_vec * 0.5;
                form.dot(&v, &v)
            }
            None => 0.0,
        }
    }

    /// `|∇^Σ r|²`.
    pub fn grad_r_tangential_norm2(&self, form: &SpaceForm) -> f64 {
        form.dot(&self.grad_r_tangential, &self.grad_r_tangential)
    }

    pub fn weights(&self) -> Result<&RadialWeights> {
        self.weights
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("radial weights undefined at r = {}", self.r)))
    }
}

pub(crate) struct Metric {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
}

pub(crate) fn metric(form: &SpaceForm, jet: &JetData) -> Result<Metric> {
    let g11 = form.dot(&jet.fu, &jet.fu);
    let g12 = form.dot(&jet.fu, &jet.fv);
    let g22 = form.dot(&jet.fv, &jet.fv);
    let det = g11 * g22 - g12 * g12;
    if !(det > DEGENERATE_METRIC) {
        return Err(Error::Degenerate(format!("induced metric determinant {det:.3e} ≤ 1e-14")));
    }
    Ok(Metric { g11, g12, g22, det })
}

/// Orthonormal frame by Gram–Schmidt of `(F_u, F_v)`.
pub(crate) fn frame(form: &SpaceForm, jet: &JetData, m: &Metric) -> (Coords, Coords) {
    let e1 = jet.fu * (1.0 / m.g11.sqrt());
    let t = jet.fv - e1 * form.dot(&jet.fv, &e1);
    let e2 = t * (1.0 / form.norm(&t));
    (e1, e2)
}

pub(crate) fn sample_from_jet(form: &SpaceForm, jet: &JetData, base: Option<&Coords>) -> Result<GeometrySample> {
    let m = metric(form, jet)?;
    let (e1, e2) = frame(form, jet, &m);
    let k = form.k();
    let f = jet.f;

    // g^{ij} F_ij + 2K F, then remove the tangential and position components.
    let inv = 1.0 / m.det;
    let mut h = (jet.fuu * m.g22 - jet.fuv * (2.0 * m.g12) + jet.fvv * m.g11) * inv + f * (2.0 * k);
    h -= e1 * form.dot(&h, &e1);
    h -= e2 * form.dot(&h, &e2);
    h -= f * (k * form.dot(&h, &f));

    let mut sample = GeometrySample {
        position: f,
        e1,
        e2,
        area_element: m.det.sqrt(),
        h_vec: h,
        r: f64::NAN,
        x_field: Coords::ZERO,
        x_perp: Coords::ZERO,
        grad_r_tangential: Coords::ZERO,
        weights: None,
    };

    if let Some(o) = base {
        let r = form.distance_raw(o, &f)?;
        let x = form.x_field_raw(o, &f);
        let x_tan = e1 * form.dot(&x, &e1) + e2 * form.dot(&x, &e2);
        sample.r = r;
        sample.x_field = x;
        sample.x_perp = x - x_tan;
        let in_chart = r > 0.0 && !(form.is_spherical() && r >= PI);
        if in_chart {
            let w = radial_weights(form, r)?;
            sample.grad_r_tangential = x_tan * (1.0 / w.sn);
            sample.weights = Some(w);
        }
    }
    Ok(sample)
}

impl ImmersedSurface {
    /// Geometry at `(u, v)` of chart `chart_index` relative to base point `o`.
    ///
    /// Fails if the metric degenerates or the node coincides with `o`.
    pub fn sample_geometry(&self, chart_index: usize, u: f64, v: f64, o: &AmbientPoint) -> Result<GeometrySample> {
        let chart = self.chart(chart_index)?;
        if !chart.domain.contains(u, v) {
            return Err(Error::Domain(format!("({u}, {v}) outside the domain of chart {chart_index}")));
        }
        let s = sample_from_jet(&self.form, &chart.jet(u, v), Some(o.coords()))?;
        if s.weights.is_none() {
            return Err(Error::Domain(format!("radial weights undefined at r = {}", s.r)));
        }
        Ok(s)
    }

    /// Geometry without a base point (no radial quantities).
    pub fn sample_intrinsic(&self, chart_index: usize, u: f64, v: f64) -> Result<GeometrySample> {
        let chart = self.chart(chart_index)?;
        sample_from_jet(&self.form, &chart.jet(u, v), None)
    }

    /// `div_Σ Y` at `(u, v)`; see [`GeometrySample::divergence`].
    pub fn surface_divergence<Y>(&self, chart_index: usize, u: f64, v: f64, field: Y) -> Result<f64>
    where
        Y: Fn(&Coords) -> Coords,
    {
        let chart = self.chart(chart_index)?;
        sample_from_jet(&self.form, &chart.jet(u, v), None)?.divergence(&self.form, field)
    }
}

impl GeometrySample {
    /// `div_Σ Y = Σᵢ ⟨∇_{eᵢ} Y, eᵢ⟩` for an ambient field `Y` (tangent to the
    /// model), by Richardson-extrapolated centered differences along the
    /// ambient geodesics in the directions `e₁, e₂`.
    pub fn divergence<Y>(&self, form: &SpaceForm, field: Y) -> Result<f64>
    where
        Y: Fn(&Coords) -> Coords,
    {
        let feature = 1.0 / (1.0 + form.norm(&self.h_vec));
        let h = 1e-3 * feature.min(1.0);
        if h < 1e-7 * 1e-3 {
            return Err(Error::Degenerate(format!("finite-difference step underflow (feature scale {feature:.3e})")));
        }
        let f = self.position;
        let geo = |e: &Coords, t: f64| -> Coords {
            let (sn, cs) = if form.is_hyperbolic() { (t.sinh(), t.cosh()) } else { (t.sin(), t.cos()) };
            f * cs + *e * sn
        };
        let deriv = |e: &Coords, t: f64| -> Coords { (field(&geo(e, t)) - field(&geo(e, -t))) * (0.5 / t) };
        let mut div = 0.0;
        for e in [&self.e1, &self.e2] {
            let coarse = deriv(e, h);
            let fine = deriv(e, 0.5 * h);
            let d = (fine * 4.0 - coarse) * (1.0 / 3.0);
            div += form.dot(&d, e);
        }
        Ok(div)
    }
}
