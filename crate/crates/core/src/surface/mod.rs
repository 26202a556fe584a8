//! Immersed surfaces given by parametric charts: pointwise geometry, surface
//! divergence, and adaptive quadrature over `Σ`, `Σ_ρ`, annuli and `∂Σ`.

mod chart;
mod integrate;
mod multiplicity;
mod sample;

pub use chart::{Chart, ChartMap, Edge, JetData, ParamRect, Patch};
pub use integrate::{Band, Integral, Region};
pub use multiplicity::{OrientedNormals, Preimage};
pub use sample::GeometrySample;

use crate::error::{Error, Result};
use crate::spaceform::SpaceForm;

/// Quadrature resolution and adaptivity controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub base_cells_per_axis: usize,
    pub gauss_points_per_cell_axis: usize,
    pub max_refine_depth: u32,
    /// Relative tolerance for adaptively refined cells (those straddling a
    /// cut `r = ρ`, `r = σ`, or containing the base point).
    pub cut_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            base_cells_per_axis: 8,
            gauss_points_per_cell_axis: 4,
            max_refine_depth: 12,
            cut_tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_cells_per_axis < 4 {
            return Err(Error::InvalidParameter("base_cells_per_axis must be at least 4".into()));
        }
        if !(2..=6).contains(&self.gauss_points_per_cell_axis) {
            return Err(Error::InvalidParameter("gauss_points_per_cell_axis must be in 2..=6".into()));
        }
        if self.max_refine_depth > 12 {
            return Err(Error::InvalidParameter("max_refine_depth must be at most 12".into()));
        }
        if !(self.cut_tolerance > 0.0 && self.cut_tolerance <= 1e-2) {
            return Err(Error::InvalidParameter("cut_tolerance must be in (0, 1e-2]".into()));
        }
        Ok(())
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.base_cells_per_axis = cells;
        self
    }

    pub fn with_gauss(mut self, points: usize) -> Self {
        self.gauss_points_per_cell_axis = points;
        self
    }
}

/// A multiset of charts in a space form. Overlapping images are counted with
/// multiplicity in every integral.
#[derive(Clone, Debug)]
pub struct ImmersedSurface {
    form: SpaceForm,
    charts: Vec<Chart>,
    quadrature: QuadratureSpec,
    closed: bool,
}

impl ImmersedSurface {
    pub fn new(form: SpaceForm, charts: Vec<Chart>, quadrature: QuadratureSpec) -> Result<ImmersedSurface> {
        form.require_curved()?;
        quadrature.validate()?;
        if charts.is_empty() {
            return Err(Error::InvalidParameter("surface needs at least one chart".into()));
        }
        let closed = charts.iter().all(|c| c.boundary_edges.is_empty());
        let surface = ImmersedSurface { form, charts, quadrature, closed };
        surface.check_charts()?;
        Ok(surface)
    }

    // Spot-checks model membership, tangency and immersion on a small grid.
    fn check_charts(&self) -> Result<()> {
        let n = 5;
        for (ci, chart) in self.charts.iter().enumerate() {
            let d = chart.domain;
            for i in 0..n {
                for j in 0..n {
                    let u = d.u0 + (d.u1 - d.u0) * (i as f64 + 0.5) / n as f64;
                    let v = d.v0 + (d.v1 - d.v0) * (j as f64 + 0.5) / n as f64;
                    let jet = chart.jet(u, v);
                    let f = &jet.f;
                    let scale = f.euclidean_norm().powi(2).max(1.0);
                    if (self.form.dot(f, f) - self.form.k()).abs() > 1e-10 * scale {
                        return Err(Error::Model(format!("chart {ci} leaves the model at ({u}, {v})")));
                    }
                    let tang = self.form.dot(f, &jet.fu).abs().max(self.form.dot(f, &jet.fv).abs());
                    if tang > 1e-8 * scale.sqrt() * (jet.fu.euclidean_norm() + jet.fv.euclidean_norm()).max(1.0) {
                        return Err(Error::Model(format!("chart {ci} derivatives not tangent at ({u}, {v})")));
                    }
                    sample::metric(&self.form, &jet).map_err(|e| match e {
                        Error::Degenerate(m) => Error::Degenerate(format!("chart {ci}: {m}")),
                        other => other,
                    })?;
                }
            }
            if chart.domain.u1 <= chart.domain.u0 || chart.domain.v1 <= chart.domain.v0 {
                return Err(Error::InvalidParameter(format!("chart {ci} has an empty domain")));
            }
        }
        Ok(())
    }

    pub fn form(&self) -> &SpaceForm {
        &self.form
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn with_quadrature(&self, quadrature: QuadratureSpec) -> Result<ImmersedSurface> {
        quadrature.validate()?;
        let mut s = self.clone();
        s.quadrature = quadrature;
        Ok(s)
    }

    /// The same surface with the charts of `other` appended (a multiset union).
    pub fn union(&self, other: &ImmersedSurface) -> Result<ImmersedSurface> {
        if self.form != other.form {
            return Err(Error::InvalidParameter("cannot join surfaces in different ambients".into()));
        }
        let offset = self.charts.iter().map(|c| c.sheet + 1).max().unwrap_or(0);
        let mut charts = self.charts.clone();
        charts.extend(other.charts.iter().cloned().map(|c| {
            let sheet = c.sheet + offset;
            c.with_sheet(sheet)
        }));
        ImmersedSurface::new(self.form, charts, self.quadrature)
    }

    pub(crate) fn chart(&self, index: usize) -> Result<&Chart> {
        self.charts
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("chart index {index} out of range ({} charts)", self.charts.len())))
    }
}
