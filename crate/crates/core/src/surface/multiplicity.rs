//! Preimage search for multiplicity counts, and outward normals of embedded
//! closed surfaces in `ℍ³`.

use super::chart::{Chart, JetData};
use super::ImmersedSurface;
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::spaceform::{AmbientPoint, Coords, SpaceForm};

const SCAN: usize = 40;
const ON_SURFACE_TOL: f64 = 1e-8;
const MERGE_SEPARATION: f64 = 1e-6;
const EDGE_TOL: f64 = 1e-7;

/// A parameter point mapping to a given ambient point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preimage {
    pub chart: usize,
    pub u: f64,
    pub v: f64,
    /// Euclidean coordinate distance between the image and the target.
    pub miss: f64,
}

fn edot(a: &Coords, b: &Coords) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum()
}

/// Damped Gauss–Newton on `|F(u, v) − o|²` in model coordinates, wrapping
/// periodic axes and clamping the others.
pub(super) fn polish(chart: &Chart, o: &Coords, mut u: f64, mut v: f64) -> (f64, f64, f64) {
    let d = chart.domain;
    let miss = |u: f64, v: f64| (chart.position(u, v) - *o).euclidean_norm();
    let mut best = miss(u, v);
    for _ in 0..60 {
        if best < 1e-15 {
            break;
        }
        let j = chart.jet(u, v);
        let res = j.f - *o;
        let (a, b, c) = (edot(&j.fu, &j.fu), edot(&j.fu, &j.fv), edot(&j.fv, &j.fv));
        let (gu, gv) = (edot(&j.fu, &res), edot(&j.fv, &res));
        // Levenberg damping keeps the step finite on degenerate (pole) edges.
        let lam = 1e-12 * (a + c);
        let (a, c) = (a + lam, c + lam);
        let det = a * c - b * b;
        if !(det > 0.0) {
            break;
        }
        let du = -(c * gu - b * gv) / det;
        let dv = -(a * gv - b * gu) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let (nu, nv) = d.normalize(u + step * du, v + step * dv);
            let m = miss(nu, nv);
            if m < best {
                u = nu;
                v = nv;
                improved = m < 0.999_999 * best;
                best = m;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (u, v, best)
}

fn same_point(surface: &ImmersedSurface, a: &Preimage, b: &Preimage) -> bool {
    let (ca, cb) = (&surface.charts[a.chart], &surface.charts[b.chart]);
    if ca.sheet != cb.sheet {
        return false;
    }
    if a.chart == b.chart && ca.domain.separation((a.u, a.v), (b.u, b.v)) < MERGE_SEPARATION {
        return true;
    }
    // Seams between charts, and degenerate edges such as a polar chart's
    // pole, represent one abstract point by several parameter points.
    let on_a = ca.domain.on_edge(a.u, a.v, EDGE_TOL);
    let on_b = cb.domain.on_edge(b.u, b.v, EDGE_TOL);
    let gap = (ca.position(a.u, a.v) - cb.position(b.u, b.v)).euclidean_norm();
    on_a && on_b && gap < ON_SURFACE_TOL
}

impl ImmersedSurface {
    /// Candidate preimages of `o` in one chart, after polishing.
    fn chart_preimages(&self, ci: usize, o: &Coords) -> Vec<Preimage> {
        let chart = &self.charts[ci];
        let d = chart.domain;
        let n = SCAN;
        let at = |i: usize, j: usize| {
            let u = d.u0 + (d.u1 - d.u0) * i as f64 / n as f64;
            let v = d.v0 + (d.v1 - d.v0) * j as f64 / n as f64;
            (u, v)
        };
        let mut grid = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in 0..=n {
                let (u, v) = at(i, j);
                grid[i * (n + 1) + j] = (chart.position(u, v) - *o).euclidean_norm();
            }
        }
        let idx = |i: isize, j: isize| -> Option<usize> {
            let wrap = |k: isize, periodic: bool| -> Option<usize> {
                if (0..=n as isize).contains(&k) {
                    Some(k as usize)
                } else if periodic {
                    Some(k.rem_euclid(n as isize) as usize)
                } else {
                    None
                }
            };
            Some(wrap(i, d.periodic_u)? * (n + 1) + wrap(j, d.periodic_v)?)
        };
        let mut out = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                let here = grid[i * (n + 1) + j];
                let mut minimum = true;
                for di in -1isize..=1 {
                    for dj in -1isize..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if let Some(k) = idx(i as isize + di, j as isize + dj) {
                            if grid[k] < here {
                                minimum = false;
                            }
                        }
                    }
                }
                if !minimum {
                    continue;
                }
                let (u, v) = at(i, j);
                let (u, v, miss) = polish(chart, o, u, v);
                out.push(Preimage { chart: ci, u, v, miss });
            }
        }
        out
    }

    /// All distinct parameter preimages of `o`.
    pub fn find_preimages(&self, o: &AmbientPoint) -> Result<Vec<Preimage>> {
        let target = o.coords();
        let tol = ON_SURFACE_TOL * target.euclidean_norm().max(1.0);
        let mut closest = f64::INFINITY;
        let mut hits: Vec<Preimage> = Vec::new();
        for ci in 0..self.charts.len() {
            for p in self.chart_preimages(ci, target) {
                closest = closest.min(p.miss);
                if p.miss <= tol && !hits.iter().any(|q| same_point(self, q, &p)) {
                    hits.push(p);
                }
            }
        }
        if hits.is_empty() {
            return Err(Error::NotOnSurface(closest));
        }
        Ok(hits)
    }

    /// Number of preimages of `o` (the multiplicity of the immersion there).
    pub fn multiplicity_at(&self, o: &AmbientPoint) -> Result<usize> {
        Ok(self.find_preimages(o)?.len())
    }

    /// Outward unit normals of a closed surface in `ℍ³` bounding a region.
    ///
    /// Chart orientations must agree across seams of a sheet; the global sign
    /// is fixed by requiring positive flux of the radial field, whose
    /// divergence is everywhere positive.
    pub fn oriented_normals(&self) -> Result<OrientedNormals> {
        let form = self.form;
        if !form.is_hyperbolic() || form.dim() != 3 {
            return Err(Error::Unsupported(format!("oriented normals need ℍ³, got K = {}, n = {}", form.k(), form.dim())));
        }
        if !self.closed {
            return Err(Error::NotClosed);
        }
        let trial = OrientedNormals { form, sign: 1.0 };
        self.check_seams(&trial)?;

        let c = *form.origin().coords();
        let rule = GaussRule::get(self.quadrature.gauss_points_per_cell_axis);
        let nb = self.quadrature.base_cells_per_axis;
        let (mut flux, mut scale) = (0.0, 0.0);
        for chart in &self.charts {
            let d = chart.domain;
            let (hu, hv) = ((d.u1 - d.u0) / nb as f64, (d.v1 - d.v0) / nb as f64);
            for i in 0..nb {
                for j in 0..nb {
                    let u0 = d.u0 + hu * i as f64;
                    let v0 = d.v0 + hv * j as f64;
                    for (u, wu) in rule.mapped(u0, u0 + hu) {
                        for (v, wv) in rule.mapped(v0, v0 + hv) {
                            let jet = chart.jet(u, v);
                            let nu = trial.from_jet(chart, &jet)?;
                            let x = form.x_field_raw(&c, &jet.f);
                            let da = super::sample::metric(&form, &jet)?.det.sqrt();
                            flux += wu * wv * da * form.dot(&x, &nu);
                            scale += wu * wv * da * form.norm(&x);
                        }
                    }
                }
            }
        }
        if flux.abs() <= 1e-6 * scale {
            return Err(Error::Orientation("radial flux vanishes; surface does not bound a region".into()));
        }
        Ok(OrientedNormals { form, sign: flux.signum() })
    }

    fn check_seams(&self, normals: &OrientedNormals) -> Result<()> {
        const SAMPLES: usize = 5;
        for (ci, chart) in self.charts.iter().enumerate() {
            let d = chart.domain;
            let mut points = Vec::new();
            for k in 0..SAMPLES {
                let s = (k as f64 + 0.5) / SAMPLES as f64;
                if !d.periodic_u {
                    points.push((d.u0, d.v0 + s * (d.v1 - d.v0)));
                    points.push((d.u1, d.v0 + s * (d.v1 - d.v0)));
                }
                if !d.periodic_v {
                    points.push((d.u0 + s * (d.u1 - d.u0), d.v0));
                    points.push((d.u0 + s * (d.u1 - d.u0), d.v1));
                }
            }
            for (u, v) in points {
                let jet = chart.jet(u, v);
                let Ok(nu) = normals.from_jet(chart, &jet) else {
                    continue;
                };
                for (cj, other) in self.charts.iter().enumerate() {
                    if cj == ci || other.sheet != chart.sheet {
                        continue;
                    }
                    for p in self.chart_preimages(cj, &jet.f) {
                        if p.miss > ON_SURFACE_TOL * jet.f.euclidean_norm().max(1.0) {
                            continue;
                        }
                        let Ok(mu) = normals.from_jet(other, &other.jet(p.u, p.v)) else {
                            continue;
                        };
                        if self.form.dot(&nu, &mu) < 0.0 {
                            return Err(Error::Orientation(format!("charts {ci} and {cj} disagree across their seam")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outward unit normal field of a closed embedded surface in `ℍ³`.
#[derive(Clone, Copy, Debug)]
pub struct OrientedNormals {
    form: SpaceForm,
    sign: f64,
}

impl OrientedNormals {
    /// Normals with the chart orientations as given, for `n = 3` ambients.
    pub(crate) fn unsigned(form: SpaceForm) -> OrientedNormals {
        OrientedNormals { form, sign: 1.0 }
    }
}

impl OrientedNormals {
    pub fn at(&self, surface: &ImmersedSurface, chart: usize, u: f64, v: f64) -> Result<Coords> {
        let c = surface.chart(chart)?;
        self.from_jet(c, &c.jet(u, v))
    }

    pub(crate) fn from_jet(&self, chart: &Chart, jet: &JetData) -> Result<Coords> {
        Ok(self.raw(jet)? * chart.orientation)
    }

    /// Unit normal before the chart orientation is applied.
    pub(crate) fn raw(&self, jet: &JetData) -> Result<Coords> {
        // Euclidean cofactor vector of (F, F_u, F_v), then index raised by the
        // Minkowski form so that it is B-orthogonal to all three.
        let rows = [jet.f, jet.fu, jet.fv];
        let minor = |skip: usize| {
            let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
            let m = |r: usize, c: usize| rows[r].0[cols[c]];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        };
        let mut nu = Coords::ZERO;
        for i in 0..4 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            nu.0[i] = sign * minor(i);
        }
        if self.form.is_hyperbolic() {
            nu.0[0] = -nu.0[0];
        }
        let len = self.form.norm(&nu);
        if !(len > 1e-12) {
            return Err(Error::Degenerate("normal undefined where the metric degenerates".into()));
        }
        Ok(nu * (self.sign / len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_dot() {
        let a = Coords::from_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(edot(&a, &a), 14.0);
    }
}
