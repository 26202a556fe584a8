use std::fmt;
use std::sync::Arc;

use crate::jet::{Jet2, Real};
use crate::spaceform::{Coords, Isometry};

/// A parametrization into the four local model coordinates of a totally
/// geodesic `ℍ³`/`𝕊³`. Written once, generic over the scalar type, so that
/// positions and exact jets come from the same code.
pub trait Patch: Send + Sync + fmt::Debug {
    fn map<S: Real>(&self, u: S, v: S) -> [S; 4];
}

/// Object-safe view of a [`Patch`].
pub trait ChartMap: Send + Sync + fmt::Debug {
    fn position(&self, u: f64, v: f64) -> [f64; 4];
    fn jet(&self, u: f64, v: f64) -> [Jet2; 4];
}

impl<P: Patch> ChartMap for P {
    fn position(&self, u: f64, v: f64) -> [f64; 4] {
        self.map(u, v)
    }

    fn jet(&self, u: f64, v: f64) -> [Jet2; 4] {
        self.map(Jet2::var_u(u), Jet2::var_v(v))
    }
}

/// Position with first and second parameter derivatives.
#[derive(Clone, Copy, Debug)]
pub struct JetData {
    pub f: Coords,
    pub fu: Coords,
    pub fv: Coords,
    pub fuu: Coords,
    pub fuv: Coords,
    pub fvv: Coords,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    UMin,
    UMax,
    VMin,
    VMax,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::UMin, Edge::UMax, Edge::VMin, Edge::VMax];
}

/// Parameter rectangle with per-axis periodicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub periodic_u: bool,
    pub periodic_v: bool,
}

impl ParamRect {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> ParamRect {
        ParamRect { u0, u1, v0, v1, periodic_u: false, periodic_v: false }
    }

    pub fn periodic(mut self, u: bool, v: bool) -> ParamRect {
        self.periodic_u = u;
        self.periodic_v = v;
        self
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (self.periodic_u || (u >= self.u0 && u <= self.u1)) && (self.periodic_v || (v >= self.v0 && v <= self.v1))
    }

    /// Wraps periodic axes and clamps the others into the rectangle.
    pub fn normalize(&self, u: f64, v: f64) -> (f64, f64) {
        let fix = |x: f64, a: f64, b: f64, periodic: bool| {
            if periodic {
                a + (x - a).rem_euclid(b - a)
            } else {
                x.clamp(a, b)
            }
        };
        (fix(u, self.u0, self.u1, self.periodic_u), fix(v, self.v0, self.v1, self.periodic_v))
    }

    /// Parameter-space separation, using the short way round periodic axes.
    pub fn separation(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let d = |x: f64, y: f64, len: f64, periodic: bool| {
            let t = (x - y).abs();
            if periodic {
                t.min(len - t)
            } else {
                t
            }
        };
        let du = d(a.0, b.0, self.u1 - self.u0, self.periodic_u);
        let dv = d(a.1, b.1, self.v1 - self.v0, self.periodic_v);
        du.hypot(dv)
    }

    /// True when `(u, v)` lies within `tol` of a non-periodic side.
    pub fn on_edge(&self, u: f64, v: f64, tol: f64) -> bool {
        (!self.periodic_u && ((u - self.u0).abs() <= tol || (u - self.u1).abs() <= tol))
            || (!self.periodic_v && ((v - self.v0).abs() <= tol || (v - self.v1).abs() <= tol))
    }
}

/// One parametric chart of an immersed surface.
///
/// Charts of the same abstract surface component share a `sheet` id; this is
/// what lets seam points found in two neighbouring charts be recognized as a
/// single point when counting multiplicity.
#[derive(Clone, Debug)]
pub struct Chart {
    map: Arc<dyn ChartMap>,
    placement: Isometry,
    pub domain: ParamRect,
    pub boundary_edges: Vec<Edge>,
    pub sheet: usize,
    /// `±1`; multiplies the oriented normal so that it points outward.
    pub orientation: f64,
}

impl Chart {
    pub fn new(map: impl ChartMap + 'static, domain: ParamRect) -> Chart {
        Chart {
            map: Arc::new(map),
            placement: Isometry::identity(),
            domain,
            boundary_edges: Vec::new(),
            sheet: 0,
            orientation: 1.0,
        }
    }

    pub fn with_placement(mut self, g: Isometry) -> Chart {
        self.placement = g;
        self
    }

    /// Applies a further isometry after the current placement.
    pub fn placed(mut self, g: &Isometry) -> Chart {
        self.placement = g.compose(&self.placement);
        self
    }

    pub fn with_boundary(mut self, edges: &[Edge]) -> Chart {
        self.boundary_edges = edges.to_vec();
        self
    }

    pub fn with_sheet(mut self, sheet: usize) -> Chart {
        self.sheet = sheet;
        self
    }

    pub fn with_orientation(mut self, sign: f64) -> Chart {
        self.orientation = sign.signum();
        self
    }

    pub fn placement(&self) -> &Isometry {
        &self.placement
    }

    #[inline]
    pub fn position(&self, u: f64, v: f64) -> Coords {
        let p = self.map.position(u, v);
        self.placement.apply(&Coords::from_slice(&p))
    }

    pub fn jet(&self, u: f64, v: f64) -> JetData {
        let j = self.map.jet(u, v);
        let pick = |g: fn(&Jet2) -> f64| self.placement.apply(&Coords::from_slice(&[g(&j[0]), g(&j[1]), g(&j[2]), g(&j[3])]));
        JetData {
            f: pick(|x| x.v),
            fu: pick(|x| x.du),
            fv: pick(|x| x.dv),
            fuu: pick(|x| x.duu),
            fuv: pick(|x| x.duv),
            fvv: pick(|x| x.dvv),
        }
    }
}
