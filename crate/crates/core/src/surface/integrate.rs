//! Adaptive tensor-product Gauss–Legendre quadrature over surface regions.
//!
//! Base cells are classified against the region with a Lipschitz bound
//! (`r` is 1-Lipschitz, so a cell whose image lies within `R` of its centre
//! has `r ∈ [r_c − R, r_c + R]`). Cells entirely inside use the plain rule;
//! cells straddling a cut `r = σ` or `r = ρ` use a clipped rule: the inner
//! one-dimensional integrals run only over the sub-intervals where the
//! region condition holds, with the cut located by root finding. Straddling
//! cells, and cells that may contain the base point when near-base
//! refinement is requested, are quadrisected until the parent and children
//! estimates agree to the cut tolerance or the depth limit is reached.
//! With near-base refinement, base cells are split at the preimages of the
//! base point, and cells with the base point at a corner use a Duffy rule,
//! on which integrands with a direction-dependent limit there are smooth.

use std::f64::consts::PI;

use super::chart::{Chart, Edge};
use super::multiplicity::polish;
use super::sample::{metric, sample_from_jet, GeometrySample};
use super::ImmersedSurface;
use crate::error::{Error, Result};
use crate::quadrature::{ordered_map, pairwise_sum, GaussRule};
use crate::spaceform::{AmbientPoint, Coords, SpaceForm};

/// Radial band of the region, in terms of `r = dist(o, ·)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Band {
    All,
    /// `r < ρ`.
    Ball { rho: f64 },
    /// `σ ≤ r < ρ`; `ρ` may be infinite.
    Annulus { sigma: f64, rho: f64 },
}

impl Band {
    #[inline]
    pub fn contains(&self, r: f64) -> bool {
        match *self {
            Band::All => true,
            Band::Ball { rho } => r < rho,
            Band::Annulus { sigma, rho } => r >= sigma && r < rho,
        }
    }

    fn thresholds(&self) -> ([f64; 2], usize) {
        match *self {
            Band::All => ([0.0; 2], 0),
            Band::Ball { rho } => ([rho, 0.0], 1),
            Band::Annulus { sigma, rho } if rho.is_finite() => ([sigma, rho], 2),
            Band::Annulus { sigma, .. } => ([sigma, 0.0], 1),
        }
    }

    /// Classifies the interval `[lo, hi]` of possible `r` values.
    fn classify(&self, lo: f64, hi: f64) -> (Class, f64) {
        let mut cut = f64::INFINITY;
        let (t, n) = self.thresholds();
        let mut straddles = false;
        for &c in &t[..n] {
            if lo < c && hi >= c {
                straddles = true;
                cut = cut.min(c);
            }
        }
        if straddles {
            return (Class::Straddle, cut);
        }
        // No threshold inside [lo, hi]: the whole interval is on one side.
        let class = if self.contains(0.5 * (lo + hi)) { Class::Inside } else { Class::Outside };
        (class, cut)
    }
}

/// Integration region: a radial band around an optional base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub base: Option<Coords>,
    pub band: Band,
    /// Adaptively refine cells that may contain the base point (for
    /// integrands that are bounded but not smooth there).
    pub refine_near_base: bool,
}

impl Region {
    pub fn all() -> Region {
        Region { base: None, band: Band::All, refine_near_base: false }
    }

    /// All of `Σ`, with radial quantities relative to `o` and refinement around it.
    pub fn around(o: &AmbientPoint) -> Region {
        Region { base: Some(*o.coords()), band: Band::All, refine_near_base: true }
    }

    pub fn ball(o: &AmbientPoint, rho: f64) -> Region {
        Region { base: Some(*o.coords()), band: Band::Ball { rho }, refine_near_base: false }
    }

    pub fn annulus(o: &AmbientPoint, sigma: f64, rho: f64) -> Region {
        Region { base: Some(*o.coords()), band: Band::Annulus { sigma, rho }, refine_near_base: false }
    }

    pub fn refined(mut self, on: bool) -> Region {
        self.refine_near_base = on;
        self
    }

    fn validate(&self, form: &SpaceForm) -> Result<()> {
        let sphere = form.is_spherical();
        match self.band {
            Band::All => {}
            Band::Ball { rho } => {
                if !(rho > 0.0) {
                    return Err(Error::Domain(format!("ball radius must be positive, got {rho}")));
                }
                if sphere && rho >= PI {
                    return Err(Error::Domain(format!("ρ = {rho} ≥ π on the sphere")));
                }
            }
            Band::Annulus { sigma, rho } => {
                if !(sigma >= 0.0 && sigma < rho) {
                    return Err(Error::Domain(format!("annulus needs 0 ≤ σ < ρ, got σ = {sigma}, ρ = {rho}")));
                }
                if sphere && rho >= PI {
                    return Err(Error::Domain(format!("ρ = {rho} ≥ π on the sphere")));
                }
            }
        }
        if self.base.is_none() && (self.band != Band::All || self.refine_near_base) {
            return Err(Error::InvalidParameter("region needs a base point".into()));
        }
        Ok(())
    }
}

/// Result of a vector of integrals over one region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<const N: usize> {
    pub values: [f64; N],
    /// Sum of the parent/children discrepancies of accepted refined cells.
    pub error_bound: [f64; N],
    /// Some refined cell hit the depth limit without meeting the tolerance.
    pub budget_exceeded: bool,
    /// Number of leaf cells or segments used.
    pub cells: usize,
}

impl Integral<1> {
    pub fn value(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Class {
    Inside,
    Outside,
    Straddle,
}

#[derive(Clone, Copy, Debug)]
struct Info {
    class: Class,
    near_base: bool,
    radius: f64,
    cut: f64,
}

impl Info {
    fn adaptive(&self) -> bool {
        self.class == Class::Straddle || (self.near_base && self.class != Class::Outside)
    }

    fn forced(&self) -> bool {
        self.class == Class::Straddle && self.radius > self.cut
    }
}

#[derive(Clone, Copy)]
struct Acc<const N: usize> {
    values: [f64; N],
    err: [f64; N],
    exceeded: bool,
    cells: usize,
}

impl<const N: usize> Acc<N> {
    fn leaf(values: [f64; N]) -> Self {
        Acc { values, err: [0.0; N], exceeded: false, cells: 1 }
    }
}

fn combine<const N: usize>(parts: &[Acc<N>]) -> Acc<N> {
    let vals: Vec<[f64; N]> = parts.iter().map(|a| a.values).collect();
    let errs: Vec<[f64; N]> = parts.iter().map(|a| a.err).collect();
    Acc {
        values: pairwise_sum(&vals),
        err: pairwise_sum(&errs),
        exceeded: parts.iter().any(|a| a.exceeded),
        cells: parts.iter().map(|a| a.cells).sum(),
    }
}

#[inline]
fn add_into<const N: usize>(acc: &mut [f64; N], abs: &mut [f64; N], vals: &[f64; N], w: f64) {
    for i in 0..N {
        acc[i] += w * vals[i];
        abs[i] += (w * vals[i]).abs();
    }
}

/// Illinois false-position root of `h` on a sign-changing bracket.
fn bracket_root(mut a: f64, mut b: f64, mut ha: f64, mut hb: f64, mut h: impl FnMut(f64) -> f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..100 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let c = (a * hb - b * ha) / (hb - ha);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let hc = h(c);
        if hc == 0.0 {
            return c;
        }
        if (hc < 0.0) == (ha < 0.0) {
            a = c;
            ha = hc;
            if side == -1 {
                hb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            hb = hc;
            if side == 1 {
                ha *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

const CLIP_SAMPLES: usize = 8;

/// Golden-section search for an interior extremum of `g` on `[a, b]`;
/// `sign = 1` finds a minimum, `-1` a maximum.
fn extremum(mut a: f64, mut b: f64, sign: f64, g: &impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (sign * g(c)?, sign * g(d)?);
    for _ in 0..60 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = sign * g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = sign * g(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, g(t)?))
}

/// Sub-intervals of `[a, b]` on which `band.contains(g(t))`.
///
/// `g` is sampled on a uniform grid; interior extrema seen on the grid are
/// located precisely so that a threshold crossed only between two samples
/// is not missed, then every sign change of `g − c` is bracketed and solved.
fn clip_intervals(a: f64, b: f64, band: &Band, g: impl Fn(f64) -> Result<f64>) -> Result<Vec<(f64, f64)>> {
    let (thr, nthr) = band.thresholds();
    if nthr == 0 {
        return Ok(vec![(a, b)]);
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(CLIP_SAMPLES + 4);
    for i in 0..=CLIP_SAMPLES {
        let t = a + (b - a) * i as f64 / CLIP_SAMPLES as f64;
        pts.push((t, g(t)?));
    }
    let mut extra = Vec::new();
    for i in 1..CLIP_SAMPLES {
        let (l, m, r) = (pts[i - 1].1, pts[i].1, pts[i + 1].1);
        let sign = if m <= l && m <= r {
            1.0
        } else if m >= l && m >= r {
            -1.0
        } else {
            continue;
        };
        extra.push(extremum(pts[i - 1].0, pts[i + 1].0, sign, &g)?);
    }
    if !extra.is_empty() {
        pts.extend(extra);
        pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
    let mut breaks = vec![a];
    let mut failure = None;
    for w in pts.windows(2) {
        let ((t0, g0), (t1, g1)) = (w[0], w[1]);
        for &c in &thr[..nthr] {
            let (h0, h1) = (g0 - c, g1 - c);
            if (h0 < 0.0) != (h1 < 0.0) {
                let root = bracket_root(t0, t1, h0, h1, |t| match g(t) {
                    Ok(x) => x - c,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                });
                breaks.push(root);
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    breaks.push(b);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q > p && band.contains(g(0.5 * (p + q))?) {
            out.push((p, q));
        }
    }
    Ok(out)
}

/// Polynomial substitution `x(s)` on `[a, b]` that vanishes to first order
/// in `s` at the graded ends.
#[derive(Clone, Copy)]
struct Grading {
    a: f64,
    len: f64,
    lo: bool,
    hi: bool,
}

impl Grading {
    fn new(a: f64, b: f64, lo: bool, hi: bool) -> Grading {
        Grading { a, len: b - a, lo, hi }
    }

    /// `(x, dx/ds)` for `s ∈ [0, 1]`.
    fn map(&self, s: f64) -> (f64, f64) {
        let (a, l) = (self.a, self.len);
        match (self.lo, self.hi) {
            (true, true) => (a + l * s * s * (3.0 - 2.0 * s), 6.0 * l * s * (1.0 - s)),
            (true, false) => (a + l * s * s, 2.0 * l * s),
            (false, true) => (a + l * (1.0 - (1.0 - s) * (1.0 - s)), 2.0 * l * (1.0 - s)),
            (false, false) => (a + l * s, l),
        }
    }
}

const OUTER_MAX_DEPTH: u32 = 12;

const DUFFY_MAX_PANELS: usize = 64;

/// Integrands with a direction-dependent limit at the base point vary on the
/// scale of the distance to it, so cells within this many of their own radii
/// of it are checked by refinement.
const NEAR_BASE_RADII: f64 = 4.0;

/// Distance below which a parameter point is taken to be the base point.
const BASE_CORNER_TOL: f64 = 1e-12;

/// Bisection of `[s0, s1]` until the halves agree with the whole to `tol`
/// relative to the absolute contributions, or to `floor` per unit of `s`.
#[allow(clippy::type_complexity)]
fn adaptive_1d<const N: usize>(
    panel: &impl Fn(f64, f64) -> Result<([f64; N], [f64; N])>,
    s0: f64,
    s1: f64,
    whole: ([f64; N], [f64; N]),
    tol: f64,
    floor: &[f64; N],
    depth: u32,
) -> Result<([f64; N], [f64; N])> {
    let m = 0.5 * (s0 + s1);
    let (l, r) = (panel(s0, m)?, panel(m, s1)?);
    let mut v = [0.0; N];
    let mut a = [0.0; N];
    let mut ok = true;
    for i in 0..N {
        v[i] = l.0[i] + r.0[i];
        a[i] = l.1[i] + r.1[i];
        if (v[i] - whole.0[i]).abs() > tol * a[i].max(floor[i] * (s1 - s0)) {
            ok = false;
        }
    }
    if ok || depth + 1 >= OUTER_MAX_DEPTH {
        return Ok((v, a));
    }
    let (lv, la) = adaptive_1d(panel, s0, m, l, tol, floor, depth + 1)?;
    let (rv, ra) = adaptive_1d(panel, m, s1, r, tol, floor, depth + 1)?;
    for i in 0..N {
        v[i] = lv[i] + rv[i];
        a[i] = la[i] + ra[i];
    }
    Ok((v, a))
}

/// Integrands are taken to be of unit order per unit area (curvature
/// units), so a term whose total magnitude is far below the measure of the
/// domain (an integrand that vanishes up to rounding) is resolved to an
/// absolute rather than a relative tolerance.
const ABSOLUTE_FLOOR: f64 = 1e-6;

fn floored<const N: usize>(mut scale: [f64; N], measure: f64) -> [f64; N] {
    for s in scale.iter_mut() {
        *s = s.max(ABSOLUTE_FLOOR * measure);
    }
    scale
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    chart: usize,
    u0: f64,
    u1: f64,
    v0: f64,
    v1: f64,
}

impl Cell {
    fn split(&self) -> [Cell; 4] {
        let um = 0.5 * (self.u0 + self.u1);
        let vm = 0.5 * (self.v0 + self.v1);
        let c = |u0, u1, v0, v1| Cell { chart: self.chart, u0, u1, v0, v1 };
        [c(self.u0, um, self.v0, vm), c(um, self.u1, self.v0, vm), c(self.u0, um, vm, self.v1), c(um, self.u1, vm, self.v1)]
    }

    fn param_area(&self) -> f64 {
        (self.u1 - self.u0) * (self.v1 - self.v0)
    }
}

struct Engine<'a, F> {
    surface: &'a ImmersedSurface,
    region: Region,
    f: &'a F,
    rule: &'static GaussRule,
    tol: f64,
    max_depth: u32,
}

impl<'a, F> Engine<'a, F> {
    fn form(&self) -> &SpaceForm {
        &self.surface.form
    }

    fn chart(&self, i: usize) -> &Chart {
        &self.surface.charts[i]
    }

    fn r_at(&self, chart: &Chart, u: f64, v: f64) -> Result<f64> {
        let base = self.region.base.as_ref().expect("validated region has a base");
        self.form().distance_raw(base, &chart.position(u, v))
    }

    /// Lipschitz classification from `r` at the centre and the spread of
    /// the image measured at boundary sample points.
    fn classify_points(&self, center: f64, spread: f64) -> Info {
        let radius = 1.25 * spread + 1e-12;
        let (lo, hi) = (center - radius, center + radius);
        let (class, cut) = self.region.band.classify(lo, hi);
        Info { class, near_base: self.region.refine_near_base && lo <= NEAR_BASE_RADII * radius, radius, cut }
    }
}

impl<'a, const N: usize, F> Engine<'a, F>
where
    F: Fn(&GeometrySample) -> [f64; N] + Sync,
{
    fn classify(&self, cell: &Cell) -> Result<Info> {
        if self.region.base.is_none() {
            return Ok(Info { class: Class::Inside, near_base: false, radius: 0.0, cut: f64::INFINITY });
        }
        let chart = self.chart(cell.chart);
        let form = self.form();
        let (uc, vc) = (0.5 * (cell.u0 + cell.u1), 0.5 * (cell.v0 + cell.v1));
        let pc = chart.position(uc, vc);
        let base = self.region.base.as_ref().unwrap();
        let rc = form.distance_raw(base, &pc)?;
        let mut spread: f64 = 0.0;
        for (u, v) in [
            (cell.u0, cell.v0),
            (uc, cell.v0),
            (cell.u1, cell.v0),
            (cell.u1, vc),
            (cell.u1, cell.v1),
            (uc, cell.v1),
            (cell.u0, cell.v1),
            (cell.u0, vc),
        ] {
            spread = spread.max(form.distance_raw(&pc, &chart.position(u, v))?);
        }
        Ok(self.classify_points(rc, spread))
    }

    #[inline]
    fn node(&self, chart: &Chart, u: f64, v: f64, w: f64, acc: &mut [f64; N], abs: &mut [f64; N]) -> Result<()> {
        let s = sample_from_jet(self.form(), &chart.jet(u, v), self.region.base.as_ref())?;
        let vals = (self.f)(&s);
        add_into(acc, abs, &vals, w * s.area_element);
        Ok(())
    }

    fn area(&self, cell: &Cell) -> Result<[f64; 1]> {
        let chart = self.chart(cell.chart);
        let mut a = 0.0;
        for (u, wu) in self.rule.mapped(cell.u0, cell.u1) {
            for (v, wv) in self.rule.mapped(cell.v0, cell.v1) {
                a += wu * wv * metric(self.form(), &chart.jet(u, v))?.det.sqrt();
            }
        }
        Ok([a])
    }

    fn plain(&self, cell: &Cell) -> Result<([f64; N], [f64; N])> {
        let chart = self.chart(cell.chart);
        let (mut acc, mut abs) = ([0.0; N], [0.0; N]);
        for (u, wu) in self.rule.mapped(cell.u0, cell.u1) {
            for (v, wv) in self.rule.mapped(cell.v0, cell.v1) {
                self.node(chart, u, v, wu * wv, &mut acc, &mut abs)?;
            }
        }
        Ok((acc, abs))
    }

    /// The corner of `cell` that maps to the base point, if any.
    fn base_corner(&self, cell: &Cell) -> Result<Option<(f64, f64)>> {
        let chart = self.chart(cell.chart);
        for (u, v) in [(cell.u0, cell.v0), (cell.u1, cell.v0), (cell.u0, cell.v1), (cell.u1, cell.v1)] {
            if self.r_at(chart, u, v)? <= BASE_CORNER_TOL {
                return Ok(Some((u, v)));
            }
        }
        Ok(None)
    }

    /// Two triangles with their apex at `corner`, each collapsed from the
    /// unit square by `(s, t) ↦ (s, st)`, with `m × m` panels in `(s, t)`.
    fn duffy(&self, cell: &Cell, corner: (f64, f64), m: usize) -> Result<([f64; N], [f64; N])> {
        let chart = self.chart(cell.chart);
        let (cu, cv) = corner;
        let eu = if cu == cell.u0 { cell.u1 - cell.u0 } else { cell.u0 - cell.u1 };
        let ev = if cv == cell.v0 { cell.v1 - cell.v0 } else { cell.v0 - cell.v1 };
        let jac = (eu * ev).abs();
        let h = 1.0 / m as f64;
        let (mut acc, mut abs) = ([0.0; N], [0.0; N]);
        for i in 0..m {
            for (s, ws) in self.rule.mapped(i as f64 * h, (i + 1) as f64 * h) {
                for j in 0..m {
                    for (t, wt) in self.rule.mapped(j as f64 * h, (j + 1) as f64 * h) {
                        let w = ws * wt * s * jac;
                        self.node(chart, cu + eu * s, cv + ev * s * t, w, &mut acc, &mut abs)?;
                        self.node(chart, cu + eu * s * t, cv + ev * s, w, &mut acc, &mut abs)?;
                    }
                }
            }
        }
        Ok((acc, abs))
    }

    /// A cell with the base point at a corner is never quadrisected: its
    /// neighbours of the base point would each carry the same relative
    /// error at every scale. The Duffy panels are doubled instead.
    fn duffy_converged(&self, cell: &Cell, corner: (f64, f64), floor: &[f64; N]) -> Result<Acc<N>> {
        let (mut prev, _) = self.duffy(cell, corner, 1)?;
        let mut m = 2;
        loop {
            let (vals, abs) = self.duffy(cell, corner, m)?;
            let mut err = [0.0; N];
            let mut ok = true;
            for i in 0..N {
                err[i] = (vals[i] - prev[i]).abs();
                if err[i] > self.tol * abs[i].max(floor[i]) {
                    ok = false;
                }
            }
            if ok || m >= DUFFY_MAX_PANELS {
                return Ok(Acc { values: vals, err, exceeded: !ok, cells: 1 });
            }
            prev = vals;
            m *= 2;
        }
    }

    /// `Some(corner)` for inside cells that need the Duffy treatment.
    fn duffy_corner(&self, cell: &Cell, info: &Info) -> Result<Option<(f64, f64)>> {
        if info.class == Class::Inside && info.near_base {
            self.base_corner(cell)
        } else {
            Ok(None)
        }
    }

    /// Splits a base cell at any preimage of the base point inside it.
    fn split_at_base(&self, cell: Cell, out: &mut Vec<Cell>) -> Result<()> {
        let info = self.classify(&cell)?;
        if !info.near_base {
            out.push(cell);
            return Ok(());
        }
        let chart = self.chart(cell.chart);
        let base = self.region.base.as_ref().unwrap();
        let (u, v, miss) = polish(chart, base, 0.5 * (cell.u0 + cell.u1), 0.5 * (cell.v0 + cell.v1));
        let inside = u >= cell.u0 && u <= cell.u1 && v >= cell.v0 && v <= cell.v1;
        if !(inside && miss <= BASE_CORNER_TOL) {
            out.push(cell);
            return Ok(());
        }
        // A preimage within rounding of a side splits nothing along that axis.
        let cuts = |a: f64, m: f64, b: f64| {
            let eps = 1e-9 * (b - a);
            if m > a + eps && m < b - eps {
                vec![a, m, b]
            } else {
                vec![a, b]
            }
        };
        let (us, vs) = (cuts(cell.u0, u, cell.u1), cuts(cell.v0, v, cell.v1));
        for i in 0..us.len() - 1 {
            for j in 0..vs.len() - 1 {
                out.push(Cell { chart: cell.chart, u0: us[i], u1: us[i + 1], v0: vs[j], v1: vs[j + 1] });
            }
        }
        Ok(())
    }

    fn clipped(&self, cell: &Cell, floor: Option<&[f64; N]>) -> Result<([f64; N], [f64; N])> {
        let chart = self.chart(cell.chart);
        let (du, dv) = (cell.u1 - cell.u0, cell.v1 - cell.v0);
        let (uc, vc) = (0.5 * (cell.u0 + cell.u1), 0.5 * (cell.v0 + cell.v1));
        // Integrate innermost along the axis in which r varies most, so the
        // cut is as transversal as possible to the inner lines.
        let gu = (self.r_at(chart, cell.u0 + 0.75 * du, vc)? - self.r_at(chart, cell.u0 + 0.25 * du, vc)?).abs();
        let gv = (self.r_at(chart, uc, cell.v0 + 0.75 * dv)? - self.r_at(chart, uc, cell.v0 + 0.25 * dv)?).abs();
        let inner_v = gv >= gu;
        let band = self.region.band;
        let (outer, inner) = if inner_v { ((cell.u0, cell.u1), (cell.v0, cell.v1)) } else { ((cell.v0, cell.v1), (cell.u0, cell.u1)) };
        let uv = |x: f64, t: f64| if inner_v { (x, t) } else { (t, x) };
        let line = |x: f64| {
            clip_intervals(inner.0, inner.1, &band, |t| {
                let (u, v) = uv(x, t);
                self.r_at(chart, u, v)
            })
        };
        let shape = |p: &[(f64, f64)]| (p.len(), p.first().is_some_and(|q| q.0 == inner.0), p.last().is_some_and(|q| q.1 == inner.1));

        // The clipped area is smooth in the outer coordinate except where the
        // cut topology along inner lines changes (the cut meets a cell side,
        // or turns parallel to the inner lines). Locate those positions from
        // the cell sides and the Gauss lines, and integrate piecewise.
        let mut xs = vec![outer.0];
        xs.extend(self.rule.mapped(outer.0, outer.1).map(|(x, _)| x));
        xs.push(outer.1);
        let mut shapes = Vec::with_capacity(xs.len());
        for &x in &xs {
            shapes.push(shape(&line(x)?));
        }
        let mut breaks = vec![outer.0];
        for k in 0..xs.len() - 1 {
            if shapes[k] == shapes[k + 1] {
                continue;
            }
            let (mut a, mut b) = (xs[k], xs[k + 1]);
            let sa = shapes[k];
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                if shape(&line(m)?) == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            breaks.push(0.5 * (a + b));
        }
        breaks.push(outer.1);

        // Where the cut turns tangent to the inner lines the clipped length
        // has a square-root endpoint at the break; pieces are graded towards
        // such breaks. With a floor the outer integral is refined by
        // bisection, since a parent and its child can share an identical piece.
        let length = |x: f64| -> Result<f64> { Ok(line(x)?.iter().map(|(p, q)| q - p).sum()) };
        let root_like = |b: f64, dir: f64, d: f64| -> Result<bool> {
            let l = [length(b + dir * d)?, length(b + dir * d / 4.0)?, length(b + dir * d / 16.0)?];
            let ratio = (l[0] - l[1]) / (l[1] - l[2]);
            Ok(ratio.is_finite() && ratio.abs() < 3.0)
        };
        let line_sum = |x: f64, w: f64, acc: &mut [f64; N], abs: &mut [f64; N]| -> Result<()> {
            for (p, q) in line(x)? {
                for (t, wt) in self.rule.mapped(p, q) {
                    let (u, v) = uv(x, t);
                    self.node(chart, u, v, w * wt, acc, abs)?;
                }
            }
            Ok(())
        };
        let (mut acc, mut abs) = ([0.0; N], [0.0; N]);
        let last = breaks.len() - 2;
        let outer_len = outer.1 - outer.0;
        for (k, w) in breaks.windows(2).enumerate() {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let lo = k > 0 && root_like(w[0], 1.0, 0.05 * len)?;
            let hi = k < last && root_like(w[1], -1.0, 0.05 * len)?;
            let grading = Grading::new(w[0], w[1], lo, hi);
            let panel = |s0: f64, s1: f64| -> Result<([f64; N], [f64; N])> {
                let (mut acc, mut abs) = ([0.0; N], [0.0; N]);
                for (s, ws) in self.rule.mapped(s0, s1) {
                    let (x, dx) = grading.map(s);
                    line_sum(x, ws * dx, &mut acc, &mut abs)?;
                }
                Ok((acc, abs))
            };
            let whole = panel(0.0, 1.0)?;
            let (v, a) = match floor {
                Some(f) => {
                    let share = f.map(|x| x * len / outer_len);
                    adaptive_1d(&panel, 0.0, 1.0, whole, self.tol, &share, 0)?
                }
                None => whole,
            };
            for i in 0..N {
                acc[i] += v[i];
                abs[i] += a[i];
            }
        }
        Ok((acc, abs))
    }

    /// `floor` is the absolute error scale allotted to the cell; without it
    /// the clipped rule is not refined.
    fn estimate(&self, cell: &Cell, info: &Info, floor: Option<&[f64; N]>) -> Result<([f64; N], [f64; N])> {
        match info.class {
            Class::Outside => Ok(([0.0; N], [0.0; N])),
            Class::Inside if info.near_base => match self.base_corner(cell)? {
                Some(corner) => self.duffy(cell, corner, 1),
                None => self.plain(cell),
            },
            Class::Inside => self.plain(cell),
            Class::Straddle => self.clipped(cell, floor),
        }
    }

    fn refine(&self, cell: &Cell, info: &Info, est: [f64; N], depth: u32, scale: &[f64; N], total: f64) -> Result<Acc<N>> {
        let children = cell.split();
        let mut infos = [*info; 4];
        let mut ests = [[0.0; N]; 4];
        let mut abs_sum = [0.0; N];
        let child_floor = scale.map(|x| x * 0.25 * cell.param_area() / total);
        for (k, child) in children.iter().enumerate() {
            infos[k] = self.classify(child)?;
            let (e, a) = self.estimate(child, &infos[k], Some(&child_floor))?;
            ests[k] = e;
            for i in 0..N {
                abs_sum[i] += a[i];
            }
        }
        let sum = pairwise_sum(&ests);
        let mut err = [0.0; N];
        let frac = cell.param_area() / total;
        let mut converged = true;
        for i in 0..N {
            err[i] = (sum[i] - est[i]).abs();
            let allowed = self.tol * abs_sum[i].max(scale[i] * frac);
            if err[i] > allowed {
                converged = false;
            }
        }
        let last = depth + 1 >= self.max_depth;
        if last || (converged && !info.forced()) {
            let ok = converged && !info.forced();
            return Ok(Acc { values: sum, err, exceeded: last && !ok, cells: 4 });
        }
        let mut parts = Vec::with_capacity(4);
        for k in 0..4 {
            if let Some(corner) = self.duffy_corner(&children[k], &infos[k])? {
                parts.push(self.duffy_converged(&children[k], corner, &child_floor)?);
            } else if infos[k].adaptive() {
                parts.push(self.refine(&children[k], &infos[k], ests[k], depth + 1, scale, total)?);
            } else {
                parts.push(Acc::leaf(ests[k]));
            }
        }
        Ok(combine(&parts))
    }

    fn run(&self) -> Result<Integral<N>> {
        let q = self.surface.quadrature;
        let nb = q.base_cells_per_axis;
        let mut cells = Vec::with_capacity(self.surface.charts.len() * nb * nb);
        let mut total = 0.0;
        for (ci, chart) in self.surface.charts.iter().enumerate() {
            let d = chart.domain;
            total += (d.u1 - d.u0) * (d.v1 - d.v0);
            let (hu, hv) = ((d.u1 - d.u0) / nb as f64, (d.v1 - d.v0) / nb as f64);
            for i in 0..nb {
                for j in 0..nb {
                    let u0 = d.u0 + hu * i as f64;
                    let v0 = d.v0 + hv * j as f64;
                    let u1 = if i + 1 == nb { d.u1 } else { u0 + hu };
                    let v1 = if j + 1 == nb { d.v1 } else { v0 + hv };
                    let cell = Cell { chart: ci, u0, u1, v0, v1 };
                    if self.region.refine_near_base && self.region.base.is_some() {
                        self.split_at_base(cell, &mut cells)?;
                    } else {
                        cells.push(cell);
                    }
                }
            }
        }

        let first: Vec<Result<(Info, [f64; N], [f64; N])>> = ordered_map(&cells, |cell| {
            let info = self.classify(cell)?;
            let (e, a) = self.estimate(cell, &info, None)?;
            Ok((info, e, a))
        });
        let first: Vec<(Info, [f64; N], [f64; N])> = first.into_iter().collect::<Result<_>>()?;
        let abs: Vec<[f64; N]> = first.iter().map(|x| x.2).collect();
        let areas: Vec<[f64; 1]> = ordered_map(&cells, |cell| self.area(cell)).into_iter().collect::<Result<_>>()?;
        let scale = floored(pairwise_sum(&abs), pairwise_sum(&areas)[0]);

        let work: Vec<(Cell, Info, [f64; N])> = cells.iter().zip(&first).map(|(c, f)| (*c, f.0, f.1)).collect();
        let second: Vec<Result<Acc<N>>> = ordered_map(&work, |(cell, info, est)| {
            if let Some(corner) = self.duffy_corner(cell, info)? {
                let floor = scale.map(|x| x * cell.param_area() / total);
                self.duffy_converged(cell, corner, &floor)
            } else if info.class == Class::Straddle {
                let floor = scale.map(|x| x * cell.param_area() / total);
                let (est, _) = self.estimate(cell, info, Some(&floor))?;
                if self.max_depth > 0 {
                    return self.refine(cell, info, est, 0, &scale, total);
                }
                Ok(Acc::leaf(est))
            } else if info.adaptive() && self.max_depth > 0 {
                self.refine(cell, info, *est, 0, &scale, total)
            } else {
                Ok(Acc::leaf(*est))
            }
        });
        let parts: Vec<Acc<N>> = second.into_iter().collect::<Result<_>>()?;
        let acc = combine(&parts);
        Ok(Integral { values: acc.values, error_bound: acc.err, budget_exceeded: acc.exceeded, cells: acc.cells })
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    chart: usize,
    edge: Edge,
    t0: f64,
    t1: f64,
}

impl Segment {
    fn uv(&self, chart: &Chart, t: f64) -> (f64, f64) {
        let d = chart.domain;
        match self.edge {
            Edge::UMin => (d.u0, t),
            Edge::UMax => (d.u1, t),
            Edge::VMin => (t, d.v0),
            Edge::VMax => (t, d.v1),
        }
    }
}

struct BoundaryEngine<'a, F> {
    surface: &'a ImmersedSurface,
    region: Region,
    f: &'a F,
    rule: &'static GaussRule,
    tol: f64,
    max_depth: u32,
}

impl<'a, const N: usize, F> BoundaryEngine<'a, F>
where
    F: Fn(&GeometrySample, &Coords) -> [f64; N] + Sync,
{
    fn form(&self) -> &SpaceForm {
        &self.surface.form
    }

    fn r_at(&self, seg: &Segment, t: f64) -> Result<f64> {
        let chart = &self.surface.charts[seg.chart];
        let (u, v) = seg.uv(chart, t);
        self.form().distance_raw(self.region.base.as_ref().unwrap(), &chart.position(u, v))
    }

    fn classify(&self, seg: &Segment) -> Result<Info> {
        if self.region.base.is_none() {
            return Ok(Info { class: Class::Inside, near_base: false, radius: 0.0, cut: f64::INFINITY });
        }
        let chart = &self.surface.charts[seg.chart];
        let tc = 0.5 * (seg.t0 + seg.t1);
        let (uc, vc) = seg.uv(chart, tc);
        let pc = chart.position(uc, vc);
        let rc = self.form().distance_raw(self.region.base.as_ref().unwrap(), &pc)?;
        let mut spread: f64 = 0.0;
        for s in [0.0, 0.25, 0.75, 1.0] {
            let (u, v) = seg.uv(chart, seg.t0 + s * (seg.t1 - seg.t0));
            spread = spread.max(self.form().distance_raw(&pc, &chart.position(u, v))?);
        }
        let radius = 1.25 * spread + 1e-12;
        let (lo, hi) = (rc - radius, rc + radius);
        let (class, cut) = self.region.band.classify(lo, hi);
        Ok(Info { class, near_base: self.region.refine_near_base && lo <= NEAR_BASE_RADII * radius, radius, cut })
    }

    fn node(&self, seg: &Segment, t: f64, w: f64, acc: &mut [f64; N], abs: &mut [f64; N]) -> Result<()> {
        let chart = &self.surface.charts[seg.chart];
        let form = self.form();
        let (u, v) = seg.uv(chart, t);
        let jet = chart.jet(u, v);
        let s = sample_from_jet(form, &jet, self.region.base.as_ref())?;
        let (along, across, sign) = match seg.edge {
            Edge::UMin => (jet.fv, jet.fu, -1.0),
            Edge::UMax => (jet.fv, jet.fu, 1.0),
            Edge::VMin => (jet.fu, jet.fv, -1.0),
            Edge::VMax => (jet.fu, jet.fv, 1.0),
        };
        let line = form.norm(&along);
        let t_hat = along * (1.0 / line);
        let n = across - t_hat * form.dot(&across, &t_hat);
        let eta = n * (sign / form.norm(&n));
        let vals = (self.f)(&s, &eta);
        add_into(acc, abs, &vals, w * line);
        Ok(())
    }

    fn length(&self, seg: &Segment) -> Result<[f64; 1]> {
        let chart = &self.surface.charts[seg.chart];
        let mut len = 0.0;
        for (t, w) in self.rule.mapped(seg.t0, seg.t1) {
            let (u, v) = seg.uv(chart, t);
            let jet = chart.jet(u, v);
            let along = match seg.edge {
                Edge::UMin | Edge::UMax => jet.fv,
                Edge::VMin | Edge::VMax => jet.fu,
            };
            len += w * self.form().norm(&along);
        }
        Ok([len])
    }

    fn estimate(&self, seg: &Segment, info: &Info) -> Result<([f64; N], [f64; N])> {
        let (mut acc, mut abs) = ([0.0; N], [0.0; N]);
        let pieces = match info.class {
            Class::Outside => return Ok((acc, abs)),
            Class::Inside => vec![(seg.t0, seg.t1)],
            Class::Straddle => clip_intervals(seg.t0, seg.t1, &self.region.band, |t| self.r_at(seg, t))?,
        };
        for (p, q) in pieces {
            for (t, w) in self.rule.mapped(p, q) {
                self.node(seg, t, w, &mut acc, &mut abs)?;
            }
        }
        Ok((acc, abs))
    }

    fn refine(&self, seg: &Segment, info: &Info, est: [f64; N], depth: u32, scale: &[f64; N], total: f64) -> Result<Acc<N>> {
        let tm = 0.5 * (seg.t0 + seg.t1);
        let halves = [Segment { t1: tm, ..*seg }, Segment { t0: tm, ..*seg }];
        let mut infos = [*info; 2];
        let mut ests = [[0.0; N]; 2];
        let mut abs_sum = [0.0; N];
        for k in 0..2 {
            infos[k] = self.classify(&halves[k])?;
            let (e, a) = self.estimate(&halves[k], &infos[k])?;
            ests[k] = e;
            for i in 0..N {
                abs_sum[i] += a[i];
            }
        }
        let sum = pairwise_sum(&ests);
        let frac = (seg.t1 - seg.t0).abs() / total;
        let mut err = [0.0; N];
        let mut converged = true;
        for i in 0..N {
            err[i] = (sum[i] - est[i]).abs();
            if err[i] > self.tol * abs_sum[i].max(scale[i] * frac) {
                converged = false;
            }
        }
        // One-dimensional refinement is cheap; allow twice the depth.
        let last = depth + 1 >= 2 * self.max_depth;
        if last || (converged && !info.forced()) {
            let ok = converged && !info.forced();
            return Ok(Acc { values: sum, err, exceeded: last && !ok, cells: 2 });
        }
        let mut parts = Vec::with_capacity(2);
        for k in 0..2 {
            if infos[k].adaptive() {
                parts.push(self.refine(&halves[k], &infos[k], ests[k], depth + 1, scale, total)?);
            } else {
                parts.push(Acc::leaf(ests[k]));
            }
        }
        Ok(combine(&parts))
    }

    fn run(&self) -> Result<Integral<N>> {
        let nb = self.surface.quadrature.base_cells_per_axis;
        let mut segs = Vec::new();
        let mut total = 0.0;
        for (ci, chart) in self.surface.charts.iter().enumerate() {
            let d = chart.domain;
            for &edge in &chart.boundary_edges {
                let (a, b) = match edge {
                    Edge::UMin | Edge::UMax => (d.v0, d.v1),
                    Edge::VMin | Edge::VMax => (d.u0, d.u1),
                };
                total += b - a;
                let h = (b - a) / nb as f64;
                for i in 0..nb {
                    let t0 = a + h * i as f64;
                    let t1 = if i + 1 == nb { b } else { t0 + h };
                    segs.push(Segment { chart: ci, edge, t0, t1 });
                }
            }
        }
        let first: Vec<Result<(Info, [f64; N], [f64; N])>> = ordered_map(&segs, |seg| {
            let info = self.classify(seg)?;
            let (e, a) = self.estimate(seg, &info)?;
            Ok((info, e, a))
        });
        let first: Vec<(Info, [f64; N], [f64; N])> = first.into_iter().collect::<Result<_>>()?;
        let abs: Vec<[f64; N]> = first.iter().map(|x| x.2).collect();
        let lengths: Vec<[f64; 1]> = ordered_map(&segs, |seg| self.length(seg)).into_iter().collect::<Result<_>>()?;
        let scale = floored(pairwise_sum(&abs), pairwise_sum(&lengths)[0]);
        let work: Vec<(Segment, Info, [f64; N])> = segs.iter().zip(&first).map(|(s, f)| (*s, f.0, f.1)).collect();
        let second: Vec<Result<Acc<N>>> = ordered_map(&work, |(seg, info, est)| {
            if info.adaptive() && self.max_depth > 0 {
                self.refine(seg, info, *est, 0, &scale, total)
            } else {
                Ok(Acc::leaf(*est))
            }
        });
        let parts: Vec<Acc<N>> = second.into_iter().collect::<Result<_>>()?;
        let acc = combine(&parts);
        Ok(Integral { values: acc.values, error_bound: acc.err, budget_exceeded: acc.exceeded, cells: acc.cells })
    }
}

impl ImmersedSurface {
    /// Integrates several quantities at once over `region`, sharing nodes.
    pub fn integrate_terms<const N: usize, F>(&self, region: &Region, integrand: F) -> Result<Integral<N>>
    where
        F: Fn(&GeometrySample) -> [f64; N] + Sync,
    {
        region.validate(&self.form)?;
        let q = self.quadrature;
        Engine {
            surface: self,
            region: *region,
            f: &integrand,
            rule: GaussRule::get(q.gauss_points_per_cell_axis),
            tol: q.cut_tolerance,
            max_depth: q.max_refine_depth,
        }
        .run()
    }

    pub fn integrate<F>(&self, region: &Region, integrand: F) -> Result<Integral<1>>
    where
        F: Fn(&GeometrySample) -> f64 + Sync,
    {
        self.integrate_terms(region, |s| [integrand(s)])
    }

    /// Integrates over the boundary curves. The integrand receives the sample
    /// and the outward unit conormal `η`. Nodes outside `region` are skipped.
    pub fn boundary_integral_terms<const N: usize, F>(&self, region: &Region, integrand: F) -> Result<Integral<N>>
    where
        F: Fn(&GeometrySample, &Coords) -> [f64; N] + Sync,
    {
        if self.closed {
            return Err(Error::EmptyBoundary);
        }
        region.validate(&self.form)?;
        let q = self.quadrature;
        BoundaryEngine {
            surface: self,
            region: *region,
            f: &integrand,
            rule: GaussRule::get(q.gauss_points_per_cell_axis),
            tol: q.cut_tolerance,
            max_depth: q.max_refine_depth,
        }
        .run()
    }

    pub fn boundary_integral<F>(&self, region: &Region, integrand: F) -> Result<Integral<1>>
    where
        F: Fn(&GeometrySample, &Coords) -> f64 + Sync,
    {
        self.boundary_integral_terms(region, |s, eta| [integrand(s, eta)])
    }

    /// Total area `|Σ|`.
    pub fn area(&self) -> Result<f64> {
        Ok(self.integrate(&Region::all(), |_| 1.0)?.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_finds_interval_of_a_parabola() {
        // g(t) = t², band r < 0.25 on [-1, 1] → (-0.5, 0.5).
        let band = Band::Ball { rho: 0.25 };
        let iv = clip_intervals(-1.0, 1.0, &band, |t| Ok(t * t)).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.5).abs() < 1e-14 && (iv[0].1 - 0.5).abs() < 1e-14);
        let ann = Band::Annulus { sigma: 0.04, rho: 0.25 };
        let iv = clip_intervals(-1.0, 1.0, &ann, |t| Ok(t * t)).unwrap();
        assert_eq!(iv.len(), 2);
        assert!((iv[0].1 + 0.2).abs() < 1e-14 && (iv[1].0 - 0.2).abs() < 1e-14);
    }

    #[test]
    fn band_classification() {
        let b = Band::Annulus { sigma: 0.1, rho: 1.0 };
        assert_eq!(b.classify(0.2, 0.9).0, Class::Inside);
        assert_eq!(b.classify(1.0, 2.0).0, Class::Outside);
        assert_eq!(b.classify(0.0, 0.05).0, Class::Outside);
        let (c, cut) = b.classify(0.05, 1.5);
        assert_eq!(c, Class::Straddle);
        assert_eq!(cut, 0.1);
        assert_eq!(Band::All.classify(0.0, 10.0).0, Class::Inside);
    }
}

