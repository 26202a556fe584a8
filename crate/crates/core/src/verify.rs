//! The corpus × functional verification matrix.
//!
//! Every item is a named check `surface:check` (or `surface:check#i` for
//! random draws) that yields one number compared against a pinned
//! threshold. Items are planned first and only the selected ones run.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{
    boundary_mono, chen_inequality, crude_balance, density_ratio, embeddedness_criterion, equality_case_residual,
    finer_inequality, first_variation, max_distance, mono_identity, observed_order, pointwise_square_decomposition,
    refinement_history, sphere_crude_balance, sphere_finer_inequality, square_decomposition_scale,
    MonotonicityInputs, NodeSampling,
};
use crate::library::{corpus, CorpusItem, Family};
use crate::report::BalanceReport;
use crate::spaceform::AmbientPoint;
use crate::surface::{ImmersedSurface, QuadratureSpec};

/// Relative tolerance for identity residuals.
pub const IDENTITY_TOL: f64 = 1e-5;
/// Relative slack for inequality margins.
pub const MARGIN_TOL: f64 = 1e-5;
/// Closed-form reference values and sphere equality.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const DENSITY_TOL: f64 = 0.02;
/// Agreement of the two density estimates at `σ = 1e-2`.
pub const DENSITY_AGREEMENT_TOL: f64 = 0.01;
pub const SPHERE_EQUALITY_CASE_TOL: f64 = 1e-8;
/// Smallest equality-case residual accepted as a violation on the torus.
pub const TORUS_EQUALITY_CASE_FLOOR: f64 = 0.01;
pub const DIVERGENCE_TOL: f64 = 1e-6;
pub const SQUARE_DECOMPOSITION_TOL: f64 = 1e-12;
pub const WEIGHT_IDENTITY_TOL: f64 = 1e-13;
/// Minimum observed order of the identity residuals under refinement.
pub const MIN_ORDER: f64 = 4.0;
/// Below this relative residual the order is not measurable and the check
/// passes as converged.
pub const ORDER_FLOOR: f64 = 1e-12;
/// One refinement step from the default base resolution.
pub const ORDER_CELLS: [usize; 2] = [8, 16];
/// Adaptive tolerance used for the refinement-order step.
pub const ORDER_CUT_TOLERANCE: f64 = 1e-13;

pub const DRAWS: usize = 3;
pub const DIVERGENCE_NODES: usize = 1_000;
pub const DENSITY_SIGMAS: [f64; 3] = [0.04, 0.02, 0.01];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub quadrature: QuadratureSpec,
    /// Multiplies every tolerance; below 1 tightens.
    pub tolerance_scale: f64,
    /// Full item name, surface name or check name; `None` runs everything.
    pub filter: Option<String>,
    pub seed: u64,
    /// Nodes for the pointwise checks.
    pub nodes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { quadrature: QuadratureSpec::default(), tolerance_scale: 1.0, filter: None, seed: 1, nodes: 10_000 }
    }
}

/// How `value` is compared with `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyItem {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl VerifyItem {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

struct Outcome {
    value: f64,
    bound: Bound,
    threshold: f64,
    /// Extra conditions that must hold besides the threshold.
    extra: bool,
    detail: String,
}

impl Outcome {
    fn at_most(value: f64, threshold: f64) -> Outcome {
        Outcome { value, bound: Bound::AtMost, threshold, extra: true, detail: String::new() }
    }

    fn at_least(value: f64, threshold: f64) -> Outcome {
        Outcome { value, bound: Bound::AtLeast, threshold, extra: true, detail: String::new() }
    }

    fn with(mut self, extra: bool, detail: String) -> Outcome {
        self.extra &= extra;
        self.detail = detail;
        self
    }
}

/// Surface, base point and per-item seeds shared by the checks of one corpus member.
struct Ctx<'a> {
    item: &'a CorpusItem,
    surface: ImmersedSurface,
    o: AmbientPoint,
    dmax: f64,
    seed: u64,
    nodes: usize,
    /// Tolerance multiplier.
    m: f64,
}

type CheckFn = fn(&Ctx, usize) -> Result<Outcome>;

struct Plan {
    name: String,
    surface: usize,
    check: &'static str,
    draw: usize,
    run: CheckFn,
}

fn is_sphere(item: &CorpusItem) -> bool {
    matches!(item.spec.family, Family::GeodesicSphere { .. })
}

fn is_pair(item: &CorpusItem) -> bool {
    matches!(item.spec.family, Family::TangentSpherePair { .. })
}

fn is_torus(item: &CorpusItem) -> bool {
    matches!(item.spec.family, Family::TorusOfRevolution { .. })
}

fn checks_for(item: &CorpusItem) -> Vec<(&'static str, usize, CheckFn)> {
    let hyp = item.spec.form.is_hyperbolic();
    let closed = !matches!(item.spec.family, Family::GeodesicCap { .. });
    let mut out: Vec<(&'static str, usize, CheckFn)> = Vec::new();
    let r = item.spec.reference_values();
    if r.area.is_some() && r.willmore_quarter.is_some() {
        out.push(("reference", 0, check_reference));
    }
    if is_sphere(item) {
        out.push(("sphere_equality", 0, check_sphere_equality));
    }
    for i in 1..=DRAWS {
        out.push(("crude_balance", i, check_crude));
    }
    out.push(("crude_balance_order", 0, check_crude_order));
    if !hyp {
        for i in 1..=DRAWS {
            out.push(("sphere_crude_balance", i, check_sphere_crude));
        }
        out.push(("sphere_crude_balance_order", 0, check_sphere_crude_order));
    }
    out.push(("density_ratio", 0, check_density));
    out.push(("divergence", 0, check_divergence));
    out.push(("first_variation", 0, check_first_variation));
    if closed {
        out.push(("chen_inequality", 0, check_chen));
        if hyp {
            out.push(("mono_identity", 0, check_mono));
            out.push(("embeddedness", 0, check_embeddedness));
            for i in 1..=2 {
                out.push(("finer_inequality", i, check_finer));
            }
            if is_sphere(item) || is_torus(item) {
                out.push(("equality_case", 0, check_equality_case));
            }
        } else {
            for i in 1..=2 {
                out.push(("sphere_finer_inequality", i, check_sphere_finer));
            }
        }
    } else if hyp {
        out.push(("boundary_mono", 1, check_boundary_mono));
        out.push(("boundary_mono", 2, check_boundary_mono));
    }
    out.push(("square_decomposition", 0, check_square_decomposition));
    out.push(("weight_identity", 0, check_weight_identity));
    out
}

fn plan() -> Vec<Plan> {
    let mut out = Vec::new();
    for (si, item) in corpus().iter().enumerate() {
        for (check, draw, run) in checks_for(item) {
            let name = if draw == 0 { format!("{}:{check}", item.name) } else { format!("{}:{check}#{draw}", item.name) };
            out.push(Plan { name, surface: si, check, draw, run });
        }
    }
    out
}

/// Names of every item in the matrix, in run order.
pub fn item_names() -> Vec<String> {
    plan().into_iter().map(|p| p.name).collect()
}

fn selected(p: &Plan, filter: &str) -> bool {
    let surface = p.name.split(':').next().unwrap_or("");
    p.name == filter || surface == filter || p.check == filter
}

/// Runs the selected items in a fixed order. An unmatched filter is an error.
pub fn verify(opts: &VerifyOptions) -> Result<Vec<VerifyItem>> {
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance multiplier must be positive, got {}", opts.tolerance_scale)));
    }
    opts.quadrature.validate()?;
    let plans: Vec<Plan> = plan()
        .into_iter()
        .filter(|p| opts.filter.as_deref().map_or(true, |f| f == "all" || selected(p, f)))
        .collect();
    if plans.is_empty() {
        return Err(Error::InvalidParameter(format!("no verify item matches `{}`", opts.filter.as_deref().unwrap_or(""))));
    }
    let items = corpus();
    let mut ctx: Option<(usize, Ctx)> = None;
    let mut out = Vec::with_capacity(plans.len());
    for p in &plans {
        if ctx.as_ref().map_or(true, |(si, _)| *si != p.surface) {
            let item = &items[p.surface];
            let surface = item.spec.build_with(opts.quadrature)?;
            let o = item.spec.base_point(&surface)?;
            let dmax = max_distance(&surface, &o)?;
            let seed = opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(p.surface as u64);
            ctx = Some((p.surface, Ctx { item, surface, o, dmax, seed, nodes: opts.nodes, m: opts.tolerance_scale }));
        }
        let (_, c) = ctx.as_ref().expect("context was just built");
        let start = Instant::now();
        let item = match (p.run)(c, p.draw) {
            Ok(o) => {
                let passed = o.extra
                    && match o.bound {
                        Bound::AtMost => o.value <= o.threshold,
                        Bound::AtLeast => o.value >= o.threshold,
                    };
                VerifyItem { name: p.name.clone(), value: o.value, bound: o.bound, threshold: o.threshold, passed, detail: o.detail, seconds: 0.0 }
            }
            Err(e) => VerifyItem {
                name: p.name.clone(),
                value: f64::NAN,
                bound: Bound::AtMost,
                threshold: f64::NAN,
                passed: false,
                detail: e.to_string(),
                seconds: 0.0,
            },
        };
        out.push(VerifyItem { seconds: start.elapsed().as_secs_f64(), ..item });
    }
    Ok(out)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn warnings(r: &BalanceReport) -> String {
    if r.warnings.is_empty() {
        String::new()
    } else {
        r.warnings.join("; ")
    }
}

fn identity(r: &BalanceReport, m: f64) -> Outcome {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() { warnings(r) } else { format!("failed checks: {}", failed.join(", ")) };
    Outcome::at_most(r.relative_residual(), IDENTITY_TOL * m).with(failed.is_empty(), detail)
}

fn margin(r: &BalanceReport, m: f64) -> Outcome {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() { warnings(r) } else { format!("failed checks: {}", failed.join(", ")) };
    Outcome::at_least(r.margin / r.scale(), -MARGIN_TOL * m).with(failed.is_empty(), detail)
}

/// Random `(σ, ρ)` for draw `i`, with `ρ ∈ (0.3, 1.1)·r_max` kept below `π`
/// on the sphere and `σ ∈ (0.1, 0.6)·ρ`.
fn draw(c: &Ctx, i: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(i as u64));
    let mut rho = rng.random_range(0.3..1.1) * c.dmax;
    if c.surface.form().is_spherical() {
        rho = rho.min(3.0);
    }
    let sigma = rng.random_range(0.1..0.6) * rho;
    (sigma, rho)
}

fn check_reference(c: &Ctx, _: usize) -> Result<Outcome> {
    let r = c.item.spec.reference_values();
    let form = *c.surface.form();
    let i = c.surface.integrate_terms(&crate::surface::Region::all(), |g| [1.0, 0.25 * g.h_norm2(&form)])?;
    let ea = rel(i.values[0], r.area.unwrap_or(f64::NAN));
    let ew = rel(i.values[1], r.willmore_quarter.unwrap_or(f64::NAN));
    Ok(Outcome::at_most(ea.max(ew), CLOSED_FORM_TOL * c.m).with(true, format!("area {:.3e}, quarter willmore {:.3e}", ea, ew)))
}

fn check_sphere_equality(c: &Ctx, _: usize) -> Result<Outcome> {
    let r = chen_inequality(&c.surface)?;
    // margin = ¼W ± |Σ| − 4π, which vanishes on geodesic spheres.
    Ok(Outcome::at_most(r.margin.abs() / (4.0 * PI), CLOSED_FORM_TOL * c.m).with(true, warnings(&r)))
}

fn crude_inputs(c: &Ctx, i: usize) -> MonotonicityInputs {
    let (sigma, rho) = draw(c, i);
    MonotonicityInputs::new(c.o, sigma, rho)
}

fn check_crude(c: &Ctx, i: usize) -> Result<Outcome> {
    let inputs = crude_inputs(c, i);
    let r = crude_balance(&c.surface, &inputs)?;
    let mut o = identity(&r, c.m);
    o.detail = format!("σ = {:.4}, ρ = {:.4} {}", inputs.sigma, inputs.rho, o.detail);
    Ok(o)
}

fn check_sphere_crude(c: &Ctx, i: usize) -> Result<Outcome> {
    let inputs = crude_inputs(c, i);
    let r = sphere_crude_balance(&c.surface, &inputs)?;
    let mut o = identity(&r, c.m);
    o.detail = format!("ρ = {:.4} {}", inputs.rho, o.detail);
    Ok(o)
}

fn order_outcome(r: &BalanceReport) -> Outcome {
    let scale = r.scale();
    let h = &r.refinement_history;
    let fine = h.last().map_or(f64::NAN, |e| e.1.abs() / scale);
    let coarse = h.first().map_or(f64::NAN, |e| e.1.abs() / scale);
    let order = observed_order(h).unwrap_or(f64::INFINITY);
    let detail = format!("relative residual {coarse:.3e} -> {fine:.3e}");
    if fine <= ORDER_FLOOR {
        // Converged to rounding; the order is not measurable.
        return Outcome::at_most(fine, ORDER_FLOOR).with(true, format!("{detail}, order {order:.2} (at rounding floor)"));
    }
    Outcome::at_least(order, MIN_ORDER).with(true, detail)
}

/// The surface with the adaptive tolerance tightened, so that the base rule
/// dominates the residual.
fn order_surface(c: &Ctx) -> Result<ImmersedSurface> {
    c.surface.with_quadrature(QuadratureSpec { cut_tolerance: ORDER_CUT_TOLERANCE, ..*c.surface.quadrature() })
}

fn check_crude_order(c: &Ctx, _: usize) -> Result<Outcome> {
    let inputs = crude_inputs(c, 1);
    let r = refinement_history(&order_surface(c)?, &ORDER_CELLS, |s| crude_balance(s, &inputs))?;
    Ok(order_outcome(&r))
}

fn check_sphere_crude_order(c: &Ctx, _: usize) -> Result<Outcome> {
    let inputs = crude_inputs(c, 1);
    let r = refinement_history(&order_surface(c)?, &ORDER_CELLS, |s| sphere_crude_balance(s, &inputs))?;
    Ok(order_outcome(&r))
}

fn check_density(c: &Ctx, _: usize) -> Result<Outcome> {
    let d = density_ratio(&c.surface, &c.o, &DENSITY_SIGMAS)?;
    let k = c.item.spec.anchor_multiplicity() as f64;
    let err = rel(d.k_extrapolated, k);
    let n = d.sigmas.len() - 1;
    let agree = rel(d.weighted_ratio[n], d.area_ratio[n]);
    let ok = agree <= DENSITY_AGREEMENT_TOL * c.m && !d.budget_exceeded;
    Ok(Outcome::at_most(err, DENSITY_TOL * c.m).with(ok, format!("k = {:.6}, weighted {:.6}, agreement {agree:.3e}", d.k_extrapolated, d.k_weighted)))
}

fn random_nodes(c: &Ctx, salt: u64, count: usize) -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ salt);
    let charts = c.surface.charts();
    (0..count)
        .map(|_| {
            let ci = rng.random_range(0..charts.len());
            let d = charts[ci].domain;
            (ci, d.u0 + (d.u1 - d.u0) * rng.random::<f64>(), d.v0 + (d.v1 - d.v0) * rng.random::<f64>())
        })
        .collect()
}

fn check_divergence(c: &Ctx, _: usize) -> Result<Outcome> {
    let form = *c.surface.form();
    let oc = *c.o.coords();
    let mut worst: f64 = 0.0;
    for (ci, u, v) in random_nodes(c, 0xD1, DIVERGENCE_NODES) {
        let g = c.surface.sample_intrinsic(ci, u, v)?;
        let div = g.divergence(&form, |x| form.x_field_raw(&oc, x))?;
        worst = worst.max((div - 2.0 * form.potential_raw(&oc, &g.position)).abs());
    }
    Ok(Outcome::at_most(worst, DIVERGENCE_TOL * c.m).with(true, format!("{DIVERGENCE_NODES} nodes")))
}

fn check_first_variation(c: &Ctx, _: usize) -> Result<Outcome> {
    let form = *c.surface.form();
    let oc = *c.o.coords();
    let r = first_variation(&c.surface, |x| form.x_field_raw(&oc, x))?;
    // Both sides can vanish by symmetry; ∫|Y| sets the size of the terms.
    let size = r.scale() + r.term("field_mass").unwrap_or(0.0);
    let mut o = identity(&r, c.m);
    o.value = r.residual.abs() / size.max(f64::MIN_POSITIVE);
    Ok(o)
}

fn check_chen(c: &Ctx, _: usize) -> Result<Outcome> {
    Ok(margin(&chen_inequality(&c.surface)?, c.m))
}

fn check_mono(c: &Ctx, _: usize) -> Result<Outcome> {
    Ok(identity(&mono_identity(&c.surface, &c.o, None)?, c.m))
}

fn check_embeddedness(c: &Ctx, _: usize) -> Result<Outcome> {
    let (embedded, r) = embeddedness_criterion(&c.surface, MARGIN_TOL)?;
    let expected = !is_pair(c.item);
    let normalized = r.margin / r.scale();
    // value 1 when the certificate matches the expectation
    let value = if embedded == expected { 1.0 } else { 0.0 };
    Ok(Outcome::at_least(value, 1.0).with(true, format!("certificate {embedded}, expected {expected}, margin/scale {normalized:.6e}")))
}

/// Draw 1 cuts the surface, draw 2 contains it.
fn finer_rho(c: &Ctx, i: usize) -> f64 {
    let rho = if i == 1 { 0.6 * c.dmax } else { c.dmax + 0.5 };
    if c.surface.form().is_spherical() {
        rho.min(3.0)
    } else {
        rho
    }
}

fn check_finer(c: &Ctx, i: usize) -> Result<Outcome> {
    let rho = finer_rho(c, i);
    let sampling = NodeSampling { count: c.nodes, seed: c.seed ^ 0xF1, sigma: 1e-3 };
    let r = finer_inequality(&c.surface, &c.o, rho, Some(&sampling))?;
    let mut o = margin(&r, c.m);
    o.detail = format!("ρ = {rho:.4}, pointwise worst {:.3e} {}", r.term("pointwise_worst").unwrap_or(f64::NAN), o.detail);
    Ok(o)
}

fn check_sphere_finer(c: &Ctx, i: usize) -> Result<Outcome> {
    let rho = finer_rho(c, i);
    let r = sphere_finer_inequality(&c.surface, &c.o, rho)?;
    let mut o = margin(&r, c.m);
    o.detail = format!("ρ = {rho:.4} {}", o.detail);
    Ok(o)
}

fn check_boundary_mono(c: &Ctx, i: usize) -> Result<Outcome> {
    let (o, interior) = if i == 1 {
        (c.o, true)
    } else {
        (c.item.spec.point_at(&c.surface, c.item.spec.boundary_anchor()?)?, false)
    };
    Ok(margin(&boundary_mono(&c.surface, &o, interior)?, c.m))
}

fn check_equality_case(c: &Ctx, _: usize) -> Result<Outcome> {
    let e = equality_case_residual(&c.surface, c.nodes, c.seed ^ 0xE0)?;
    let detail = format!("{} pairs, min H {:.6}", e.pairs, e.min_mean_curvature);
    if is_sphere(c.item) {
        Ok(Outcome::at_most(e.max_residual, SPHERE_EQUALITY_CASE_TOL * c.m).with(e.min_mean_curvature > 0.0, detail))
    } else {
        Ok(Outcome::at_least(e.max_residual, TORUS_EQUALITY_CASE_FLOOR).with(true, detail))
    }
}

/// Nodes with `r ≤ 1e-3` are replaced; the weights are singular at `o`.
fn pointwise_nodes(c: &Ctx, salt: u64) -> Result<Vec<crate::surface::GeometrySample>> {
    let form = *c.surface.form();
    let mut out = Vec::with_capacity(c.nodes);
    let mut k = 0;
    while out.len() < c.nodes {
        for (ci, u, v) in random_nodes(c, salt.wrapping_add(k), c.nodes - out.len()) {
            let x = c.surface.charts()[ci].position(u, v);
            let r = form.distance_raw(c.o.coords(), &x)?;
            if r > 1e-3 && (form.is_hyperbolic() || r < PI - 1e-3) {
                out.push(c.surface.sample_geometry(ci, u, v, &c.o)?);
            }
        }
        k += 1;
        if k > 100 {
            return Err(Error::Degenerate("too few nodes away from the base point".into()));
        }
    }
    Ok(out)
}

fn check_square_decomposition(c: &Ctx, _: usize) -> Result<Outcome> {
    let form = *c.surface.form();
    let mut worst: f64 = 0.0;
    for g in pointwise_nodes(c, 0x5A)? {
        let res = pointwise_square_decomposition(&form, &g)?;
        worst = worst.max(res.abs() / square_decomposition_scale(&form, &g)?.max(1.0));
    }
    Ok(Outcome::at_most(worst, SQUARE_DECOMPOSITION_TOL * c.m).with(true, format!("{} nodes", c.nodes)))
}

fn check_weight_identity(c: &Ctx, _: usize) -> Result<Outcome> {
    let form = *c.surface.form();
    let target = -form.k();
    let mut worst: f64 = 0.0;
    for g in pointwise_nodes(c, 0x3C)? {
        let w = g.weights()?;
        let size = (2.0 * w.phi * w.v).abs() + (w.phi_prime * w.sn).abs();
        worst = worst.max((w.identity_value() - target).abs() / size.max(1.0));
    }
    Ok(Outcome::at_most(worst, WEIGHT_IDENTITY_TOL * c.m).with(true, format!("{} nodes", c.nodes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let names = item_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn unknown_filter_is_an_error() {
        let opts = VerifyOptions { filter: Some("no_such_item".into()), ..Default::default() };
        assert!(verify(&opts).is_err());
    }

    #[test]
    fn single_item_runs_alone() {
        let opts = VerifyOptions { filter: Some("sphere_h3_1:chen_inequality".into()), ..Default::default() };
        let out = verify(&opts).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].passed, "{:?}", out[0]);
    }
}
