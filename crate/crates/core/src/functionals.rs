//! Energies, monotonicity identities, inequalities and equality-case tests.
//!
//! Notation: `o` is the base point, `r = dist(o, ·)`, `X = sn(r)∇r`,
//! `V = sn′(r)`, `w = ∫₀ʳ sn`, `φ = 1/w`, `Σ_ρ = {r < ρ}` and `**H**` the
//! mean curvature vector.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::report::{BalanceReport, ReportBuilder, ReportKind};
use crate::spaceform::{radial_weights, AmbientPoint, Coords, SpaceForm};
use crate::surface::{GeometrySample, ImmersedSurface, Integral, Region};

/// Base point, radii and multiplicity for the finite-radius balances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityInputs {
    pub o: AmbientPoint,
    pub sigma: f64,
    pub rho: f64,
    /// Multiplicity at `o`; computed by [`ImmersedSurface::multiplicity_at`] when absent.
    pub k: Option<usize>,
}

impl MonotonicityInputs {
    pub fn new(o: AmbientPoint, sigma: f64, rho: f64) -> MonotonicityInputs {
        MonotonicityInputs { o, sigma, rho, k: None }
    }

    pub fn with_multiplicity(mut self, k: usize) -> MonotonicityInputs {
        self.k = Some(k);
        self
    }

    fn validate(&self, form: &SpaceForm) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < self.rho && self.rho.is_finite()) {
            return Err(Error::Domain(format!("need 0 < σ < ρ < ∞, got σ = {}, ρ = {}", self.sigma, self.rho)));
        }
        check_rho(form, self.rho)
    }
}

/// Random node sampling for pointwise checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSampling {
    pub count: usize,
    pub seed: u64,
    /// Nodes with `r ≤ sigma` are skipped.
    pub sigma: f64,
}

impl Default for NodeSampling {
    fn default() -> Self {
        NodeSampling { count: 10_000, seed: 1, sigma: 1e-3 }
    }
}

fn check_rho(form: &SpaceForm, rho: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("ρ must be positive, got {rho}")));
    }
    if form.is_spherical() && rho >= PI {
        return Err(Error::Domain(format!("ρ = {rho} ≥ π: conjugate points on the sphere")));
    }
    Ok(())
}

fn require_closed(surface: &ImmersedSurface) -> Result<()> {
    if surface.is_closed() {
        Ok(())
    } else {
        Err(Error::NotClosed)
    }
}

fn require_hyperbolic(form: &SpaceForm, what: &str) -> Result<()> {
    if form.is_hyperbolic() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} is stated in hyperbolic space only")))
    }
}

fn require_spherical(form: &SpaceForm, what: &str) -> Result<()> {
    if form.is_spherical() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} is stated in the sphere only")))
    }
}

fn multiplicity(surface: &ImmersedSurface, o: &AmbientPoint, k: Option<usize>) -> Result<usize> {
    match k {
        Some(0) => Err(Error::InvalidParameter("multiplicity must be at least 1".into())),
        Some(k) => Ok(k),
        None => surface.multiplicity_at(o),
    }
}

/// `∫_{∂Σ ∩ region} ψ⟨X, η⟩`; zero on closed surfaces.
fn boundary_flux<P>(surface: &ImmersedSurface, region: &Region, psi: P, b: &mut ReportBuilder, what: &str) -> Result<f64>
where
    P: Fn(&GeometrySample) -> f64 + Sync,
{
    if surface.is_closed() {
        return Ok(0.0);
    }
    let form = *surface.form();
    let i = surface.boundary_integral_terms(region, |g, eta| [psi(g) * form.dot(&g.x_field, eta)])?;
    b.quadrature(what, &i, [1.0]);
    Ok(i.values[0])
}

fn phi_of(g: &GeometrySample) -> f64 {
    g.weights.map_or(0.0, |w| w.phi)
}

/// `∫_Σ |**H**|²`.
pub fn willmore_energy(surface: &ImmersedSurface) -> Result<Integral<1>> {
    let form = *surface.form();
    surface.integrate(&Region::all(), |g| g.h_norm2(&form))
}

/// Finite-radius balance on `Σ_ρ ∖ Σ_σ`, an exact consequence of the first
/// variation formula applied to `(φ(max(r, σ)) − φ(ρ))₊ X`:
///
/// `−2φ(ρ)∫_{Σ_ρ}V + 2φ(σ)∫_{Σ_σ}V − K|Σ_ρ∖Σ_σ|
///   = φ(ρ)∫_{Σ_ρ}X^⊥·H − φ(σ)∫_{Σ_σ}X^⊥·H − ∫_{Σ_ρ∖Σ_σ}|X^⊥/w + H/2|²
///     + ¼∫_{Σ_ρ∖Σ_σ}|H|² + ∫_{∂Σ}(φ(max(r, σ)) − φ(ρ))₊⟨X, η⟩`.
///
/// With `K = −1` and a closed surface this is the hyperbolic balance; the same
/// identity holds in the sphere with the sign of the area term flipped.
pub fn crude_balance(surface: &ImmersedSurface, inputs: &MonotonicityInputs) -> Result<BalanceReport> {
    let form = *surface.form();
    inputs.validate(&form)?;
    let (sigma, rho) = (inputs.sigma, inputs.rho);
    let ws = radial_weights(&form, sigma)?;
    let wr = radial_weights(&form, rho)?;
    let o = *inputs.o.coords();
    let inner = surface.integrate_terms(&Region::ball(&inputs.o, sigma).refined(true), |g| {
        [form.potential_raw(&o, &g.position), g.x_perp_dot_h(&form)]
    })?;
    let ann = surface.integrate_terms(&Region::annulus(&inputs.o, sigma, rho), |g| {
        [form.potential_raw(&o, &g.position), g.x_perp_dot_h(&form), 1.0, g.square_term(&form), 0.25 * g.h_norm2(&form)]
    })?;

    let mut b = ReportBuilder::new("crude_balance", ReportKind::Identity);
    b.quadrature("Σ_σ", &inner, [2.0 * (ws.phi - wr.phi), ws.phi - wr.phi]);
    b.quadrature("Σ_ρ∖Σ_σ", &ann, [2.0 * wr.phi, wr.phi, 1.0, 1.0, 1.0]);
    let flux_inner = boundary_flux(surface, &Region::ball(&inputs.o, sigma), |_| ws.phi - wr.phi, &mut b, "∂Σ ∩ Σ_σ")?;
    let flux_ann = boundary_flux(surface, &Region::annulus(&inputs.o, sigma, rho), |g| phi_of(g) - wr.phi, &mut b, "∂Σ ∩ Σ_ρ")?;
    let [v_in, xh_in] = inner.values;
    let [v_ann, xh_ann, area_ann, square, quarter] = ann.values;
    b.lhs("potential_rho", -2.0 * wr.phi * (v_in + v_ann))
        .lhs("potential_sigma", 2.0 * ws.phi * v_in)
        .lhs("annulus_area", -form.k() * area_ann)
        .rhs("curvature_flux_rho", wr.phi * (xh_in + xh_ann))
        .rhs("curvature_flux_sigma", -ws.phi * xh_in)
        .rhs("square_annulus", -square)
        .rhs("quarter_willmore_annulus", quarter)
        .rhs("boundary_flux", flux_inner + flux_ann);
    Ok(b.finish())
}

/// The balance with `σ → 0` substituted analytically (`2φ(σ)∫_{Σ_σ}V → 4kπ`,
/// the `σ`-flux terms → 0). Valid for `o` an interior point of `Σ`.
fn limit_balance(surface: &ImmersedSurface, o: &AmbientPoint, rho: f64, k: usize, name: &str) -> Result<BalanceReport> {
    let form = *surface.form();
    check_rho(&form, rho)?;
    let wr = radial_weights(&form, rho)?;
    let oc = *o.coords();
    let i = surface.integrate_terms(&Region::ball(o, rho).refined(true), |g| {
        [form.potential_raw(&oc, &g.position), g.x_perp_dot_h(&form), 1.0, g.square_term(&form), 0.25 * g.h_norm2(&form)]
    })?;
    let mut b = ReportBuilder::new(name, ReportKind::Identity);
    b.quadrature("Σ_ρ", &i, [2.0 * wr.phi, wr.phi, 1.0, 1.0, 1.0]);
    let flux = boundary_flux(surface, &Region::ball(o, rho), |g| phi_of(g) - wr.phi, &mut b, "∂Σ ∩ Σ_ρ")?;
    let [v, xh, area, square, quarter] = i.values;
    b.lhs("potential_rho", -2.0 * wr.phi * v)
        .lhs("four_k_pi", 4.0 * k as f64 * PI)
        .lhs("area_rho", -form.k() * area)
        .rhs("curvature_flux_rho", wr.phi * xh)
        .rhs("square", -square)
        .rhs("quarter_willmore", quarter)
        .rhs("boundary_flux", flux);
    Ok(b.finish())
}

/// Sphere balance on `Σ_ρ`, `0 < ρ < π`, with the `σ → 0` limit taken
/// analytically:
///
/// `−2φ(ρ)∫_{Σ_ρ}cos r + 4kπ − |Σ_ρ| = φ(ρ)∫_{Σ_ρ}X^⊥·H − ∫_{Σ_ρ}|X^⊥/w + H/2|² + ¼∫_{Σ_ρ}|H|²`
/// (plus the boundary flux on surfaces with boundary). `inputs.sigma` is not used.
pub fn sphere_crude_balance(surface: &ImmersedSurface, inputs: &MonotonicityInputs) -> Result<BalanceReport> {
    let form = *surface.form();
    require_spherical(&form, "sphere_crude_balance")?;
    check_rho(&form, inputs.rho)?;
    let k = multiplicity(surface, &inputs.o, inputs.k)?;
    limit_balance(surface, &inputs.o, inputs.rho, k, "sphere_crude_balance")
}

/// Largest distance from `o` over a 41×41 node scan of every chart.
pub fn max_distance(surface: &ImmersedSurface, o: &AmbientPoint) -> Result<f64> {
    let form = surface.form();
    let n = 40;
    let mut best: f64 = 0.0;
    for chart in surface.charts() {
        let d = chart.domain;
        for i in 0..=n {
            for j in 0..=n {
                let u = d.u0 + (d.u1 - d.u0) * i as f64 / n as f64;
                let v = d.v0 + (d.v1 - d.v0) * j as f64 / n as f64;
                best = best.max(form.distance_raw(o.coords(), &chart.position(u, v))?);
            }
        }
    }
    Ok(best)
}

/// Least-squares line `y = a + b x`; returns `(a, b, max misfit)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let misfit = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).abs()).fold(0.0, f64::max);
    (a, b, misfit)
}

/// Hyperbolic limit identity at a point of multiplicity `k`:
/// `|Σ| + 4kπ = −∫_Σ|X^⊥/w + H/2|² + ¼∫_Σ|H|²`.
///
/// The `ρ`-terms are evaluated at `ρ_j = r_max + j`, `j = 1..4`, where they are
/// exactly linear in `φ(ρ_j) ≈ 2e^{−ρ_j}`, and extrapolated to `φ = 0`. The
/// fitted decay exponent of those terms is checked against `−1`.
pub fn mono_identity(surface: &ImmersedSurface, o: &AmbientPoint, k: Option<usize>) -> Result<BalanceReport> {
    let form = *surface.form();
    require_hyperbolic(&form, "mono_identity")?;
    require_closed(surface)?;
    let k = multiplicity(surface, o, k)?;
    let r_max = max_distance(surface, o)?;
    let rhos: Vec<f64> = (1..=4).map(|j| r_max + j as f64).collect();
    let reports: Vec<BalanceReport> = rhos.iter().map(|&rho| limit_balance(surface, o, rho, k, "mono_identity")).collect::<Result<_>>()?;
    let phis: Vec<f64> = rhos.iter().map(|&rho| radial_weights(&form, rho).map(|w| w.phi)).collect::<Result<_>>()?;
    let lhs: Vec<f64> = reports.iter().map(|r| r.lhs).collect();
    let rhs: Vec<f64> = reports.iter().map(|r| r.rhs).collect();
    let (lhs_inf, _, lhs_misfit) = fit_line(&phis, &lhs);
    let (rhs_inf, _, rhs_misfit) = fit_line(&phis, &rhs);

    let decay: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| ((l - lhs_inf).abs() + (r - rhs_inf).abs()).ln()).collect();
    let (_, exponent, _) = fit_line(&rhos, &decay);

    let last = &reports[3];
    let term = |name: &str| last.term(name).unwrap_or(0.0);
    let area = term("area_rho");
    let four_k_pi = term("four_k_pi");
    let square = term("square");
    let quarter = term("quarter_willmore");
    let mut b = ReportBuilder::new("mono_identity", ReportKind::Identity);
    b.lhs("area", area)
        .lhs("four_k_pi", four_k_pi)
        .lhs("potential_limit", lhs_inf - area - four_k_pi)
        .rhs("square", square)
        .rhs("quarter_willmore", quarter)
        .rhs("curvature_flux_limit", rhs_inf - square - quarter)
        .aux("r_max", r_max)
        .aux("decay_exponent", exponent)
        .aux("extrapolation_misfit", lhs_misfit.max(rhs_misfit));
    b.check("decay_exponent", exponent, (exponent + 1.0).abs() <= 0.1);
    let scale = lhs_inf.abs() + rhs_inf.abs();
    if lhs_misfit.max(rhs_misfit) > 1e-9 * scale {
        b.warn(format!("extrapolation unstable: misfit {:.3e}", lhs_misfit.max(rhs_misfit)));
    }
    for r in &reports {
        for w in &r.warnings {
            b.warn(w.clone());
        }
    }
    let mut report = b.finish();
    report.error_bound = reports.iter().map(|r| r.error_bound).fold(0.0, f64::max);
    Ok(report)
}

fn random_node(surface: &ImmersedSurface, rng: &mut ChaCha8Rng) -> (usize, f64, f64) {
    let ci = rng.random_range(0..surface.charts().len());
    let d = surface.charts()[ci].domain;
    let u = d.u0 + (d.u1 - d.u0) * rng.random::<f64>();
    let v = d.v0 + (d.v1 - d.v0) * rng.random::<f64>();
    (ci, u, v)
}

/// Pointwise claim behind the hyperbolic finer inequality at `σ < r < ρ`:
/// `−(φ(r) − φ(ρ))₊ X·H − |X^⊥|²/w² ≤ ¼|H|²`. Returns the worst normalized
/// excess and the number of nodes tested.
fn finer_pointwise(surface: &ImmersedSurface, o: &AmbientPoint, rho: f64, sampling: &NodeSampling) -> Result<(f64, usize)> {
    let form = *surface.form();
    let phi_rho = radial_weights(&form, rho)?.phi;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let (mut tested, mut attempts) = (0, 0);
    let mut worst = f64::NEG_INFINITY;
    while tested < sampling.count && attempts < 100 * sampling.count.max(1) {
        attempts += 1;
        let (ci, u, v) = random_node(surface, &mut rng);
        let g = surface.sample_intrinsic(ci, u, v)?;
        let r = form.distance_raw(o.coords(), &g.position)?;
        if !(r > sampling.sigma && r < rho) {
            continue;
        }
        let g = surface.sample_geometry(ci, u, v, o)?;
        let w = g.weights()?;
        let xh = g.x_perp_dot_h(&form);
        let lhs = -(w.phi - phi_rho).max(0.0) * xh - g.x_perp_norm2(&form) / (w.w * w.w);
        let rhs = 0.25 * g.h_norm2(&form);
        let scale = 1.0 + lhs.abs() + rhs + (w.phi * xh).abs();
        worst = worst.max((lhs - rhs) / scale);
        tested += 1;
    }
    Ok((worst, tested))
}

/// Hyperbolic finer inequality: `4π + |Σ_ρ| ≤ 2φ(ρ)∫_{Σ_ρ}V + ¼∫_Σ|H|²`, the
/// `σ → 0` limit of the integrated pointwise claim. The margin of the
/// stronger form with `φ(ρ)` in place of `2φ(ρ)` is reported as the aux term
/// `single_weight_margin`. With `pointwise` set, the pointwise claim is
/// checked at random nodes.
pub fn finer_inequality(surface: &ImmersedSurface, o: &AmbientPoint, rho: f64, pointwise: Option<&NodeSampling>) -> Result<BalanceReport> {
    let form = *surface.form();
    require_hyperbolic(&form, "finer_inequality")?;
    require_closed(surface)?;
    check_rho(&form, rho)?;
    let wr = radial_weights(&form, rho)?;
    let oc = *o.coords();
    let ball = surface.integrate_terms(&Region::ball(o, rho), |g| [form.potential_raw(&oc, &g.position), 1.0])?;
    let willmore = willmore_energy(surface)?;
    let mut b = ReportBuilder::new("finer_inequality", ReportKind::Inequality);
    b.quadrature("Σ_ρ", &ball, [2.0 * wr.phi, 1.0]).quadrature("Σ", &willmore, [0.25]);
    b.lhs("four_pi", 4.0 * PI)
        .lhs("area_rho", ball.values[1])
        .rhs("potential_rho", 2.0 * wr.phi * ball.values[0])
        .rhs("quarter_willmore", 0.25 * willmore.value())
        .aux("single_weight_margin", wr.phi * ball.values[0] + 0.25 * willmore.value() - 4.0 * PI - ball.values[1]);
    if let Some(s) = pointwise {
        let (worst, tested) = finer_pointwise(surface, o, rho, s)?;
        b.aux("pointwise_nodes", tested as f64).aux("pointwise_worst", worst);
        b.check("pointwise_claim", worst, worst <= 1e-12);
        if tested < s.count {
            b.warn(format!("only {tested} of {} nodes fell in σ < r < ρ", s.count));
        }
    }
    Ok(b.finish())
}

/// Sphere finer inequality, `0 < ρ < π`:
/// `4π − |Σ_ρ| ≤ 2φ(ρ)∫_{Σ_ρ}cos r + ¼∫_Σ|H|²`. The form with `φ(ρ)` in place
/// of `2φ(ρ)` fails on geodesic spheres (`t = π/3`, `ρ = 1`: 9.678 > 7.980);
/// its margin is reported as the aux term `single_weight_margin`.
pub fn sphere_finer_inequality(surface: &ImmersedSurface, o: &AmbientPoint, rho: f64) -> Result<BalanceReport> {
    let form = *surface.form();
    require_spherical(&form, "sphere_finer_inequality")?;
    require_closed(surface)?;
    check_rho(&form, rho)?;
    let wr = radial_weights(&form, rho)?;
    let oc = *o.coords();
    let ball = surface.integrate_terms(&Region::ball(o, rho), |g| [form.potential_raw(&oc, &g.position), 1.0])?;
    let willmore = willmore_energy(surface)?;
    let mut b = ReportBuilder::new("sphere_finer_inequality", ReportKind::Inequality);
    b.quadrature("Σ_ρ", &ball, [2.0 * wr.phi, 1.0]).quadrature("Σ", &willmore, [0.25]);
    b.lhs("four_pi", 4.0 * PI)
        .lhs("area_rho", -ball.values[1])
        .rhs("potential_rho", 2.0 * wr.phi * ball.values[0])
        .rhs("quarter_willmore", 0.25 * willmore.value())
        .aux("single_weight_margin", wr.phi * ball.values[0] + 0.25 * willmore.value() - 4.0 * PI + ball.values[1]);
    Ok(b.finish())
}

/// Hyperbolic bound for surfaces with boundary:
/// `|Σ| + c ≤ ∫_{∂Σ}⟨X/w, η⟩ − ∫_Σ|X^⊥/w + H/2|² + ¼∫_Σ|H|²` with `c = 4π` for an
/// interior point `o` and `2π` for a boundary point. The square term is kept,
/// so the margin vanishes up to quadrature error; adding the `square` term
/// back gives the slack of the bound without it.
pub fn boundary_mono(surface: &ImmersedSurface, o: &AmbientPoint, interior: bool) -> Result<BalanceReport> {
    let form = *surface.form();
    require_hyperbolic(&form, "boundary_mono")?;
    if surface.is_closed() {
        return Err(Error::EmptyBoundary);
    }
    surface.multiplicity_at(o)?;
    let region = Region::around(o);
    let body = surface.integrate_terms(&region, |g| [1.0, g.square_term(&form), 0.25 * g.h_norm2(&form)])?;
    let mut b = ReportBuilder::new("boundary_mono", ReportKind::Inequality);
    b.quadrature("Σ", &body, [1.0; 3]);
    let flux = boundary_flux(surface, &region, phi_of, &mut b, "∂Σ")?;
    let c = if interior { 4.0 * PI } else { 2.0 * PI };
    b.lhs("area", body.values[0])
        .lhs("point_constant", c)
        .rhs("boundary_flux", flux)
        .rhs("square", -body.values[1])
        .rhs("quarter_willmore", body.values[2]);
    Ok(b.finish())
}

/// `4π + |Σ| ≤ ¼∫|H|²` in hyperbolic space, `4π − |Σ| ≤ ¼∫|H|²` in the sphere.
pub fn chen_inequality(surface: &ImmersedSurface) -> Result<BalanceReport> {
    let form = *surface.form();
    require_closed(surface)?;
    let i = surface.integrate_terms(&Region::all(), |g| [1.0, 0.25 * g.h_norm2(&form)])?;
    let mut b = ReportBuilder::new("chen_inequality", ReportKind::Inequality);
    b.quadrature("Σ", &i, [1.0, 1.0]);
    b.lhs("four_pi", 4.0 * PI).lhs("area", -form.k() * i.values[0]).rhs("quarter_willmore", i.values[1]);
    Ok(b.finish())
}

/// Embeddedness certificate: `¼∫|H|² < |Σ| + 8π` implies `Σ` is embedded.
/// Returns `false` when the margin does not exceed `tolerance·scale`; that
/// is the absence of a certificate, not a proof of non-embeddedness.
pub fn embeddedness_criterion(surface: &ImmersedSurface, tolerance: f64) -> Result<(bool, BalanceReport)> {
    let form = *surface.form();
    require_hyperbolic(&form, "embeddedness_criterion")?;
    require_closed(surface)?;
    let i = surface.integrate_terms(&Region::all(), |g| [1.0, 0.25 * g.h_norm2(&form)])?;
    let mut b = ReportBuilder::new("embeddedness_criterion", ReportKind::Inequality);
    b.quadrature("Σ", &i, [1.0, 1.0]);
    b.lhs("quarter_willmore", i.values[1]).rhs("area", i.values[0]).rhs("eight_pi", 8.0 * PI);
    let report = b.finish();
    Ok((report.margin > tolerance * report.scale(), report))
}

/// Density estimates at a point, both tending to the multiplicity `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRatio {
    pub sigmas: Vec<f64>,
    /// `|Σ_σ| / (πσ²)`.
    pub area_ratio: Vec<f64>,
    /// `φ(σ)∫_{Σ_σ}V / (2π)`.
    pub weighted_ratio: Vec<f64>,
    /// Richardson extrapolation in `σ²` of the last two area ratios.
    pub k_extrapolated: f64,
    /// The same for the weighted ratios.
    pub k_weighted: f64,
    pub budget_exceeded: bool,
}

/// Richardson extrapolation to `σ = 0` in `σ²` from the last two entries;
/// NaN with fewer than two.
pub fn richardson_sigma2(s: &[f64], e: &[f64]) -> f64 {
    let n = s.len().min(e.len());
    if n < 2 {
        return f64::NAN;
    }
    let (a, b) = (s[n - 2] * s[n - 2], s[n - 1] * s[n - 1]);
    (a * e[n - 1] - b * e[n - 2]) / (a - b)
}

pub fn density_ratio(surface: &ImmersedSurface, o: &AmbientPoint, sigmas: &[f64]) -> Result<DensityRatio> {
    let form = *surface.form();
    if sigmas.len() < 2 {
        return Err(Error::InvalidParameter("density_ratio needs at least two radii".into()));
    }
    if sigmas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("σ sequence must be strictly decreasing".into()));
    }
    if let Some(&s) = sigmas.iter().find(|&&s| !(s >= 1e-3)) {
        return Err(Error::InvalidParameter(format!("σ = {s} below the 1e-3 floor")));
    }
    check_rho(&form, sigmas[0])?;
    surface.multiplicity_at(o)?;
    let oc = *o.coords();
    let mut out = DensityRatio {
        sigmas: sigmas.to_vec(),
        area_ratio: Vec::new(),
        weighted_ratio: Vec::new(),
        k_extrapolated: f64::NAN,
        k_weighted: f64::NAN,
        budget_exceeded: false,
    };
    for &s in sigmas {
        let i = surface.integrate_terms(&Region::ball(o, s).refined(true), |g| [1.0, form.potential_raw(&oc, &g.position)])?;
        out.budget_exceeded |= i.budget_exceeded;
        out.area_ratio.push(i.values[0] / (PI * s * s));
        out.weighted_ratio.push(radial_weights(&form, s)?.phi * i.values[1] / (2.0 * PI));
    }
    out.k_extrapolated = richardson_sigma2(sigmas, &out.area_ratio);
    out.k_weighted = richardson_sigma2(sigmas, &out.weighted_ratio);
    Ok(out)
}

/// `[−φ sn ∇^⊥r·H + φ′ sn |∇^⊥r|²] − [−|X^⊥/w + H/2|² + ¼|H|²]`, zero by algebra.
pub fn pointwise_square_decomposition(form: &SpaceForm, g: &GeometrySample) -> Result<f64> {
    let w = g.weights()?;
    let grad_perp = g.x_perp * (1.0 / w.sn);
    let left = -w.phi * w.sn * form.dot(&grad_perp, &g.h_vec) + w.phi_prime * w.sn * form.dot(&grad_perp, &grad_perp);
    let right = -g.square_term(form) + 0.25 * g.h_norm2(form);
    Ok(left - right)
}

/// Magnitude of the terms in [`pointwise_square_decomposition`], for relative tolerances.
pub fn square_decomposition_scale(form: &SpaceForm, g: &GeometrySample) -> Result<f64> {
    let w = g.weights()?;
    Ok((w.phi * g.x_perp_dot_h(form)).abs() + g.x_perp_norm2(form) * w.phi * w.phi + g.square_term(form) + 0.25 * g.h_norm2(form))
}

/// Outcome of the equality-case test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqualityCase {
    /// `max |½H(y) − ⟨x, ν(y)⟩ / (1 + ⟨x, y⟩)|` over the sampled pairs.
    pub max_residual: f64,
    /// Smallest scalar mean curvature `H = −⟨**H**, ν⟩` seen at the `y` nodes.
    pub min_mean_curvature: f64,
    pub pairs: usize,
}

/// Samples `pairs` random pairs `(x, y)` of points of a closed surface in `ℍ³`
/// and measures how far `½H(y) = ⟨x, ν(y)⟩/(1 + ⟨x, y⟩)` is from holding. The
/// relation holds at every pair exactly when the surface is a geodesic sphere.
pub fn equality_case_residual(surface: &ImmersedSurface, pairs: usize, seed: u64) -> Result<EqualityCase> {
    let form = *surface.form();
    let normals = surface.oriented_normals()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = EqualityCase { max_residual: 0.0, min_mean_curvature: f64::INFINITY, pairs: 0 };
    let mut attempts = 0;
    while out.pairs < pairs && attempts < 10 * pairs.max(1) {
        attempts += 1;
        let (cy, uy, vy) = random_node(surface, &mut rng);
        let (cx, ux, vx) = random_node(surface, &mut rng);
        let x: Coords = surface.charts()[cx].position(ux, vx);
        let g = surface.sample_intrinsic(cy, uy, vy)?;
        let y = g.position;
        if form.distance_raw(&x, &y)? < 1e-4 {
            continue;
        }
        let nu = normals.at(surface, cy, uy, vy)?;
        let h = -form.dot(&g.h_vec, &nu);
        let ratio = form.dot(&x, &nu) / (1.0 + form.dot(&x, &y));
        out.max_residual = out.max_residual.max((0.5 * h - ratio).abs());
        out.min_mean_curvature = out.min_mean_curvature.min(h);
        out.pairs += 1;
    }
    Ok(out)
}

/// First variation formula `∫_Σ div_Σ Y = −∫_Σ⟨Y, H⟩ + ∫_{∂Σ}⟨Y, η⟩` for an
/// ambient field `Y` tangent to the model, with the divergence taken by
/// finite differences at every node.
pub fn first_variation<Y>(surface: &ImmersedSurface, field: Y) -> Result<BalanceReport>
where
    Y: Fn(&Coords) -> Coords + Sync,
{
    let form = *surface.form();
    let i = surface.integrate_terms(&Region::all(), |g| {
        let y = field(&g.position);
        let div = g.divergence(&form, &field).unwrap_or(f64::NAN);
        [div, form.dot(&y, &g.h_vec), form.norm(&y)]
    })?;
    if i.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("surface divergence failed at some node".into()));
    }
    let mut b = ReportBuilder::new("first_variation", ReportKind::Identity);
    b.quadrature("Σ", &i, [1.0, 1.0, 0.0]);
    let boundary = if surface.is_closed() {
        0.0
    } else {
        let bi = surface.boundary_integral(&Region::all(), |g, eta| form.dot(&field(&g.position), eta))?;
        b.quadrature("∂Σ", &bi, [1.0]);
        bi.value()
    };
    b.lhs("divergence", i.values[0])
        .rhs("curvature", -i.values[1])
        .rhs("boundary", boundary)
        .aux("field_mass", i.values[2]);
    Ok(b.finish())
}

/// Re-evaluates `f` at each base resolution in `cells` (coarse to fine) and
/// returns the finest report with the residual history attached.
pub fn refinement_history<F>(surface: &ImmersedSurface, cells: &[usize], f: F) -> Result<BalanceReport>
where
    F: Fn(&ImmersedSurface) -> Result<BalanceReport>,
{
    let mut history = Vec::new();
    let mut last = None;
    for &c in cells {
        let s = surface.with_quadrature(surface.quadrature().with_cells(c))?;
        let r = f(&s)?;
        history.push((c, r.residual));
        last = Some(r);
    }
    let mut report = last.ok_or_else(|| Error::InvalidParameter("empty refinement sequence".into()))?;
    report.refinement_history = history;
    Ok(report)
}

/// Observed order `log(|e₀|/|e₁|) / log(n₁/n₀)` between the last two entries.
pub fn observed_order(history: &[(usize, f64)]) -> Option<f64> {
    let [(n0, e0), (n1, e1)] = history.get(history.len().checked_sub(2)?..)? else {
        return None;
    };
    if *e1 == 0.0 || *e0 == 0.0 {
        return None;
    }
    Some((e0.abs() / e1.abs()).ln() / (*n1 as f64 / *n0 as f64).ln())
}
