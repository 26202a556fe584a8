use willmore_core::functionals::{
    boundary_mono, chen_inequality, crude_balance, density_ratio, embeddedness_criterion, equality_case_residual,
    finer_inequality, first_variation, mono_identity, observed_order, pointwise_square_decomposition, richardson_sigma2,
    sphere_crude_balance, sphere_finer_inequality, square_decomposition_scale, willmore_energy, MonotonicityInputs,
    NodeSampling,
};
use willmore_core::library::{Family, SurfaceSpec};
use willmore_core::verify::{SPHERE_EQUALITY_CASE_TOL, SQUARE_DECOMPOSITION_TOL};
use willmore_core::{AmbientPoint, BalanceReport, ImmersedSurface, QuadratureSpec, ReportKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{with_t, BasePoint, ConfigError, Functional, Operation, RunConfig, SweepVariable};
use crate::csv::{Cell, Table};


#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub tolerance: f64,
    pub seed: u64,
}

pub type Row = Vec<(String, Cell)>;

#[derive(Debug, Default)]
pub struct Evaluation {
    pub rows: Vec<Row>,
    /// Human-readable violations; nonempty means exit code 1.
    pub violations: Vec<String>,
    pub summary: Vec<String>,
}

impl Evaluation {
    fn merge(&mut self, other: Evaluation) {
        self.rows.extend(other.rows);
        self.violations.extend(other.violations);
        self.summary.extend(other.summary);
    }
}

fn cerr<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn base_point(spec: &SurfaceSpec, surface: &ImmersedSurface, bp: BasePoint) -> Result<AmbientPoint, ConfigError> {
    Ok(match bp {
        BasePoint::Anchor => spec.base_point(surface)?,
        BasePoint::Boundary => spec.point_at(surface, spec.boundary_anchor()?)?,
        BasePoint::Chart { chart, u, v } => {
            let c = surface.charts().get(chart).ok_or_else(|| ConfigError(format!("chart {chart} out of range")))?;
            surface.form().point_from_coords(c.position(u, v))?
        }
    })
}

fn require(value: Option<f64>, key: &str, f: Functional) -> Result<f64, ConfigError> {
    value.ok_or_else(|| ConfigError(format!("operation {} needs key `{key}`", f.name())))
}

/// Adds a parameter column unless a sweep already leads with it.
fn put(row: &mut Row, name: &str, value: f64) {
    if !row.iter().any(|(k, _)| k == name) {
        row.push((name.into(), value.into()));
    }
}

fn report_row(r: &BalanceReport) -> Row {
    let mut row: Row = vec![
        ("lhs".into(), r.lhs.into()),
        ("rhs".into(), r.rhs.into()),
        ("residual".into(), r.residual.into()),
        ("margin".into(), r.margin.into()),
        ("relative_residual".into(), r.relative_residual().into()),
        ("scale".into(), r.scale().into()),
        ("error_bound".into(), r.error_bound.into()),
    ];
    for t in &r.terms {
        row.push((format!("term_{}", t.name), t.value.into()));
    }
    for c in &r.checks {
        row.push((format!("check_{}", c.name), c.passed.into()));
    }
    row.push(("warnings".into(), r.warnings.join("; ").into()));
    row
}

fn judge(r: &BalanceReport, tol: f64, ev: &mut Evaluation, context: &str) {
    if !r.holds(tol) {
        let what = match r.kind {
            ReportKind::Identity => format!("residual {:.6e} exceeds {tol:e} × scale {:.6e}", r.residual, r.scale()),
            ReportKind::Inequality => format!("margin {:.6e} below −{tol:e} × scale {:.6e}", r.margin, r.scale()),
        };
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let checks = if failed.is_empty() { String::new() } else { format!(" (failed checks: {})", failed.join(", ")) };
        ev.violations.push(format!("{}{context}: {what}{checks}", r.name));
    }
}

fn with_report(r: BalanceReport, prefix: Row, tol: f64, context: &str) -> Evaluation {
    let mut ev = Evaluation::default();
    judge(&r, tol, &mut ev, context);
    ev.summary.push(format!("{r}{context}"));
    let mut row = prefix;
    row.push(("holds".into(), r.holds(tol).into()));
    row.extend(report_row(&r));
    ev.rows.push(row);
    ev
}

/// Runs one operation on one surface. `prefix` holds the leading columns.
pub fn evaluate_once(
    spec: &SurfaceSpec,
    quadrature: QuadratureSpec,
    bp: BasePoint,
    op: &Operation,
    settings: Settings,
    prefix: Row,
) -> Result<Evaluation, ConfigError> {
    let surface = spec.build_with(quadrature)?;
    let o = base_point(spec, &surface, bp)?;
    let f = op.functional;
    let tol = settings.tolerance;
    let mut prefix = prefix;
    prefix.push(("functional".into(), f.name().into()));
    prefix.push(("family".into(), spec.family.kind().name().into()));
    prefix.push(("cells".into(), quadrature.base_cells_per_axis.into()));
    let ctx = |row: &Row| -> String {
        row.iter()
            .filter(|(k, _)| k != "functional" && k != "family" && k != "cells")
            .map(|(k, v)| format!(" {k}={}", crate::csv::fmt_cell(v)))
            .collect()
    };
    let context = ctx(&prefix);
    let ev = match f {
        Functional::WillmoreEnergy => {
            let i = willmore_energy(&surface)?;
            let mut row = prefix;
            row.push(("willmore".into(), i.value().into()));
            row.push(("quarter_willmore".into(), (0.25 * i.value()).into()));
            row.push(("error_bound".into(), i.error_bound[0].into()));
            row.push(("budget_exceeded".into(), i.budget_exceeded.into()));
            Evaluation { summary: vec![format!("willmore_energy{context}: {:.12e}", i.value())], rows: vec![row], violations: vec![] }
        }
        Functional::CrudeBalance => {
            let (sigma, rho) = (require(op.sigma, "sigma", f)?, require(op.rho, "rho", f)?);
            let mut inputs = MonotonicityInputs::new(o, sigma, rho);
            inputs.k = op.k;
            put(&mut prefix, "sigma", sigma);
            put(&mut prefix, "rho", rho);
            with_report(crude_balance(&surface, &inputs)?, prefix, tol, &context)
        }
        Functional::SphereCrudeBalance => {
            let rho = require(op.rho, "rho", f)?;
            // σ is taken to zero analytically; any value in (0, ρ) validates.
            let mut inputs = MonotonicityInputs::new(o, 0.5 * rho, rho);
            inputs.k = op.k;
            put(&mut prefix, "rho", rho);
            with_report(sphere_crude_balance(&surface, &inputs)?, prefix, tol, &context)
        }
        Functional::MonoIdentity => with_report(mono_identity(&surface, &o, op.k)?, prefix, tol, &context),
        Functional::FinerInequality => {
            let rho = require(op.rho, "rho", f)?;
            let sampling = NodeSampling { count: op.nodes, seed: settings.seed, sigma: 1e-3 };
            put(&mut prefix, "rho", rho);
            let sampling = (op.nodes > 0).then_some(sampling);
            with_report(finer_inequality(&surface, &o, rho, sampling.as_ref())?, prefix, tol, &context)
        }
        Functional::SphereFinerInequality => {
            let rho = require(op.rho, "rho", f)?;
            put(&mut prefix, "rho", rho);
            with_report(sphere_finer_inequality(&surface, &o, rho)?, prefix, tol, &context)
        }
        Functional::BoundaryMono => {
            let interior = bp != BasePoint::Boundary;
            with_report(boundary_mono(&surface, &o, interior)?, prefix, tol, &context)
        }
        Functional::ChenInequality => with_report(chen_inequality(&surface)?, prefix, tol, &context),
        Functional::FirstVariation => {
            let form = *surface.form();
            let oc = *o.coords();
            with_report(first_variation(&surface, |x| form.x_field_raw(&oc, x))?, prefix, tol, &context)
        }
        Functional::EmbeddednessCriterion => {
            let (embedded, r) = embeddedness_criterion(&surface, tol)?;
            let mut ev = Evaluation::default();
            ev.summary.push(format!("embeddedness_criterion{context}: certificate {embedded}, margin {:.6e}", r.margin));
            let mut row = prefix;
            row.push(("embedded".into(), embedded.into()));
            row.extend(report_row(&r));
            ev.rows.push(row);
            ev
        }
        Functional::DensityRatio => {
            let d = density_ratio(&surface, &o, &op.sigmas)?;
            let mut ev = Evaluation::default();
            for i in 0..d.sigmas.len() {
                let mut row = prefix.clone();
                row.push(("sigma".into(), d.sigmas[i].into()));
                row.push(("area_ratio".into(), d.area_ratio[i].into()));
                row.push(("weighted_ratio".into(), d.weighted_ratio[i].into()));
                row.push(("k_extrapolated".into(), richardson_sigma2(&d.sigmas[..=i], &d.area_ratio[..=i]).into()));
                row.push(("k_weighted".into(), richardson_sigma2(&d.sigmas[..=i], &d.weighted_ratio[..=i]).into()));
                ev.rows.push(row);
            }
            ev.summary.push(format!("density_ratio{context}: k ≈ {:.6} (weighted {:.6})", d.k_extrapolated, d.k_weighted));
            ev
        }
        Functional::SquareDecomposition => {
            let (worst, nodes) = square_decomposition(&surface, &o, op.nodes, settings.seed)?;
            let mut ev = Evaluation::default();
            if worst > SQUARE_DECOMPOSITION_TOL {
                ev.violations.push(format!("pointwise_square_decomposition{context}: residual {worst:.3e} exceeds {SQUARE_DECOMPOSITION_TOL:e}"));
            }
            ev.summary.push(format!("pointwise_square_decomposition{context}: worst relative residual {worst:.3e} over {nodes} nodes"));
            let mut row = prefix;
            row.push(("nodes".into(), nodes.into()));
            row.push(("max_residual".into(), worst.into()));
            ev.rows.push(row);
            ev
        }
        Functional::EqualityCaseResidual => equality_case(spec, &surface, op.pairs, settings.seed, prefix)?,
    };
    Ok(ev)
}

/// Worst `|residual| / max(1, term size)` over `count` random nodes away from `o`.
fn square_decomposition(surface: &ImmersedSurface, o: &AmbientPoint, count: usize, seed: u64) -> Result<(f64, usize), ConfigError> {
    let form = *surface.form();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut nodes, mut attempts) = (0.0f64, 0, 0);
    while nodes < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let ci = rng.random_range(0..surface.charts().len());
        let d = surface.charts()[ci].domain;
        let (u, v) = (d.u0 + (d.u1 - d.u0) * rng.random::<f64>(), d.v0 + (d.v1 - d.v0) * rng.random::<f64>());
        let r = form.distance_raw(o.coords(), &surface.charts()[ci].position(u, v))?;
        if r <= 1e-3 || (form.is_spherical() && r >= std::f64::consts::PI - 1e-3) {
            continue;
        }
        let g = surface.sample_geometry(ci, u, v, o)?;
        let res = pointwise_square_decomposition(&form, &g)?;
        worst = worst.max(res.abs() / square_decomposition_scale(&form, &g)?.max(1.0));
        nodes += 1;
    }
    Ok((worst, nodes))
}

pub fn equality_case(spec: &SurfaceSpec, surface: &ImmersedSurface, pairs: usize, seed: u64, prefix: Row) -> Result<Evaluation, ConfigError> {
    let e = equality_case_residual(surface, pairs, seed)?;
    let sphere = matches!(spec.family, Family::GeodesicSphere { .. });
    let mut ev = Evaluation::default();
    if sphere && !(e.max_residual <= SPHERE_EQUALITY_CASE_TOL && e.min_mean_curvature > 0.0) {
        ev.violations.push(format!(
            "equality_case_residual: geodesic sphere with residual {:.3e} (bound {SPHERE_EQUALITY_CASE_TOL:e}) and min H {:.6}",
            e.max_residual, e.min_mean_curvature
        ));
    }
    ev.summary.push(format!("equality_case_residual: max residual {:.6e} over {} pairs, min H {:.6}", e.max_residual, e.pairs, e.min_mean_curvature));
    let mut row = prefix;
    row.push(("pairs".into(), e.pairs.into()));
    row.push(("max_residual".into(), e.max_residual.into()));
    row.push(("min_mean_curvature".into(), e.min_mean_curvature.into()));
    ev.rows.push(row);
    Ok(ev)
}

pub fn evaluate(cfg: &RunConfig, settings: Settings) -> Result<Evaluation, ConfigError> {
    let Some(op) = &cfg.operation else {
        return cerr("missing section `[operation]`");
    };
    if cfg.sweep.is_some() {
        return cerr("`[sweep]` is only used by the sweep subcommand");
    }
    let prefix = vec![("surface".to_string(), Cell::from(cfg.surface_name.as_str()))];
    evaluate_once(&cfg.surface, cfg.quadrature, cfg.base_point, op, settings, prefix)
}

pub fn sweep(cfg: &RunConfig, settings: Settings) -> Result<Evaluation, ConfigError> {
    let Some(op) = &cfg.operation else {
        return cerr("missing section `[operation]`");
    };
    let Some(sw) = &cfg.sweep else {
        return cerr("missing section `[sweep]`");
    };
    let f = op.functional;
    let takes = |key: &str| match key {
        "rho" => matches!(f, Functional::CrudeBalance | Functional::SphereCrudeBalance | Functional::FinerInequality | Functional::SphereFinerInequality),
        "sigma" => matches!(f, Functional::CrudeBalance | Functional::DensityRatio),
        _ => true,
    };
    if !takes(sw.variable.name()) {
        return cerr(format!("operation {} has no parameter `{}` to sweep", f.name(), sw.variable.name()));
    }
    let name = sw.variable.name();
    let mut out = Evaluation::default();
    if f == Functional::DensityRatio && sw.variable == SweepVariable::Sigma {
        // The sweep values are the σ sequence of a single extrapolation.
        let op = Operation { sigmas: sw.values.clone(), ..op.clone() };
        let prefix = vec![("surface".to_string(), Cell::from(cfg.surface_name.as_str()))];
        return evaluate_once(&cfg.surface, cfg.quadrature, cfg.base_point, &op, settings, prefix);
    }
    let mut residuals = Vec::new();
    for &x in &sw.values {
        let mut op = op.clone();
        let mut spec = cfg.surface;
        let mut quadrature = cfg.quadrature;
        match sw.variable {
            SweepVariable::Rho => op.rho = Some(x),
            SweepVariable::Sigma => op.sigma = Some(x),
            SweepVariable::T => spec = with_t(&cfg.surface, x)?,
            SweepVariable::Resolution => quadrature = quadrature.with_cells(x as usize),
        }
        let prefix = vec![("surface".to_string(), Cell::from(cfg.surface_name.as_str())), (name.to_string(), Cell::from(x))];
        let ev = evaluate_once(&spec, quadrature, cfg.base_point, &op, settings, prefix)?;
        if let Some(r) = ev.rows.first().and_then(|row| row.iter().find(|(k, _)| k == "residual")) {
            if let Cell::Num(v) = r.1 {
                residuals.push((quadrature.base_cells_per_axis, v));
            }
        }
        out.merge(ev);
    }
    if sw.variable == SweepVariable::Resolution {
        flag_convergence(&mut out, &residuals);
    }
    Ok(out)
}

/// Adds `converging` (|residual| non-increasing up to rounding) and the
/// observed order between consecutive resolutions.
fn flag_convergence(ev: &mut Evaluation, residuals: &[(usize, f64)]) {
    if residuals.len() != ev.rows.len() {
        return;
    }
    for (i, row) in ev.rows.iter_mut().enumerate() {
        let scale = row.iter().find(|(k, _)| k == "scale").and_then(|(_, c)| if let Cell::Num(v) = c { Some(*v) } else { None }).unwrap_or(1.0);
        let (order, ok) = if i == 0 {
            (f64::NAN, true)
        } else {
            let (prev, cur) = (residuals[i - 1].1.abs(), residuals[i].1.abs());
            let ok = cur <= prev + 1e-13 * scale;
            (observed_order(&residuals[i - 1..=i]).unwrap_or(f64::NAN), ok)
        };
        if !ok {
            ev.summary.push(format!("non-monotone residual at resolution {}: {:.3e} after {:.3e}", residuals[i].0, residuals[i].1, residuals[i - 1].1));
        }
        row.push(("observed_order".into(), order.into()));
        row.push(("converging".into(), ok.into()));
    }
}

/// Builds a table from rows that must share their column names.
pub fn table(rows: &[Row]) -> Result<Table, ConfigError> {
    let Some(first) = rows.first() else {
        return Ok(Table::default());
    };
    let header: Vec<String> = first.iter().map(|(k, _)| k.clone()).collect();
    let mut t = Table::new(header.clone());
    for row in rows {
        let keys: Vec<&String> = row.iter().map(|(k, _)| k).collect();
        if keys.len() != header.len() || keys.iter().zip(&header).any(|(a, b)| *a != b) {
            return cerr("rows of this sweep have different columns; sweep one functional with fixed settings");
        }
        t.push(row.iter().map(|(_, c)| c.clone()).collect());
    }
    Ok(t)
}
