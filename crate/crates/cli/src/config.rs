//! Run configuration: flat `key = value` text with `[section]` headers.
//!
//! ```text
//! [surface]
//! family = geodesic_sphere
//! curvature = -1
//! radius = 1
//!
//! [operation]
//! name = crude_balance
//! sigma = 0.1
//! rho = 1.5
//! ```
//!
//! `#` and `;` start comments. Unknown sections and keys are rejected, as
//! are repeated keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use willmore_core::library::{corpus_item, SurfaceSpec};
use willmore_core::QuadratureSpec;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<willmore_core::Error> for ConfigError {
    fn from(e: willmore_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

const SECTIONS: [&str; 6] = ["surface", "base_point", "operation", "sweep", "quadrature", "output"];

/// Raw sections in file order of keys.
#[derive(Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, Vec<(String, String)>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut out = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = i + 1;
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError(format!("line {at}: malformed section header `{line}`")))?.trim();
                if !SECTIONS.contains(&name) {
                    return err(format!("line {at}: unknown section `[{name}]` (expected one of {})", SECTIONS.join(", ")));
                }
                if out.sections.contains_key(name) {
                    return err(format!("line {at}: section `[{name}]` appears twice"));
                }
                out.sections.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {at}: expected `key = value`, got `{line}`"));
            };
            let Some(section) = &current else {
                return err(format!("line {at}: key `{}` outside any section", k.trim()));
            };
            let entries = out.sections.get_mut(section).expect("section was inserted");
            let key = k.trim().to_string();
            if entries.iter().any(|(existing, _)| *existing == key) {
                return err(format!("line {at}: key `{key}` repeated in `[{section}]`"));
            }
            entries.push((key, v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn section(&self, name: &str) -> Option<&[(String, String)]> {
        self.sections.get(name).map(|v| v.as_slice())
    }
}

fn get<'a>(entries: &'a [(String, String)], key: &str) -> Option<&'a str> {
    entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn only(entries: &[(String, String)], section: &str, allowed: &[&str]) -> Result<()> {
    for (k, _) in entries {
        if !allowed.contains(&k.as_str()) {
            return err(format!("unknown key `{k}` in `[{section}]` (allowed: {})", allowed.join(", ")));
        }
    }
    Ok(())
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| ConfigError(format!("bad value `{v}` for key `{key}`: expected a number")))?;
    if !x.is_finite() {
        return err(format!("bad value `{v}` for key `{key}`: must be finite"));
    }
    Ok(x)
}

pub fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| ConfigError(format!("bad value `{v}` for key `{key}`: expected a nonnegative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => err(format!("bad value `{v}` for key `{key}`: expected true or false")),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_f64(key, s)).collect()
}

/// Where the base point `o` sits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePoint {
    /// The family's designated anchor.
    Anchor,
    /// A point on the boundary circle of a cap.
    Boundary,
    Chart { chart: usize, u: f64, v: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    WillmoreEnergy,
    CrudeBalance,
    SphereCrudeBalance,
    MonoIdentity,
    FinerInequality,
    SphereFinerInequality,
    BoundaryMono,
    ChenInequality,
    EmbeddednessCriterion,
    DensityRatio,
    FirstVariation,
    SquareDecomposition,
    EqualityCaseResidual,
}

impl Functional {
    pub const ALL: [Functional; 13] = [
        Functional::WillmoreEnergy,
        Functional::CrudeBalance,
        Functional::SphereCrudeBalance,
        Functional::MonoIdentity,
        Functional::FinerInequality,
        Functional::SphereFinerInequality,
        Functional::BoundaryMono,
        Functional::ChenInequality,
        Functional::EmbeddednessCriterion,
        Functional::DensityRatio,
        Functional::FirstVariation,
        Functional::SquareDecomposition,
        Functional::EqualityCaseResidual,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Functional::WillmoreEnergy => "willmore_energy",
            Functional::CrudeBalance => "crude_balance",
            Functional::SphereCrudeBalance => "sphere_crude_balance",
            Functional::MonoIdentity => "mono_identity",
            Functional::FinerInequality => "finer_inequality",
            Functional::SphereFinerInequality => "sphere_finer_inequality",
            Functional::BoundaryMono => "boundary_mono",
            Functional::ChenInequality => "chen_inequality",
            Functional::EmbeddednessCriterion => "embeddedness_criterion",
            Functional::DensityRatio => "density_ratio",
            Functional::FirstVariation => "first_variation",
            Functional::SquareDecomposition => "pointwise_square_decomposition",
            Functional::EqualityCaseResidual => "equality_case_residual",
        }
    }

    fn parse(name: &str) -> Result<Functional> {
        Functional::ALL.into_iter().find(|f| f.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Functional::ALL.iter().map(|f| f.name()).collect();
            ConfigError(format!("unknown operation `{name}` (expected one of {})", names.join(", ")))
        })
    }

    /// Operation keys besides `name`.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Functional::WillmoreEnergy | Functional::ChenInequality | Functional::FirstVariation => &[],
            Functional::CrudeBalance => &["sigma", "rho", "k"],
            Functional::SphereCrudeBalance => &["rho", "k"],
            Functional::MonoIdentity => &["k"],
            Functional::FinerInequality => &["rho", "nodes"],
            Functional::SphereFinerInequality => &["rho"],
            Functional::BoundaryMono => &[],
            Functional::EmbeddednessCriterion => &[],
            Functional::DensityRatio => &["sigmas"],
            Functional::SquareDecomposition => &["nodes"],
            Functional::EqualityCaseResidual => &["pairs"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    Rho,
    Sigma,
    /// The family's size parameter; see [`with_t`].
    T,
    Resolution,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Rho => "rho",
            SweepVariable::Sigma => "sigma",
            SweepVariable::T => "t",
            SweepVariable::Resolution => "resolution",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operation {
    pub functional: Functional,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub k: Option<usize>,
    pub sigmas: Vec<f64>,
    pub nodes: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub surface: SurfaceSpec,
    /// Corpus name when the surface was given by `corpus = …`.
    pub surface_name: String,
    pub base_point: BasePoint,
    pub operation: Option<Operation>,
    pub sweep: Option<Sweep>,
    pub quadrature: QuadratureSpec,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_SIGMAS: [f64; 3] = [0.04, 0.02, 0.01];
pub const DEFAULT_NODES: usize = 10_000;
pub const DEFAULT_PAIRS: usize = 2_000;

impl RunConfig {
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let raw = RawConfig::parse(text)?;
        let Some(surface) = raw.section("surface") else {
            return err("missing section `[surface]`");
        };
        let (surface, surface_name) = if let Some(name) = get(surface, "corpus") {
            only(surface, "surface", &["corpus"])?;
            (corpus_item(name)?.spec, name.to_string())
        } else {
            let spec = SurfaceSpec::from_pairs(surface)?;
            (spec, spec.family.kind().name().to_string())
        };

        let base_point = match raw.section("base_point") {
            None => BasePoint::Anchor,
            Some(e) => {
                only(e, "base_point", &["chart", "u", "v", "boundary"])?;
                match (get(e, "boundary"), get(e, "chart")) {
                    (Some(b), None) if e.len() == 1 => {
                        if parse_bool("boundary", b)? {
                            BasePoint::Boundary
                        } else {
                            BasePoint::Anchor
                        }
                    }
                    (None, Some(c)) => {
                        let num = |k: &str| get(e, k).ok_or_else(|| ConfigError(format!("missing key `{k}` in `[base_point]`"))).and_then(|v| parse_f64(k, v));
                        BasePoint::Chart { chart: parse_usize("chart", c)?, u: num("u")?, v: num("v")? }
                    }
                    (None, None) if e.is_empty() => BasePoint::Anchor,
                    _ => return err("`[base_point]` takes either `boundary = true` or `chart`, `u`, `v`"),
                }
            }
        };

        let operation = match raw.section("operation") {
            None => None,
            Some(e) => {
                let name = get(e, "name").ok_or_else(|| ConfigError("missing key `name` in `[operation]`".into()))?;
                let functional = Functional::parse(name)?;
                let mut allowed = vec!["name"];
                allowed.extend_from_slice(functional.keys());
                only(e, "operation", &allowed)?;
                let opt = |k: &str| get(e, k).map(|v| parse_f64(k, v)).transpose();
                Some(Operation {
                    functional,
                    sigma: opt("sigma")?,
                    rho: opt("rho")?,
                    k: get(e, "k").map(|v| parse_usize("k", v)).transpose()?,
                    sigmas: match get(e, "sigmas") {
                        Some(v) => parse_list("sigmas", v)?,
                        None => DEFAULT_SIGMAS.to_vec(),
                    },
                    nodes: get(e, "nodes").map(|v| parse_usize("nodes", v)).transpose()?.unwrap_or(DEFAULT_NODES),
                    pairs: get(e, "pairs").map(|v| parse_usize("pairs", v)).transpose()?.unwrap_or(DEFAULT_PAIRS),
                })
            }
        };

        let sweep = match raw.section("sweep") {
            None => None,
            Some(e) => {
                only(e, "sweep", &["variable", "values", "start", "stop", "steps"])?;
                let variable = match get(e, "variable") {
                    Some("rho") => SweepVariable::Rho,
                    Some("sigma") => SweepVariable::Sigma,
                    Some("t") => SweepVariable::T,
                    Some("resolution") => SweepVariable::Resolution,
                    Some(v) => return err(format!("bad value `{v}` for key `variable`: expected rho, sigma, t or resolution")),
                    None => return err("missing key `variable` in `[sweep]`"),
                };
                let values = match (get(e, "values"), get(e, "start"), get(e, "stop"), get(e, "steps")) {
                    (Some(v), None, None, None) => parse_list("values", v)?,
                    (None, Some(a), Some(b), Some(n)) => {
                        let (a, b, n) = (parse_f64("start", a)?, parse_f64("stop", b)?, parse_usize("steps", n)?);
                        match n {
                            0 => Vec::new(),
                            1 => vec![a],
                            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                        }
                    }
                    _ => return err("`[sweep]` needs either `values` or all of `start`, `stop`, `steps`"),
                };
                if values.is_empty() {
                    return err("empty sweep range");
                }
                if variable == SweepVariable::Resolution && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                    return err("resolution sweep values must be positive integers");
                }
                Some(Sweep { variable, values })
            }
        };

        let mut quadrature = QuadratureSpec::default();
        if let Some(e) = raw.section("quadrature") {
            only(e, "quadrature", &["cells", "gauss", "max_depth", "cut_tolerance"])?;
            if let Some(v) = get(e, "cells") {
                quadrature.base_cells_per_axis = parse_usize("cells", v)?;
            }
            if let Some(v) = get(e, "gauss") {
                quadrature.gauss_points_per_cell_axis = parse_usize("gauss", v)?;
            }
            if let Some(v) = get(e, "max_depth") {
                quadrature.max_refine_depth = parse_usize("max_depth", v)? as u32;
            }
            if let Some(v) = get(e, "cut_tolerance") {
                quadrature.cut_tolerance = parse_f64("cut_tolerance", v)?;
            }
        }

        let output = match raw.section("output") {
            None => None,
            Some(e) => {
                only(e, "output", &["path"])?;
                get(e, "path").map(PathBuf::from)
            }
        };

        Ok(RunConfig { surface, surface_name, base_point, operation, sweep, quadrature, output })
    }
}

/// The spec with its size parameter set to `t`: the radius of spheres,
/// caps and perturbed spheres, the first radius of a pair, the tube radius
/// of a torus of revolution and the angle of a Clifford torus.
pub fn with_t(spec: &SurfaceSpec, t: f64) -> Result<SurfaceSpec> {
    use willmore_core::library::Family;
    let family = match spec.family {
        Family::GeodesicSphere { .. } => Family::GeodesicSphere { radius: t },
        Family::TangentSpherePair { second_radius, .. } => Family::TangentSpherePair { radius: t, second_radius },
        Family::TorusOfRevolution { core_radius, .. } => Family::TorusOfRevolution { core_radius, tube_radius: t },
        Family::CliffordTorus { .. } => Family::CliffordTorus { angle: t },
        Family::PerturbedSphere { amplitude, frequency, .. } => Family::PerturbedSphere { radius: t, amplitude, frequency },
        Family::GeodesicCap { opening_angle, .. } => Family::GeodesicCap { radius: t, opening_angle },
    };
    let out = SurfaceSpec { family, ..*spec };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "
            # comment
            [surface]
            family = geodesic_sphere
            curvature = -1
            radius = 1.0

            [operation]
            name = crude_balance
            sigma = 0.1   ; trailing comment
            rho = 1.5

            [sweep]
            variable = rho
            start = 0.5
            stop = 1.5
            steps = 3

            [quadrature]
            cells = 6
        ";
        let c = RunConfig::from_text(text).unwrap();
        let op = c.operation.unwrap();
        assert_eq!(op.functional, Functional::CrudeBalance);
        assert_eq!((op.sigma, op.rho), (Some(0.1), Some(1.5)));
        assert_eq!(c.sweep.unwrap().values, vec![0.5, 1.0, 1.5]);
        assert_eq!(c.quadrature.base_cells_per_axis, 6);
        assert_eq!(c.base_point, BasePoint::Anchor);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let base = "[surface]\ncorpus = sphere_h3_1\n";
        for extra in ["[operation]\nname = chen_inequality\nrho = 1\n", "[extra]\n", "[quadrature]\ncels = 4\n"] {
            assert!(RunConfig::from_text(&format!("{base}{extra}")).is_err(), "{extra}");
        }
        assert!(RunConfig::from_text("[surface]\nfamily = geodesic_sphear\nradius = 1\n").is_err());
        assert!(RunConfig::from_text("[surface]\ncorpus = sphere_h3_1\nradius = 2\n").is_err());
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let text = "[surface]\ncorpus = sphere_h3_1\n[sweep]\nvariable = rho\nvalues =\n";
        let e = RunConfig::from_text(text).unwrap_err();
        assert!(e.0.contains("empty"), "{e}");
    }

    #[test]
    fn t_sweeps_change_the_size_parameter() {
        let spec = corpus_item("torus_h3").unwrap().spec;
        let s = with_t(&spec, 0.3).unwrap();
        assert!(matches!(s.family, willmore_core::library::Family::TorusOfRevolution { tube_radius, .. } if tube_radius == 0.3));
        assert!(with_t(&spec, 2.0).is_err());
    }
}
