mod config;
mod csv;
mod ops;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use willmore_core::quadrature::with_threads;
use willmore_core::verify::{verify, VerifyOptions};
use willmore_core::QuadratureSpec;

use crate::config::{ConfigError, RunConfig};
use crate::csv::{Cell, Table};
use crate::ops::{Evaluation, Settings};

const COLUMNS: &str = "\
CSV columns (numbers printed with 12 significant digits):
  evaluate / sweep, balance-type functionals:
    surface, [sweep variable], functional, family, cells, [sigma], [rho], holds,
    lhs, rhs, residual, margin, relative_residual, scale, error_bound,
    term_<name>... (signed contributions), check_<name>... (side conditions), warnings
    resolution sweeps add observed_order and converging
  other evaluate / sweep rows start with surface, [sweep variable], functional,
  family, cells, then:
  density_ratio: sigma, area_ratio, weighted_ratio, k_extrapolated, k_weighted
    (the k columns are the running sigma^2 extrapolation up to that row)
  willmore_energy: willmore, quarter_willmore, error_bound, budget_exceeded
  embeddedness_criterion: embedded, then the balance columns
  equality-case: surface, pairs, max_residual, min_mean_curvature
  verify: item, status, value, bound, threshold, seconds, detail

Exit codes: 0 all claims hold, 1 a mathematical claim is violated, 2 input error.";

#[derive(Parser, Debug)]
#[command(name = "willmore", version, about = "Willmore-type energies and monotonicity balances on surfaces in H^3 and S^3", after_help = COLUMNS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of standard output (overrides `[output]`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base cells per chart axis (overrides `[quadrature] cells`).
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Gauss points per cell axis (overrides `[quadrature] gauss`).
    #[arg(long, global = true)]
    gauss: Option<usize>,
    /// Relative slack for evaluate and sweep; threshold multiplier for verify.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled nodes and random draws.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the `[operation]` of a configuration once.
    Evaluate,
    /// Evaluate the `[operation]` over the `[sweep]` values.
    Sweep,
    /// Run the verification matrix, or one item, surface or check of it.
    Verify {
        /// `all`, a full item name, a corpus surface or a check name.
        item: Option<String>,
    },
    /// Equality-case residual for the `[surface]` of a configuration.
    EqualityCase {
        /// Number of random node pairs.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

const DEFAULT_SLACK: f64 = 1e-5;

enum Outcome {
    Pass,
    Violation,
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let Some(path) = &cli.config else {
        return Err(ConfigError("this subcommand needs --config <FILE>".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_text(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
    cfg.quadrature = quadrature(cli, cfg.quadrature)?;
    Ok(cfg)
}

fn quadrature(cli: &Cli, mut q: QuadratureSpec) -> Result<QuadratureSpec, ConfigError> {
    if let Some(c) = cli.cells {
        q.base_cells_per_axis = c;
    }
    if let Some(g) = cli.gauss {
        q.gauss_points_per_cell_axis = g;
    }
    q.validate()?;
    Ok(q)
}

fn write_output(table: &Table, path: Option<&Path>) -> Result<(), ConfigError> {
    let text = table.render();
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| ConfigError(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| ConfigError(format!("cannot write output: {e}")))
        }
    }
}

fn finish(ev: Evaluation, out: Option<&Path>) -> Result<Outcome, ConfigError> {
    let table = ops::table(&ev.rows)?;
    write_output(&table, out)?;
    for line in &ev.summary {
        eprintln!("{line}");
    }
    for v in &ev.violations {
        eprintln!("VIOLATION {v}");
    }
    Ok(if ev.violations.is_empty() { Outcome::Pass } else { Outcome::Violation })
}

fn run(cli: &Cli) -> Result<Outcome, ConfigError> {
    let settings = Settings { tolerance: cli.tolerance.unwrap_or(DEFAULT_SLACK), seed: cli.seed };
    if !(settings.tolerance >= 0.0) {
        return Err(ConfigError("--tolerance must be non-negative".into()));
    }
    match &cli.command {
        Command::Evaluate => {
            let cfg = load(cli)?;
            let out = cli.out.clone().or(cfg.output.clone());
            finish(ops::evaluate(&cfg, settings)?, out.as_deref())
        }
        Command::Sweep => {
            let cfg = load(cli)?;
            let out = cli.out.clone().or(cfg.output.clone());
            finish(ops::sweep(&cfg, settings)?, out.as_deref())
        }
        Command::EqualityCase { pairs } => {
            let cfg = load(cli)?;
            let out = cli.out.clone().or(cfg.output.clone());
            let pairs = pairs.or(cfg.operation.as_ref().map(|o| o.pairs)).unwrap_or(config::DEFAULT_PAIRS);
            let surface = cfg.surface.build_with(cfg.quadrature)?;
            let prefix = vec![("surface".to_string(), Cell::from(cfg.surface_name.as_str()))];
            finish(ops::equality_case(&cfg.surface, &surface, pairs, cli.seed, prefix)?, out.as_deref())
        }
        Command::Verify { item } => {
            let base = match &cli.config {
                Some(_) => load(cli)?.quadrature,
                None => quadrature(cli, QuadratureSpec::default())?,
            };
            let opts = VerifyOptions {
                quadrature: base,
                tolerance_scale: cli.tolerance.unwrap_or(1.0),
                filter: item.clone(),
                seed: cli.seed,
                ..VerifyOptions::default()
            };
            let items = verify(&opts)?;
            let mut t = Table::new(["item", "status", "value", "bound", "threshold", "seconds", "detail"].map(String::from).to_vec());
            for i in &items {
                let bound = match i.bound {
                    willmore_core::verify::Bound::AtMost => "at_most",
                    willmore_core::verify::Bound::AtLeast => "at_least",
                };
                t.push(vec![
                    i.name.as_str().into(),
                    i.status().into(),
                    i.value.into(),
                    bound.into(),
                    i.threshold.into(),
                    i.seconds.into(),
                    i.detail.as_str().into(),
                ]);
                eprintln!("{} {} {:.3e} ({})", i.status(), i.name, i.value, i.detail);
            }
            write_output(&t, cli.out.as_deref())?;
            let failed = items.iter().filter(|i| !i.passed).count();
            eprintln!("{} items, {failed} failed", items.len());
            Ok(if failed == 0 { Outcome::Pass } else { Outcome::Violation })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(ConfigError("--threads must be at least 1".into())),
        Some(n) => with_threads(n, || run(&cli)),
        None => run(&cli),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
