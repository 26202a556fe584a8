//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The full verification matrix runs once single-threaded (timed) and once
//! on four threads; each criterion is then judged from the items of the
//! single-threaded run against the tolerances pinned below.

use std::process::ExitCode;
use std::time::Instant;

use willmore_core::quadrature::with_threads;
use willmore_core::verify::{verify, VerifyItem, VerifyOptions};

const SPHERE_EQUALITY_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-5;
const MIN_ORDER: f64 = 4.0;
const ORDER_FLOOR: f64 = 1e-12;
const DENSITY_TOL: f64 = 0.02;
const SPHERE_EQUALITY_CASE_TOL: f64 = 1e-8;
const TORUS_EQUALITY_CASE_FLOOR: f64 = 0.01;
const DIVERGENCE_TOL: f64 = 1e-6;
const FIRST_VARIATION_TOL: f64 = 1e-5;
const MARGIN_SLACK: f64 = 1e-5;
const SQUARE_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-13;
const TIME_LIMIT_SECONDS: f64 = 600.0;
const THREADS: usize = 4;

fn check_of(item: &VerifyItem) -> &str {
    let rest = item.name.split(':').nth(1).unwrap_or("");
    rest.split('#').next().unwrap_or(rest)
}

fn surface_of(item: &VerifyItem) -> &str {
    item.name.split(':').next().unwrap_or("")
}

struct Criterion<'a> {
    items: Vec<&'a VerifyItem>,
}

impl<'a> Criterion<'a> {
    fn select(all: &'a [VerifyItem], checks: &[&str], surface: impl Fn(&str) -> bool) -> Criterion<'a> {
        Criterion { items: all.iter().filter(|i| checks.contains(&check_of(i)) && surface(surface_of(i))).collect() }
    }

    /// Every item ran, passed its own extra conditions and satisfies `ok`.
    fn judge(&self, ok: impl Fn(&VerifyItem) -> bool) -> (bool, Option<&'a VerifyItem>) {
        let bad = self.items.iter().find(|i| !(i.passed && ok(i))).copied();
        (!self.items.is_empty() && bad.is_none(), bad)
    }

    fn worst(&self) -> f64 {
        self.items.iter().map(|i| i.value.abs()).fold(0.0, f64::max)
    }
}

fn report(n: usize, title: &str, c: &Criterion, ok: impl Fn(&VerifyItem) -> bool, summary: String) -> bool {
    let (pass, bad) = c.judge(ok);
    let status = if pass { "PASS" } else { "FAIL" };
    match bad {
        Some(b) => println!("{status} {n:>2} {title}: {summary}; first failure {} = {:.3e} ({})", b.name, b.value, b.detail),
        None if c.items.is_empty() => println!("{status} {n:>2} {title}: no items ran"),
        None => println!("{status} {n:>2} {title}: {summary}"),
    }
    pass
}

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let start = Instant::now();
    let single = match with_threads(1, || verify(&opts)) {
        Ok(v) => v,
        Err(e) => {
            println!("FAIL verify could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let single_seconds = start.elapsed().as_secs_f64();
    let multi = with_threads(THREADS, || verify(&opts));
    let all = &single[..];
    let any = |_: &str| true;
    let mut pass = true;

    let c = Criterion::select(all, &["sphere_equality"], |s| s.starts_with("sphere_h3"));
    pass &= report(1, "sphere equality in H3 (t = 0.5, 1, 2)", &c, |i| i.value <= SPHERE_EQUALITY_TOL, format!("worst |W/4 - |S| - 4pi| / 4pi = {:.3e} (tol {SPHERE_EQUALITY_TOL:.0e})", c.worst()));

    let c = Criterion::select(all, &["sphere_equality"], |s| s.starts_with("sphere_s3"));
    pass &= report(2, "sphere equality in S3 (t = pi/6, pi/4, pi/3)", &c, |i| i.value <= SPHERE_EQUALITY_TOL, format!("worst |W/4 + |S| - 4pi| / 4pi = {:.3e} (tol {SPHERE_EQUALITY_TOL:.0e})", c.worst()));

    let c = Criterion::select(all, &["crude_balance", "sphere_crude_balance"], any);
    let orders = Criterion::select(all, &["crude_balance_order", "sphere_crude_balance_order"], any);
    let (orders_ok, bad_order) = orders.judge(|i| if i.bound == willmore_core::verify::Bound::AtLeast { i.value >= MIN_ORDER } else { i.value <= ORDER_FLOOR });
    let c3 = report(3, "identity suite", &c, |i| i.value <= IDENTITY_TOL, format!("{} draws, worst relative residual {:.3e} (tol {IDENTITY_TOL:.0e}); {} refinement steps of order >= {MIN_ORDER} or below {ORDER_FLOOR:.0e}: {}", c.items.len(), c.worst(), orders.items.len(), if orders_ok { "ok" } else { "violated" }));
    if let Some(b) = bad_order {
        println!("     order failure {}: {:.3e} ({})", b.name, b.value, b.detail);
    }
    pass &= c3 && orders_ok && !orders.items.is_empty();

    let c = Criterion::select(all, &["density_ratio", "embeddedness"], any);
    let dens = Criterion::select(all, &["density_ratio"], any);
    pass &= report(4, "multiplicity and embeddedness", &c, |i| check_of(i) != "density_ratio" || i.value <= DENSITY_TOL, format!("worst density error {:.3e} (tol {DENSITY_TOL}); embeddedness certificates match on {} closed H3 members", dens.worst(), c.items.len() - dens.items.len()));

    let c = Criterion::select(all, &["equality_case"], any);
    pass &= report(
        5,
        "equality-case rigidity",
        &c,
        |i| if surface_of(i).starts_with("sphere_h3") { i.value <= SPHERE_EQUALITY_CASE_TOL } else { i.value >= TORUS_EQUALITY_CASE_FLOOR },
        c.items.iter().map(|i| format!("{} {:.3e}", surface_of(i), i.value)).collect::<Vec<_>>().join(", "),
    );

    let c = Criterion::select(all, &["divergence"], any);
    pass &= report(6, "space-form divergence", &c, |i| i.value <= DIVERGENCE_TOL, format!("worst |div X - 2V| = {:.3e} over {} surfaces (tol {DIVERGENCE_TOL:.0e})", c.worst(), c.items.len()));

    let c = Criterion::select(all, &["first_variation"], any);
    pass &= report(7, "first variation", &c, |i| i.value <= FIRST_VARIATION_TOL, format!("worst relative residual {:.3e} incl. caps (tol {FIRST_VARIATION_TOL:.0e})", c.worst()));

    let c = Criterion::select(all, &["finer_inequality", "sphere_finer_inequality", "boundary_mono", "chen_inequality"], any);
    let low = c.items.iter().map(|i| i.value).fold(f64::INFINITY, f64::min);
    pass &= report(8, "inequality margins", &c, |i| i.value >= -MARGIN_SLACK, format!("{} reports, smallest margin/scale {low:.3e} (slack {MARGIN_SLACK:.0e}); pointwise claim checked in the finer reports", c.items.len()));

    let c = Criterion::select(all, &["square_decomposition", "weight_identity"], any);
    let sq = Criterion::select(all, &["square_decomposition"], any);
    let wt = Criterion::select(all, &["weight_identity"], any);
    pass &= report(
        9,
        "pointwise algebra",
        &c,
        |i| if check_of(i) == "square_decomposition" { i.value <= SQUARE_TOL } else { i.value <= WEIGHT_TOL },
        format!("square decomposition worst {:.3e} (tol {SQUARE_TOL:.0e}), weight identity worst {:.3e} (tol {WEIGHT_TOL:.0e})", sq.worst(), wt.worst()),
    );

    let all_passed = single.iter().all(|i| i.passed);
    let identical = match &multi {
        Ok(m) => {
            m.len() == single.len()
                && m.iter().zip(&single).all(|(a, b)| a.name == b.name && a.value.to_bits() == b.value.to_bits() && a.passed == b.passed && a.detail == b.detail)
        }
        Err(_) => false,
    };
    let c10 = all_passed && identical && single_seconds < TIME_LIMIT_SECONDS;
    println!(
        "{} 10 verify all: {} items, {} failed, {single_seconds:.1} s single-threaded (limit {TIME_LIMIT_SECONDS} s), bit-identical on {THREADS} threads: {identical}",
        if c10 { "PASS" } else { "FAIL" },
        single.len(),
        single.iter().filter(|i| !i.passed).count()
    );
    pass &= c10;

    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
