use std::path::PathBuf;
use std::process::{Command, Output};

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("cli_{name}.ini"));
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_willmore")).args(args).output().unwrap()
}

fn run_config(name: &str, sub: &str, text: &str, extra: &[&str]) -> Output {
    let path = write_config(name, text);
    let mut args = vec![sub, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Column `name` of every data row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn chen_on_a_sphere_is_sharp() {
    let o = run_config("chen", "evaluate", "[surface]\ncorpus = sphere_h3_1\n[operation]\nname = chen_inequality\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let margin: f64 = column(&out, "margin")[0].parse().unwrap();
    let scale: f64 = column(&out, "scale")[0].parse().unwrap();
    assert!(margin.abs() <= 1e-10 * scale, "margin {margin}");
    assert_eq!(column(&out, "holds"), ["true"]);
}

#[test]
fn misspelled_family_key_is_named() {
    let o = run_config("typo", "evaluate", "[surface]\nfamly = geodesic_sphere\nradius = 1\n[operation]\nname = chen_inequality\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("famly"), "{}", stderr(&o));
}

#[test]
fn unknown_section_is_rejected() {
    let o = run_config("section", "evaluate", "[surface]\ncorpus = sphere_h3_1\n[operaton]\nname = chen_inequality\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("operaton"));
}

#[test]
fn conjugate_radius_on_the_sphere_is_an_input_error() {
    let text = "[surface]\ncorpus = sphere_s3_pi/3\n[operation]\nname = sphere_finer_inequality\nrho = 3.2\n";
    let o = run_config("conjugate", "evaluate", text, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("π"), "{}", stderr(&o));
}

#[test]
fn hyperbolic_only_functional_rejects_the_sphere() {
    let text = "[surface]\ncorpus = sphere_s3_pi/3\n[operation]\nname = finer_inequality\nrho = 1\n";
    assert_eq!(run_config("finer_s3", "evaluate", text, &[]).status.code(), Some(2));
}

#[test]
fn density_sweep_on_the_tangent_pair_tends_to_two() {
    let text = "[surface]\ncorpus = tangent_pair_h3\n[operation]\nname = density_ratio\n[sweep]\nvariable = sigma\nvalues = 0.04, 0.02, 0.01\n";
    let o = run_config("density", "sweep", text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k: Vec<String> = column(&stdout(&o), "k_extrapolated");
    assert_eq!(k.len(), 3);
    let last: f64 = k[2].parse().unwrap();
    assert!((last - 2.0).abs() < 0.02, "k = {last}");
}

#[test]
fn resolution_sweep_converges() {
    let text = "[surface]\ncorpus = perturbed_h3\n[operation]\nname = crude_balance\nsigma = 0.3\nrho = 1.5\n[sweep]\nvariable = resolution\nvalues = 4, 8\n";
    let o = run_config("resolution", "sweep", text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(column(&out, "resolution"), ["4", "8"]);
    assert_eq!(column(&out, "converging"), ["true", "true"]);
}

#[test]
fn empty_sweep_range_is_an_input_error() {
    let text = "[surface]\ncorpus = sphere_h3_1\n[operation]\nname = crude_balance\nsigma = 0.2\nrho = 1\n[sweep]\nvariable = rho\nstart = 1\nstop = 2\nsteps = 0\n";
    let o = run_config("empty", "sweep", text, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty sweep range"));
}

#[test]
fn sweeping_a_parameter_the_operation_lacks_is_rejected() {
    let text = "[surface]\ncorpus = sphere_h3_1\n[operation]\nname = chen_inequality\n[sweep]\nvariable = rho\nvalues = 1, 2\n";
    assert_eq!(run_config("nosuch", "sweep", text, &[]).status.code(), Some(2));
}

#[test]
fn verify_runs_a_single_item() {
    let o = run(&["verify", "sphere_h3_1:chen_inequality"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(column(&out, "item"), ["sphere_h3_1:chen_inequality"]);
    assert_eq!(column(&out, "status"), ["PASS"]);
}

#[test]
fn tightened_verify_reports_violations() {
    let o = run(&["verify", "sphere_h3_1", "--tolerance", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(column(&stdout(&o), "status").iter().any(|s| s == "FAIL"));
}

#[test]
fn unknown_verify_item_is_an_input_error() {
    let o = run(&["verify", "no_such_item"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_is_an_input_error() {
    assert_eq!(run(&["evaluate"]).status.code(), Some(2));
}

#[test]
fn equality_case_separates_sphere_and_torus() {
    let sphere = run_config("eq_sphere", "equality-case", "[surface]\ncorpus = sphere_h3_1\n", &["--pairs", "200"]);
    assert_eq!(sphere.status.code(), Some(0), "{}", stderr(&sphere));
    let r: f64 = column(&stdout(&sphere), "max_residual")[0].parse().unwrap();
    assert!(r <= 1e-8);
    let torus = run_config("eq_torus", "equality-case", "[surface]\ncorpus = torus_h3\n", &["--pairs", "200"]);
    assert_eq!(torus.status.code(), Some(0));
    let r: f64 = column(&stdout(&torus), "max_residual")[0].parse().unwrap();
    assert!(r >= 0.01);
}

#[test]
fn output_is_identical_across_thread_counts() {
    let text = "[surface]\ncorpus = perturbed_s3\n[operation]\nname = crude_balance\nsigma = 0.2\nrho = 1.2\n[sweep]\nvariable = rho\nvalues = 0.8, 1.2\n";
    let one = run_config("threads1", "sweep", text, &["--threads", "1"]);
    let four = run_config("threads4", "sweep", text, &["--threads", "4"]);
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn output_file_takes_the_csv() {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli_out.csv");
    let _ = std::fs::remove_file(&out);
    let o = run_config("outfile", "evaluate", "[surface]\ncorpus = clifford_s3\n[operation]\nname = willmore_energy\n", &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("surface,functional,family,cells,willmore"));
}
