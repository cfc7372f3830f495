use std::io::Write;
use std::process::{Command, Output};

use reuse_risk::report::Report;
use reuse_risk_cli::commands::{simulate, Job};
use reuse_risk_cli::{parse_and_validate, CliError};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reuse-risk")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn cell(report: &Report, table: &str, row: usize, col: &str) -> f64 {
    let t = report.table(table).unwrap();
    t.rows[row][t.column(col).unwrap()].parse().unwrap()
}

#[test]
fn capacity_emits_reference_row() {
    let out = ok(&["capacity", "--n", "10000", "--k", "2000", "--ell", "550", "--p-tol", "0.05"]);
    assert!(out.lines().any(|l| l == "0.275,550,24311"), "{out}");
}

#[test]
fn missing_parameter_is_a_validation_error() {
    let out = bin(&["capacity", "--k", "2000"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("`n`"), "{err}");
    assert!(err.contains("`ell`"), "every violation is listed: {err}");
}

#[test]
fn flags_override_config_values() {
    let f = config("[simulate]\ndesign = \"shared-control\"\nreps = 1000\nm = 3\n");
    let path = f.path().to_str().unwrap();
    let cfg = parse_and_validate(["reuse-risk", "simulate", "--config", path, "--reps", "5000"]).unwrap();
    match cfg.job {
        Job::Simulate(simulate::Config { reps, .. }) => assert_eq!(reps, 5000),
        other => panic!("{other:?}"),
    }
    assert_eq!(cfg.params["m"], "3");
}

#[test]
fn unknown_config_keys_are_all_rejected() {
    let f = config("colour = 1\n[capacity]\nn = 10\nsize = 3\n[plot]\nx = 1\n");
    let err = parse_and_validate(["reuse-risk", "capacity", "--config", f.path().to_str().unwrap()]).unwrap_err();
    let CliError::Validation(errs) = err else { panic!("{err:?}") };
    let text = errs.join("\n");
    for needle in ["colour", "size", "[plot]", "`k`"] {
        assert!(text.contains(needle), "missing {needle}: {text}");
    }
}

#[test]
fn zero_replications_is_a_runtime_error() {
    let out = bin(&["simulate", "--design", "shared-control", "--reps", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("replications must be ≥ 1"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin(&["bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["capacity", "--seed", "-1"]).status.code(), Some(2));
    assert_eq!(bin(&["power", "--delta", "0.5", "--n1", "10", "--n2", "10", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn stoploss_sweep_matches_closed_form() {
    let text = ok(&["stoploss", "--alpha", "0.05", "--p2g1", "0,0.25,0.5,0.75,1"]);
    let r = Report::from_text(&text).unwrap();
    let t = r.table("stop_loss").unwrap();
    assert_eq!(t.rows.len(), 15);
    for row in t.rows.iter().filter(|row| row[1] == "1") {
        let c: f64 = row[0].parse().unwrap();
        let p: f64 = row[2].parse().unwrap();
        assert!((p - 0.05 * c).abs() < 1e-15, "{row:?}");
    }
    let ordering = r.table("ordering").unwrap();
    assert!(ordering.rows.iter().all(|row| row[2] == "a_smaller"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["simulate", "--design", "shared-control", "--reps", "500", "--m", "3", "--seed", "9"];
    assert_eq!(bin(&args).stdout, bin(&args).stdout);
    let other = ["simulate", "--design", "shared-control", "--reps", "500", "--m", "3", "--seed", "10"];
    assert_ne!(bin(&args).stdout, bin(&other).stdout);
    let sub = ["subsample", "--n", "50", "--sizes", "10,10", "--seed", "4"];
    assert_eq!(bin(&sub).stdout, bin(&sub).stdout);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    let out = ok(&["reuse", "--rates", "0.1,0.2", "--out", path.to_str().unwrap()]);
    assert!(out.is_empty());
    let r = Report::from_text(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r.header_value("lambda"), Some("0.30000000000000004"));
}

#[test]
fn survival_defaults_to_hazard_parameterization() {
    let r = Report::from_text(&ok(&["simulate", "--design", "survival", "--reps", "50"])).unwrap();
    let shape: f64 = r.header_value("weibull_shape").unwrap().parse().unwrap();
    assert!((shape - 0.2181586316831966).abs() < 1e-9);
    let bad = bin(&["simulate", "--design", "survival", "--effect", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn portfolio_example_prefers_full_data() {
    let text = ok(&[
        "optimize", "--delta", "0.5,0.5", "--n1", "100,100", "--n2", "50,50", "--dataset-size", "100",
        "--points", "0.05:1,0.05:1;0.05:0.5,0.05:0.5",
    ]);
    let r = Report::from_text(&text).unwrap();
    let best: f64 = r.header_value("best_utility").unwrap().parse().unwrap();
    assert!((best + 0.364).abs() < 0.01, "{best}");
    assert!((cell(&r, "surface", 1, "utility") + 0.606).abs() < 0.01);
}

/// Every public operation, the command that reaches it, and a marker of its
/// output. Each report must also survive a round trip in both formats.
const COVERAGE: &[(&str, &[&str], &str)] = &[
    ("dist::bernoulli_sum_pmf", &["error-dist", "--rates", "0.1,0.2"], "[independent_pmf]"),
    ("dist::Hypergeometric", &["capacity", "--n", "20", "--k", "5", "--ell", "3", "--method", "exact_tail", "--overlap-pmf", "true"], "[overlap_pmf]"),
    ("dist::poisson_pmf", &["reuse", "--rates", "0.1,0.2"], "poisson"),
    ("error_calculus::two_event_distribution", &["error-dist"], "[pmf]"),
    ("error_calculus::pcer/fwer/fdr_global_null", &["error-dist"], "pcer,fwer,fdr"),
    ("error_calculus::expected_utility", &["error-dist", "--utility", "table", "--utility-table", "0,-1,-5"], "expected_utility"),
    ("error_calculus::shared_control_correlation", &["error-dist", "--arm-size", "100", "--shared", "50"], "shared_control_correlation: 0.25"),
    ("error_calculus::stop_loss_curve", &["stoploss"], "[stop_loss]"),
    ("error_calculus::stop_loss_compare", &["stoploss"], "[ordering]"),
    ("error_calculus::stop_loss_premium", &["stoploss", "--pmf-a", "0.9,0.1", "--pmf-b", "0.95,0,0.05", "--retention", "1"], "premium_b: 0.05"),
    ("power::power/type2_error", &["power", "--delta", "0.5", "--n1", "100", "--n2", "50"], "type2_error"),
    ("power::required_sample_size", &["power", "--kind", "z", "--delta", "0.5", "--target-power", "0.8"], "0.8,1,63,63"),
    ("power::portfolio_expected_type2", &["power", "--delta", "0.5", "--n1", "100,50", "--n2", "50,50"], "expected_type2_total"),
    ("capacity::max_studies/capacity_table", &["capacity", "--n", "10000", "--k", "2000", "--ell", "500,550"], "[capacity]"),
    ("capacity::guaranteed_overlap_two", &["capacity", "--n", "100", "--k", "60", "--ell", "40"], "guaranteed_overlap_two: 20"),
    ("capacity::pigeonhole_capacity", &["capacity", "--n", "10", "--k", "3", "--ell", "2", "--method", "exact_tail"], "pigeonhole_draws: 121"),
    ("capacity::min_k_for_overlap_fraction", &["capacity", "--n", "100", "--k", "60", "--ell", "40", "--lambda", "0.5"], "min_k_for_lambda"),
    ("capacity::unit_reuse", &["reuse", "--rate", "0.1", "--studies", "4"], "lecam_bound"),
    ("subsample::allocate/overlap_matrix", &["subsample", "--n", "30", "--sizes", "10,10,10", "--strategy", "disjoint_partition"], "[overlap]"),
    ("subsample::empirical_max_overlap", &["subsample", "--n", "30", "--sizes", "10,10", "--audit-ell", "5", "--audit-trials", "100"], "empirical_max_overlap"),
    ("simulation::run_shared_control", &["simulate", "--design", "shared-control", "--reps", "100", "--control-mode", "subsample", "--control-subsample", "50"], "[error_count_pmf]"),
    ("simulation::run_survival_reuse", &["simulate", "--design", "survival", "--reps", "100", "--mode", "gatekeep_split"], "[contingency]"),
    ("simulation::weibull_ph_for_mean", &["simulate", "--design", "survival", "--reps", "10", "--rate", "2", "--mean", "2.5"], "weibull_scale"),
    ("portfolio::grid_search", &["optimize", "--delta", "0.5", "--n1", "100", "--n2", "50", "--dataset-size", "100", "--alphas", "0.01,0.05"], "[surface]"),
    ("portfolio::grid_search_points", &["optimize", "--delta", "0.5", "--n1", "100", "--n2", "50", "--dataset-size", "100", "--points", "0.05:1;0.05:0.5"], "best_utility"),
    ("portfolio::evaluate (monte carlo)", &["optimize", "--delta", "0.5", "--n1", "50", "--n2", "50", "--dataset-size", "100", "--mode", "monte_carlo", "--reps", "200"], "best_stderr"),
    ("portfolio::qaly_utility", &["optimize", "--delta", "0.5", "--n1", "100", "--n2", "50", "--dataset-size", "100", "--prior-null", "0.5", "--utility", "qaly"], "utility: qaly"),
];

#[test]
fn every_operation_is_reachable_and_reports_round_trip() {
    for (op, args, marker) in COVERAGE {
        let text = ok(args);
        assert!(text.contains(marker), "{op}: missing {marker:?} in\n{text}");
        let parsed = Report::from_text(&text).unwrap_or_else(|e| panic!("{op}: {e}"));
        assert_eq!(parsed.to_text(), text, "{op}: text round trip");

        let mut obj_args = args.to_vec();
        obj_args.extend(["--format", "obj"]);
        let json = ok(&obj_args);
        let from_json = Report::from_json(&json).unwrap_or_else(|e| panic!("{op}: {e}"));
        assert_eq!(from_json, parsed, "{op}: formats disagree");
    }
}
