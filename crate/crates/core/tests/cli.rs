use std::path::PathBuf;
use std::process::Command;

use cf_invariance::cli::run_command;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = run_command(std::iter::once("cfinv").chain(args.iter().copied()));
    (out.code, out.stdout, out.stderr)
}

fn line<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    stdout.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
}

#[test]
fn analyze_xor_model() {
    let (code, out, _) = run(&["analyze", "--model", &data("xor.scm"), "--target", "Y", "--intervene", "Z", "--given", "Y"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "as_ci_degree"), Some("0/1"));
    assert_eq!(line(&out, "dci_gap{}"), Some("0/1"));
    assert_eq!(line(&out, "dci_gap{Y}"), Some("1/1"));
    assert!(line(&out, "as_ci_witness").is_some());
}

#[test]
fn analyze_parity_function() {
    let (code, out, _) = run(&[
        "analyze", "--model", &data("mod2.scm"), "--target", "Y", "--intervene", "Z",
        "--function-inputs", "X", "--function-table", "0,1,0,1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "as_ci_degree"), Some("1/1"));
    assert_eq!(line(&out, "fci_degree"), Some("1/1"));
    assert_eq!(line(&out, "fci_routes_agree"), Some("true"));
}

#[test]
fn bounds_on_half_observation() {
    let (code, out, _) = run(&["bounds", "--graph", &data("zy.dag"), "--obs", &data("half.obs"), "--target", "Y", "--intervene", "Z"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "degree_min"), Some("0/1"));
    assert_eq!(line(&out, "degree_max"), Some("1/1"));
    assert_eq!(line(&out, "ci_possible"), Some("true"));
    assert_eq!(line(&out, "ci_forced"), Some("false"));
}

#[test]
fn conditional_query_bounds() {
    let base = ["bounds", "--graph", &data("zy.dag"), "--obs", &data("half.obs"), "--target", "Y", "--intervene", "Z"].map(String::from);
    let with = |extra: &[&str]| {
        let args: Vec<String> = base.iter().cloned().chain(extra.iter().map(|s| s.to_string())).collect();
        run(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let (code, out, _) = with(&["--query-value", "0", "--level", "1", "--factual", "0"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "query_min"), Some("1/2"));
    assert_eq!(line(&out, "query_max"), Some("1/2"));
    let (_, out, _) = with(&["--query-value", "0", "--level", "1", "--factual", "0", "--given", "Y=0"]);
    assert_eq!(line(&out, "query_min"), Some("0/1"));
    assert_eq!(line(&out, "query_max"), Some("1/1"));
}

#[test]
fn adjust_on_chain() {
    let (code, out, _) = run(&["adjust", "--graph", &data("chain.dag"), "--exposure", "Z", "--outcome", "Y", "--max-size", "2", "--check", "X"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "valid_sets"), Some("{}"));
    assert_eq!(line(&out, "check_valid"), Some("false"));
    assert_eq!(line(&out, "check_failing_condition"), Some("2"));
}

#[test]
fn adjust_on_confounded_graph() {
    let (code, out, _) = run(&["adjust", "--graph", &data("confounded.dag"), "--exposure", "Z", "--outcome", "Y", "--max-size", "2"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "valid_sets"), Some("{C}"));
    assert_eq!(line(&out, "implied_independences"), Some("Y _||_ Z | {C}"));
}

#[test]
fn enumerate_parity_functions() {
    let (code, out, _) = run(&["enumerate-fci", "--model", &data("mod2.scm"), "--inputs", "X", "--intervene", "Z"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "fci_count"), Some("4"));
    assert_eq!(line(&out, "all_factor_through_nd"), Some("false"));
}

#[test]
fn validate_reports_each_file() {
    let (code, out, _) = run(&["validate", "--model", &data("mod2.scm"), "--graph", &data("covariate.dag"), "--obs", &data("half.obs")]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "status"), Some("ok"));
    assert_eq!(line(&out, "graph_variables"), Some("C,Z,X,Y"));
}

#[test]
fn experiments_are_deterministic_and_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let csv = csv.to_str().unwrap();
    let args = [
        "experiment", "measure-zero", "--graph", &data("zy.dag"), "--intervene", "Z", "--target", "Y",
        "--samples", "25", "--seed", "11", "--target-mass", "1/2", "--csv", csv,
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.0, 0);
    assert_eq!(first, second);
    assert_eq!(line(&first.1, "exact_invariant"), Some("0"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("seed,degree,gap,fci"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn other_experiments() {
    let (code, out, _) = run(&["experiment", "unbounded-degree", "--p", "3/10", "--grid", "4"]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "degree_min"), Some("2/5"));
    assert_eq!(line(&out, "degree_max"), Some("1/1"));
    let (code, out, _) = run(&[
        "experiment", "dci-embedding", "--graph", &data("mediator.dag"), "--intervene", "Z", "--target", "Y", "--mediator", "W",
    ]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "endpoints_attained"), Some("true"));
    let (code, out, _) = run(&[
        "experiment", "fci-rarity", "--graph", &data("covariate.dag"), "--intervene", "Z", "--target", "Y", "--inputs", "X,C",
        "--samples", "20", "--seed", "5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(line(&out, "violations"), Some("0"));
    assert_eq!(line(&out, "fixture_flagged"), Some("true"));
}

#[test]
fn exit_codes() {
    let (code, _, err) = run(&["bounds", "--graph", &data("chain.dag"), "--obs", &data("half.obs"), "--target", "Y", "--intervene", "X"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error unsupported_structure:"), "{err}");

    let (code, _, err) = run(&["analyze", "--model", &data("missing.scm"), "--target", "Y", "--intervene", "Z"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error "), "{err}");

    let (code, _, _) = run(&["experiment", "measure-zero", "--graph", &data("zy.dag"), "--intervene", "Z", "--target", "Y", "--samples", "5"]);
    assert_eq!(code, 1, "randomized runs need an explicit seed");

    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("enumerate-fci"));
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.obs");
    std::fs::write(&path, "[variables]\nZ: 0,1\n\n[rows]\n0 1/2\n1 1/2\n0 1/4\n").unwrap();
    let (code, _, err) = run(&["validate", "--obs", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 7"), "{err}");

    std::fs::write(&path, "").unwrap();
    let (code, _, err) = run(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 0, column 0"), "{err}");
}

#[test]
fn binary_propagates_exit_code() {
    let out = Command::new(env!("CARGO_BIN_EXE_cfinv"))
        .args(["bounds", "--graph", &data("chain.dag"), "--obs", &data("half.obs"), "--target", "Y", "--intervene", "X"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_cfinv"))
        .args(["analyze", "--model", &data("xor.scm"), "--target", "Y", "--intervene", "Z"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("as_ci_degree 0/1"));
}
