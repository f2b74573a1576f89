//! End-to-end tests of the binary: bundled corpus verdicts, exit codes,
//! output contracts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robim"))
}

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn candidate_mixture_is_superior() {
    let file = problems().join("candidate.json");
    let out = run(&[
        "check",
        "superior",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "holds");
    let lo = v["certificate"]["lambda_interval"]["lower"]
        .as_f64()
        .unwrap();
    let hi = v["certificate"]["lambda_interval"]["upper"]
        .as_f64()
        .unwrap();
    assert!((lo - 0.4).abs() < 1e-9 && (hi - 0.4).abs() < 1e-9);
}

#[test]
fn candidate_mixture_is_not_better() {
    let file = problems().join("candidate.json");
    let out = run(&[
        "check",
        "better",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "fails");
    assert_eq!(v["reason"]["kind"], "dominates-neither");
    // the attached witness must be monotone but not concave-validated
    assert_eq!(v["witness"]["violated_claim"], "not-b-better");
    assert_eq!(v["witness"]["utility"]["concave"], false);
}

#[test]
fn insurance_modification_is_accepted_with_reported_lambda() {
    let file = problems().join("insurance.json");
    let out = run(&[
        "check",
        "superior",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let lambda = v["certificate"]["lambda_star"].as_f64().unwrap();
    assert!((0.599..=0.612).contains(&lambda), "lambda_star = {lambda}");
}

#[test]
fn both_trade_perspectives_accept_the_same_modification() {
    for f in ["trade-buyer.json", "trade-seller.json"] {
        let file = problems().join(f);
        let out = run(&["check", "superior", file.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{f} should accept the convex modification");
    }
}

#[test]
fn trade_modification_above_the_mixture_hurts_the_buyer() {
    // raising the transfer in every state keeps the seller happy and breaks
    // the buyer's mixture bound
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let buyer = dir.join("trade-buyer-greedy.json");
    std::fs::write(
        &buyer,
        r#"{
  "schema": 1,
  "states": ["calm", "storm", "disaster"],
  "actions": {
    "accept-terms": [0.4, -0.1, -0.6],
    "walk-away": [0.0, 0.0, 0.0]
  },
  "incumbent": "accept-terms",
  "candidate": [0.23, -0.12, -0.47]
}"#,
    )
    .unwrap();
    let out = run(&["check", "superior", buyer.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let seller = dir.join("trade-seller-greedy.json");
    std::fs::write(
        &seller,
        r#"{
  "schema": 1,
  "states": ["calm", "storm", "disaster"],
  "actions": {
    "accept-terms": [0.8, 0.5, 0.0],
    "keep-asset": [1.2, 0.4, -0.6]
  },
  "incumbent": "accept-terms",
  "candidate": [0.97, 0.52, -0.13]
}"#,
    )
    .unwrap();
    let out = run(&["check", "superior", seller.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
}

#[test]
fn quadratic_loss_candidate_fails_multi_with_interval_certificate() {
    let file = problems().join("quadratic-loss.json");
    let out = run(&["check", "multi", file.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "fails");
    assert_eq!(v["reason"]["kind"], "mixture-infeasible");
    assert_eq!(v["reason"]["versus"], "guess-1");
    let per = v["certificate"]["per_alternative"].as_array().unwrap();
    let bad = per.iter().find(|e| e["versus"] == "guess-1").unwrap();
    assert_eq!(bad["lambda_interval"]["feasible"], false);
    assert!(
        v["witness"].is_object(),
        "a witness should accompany the failure"
    );
}

#[test]
fn three_state_instance_reports_exact_probabilities() {
    let file = problems().join("three-state-ri.json");
    let out = run(&[
        "check",
        "selected-more",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["diagnostics"]["p"], "33/40");
    assert_eq!(v["diagnostics"]["p_hat"], "3/4");
}

#[test]
fn selected_more_requires_dominance_and_reports_choice_probabilities() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let file = dir.join("selected-more.json");
    std::fs::write(
        &file,
        r#"{
  "schema": 1,
  "states": ["s0", "s1"],
  "actions": {"a": [1.0, -1.0], "b": [0.0, 0.0]},
  "incumbent": "a",
  "candidate": [1.1, -0.9],
  "prior": [0.5, 0.5],
  "cost": {"family": "entropy", "kappa": 1.0}
}"#,
    )
    .unwrap();
    let out = run(&[
        "check",
        "selected-more",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "holds");
    let p = v["diagnostics"]["p"].as_f64().unwrap();
    let p_hat = v["diagnostics"]["p_hat"].as_f64().unwrap();
    assert!(p_hat >= p - 1e-9, "p = {p}, p_hat = {p_hat}");
}

#[test]
fn lottery_check_accepts_the_candidate_lottery() {
    let file = problems().join("candidate.json");
    for class in ["concave", "monotone"] {
        let out = run(&[
            "check",
            "lottery",
            file.to_str().unwrap(),
            "--class",
            class,
            "--format",
            "json",
        ]);
        let v = stdout_json(&out);
        if class == "concave" {
            assert_eq!(code(&out), 0, "risk-averse agents accept the mixture");
            assert_eq!(v["verdict"], "holds");
        }
        // certificates always list every alternative
        assert_eq!(
            v["certificate"]["per_alternative"]
                .as_array()
                .unwrap()
                .len(),
            1
        );
    }
}

#[test]
fn lottery_check_requires_a_prior() {
    let file = problems().join("insurance.json");
    let out = run(&["check", "lottery", file.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn knownutil_reports_vertices() {
    let file = problems().join("candidate.json");
    let out = run(&[
        "check",
        "knownutil",
        file.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let verts = v["certificate"]["vertices"].as_array().unwrap();
    assert_eq!(verts.len(), 2);
    assert_eq!(
        v["certificate"]["relevant_alternatives"],
        serde_json::json!(["rival-candidate"])
    );
}

#[test]
fn falsify_finds_nothing_for_a_mixture_and_refutes_a_crossed_candidate() {
    let file = problems().join("candidate.json");
    let out = run(&[
        "falsify",
        file.to_str().unwrap(),
        "--trials",
        "2000",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&out), 0);

    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let crossed = dir.join("crossed.json");
    std::fs::write(
        &crossed,
        r#"{
  "schema": 1,
  "states": ["s0", "s1"],
  "actions": {"a": [1.0, 0.0], "b": [0.0, 1.0]},
  "incumbent": "a",
  "candidate": [1.5, -0.5]
}"#,
    )
    .unwrap();
    let out = run(&[
        "falsify",
        crossed.to_str().unwrap(),
        "--trials",
        "10000",
        "--seed",
        "9",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    let eu_a = v["witness"]["eu_a"].as_f64().unwrap();
    let eu_b = v["witness"]["eu_b"].as_f64().unwrap();
    let eu_h = v["witness"]["eu_ahat"].as_f64().unwrap();
    assert!(eu_a > eu_b && eu_b > eu_h);
}

#[test]
fn plot_csv_has_exactly_512_data_rows() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let out_path = dir.join("figure.csv");
    let file = problems().join("candidate.json");
    let out = run(&[
        "plot",
        file.to_str().unwrap(),
        out_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let contents = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = contents.lines().collect();
    assert_eq!(lines[0], "mu,eu_a,eu_ahat,eu_b");
    assert_eq!(lines.len() - 1, 512, "exactly 512 data rows");
    let v = stdout_json(&out);
    assert_eq!(v["diagnostics"]["rows"], 512);
    let mu_bar = v["diagnostics"]["mu_bar"].as_f64().unwrap();
    let mu_hat = v["diagnostics"]["mu_hat"].as_f64().unwrap();
    assert!(mu_hat >= mu_bar, "mixture candidate rotates outward");
}

#[test]
fn plot_svg_is_standalone() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let out_path = dir.join("figure.svg");
    let file = problems().join("candidate.json");
    let out = run(&["plot", file.to_str().unwrap(), out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let svg = std::fs::read_to_string(&out_path).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(!svg.contains("href"), "no external references");
    assert!(svg.contains("mu_bar") && svg.contains("mu_hat"));
}

#[test]
fn malformed_file_reports_parse_location() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"schema\": 1,\n  \"states\": [\n").unwrap();
    let out = run(&["check", "superior", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("line"),
        "parse errors carry a location: {text}"
    );
}

#[test]
fn assumption_violations_exit_with_code_2() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let flat = dir.join("flat.json");
    std::fs::write(
        &flat,
        r#"{
  "schema": 1,
  "states": ["s0", "s1"],
  "actions": {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [0.4, 0.4]},
  "incumbent": "a",
  "candidate": [1.0, 0.0]
}"#,
    )
    .unwrap();
    let out = run(&["check", "multi", flat.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 2);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "assumptions-violated");
    assert_eq!(v["certificate"]["assumptions"]["single_peaked"], false);
}

#[test]
fn bundled_corpus_round_trips() {
    for entry in std::fs::read_dir(problems()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let reserialized = serde_json::to_string(&parsed).unwrap();
        let reparsed: serde_json::Value = serde_json::from_str(&reserialized).unwrap();
        assert_eq!(parsed, reparsed, "{path:?} does not round-trip");
    }
}

#[test]
fn exit_codes_are_deterministic_across_runs() {
    let file = problems().join("candidate.json");
    let args = [
        "falsify",
        file.to_str().unwrap(),
        "--trials",
        "500",
        "--seed",
        "4",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), code(&b));
    assert_eq!(a.stdout, b.stdout);
}
