//! End-to-end checks of the command-line binary: exit codes, deterministic
//! byte-identical output, precision control, and machine-readable output
//! that re-loads through the document layer.

mod common;

use causal_abstraction::fixtures;
use causal_abstraction::io::{load_abstraction_bundle_file, load_model};
use causal_abstraction::scm::InterventionAssignment;

use common::{exit_code, fixture_path, fixtures_dir, run_cli, stderr_of, stdout_of};

fn fixture_arg(name: &str) -> String {
    fixture_path(name).to_str().expect("utf-8 path").to_string()
}

// --- validate ---------------------------------------------------------------

#[test]
fn validate_accepts_the_bundled_model() {
    let output = run_cli(&["validate", &fixture_arg("model_M.json")], None);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    assert_eq!(stdout_of(&output), "ok\n");
}

#[test]
fn validate_lists_violations_one_per_line_and_exits_1() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("cyclic.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&serde_json::json!({
            "format_version": "1",
            "variables": [
                {"name": "S", "outcomes": ["0", "1"]},
                {"name": "C", "outcomes": ["0", "1"]},
            ],
            "mechanisms": [
                {"target": "S", "parents": ["C"], "matrix": [[0.9, 0.2], [0.1, 0.8]]},
                {"target": "C", "parents": ["S"], "matrix": [[0.7, 0.1], [0.3, 0.9]]},
            ],
        }))
        .expect("serializes"),
    )
    .expect("fixture written");

    let output = run_cli(&["validate", path.to_str().expect("utf-8 path")], None);
    assert_eq!(exit_code(&output), 1);
    let stdout = stdout_of(&output);
    assert!(stdout.contains("cycle: "), "violation list was: {stdout}");
}

#[test]
fn validate_missing_file_exits_2() {
    let output = run_cli(&["validate", "/nonexistent/model.json"], None);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_of(&output).contains("error:"));
}

// --- queries ----------------------------------------------------------------

#[test]
fn joint_output_is_byte_identical_and_matches_the_golden_table() {
    let args = ["joint", &fixture_arg("model_M.json")];
    let first = run_cli(&args, None);
    let second = run_cli(&args, None);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "repeated runs must be byte-identical");
    let expected = "\
P(E, S, C)
E=0,S=0,C=0  0.576000
E=0,S=0,C=1  0.064000
E=0,S=1,C=0  0.064000
E=0,S=1,C=1  0.096000
E=1,S=0,C=0  0.096000
E=1,S=0,C=1  0.024000
E=1,S=1,C=0  0.024000
E=1,S=1,C=1  0.056000
";
    assert_eq!(stdout_of(&first), expected);
}

#[test]
fn virtual_matches_the_reference_matrix() {
    let output = run_cli(
        &["virtual", &fixture_arg("model_M.json"), "--from", "S", "--to", "C"],
        None,
    );
    assert_eq!(exit_code(&output), 0);
    let expected = "\
P(C | do(S))
          S=0       S=1
C=0  0.880000  0.380000
C=1  0.120000  0.620000
";
    assert_eq!(stdout_of(&output), expected);
}

#[test]
fn precision_flag_controls_the_printed_decimals() {
    let output = run_cli(
        &["joint", &fixture_arg("model_M.json"), "--precision", "2"],
        None,
    );
    assert_eq!(exit_code(&output), 0);
    assert!(
        stdout_of(&output).contains("E=0,S=0,C=0  0.58"),
        "got: {}",
        stdout_of(&output)
    );
}

#[test]
fn interventions_reshape_the_joint() {
    let output = run_cli(
        &["joint", &fixture_arg("model_M.json"), "--do", "S=0"],
        None,
    );
    assert_eq!(exit_code(&output), 0);
    let stdout = stdout_of(&output);
    assert!(stdout.starts_with("P(E, S, C | do(S=0))\n"), "got: {stdout}");
    assert!(stdout.contains("E=0,S=1,C=0  0.000000"), "got: {stdout}");
}

#[test]
fn malformed_do_flag_exits_2() {
    let output = run_cli(&["joint", &fixture_arg("model_M.json"), "--do", "S"], None);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_of(&output).contains("VAR=OUTCOME"));
}

#[test]
fn unknown_outcome_in_do_flag_exits_1() {
    let output = run_cli(&["joint", &fixture_arg("model_M.json"), "--do", "S=7"], None);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn unknown_marginal_variable_exits_1() {
    let output = run_cli(
        &["marginal", &fixture_arg("model_M.json"), "--vars", "Q"],
        None,
    );
    assert_eq!(exit_code(&output), 1);
    assert!(stderr_of(&output).contains("\"Q\""));
}

#[test]
fn machine_readable_joint_is_valid_json() {
    let output = run_cli(
        &["joint", &fixture_arg("model_M.json"), "--output", "machine-readable"],
        None,
    );
    assert_eq!(exit_code(&output), 0);
    let document: serde_json::Value =
        serde_json::from_str(&stdout_of(&output)).expect("stdout is JSON");
    assert_eq!(document["variables"], serde_json::json!(["E", "S", "C"]));
    let total: f64 = document["entries"]
        .as_array()
        .expect("entries is a list")
        .iter()
        .map(|entry| entry["probability"].as_f64().expect("a number"))
        .sum();
    assert!((total - 1.0).abs() <= 1e-9, "probabilities sum to {total}");
}

#[test]
fn intervened_model_document_reloads_and_matches_the_library() {
    let output = run_cli(
        &["intervene", &fixture_arg("model_M.json"), "--do", "S=0"],
        None,
    );
    assert_eq!(exit_code(&output), 0);
    let from_cli = load_model(&stdout_of(&output)).expect("the dumped document re-loads");

    let assignment = InterventionAssignment::from_pairs([("S", "0")]).expect("well formed");
    let expected = fixtures::model_m().intervene(&assignment).expect("S exists");
    assert_eq!(from_cli, expected);
    let mechanism = from_cli.mechanism(1);
    assert!(mechanism.parents().is_empty(), "surgery cuts the parents of S");
}

// --- assess -----------------------------------------------------------------

#[test]
fn assess_reports_the_reference_scores() {
    let output = run_cli(
        &[
            "assess",
            &fixture_arg("model_M.json"),
            &fixture_arg("model_Mprime.json"),
            &fixture_arg("abs_alpha.json"),
            "--output",
            "machine-readable",
        ],
        None,
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let document: serde_json::Value =
        serde_json::from_str(&stdout_of(&output)).expect("stdout is JSON");
    let report = fixtures::abs_alpha().evaluate(1.0).expect("alpha evaluates");
    assert!((document["e"].as_f64().expect("a number") - report.e()).abs() <= 1e-9);
    assert!((document["i"].as_f64().expect("a number") - report.i()).abs() <= 1e-9);
    assert!(
        (document["objective"].as_f64().expect("a number") - report.objective()).abs() <= 1e-9
    );
    let diagrams = document["diagrams"].as_array().expect("a list");
    assert_eq!(diagrams.len(), 1);
    assert_eq!(diagrams[0]["sources"], serde_json::json!(["S'"]));
    assert_eq!(diagrams[0]["targets"], serde_json::json!(["C'"]));
}

#[test]
fn assess_rejects_a_mismatched_abstraction_with_exit_1() {
    let output = run_cli(
        &[
            "assess",
            &fixture_arg("model_M.json"),
            &fixture_arg("model_Mdprime.json"),
            &fixture_arg("abs_alpha.json"),
        ],
        None,
    );
    assert_eq!(exit_code(&output), 1);
    assert!(stderr_of(&output).contains("error:"));
}

// --- learn ------------------------------------------------------------------

#[test]
fn learn_table_is_deterministic() {
    let args = ["learn", "--problem", "problem_completion.json"];
    let cwd = fixtures_dir();
    let first = run_cli(&args, Some(cwd.as_path()));
    let second = run_cli(&args, Some(cwd.as_path()));
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_of(&first));
    assert_eq!(first.stdout, second.stdout, "repeated runs must be byte-identical");
    let stdout = stdout_of(&first);
    assert!(stdout.starts_with("evaluated 4 candidates\n"), "got: {stdout}");
    assert!(stdout.contains("rank"), "got: {stdout}");
}

#[test]
fn learn_machine_readable_candidates_reload_without_loss() {
    let cwd = fixtures_dir();
    let output = run_cli(
        &[
            "learn",
            "--problem",
            "problem_completion.json",
            "--top-k",
            "2",
            "--output",
            "machine-readable",
        ],
        Some(cwd.as_path()),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let document: serde_json::Value =
        serde_json::from_str(&stdout_of(&output)).expect("stdout is JSON");
    let candidates = document["candidates"].as_array().expect("a list");
    assert_eq!(candidates.len(), 2);

    let dir = tempfile::tempdir().expect("tempdir");
    for candidate in candidates {
        let path = dir.path().join("candidate.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&candidate["abstraction"]).expect("serializes"),
        )
        .expect("candidate written");
        let abstraction =
            load_abstraction_bundle_file(&path).expect("the emitted document re-loads");
        let report = abstraction.evaluate(1.0).expect("the candidate evaluates");
        let e = candidate["e"].as_f64().expect("a number");
        let i = candidate["i"].as_f64().expect("a number");
        assert!((report.e() - e).abs() <= 1e-9, "e drifted: {e} vs {}", report.e());
        assert!((report.i() - i).abs() <= 1e-9, "i drifted: {i} vs {}", report.i());
    }
}

#[test]
fn learn_rejects_an_inconsistent_problem_with_exit_1() {
    // An assessment problem must carry the full abstraction; leaving out
    // the varmap and outcome maps is a domain-level inconsistency, not a
    // syntax error.
    let dir = tempfile::tempdir().expect("tempdir");
    for name in ["model_M.json", "model_Mprime.json"] {
        let text = fixtures::FILES
            .iter()
            .find(|(file, _)| *file == name)
            .expect("fixture exists")
            .1;
        std::fs::write(dir.path().join(name), text).expect("fixture copy");
    }
    let problem = dir.path().join("problem.json");
    std::fs::write(
        &problem,
        serde_json::to_string_pretty(&serde_json::json!({
            "format_version": "1",
            "problem_class": "assessment",
            "givens": {
                "base_ref": "model_M.json",
                "high_ref": "model_Mprime.json",
            },
        }))
        .expect("serializes"),
    )
    .expect("problem written");

    let output = run_cli(
        &["learn", "--problem", problem.to_str().expect("utf-8 path")],
        None,
    );
    assert_eq!(exit_code(&output), 1, "stderr: {}", stderr_of(&output));
}

#[test]
fn learn_rejects_an_unknown_problem_class_with_exit_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let problem = dir.path().join("problem.json");
    std::fs::write(
        &problem,
        serde_json::to_string_pretty(&serde_json::json!({
            "format_version": "1",
            "problem_class": "telepathy",
            "givens": {"base_ref": "model_M.json"},
        }))
        .expect("serializes"),
    )
    .expect("problem written");

    let output = run_cli(
        &["learn", "--problem", problem.to_str().expect("utf-8 path")],
        None,
    );
    assert_eq!(exit_code(&output), 2, "stderr: {}", stderr_of(&output));
}

// --- selftest ---------------------------------------------------------------

#[test]
fn selftest_passes_and_is_byte_identical() {
    let first = run_cli(&["selftest"], None);
    let second = run_cli(&["selftest"], None);
    assert_eq!(exit_code(&first), 0, "stdout: {}", stdout_of(&first));
    assert_eq!(first.stdout, second.stdout, "repeated runs must be byte-identical");
    let stdout = stdout_of(&first);
    assert!(stdout.contains("checks passed"), "got: {stdout}");
    assert!(!stdout.contains("FAIL"), "got: {stdout}");
}

#[test]
fn selftest_lambda_override_touches_only_objective_rows() {
    let default = run_cli(&["selftest"], None);
    let overridden = run_cli(&["selftest", "--lambda", "2"], None);
    assert_eq!(exit_code(&default), 0);
    assert_eq!(exit_code(&overridden), 0);

    let default_stdout = stdout_of(&default);
    let overridden_stdout = stdout_of(&overridden);
    let default_lines: Vec<&str> = default_stdout.lines().collect();
    let overridden_lines: Vec<&str> = overridden_stdout.lines().collect();
    assert_eq!(default_lines.len(), overridden_lines.len());

    let mut differing = 0;
    for (default_line, overridden_line) in default_lines.iter().zip(&overridden_lines) {
        if default_line != overridden_line {
            differing += 1;
            assert!(
                default_line.contains("objective of") || default_line.starts_with("reference check"),
                "unexpected difference: {default_line} vs {overridden_line}"
            );
        }
    }
    assert!(differing > 1, "the override must change the objective rows");
}

#[test]
fn selftest_machine_readable_reports_every_row() {
    let output = run_cli(&["selftest", "--output", "machine-readable"], None);
    assert_eq!(exit_code(&output), 0);
    let document: serde_json::Value =
        serde_json::from_str(&stdout_of(&output)).expect("stdout is JSON");
    assert_eq!(document["passed"], serde_json::json!(true));
    let rows = document["rows"].as_array().expect("a list");
    assert!(rows.len() >= 40, "expected a full table, got {} rows", rows.len());
    assert!(rows.iter().all(|row| row["passed"] == serde_json::json!(true)));
}

// --- argument handling ------------------------------------------------------

#[test]
fn unknown_flags_exit_2() {
    let output = run_cli(&["joint", &fixture_arg("model_M.json"), "--nonsense"], None);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn help_exits_0() {
    let output = run_cli(&["--help"], None);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout_of(&output).contains("Usage"));
}
