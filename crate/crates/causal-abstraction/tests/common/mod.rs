//! Helpers shared by the integration test targets: paths to the bundled
//! fixture documents, a runner for the compiled binary, a seeded random
//! model generator, and an independent brute-force joint-distribution
//! oracle that never touches the library's own indexing helpers.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use causal_abstraction::numerics::{Distribution, StochasticMatrix};
use causal_abstraction::scm::{InterventionAssignment, Mechanism, Scm, VariableSpec};

/// Probabilities are drawn on this grid so every generated value survives
/// a serialization round trip bit-for-bit.
const GRID: u64 = 1_000_000;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Runs the compiled command-line binary with the given arguments and an
/// optional working directory.
pub fn run_cli(args: &[&str], cwd: Option<&std::path::Path>) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_causal-abstraction"));
    command.args(args);
    if let Some(dir) = cwd {
        command.current_dir(dir);
    }
    command.output().expect("the binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("the binary exits normally")
}

pub fn assert_close(actual: f64, expected: f64, tolerance: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tolerance,
        "{what}: expected {expected}, got {actual} (tolerance {tolerance:e})"
    );
}

pub fn assert_vec_close(actual: &[f64], expected: &[f64], tolerance: f64, what: &str) {
    assert_eq!(actual.len(), expected.len(), "{what}: length mismatch");
    for (index, (a, e)) in actual.iter().zip(expected).enumerate() {
        assert!(
            (a - e).abs() <= tolerance,
            "{what}[{index}]: expected {e}, got {a} (tolerance {tolerance:e})"
        );
    }
}

/// A random column that sums to exactly one on the probability grid:
/// `cardinality - 1` sorted cut points split the grid into segment
/// lengths.
fn random_column(rng: &mut ChaCha8Rng, cardinality: usize) -> Vec<f64> {
    let mut cuts: Vec<u64> = (0..cardinality - 1).map(|_| rng.random_range(0..=GRID)).collect();
    cuts.sort_unstable();
    let mut previous = 0;
    let mut column = Vec::with_capacity(cardinality);
    for cut in cuts {
        column.push((cut - previous) as f64 / GRID as f64);
        previous = cut;
    }
    column.push((GRID - previous) as f64 / GRID as f64);
    column
}

/// A random grid-valued distribution of the requested length.
pub fn random_distribution(rng: &mut ChaCha8Rng, length: usize) -> Distribution {
    Distribution::new(random_column(rng, length)).expect("grid columns sum to one")
}

/// A random valid model: up to `max_vars` variables with up to
/// `max_outcomes` outcomes each, random edges from earlier to later
/// variables (so the declaration order is already topological), and
/// grid-valued mechanisms.
pub fn random_scm(rng: &mut ChaCha8Rng, max_vars: usize, max_outcomes: usize) -> Scm {
    let var_count = rng.random_range(1..=max_vars);
    let cards: Vec<usize> = (0..var_count).map(|_| rng.random_range(1..=max_outcomes)).collect();
    let variables: Vec<VariableSpec> = cards
        .iter()
        .enumerate()
        .map(|(index, &card)| VariableSpec::indexed(format!("V{index}"), card))
        .collect();

    let mut mechanisms = Vec::with_capacity(var_count);
    for index in 0..var_count {
        let parents: Vec<usize> = (0..index).filter(|_| rng.random_bool(0.5)).collect();
        let cols: usize = parents.iter().map(|&p| cards[p]).product();
        let rows = cards[index];
        let mut matrix = vec![vec![0.0; cols]; rows];
        for col in 0..cols {
            for (row, value) in random_column(rng, rows).into_iter().enumerate() {
                matrix[row][col] = value;
            }
        }
        mechanisms.push(Mechanism::new(
            format!("V{index}"),
            parents.iter().map(|&p| format!("V{p}")),
            StochasticMatrix::from_rows(&matrix).expect("generated columns sum to one"),
        ));
    }
    Scm::new(variables, mechanisms).expect("generated models are valid")
}

/// A random partial assignment over the model's variables, usable as an
/// intervention.
pub fn random_intervention(rng: &mut ChaCha8Rng, model: &Scm) -> InterventionAssignment {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for variable in model.variables() {
        if rng.random_bool(0.4) {
            let outcome = rng.random_range(0..variable.cardinality());
            pairs.push((variable.name().to_string(), variable.outcomes()[outcome].clone()));
        }
    }
    let refs: Vec<(&str, &str)> =
        pairs.iter().map(|(v, o)| (v.as_str(), o.as_str())).collect();
    InterventionAssignment::from_pairs(refs).expect("variables are distinct")
}

/// Brute-force joint distribution: enumerate every total assignment with
/// a hand-rolled odometer (first variable slowest) and multiply mechanism
/// entries directly. Shares no code with the library's indexing.
pub fn brute_force_joint(model: &Scm) -> Vec<f64> {
    let variables = model.variables();
    let cards: Vec<usize> = variables.iter().map(|v| v.cardinality()).collect();
    let name_to_index: std::collections::HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(index, v)| (v.name(), index))
        .collect();

    let total: usize = cards.iter().product();
    let mut joint = Vec::with_capacity(total);
    let mut digits = vec![0usize; cards.len()];
    loop {
        let mut probability = 1.0;
        for (index, _) in variables.iter().enumerate() {
            let mechanism = model.mechanism(index);
            let mut column = 0usize;
            for parent in mechanism.parents() {
                let parent_index = name_to_index[parent.as_str()];
                column = column * cards[parent_index] + digits[parent_index];
            }
            probability *= mechanism.matrix().entry(digits[index], column);
        }
        joint.push(probability);

        // Advance the odometer; the last digit spins fastest.
        let mut position = cards.len();
        loop {
            if position == 0 {
                return joint;
            }
            position -= 1;
            digits[position] += 1;
            if digits[position] < cards[position] {
                break;
            }
            digits[position] = 0;
        }
    }
}
