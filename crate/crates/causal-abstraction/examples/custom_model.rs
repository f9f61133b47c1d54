//! Build a model from scratch, round-trip it through JSON, and see what
//! validation rejects.
//!
//! Outcomes are labels, not numbers: this example's weather model talks
//! about "sunny" and "showers" rather than 0 and 1. The JSON document
//! format keeps those labels, so dumped models stay readable.
//!
//! Run with: cargo run -p causal-abstraction --example custom_model

use causal_abstraction::io::{dump_model, load_model};
use causal_abstraction::numerics::{Distribution, StochasticMatrix};
use causal_abstraction::scm::{Mechanism, Scm, ScmError, VariableSpec, Violation};

fn main() {
    // --- Construction ------------------------------------------------------
    // Sky (3 outcomes) -> Sprinkler (on/off) and Grass (dry/wet); the grass
    // also depends on the sprinkler, so its matrix has 3 x 2 = 6 columns,
    // ordered with the first parent (Sky) varying slowest.
    let variables = vec![
        VariableSpec::new("Sky", ["sunny", "overcast", "showers"]),
        VariableSpec::new("Sprinkler", ["off", "on"]),
        VariableSpec::new("Grass", ["dry", "wet"]),
    ];
    let sky = Mechanism::root(
        "Sky",
        &Distribution::new(vec![0.6, 0.3, 0.1]).expect("distribution sums to one"),
    );
    let sprinkler = Mechanism::new(
        "Sprinkler",
        ["Sky"],
        StochasticMatrix::from_rows(&[
            vec![0.2, 0.7, 0.95], // off, per sky outcome
            vec![0.8, 0.3, 0.05], // on
        ])
        .expect("columns sum to one"),
    );
    let grass = Mechanism::new(
        "Grass",
        ["Sky", "Sprinkler"],
        StochasticMatrix::from_rows(&[
            // Columns: (sunny,off) (sunny,on) (overcast,off) (overcast,on)
            //          (showers,off) (showers,on)
            vec![0.98, 0.1, 0.9, 0.08, 0.15, 0.05],
            vec![0.02, 0.9, 0.1, 0.92, 0.85, 0.95],
        ])
        .expect("columns sum to one"),
    );
    let model =
        Scm::new(variables, vec![sky, sprinkler, grass]).expect("the weather model is valid");

    let wet = model.marginal(&["Grass"]).expect("Grass is a model variable");
    println!("P(Grass=wet) = {:.4}", wet.get(1));

    // --- Round trip through the document format ----------------------------
    let text = dump_model(&model);
    println!();
    println!("dumped document starts with:");
    for line in text.lines().take(6) {
        println!("    {line}");
    }
    let reloaded = load_model(&text).expect("a dumped model always re-loads");
    assert_eq!(reloaded, model, "the round trip is lossless");
    println!("reloaded model equals the original");

    // --- What validation catches -------------------------------------------
    // Wiring Sky <- Grass closes a cycle; building the model reports every
    // violation at once rather than stopping at the first.
    let cyclic = Scm::new(
        vec![
            VariableSpec::new("Sky", ["sunny", "showers"]),
            VariableSpec::new("Grass", ["dry", "wet"]),
        ],
        vec![
            Mechanism::new(
                "Sky",
                ["Grass"],
                StochasticMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]])
                    .expect("columns sum to one"),
            ),
            Mechanism::new(
                "Grass",
                ["Sky"],
                StochasticMatrix::from_rows(&[vec![0.7, 0.1], vec![0.3, 0.9]])
                    .expect("columns sum to one"),
            ),
        ],
    );
    println!();
    match cyclic {
        Err(ScmError::Invalid { violations }) => {
            println!("the cyclic model is rejected:");
            for violation in &violations {
                println!("    {violation}");
            }
            assert!(
                violations.iter().any(|v| matches!(v, Violation::Cycle { .. })),
                "the cycle itself should be among the violations",
            );
        }
        other => panic!("expected a validation failure, got {other:?}"),
    }
}
