//! Inspect a model: variables, mechanisms, the joint distribution,
//! marginals, and conditional distributions.
//!
//! The bundled example model has three binary variables — an exogenous
//! environment `E`, a symptom `S` influenced by `E`, and a condition `C`
//! influenced by both — so every quantity printed here can be checked by
//! hand.
//!
//! Run with: cargo run -p causal-abstraction --example explore_model

use causal_abstraction::fixtures;

fn main() {
    let model = fixtures::model_m();

    // Every variable owns one column-stochastic mechanism: rows index the
    // variable's outcomes, columns index the joint configurations of its
    // parents (the first parent varies slowest). A root has one column.
    println!("variables and mechanisms");
    println!("------------------------");
    for (index, variable) in model.variables().iter().enumerate() {
        let mechanism = model.mechanism(index);
        let parents = if mechanism.parents().is_empty() {
            "no parents".to_string()
        } else {
            format!("parents {}", mechanism.parents().join(", "))
        };
        println!(
            "{} with outcomes {{{}}}, {parents}",
            variable.name(),
            variable.outcomes().join(", "),
        );
        let matrix = mechanism.matrix();
        for row in 0..matrix.rows() {
            let entries: Vec<String> = (0..matrix.cols())
                .map(|col| format!("{:.2}", matrix.entry(row, col)))
                .collect();
            println!("    [{}]", entries.join(", "));
        }
    }

    // The joint distribution enumerates all configurations in canonical
    // order: the first declared variable varies slowest.
    println!();
    println!("joint distribution");
    println!("------------------");
    let joint = model.joint_distribution();
    for (index, probability) in joint.iter().enumerate() {
        let assignment: Vec<String> = model
            .joint_assignment(index)
            .into_iter()
            .map(|(variable, outcome)| format!("{variable}={outcome}"))
            .collect();
        println!("P({}) = {probability:.4}", assignment.join(", "));
    }

    // Marginals sum the joint over the dropped variables.
    println!();
    println!("marginals");
    println!("---------");
    for name in ["E", "S", "C"] {
        let marginal = model.marginal(&[name]).expect("variable exists");
        let entries: Vec<String> = marginal.iter().map(|p| format!("{p:.4}")).collect();
        println!("P({name}) = [{}]", entries.join(", "));
    }

    // Conditionals are matrices: rows index target outcomes, columns index
    // configurations of the conditioning variables.
    println!();
    println!("conditional P(S | C)");
    println!("--------------------");
    let conditional = model.conditional(&["S"], &["C"]).expect("query is valid");
    for row in 0..conditional.rows() {
        let entries: Vec<String> = (0..conditional.cols())
            .map(|col| format!("{:.4}", conditional.entry(row, col)))
            .collect();
        println!("S={row} | C=0..1: [{}]", entries.join(", "));
    }

    // Observing the condition is informative about the symptom: the two
    // columns differ a lot.
    let shift = conditional.entry(0, 0) - conditional.entry(0, 1);
    println!();
    println!("seeing C=1 instead of C=0 lowers P(S=0) by {shift:.4}");
}
