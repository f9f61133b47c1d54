//! Perfect interventions and what separates them from observation.
//!
//! `do(S = s)` performs surgery on the model: the mechanism of `S` is
//! replaced by a parentless point mass on `s`, while every other
//! mechanism is kept. Because the common cause `E` still acts on `C`
//! through its own mechanism, `P(C | do(S))` differs from the
//! observational `P(C | S)` — the classic signature of confounding.
//!
//! Run with: cargo run -p causal-abstraction --example interventions

use causal_abstraction::fixtures;
use causal_abstraction::scm::InterventionAssignment;

fn main() {
    let model = fixtures::model_m();

    // --- Surgery -----------------------------------------------------------
    let intervention =
        InterventionAssignment::from_pairs([("S", "0")]).expect("assignment is well formed");
    let intervened = model.intervene(&intervention).expect("S is a model variable");

    let s_index = 1;
    println!("mechanism of S before surgery (parents: {:?}):", model.mechanism(s_index).parents());
    print_matrix_rows(model.mechanism(s_index).matrix());
    println!();
    println!(
        "mechanism of S after do(S=0) (parents: {:?}):",
        intervened.mechanism(s_index).parents()
    );
    print_matrix_rows(intervened.mechanism(s_index).matrix());

    // --- Observation vs intervention --------------------------------------
    // Observationally, S=0 is evidence about the environment E, and that
    // evidence propagates to C. Under do(S=0) the link from E to S is cut,
    // so only the direct effect of S on C remains.
    let observed = model.conditional(&["C"], &["S"]).expect("query is valid");
    let virtual_mechanism = model.virtual_mechanism(&["S"], &["C"]).expect("query is valid");

    println!();
    println!("            P(C=0 | .)   P(C=1 | .)");
    for (label, col) in [("S=0", 0), ("S=1", 1)] {
        println!(
            "seeing {label}:   {:.4}       {:.4}",
            observed.entry(0, col),
            observed.entry(1, col),
        );
        println!(
            "doing  {label}:   {:.4}       {:.4}",
            virtual_mechanism.entry(0, col),
            virtual_mechanism.entry(1, col),
        );
    }
    println!();
    println!(
        "the gap between seeing and doing S=0 is {:.4}",
        (observed.entry(0, 0) - virtual_mechanism.entry(0, 0)).abs()
    );

    // --- Interventional marginals ------------------------------------------
    // The same virtual mechanism, read one intervention at a time.
    println!();
    for outcome in ["0", "1"] {
        let assignment =
            InterventionAssignment::from_pairs([("S", outcome)]).expect("assignment is well formed");
        let under_do = model.intervene(&assignment).expect("S is a model variable");
        let marginal = under_do.marginal(&["C"]).expect("C is a model variable");
        let entries: Vec<String> = marginal.iter().map(|p| format!("{p:.4}")).collect();
        println!("P(C | do(S={outcome})) = [{}]", entries.join(", "));
    }

    // Intervening on every variable pins the joint to a point mass.
    let everything = InterventionAssignment::from_pairs([("E", "1"), ("S", "0"), ("C", "1")])
        .expect("assignment is well formed");
    let pinned = model.intervene(&everything).expect("all are model variables");
    let joint = pinned.joint_distribution();
    let index = pinned.joint_index(&everything).expect("assignment is complete");
    println!();
    println!(
        "after do(E=1, S=0, C=1) the joint puts mass {:.1} on that configuration",
        joint.get(index)
    );
}

fn print_matrix_rows(matrix: &causal_abstraction::numerics::StochasticMatrix) {
    for row in 0..matrix.rows() {
        let entries: Vec<String> = (0..matrix.cols())
            .map(|col| format!("{:.2}", matrix.entry(row, col)))
            .collect();
        println!("    [{}]", entries.join(", "));
    }
}
