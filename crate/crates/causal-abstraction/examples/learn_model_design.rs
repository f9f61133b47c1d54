//! Design the high-level model itself: the most open-ended search.
//!
//! In a model-design problem nothing about the high level is given. The
//! solver enumerates the number of high variables, their outcome counts,
//! their DAGs, the relevant base subset, the variable grouping, and the
//! outcome maps — then fits each candidate's mechanisms from the base
//! model and ranks everything by `e + lambda * i`.
//!
//! The information-loss weight decides what "best" means. With
//! `lambda = 0` a single one-outcome variable is unbeatable: it commutes
//! trivially and loss is ignored. With `lambda = 1` that trivial answer
//! pays for the information it throws away, and a two-variable design
//! wins.
//!
//! Run with: cargo run -p causal-abstraction --example learn_model_design

use causal_abstraction::fixtures;
use causal_abstraction::learn::{pareto_front, solve, Caps, LearningProblem, ProblemSpec};

fn main() {
    let base = fixtures::model_m();
    let caps = Caps { max_high_variables: 2, max_outcome_cardinality: 2, ..Caps::default() };

    for lambda in [0.0, 1.0] {
        let problem = LearningProblem::new(base.clone(), ProblemSpec::ModelDesign)
            .with_caps(caps.clone())
            .with_lambda(lambda)
            .with_top_k(5);
        let result = solve(&problem).expect("the design problem is consistent");

        println!("lambda = {lambda}");
        println!(
            "  evaluated {} candidates{}",
            result.candidates_evaluated(),
            if result.exhaustive() { " (exhaustive)" } else { " (budget hit)" },
        );
        for (index, candidate) in result.ranked().iter().enumerate() {
            let report = candidate.report();
            println!(
                "  {:>2}. objective {:.6} (e {:.6}, i {:.6})  {}",
                index + 1,
                report.objective(),
                report.e(),
                report.i(),
                candidate.encoding_string(),
            );
        }

        let best = result.best();
        let high = best.abstraction().high();
        let shape: Vec<String> = high
            .variables()
            .iter()
            .map(|v| format!("{}({} outcomes)", v.name(), v.cardinality()))
            .collect();
        println!("  winning high model: {}", shape.join(", "));

        // The candidates that no other candidate beats on both scores at
        // once. Moving along this front trades consistency for fidelity.
        let front = pareto_front(&result);
        println!("  pareto front over (e, i): {} of the ranked candidates", front.len());
        println!();
    }

    // The trade-off in one sentence: the trivial collapse keeps e = 0 by
    // saying nothing, while the lambda = 1 winner keeps e = 0 and still
    // reconstructs the base joint far better.
    let problem = LearningProblem::new(base, ProblemSpec::ModelDesign)
        .with_caps(caps)
        .with_lambda(1.0);
    let best = solve(&problem).expect("the design problem is consistent").best().clone();
    println!(
        "with lambda = 1 the best design reaches objective {:.4}, well under the \
         trivial collapse's {:.4}",
        best.report().objective(),
        fixtures::abs_gamma()
            .information_loss()
            .expect("the bundled collapse evaluates"),
    );
}
