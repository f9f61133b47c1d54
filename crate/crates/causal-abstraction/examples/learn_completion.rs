//! Complete a partially specified abstraction by exhaustive search.
//!
//! In a completion problem the high-level model and the variable grouping
//! are given; only the outcome maps are missing. The solver enumerates
//! every surjective 0/1 outcome map for each unmapped high variable,
//! scores each completed abstraction, and ranks the results by
//! `e + lambda * i`.
//!
//! With two binary high variables there are only 2 x 2 = 4 candidates, so
//! the whole ranking is easy to eyeball.
//!
//! Run with: cargo run -p causal-abstraction --example learn_completion

use std::collections::BTreeMap;

use causal_abstraction::fixtures;
use causal_abstraction::learn::{solve, LearningProblem, ProblemSpec};

fn main() {
    let base = fixtures::model_m();
    let high = fixtures::model_m_prime();

    // Group the base symptom and condition onto their high-level
    // counterparts; the exogenous environment E stays outside the
    // abstraction.
    let varmap: BTreeMap<String, String> = [("S", "S'"), ("C", "C'")]
        .into_iter()
        .map(|(from, to)| (from.to_string(), to.to_string()))
        .collect();

    let spec = ProblemSpec::Completion {
        high,
        varmap,
        given_maps: BTreeMap::new(), // nothing fixed: both maps are searched
    };

    // lambda = 0 ranks purely by interventional consistency.
    let problem = LearningProblem::new(base, spec).with_lambda(0.0);
    let result = solve(&problem).expect("the completion problem is consistent");

    println!(
        "evaluated {} candidates{}",
        result.candidates_evaluated(),
        if result.exhaustive() { " (exhaustive)" } else { "" },
    );
    println!();
    println!("rank  objective         e         i  candidate");
    for (index, candidate) in result.ranked().iter().enumerate() {
        let report = candidate.report();
        println!(
            "{:>4}  {:>9.6}  {:>8.6}  {:>8.6}  {}",
            index + 1,
            report.objective(),
            report.e(),
            report.i(),
            candidate.encoding_string(),
        );
    }

    // The winner keeps both outcome maps as identities: the high model was
    // built to mirror the base behavior outcome for outcome, so any
    // relabeling breaks the commuting diagrams.
    let best = result.best();
    println!();
    println!("best candidate: {}", best.encoding_string());
    for (high_index, map) in best.abstraction().outcome_maps().iter().enumerate() {
        let images: Vec<String> =
            (0..map.cols()).map(|col| map.image(col).to_string()).collect();
        println!(
            "  map for high variable {high_index}: base outcome -> high outcome [{}]",
            images.join(", ")
        );
    }
    let e = best.report().e();
    assert!(e < 1e-9, "the faithful completion should commute, got e = {e}");
    println!();
    println!("the faithful completion commutes: e = {e:.1e}");
}
