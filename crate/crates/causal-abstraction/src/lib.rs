//! Finite structural causal models and causal abstractions.
//!
//! This crate models a causal system as a finite set of variables, each with
//! a finite outcome set and one column-stochastic mechanism conditioned on
//! its parents. On top of that it provides:
//!
//! - observational and interventional reasoning: joint distributions,
//!   marginals, conditionals, perfect interventions `do(X = x)`, and
//!   interventional ("virtual") mechanisms between arbitrary variable sets
//!   ([`scm`]);
//! - abstractions between a detailed base model and a coarser high-level
//!   model, scored by interventional-consistency error `e` (worst-case
//!   Jensen-Shannon distance over commuting-diagram pairs) and information
//!   loss `i` (distance between the base joint and its reconstruction
//!   through the abstraction's pseudoinverse) ([`abstraction`]);
//! - exhaustive, deterministic search over abstraction spaces — from
//!   completing a partially specified abstraction up to designing the
//!   high-level model itself — ranked by the combined objective
//!   `e + lambda * i` ([`learn`]);
//! - a JSON document format for models, abstractions, and search problems,
//!   with bundled reference fixtures ([`io`], [`fixtures`]).
//!
//! Every operation is deterministic: repeated runs produce byte-identical
//! results. The crate is sized for desk-scale models (a handful of
//! variables); all joint-space computations are exhaustive.
//!
//! Start with the runnable walkthroughs in `examples/` — each major
//! capability has one.

pub mod abstraction;
pub mod fixtures;
pub mod indexing;
pub mod io;
pub mod learn;
pub mod numerics;
pub mod scm;

#[cfg(test)]
pub(crate) mod test_models;

pub use abstraction::{Abstraction, DiagramError, EvaluationReport};
pub use fixtures::{selftest_report, FixtureSource, SelftestReport, SelftestRow};
pub use io::{
    dump_abstraction, dump_model, load_abstraction, load_abstraction_bundle_file,
    load_model, load_model_file, load_problem_file, DocumentError,
};
pub use learn::{
    pareto_front, solve, Candidate, Caps, LearnError, LearningProblem, ProblemClass,
    ProblemSpec, SolverResult,
};
pub use numerics::{
    jsd_distance, kl_divergence, BinaryStochasticMatrix, Distribution, Matrix,
    NumericsError, StochasticMatrix,
};
pub use scm::{InterventionAssignment, Mechanism, Scm, VariableSpec};
