//! Shared hand-built models for unit tests. These mirror the JSON fixtures
//! bundled with the crate; unit tests construct them directly so they do not
//! depend on the I/O layer.

use crate::numerics::{Distribution, StochasticMatrix};
use crate::scm::{Mechanism, Scm, VariableSpec};

fn root(name: &str, probs: &[f64]) -> Mechanism {
    Mechanism::root(name, &Distribution::new(probs.to_vec()).unwrap())
}

fn mech(name: &str, parents: &[&str], rows: &[Vec<f64>]) -> Mechanism {
    Mechanism::new(
        name,
        parents.iter().copied(),
        StochasticMatrix::from_rows(rows).unwrap(),
    )
}

/// Detailed three-variable model: exposure `E`, symptom `S`, condition `C`,
/// with `E -> S`, `E -> C`, `S -> C`.
pub fn m() -> Scm {
    Scm::new(
        vec![
            VariableSpec::indexed("E", 2),
            VariableSpec::indexed("S", 2),
            VariableSpec::indexed("C", 2),
        ],
        vec![
            root("E", &[0.8, 0.2]),
            mech("S", &["E"], &[vec![0.8, 0.6], vec![0.2, 0.4]]),
            mech(
                "C",
                &["E", "S"],
                &[vec![0.9, 0.4, 0.8, 0.3], vec![0.1, 0.6, 0.2, 0.7]],
            ),
        ],
    )
    .unwrap()
}

/// Two-variable summary of [`m`]: `S' -> C'` with the exposure summed out.
pub fn m_prime() -> Scm {
    Scm::new(
        vec![VariableSpec::indexed("S'", 2), VariableSpec::indexed("C'", 2)],
        vec![
            root("S'", &[0.2, 0.8]),
            mech("C'", &["S'"], &[vec![0.88, 0.38], vec![0.12, 0.62]]),
        ],
    )
    .unwrap()
}

/// Like [`m_prime`] but with a perturbed condition mechanism.
pub fn m_dprime() -> Scm {
    Scm::new(
        vec![VariableSpec::indexed("S''", 2), VariableSpec::indexed("C''", 2)],
        vec![
            root("S''", &[0.2, 0.8]),
            mech("C''", &["S''"], &[vec![0.8, 0.3], vec![0.2, 0.7]]),
        ],
    )
    .unwrap()
}

/// Like [`m_prime`] but with the root marginal flipped to match the base
/// model's symptom marginal orientation.
pub fn m_tprime() -> Scm {
    Scm::new(
        vec![VariableSpec::indexed("S'''", 2), VariableSpec::indexed("C'''", 2)],
        vec![
            root("S'''", &[0.8, 0.2]),
            mech("C'''", &["S'''"], &[vec![0.88, 0.38], vec![0.12, 0.62]]),
        ],
    )
    .unwrap()
}

/// The one-variable, one-outcome model: everything collapses to a point.
pub fn m_star() -> Scm {
    Scm::new(
        vec![VariableSpec::new("star", ["*"])],
        vec![root("star", &[1.0])],
    )
    .unwrap()
}
