//! Finite structural causal models: variables, mechanisms, interventions,
//! and the distributions they induce.
//!
//! A model is a list of variables, each with a finite outcome set, plus
//! exactly one column-stochastic mechanism per variable giving
//! `P(variable | parents)`. Roots condition on the empty parent list, whose
//! joint space has the single empty configuration, so their mechanisms are
//! one-column matrices. Mechanism columns are indexed over parent
//! configurations in the mechanism's parent order, first parent slowest
//! (see [`crate::indexing`]).
//!
//! Interventions are perfect: `do(X = x)` replaces the mechanism of `X` by a
//! parentless point mass and thereby cuts all incoming edges. Everything
//! else — joints, marginals, conditionals, interventional mechanisms between
//! variable sets — is derived by exhaustive enumeration of the joint outcome
//! space.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::indexing;
use crate::numerics::{Distribution, Matrix, NumericsError, StochasticMatrix};

/// A named variable with its finite, ordered outcome set. Outcome labels
/// are arbitrary distinct strings; their list position is the outcome index
/// used everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    name: String,
    outcomes: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, outcomes: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
        }
    }

    /// Convenience for variables with outcomes labelled `"0" .. "n-1"`.
    pub fn indexed(name: impl Into<String>, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            outcomes: (0..cardinality).map(|i| i.to_string()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn cardinality(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }
}

/// The mechanism of one variable: `P(target | parents)` as a
/// column-stochastic matrix with one row per target outcome and one column
/// per joint parent configuration (first parent slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    target: String,
    parents: Vec<String>,
    matrix: StochasticMatrix,
}

impl Mechanism {
    pub fn new(
        target: impl Into<String>,
        parents: impl IntoIterator<Item = impl Into<String>>,
        matrix: StochasticMatrix,
    ) -> Self {
        Self {
            target: target.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            matrix,
        }
    }

    /// A parentless mechanism from a single distribution column.
    pub fn root(target: impl Into<String>, column: &Distribution) -> Self {
        let rows: Vec<Vec<f64>> = column.iter().map(|&p| vec![p]).collect();
        Self {
            target: target.into(),
            parents: Vec::new(),
            matrix: StochasticMatrix::from_rows(&rows).expect("a distribution is a valid column"),
        }
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }
}

/// A single structural defect found during model validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("duplicate variable name {name:?}")]
    DuplicateVariable { name: String },
    #[error("variable {variable:?} has an empty outcome set")]
    EmptyOutcomes { variable: String },
    #[error("variable {variable:?} repeats outcome label {outcome:?}")]
    DuplicateOutcome { variable: String, outcome: String },
    #[error("variable {variable:?} has no mechanism")]
    MissingMechanism { variable: String },
    #[error("variable {variable:?} has more than one mechanism")]
    DuplicateMechanism { variable: String },
    #[error("mechanism targets unknown variable {target:?}")]
    UnknownMechanismTarget { target: String },
    #[error("mechanism of {variable:?} lists unknown parent {parent:?}")]
    UnknownParent { variable: String, parent: String },
    #[error("mechanism of {variable:?} repeats parent {parent:?}")]
    DuplicateParent { variable: String, parent: String },
    #[error("variable {variable:?} is its own parent")]
    SelfParent { variable: String },
    #[error("mechanism of {variable:?} has {found} rows, expected {expected} (one per outcome)")]
    WrongRowCount { variable: String, expected: usize, found: usize },
    #[error(
        "mechanism of {variable:?} has {found} columns, expected {expected} (one per parent configuration)"
    )]
    WrongColumnCount { variable: String, expected: usize, found: usize },
    #[error("mechanism of {variable:?} is not column-stochastic: {detail}")]
    MechanismNotStochastic { variable: String, detail: String },
    #[error("cycle: {}", path.join(" -> "))]
    Cycle { path: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error("invalid model: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { violations: Vec<Violation> },
    #[error("unknown variable {name:?}")]
    UnknownVariable { name: String },
    #[error("variable {variable:?} has no outcome {outcome:?}")]
    UnknownOutcome { variable: String, outcome: String },
    #[error("variable {name:?} appears more than once in the query")]
    DuplicateQueryVariable { name: String },
    #[error("variable {name:?} cannot appear in both query sets")]
    OverlappingQuerySets { name: String },
    #[error("the query needs at least one variable")]
    EmptyVariableList,
    #[error("assignment is missing variables: {}", missing.join(", "))]
    IncompleteAssignment { missing: Vec<String> },
    #[error("conditioning event has zero probability: {assignment}")]
    NullConditioningEvent { assignment: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A partial assignment of outcome labels to variables, used both for
/// interventions `do(X = x, ...)` and for joint-index queries. Entries are
/// kept sorted by variable name; validation against a concrete model
/// happens at the point of use.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterventionAssignment {
    entries: BTreeMap<String, String>,
}

impl InterventionAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ScmError> {
        let mut assignment = Self::new();
        for (variable, outcome) in pairs {
            assignment.set(variable, outcome)?;
        }
        Ok(assignment)
    }

    /// Adds one `variable = outcome` entry; the variable must not already
    /// be assigned.
    pub fn set(&mut self, variable: &str, outcome: &str) -> Result<(), ScmError> {
        if self.entries.contains_key(variable) {
            return Err(ScmError::DuplicateQueryVariable { name: variable.to_string() });
        }
        self.entries.insert(variable.to_string(), outcome.to_string());
        Ok(())
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.entries.get(variable).map(String::as_str)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for InterventionAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (variable, outcome) in &self.entries {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{variable}={outcome}")?;
            first = false;
        }
        Ok(())
    }
}

/// Checks the structural invariants of a candidate model and returns every
/// defect found (empty means valid): distinct variable names and outcome
/// labels, exactly one mechanism per variable, known distinct parents,
/// matrix dimensions matching outcome counts and parent configurations, and
/// an acyclic parent graph. Mechanism stochasticity is enforced by
/// [`StochasticMatrix`] at construction.
pub fn validate(variables: &[VariableSpec], mechanisms: &[Mechanism]) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    for variable in variables {
        if !seen.insert(variable.name()) {
            violations.push(Violation::DuplicateVariable { name: variable.name().to_string() });
        }
        if variable.outcomes().is_empty() {
            violations.push(Violation::EmptyOutcomes { variable: variable.name().to_string() });
        }
        let mut outcomes = BTreeSet::new();
        for outcome in variable.outcomes() {
            if !outcomes.insert(outcome.as_str()) {
                violations.push(Violation::DuplicateOutcome {
                    variable: variable.name().to_string(),
                    outcome: outcome.clone(),
                });
            }
        }
    }

    let index_of: BTreeMap<&str, usize> =
        variables.iter().enumerate().map(|(i, v)| (v.name(), i)).collect();

    let mut mechanism_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for mechanism in mechanisms {
        let target = mechanism.target();
        let Some(&target_index) = index_of.get(target) else {
            violations.push(Violation::UnknownMechanismTarget { target: target.to_string() });
            continue;
        };
        *mechanism_counts.entry(target).or_insert(0) += 1;

        let mut parent_cards = Vec::with_capacity(mechanism.parents().len());
        let mut parent_seen = BTreeSet::new();
        let mut shape_known = true;
        for parent in mechanism.parents() {
            if parent == target {
                violations.push(Violation::SelfParent { variable: target.to_string() });
            }
            if !parent_seen.insert(parent.as_str()) {
                violations.push(Violation::DuplicateParent {
                    variable: target.to_string(),
                    parent: parent.clone(),
                });
            }
            match index_of.get(parent.as_str()) {
                Some(&p) => parent_cards.push(variables[p].cardinality()),
                None => {
                    violations.push(Violation::UnknownParent {
                        variable: target.to_string(),
                        parent: parent.clone(),
                    });
                    shape_known = false;
                }
            }
        }

        let expected_rows = variables[target_index].cardinality();
        if mechanism.matrix().rows() != expected_rows {
            violations.push(Violation::WrongRowCount {
                variable: target.to_string(),
                expected: expected_rows,
                found: mechanism.matrix().rows(),
            });
        }
        if shape_known {
            let expected_cols = indexing::joint_len(&parent_cards);
            if mechanism.matrix().cols() != expected_cols {
                violations.push(Violation::WrongColumnCount {
                    variable: target.to_string(),
                    expected: expected_cols,
                    found: mechanism.matrix().cols(),
                });
            }
        }
    }

    for variable in variables {
        match mechanism_counts.get(variable.name()) {
            None => violations
                .push(Violation::MissingMechanism { variable: variable.name().to_string() }),
            Some(&n) if n > 1 => violations
                .push(Violation::DuplicateMechanism { variable: variable.name().to_string() }),
            _ => {}
        }
    }

    if let Some(path) = find_cycle(variables, mechanisms, &index_of) {
        violations.push(Violation::Cycle { path });
    }

    violations
}

/// Depth-first search for a cycle in the parent graph; returns a concrete
/// closed path `v0 -> v1 -> ... -> v0` when one exists.
fn find_cycle(
    variables: &[VariableSpec],
    mechanisms: &[Mechanism],
    index_of: &BTreeMap<&str, usize>,
) -> Option<Vec<String>> {
    let n = variables.len();
    // children[i] = variables whose mechanism lists variable i as a parent
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for mechanism in mechanisms {
        let Some(&target) = index_of.get(mechanism.target()) else { continue };
        for parent in mechanism.parents() {
            if let Some(&p) = index_of.get(parent.as_str()) {
                children[p].push(target);
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks = vec![Mark::White; n];
    let mut stack: Vec<usize> = Vec::new();

    fn dfs(
        node: usize,
        children: &[Vec<usize>],
        marks: &mut [Mark],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        marks[node] = Mark::Grey;
        stack.push(node);
        for &child in &children[node] {
            match marks[child] {
                Mark::Grey => {
                    let start = stack.iter().position(|&v| v == child).expect("grey is on stack");
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(child);
                    return Some(cycle);
                }
                Mark::White => {
                    if let Some(cycle) = dfs(child, children, marks, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Black => {}
            }
        }
        stack.pop();
        marks[node] = Mark::Black;
        None
    }

    for start in 0..n {
        if marks[start] == Mark::White {
            if let Some(cycle) = dfs(start, &children, &mut marks, &mut stack) {
                return Some(cycle.into_iter().map(|i| variables[i].name().to_string()).collect());
            }
        }
    }
    None
}

/// A validated finite structural causal model. Immutable once built;
/// interventions return new models.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    variables: Vec<VariableSpec>,
    // Aligned with `variables`: mechanisms[i].target() == variables[i].name().
    mechanisms: Vec<Mechanism>,
}

impl Scm {
    /// Validates the parts and builds the model; all defects are reported
    /// at once through [`ScmError::Invalid`].
    pub fn new(variables: Vec<VariableSpec>, mechanisms: Vec<Mechanism>) -> Result<Self, ScmError> {
        let violations = validate(&variables, &mechanisms);
        if !violations.is_empty() {
            return Err(ScmError::Invalid { violations });
        }
        let mut by_target: BTreeMap<String, Mechanism> =
            mechanisms.into_iter().map(|m| (m.target().to_string(), m)).collect();
        let mechanisms = variables
            .iter()
            .map(|v| by_target.remove(v.name()).expect("validated: one mechanism per variable"))
            .collect();
        Ok(Self { variables, mechanisms })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn mechanisms(&self) -> &[Mechanism] {
        &self.mechanisms
    }

    /// The mechanism of the variable at declaration index `index`.
    pub fn mechanism(&self, index: usize) -> &Mechanism {
        &self.mechanisms[index]
    }

    pub fn var_index(&self, name: &str) -> Result<usize, ScmError> {
        self.variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| ScmError::UnknownVariable { name: name.to_string() })
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(VariableSpec::cardinality).collect()
    }

    /// Number of joint configurations of all variables.
    pub fn joint_len(&self) -> usize {
        indexing::joint_len(&self.cardinalities())
    }

    /// Strict descendants of the variable at `index` in the parent graph.
    pub fn descendants(&self, index: usize) -> BTreeSet<usize> {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.variables.len()];
        for (target, mechanism) in self.mechanisms.iter().enumerate() {
            for parent in mechanism.parents() {
                let p = self.var_index(parent).expect("validated parent");
                children[p].push(target);
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![index];
        while let Some(node) = stack.pop() {
            for &child in &children[node] {
                if seen.insert(child) {
                    stack.push(child);
                }
            }
        }
        seen
    }

    /// Resolves an assignment over **all** variables to its canonical joint
    /// index (declaration order, first variable slowest).
    pub fn joint_index(&self, assignment: &InterventionAssignment) -> Result<usize, ScmError> {
        let digits = self.resolve_total(assignment)?;
        Ok(indexing::encode(&self.cardinalities(), &digits))
    }

    /// The outcome labels behind a joint index, in declaration order.
    pub fn joint_assignment(&self, index: usize) -> Vec<(&str, &str)> {
        let digits = indexing::decode(&self.cardinalities(), index);
        self.variables
            .iter()
            .zip(digits)
            .map(|(v, d)| (v.name(), v.outcomes()[d].as_str()))
            .collect()
    }

    /// The joint distribution over all variables, by exhaustive enumeration:
    /// each configuration's probability is the product of one mechanism
    /// entry per variable.
    pub fn joint_distribution(&self) -> Distribution {
        let cards = self.cardinalities();
        let parent_info: Vec<(Vec<usize>, Vec<usize>)> = self
            .mechanisms
            .iter()
            .map(|m| {
                let indices: Vec<usize> = m
                    .parents()
                    .iter()
                    .map(|p| self.var_index(p).expect("validated parent"))
                    .collect();
                let cards: Vec<usize> = indices.iter().map(|&i| cards[i]).collect();
                (indices, cards)
            })
            .collect();

        let mut probs = Vec::with_capacity(indexing::joint_len(&cards));
        for digits in indexing::assignments(&cards) {
            let mut p = 1.0;
            for (index, mechanism) in self.mechanisms.iter().enumerate() {
                let (parent_indices, parent_cards) = &parent_info[index];
                let parent_digits: Vec<usize> =
                    parent_indices.iter().map(|&i| digits[i]).collect();
                let col = indexing::encode(parent_cards, &parent_digits);
                p *= mechanism.matrix().entry(digits[index], col);
            }
            probs.push(p);
        }
        Distribution::new_unchecked(probs)
    }

    /// Applies a perfect intervention: every assigned variable's mechanism
    /// is replaced by a parentless point mass on the assigned outcome,
    /// cutting its incoming edges. Unassigned variables are untouched.
    pub fn intervene(&self, intervention: &InterventionAssignment) -> Result<Scm, ScmError> {
        let mut targets: BTreeMap<usize, usize> = BTreeMap::new();
        for (variable, outcome) in intervention.iter() {
            let index = self.var_index(variable)?;
            let outcome_index = self.outcome_index(index, outcome)?;
            targets.insert(index, outcome_index);
        }
        let mechanisms = self
            .mechanisms
            .iter()
            .enumerate()
            .map(|(index, mechanism)| match targets.get(&index) {
                Some(&outcome_index) => {
                    let point = Distribution::point_mass(
                        self.variables[index].cardinality(),
                        outcome_index,
                    )
                    .expect("variables have at least one outcome");
                    Mechanism::root(self.variables[index].name(), &point)
                }
                None => mechanism.clone(),
            })
            .collect();
        // Point-mass surgery only removes edges, so the result stays valid.
        Ok(Scm { variables: self.variables.clone(), mechanisms })
    }

    /// Marginal distribution over `vars` (distinct, in the requested
    /// order), indexed with the first requested variable slowest.
    pub fn marginal(&self, vars: &[&str]) -> Result<Distribution, ScmError> {
        if vars.is_empty() {
            return Err(ScmError::EmptyVariableList);
        }
        let selected = self.resolve_distinct(vars)?;
        let joint = self.joint_distribution();
        let cards = self.cardinalities();
        let selected_cards: Vec<usize> = selected.iter().map(|&i| cards[i]).collect();

        let mut out = vec![0.0; indexing::joint_len(&selected_cards)];
        for (index, digits) in indexing::assignments(&cards).enumerate() {
            let selected_digits: Vec<usize> = selected.iter().map(|&i| digits[i]).collect();
            out[indexing::encode(&selected_cards, &selected_digits)] += joint.get(index);
        }
        Ok(Distribution::new_unchecked(out))
    }

    /// Conditional distribution `P(targets | givens)` as a matrix with one
    /// column per given configuration and one row per target configuration.
    /// With no givens the single column is the plain marginal. Errors when
    /// a given configuration has zero probability.
    pub fn conditional(
        &self,
        targets: &[&str],
        givens: &[&str],
    ) -> Result<StochasticMatrix, ScmError> {
        if targets.is_empty() {
            return Err(ScmError::EmptyVariableList);
        }
        let target_indices = self.resolve_distinct(targets)?;
        let given_indices = self.resolve_distinct(givens)?;
        for (name, index) in givens.iter().zip(&given_indices) {
            if target_indices.contains(index) {
                return Err(ScmError::OverlappingQuerySets { name: name.to_string() });
            }
        }

        let cards = self.cardinalities();
        let target_cards: Vec<usize> = target_indices.iter().map(|&i| cards[i]).collect();
        let given_cards: Vec<usize> = given_indices.iter().map(|&i| cards[i]).collect();
        let rows = indexing::joint_len(&target_cards);
        let cols = indexing::joint_len(&given_cards);

        // One enumeration pass accumulates P(targets, givens).
        let joint = self.joint_distribution();
        let mut mass = vec![0.0; rows * cols];
        for (index, digits) in indexing::assignments(&cards).enumerate() {
            let row = indexing::encode(
                &target_cards,
                &target_indices.iter().map(|&i| digits[i]).collect::<Vec<_>>(),
            );
            let col = indexing::encode(
                &given_cards,
                &given_indices.iter().map(|&i| digits[i]).collect::<Vec<_>>(),
            );
            mass[row * cols + col] += joint.get(index);
        }

        let mut data = vec![0.0; rows * cols];
        for col in 0..cols {
            let total: f64 = (0..rows).map(|row| mass[row * cols + col]).sum();
            if total <= 0.0 {
                let digits = indexing::decode(&given_cards, col);
                let assignment = given_indices
                    .iter()
                    .zip(digits)
                    .map(|(&i, d)| {
                        format!("{}={}", self.variables[i].name(), self.variables[i].outcomes()[d])
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(ScmError::NullConditioningEvent { assignment });
            }
            for row in 0..rows {
                data[row * cols + col] = mass[row * cols + col] / total;
            }
        }
        let matrix = Matrix::new(rows, cols, data).expect("dimensions are positive");
        Ok(StochasticMatrix::new_unchecked(matrix))
    }

    /// The interventional mechanism from `sources` to `targets`: column `x`
    /// is the marginal of `targets` in the model intervened with
    /// `do(sources = x)`. Columns are indexed over source configurations in
    /// the requested order (first source slowest).
    pub fn virtual_mechanism(
        &self,
        sources: &[&str],
        targets: &[&str],
    ) -> Result<StochasticMatrix, ScmError> {
        if sources.is_empty() || targets.is_empty() {
            return Err(ScmError::EmptyVariableList);
        }
        let source_indices = self.resolve_distinct(sources)?;
        self.resolve_distinct(targets)?;
        for (name, index) in sources.iter().zip(&source_indices) {
            if targets.contains(name) {
                return Err(ScmError::OverlappingQuerySets { name: name.to_string() });
            }
            let _ = index;
        }

        let cards = self.cardinalities();
        let source_cards: Vec<usize> = source_indices.iter().map(|&i| cards[i]).collect();
        let mut columns: Vec<Distribution> = Vec::with_capacity(indexing::joint_len(&source_cards));
        for digits in indexing::assignments(&source_cards) {
            let mut intervention = InterventionAssignment::new();
            for (&source_index, digit) in source_indices.iter().zip(digits) {
                intervention.set(
                    self.variables[source_index].name(),
                    &self.variables[source_index].outcomes()[digit],
                )?;
            }
            columns.push(self.intervene(&intervention)?.marginal(targets)?);
        }

        let rows = columns[0].len();
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (col, column) in columns.iter().enumerate() {
            for row in 0..rows {
                data[row * cols + col] = column.get(row);
            }
        }
        let matrix = Matrix::new(rows, cols, data).expect("dimensions are positive");
        Ok(StochasticMatrix::new_unchecked(matrix))
    }

    fn outcome_index(&self, variable: usize, outcome: &str) -> Result<usize, ScmError> {
        self.variables[variable].outcome_index(outcome).ok_or_else(|| ScmError::UnknownOutcome {
            variable: self.variables[variable].name().to_string(),
            outcome: outcome.to_string(),
        })
    }

    /// Maps names to declaration indices, rejecting unknowns and repeats.
    fn resolve_distinct(&self, names: &[&str]) -> Result<Vec<usize>, ScmError> {
        let mut seen = BTreeSet::new();
        let mut indices = Vec::with_capacity(names.len());
        for &name in names {
            let index = self.var_index(name)?;
            if !seen.insert(index) {
                return Err(ScmError::DuplicateQueryVariable { name: name.to_string() });
            }
            indices.push(index);
        }
        Ok(indices)
    }

    /// Resolves a total assignment into per-variable outcome digits in
    /// declaration order.
    fn resolve_total(&self, assignment: &InterventionAssignment) -> Result<Vec<usize>, ScmError> {
        for variable in assignment.variables() {
            self.var_index(variable)?;
        }
        let mut digits = Vec::with_capacity(self.variables.len());
        let mut missing = Vec::new();
        for (index, variable) in self.variables.iter().enumerate() {
            match assignment.get(variable.name()) {
                Some(outcome) => digits.push(self.outcome_index(index, outcome)?),
                None => missing.push(variable.name().to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(ScmError::IncompleteAssignment { missing });
        }
        Ok(digits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_models::{m, m_prime, m_star, m_tprime};

    fn assert_vec_close(actual: &Distribution, expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (&a, &e)) in actual.as_slice().iter().zip(expected).enumerate() {
            assert!(
                (a - e).abs() <= tol,
                "index {i}: expected {e}, got {a} (tolerance {tol:e})"
            );
        }
    }

    fn assert_matrix_close(actual: &StochasticMatrix, expected: &[Vec<f64>], tol: f64) {
        assert_eq!(actual.rows(), expected.len());
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(actual.cols(), row.len());
            for (c, &e) in row.iter().enumerate() {
                let a = actual.entry(r, c);
                assert!(
                    (a - e).abs() <= tol,
                    "entry ({r}, {c}): expected {e}, got {a}"
                );
            }
        }
    }

    #[test]
    fn valid_models_pass_validation() {
        for model in [m(), m_prime(), m_star(), m_tprime()] {
            assert!(validate(model.variables(), model.mechanisms()).is_empty());
        }
    }

    #[test]
    fn validation_reports_cycles_with_the_actual_path() {
        // E <- C closes E -> S -> C into a cycle.
        let model = m();
        let mut mechanisms = model.mechanisms().to_vec();
        mechanisms[0] = Mechanism::new(
            "E",
            ["C"],
            StochasticMatrix::from_rows(&[vec![0.8, 0.6], vec![0.2, 0.4]]).unwrap(),
        );
        let violations = validate(model.variables(), &mechanisms);
        assert!(
            violations.iter().any(|v| matches!(v, Violation::Cycle { path }
                if path.first() == path.last() && path.len() == 4)),
            "expected a 3-cycle, got {violations:?}"
        );
    }

    #[test]
    fn validation_reports_shape_and_bookkeeping_defects() {
        let variables = vec![
            VariableSpec::indexed("A", 2),
            VariableSpec::indexed("A", 2),
            VariableSpec::new("B", Vec::<String>::new()),
        ];
        let mechanisms = vec![Mechanism::new(
            "A",
            ["Z", "A"],
            StochasticMatrix::from_rows(&[vec![0.5], vec![0.5]]).unwrap(),
        )];
        let violations = validate(&variables, &mechanisms);
        let strings: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        assert!(strings.iter().any(|s| s.contains("duplicate variable name")), "{strings:?}");
        assert!(strings.iter().any(|s| s.contains("empty outcome set")), "{strings:?}");
        assert!(strings.iter().any(|s| s.contains("unknown parent \"Z\"")), "{strings:?}");
        assert!(strings.iter().any(|s| s.contains("its own parent")), "{strings:?}");
        assert!(strings.iter().any(|s| s.contains("has no mechanism")), "{strings:?}");
    }

    #[test]
    fn scm_new_rejects_wrong_mechanism_shapes() {
        let variables = vec![VariableSpec::indexed("A", 2), VariableSpec::indexed("B", 2)];
        let mechanisms = vec![
            Mechanism::new(
                "A",
                Vec::<String>::new(),
                // Two columns for a parentless mechanism: wrong.
                StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            ),
            Mechanism::new(
                "B",
                Vec::<String>::new(),
                StochasticMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            ),
        ];
        let err = Scm::new(variables, mechanisms).unwrap_err();
        let ScmError::Invalid { violations } = err else { panic!("expected Invalid") };
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::WrongColumnCount { expected: 1, found: 2, .. })));
    }

    #[test]
    fn joint_distribution_matches_hand_enumeration() {
        assert_vec_close(
            &m().joint_distribution(),
            &[0.576, 0.064, 0.064, 0.096, 0.096, 0.024, 0.024, 0.056],
            1e-12,
        );
        assert_vec_close(&m_prime().joint_distribution(), &[0.176, 0.024, 0.304, 0.496], 1e-12);
        assert_vec_close(&m_tprime().joint_distribution(), &[0.704, 0.096, 0.076, 0.124], 1e-12);
        assert_vec_close(&m_star().joint_distribution(), &[1.0], 1e-15);
    }

    #[test]
    fn joint_distribution_agrees_with_factorized_recomputation() {
        // Independent route: sum out variables one conditional at a time
        // instead of multiplying mechanism entries per configuration.
        let model = m();
        let phi_e = model.mechanism(0).matrix();
        let phi_s = model.mechanism(1).matrix();
        let phi_c = model.mechanism(2).matrix();
        let joint = model.joint_distribution();
        for e in 0..2 {
            for s in 0..2 {
                for c in 0..2 {
                    let expected =
                        phi_e.entry(e, 0) * phi_s.entry(s, e) * phi_c.entry(c, e * 2 + s);
                    let actual = joint.get(e * 4 + s * 2 + c);
                    assert!((actual - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn joint_index_round_trips() {
        let model = m();
        let assignment =
            InterventionAssignment::from_pairs([("E", "1"), ("S", "0"), ("C", "1")]).unwrap();
        let index = model.joint_index(&assignment).unwrap();
        assert_eq!(index, 5);
        assert_eq!(model.joint_assignment(5), vec![("E", "1"), ("S", "0"), ("C", "1")]);
    }

    #[test]
    fn joint_index_requires_total_assignment() {
        let model = m();
        let partial = InterventionAssignment::from_pairs([("E", "1")]).unwrap();
        let err = model.joint_index(&partial).unwrap_err();
        assert_eq!(
            err,
            ScmError::IncompleteAssignment { missing: vec!["S".into(), "C".into()] }
        );
    }

    #[test]
    fn intervention_replaces_mechanism_with_point_mass() {
        let model = m();
        let intervened =
            model.intervene(&InterventionAssignment::from_pairs([("S", "0")]).unwrap()).unwrap();
        let mechanism = intervened.mechanism(1);
        assert!(mechanism.parents().is_empty());
        assert_eq!(mechanism.matrix().entry(0, 0), 1.0);
        assert_eq!(mechanism.matrix().entry(1, 0), 0.0);
        assert_vec_close(
            &intervened.joint_distribution(),
            &[0.72, 0.08, 0.0, 0.0, 0.16, 0.04, 0.0, 0.0],
            1e-12,
        );
        // Other mechanisms are untouched.
        assert_eq!(intervened.mechanism(2), model.mechanism(2));
    }

    #[test]
    fn intervention_is_idempotent_and_composable() {
        let model = m();
        let do_s = InterventionAssignment::from_pairs([("S", "0")]).unwrap();
        let once = model.intervene(&do_s).unwrap();
        let twice = once.intervene(&do_s).unwrap();
        assert_eq!(once, twice);

        let total =
            InterventionAssignment::from_pairs([("E", "1"), ("S", "0"), ("C", "1")]).unwrap();
        let pinned = model.intervene(&total).unwrap();
        let mut expected = vec![0.0; 8];
        expected[5] = 1.0;
        assert_vec_close(&pinned.joint_distribution(), &expected, 1e-15);
    }

    #[test]
    fn intervention_rejects_unknown_targets() {
        let model = m();
        let err = model
            .intervene(&InterventionAssignment::from_pairs([("Q", "0")]).unwrap())
            .unwrap_err();
        assert_eq!(err, ScmError::UnknownVariable { name: "Q".into() });
        let err = model
            .intervene(&InterventionAssignment::from_pairs([("S", "2")]).unwrap())
            .unwrap_err();
        assert_eq!(err, ScmError::UnknownOutcome { variable: "S".into(), outcome: "2".into() });
    }

    #[test]
    fn marginals_match_hand_computed_values() {
        let model = m();
        assert_vec_close(&model.marginal(&["S"]).unwrap(), &[0.76, 0.24], 1e-12);
        assert_vec_close(&model.marginal(&["C"]).unwrap(), &[0.76, 0.24], 1e-12);
        assert_vec_close(
            &model.marginal(&["S", "C"]).unwrap(),
            &[0.672, 0.088, 0.088, 0.152],
            1e-12,
        );
        assert_vec_close(&m_prime().marginal(&["S'"]).unwrap(), &[0.2, 0.8], 1e-12);
        assert_vec_close(&m_prime().marginal(&["C'"]).unwrap(), &[0.48, 0.52], 1e-12);
    }

    #[test]
    fn marginal_respects_requested_order() {
        // P(C', S') permutes the joint: first requested variable slowest.
        assert_vec_close(
            &m_prime().marginal(&["C'", "S'"]).unwrap(),
            &[0.176, 0.304, 0.024, 0.496],
            1e-12,
        );
    }

    #[test]
    fn marginal_over_all_variables_is_the_joint() {
        let model = m();
        assert_eq!(
            model.marginal(&["E", "S", "C"]).unwrap(),
            model.joint_distribution()
        );
    }

    #[test]
    fn marginal_rejects_bad_queries() {
        let model = m();
        assert_eq!(model.marginal(&[]).unwrap_err(), ScmError::EmptyVariableList);
        assert_eq!(
            model.marginal(&["S", "S"]).unwrap_err(),
            ScmError::DuplicateQueryVariable { name: "S".into() }
        );
        assert_eq!(
            model.marginal(&["Q"]).unwrap_err(),
            ScmError::UnknownVariable { name: "Q".into() }
        );
    }

    #[test]
    fn conditionals_match_hand_computed_values() {
        assert_matrix_close(
            &m().conditional(&["S"], &["C"]).unwrap(),
            &[
                vec![0.8842105263157894, 0.3666666666666667],
                vec![0.11578947368421053, 0.6333333333333333],
            ],
            1e-12,
        );
        assert_matrix_close(
            &m_prime().conditional(&["S'"], &["C'"]).unwrap(),
            &[
                vec![0.36666666666666664, 0.046153846153846156],
                vec![0.6333333333333333, 0.9538461538461538],
            ],
            1e-12,
        );
    }

    #[test]
    fn conditional_without_givens_is_the_marginal() {
        let model = m();
        let conditional = model.conditional(&["S"], &[]).unwrap();
        assert_eq!((conditional.rows(), conditional.cols()), (2, 1));
        let marginal = model.marginal(&["S"]).unwrap();
        assert_vec_close(&conditional.column_distribution(0), marginal.as_slice(), 1e-12);
    }

    #[test]
    fn conditional_rejects_null_events_and_overlap() {
        // P(E = 1) = 0 makes conditioning on it undefined.
        let variables = vec![VariableSpec::indexed("E", 2), VariableSpec::indexed("S", 2)];
        let mechanisms = vec![
            Mechanism::new(
                "E",
                Vec::<String>::new(),
                StochasticMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            ),
            Mechanism::new("S", ["E"], StochasticMatrix::identity(2)),
        ];
        let model = Scm::new(variables, mechanisms).unwrap();
        let err = model.conditional(&["S"], &["E"]).unwrap_err();
        assert_eq!(err, ScmError::NullConditioningEvent { assignment: "E=1".into() });

        let err = m().conditional(&["S"], &["S"]).unwrap_err();
        assert_eq!(err, ScmError::OverlappingQuerySets { name: "S".into() });
    }

    #[test]
    fn virtual_mechanism_matches_hand_computed_values() {
        assert_matrix_close(
            &m().virtual_mechanism(&["S"], &["C"]).unwrap(),
            &[vec![0.88, 0.38], vec![0.12, 0.62]],
            1e-12,
        );
        assert_matrix_close(
            &m().virtual_mechanism(&["E"], &["C"]).unwrap(),
            &[vec![0.8, 0.6], vec![0.2, 0.4]],
            1e-12,
        );
    }

    #[test]
    fn virtual_mechanism_reproduces_mechanisms_under_full_parent_control() {
        // Intervening on all parents of C recovers phi_C column by column.
        assert_matrix_close(
            &m().virtual_mechanism(&["E", "S"], &["C"]).unwrap(),
            &[vec![0.9, 0.4, 0.8, 0.3], vec![0.1, 0.6, 0.2, 0.7]],
            1e-12,
        );
        assert_matrix_close(
            &m_prime().virtual_mechanism(&["S'"], &["C'"]).unwrap(),
            &[vec![0.88, 0.38], vec![0.12, 0.62]],
            1e-12,
        );
    }

    #[test]
    fn virtual_mechanism_on_non_ancestors_is_the_plain_marginal() {
        // C has no directed path to S, so do(C) leaves P(S) untouched.
        let virtual_mechanism = m().virtual_mechanism(&["C"], &["S"]).unwrap();
        assert_matrix_close(&virtual_mechanism, &[vec![0.76, 0.76], vec![0.24, 0.24]], 1e-12);
    }

    #[test]
    fn virtual_mechanism_rejects_bad_queries() {
        let model = m();
        assert_eq!(
            model.virtual_mechanism(&["S"], &["S"]).unwrap_err(),
            ScmError::OverlappingQuerySets { name: "S".into() }
        );
        assert_eq!(model.virtual_mechanism(&[], &["S"]).unwrap_err(), ScmError::EmptyVariableList);
    }

    #[test]
    fn descendants_follow_the_parent_graph() {
        let model = m();
        assert_eq!(model.descendants(0), BTreeSet::from([1, 2]));
        assert_eq!(model.descendants(1), BTreeSet::from([2]));
        assert_eq!(model.descendants(2), BTreeSet::new());
    }

    #[test]
    fn intervention_assignment_display_is_sorted_and_stable() {
        let assignment =
            InterventionAssignment::from_pairs([("S", "1"), ("E", "0")]).unwrap();
        assert_eq!(assignment.to_string(), "E=0, S=1");
        let err = InterventionAssignment::from_pairs([("S", "1"), ("S", "0")]).unwrap_err();
        assert_eq!(err, ScmError::DuplicateQueryVariable { name: "S".into() });
    }
}
