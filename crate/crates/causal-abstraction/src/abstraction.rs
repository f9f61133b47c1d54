//! Abstractions between a detailed base model and a coarser high-level
//! model, and the two scores that grade them.
//!
//! An abstraction picks a subset of base variables that matter (the
//! *relevant* set), maps each of them onto a high-level variable (the
//! *variable map*, surjective so every high variable is hit), and for each
//! high variable supplies a surjective deterministic *outcome map* from the
//! joint outcomes of its preimage variables onto its own outcomes.
//!
//! Two numbers grade an abstraction:
//!
//! - **consistency error** `e`: the worst Jensen-Shannon distance, over all
//!   admissible pairs of high-variable subsets and all interventions on the
//!   corresponding base variables, between "intervene low, then abstract"
//!   and "abstract, then intervene high" ([`Abstraction::diagram_error`]);
//! - **information loss** `i`: the Jensen-Shannon distance between the base
//!   joint distribution and its reconstruction from the high joint through
//!   the abstraction's uniform-preimage inverse
//!   ([`Abstraction::information_loss`]).
//!
//! [`Abstraction::evaluate`] combines both into the objective `e + λ·i`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::indexing;
use crate::numerics::{
    jsd_distance, l1_normalize_columns, BinaryStochasticMatrix, Matrix, NumericsError,
    StochasticMatrix,
};
use crate::scm::{InterventionAssignment, Scm, ScmError};

/// A single defect found while validating an abstraction's components.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbstractionViolation {
    #[error("variable map uses unknown base variable {name:?}")]
    UnknownBaseVariable { name: String },
    #[error("variable map targets unknown high variable {name:?}")]
    UnknownHighVariable { name: String },
    #[error("variable map does not cover high variable {variable:?}")]
    VarmapNotSurjective { variable: String },
    #[error("variable map is empty: at least one base variable must be relevant")]
    EmptyRelevantSet,
    #[error("expected {expected} outcome maps (one per high variable), found {found}")]
    OutcomeMapCount { expected: usize, found: usize },
    #[error(
        "outcome map for {variable:?} is {found_rows}x{found_cols}, expected {expected_rows}x{expected_cols} (high outcomes x preimage configurations)"
    )]
    OutcomeMapShape {
        variable: String,
        expected_rows: usize,
        found_rows: usize,
        expected_cols: usize,
        found_cols: usize,
    },
    #[error("outcome map for {variable:?} is not surjective: outcome index {missing} is never hit")]
    OutcomeMapNotSurjective { variable: String, missing: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbstractionError {
    #[error("invalid abstraction: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { violations: Vec<AbstractionViolation> },
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Checks abstraction components against the two models and returns every
/// defect found (empty means valid): the variable map must relate existing
/// variables and cover every high variable, and each high variable needs
/// one surjective outcome map of the right shape.
pub fn validate_abstraction(
    base: &Scm,
    high: &Scm,
    varmap: &BTreeMap<String, String>,
    outcome_maps: &[BinaryStochasticMatrix],
) -> Vec<AbstractionViolation> {
    let mut violations = Vec::new();

    if varmap.is_empty() {
        violations.push(AbstractionViolation::EmptyRelevantSet);
    }
    let mut names_ok = true;
    for (from, to) in varmap {
        if base.var_index(from).is_err() {
            violations.push(AbstractionViolation::UnknownBaseVariable { name: from.clone() });
            names_ok = false;
        }
        if high.var_index(to).is_err() {
            violations.push(AbstractionViolation::UnknownHighVariable { name: to.clone() });
            names_ok = false;
        }
    }
    for variable in high.variables() {
        if !varmap.values().any(|to| to == variable.name()) {
            violations
                .push(AbstractionViolation::VarmapNotSurjective { variable: variable.name().to_string() });
        }
    }

    if outcome_maps.len() != high.variables().len() {
        violations.push(AbstractionViolation::OutcomeMapCount {
            expected: high.variables().len(),
            found: outcome_maps.len(),
        });
        return violations;
    }
    if !names_ok {
        // Preimage shapes are ill-defined while the varmap names dangle.
        return violations;
    }

    for (high_index, (variable, map)) in high.variables().iter().zip(outcome_maps).enumerate() {
        let preimage = preimage_of(base, high, varmap, high_index);
        let expected_cols = indexing::joint_len(
            &preimage.iter().map(|&b| base.variables()[b].cardinality()).collect::<Vec<_>>(),
        );
        let expected_rows = variable.cardinality();
        if map.rows() != expected_rows || map.cols() != expected_cols {
            violations.push(AbstractionViolation::OutcomeMapShape {
                variable: variable.name().to_string(),
                expected_rows,
                found_rows: map.rows(),
                expected_cols,
                found_cols: map.cols(),
            });
            continue;
        }
        if let Some(missing) = map.surjectivity_gap() {
            violations.push(AbstractionViolation::OutcomeMapNotSurjective {
                variable: variable.name().to_string(),
                missing,
            });
        }
    }

    violations
}

/// Base variable indices mapped to the high variable at `high_index`, in
/// base declaration order.
fn preimage_of(
    base: &Scm,
    high: &Scm,
    varmap: &BTreeMap<String, String>,
    high_index: usize,
) -> Vec<usize> {
    let high_name = high.variables()[high_index].name();
    let mut indices: Vec<usize> = varmap
        .iter()
        .filter(|(_, to)| to.as_str() == high_name)
        .map(|(from, _)| base.var_index(from).expect("validated base variable"))
        .collect();
    indices.sort_unstable();
    indices
}

/// The discrepancy of one commuting-diagram pair: for sources `X'` and
/// targets `Y'` (high-variable subsets), the worst Jensen-Shannon distance
/// over all interventions on the base preimage of `X'` between the
/// abstract-then-intervene and intervene-then-abstract paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramError {
    sources: Vec<String>,
    targets: Vec<String>,
    value: f64,
    worst_intervention: InterventionAssignment,
}

impl DiagramError {
    /// High-variable names of the intervened subset, in declaration order.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// High-variable names of the observed subset, in declaration order.
    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// The maximal path discrepancy, in [0, sqrt(ln 2)].
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The base-level intervention attaining [`Self::value`] (the first
    /// one in canonical order when several tie).
    pub fn worst_intervention(&self) -> &InterventionAssignment {
        &self.worst_intervention
    }
}

/// The full scorecard of one abstraction at a given trade-off weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    e: f64,
    i: f64,
    lambda: f64,
    objective: f64,
    per_diagram: Vec<DiagramError>,
}

impl EvaluationReport {
    /// Consistency error: the worst per-diagram discrepancy (0 with no
    /// admissible diagrams).
    pub fn e(&self) -> f64 {
        self.e
    }

    /// Information loss of the uniform-preimage reconstruction.
    pub fn i(&self) -> f64 {
        self.i
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `e + lambda * i`, exactly as computed from the stored fields.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// One entry per admissible diagram, in enumeration order.
    pub fn per_diagram(&self) -> &[DiagramError] {
        &self.per_diagram
    }
}

/// A validated abstraction: the base and high models, the variable map
/// from relevant base variables onto high variables, and one outcome map
/// per high variable (aligned with high declaration order).
#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    base: Scm,
    high: Scm,
    varmap: BTreeMap<String, String>,
    outcome_maps: Vec<BinaryStochasticMatrix>,
}

impl Abstraction {
    /// Validates the components and builds the abstraction; all defects are
    /// reported at once through [`AbstractionError::Invalid`].
    ///
    /// `outcome_maps[j]` belongs to the high variable at declaration index
    /// `j`; its columns range over the joint outcomes of that variable's
    /// preimage (base declaration order, first variable slowest).
    pub fn new(
        base: Scm,
        high: Scm,
        varmap: BTreeMap<String, String>,
        outcome_maps: Vec<BinaryStochasticMatrix>,
    ) -> Result<Self, AbstractionError> {
        let violations = validate_abstraction(&base, &high, &varmap, &outcome_maps);
        if !violations.is_empty() {
            return Err(AbstractionError::Invalid { violations });
        }
        Ok(Self { base, high, varmap, outcome_maps })
    }

    /// The identity abstraction of a model onto itself: every variable is
    /// relevant and maps to itself with the identity outcome map.
    pub fn identity(model: &Scm) -> Self {
        let varmap = model
            .variables()
            .iter()
            .map(|v| (v.name().to_string(), v.name().to_string()))
            .collect();
        let outcome_maps = model
            .variables()
            .iter()
            .map(|v| {
                BinaryStochasticMatrix::new(v.cardinality(), (0..v.cardinality()).collect())
                    .expect("identity assignment is within range")
            })
            .collect();
        Self { base: model.clone(), high: model.clone(), varmap, outcome_maps }
    }

    pub fn base(&self) -> &Scm {
        &self.base
    }

    pub fn high(&self) -> &Scm {
        &self.high
    }

    /// The variable map as `base name -> high name`; its key set is the
    /// relevant set.
    pub fn varmap(&self) -> &BTreeMap<String, String> {
        &self.varmap
    }

    /// Indices of relevant base variables, in base declaration order.
    pub fn relevant(&self) -> Vec<usize> {
        let mut indices: Vec<usize> = self
            .varmap
            .keys()
            .map(|name| self.base.var_index(name).expect("validated base variable"))
            .collect();
        indices.sort_unstable();
        indices
    }

    /// Outcome maps aligned with high declaration order.
    pub fn outcome_maps(&self) -> &[BinaryStochasticMatrix] {
        &self.outcome_maps
    }

    /// Base variable indices mapped to the high variable at `high_index`,
    /// in base declaration order.
    pub fn preimage(&self, high_index: usize) -> Vec<usize> {
        preimage_of(&self.base, &self.high, &self.varmap, high_index)
    }

    /// Like [`Self::preimage`], but as variable names.
    pub fn preimage_names(&self, high_index: usize) -> Vec<&str> {
        self.preimage(high_index)
            .into_iter()
            .map(|b| self.base.variables()[b].name())
            .collect()
    }

    /// The outcome map of a whole high-variable subset: columns range over
    /// the joint outcomes of the combined base preimage (base declaration
    /// order), rows over the joint outcomes of `high_set` (given order).
    /// Equals the Kronecker product of the component maps permuted to the
    /// canonical index convention.
    fn composite_outcome_map(&self, high_set: &[usize]) -> BinaryStochasticMatrix {
        let base_cards = self.base.cardinalities();
        let high_cards: Vec<usize> =
            high_set.iter().map(|&j| self.high.variables()[j].cardinality()).collect();

        let low_vars = self.preimage_union(high_set);
        let low_cards: Vec<usize> = low_vars.iter().map(|&b| base_cards[b]).collect();
        let position_of: BTreeMap<usize, usize> =
            low_vars.iter().enumerate().map(|(pos, &b)| (b, pos)).collect();

        // Per high variable: positions of its preimage inside `low_vars`,
        // with cardinalities, for sub-config extraction.
        let per_high: Vec<(Vec<usize>, Vec<usize>)> = high_set
            .iter()
            .map(|&j| {
                let pre = self.preimage(j);
                let positions: Vec<usize> = pre.iter().map(|b| position_of[b]).collect();
                let cards: Vec<usize> = pre.iter().map(|&b| base_cards[b]).collect();
                (positions, cards)
            })
            .collect();

        let mut assignment = Vec::with_capacity(indexing::joint_len(&low_cards));
        for low_digits in indexing::assignments(&low_cards) {
            let high_digits: Vec<usize> = high_set
                .iter()
                .enumerate()
                .map(|(slot, &j)| {
                    let (positions, cards) = &per_high[slot];
                    let digits: Vec<usize> = positions.iter().map(|&p| low_digits[p]).collect();
                    self.outcome_maps[j].image(indexing::encode(cards, &digits))
                })
                .collect();
            assignment.push(indexing::encode(&high_cards, &high_digits));
        }
        BinaryStochasticMatrix::new(indexing::joint_len(&high_cards), assignment)
            .expect("composite images are within the high joint range")
    }

    /// Combined preimage of a high-variable subset, in base declaration
    /// order.
    fn preimage_union(&self, high_set: &[usize]) -> Vec<usize> {
        let mut vars: Vec<usize> = high_set.iter().flat_map(|&j| self.preimage(j)).collect();
        vars.sort_unstable();
        vars
    }

    /// Resolves high-variable names to distinct indices sorted into
    /// declaration order.
    fn resolve_high_set(&self, names: &[&str]) -> Result<Vec<usize>, AbstractionError> {
        if names.is_empty() {
            return Err(ScmError::EmptyVariableList.into());
        }
        let mut seen = BTreeSet::new();
        for &name in names {
            let index = self.high.var_index(name)?;
            if !seen.insert(index) {
                return Err(ScmError::DuplicateQueryVariable { name: name.to_string() }.into());
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Measures one commuting diagram: for every intervention `x` on the
    /// base preimage of `sources`, compares pushing the base interventional
    /// distribution of the target preimage through the outcome maps (the
    /// low path) against the high model's own interventional distribution
    /// under the abstracted intervention (the high path). Within-set order
    /// is canonicalized to declaration order.
    pub fn diagram_error(
        &self,
        sources: &[&str],
        targets: &[&str],
    ) -> Result<DiagramError, AbstractionError> {
        let source_set = self.resolve_high_set(sources)?;
        let target_set = self.resolve_high_set(targets)?;
        if let Some(&shared) = source_set.iter().find(|j| target_set.contains(j)) {
            return Err(ScmError::OverlappingQuerySets {
                name: self.high.variables()[shared].name().to_string(),
            }
            .into());
        }
        self.diagram_error_resolved(&source_set, &target_set)
    }

    fn diagram_error_resolved(
        &self,
        source_set: &[usize],
        target_set: &[usize],
    ) -> Result<DiagramError, AbstractionError> {
        let base_cards = self.base.cardinalities();

        let low_sources = self.preimage_union(source_set);
        let low_targets = self.preimage_union(target_set);
        let low_source_names: Vec<&str> =
            low_sources.iter().map(|&b| self.base.variables()[b].name()).collect();
        let low_target_names: Vec<&str> =
            low_targets.iter().map(|&b| self.base.variables()[b].name()).collect();
        let high_source_names: Vec<&str> =
            source_set.iter().map(|&j| self.high.variables()[j].name()).collect();
        let high_target_names: Vec<&str> =
            target_set.iter().map(|&j| self.high.variables()[j].name()).collect();

        let base_virtual = self.base.virtual_mechanism(&low_source_names, &low_target_names)?;
        let high_virtual = self.high.virtual_mechanism(&high_source_names, &high_target_names)?;
        let source_map = self.composite_outcome_map(source_set);
        let target_map = self.composite_outcome_map(target_set);

        let low_source_cards: Vec<usize> = low_sources.iter().map(|&b| base_cards[b]).collect();
        let mut best_value = -1.0;
        let mut best_config = 0;
        for config in 0..base_virtual.cols() {
            let low_path = target_map.push_forward(&base_virtual.column_distribution(config))?;
            let high_path = high_virtual.column_distribution(source_map.image(config));
            let distance = jsd_distance(&low_path, &high_path)?;
            if distance > best_value {
                best_value = distance;
                best_config = config;
            }
        }

        let digits = indexing::decode(&low_source_cards, best_config);
        let mut worst_intervention = InterventionAssignment::new();
        for (&b, digit) in low_sources.iter().zip(digits) {
            worst_intervention
                .set(self.base.variables()[b].name(), &self.base.variables()[b].outcomes()[digit])
                .expect("base variable names are distinct");
        }

        Ok(DiagramError {
            sources: high_source_names.iter().map(|s| s.to_string()).collect(),
            targets: high_target_names.iter().map(|s| s.to_string()).collect(),
            value: best_value,
            worst_intervention,
        })
    }

    /// All admissible diagram pairs `(X', Y')`: ordered pairs of disjoint
    /// nonempty high-variable subsets where some variable of `Y'` descends
    /// from some variable of `X'` in the high graph (intervening on `X'`
    /// could not move an unrelated `Y'`, so such pairs carry no
    /// information). Deterministic order: by source size, then target size,
    /// then the subsets' canonical index masks.
    pub fn enumerate_diagrams(&self) -> Vec<(Vec<String>, Vec<String>)> {
        self.diagram_pairs()
            .into_iter()
            .map(|(sources, targets)| {
                (
                    sources
                        .into_iter()
                        .map(|j| self.high.variables()[j].name().to_string())
                        .collect(),
                    targets
                        .into_iter()
                        .map(|j| self.high.variables()[j].name().to_string())
                        .collect(),
                )
            })
            .collect()
    }

    fn diagram_pairs(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let k = self.high.variables().len();
        let descendants: Vec<BTreeSet<usize>> =
            (0..k).map(|j| self.high.descendants(j)).collect();

        let mut masks: Vec<(u32, u32)> = Vec::new();
        for source_mask in 1u32..(1 << k) {
            for target_mask in 1u32..(1 << k) {
                if source_mask & target_mask != 0 {
                    continue;
                }
                let reachable = (0..k)
                    .filter(|&i| source_mask & (1 << i) != 0)
                    .any(|i| {
                        (0..k).any(|j| target_mask & (1 << j) != 0 && descendants[i].contains(&j))
                    });
                if reachable {
                    masks.push((source_mask, target_mask));
                }
            }
        }
        masks.sort_by_key(|&(s, t)| (s.count_ones(), t.count_ones(), s, t));
        masks
            .into_iter()
            .map(|(s, t)| {
                (
                    (0..k).filter(|&i| s & (1 << i) != 0).collect(),
                    (0..k).filter(|&j| t & (1 << j) != 0).collect(),
                )
            })
            .collect()
    }

    /// The consistency error `e`: the maximum [`Self::diagram_error`] over
    /// all admissible diagrams, and 0 when there are none (a single
    /// high variable admits no pair).
    pub fn abstraction_error(&self) -> Result<f64, AbstractionError> {
        let mut worst: f64 = 0.0;
        for (sources, targets) in self.diagram_pairs() {
            let diagram = self.diagram_error_resolved(&sources, &targets)?;
            worst = worst.max(diagram.value);
        }
        Ok(worst)
    }

    /// The reconstruction map from high joint outcomes to base joint
    /// outcomes: each high outcome spreads its mass uniformly over the base
    /// joint outcomes that abstract to it (relevant coordinates must land
    /// in the right outcome-map preimages; non-relevant coordinates are
    /// free). Columns sum to 1 and are constant on their support.
    pub fn global_inverse(&self) -> StochasticMatrix {
        let base_cards = self.base.cardinalities();
        let high_cards = self.high.cardinalities();
        let rows = indexing::joint_len(&base_cards);
        let cols = indexing::joint_len(&high_cards);

        // Every base config abstracts to exactly one high config; bucket
        // base indices by their image and spread each column uniformly.
        let per_high: Vec<(Vec<usize>, Vec<usize>)> = (0..self.high.variables().len())
            .map(|j| {
                let pre = self.preimage(j);
                let cards: Vec<usize> = pre.iter().map(|&b| base_cards[b]).collect();
                (pre, cards)
            })
            .collect();

        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cols];
        for (base_index, digits) in indexing::assignments(&base_cards).enumerate() {
            let high_digits: Vec<usize> = per_high
                .iter()
                .enumerate()
                .map(|(j, (pre, cards))| {
                    let sub: Vec<usize> = pre.iter().map(|&b| digits[b]).collect();
                    self.outcome_maps[j].image(indexing::encode(cards, &sub))
                })
                .collect();
            buckets[indexing::encode(&high_cards, &high_digits)].push(base_index);
        }

        let mut data = vec![0.0; rows * cols];
        for (col, bucket) in buckets.iter().enumerate() {
            debug_assert!(!bucket.is_empty(), "surjective maps leave no empty bucket");
            let mass = 1.0 / bucket.len() as f64;
            for &row in bucket {
                data[row * cols + col] = mass;
            }
        }
        let matrix = Matrix::new(rows, cols, data).expect("dimensions are positive");
        StochasticMatrix::new_unchecked(matrix)
    }

    /// The information loss `i`: the Jensen-Shannon distance between the
    /// base joint and the reconstruction of the high joint through
    /// [`Self::global_inverse`].
    pub fn information_loss(&self) -> Result<f64, AbstractionError> {
        let reconstruction = self.global_inverse().apply(&self.high.joint_distribution())?;
        Ok(jsd_distance(&self.base.joint_distribution(), &reconstruction)?)
    }

    /// The full scorecard: consistency error `e` with per-diagram detail,
    /// information loss `i`, and the combined objective `e + lambda * i`.
    pub fn evaluate(&self, lambda: f64) -> Result<EvaluationReport, AbstractionError> {
        let mut per_diagram = Vec::new();
        let mut e: f64 = 0.0;
        for (sources, targets) in self.diagram_pairs() {
            let diagram = self.diagram_error_resolved(&sources, &targets)?;
            e = e.max(diagram.value);
            per_diagram.push(diagram);
        }
        let i = self.information_loss()?;
        Ok(EvaluationReport { e, i, lambda, objective: e + lambda * i, per_diagram })
    }
}

/// The inverse of a single outcome map: transpose, then normalize each
/// column to unit mass, so a high outcome spreads uniformly over its
/// preimage (the maximum-entropy choice). Coincides with the Moore-Penrose
/// pseudoinverse for surjective binary column-stochastic maps.
pub fn component_inverse(
    map: &BinaryStochasticMatrix,
) -> Result<StochasticMatrix, NumericsError> {
    if let Some(missing) = map.surjectivity_gap() {
        return Err(NumericsError::NotSurjective { row: missing });
    }
    l1_normalize_columns(&map.to_matrix().transpose())
}
