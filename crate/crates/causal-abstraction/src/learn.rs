//! Exhaustive, deterministic search over abstraction spaces.
//!
//! A [`LearningProblem`] fixes a base model and says which parts of the
//! abstraction are given versus searched, in a hierarchy of six classes
//! ([`ProblemSpec`]): from scoring one fully specified candidate
//! (assessment) up to designing the entire high-level model under size
//! caps (model design). [`solve`] enumerates every candidate in a fixed
//! deterministic nesting — variable count, then outcome cardinalities,
//! then high DAGs, then relevant sets, variable maps, and outcome maps —
//! scores each with [`Abstraction::evaluate`], and ranks them by
//! `(objective, e, i, canonical encoding)`. A candidate budget truncates
//! oversized spaces to a deterministic prefix instead of erroring.
//!
//! High-level mechanisms are never searched over directly: whenever they
//! are not given, [`fit_mechanisms`] derives them from the base model by
//! averaging abstracted interventional distributions over outcome-map
//! preimages (roots get the pushforward of the base marginal), which
//! reproduces the canonical reference mechanisms whenever preimages are
//! singletons.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::abstraction::{Abstraction, AbstractionError, EvaluationReport};
use crate::indexing;
use crate::numerics::{BinaryStochasticMatrix, Distribution, Matrix, NumericsError, StochasticMatrix};
use crate::scm::{Scm, ScmError, VariableSpec};

/// Default candidate budget: enumeration stops (flagged, not an error)
/// after this many evaluations.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Default number of ranked candidates retained in a [`SolverResult`].
pub const DEFAULT_TOP_K: usize = 10;

/// Largest supported high-variable count for classes that enumerate DAGs;
/// beyond this the DAG space alone (2^(k(k-1)) edge sets) stops being
/// desk-scale.
pub const MAX_DAG_VARIABLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemClass {
    /// Everything given; score the single candidate.
    Assessment,
    /// High model, relevant set, and variable map given; enumerate the
    /// missing outcome maps.
    Completion,
    /// High model given; enumerate relevant sets, variable maps, and
    /// outcome maps.
    AbstractionDesign,
    /// High variables given; additionally enumerate high DAGs and fit
    /// mechanisms.
    MechanismDesign,
    /// High variable names given; additionally enumerate outcome
    /// cardinalities up to the cap.
    GranularityDesign,
    /// Nothing given; additionally enumerate the high variable count up to
    /// the cap, with generated names.
    ModelDesign,
}

impl ProblemClass {
    pub fn name(self) -> &'static str {
        match self {
            ProblemClass::Assessment => "assessment",
            ProblemClass::Completion => "completion",
            ProblemClass::AbstractionDesign => "abstraction_design",
            ProblemClass::MechanismDesign => "mechanism_design",
            ProblemClass::GranularityDesign => "granularity_design",
            ProblemClass::ModelDesign => "model_design",
        }
    }
}

/// Search-space bounds. `budget` caps candidate evaluations across all
/// classes; the two size caps only matter for the classes that design the
/// high model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    pub max_high_variables: usize,
    pub max_outcome_cardinality: usize,
    pub budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_high_variables: 2, max_outcome_cardinality: 2, budget: DEFAULT_BUDGET }
    }
}

/// The given parts of each problem class.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Assessment {
        high: Scm,
        varmap: BTreeMap<String, String>,
        outcome_maps: Vec<BinaryStochasticMatrix>,
    },
    Completion {
        high: Scm,
        varmap: BTreeMap<String, String>,
        /// Outcome maps already fixed, keyed by high variable name; the
        /// solver enumerates maps for the absent variables.
        given_maps: BTreeMap<String, BinaryStochasticMatrix>,
    },
    AbstractionDesign {
        high: Scm,
    },
    MechanismDesign {
        high_variables: Vec<VariableSpec>,
    },
    GranularityDesign {
        high_variable_names: Vec<String>,
    },
    ModelDesign,
}

impl ProblemSpec {
    pub fn class(&self) -> ProblemClass {
        match self {
            ProblemSpec::Assessment { .. } => ProblemClass::Assessment,
            ProblemSpec::Completion { .. } => ProblemClass::Completion,
            ProblemSpec::AbstractionDesign { .. } => ProblemClass::AbstractionDesign,
            ProblemSpec::MechanismDesign { .. } => ProblemClass::MechanismDesign,
            ProblemSpec::GranularityDesign { .. } => ProblemClass::GranularityDesign,
            ProblemSpec::ModelDesign => ProblemClass::ModelDesign,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningProblem {
    pub base: Scm,
    pub spec: ProblemSpec,
    pub caps: Caps,
    pub lambda: f64,
    pub top_k: usize,
}

impl LearningProblem {
    pub fn new(base: Scm, spec: ProblemSpec) -> Self {
        Self { base, spec, caps: Caps::default(), lambda: 1.0, top_k: DEFAULT_TOP_K }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        self
    }

    pub fn with_top_k(mut self, top_k: usize) -> Self {
        self.top_k = top_k;
        self
    }

    pub fn base(&self) -> &Scm {
        &self.base
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no surjective map exists from {domain} onto {codomain} outcomes")]
    NoSurjectiveMap { domain: usize, codomain: usize },
    #[error("inconsistent problem: {detail}")]
    InconsistentProblem { detail: String },
    #[error("the search space contains no candidate")]
    NoCandidates,
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One scored point of the search space.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    abstraction: Abstraction,
    report: EvaluationReport,
    encoding: Vec<u64>,
}

impl Candidate {
    pub fn abstraction(&self) -> &Abstraction {
        &self.abstraction
    }

    pub fn high(&self) -> &Scm {
        self.abstraction.high()
    }

    pub fn report(&self) -> &EvaluationReport {
        &self.report
    }

    /// The canonical encoding used as the final ranking tie-break:
    /// variable count, cardinalities, DAG edge mask, relevant-set mask,
    /// variable-map table, outcome-map assignments, then the high
    /// mechanisms' raw bits.
    pub fn encoding(&self) -> &[u64] {
        &self.encoding
    }

    /// A compact human-readable digest of the structural part of the
    /// encoding (mechanism bits omitted).
    pub fn encoding_string(&self) -> String {
        let high = self.abstraction.high();
        let k = high.variables().len();
        let cards: Vec<String> = high.cardinalities().iter().map(|c| c.to_string()).collect();
        let relevant = self
            .abstraction
            .relevant()
            .iter()
            .map(|&b| self.abstraction.base().variables()[b].name().to_string())
            .collect::<Vec<_>>()
            .join(",");
        let varmap = self
            .abstraction
            .varmap()
            .iter()
            .map(|(from, to)| format!("{from}>{to}"))
            .collect::<Vec<_>>()
            .join(",");
        let maps = self
            .abstraction
            .outcome_maps()
            .iter()
            .map(|map| {
                map.assignment()
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join("")
            })
            .collect::<Vec<_>>()
            .join("|");
        format!(
            "k={k} cards=[{}] dag={:#x} R={{{relevant}}} a={{{varmap}}} maps={maps}",
            cards.join(","),
            dag_mask_of(high),
        )
    }
}

/// Ranked search output. `ranked` holds the best `top_k` candidates in
/// ranking order (so `best()` is `ranked[0]`); `pareto` holds every
/// non-dominated candidate under `(e, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    ranked: Vec<Candidate>,
    pareto: Vec<Candidate>,
    candidates_evaluated: u64,
    exhaustive: bool,
}

impl SolverResult {
    pub fn best(&self) -> &Candidate {
        &self.ranked[0]
    }

    pub fn ranked(&self) -> &[Candidate] {
        &self.ranked
    }

    pub fn candidates_evaluated(&self) -> u64 {
        self.candidates_evaluated
    }

    /// False when the budget truncated enumeration; the ranking then covers
    /// only the deterministic prefix that was evaluated.
    pub fn exhaustive(&self) -> bool {
        self.exhaustive
    }
}

/// The non-dominated candidates under `(e, i)`: no other evaluated
/// candidate is at least as good on both scores and strictly better on
/// one. Candidates with identical `(e, i)` are all retained. Deterministic
/// order: the ranking key.
pub fn pareto_front(result: &SolverResult) -> &[Candidate] {
    &result.pareto
}

/// All surjective deterministic outcome maps from `domain` onto `codomain`
/// outcomes, in lexicographic order of the column-to-row assignment
/// vector. The count is `codomain! * S(domain, codomain)` (a Stirling
/// surjection count).
pub fn enumerate_outcome_maps(
    domain: usize,
    codomain: usize,
) -> Result<impl Iterator<Item = BinaryStochasticMatrix>, LearnError> {
    if codomain == 0 || domain < codomain {
        return Err(LearnError::NoSurjectiveMap { domain, codomain });
    }
    Ok(SurjectiveAssignments::new(domain, codomain).map(move |assignment| {
        BinaryStochasticMatrix::new(codomain, assignment)
            .expect("assignments stay within the codomain")
    }))
}

/// Lexicographic stream of surjective assignment vectors
/// `[0, codomain)^domain` (first position most significant). Surjective
/// maps are dense in the full space wherever the space is large, so
/// increment-and-filter enumeration stays cheap.
struct SurjectiveAssignments {
    domain: usize,
    codomain: usize,
    next: Option<Vec<usize>>,
}

impl SurjectiveAssignments {
    fn new(domain: usize, codomain: usize) -> Self {
        Self { domain, codomain, next: Some(vec![0; domain]) }
    }

    fn advance(&mut self) {
        let Some(current) = self.next.as_mut() else { return };
        for pos in (0..self.domain).rev() {
            if current[pos] + 1 < self.codomain {
                current[pos] += 1;
                current[pos + 1..].fill(0);
                return;
            }
        }
        self.next = None;
    }
}

impl Iterator for SurjectiveAssignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            let candidate = self.next.clone()?;
            self.advance();
            let mut hit = vec![false; self.codomain];
            for &row in &candidate {
                hit[row] = true;
            }
            if hit.iter().all(|&h| h) {
                return Some(candidate);
            }
        }
    }
}

/// All pairs of a nonempty relevant subset of the base variables and a
/// surjective variable map onto `high_var_count` high variables.
/// Deterministic order: relevant-set bitmasks ascending (bit = base
/// declaration index), then map tables lexicographically. Each item is
/// `(relevant base indices ascending, map table aligned with them)`.
pub fn enumerate_varmaps(
    base_var_count: usize,
    high_var_count: usize,
) -> Result<impl Iterator<Item = (Vec<usize>, Vec<usize>)>, LearnError> {
    if high_var_count == 0 || high_var_count > base_var_count {
        return Err(LearnError::InconsistentProblem {
            detail: format!(
                "no surjective variable map from {base_var_count} base onto {high_var_count} high variables"
            ),
        });
    }
    if base_var_count >= 64 {
        return Err(LearnError::InconsistentProblem {
            detail: format!("{base_var_count} base variables exceed the desk-scale subset range"),
        });
    }
    let iter = (1u64..(1 << base_var_count)).flat_map(move |mask| {
        let relevant: Vec<usize> =
            (0..base_var_count).filter(|&b| mask & (1 << b) != 0).collect();
        let feasible = relevant.len() >= high_var_count;
        feasible
            .then(|| {
                let relevant = relevant.clone();
                SurjectiveAssignments::new(relevant.len(), high_var_count)
                    .map(move |table| (relevant.clone(), table))
            })
            .into_iter()
            .flatten()
    });
    Ok(iter)
}

/// Edge mask of a high model's parent graph: bit `parent * k + child`.
fn dag_mask_of(high: &Scm) -> u64 {
    let k = high.variables().len();
    let mut mask = 0u64;
    for (child, mechanism) in high.mechanisms().iter().enumerate() {
        for parent in mechanism.parents() {
            let p = high.var_index(parent).expect("validated parent");
            mask |= 1 << (p * k + child);
        }
    }
    mask
}

/// All DAGs over `k` ordered variables as edge masks (bit `i*k + j` for an
/// edge `i -> j`), ascending. The space is `2^(k(k-1))` candidate masks
/// filtered by acyclicity, so `k` is capped at [`MAX_DAG_VARIABLES`].
fn enumerate_dags(k: usize) -> Result<Vec<u64>, LearnError> {
    if k > MAX_DAG_VARIABLES {
        return Err(LearnError::InconsistentProblem {
            detail: format!("{k} high variables exceed the DAG enumeration cap of {MAX_DAG_VARIABLES}"),
        });
    }
    // Off-diagonal bit positions ascending; mapping combination bits onto
    // them preserves numeric order, so the output is ascending by mask.
    let positions: Vec<usize> = (0..k * k).filter(|p| p / k != p % k).collect();
    let mut masks = Vec::new();
    for combo in 0u64..(1 << positions.len()) {
        let mut mask = 0u64;
        for (bit, &pos) in positions.iter().enumerate() {
            if combo & (1 << bit) != 0 {
                mask |= 1 << pos;
            }
        }
        if is_acyclic(k, mask) {
            masks.push(mask);
        }
    }
    Ok(masks)
}

fn is_acyclic(k: usize, mask: u64) -> bool {
    // Repeatedly strip nodes without unremoved parents.
    let mut removed = vec![false; k];
    for _ in 0..k {
        let next = (0..k).find(|&j| {
            !removed[j] && (0..k).all(|i| removed[i] || mask & (1 << (i * k + j)) == 0)
        });
        match next {
            Some(j) => removed[j] = true,
            None => return false,
        }
    }
    true
}

/// Parent lists (ascending) per child for a DAG edge mask.
fn parents_from_mask(k: usize, mask: u64) -> Vec<Vec<usize>> {
    (0..k)
        .map(|child| (0..k).filter(|&p| mask & (1 << (p * k + child)) != 0).collect())
        .collect()
}

/// Derives high-level mechanisms from the base model for a given high
/// skeleton (variables plus parent sets) and abstraction components. For a
/// variable with parents, each mechanism column averages, over the base
/// interventions that abstract to that parent configuration, the
/// outcome-map pushforward of the base interventional distribution of the
/// variable's preimage; a root variable's single column is the pushforward
/// of its preimage's base marginal.
pub fn fit_mechanisms(
    base: &Scm,
    high_variables: &[VariableSpec],
    parent_sets: &[Vec<usize>],
    varmap: &BTreeMap<String, String>,
    outcome_maps: &[BinaryStochasticMatrix],
) -> Result<Scm, LearnError> {
    let k = high_variables.len();
    assert_eq!(parent_sets.len(), k, "one parent set per high variable");
    assert_eq!(outcome_maps.len(), k, "one outcome map per high variable");

    // Preimages per high variable, in base declaration order.
    let preimages: Vec<Vec<usize>> = (0..k)
        .map(|j| {
            let name = high_variables[j].name();
            let mut pre: Vec<usize> = varmap
                .iter()
                .filter(|(_, to)| to.as_str() == name)
                .map(|(from, _)| base.var_index(from))
                .collect::<Result<_, _>>()?;
            pre.sort_unstable();
            Ok::<_, LearnError>(pre)
        })
        .collect::<Result<_, _>>()?;
    let base_cards = base.cardinalities();
    let names: Vec<&str> = base.variables().iter().map(|v| v.name()).collect();

    let mut mechanisms = Vec::with_capacity(k);
    for j in 0..k {
        let target_names: Vec<&str> = preimages[j].iter().map(|&b| names[b]).collect();
        let parents = &parent_sets[j];
        let matrix = if parents.is_empty() {
            let marginal = base.marginal(&target_names)?;
            let pushed = outcome_maps[j].push_forward(&marginal)?;
            column_matrix(&[pushed])
        } else {
            // Combined preimage of the parent set, base declaration order.
            let mut low_sources: Vec<usize> =
                parents.iter().flat_map(|&p| preimages[p].iter().copied()).collect();
            low_sources.sort_unstable();
            let source_names: Vec<&str> = low_sources.iter().map(|&b| names[b]).collect();
            let source_cards: Vec<usize> = low_sources.iter().map(|&b| base_cards[b]).collect();
            let virtual_mechanism = base.virtual_mechanism(&source_names, &target_names)?;

            // Which high parent configuration each base intervention
            // abstracts to, through the per-parent outcome maps.
            let parent_cards: Vec<usize> =
                parents.iter().map(|&p| high_variables[p].cardinality()).collect();
            let position_of: BTreeMap<usize, usize> =
                low_sources.iter().enumerate().map(|(pos, &b)| (b, pos)).collect();
            let mut buckets: Vec<Vec<usize>> =
                vec![Vec::new(); indexing::joint_len(&parent_cards)];
            for (config, digits) in indexing::assignments(&source_cards).enumerate() {
                let parent_digits: Vec<usize> = parents
                    .iter()
                    .map(|&p| {
                        let sub: Vec<usize> =
                            preimages[p].iter().map(|&b| digits[position_of[&b]]).collect();
                        let cards: Vec<usize> =
                            preimages[p].iter().map(|&b| base_cards[b]).collect();
                        outcome_maps[p].image(indexing::encode(&cards, &sub))
                    })
                    .collect();
                buckets[indexing::encode(&parent_cards, &parent_digits)].push(config);
            }

            let mut columns = Vec::with_capacity(buckets.len());
            for bucket in &buckets {
                debug_assert!(!bucket.is_empty(), "surjective maps leave no empty bucket");
                let mut acc = vec![0.0; high_variables[j].cardinality()];
                for &config in bucket {
                    let pushed = outcome_maps[j]
                        .push_forward(&virtual_mechanism.column_distribution(config))?;
                    for (slot, &value) in acc.iter_mut().zip(pushed.as_slice()) {
                        *slot += value;
                    }
                }
                let scale = 1.0 / bucket.len() as f64;
                columns.push(Distribution::new_unchecked(
                    acc.into_iter().map(|v| v * scale).collect(),
                ));
            }
            column_matrix(&columns)
        };
        let parent_names =
            parents.iter().map(|&p| high_variables[p].name().to_string()).collect::<Vec<_>>();
        mechanisms.push(crate::scm::Mechanism::new(
            high_variables[j].name(),
            parent_names,
            matrix,
        ));
    }

    Ok(Scm::new(high_variables.to_vec(), mechanisms)?)
}

fn column_matrix(columns: &[Distribution]) -> StochasticMatrix {
    let rows = columns[0].len();
    let cols = columns.len();
    let mut data = vec![0.0; rows * cols];
    for (col, column) in columns.iter().enumerate() {
        for row in 0..rows {
            data[row * cols + col] = column.get(row);
        }
    }
    StochasticMatrix::new_unchecked(Matrix::new(rows, cols, data).expect("positive dimensions"))
}

/// Shared accumulator: ranking buffer, Pareto front, budget bookkeeping.
struct SearchState {
    lambda: f64,
    top_k: usize,
    budget: u64,
    ranked: Vec<Candidate>,
    pareto: Vec<Candidate>,
    evaluated: u64,
    truncated: bool,
}

impl SearchState {
    fn new(problem: &LearningProblem) -> Self {
        Self {
            lambda: problem.lambda,
            top_k: problem.top_k,
            budget: problem.caps.budget,
            ranked: Vec::new(),
            pareto: Vec::new(),
            evaluated: 0,
            truncated: false,
        }
    }

    /// Scores one candidate and folds it into the buffers. Signals `Break`
    /// once the budget is exhausted and another candidate arrives.
    fn offer(
        &mut self,
        abstraction: Abstraction,
        encoding: Vec<u64>,
    ) -> Result<ControlFlow<()>, LearnError> {
        if self.evaluated == self.budget {
            self.truncated = true;
            return Ok(ControlFlow::Break(()));
        }
        let report = abstraction.evaluate(self.lambda)?;
        self.evaluated += 1;
        let candidate = Candidate { abstraction, report, encoding };
        self.fold_pareto(&candidate);
        self.fold_ranked(candidate);
        Ok(ControlFlow::Continue(()))
    }

    fn fold_ranked(&mut self, candidate: Candidate) {
        let position = self
            .ranked
            .partition_point(|existing| rank_order(existing, &candidate).is_lt());
        if position < self.top_k {
            self.ranked.insert(position, candidate);
            self.ranked.truncate(self.top_k);
        }
    }

    fn fold_pareto(&mut self, candidate: &Candidate) {
        let (e, i) = (candidate.report.e(), candidate.report.i());
        let dominated = self.pareto.iter().any(|p| {
            let (pe, pi) = (p.report.e(), p.report.i());
            pe <= e && pi <= i && (pe < e || pi < i)
        });
        if dominated {
            return;
        }
        self.pareto.retain(|p| {
            let (pe, pi) = (p.report.e(), p.report.i());
            !(e <= pe && i <= pi && (e < pe || i < pi))
        });
        let position = self
            .pareto
            .partition_point(|existing| rank_order(existing, candidate).is_lt());
        self.pareto.insert(position, candidate.clone());
    }

    fn finish(self) -> Result<SolverResult, LearnError> {
        if self.ranked.is_empty() {
            return Err(LearnError::NoCandidates);
        }
        Ok(SolverResult {
            ranked: self.ranked,
            pareto: self.pareto,
            candidates_evaluated: self.evaluated,
            exhaustive: !self.truncated,
        })
    }
}

/// Ranking key: `(objective, e, i)` ascending with the canonical encoding
/// as the final tie-break, so equal scores still order reproducibly.
fn rank_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.report
        .objective()
        .total_cmp(&b.report.objective())
        .then_with(|| a.report.e().total_cmp(&b.report.e()))
        .then_with(|| a.report.i().total_cmp(&b.report.i()))
        .then_with(|| a.encoding.cmp(&b.encoding))
}

/// The canonical candidate encoding: `[k, cards.., dag mask, relevant
/// mask, varmap table.., outcome-map assignments.., mechanism bits..]`.
/// Within one problem all candidates agree on segment lengths wherever
/// earlier segments agree, so lexicographic comparison is well-defined.
fn encode_candidate(base: &Scm, abstraction: &Abstraction) -> Vec<u64> {
    let high = abstraction.high();
    let k = high.variables().len();
    let mut encoding = Vec::new();
    encoding.push(k as u64);
    encoding.extend(high.cardinalities().iter().map(|&c| c as u64));
    encoding.push(dag_mask_of(high));
    let mut relevant_mask = 0u64;
    for &b in &abstraction.relevant() {
        relevant_mask |= 1 << b;
    }
    encoding.push(relevant_mask);
    for &b in &abstraction.relevant() {
        let name = base.variables()[b].name();
        let to = &abstraction.varmap()[name];
        encoding.push(high.var_index(to).expect("validated high variable") as u64);
    }
    for map in abstraction.outcome_maps() {
        encoding.extend(map.assignment().iter().map(|&r| r as u64));
    }
    for mechanism in high.mechanisms() {
        let matrix = mechanism.matrix();
        for row in 0..matrix.rows() {
            for col in 0..matrix.cols() {
                encoding.push(mechanism.matrix().entry(row, col).to_bits());
            }
        }
    }
    encoding
}

/// Enumerates and scores every candidate of the problem's class, in the
/// deterministic nesting documented on the module, and returns the ranked
/// result. Budget exhaustion truncates to a deterministic prefix and
/// clears the `exhaustive` flag; an empty space is an error.
pub fn solve(problem: &LearningProblem) -> Result<SolverResult, LearnError> {
    validate_problem(problem)?;
    let mut state = SearchState::new(problem);
    let base = &problem.base;

    match &problem.spec {
        ProblemSpec::Assessment { high, varmap, outcome_maps } => {
            let abstraction = Abstraction::new(
                base.clone(),
                high.clone(),
                varmap.clone(),
                outcome_maps.clone(),
            )?;
            let encoding = encode_candidate(base, &abstraction);
            let _ = state.offer(abstraction, encoding)?;
        }
        ProblemSpec::Completion { high, varmap, given_maps } => {
            search_completion(&mut state, base, high, varmap, given_maps)?;
        }
        ProblemSpec::AbstractionDesign { high } => {
            search_fixed_high(&mut state, base, high)?;
        }
        ProblemSpec::MechanismDesign { high_variables } => {
            search_designed(&mut state, base, std::slice::from_ref(high_variables))?;
        }
        ProblemSpec::GranularityDesign { high_variable_names } => {
            let variable_sets = cardinality_grid(high_variable_names, &problem.caps);
            search_designed(&mut state, base, &variable_sets)?;
        }
        ProblemSpec::ModelDesign => {
            let mut variable_sets = Vec::new();
            for k in 1..=problem.caps.max_high_variables {
                let names: Vec<String> = (1..=k).map(|v| format!("X{v}")).collect();
                variable_sets.extend(cardinality_grid(&names, &problem.caps));
            }
            search_designed(&mut state, base, &variable_sets)?;
        }
    }

    state.finish()
}

/// Every cardinality vector `1..=cap` per variable, lexicographic (first
/// variable most significant), materialized as variable-spec lists with
/// outcome labels `"0".."c-1"`.
fn cardinality_grid(names: &[String], caps: &Caps) -> Vec<Vec<VariableSpec>> {
    let cards = vec![caps.max_outcome_cardinality; names.len()];
    let mut sets = Vec::new();
    for digits in indexing::assignments(&cards) {
        sets.push(
            names
                .iter()
                .zip(&digits)
                .map(|(name, &d)| VariableSpec::indexed(name.clone(), d + 1))
                .collect(),
        );
    }
    sets
}

fn search_completion(
    state: &mut SearchState,
    base: &Scm,
    high: &Scm,
    varmap: &BTreeMap<String, String>,
    given_maps: &BTreeMap<String, BinaryStochasticMatrix>,
) -> Result<(), LearnError> {
    let k = high.variables().len();
    // Per high variable: the fixed map, or the lazily re-enumerable space.
    let mut free: Vec<usize> = Vec::new();
    let mut chosen: Vec<Option<BinaryStochasticMatrix>> = Vec::with_capacity(k);
    for (j, variable) in high.variables().iter().enumerate() {
        match given_maps.get(variable.name()) {
            Some(map) => chosen.push(Some(map.clone())),
            None => {
                free.push(j);
                chosen.push(None);
            }
        }
    }

    let preimage_card = |j: usize| -> usize {
        let name = high.variables()[j].name();
        varmap
            .iter()
            .filter(|(_, to)| to.as_str() == name)
            .map(|(from, _)| {
                base.variables()[base.var_index(from).expect("validated")].cardinality()
            })
            .product()
    };

    fn recurse(
        state: &mut SearchState,
        base: &Scm,
        high: &Scm,
        varmap: &BTreeMap<String, String>,
        free: &[usize],
        chosen: &mut Vec<Option<BinaryStochasticMatrix>>,
        preimage_card: &dyn Fn(usize) -> usize,
    ) -> Result<ControlFlow<()>, LearnError> {
        let Some((&j, rest)) = free.split_first() else {
            let outcome_maps: Vec<BinaryStochasticMatrix> =
                chosen.iter().map(|m| m.clone().expect("all slots filled")).collect();
            let abstraction = Abstraction::new(
                base.clone(),
                high.clone(),
                varmap.clone(),
                outcome_maps,
            )?;
            let encoding = encode_candidate(base, &abstraction);
            return state.offer(abstraction, encoding);
        };
        let domain = preimage_card(j);
        let codomain = high.variables()[j].cardinality();
        if domain < codomain {
            // No surjective choice for this slot: the subspace is empty.
            return Ok(ControlFlow::Continue(()));
        }
        for map in enumerate_outcome_maps(domain, codomain)? {
            chosen[j] = Some(map);
            if recurse(state, base, high, varmap, rest, chosen, preimage_card)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
        }
        chosen[j] = None;
        Ok(ControlFlow::Continue(()))
    }

    let _ = recurse(state, base, high, varmap, &free, &mut chosen, &preimage_card)?;
    Ok(())
}

/// Abstraction design against a fully given high model: enumerate
/// `(relevant set, variable map, outcome maps)`.
fn search_fixed_high(
    state: &mut SearchState,
    base: &Scm,
    high: &Scm,
) -> Result<(), LearnError> {
    let k = high.variables().len();
    for (relevant, table) in enumerate_varmaps(base.variables().len(), k)? {
        let varmap: BTreeMap<String, String> = relevant
            .iter()
            .zip(&table)
            .map(|(&b, &j)| {
                (
                    base.variables()[b].name().to_string(),
                    high.variables()[j].name().to_string(),
                )
            })
            .collect();
        if enumerate_map_products(state, base, high, &varmap)?.is_break() {
            return Ok(());
        }
    }
    Ok(())
}

/// Enumerates the outcome-map product space for a fixed high model and
/// varmap, offering one candidate per combination.
fn enumerate_map_products(
    state: &mut SearchState,
    base: &Scm,
    high: &Scm,
    varmap: &BTreeMap<String, String>,
) -> Result<ControlFlow<()>, LearnError> {
    let k = high.variables().len();
    let mut domains = Vec::with_capacity(k);
    for j in 0..k {
        let name = high.variables()[j].name();
        let domain: usize = varmap
            .iter()
            .filter(|(_, to)| to.as_str() == name)
            .map(|(from, _)| {
                base.variables()[base.var_index(from).expect("validated")].cardinality()
            })
            .product();
        let codomain = high.variables()[j].cardinality();
        if domain < codomain {
            return Ok(ControlFlow::Continue(()));
        }
        domains.push((domain, codomain));
    }

    let mut chosen: Vec<Option<BinaryStochasticMatrix>> = vec![None; k];
    fn recurse(
        state: &mut SearchState,
        base: &Scm,
        high: &Scm,
        varmap: &BTreeMap<String, String>,
        domains: &[(usize, usize)],
        j: usize,
        chosen: &mut Vec<Option<BinaryStochasticMatrix>>,
    ) -> Result<ControlFlow<()>, LearnError> {
        if j == domains.len() {
            let outcome_maps: Vec<BinaryStochasticMatrix> =
                chosen.iter().map(|m| m.clone().expect("all slots filled")).collect();
            let abstraction = Abstraction::new(
                base.clone(),
                high.clone(),
                varmap.clone(),
                outcome_maps,
            )?;
            let encoding = encode_candidate(base, &abstraction);
            return state.offer(abstraction, encoding);
        }
        let (domain, codomain) = domains[j];
        for map in enumerate_outcome_maps(domain, codomain)? {
            chosen[j] = Some(map);
            if recurse(state, base, high, varmap, domains, j + 1, chosen)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
        }
        chosen[j] = None;
        Ok(ControlFlow::Continue(()))
    }
    recurse(state, base, high, varmap, &domains, 0, &mut chosen)
}

/// Mechanism, granularity, and model design: for each candidate variable
/// set, enumerate DAGs, then `(relevant, varmap, outcome maps)`, fitting
/// mechanisms for every combination.
fn search_designed(
    state: &mut SearchState,
    base: &Scm,
    variable_sets: &[Vec<VariableSpec>],
) -> Result<(), LearnError> {
    for high_variables in variable_sets {
        let k = high_variables.len();
        if k > base.variables().len() {
            continue;
        }
        for dag_mask in enumerate_dags(k)? {
            let parent_sets = parents_from_mask(k, dag_mask);
            for (relevant, table) in enumerate_varmaps(base.variables().len(), k)? {
                let varmap: BTreeMap<String, String> = relevant
                    .iter()
                    .zip(&table)
                    .map(|(&b, &j)| {
                        (
                            base.variables()[b].name().to_string(),
                            high_variables[j].name().to_string(),
                        )
                    })
                    .collect();
                if fit_and_enumerate(state, base, high_variables, &parent_sets, &varmap)?
                    .is_break()
                {
                    return Ok(());
                }
            }
        }
    }
    Ok(())
}

fn fit_and_enumerate(
    state: &mut SearchState,
    base: &Scm,
    high_variables: &[VariableSpec],
    parent_sets: &[Vec<usize>],
    varmap: &BTreeMap<String, String>,
) -> Result<ControlFlow<()>, LearnError> {
    let k = high_variables.len();
    let mut domains = Vec::with_capacity(k);
    for j in 0..k {
        let name = high_variables[j].name();
        let domain: usize = varmap
            .iter()
            .filter(|(_, to)| to.as_str() == name)
            .map(|(from, _)| {
                base.variables()[base.var_index(from).expect("validated")].cardinality()
            })
            .product();
        let codomain = high_variables[j].cardinality();
        if domain < codomain {
            return Ok(ControlFlow::Continue(()));
        }
        domains.push((domain, codomain));
    }

    let mut chosen: Vec<Option<BinaryStochasticMatrix>> = vec![None; k];
    fn recurse(
        state: &mut SearchState,
        base: &Scm,
        high_variables: &[VariableSpec],
        parent_sets: &[Vec<usize>],
        varmap: &BTreeMap<String, String>,
        domains: &[(usize, usize)],
        j: usize,
        chosen: &mut Vec<Option<BinaryStochasticMatrix>>,
    ) -> Result<ControlFlow<()>, LearnError> {
        if j == domains.len() {
            let outcome_maps: Vec<BinaryStochasticMatrix> =
                chosen.iter().map(|m| m.clone().expect("all slots filled")).collect();
            let high =
                fit_mechanisms(base, high_variables, parent_sets, varmap, &outcome_maps)?;
            let abstraction =
                Abstraction::new(base.clone(), high, varmap.clone(), outcome_maps)?;
            let encoding = encode_candidate(base, &abstraction);
            return state.offer(abstraction, encoding);
        }
        let (domain, codomain) = domains[j];
        for map in enumerate_outcome_maps(domain, codomain)? {
            chosen[j] = Some(map);
            if recurse(
                state,
                base,
                high_variables,
                parent_sets,
                varmap,
                domains,
                j + 1,
                chosen,
            )?
            .is_break()
            {
                return Ok(ControlFlow::Break(()));
            }
        }
        chosen[j] = None;
        Ok(ControlFlow::Continue(()))
    }
    recurse(state, base, high_variables, parent_sets, varmap, &domains, 0, &mut chosen)
}

fn validate_problem(problem: &LearningProblem) -> Result<(), LearnError> {
    let fail = |detail: String| Err(LearnError::InconsistentProblem { detail });
    if !problem.lambda.is_finite() || problem.lambda < 0.0 {
        return fail(format!("lambda must be a finite nonnegative number, got {}", problem.lambda));
    }
    if problem.top_k == 0 {
        return fail("top_k must be at least 1".to_string());
    }
    if problem.caps.budget == 0 {
        return fail("budget must be at least 1".to_string());
    }
    let base_count = problem.base.variables().len();

    let check_names = |names: &[String]| -> Result<(), LearnError> {
        let mut seen = std::collections::BTreeSet::new();
        for name in names {
            if name.is_empty() {
                return fail("high variable names must be nonempty".to_string());
            }
            if !seen.insert(name.as_str()) {
                return fail(format!("duplicate high variable name {name:?}"));
            }
        }
        if names.is_empty() {
            return fail("at least one high variable is required".to_string());
        }
        if names.len() > base_count {
            return fail(format!(
                "{} high variables cannot be covered surjectively by {base_count} base variables",
                names.len()
            ));
        }
        Ok(())
    };

    match &problem.spec {
        ProblemSpec::Assessment { .. } => {}
        ProblemSpec::Completion { high, varmap, given_maps } => {
            for name in given_maps.keys() {
                if high.var_index(name).is_err() {
                    return fail(format!("given outcome map targets unknown high variable {name:?}"));
                }
            }
            // The fixed parts must be coherent on their own; per-map shape
            // problems surface as candidate validation errors.
            for (from, to) in varmap {
                if problem.base.var_index(from).is_err() {
                    return fail(format!("variable map uses unknown base variable {from:?}"));
                }
                if high.var_index(to).is_err() {
                    return fail(format!("variable map targets unknown high variable {to:?}"));
                }
            }
            for variable in high.variables() {
                if !varmap.values().any(|to| to == variable.name()) {
                    return fail(format!(
                        "variable map does not cover high variable {:?}",
                        variable.name()
                    ));
                }
            }
        }
        ProblemSpec::AbstractionDesign { high } => {
            if high.variables().is_empty() {
                return fail("the high model needs at least one variable".to_string());
            }
            if high.variables().len() > base_count {
                return fail(format!(
                    "{} high variables cannot be covered surjectively by {base_count} base variables",
                    high.variables().len()
                ));
            }
        }
        ProblemSpec::MechanismDesign { high_variables } => {
            let names: Vec<String> =
                high_variables.iter().map(|v| v.name().to_string()).collect();
            check_names(&names)?;
            if high_variables.len() > MAX_DAG_VARIABLES {
                return fail(format!(
                    "{} high variables exceed the DAG enumeration cap of {MAX_DAG_VARIABLES}",
                    high_variables.len()
                ));
            }
            for variable in high_variables {
                if variable.outcomes().is_empty() {
                    return fail(format!(
                        "high variable {:?} has an empty outcome set",
                        variable.name()
                    ));
                }
            }
        }
        ProblemSpec::GranularityDesign { high_variable_names } => {
            check_names(high_variable_names)?;
            if high_variable_names.len() > MAX_DAG_VARIABLES {
                return fail(format!(
                    "{} high variables exceed the DAG enumeration cap of {MAX_DAG_VARIABLES}",
                    high_variable_names.len()
                ));
            }
            if problem.caps.max_outcome_cardinality == 0 {
                return fail("the outcome cardinality cap must be at least 1".to_string());
            }
        }
        ProblemSpec::ModelDesign => {
            if problem.caps.max_high_variables == 0 {
                return fail("the high variable cap must be at least 1".to_string());
            }
            if problem.caps.max_high_variables > MAX_DAG_VARIABLES {
                return fail(format!(
                    "a cap of {} high variables exceeds the DAG enumeration cap of {MAX_DAG_VARIABLES}",
                    problem.caps.max_high_variables
                ));
            }
            if problem.caps.max_outcome_cardinality == 0 {
                return fail("the outcome cardinality cap must be at least 1".to_string());
            }
        }
    }
    Ok(())
}
