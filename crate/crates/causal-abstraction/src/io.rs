//! Declarative on-disk documents for models, abstractions, and learning
//! problems.
//!
//! The format is JSON, UTF-8, with a published schema (see
//! `fixtures/schema/`). Three document kinds exist:
//!
//! * [`ModelDocument`] — variables plus one mechanism per variable, with each
//!   mechanism matrix written as a row-list (row `r` is the list of that
//!   row's values across columns). Columns are indexed under the canonical
//!   convention: the first parent in the `parents` list varies slowest.
//! * [`AbstractionDocument`] — the relevant base variables, the variable map
//!   as `{from, to}` pairs, and one binary outcome map per high variable
//!   (entries exactly 0 or 1, written as integers).
//! * [`ProblemDocument`] — a learning problem: the problem class, its given
//!   components, search caps, the trade-off weight, budget, and `top_k`.
//!
//! Models referenced from other documents may be inline or file paths
//! ([`DocRef`]); relative paths resolve against the referring document's
//! directory.
//!
//! Loading is strict: unknown fields are rejected, matrices are never
//! auto-normalized, and every error names the offending entity. Dumping is
//! canonical: stable key order, probabilities rendered at 12 significant
//! digits, so equal values always serialize to equal text and `dump` is
//! idempotent (`dump(load(dump(x))) == dump(x)`); `load(dump(x)) == x`
//! exactly whenever `x`'s entries are representable at that precision, which
//! holds for every bundled fixture.
//!
//! Errors split into two exit-code classes (see
//! [`DocumentError::exit_code`]): unreadable input — I/O failures, syntax
//! errors (reported with line and column), schema violations — and domain
//! failures, where the document parsed but describes an invalid object.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{Abstraction, AbstractionError};
use crate::learn::{Caps, LearnError, LearningProblem, ProblemClass, ProblemSpec};
use crate::numerics::{BinaryStochasticMatrix, Matrix, StochasticMatrix};
use crate::scm::{Mechanism, Scm, ScmError, VariableSpec, Violation};
use std::collections::BTreeMap;

/// The document format version this library reads and writes.
pub const FORMAT_VERSION: &str = "1";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Everything that can go wrong while reading or resolving a document.
#[derive(Debug, Error)]
pub enum DocumentError {
    /// The file could not be read at all.
    #[error("cannot read {path}: {detail}", path = .path.display())]
    Io { path: PathBuf, detail: String },
    /// The text is not well-formed JSON.
    #[error("parse error at line {line}, column {column}: {detail}")]
    Parse { line: usize, column: usize, detail: String },
    /// The text is JSON but does not match the document schema
    /// (unknown field, missing field, wrong type, unsupported version).
    #[error("schema violation: {detail}")]
    Schema { detail: String },
    /// A relative file reference was encountered but no base directory is
    /// available to resolve it against.
    #[error("cannot resolve relative reference {reference:?} without a base directory")]
    UnresolvedRef { reference: String },
    /// The document parsed but describes an invalid model.
    #[error(transparent)]
    Model(ScmError),
    /// The document parsed but its components do not fit together as an
    /// abstraction of the given models.
    #[error(transparent)]
    AbstractionDomain(AbstractionError),
    /// The document parsed but describes an inconsistent learning problem.
    #[error(transparent)]
    Problem(LearnError),
    /// A document-level consistency failure (cross-field checks such as
    /// `relevant` disagreeing with the variable map).
    #[error("{detail}")]
    Domain { detail: String },
}

impl DocumentError {
    /// The process exit code this error maps to: 2 for unreadable input
    /// (I/O, syntax, schema), 1 for domain failures (the document parsed
    /// but describes an invalid object).
    pub fn exit_code(&self) -> i32 {
        match self {
            DocumentError::Io { .. }
            | DocumentError::Parse { .. }
            | DocumentError::Schema { .. }
            | DocumentError::UnresolvedRef { .. } => 2,
            DocumentError::Model(_)
            | DocumentError::AbstractionDomain(_)
            | DocumentError::Problem(_)
            | DocumentError::Domain { .. } => 1,
        }
    }
}

fn json_error(err: serde_json::Error) -> DocumentError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Syntax | Category::Eof => DocumentError::Parse {
            line: err.line(),
            column: err.column(),
            detail: err.to_string(),
        },
        _ => DocumentError::Schema { detail: err.to_string() },
    }
}

fn io_error(path: &Path, err: std::io::Error) -> DocumentError {
    DocumentError::Io { path: path.to_path_buf(), detail: err.to_string() }
}

fn inconsistent(detail: impl fmt::Display) -> DocumentError {
    DocumentError::Problem(LearnError::InconsistentProblem { detail: detail.to_string() })
}

// ---------------------------------------------------------------------------
// Document types
// ---------------------------------------------------------------------------

/// One variable: its name and its ordered outcome labels. Labels are opaque
/// strings; their position in the list defines the outcome index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDocument {
    pub name: String,
    pub outcomes: Vec<String>,
}

/// One mechanism: the target variable, its ordered parent list, and the
/// column-stochastic matrix as a row-list. Column index `c` decodes to a
/// parent configuration with the first parent varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismDocument {
    pub target: String,
    pub parents: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// A complete model: variables plus one mechanism per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub variables: Vec<VariableDocument>,
    pub mechanisms: Vec<MechanismDocument>,
}

/// A reference to a model: either a file path (relative paths resolve
/// against the referring document's directory) or an inline model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocRef {
    Path(String),
    Inline(serde_json::Value),
}

/// One entry of the variable map: base variable `from` maps to high
/// variable `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarmapEntry {
    pub from: String,
    pub to: String,
}

/// One outcome map: the high variable it produces and a binary matrix as a
/// row-list (entries exactly 0 or 1). Rows index the high variable's
/// outcomes; columns index the joint outcomes of the preimage base
/// variables in base declaration order, first variable slowest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeMapDocument {
    pub target: String,
    pub matrix: Vec<Vec<u8>>,
}

/// A complete abstraction: base and high model references, the relevant
/// base variables, the variable map, and one outcome map per high variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionDocument {
    pub format_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_ref: Option<DocRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_ref: Option<DocRef>,
    pub relevant: Vec<String>,
    pub varmap: Vec<VarmapEntry>,
    pub outcome_maps: Vec<OutcomeMapDocument>,
}

/// The problem class names accepted in problem documents, mirroring the
/// learning hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClassDocument {
    Assessment,
    Completion,
    AbstractionDesign,
    MechanismDesign,
    GranularityDesign,
    ModelDesign,
}

impl From<ProblemClassDocument> for ProblemClass {
    fn from(value: ProblemClassDocument) -> Self {
        match value {
            ProblemClassDocument::Assessment => ProblemClass::Assessment,
            ProblemClassDocument::Completion => ProblemClass::Completion,
            ProblemClassDocument::AbstractionDesign => ProblemClass::AbstractionDesign,
            ProblemClassDocument::MechanismDesign => ProblemClass::MechanismDesign,
            ProblemClassDocument::GranularityDesign => ProblemClass::GranularityDesign,
            ProblemClassDocument::ModelDesign => ProblemClass::ModelDesign,
        }
    }
}

/// The given components of a learning problem. `base_ref` is required for
/// every class; which of the remaining fields must be present (and which
/// must be absent) is fixed per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GivensDocument {
    pub base_ref: DocRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_ref: Option<DocRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varmap: Option<Vec<VarmapEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_maps: Option<Vec<OutcomeMapDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_variables: Option<Vec<VariableDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_variable_names: Option<Vec<String>>,
}

/// Search caps for the design classes. Absent fields take the library
/// defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_high_variables: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outcome_cardinality: Option<usize>,
}

/// A complete learning problem document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub format_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub problem_class: ProblemClassDocument,
    pub givens: GivensDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<CapsDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
}

// ---------------------------------------------------------------------------
// Canonical float rendering
// ---------------------------------------------------------------------------

/// Rounds to 12 significant decimal digits — the canonical serialization
/// precision. Values already at that precision pass through unchanged, so
/// the canonicalization is idempotent.
pub fn canonical_f64(value: f64) -> f64 {
    format!("{value:.11e}").parse().expect("a formatted float re-parses")
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

fn check_version(found: &str) -> Result<(), DocumentError> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(DocumentError::Schema {
            detail: format!(
                "unsupported format_version {found:?}; this library reads version {FORMAT_VERSION:?}"
            ),
        })
    }
}

/// Parses model document text without building the model.
pub fn parse_model(text: &str) -> Result<ModelDocument, DocumentError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(json_error)?;
    check_version(&doc.format_version)?;
    Ok(doc)
}

/// Builds a validated model from a parsed document.
pub fn model_from_document(doc: &ModelDocument) -> Result<Scm, DocumentError> {
    let variables: Vec<VariableSpec> = doc
        .variables
        .iter()
        .map(|v| VariableSpec::new(&v.name, v.outcomes.iter().map(String::as_str)))
        .collect();

    let mut mechanisms = Vec::with_capacity(doc.mechanisms.len());
    let mut violations = Vec::new();
    for entry in &doc.mechanisms {
        let built = Matrix::from_rows(&entry.matrix).and_then(StochasticMatrix::new);
        match built {
            Ok(matrix) => mechanisms.push(Mechanism::new(
                &entry.target,
                entry.parents.iter().map(String::as_str),
                matrix,
            )),
            Err(err) => violations.push(Violation::MechanismNotStochastic {
                variable: entry.target.clone(),
                detail: err.to_string(),
            }),
        }
    }
    if !violations.is_empty() {
        return Err(DocumentError::Model(ScmError::Invalid { violations }));
    }
    Scm::new(variables, mechanisms).map_err(DocumentError::Model)
}

/// Loads a model from document text.
pub fn load_model(text: &str) -> Result<Scm, DocumentError> {
    model_from_document(&parse_model(text)?)
}

/// Loads a model from a file.
pub fn load_model_file(path: impl AsRef<Path>) -> Result<Scm, DocumentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    load_model(&text)
}

/// Renders a model as a document (canonical float precision, no comments).
pub fn model_to_document(scm: &Scm) -> ModelDocument {
    let variables = scm
        .variables()
        .iter()
        .map(|v| VariableDocument {
            name: v.name().to_string(),
            outcomes: v.outcomes().to_vec(),
        })
        .collect();
    let mechanisms = scm
        .mechanisms()
        .iter()
        .map(|m| {
            let matrix = m.matrix();
            let rows = (0..matrix.rows())
                .map(|r| (0..matrix.cols()).map(|c| canonical_f64(matrix.entry(r, c))).collect())
                .collect();
            MechanismDocument {
                target: m.target().to_string(),
                parents: m.parents().to_vec(),
                matrix: rows,
                comment: None,
            }
        })
        .collect();
    ModelDocument {
        format_version: FORMAT_VERSION.to_string(),
        comment: None,
        variables,
        mechanisms,
    }
}

fn to_pretty_text(doc: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents serialize");
    text.push('\n');
    text
}

/// Serializes a model canonically: stable key order, 12 significant digits.
pub fn dump_model(scm: &Scm) -> String {
    to_pretty_text(&model_to_document(scm))
}

// ---------------------------------------------------------------------------
// Reference resolution
// ---------------------------------------------------------------------------

/// Resolves a model reference: reads and loads a path (relative to
/// `base_dir`), or builds the inline document.
pub fn resolve_model_ref(
    reference: &DocRef,
    base_dir: Option<&Path>,
) -> Result<Scm, DocumentError> {
    match reference {
        DocRef::Path(p) => {
            let path = PathBuf::from(p);
            let full = if path.is_absolute() {
                path
            } else {
                match base_dir {
                    Some(dir) => dir.join(&path),
                    None => {
                        return Err(DocumentError::UnresolvedRef { reference: p.clone() })
                    }
                }
            };
            load_model_file(full)
        }
        DocRef::Inline(value) => {
            let doc: ModelDocument =
                serde_json::from_value(value.clone()).map_err(json_error)?;
            check_version(&doc.format_version)?;
            model_from_document(&doc)
        }
    }
}

// ---------------------------------------------------------------------------
// Abstractions
// ---------------------------------------------------------------------------

/// Parses abstraction document text without building the abstraction.
pub fn parse_abstraction(text: &str) -> Result<AbstractionDocument, DocumentError> {
    let doc: AbstractionDocument = serde_json::from_str(text).map_err(json_error)?;
    check_version(&doc.format_version)?;
    Ok(doc)
}

fn varmap_from_entries(
    entries: &[VarmapEntry],
) -> Result<BTreeMap<String, String>, DocumentError> {
    let mut varmap = BTreeMap::new();
    for entry in entries {
        if varmap.insert(entry.from.clone(), entry.to.clone()).is_some() {
            return Err(DocumentError::Domain {
                detail: format!("varmap lists base variable {:?} more than once", entry.from),
            });
        }
    }
    Ok(varmap)
}

fn check_relevant_matches_varmap(
    relevant: &[String],
    varmap: &BTreeMap<String, String>,
) -> Result<(), DocumentError> {
    let mut listed = std::collections::BTreeSet::new();
    for name in relevant {
        if !listed.insert(name.as_str()) {
            return Err(DocumentError::Domain {
                detail: format!("relevant lists {name:?} more than once"),
            });
        }
    }
    let mapped: std::collections::BTreeSet<&str> =
        varmap.keys().map(String::as_str).collect();
    if listed != mapped {
        return Err(DocumentError::Domain {
            detail: format!(
                "relevant {listed:?} disagrees with the varmap domain {mapped:?}"
            ),
        });
    }
    Ok(())
}

/// Reorders the outcome-map entries into high declaration order and builds
/// the binary matrices, naming the offending high variable on failure.
fn outcome_maps_in_order(
    entries: &[OutcomeMapDocument],
    high: &Scm,
) -> Result<Vec<BinaryStochasticMatrix>, DocumentError> {
    let mut by_target: BTreeMap<&str, &OutcomeMapDocument> = BTreeMap::new();
    for entry in entries {
        if by_target.insert(entry.target.as_str(), entry).is_some() {
            return Err(DocumentError::Domain {
                detail: format!("more than one outcome map targets {:?}", entry.target),
            });
        }
    }
    let high_names: std::collections::BTreeSet<&str> =
        high.variables().iter().map(|v| v.name()).collect();
    for target in by_target.keys() {
        if !high_names.contains(target) {
            return Err(DocumentError::Domain {
                detail: format!(
                    "outcome map targets {target:?}, which is not a high-model variable"
                ),
            });
        }
    }

    let mut maps = Vec::with_capacity(high.variables().len());
    for variable in high.variables() {
        let entry = by_target.get(variable.name()).ok_or_else(|| DocumentError::Domain {
            detail: format!("no outcome map for high-model variable {:?}", variable.name()),
        })?;
        let rows: Vec<Vec<f64>> = entry
            .matrix
            .iter()
            .map(|row| row.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let map = Matrix::from_rows(&rows)
            .and_then(|m| BinaryStochasticMatrix::from_matrix(&m))
            .map_err(|err| DocumentError::Domain {
                detail: format!("outcome map for {:?}: {err}", variable.name()),
            })?;
        maps.push(map);
    }
    Ok(maps)
}

/// Builds a validated abstraction from a parsed document and the two models
/// it connects. The document's `base_ref`/`high_ref` are not consulted —
/// the provided models are authoritative; names and dimensions are
/// cross-checked against both.
pub fn abstraction_from_document(
    doc: &AbstractionDocument,
    base: Scm,
    high: Scm,
) -> Result<Abstraction, DocumentError> {
    let varmap = varmap_from_entries(&doc.varmap)?;
    check_relevant_matches_varmap(&doc.relevant, &varmap)?;
    let outcome_maps = outcome_maps_in_order(&doc.outcome_maps, &high)?;
    Abstraction::new(base, high, varmap, outcome_maps)
        .map_err(DocumentError::AbstractionDomain)
}

/// Loads an abstraction from document text against explicitly provided
/// models.
pub fn load_abstraction(
    text: &str,
    base: Scm,
    high: Scm,
) -> Result<Abstraction, DocumentError> {
    abstraction_from_document(&parse_abstraction(text)?, base, high)
}

/// Loads an abstraction from a file against explicitly provided models.
pub fn load_abstraction_file(
    path: impl AsRef<Path>,
    base: Scm,
    high: Scm,
) -> Result<Abstraction, DocumentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    load_abstraction(&text, base, high)
}

fn required_ref<'a>(
    reference: Option<&'a DocRef>,
    field: &str,
) -> Result<&'a DocRef, DocumentError> {
    reference.ok_or_else(|| DocumentError::Schema {
        detail: format!("{field} is required to load a self-contained abstraction"),
    })
}

/// Loads a self-contained abstraction: the document's own `base_ref` and
/// `high_ref` supply the models. Relative path references resolve against
/// `base_dir`.
pub fn load_abstraction_bundle(
    text: &str,
    base_dir: Option<&Path>,
) -> Result<Abstraction, DocumentError> {
    let doc = parse_abstraction(text)?;
    let base = resolve_model_ref(required_ref(doc.base_ref.as_ref(), "base_ref")?, base_dir)?;
    let high = resolve_model_ref(required_ref(doc.high_ref.as_ref(), "high_ref")?, base_dir)?;
    abstraction_from_document(&doc, base, high)
}

/// Loads a self-contained abstraction from a file; relative references
/// resolve against the file's directory.
pub fn load_abstraction_bundle_file(
    path: impl AsRef<Path>,
) -> Result<Abstraction, DocumentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    load_abstraction_bundle(&text, path.parent())
}

/// Renders an abstraction as a self-contained document with inline models.
pub fn abstraction_to_document(abstraction: &Abstraction) -> AbstractionDocument {
    let base = abstraction.base();
    let relevant = abstraction
        .relevant()
        .into_iter()
        .map(|i| base.variables()[i].name().to_string())
        .collect();
    let varmap = base
        .variables()
        .iter()
        .filter_map(|v| {
            abstraction.varmap().get(v.name()).map(|to| VarmapEntry {
                from: v.name().to_string(),
                to: to.clone(),
            })
        })
        .collect();
    let outcome_maps = abstraction
        .high()
        .variables()
        .iter()
        .zip(abstraction.outcome_maps())
        .map(|(variable, map)| {
            let rows = (0..map.rows())
                .map(|r| {
                    (0..map.cols()).map(|c| u8::from(map.image(c) == r)).collect()
                })
                .collect();
            OutcomeMapDocument { target: variable.name().to_string(), matrix: rows }
        })
        .collect();
    let inline = |scm: &Scm| {
        DocRef::Inline(
            serde_json::to_value(model_to_document(scm)).expect("documents serialize"),
        )
    };
    AbstractionDocument {
        format_version: FORMAT_VERSION.to_string(),
        comment: None,
        base_ref: Some(inline(abstraction.base())),
        high_ref: Some(inline(abstraction.high())),
        relevant,
        varmap,
        outcome_maps,
    }
}

/// Serializes an abstraction canonically as a self-contained document.
pub fn dump_abstraction(abstraction: &Abstraction) -> String {
    to_pretty_text(&abstraction_to_document(abstraction))
}

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

/// Parses problem document text without building the problem.
pub fn parse_problem(text: &str) -> Result<ProblemDocument, DocumentError> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(json_error)?;
    check_version(&doc.format_version)?;
    Ok(doc)
}

/// Checks that exactly the class-appropriate given fields are present.
fn check_given_set(doc: &ProblemDocument) -> Result<(), DocumentError> {
    let class: ProblemClass = doc.problem_class.into();
    // (field name, present, required for this class)
    let fields = [
        ("high_ref", doc.givens.high_ref.is_some(), matches!(
            class,
            ProblemClass::Assessment | ProblemClass::Completion | ProblemClass::AbstractionDesign
        )),
        ("varmap", doc.givens.varmap.is_some(), matches!(
            class,
            ProblemClass::Assessment | ProblemClass::Completion
        )),
        ("outcome_maps", doc.givens.outcome_maps.is_some(), matches!(
            class,
            ProblemClass::Assessment | ProblemClass::Completion
        )),
        ("high_variables", doc.givens.high_variables.is_some(), matches!(
            class,
            ProblemClass::MechanismDesign
        )),
        ("high_variable_names", doc.givens.high_variable_names.is_some(), matches!(
            class,
            ProblemClass::GranularityDesign
        )),
    ];
    for (name, present, required) in fields {
        if required && !present {
            return Err(inconsistent(format!(
                "class {:?} requires the given {name}",
                class.name()
            )));
        }
        if present && !required {
            return Err(inconsistent(format!(
                "class {:?} does not take the given {name}",
                class.name()
            )));
        }
    }
    Ok(())
}

/// Builds a learning problem from a parsed document. Relative model
/// references resolve against `base_dir`.
pub fn problem_from_document(
    doc: &ProblemDocument,
    base_dir: Option<&Path>,
) -> Result<LearningProblem, DocumentError> {
    check_given_set(doc)?;
    let base = resolve_model_ref(&doc.givens.base_ref, base_dir)?;
    let resolve_high = |reference: &Option<DocRef>| {
        resolve_model_ref(reference.as_ref().expect("checked present"), base_dir)
    };

    let spec = match doc.problem_class {
        ProblemClassDocument::Assessment => {
            let high = resolve_high(&doc.givens.high_ref)?;
            let varmap =
                varmap_from_entries(doc.givens.varmap.as_deref().expect("checked present"))?;
            let outcome_maps = outcome_maps_in_order(
                doc.givens.outcome_maps.as_deref().expect("checked present"),
                &high,
            )?;
            ProblemSpec::Assessment { high, varmap, outcome_maps }
        }
        ProblemClassDocument::Completion => {
            let high = resolve_high(&doc.givens.high_ref)?;
            let varmap =
                varmap_from_entries(doc.givens.varmap.as_deref().expect("checked present"))?;
            let mut given_maps = BTreeMap::new();
            for entry in doc.givens.outcome_maps.as_deref().expect("checked present") {
                let rows: Vec<Vec<f64>> = entry
                    .matrix
                    .iter()
                    .map(|row| row.iter().map(|&v| f64::from(v)).collect())
                    .collect();
                let map = Matrix::from_rows(&rows)
                    .and_then(|m| BinaryStochasticMatrix::from_matrix(&m))
                    .map_err(|err| DocumentError::Domain {
                        detail: format!("outcome map for {:?}: {err}", entry.target),
                    })?;
                if given_maps.insert(entry.target.clone(), map).is_some() {
                    return Err(DocumentError::Domain {
                        detail: format!(
                            "more than one outcome map targets {:?}",
                            entry.target
                        ),
                    });
                }
            }
            ProblemSpec::Completion { high, varmap, given_maps }
        }
        ProblemClassDocument::AbstractionDesign => {
            ProblemSpec::AbstractionDesign { high: resolve_high(&doc.givens.high_ref)? }
        }
        ProblemClassDocument::MechanismDesign => {
            let high_variables = doc
                .givens
                .high_variables
                .as_deref()
                .expect("checked present")
                .iter()
                .map(|v| VariableSpec::new(&v.name, v.outcomes.iter().map(String::as_str)))
                .collect();
            ProblemSpec::MechanismDesign { high_variables }
        }
        ProblemClassDocument::GranularityDesign => ProblemSpec::GranularityDesign {
            high_variable_names: doc
                .givens
                .high_variable_names
                .clone()
                .expect("checked present"),
        },
        ProblemClassDocument::ModelDesign => ProblemSpec::ModelDesign,
    };

    let defaults = Caps::default();
    let caps_doc = doc.caps.unwrap_or_default();
    let caps = Caps {
        max_high_variables: caps_doc.max_high_variables.unwrap_or(defaults.max_high_variables),
        max_outcome_cardinality: caps_doc
            .max_outcome_cardinality
            .unwrap_or(defaults.max_outcome_cardinality),
        budget: doc.budget.unwrap_or(defaults.budget),
    };
    let mut problem = LearningProblem::new(base, spec).with_caps(caps);
    if let Some(lambda) = doc.lambda {
        problem = problem.with_lambda(lambda);
    }
    if let Some(top_k) = doc.top_k {
        problem = problem.with_top_k(top_k);
    }
    Ok(problem)
}

/// Loads a learning problem from document text. Relative model references
/// resolve against `base_dir`.
pub fn load_problem(
    text: &str,
    base_dir: Option<&Path>,
) -> Result<LearningProblem, DocumentError> {
    problem_from_document(&parse_problem(text)?, base_dir)
}

/// Loads a learning problem from a file; relative references resolve
/// against the file's directory.
pub fn load_problem_file(path: impl AsRef<Path>) -> Result<LearningProblem, DocumentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    load_problem(&text, path.parent())
}
