//! Bundled reference fixtures and the self-check report over them.
//!
//! The JSON fixtures under `fixtures/` are embedded into the library at
//! compile time and also shipped as plain files. [`selftest_report`]
//! recomputes every reference quantity — joints, marginals, conditionals,
//! interventional mechanisms, abstraction errors, information losses, and
//! combined objectives — and checks each against its stored value, returning
//! one pass/fail row per check. A [`FixtureSource`] selects between the
//! embedded copies and an on-disk directory, so the same report can audit
//! modified fixture sets; any fixture that fails to load or validate shows
//! up as a failed row rather than an error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::abstraction::{Abstraction, AbstractionError};
use crate::io;
use crate::numerics::{BinaryStochasticMatrix, StochasticMatrix};
use crate::scm::Scm;

/// The embedded fixture texts, byte-identical to the files under
/// `fixtures/`.
pub mod text {
    pub const MODEL_M: &str = include_str!("../fixtures/model_M.json");
    pub const MODEL_M_PRIME: &str = include_str!("../fixtures/model_Mprime.json");
    pub const MODEL_M_DPRIME: &str = include_str!("../fixtures/model_Mdprime.json");
    pub const MODEL_M_TPRIME: &str = include_str!("../fixtures/model_Mtprime.json");
    pub const MODEL_M_S: &str = include_str!("../fixtures/model_Ms.json");
    pub const ABS_ALPHA: &str = include_str!("../fixtures/abs_alpha.json");
    pub const ABS_BETA: &str = include_str!("../fixtures/abs_beta.json");
    pub const ABS_GAMMA: &str = include_str!("../fixtures/abs_gamma.json");
    pub const PROBLEM_ASSESSMENT: &str = include_str!("../fixtures/problem_assessment.json");
    pub const PROBLEM_COMPLETION: &str = include_str!("../fixtures/problem_completion.json");
    pub const PROBLEM_ABSTRACTION_DESIGN: &str =
        include_str!("../fixtures/problem_abstraction_design.json");
    pub const PROBLEM_MECHANISM_DESIGN: &str =
        include_str!("../fixtures/problem_mechanism_design.json");
    pub const PROBLEM_GRANULARITY_DESIGN: &str =
        include_str!("../fixtures/problem_granularity_design.json");
    pub const PROBLEM_MODEL_DESIGN: &str =
        include_str!("../fixtures/problem_model_design.json");
}

/// File name -> embedded text, for every bundled fixture.
pub const FILES: [(&str, &str); 14] = [
    ("model_M.json", text::MODEL_M),
    ("model_Mprime.json", text::MODEL_M_PRIME),
    ("model_Mdprime.json", text::MODEL_M_DPRIME),
    ("model_Mtprime.json", text::MODEL_M_TPRIME),
    ("model_Ms.json", text::MODEL_M_S),
    ("abs_alpha.json", text::ABS_ALPHA),
    ("abs_beta.json", text::ABS_BETA),
    ("abs_gamma.json", text::ABS_GAMMA),
    ("problem_assessment.json", text::PROBLEM_ASSESSMENT),
    ("problem_completion.json", text::PROBLEM_COMPLETION),
    ("problem_abstraction_design.json", text::PROBLEM_ABSTRACTION_DESIGN),
    ("problem_mechanism_design.json", text::PROBLEM_MECHANISM_DESIGN),
    ("problem_granularity_design.json", text::PROBLEM_GRANULARITY_DESIGN),
    ("problem_model_design.json", text::PROBLEM_MODEL_DESIGN),
];

/// The three-variable base model (`model_M.json`).
pub fn model_m() -> Scm {
    io::load_model(text::MODEL_M).expect("bundled fixture is valid")
}

/// The two-variable summary model (`model_Mprime.json`).
pub fn model_m_prime() -> Scm {
    io::load_model(text::MODEL_M_PRIME).expect("bundled fixture is valid")
}

/// The summary variant with a different child mechanism
/// (`model_Mdprime.json`).
pub fn model_m_dprime() -> Scm {
    io::load_model(text::MODEL_M_DPRIME).expect("bundled fixture is valid")
}

/// The summary variant with root marginal `[0.8, 0.2]`
/// (`model_Mtprime.json`).
pub fn model_m_tprime() -> Scm {
    io::load_model(text::MODEL_M_TPRIME).expect("bundled fixture is valid")
}

/// The single-outcome collapse model (`model_Ms.json`).
pub fn model_m_s() -> Scm {
    io::load_model(text::MODEL_M_S).expect("bundled fixture is valid")
}

/// The identity-style abstraction of `model_M` onto `model_Mprime`
/// (`abs_alpha.json`).
pub fn abs_alpha() -> Abstraction {
    io::load_abstraction(text::ABS_ALPHA, model_m(), model_m_prime())
        .expect("bundled fixture is valid")
}

/// The exchanged-outcome variant of `abs_alpha` (`abs_beta.json`).
pub fn abs_beta() -> Abstraction {
    io::load_abstraction(text::ABS_BETA, model_m(), model_m_prime())
        .expect("bundled fixture is valid")
}

/// The total collapse of `model_M` onto `model_Ms` (`abs_gamma.json`).
pub fn abs_gamma() -> Abstraction {
    io::load_abstraction(text::ABS_GAMMA, model_m(), model_m_s())
        .expect("bundled fixture is valid")
}

/// Where the self-check reads its fixtures from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureSource {
    /// The copies embedded at compile time.
    Embedded,
    /// A directory holding files with the bundled names.
    Dir(PathBuf),
}

impl FixtureSource {
    /// Reads one fixture by its bundled file name.
    pub fn read(&self, file_name: &str) -> Result<String, io::DocumentError> {
        match self {
            FixtureSource::Embedded => FILES
                .iter()
                .find(|(name, _)| *name == file_name)
                .map(|(_, text)| (*text).to_string())
                .ok_or_else(|| io::DocumentError::Io {
                    path: PathBuf::from(file_name),
                    detail: "no such bundled fixture".to_string(),
                }),
            FixtureSource::Dir(dir) => {
                let path = dir.join(file_name);
                std::fs::read_to_string(&path)
                    .map_err(|e| io::DocumentError::Io { path, detail: e.to_string() })
            }
        }
    }
}

/// One line of the self-check table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestRow {
    name: String,
    expected: String,
    computed: String,
    passed: bool,
}

impl SelftestRow {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expected(&self) -> &str {
        &self.expected
    }

    pub fn computed(&self) -> &str {
        &self.computed
    }

    pub fn passed(&self) -> bool {
        self.passed
    }
}

/// The full self-check table.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    lambda: f64,
    rows: Vec<SelftestRow>,
}

impl SelftestReport {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rows(&self) -> &[SelftestRow] {
        &self.rows
    }

    /// True iff every row passed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(SelftestRow::passed)
    }
}

fn fmt_vec(values: &[f64]) -> String {
    let entries: Vec<String> = values.iter().map(f64::to_string).collect();
    format!("[{}]", entries.join(", "))
}

fn matrix_entries(matrix: &StochasticMatrix) -> Vec<f64> {
    (0..matrix.rows())
        .flat_map(|r| (0..matrix.cols()).map(move |c| (r, c)))
        .map(|(r, c)| matrix.entry(r, c))
        .collect()
}

struct Table {
    rows: Vec<SelftestRow>,
}

impl Table {
    fn push(&mut self, name: &str, expected: String, computed: String, passed: bool) {
        self.rows.push(SelftestRow {
            name: name.to_string(),
            expected,
            computed,
            passed,
        });
    }

    fn scalar(&mut self, name: &str, computed: f64, expected: f64, tolerance: f64) {
        self.push(
            name,
            format!("{expected} (tolerance {tolerance:e})"),
            computed.to_string(),
            (computed - expected).abs() <= tolerance,
        );
    }

    fn vector(&mut self, name: &str, computed: &[f64], expected: &[f64], tolerance: f64) {
        let passed = computed.len() == expected.len()
            && computed
                .iter()
                .zip(expected)
                .all(|(c, e)| (c - e).abs() <= tolerance);
        self.push(
            name,
            format!("{} (tolerance {tolerance:e})", fmt_vec(expected)),
            fmt_vec(computed),
            passed,
        );
    }

    fn exact(&mut self, name: &str, expected: String, computed: String, passed: bool) {
        self.push(name, expected, computed, passed);
    }

    fn failure(&mut self, name: &str, expected: &str, error: impl fmt::Display) {
        self.push(name, expected.to_string(), format!("error: {error}"), false);
    }

    /// Unwraps a computation, recording a failed row instead of propagating
    /// the error.
    fn try_value<T, E: fmt::Display>(&mut self, name: &str, result: Result<T, E>) -> Option<T> {
        match result {
            Ok(value) => Some(value),
            Err(error) => {
                self.failure(name, "computes without error", error);
                None
            }
        }
    }
}

/// Builds the identity-style abstraction of the base onto a two-variable
/// binary summary: S to the first high variable, C to the second, identity
/// outcome maps.
fn identity_onto(base: &Scm, high: &Scm) -> Result<Abstraction, AbstractionError> {
    let mut varmap = BTreeMap::new();
    varmap.insert("S".to_string(), high.variables()[0].name().to_string());
    varmap.insert("C".to_string(), high.variables()[1].name().to_string());
    let identity = BinaryStochasticMatrix::new(2, vec![0, 1])?;
    Abstraction::new(base.clone(), high.clone(), varmap, vec![identity.clone(), identity])
}

/// Tolerance for quantities that are zero or rationally exact.
const EXACT_TOL: f64 = 1e-9;
/// Tolerance against the stored full-precision reference values.
const STORED_TOL: f64 = 1e-6;
/// Tolerance against the two-digit reference values.
const ROUNDED_TOL: f64 = 5e-3;

/// Recomputes every reference quantity from the fixtures in `source` and
/// checks it against its stored value. `lambda` overrides the trade-off
/// weight used for the objective rows (default 1); error and loss rows are
/// unaffected by it. Fixtures that fail to load or validate produce failed
/// rows, never a panic or an early exit.
pub fn selftest_report(source: &FixtureSource, lambda: Option<f64>) -> SelftestReport {
    let lambda = lambda.unwrap_or(1.0);
    let mut t = Table { rows: Vec::new() };

    let load_model = |t: &mut Table, file: &str| -> Option<Scm> {
        let name = format!("load {file}");
        let text = t.try_value(&name, source.read(file))?;
        let scm = t.try_value(&name, io::load_model(&text))?;
        t.exact(&name, "loads and validates".to_string(), "ok".to_string(), true);
        Some(scm)
    };

    let base = load_model(&mut t, "model_M.json");
    let summary = load_model(&mut t, "model_Mprime.json");
    let detuned = load_model(&mut t, "model_Mdprime.json");
    let retuned = load_model(&mut t, "model_Mtprime.json");
    let collapse = load_model(&mut t, "model_Ms.json");

    let load_abs = |t: &mut Table, file: &str, base: &Option<Scm>, high: &Option<Scm>| {
        let name = format!("load {file}");
        let (Some(base), Some(high)) = (base, high) else {
            t.failure(&name, "loads and validates", "a model it depends on failed to load");
            return None;
        };
        let text = t.try_value(&name, source.read(file))?;
        let abstraction =
            t.try_value(&name, io::load_abstraction(&text, base.clone(), high.clone()))?;
        t.exact(&name, "loads and validates".to_string(), "ok".to_string(), true);
        Some(abstraction)
    };

    let alpha = load_abs(&mut t, "abs_alpha.json", &base, &summary);
    let beta = load_abs(&mut t, "abs_beta.json", &base, &summary);
    let gamma = load_abs(&mut t, "abs_gamma.json", &base, &collapse);

    if let Some(base) = &base {
        t.vector(
            "joint distribution of model_M",
            base.joint_distribution().as_slice(),
            &[0.576, 0.064, 0.064, 0.096, 0.096, 0.024, 0.024, 0.056],
            EXACT_TOL,
        );
        if let Some(p_s) = t.try_value("P(S) of model_M", base.marginal(&["S"])) {
            t.vector("P(S) of model_M", p_s.as_slice(), &[0.76, 0.24], EXACT_TOL);
        }
        if let Some(cond) =
            t.try_value("P(S | C) of model_M", base.conditional(&["S"], &["C"]))
        {
            let entries = matrix_entries(&cond);
            t.vector(
                "P(S | C) of model_M",
                &entries,
                &[
                    0.8842105263157894,
                    0.3666666666666667,
                    0.11578947368421053,
                    0.6333333333333333,
                ],
                STORED_TOL,
            );
            t.vector(
                "P(S | C) of model_M vs two-digit reference",
                &entries,
                &[0.88, 0.37, 0.12, 0.63],
                ROUNDED_TOL,
            );
        }
        if let Some(virt) =
            t.try_value("P(C | do(S)) of model_M", base.virtual_mechanism(&["S"], &["C"]))
        {
            t.vector(
                "P(C | do(S)) of model_M",
                &matrix_entries(&virt),
                &[0.88, 0.38, 0.12, 0.62],
                EXACT_TOL,
            );
        }
    }

    if let Some(summary) = &summary {
        t.vector(
            "joint distribution of model_Mprime",
            summary.joint_distribution().as_slice(),
            &[0.176, 0.024, 0.304, 0.496],
            EXACT_TOL,
        );
        if let Some(p_s) = t.try_value("P(S') of model_Mprime", summary.marginal(&["S'"])) {
            t.vector("P(S') of model_Mprime", p_s.as_slice(), &[0.2, 0.8], EXACT_TOL);
        }
        if let Some(cond) = t.try_value(
            "P(S' | C') of model_Mprime",
            summary.conditional(&["S'"], &["C'"]),
        ) {
            let entries = matrix_entries(&cond);
            t.vector(
                "P(S' | C') of model_Mprime",
                &entries,
                &[
                    0.36666666666666664,
                    0.046153846153846156,
                    0.6333333333333333,
                    0.9538461538461538,
                ],
                STORED_TOL,
            );
            t.vector(
                "P(S' | C') of model_Mprime vs two-digit reference",
                &entries,
                &[0.37, 0.05, 0.63, 0.95],
                ROUNDED_TOL,
            );
        }
    }

    if let Some(retuned) = &retuned {
        t.vector(
            "joint distribution of model_Mtprime",
            retuned.joint_distribution().as_slice(),
            &[0.704, 0.096, 0.076, 0.124],
            EXACT_TOL,
        );
    }

    // Scores an abstraction: error and loss rows at fixed tolerances, plus
    // the lambda-weighted objective row recomputed from the stored values.
    let score = |t: &mut Table,
                     label: &str,
                     abstraction: &Abstraction,
                     expected_e: f64,
                     e_tol: f64,
                     expected_i: f64,
                     rounded: Option<(f64, f64)>| {
        let Some(report) =
            t.try_value(&format!("evaluation of {label}"), abstraction.evaluate(lambda))
        else {
            return;
        };
        t.scalar(&format!("error of {label}"), report.e(), expected_e, e_tol);
        t.scalar(&format!("loss of {label}"), report.i(), expected_i, STORED_TOL);
        if let Some((rounded_e, rounded_i)) = rounded {
            t.scalar(
                &format!("error of {label} vs two-digit reference"),
                report.e(),
                rounded_e,
                ROUNDED_TOL,
            );
            t.scalar(
                &format!("loss of {label} vs two-digit reference"),
                report.i(),
                rounded_i,
                ROUNDED_TOL,
            );
        }
        t.scalar(
            &format!("objective of {label}"),
            report.objective(),
            expected_e + lambda * expected_i,
            STORED_TOL,
        );
    };

    if let Some(alpha) = &alpha {
        score(&mut t, "abs_alpha", alpha, 0.0, EXACT_TOL, 0.4432084736213933, Some((0.0, 0.44)));
        let reconstruction = alpha
            .global_inverse()
            .apply(&alpha.high().joint_distribution());
        if let Some(reconstruction) =
            t.try_value("reconstruction through abs_alpha", reconstruction)
        {
            t.vector(
                "reconstruction through abs_alpha",
                reconstruction.as_slice(),
                &[0.088, 0.012, 0.152, 0.248, 0.088, 0.012, 0.152, 0.248],
                EXACT_TOL,
            );
        }
    }

    if let Some(beta) = &beta {
        score(
            &mut t,
            "abs_beta",
            beta,
            0.2164268599328642,
            STORED_TOL,
            0.31430370573308963,
            Some((0.22, 0.31)),
        );
    }

    if let Some(gamma) = &gamma {
        score(&mut t, "abs_gamma", gamma, 0.0, 0.0, 0.3671539190498019, Some((0.0, 0.37)));
        let inverse = gamma.global_inverse();
        let entries = matrix_entries(&inverse);
        t.exact(
            "inverse column of abs_gamma",
            "every entry exactly 0.125".to_string(),
            fmt_vec(&entries),
            inverse.cols() == 1 && entries.iter().all(|&v| v == 0.125),
        );
    }

    if let (Some(base), Some(detuned)) = (&base, &detuned) {
        match identity_onto(base, detuned) {
            Ok(onto_detuned) => {
                score(
                    &mut t,
                    "the identity-style abstraction onto model_Mdprime",
                    &onto_detuned,
                    0.07749949674607029,
                    STORED_TOL,
                    0.4453136592966774,
                    Some((0.077, 0.4453136592966774)),
                );
                if let Some(report) = t.try_value(
                    "worst intervention onto model_Mdprime",
                    onto_detuned.evaluate(lambda),
                ) {
                    // Interventions are on the base side, so the label
                    // names the base variable.
                    let worst = report
                        .per_diagram()
                        .iter()
                        .max_by(|a, b| a.value().total_cmp(&b.value()))
                        .map(|d| d.worst_intervention().to_string())
                        .unwrap_or_default();
                    t.exact(
                        "worst intervention onto model_Mdprime",
                        "S=0".to_string(),
                        worst.clone(),
                        worst == "S=0",
                    );
                }
            }
            Err(error) => t.failure(
                "the identity-style abstraction onto model_Mdprime",
                "constructs",
                error,
            ),
        }
    }

    if let (Some(base), Some(retuned)) = (&base, &retuned) {
        match identity_onto(base, retuned) {
            Ok(onto_retuned) => score(
                &mut t,
                "the identity-style abstraction onto model_Mtprime",
                &onto_retuned,
                0.0,
                EXACT_TOL,
                0.24399834647877874,
                Some((0.0, 0.24)),
            ),
            Err(error) => t.failure(
                "the identity-style abstraction onto model_Mtprime",
                "constructs",
                error,
            ),
        }
    }

    SelftestReport { lambda, rows: t.rows }
}
