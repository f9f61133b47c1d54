//! Command-line front end over the library: validate and query models,
//! score abstractions, search for them, and recheck the bundled
//! reference values.
//!
//! Exit codes follow one contract everywhere: 0 on success, 1 when the
//! request was well formed but cannot be satisfied (invalid model,
//! impossible query, inconsistent problem), 2 on usage or I/O failures
//! (unknown flags, missing files, malformed documents).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use causal_abstraction::fixtures::{selftest_report, FixtureSource, SelftestReport};
use causal_abstraction::io::{self, canonical_f64, DocumentError};
use causal_abstraction::learn::{solve, LearnError, SolverResult};
use causal_abstraction::numerics::{Distribution, StochasticMatrix};
use causal_abstraction::scm::{InterventionAssignment, Scm, ScmError};
use causal_abstraction::{abstraction::AbstractionError, indexing};

#[derive(Parser)]
#[command(
    name = "causal-abstraction",
    version,
    about = "Finite structural causal models and causal abstractions",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Decimal places used when printing numbers as text.
    #[arg(long, global = true, default_value_t = 6, value_name = "N")]
    precision: usize,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Human-readable tables.
    Text,
    /// JSON in the same dialect as the input documents.
    MachineReadable,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document; print violations one per line.
    Validate {
        /// Path to the model document.
        model: PathBuf,
    },
    /// Print the joint distribution over all variables.
    Joint {
        /// Path to the model document.
        model: PathBuf,
        #[command(flatten)]
        interventions: DoFlags,
    },
    /// Print the marginal distribution over chosen variables.
    Marginal {
        /// Path to the model document.
        model: PathBuf,
        /// Variables to keep, comma separated, in the order to report.
        #[arg(long, value_delimiter = ',', required = true, value_name = "VARS")]
        vars: Vec<String>,
        #[command(flatten)]
        interventions: DoFlags,
    },
    /// Print the conditional distribution of targets given other variables.
    Conditional {
        /// Path to the model document.
        model: PathBuf,
        /// Target variables, comma separated.
        #[arg(long, value_delimiter = ',', required = true, value_name = "VARS")]
        targets: Vec<String>,
        /// Conditioning variables, comma separated.
        #[arg(long = "given", value_delimiter = ',', value_name = "VARS")]
        given: Vec<String>,
    },
    /// Print the mechanism from intervened sources to observed targets.
    Virtual {
        /// Path to the model document.
        model: PathBuf,
        /// Source variables (the intervened inputs), comma separated.
        #[arg(long, value_delimiter = ',', required = true, value_name = "VARS")]
        from: Vec<String>,
        /// Target variables, comma separated.
        #[arg(long, value_delimiter = ',', required = true, value_name = "VARS")]
        to: Vec<String>,
    },
    /// Apply interventions and print the resulting model document.
    Intervene {
        /// Path to the model document.
        model: PathBuf,
        #[command(flatten)]
        interventions: DoFlags,
    },
    /// Score an abstraction of a base model into a high-level model.
    Assess {
        /// Path to the base (detailed) model document.
        base: PathBuf,
        /// Path to the high-level model document.
        high: PathBuf,
        /// Path to the abstraction document.
        abstraction: PathBuf,
        /// Weight of the information-loss term in the objective.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Search for the best abstractions described by a problem document.
    Learn {
        /// Path to the problem document.
        #[arg(long, value_name = "FILE")]
        problem: PathBuf,
        /// Override the document's information-loss weight.
        #[arg(long)]
        lambda: Option<f64>,
        /// Override how many ranked candidates to keep.
        #[arg(long, value_name = "K")]
        top_k: Option<usize>,
        /// Override the candidate-evaluation budget.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
    },
    /// Recompute the bundled reference values and check them.
    Selftest {
        /// Read fixture documents from this directory instead of the
        /// embedded copies.
        #[arg(long, value_name = "DIR")]
        fixtures: Option<PathBuf>,
        /// Recompute objective expectations with this information-loss
        /// weight.
        #[arg(long)]
        lambda: Option<f64>,
    },
}

/// Repeatable `--do VAR=OUTCOME` flags shared by the query subcommands.
#[derive(Args)]
struct DoFlags {
    /// Perfect intervention, e.g. `--do S=0` (repeatable).
    #[arg(long = "do", value_name = "VAR=OUTCOME")]
    assignments: Vec<String>,
}

/// A failed invocation: the message and which exit class it belongs to.
enum Failure {
    /// The request was well formed but cannot be satisfied (exit 1).
    Domain(String),
    /// Bad flags, missing files, malformed documents (exit 2).
    Usage(String),
}

impl Failure {
    fn message(&self) -> &str {
        match self {
            Failure::Domain(message) | Failure::Usage(message) => message,
        }
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Domain(_) => ExitCode::from(1),
            Failure::Usage(_) => ExitCode::from(2),
        }
    }
}

impl From<DocumentError> for Failure {
    fn from(err: DocumentError) -> Self {
        match err.exit_code() {
            2 => Failure::Usage(err.to_string()),
            _ => Failure::Domain(err.to_string()),
        }
    }
}

impl From<ScmError> for Failure {
    fn from(err: ScmError) -> Self {
        Failure::Domain(err.to_string())
    }
}

impl From<AbstractionError> for Failure {
    fn from(err: AbstractionError) -> Self {
        Failure::Domain(err.to_string())
    }
}

impl From<LearnError> for Failure {
    fn from(err: LearnError) -> Self {
        Failure::Domain(err.to_string())
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

/// Restore the default SIGPIPE disposition so that piping the output into
/// a pager or `head` ends the process quietly, the way other command-line
/// tools behave, instead of panicking on a closed stdout.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Joint { model, interventions } => cmd_joint(cli, model, interventions),
        Command::Marginal { model, vars, interventions } => {
            cmd_marginal(cli, model, vars, interventions)
        }
        Command::Conditional { model, targets, given } => {
            cmd_conditional(cli, model, targets, given)
        }
        Command::Virtual { model, from, to } => cmd_virtual(cli, model, from, to),
        Command::Intervene { model, interventions } => cmd_intervene(model, interventions),
        Command::Assess { base, high, abstraction, lambda } => {
            cmd_assess(cli, base, high, abstraction, *lambda)
        }
        Command::Learn { problem, lambda, top_k, budget } => {
            cmd_learn(cli, problem, *lambda, *top_k, *budget)
        }
        Command::Selftest { fixtures, lambda } => cmd_selftest(cli, fixtures.as_deref(), *lambda),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn parse_do(flags: &DoFlags) -> Result<InterventionAssignment, Failure> {
    let mut pairs = Vec::new();
    for spec in &flags.assignments {
        let Some((variable, outcome)) = spec.split_once('=') else {
            return Err(Failure::Usage(format!(
                "--do takes VAR=OUTCOME, got {spec:?}"
            )));
        };
        pairs.push((variable, outcome));
    }
    Ok(InterventionAssignment::from_pairs(pairs)?)
}

fn load_intervened(path: &Path, flags: &DoFlags) -> Result<(Scm, InterventionAssignment), Failure> {
    let model = io::load_model_file(path)?;
    let assignment = parse_do(flags)?;
    let model = model.intervene(&assignment)?;
    Ok((model, assignment))
}

/// One outcome-label tuple per joint configuration of `vars`, in canonical
/// order (the first listed variable varies slowest).
fn outcome_combinations(scm: &Scm, vars: &[&str]) -> Result<Vec<Vec<String>>, Failure> {
    let mut cards = Vec::new();
    let mut outcomes: Vec<&[String]> = Vec::new();
    for name in vars {
        let index = scm.var_index(name)?;
        let spec = &scm.variables()[index];
        cards.push(spec.cardinality());
        outcomes.push(spec.outcomes());
    }
    Ok(indexing::assignments(&cards)
        .map(|digits| {
            digits
                .iter()
                .zip(&outcomes)
                .map(|(&digit, labels)| labels[digit].clone())
                .collect()
        })
        .collect())
}

/// `"S=0,C=1"`-style labels for the configurations of `vars`.
fn config_labels(vars: &[&str], combinations: &[Vec<String>]) -> Vec<String> {
    combinations
        .iter()
        .map(|combo| {
            vars.iter()
                .zip(combo)
                .map(|(name, outcome)| format!("{name}={outcome}"))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

fn str_refs(names: &[String]) -> Vec<&str> {
    names.iter().map(String::as_str).collect()
}

/// Header like `P(S, C | do(E=0))`; the conditioning part is omitted when
/// the assignment is empty.
fn distribution_title(vars: &[&str], assignment: &InterventionAssignment) -> String {
    let vars = vars.join(", ");
    if assignment.is_empty() {
        format!("P({vars})")
    } else {
        format!("P({vars} | do({assignment}))")
    }
}

fn print_distribution(title: &str, labels: &[String], dist: &Distribution, precision: usize) {
    println!("{title}");
    let width = labels.iter().map(String::len).max().unwrap_or(0);
    for (label, p) in labels.iter().zip(dist.iter()) {
        println!("{label:<width$}  {p:.precision$}");
    }
}

fn assignment_json(assignment: &InterventionAssignment) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = assignment
        .iter()
        .map(|(variable, outcome)| (variable.to_string(), json!(outcome)))
        .collect();
    serde_json::Value::Object(map)
}

fn distribution_json(
    vars: &[&str],
    assignment: &InterventionAssignment,
    combinations: &[Vec<String>],
    dist: &Distribution,
) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = combinations
        .iter()
        .zip(dist.iter())
        .map(|(combo, p)| json!({ "outcomes": combo, "probability": canonical_f64(*p) }))
        .collect();
    json!({
        "variables": vars,
        "interventions": assignment_json(assignment),
        "entries": entries,
    })
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report JSON serializes")
    );
}

fn print_matrix(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    matrix: &StochasticMatrix,
    precision: usize,
) {
    println!("{title}");
    let value_width = precision + 2;
    let row_width = row_labels.iter().map(String::len).max().unwrap_or(0);
    let col_widths: Vec<usize> = col_labels
        .iter()
        .map(|label| label.len().max(value_width))
        .collect();
    let mut header = format!("{:row_width$}", "");
    for (label, width) in col_labels.iter().zip(&col_widths) {
        let width = *width;
        header.push_str(&format!("  {label:>width$}"));
    }
    println!("{}", header.trim_end());
    for (r, row_label) in row_labels.iter().enumerate() {
        let mut line = format!("{row_label:<row_width$}");
        for (c, width) in col_widths.iter().enumerate() {
            let width = *width;
            let value = matrix.entry(r, c);
            line.push_str(&format!("  {value:>width$.precision$}"));
        }
        println!("{}", line.trim_end());
    }
}

fn matrix_rows_json(matrix: &StochasticMatrix) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..matrix.rows())
        .map(|r| (0..matrix.cols()).map(|c| canonical_f64(matrix.entry(r, c))).collect())
        .collect();
    json!(rows)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_validate(path: &Path) -> Result<ExitCode, Failure> {
    match io::load_model_file(path) {
        Ok(_) => {
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Err(DocumentError::Model(ScmError::Invalid { violations })) => {
            for violation in &violations {
                println!("{violation}");
            }
            Ok(ExitCode::from(1))
        }
        Err(err) => Err(err.into()),
    }
}

fn cmd_joint(cli: &Cli, path: &Path, flags: &DoFlags) -> Result<ExitCode, Failure> {
    let (model, assignment) = load_intervened(path, flags)?;
    let names: Vec<&str> = model.variables().iter().map(|v| v.name()).collect();
    let combos = outcome_combinations(&model, &names)?;
    let dist = model.joint_distribution();
    match cli.output {
        OutputFormat::Text => print_distribution(
            &distribution_title(&names, &assignment),
            &config_labels(&names, &combos),
            &dist,
            cli.precision,
        ),
        OutputFormat::MachineReadable => {
            print_json(&distribution_json(&names, &assignment, &combos, &dist));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_marginal(
    cli: &Cli,
    path: &Path,
    vars: &[String],
    flags: &DoFlags,
) -> Result<ExitCode, Failure> {
    let (model, assignment) = load_intervened(path, flags)?;
    let names = str_refs(vars);
    let dist = model.marginal(&names)?;
    let combos = outcome_combinations(&model, &names)?;
    match cli.output {
        OutputFormat::Text => print_distribution(
            &distribution_title(&names, &assignment),
            &config_labels(&names, &combos),
            &dist,
            cli.precision,
        ),
        OutputFormat::MachineReadable => {
            print_json(&distribution_json(&names, &assignment, &combos, &dist));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_conditional(
    cli: &Cli,
    path: &Path,
    targets: &[String],
    given: &[String],
) -> Result<ExitCode, Failure> {
    let model = io::load_model_file(path)?;
    let target_refs = str_refs(targets);
    let given_refs = str_refs(given);
    let matrix = model.conditional(&target_refs, &given_refs)?;
    let target_combos = outcome_combinations(&model, &target_refs)?;
    let given_combos = outcome_combinations(&model, &given_refs)?;
    match cli.output {
        OutputFormat::Text => {
            let title = if given.is_empty() {
                format!("P({})", target_refs.join(", "))
            } else {
                format!("P({} | {})", target_refs.join(", "), given_refs.join(", "))
            };
            print_matrix(
                &title,
                &config_labels(&target_refs, &target_combos),
                &config_labels(&given_refs, &given_combos),
                &matrix,
                cli.precision,
            );
        }
        OutputFormat::MachineReadable => print_json(&json!({
            "targets": targets,
            "given": given,
            "row_outcomes": target_combos,
            "column_outcomes": given_combos,
            "rows": matrix_rows_json(&matrix),
        })),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_virtual(
    cli: &Cli,
    path: &Path,
    from: &[String],
    to: &[String],
) -> Result<ExitCode, Failure> {
    let model = io::load_model_file(path)?;
    let from_refs = str_refs(from);
    let to_refs = str_refs(to);
    let matrix = model.virtual_mechanism(&from_refs, &to_refs)?;
    let to_combos = outcome_combinations(&model, &to_refs)?;
    let from_combos = outcome_combinations(&model, &from_refs)?;
    match cli.output {
        OutputFormat::Text => {
            let title = format!("P({} | do({}))", to_refs.join(", "), from_refs.join(", "));
            print_matrix(
                &title,
                &config_labels(&to_refs, &to_combos),
                &config_labels(&from_refs, &from_combos),
                &matrix,
                cli.precision,
            );
        }
        OutputFormat::MachineReadable => print_json(&json!({
            "sources": from,
            "targets": to,
            "row_outcomes": to_combos,
            "column_outcomes": from_combos,
            "rows": matrix_rows_json(&matrix),
        })),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_intervene(path: &Path, flags: &DoFlags) -> Result<ExitCode, Failure> {
    let (model, _) = load_intervened(path, flags)?;
    print!("{}", io::dump_model(&model));
    Ok(ExitCode::SUCCESS)
}

fn cmd_assess(
    cli: &Cli,
    base: &Path,
    high: &Path,
    abstraction: &Path,
    lambda: f64,
) -> Result<ExitCode, Failure> {
    let base = io::load_model_file(base)?;
    let high = io::load_model_file(high)?;
    let abstraction = io::load_abstraction_file(abstraction, base, high)?;
    let report = abstraction.evaluate(lambda)?;
    match cli.output {
        OutputFormat::Text => {
            let precision = cli.precision;
            println!("e = {:.precision$}", report.e());
            println!("i = {:.precision$}", report.i());
            println!("lambda = {:.precision$}", report.lambda());
            println!("objective = {:.precision$}", report.objective());
            println!("diagrams ({}):", report.per_diagram().len());
            for diagram in report.per_diagram() {
                println!(
                    "  {{{}}} -> {{{}}}  error {:.precision$}  worst do({})",
                    diagram.sources().join(","),
                    diagram.targets().join(","),
                    diagram.value(),
                    diagram.worst_intervention(),
                );
            }
        }
        OutputFormat::MachineReadable => {
            let diagrams: Vec<serde_json::Value> = report
                .per_diagram()
                .iter()
                .map(|diagram| {
                    json!({
                        "sources": diagram.sources(),
                        "targets": diagram.targets(),
                        "error": canonical_f64(diagram.value()),
                        "worst_intervention": assignment_json(diagram.worst_intervention()),
                    })
                })
                .collect();
            print_json(&json!({
                "lambda": canonical_f64(report.lambda()),
                "e": canonical_f64(report.e()),
                "i": canonical_f64(report.i()),
                "objective": canonical_f64(report.objective()),
                "diagrams": diagrams,
            }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_learn(
    cli: &Cli,
    path: &Path,
    lambda: Option<f64>,
    top_k: Option<usize>,
    budget: Option<u64>,
) -> Result<ExitCode, Failure> {
    let mut problem = io::load_problem_file(path)?;
    if let Some(lambda) = lambda {
        problem = problem.with_lambda(lambda);
    }
    if let Some(top_k) = top_k {
        problem = problem.with_top_k(top_k);
    }
    if let Some(budget) = budget {
        let mut caps = problem.caps().clone();
        caps.budget = budget;
        problem = problem.with_caps(caps);
    }
    let result = solve(&problem)?;
    match cli.output {
        OutputFormat::Text => print_learn_table(&result, cli.precision),
        OutputFormat::MachineReadable => {
            let candidates: Vec<serde_json::Value> = result
                .ranked()
                .iter()
                .enumerate()
                .map(|(index, candidate)| {
                    let document: serde_json::Value =
                        serde_json::from_str(&io::dump_abstraction(candidate.abstraction()))
                            .expect("candidate document serializes");
                    json!({
                        "rank": index + 1,
                        "objective": canonical_f64(candidate.report().objective()),
                        "e": canonical_f64(candidate.report().e()),
                        "i": canonical_f64(candidate.report().i()),
                        "encoding": candidate.encoding_string(),
                        "abstraction": document,
                    })
                })
                .collect();
            print_json(&json!({
                "candidates_evaluated": result.candidates_evaluated(),
                "exhaustive": result.exhaustive(),
                "lambda": canonical_f64(problem.lambda()),
                "candidates": candidates,
            }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_learn_table(result: &SolverResult, precision: usize) {
    let suffix = if result.exhaustive() { "" } else { " (stopped at budget)" };
    println!(
        "evaluated {} candidates{suffix}",
        result.candidates_evaluated()
    );
    let value_width = precision + 2;
    let rank_width = "rank".len().max(result.ranked().len().to_string().len());
    let objective_width = "objective".len().max(value_width);
    println!(
        "{:>rank_width$}  {:>objective_width$}  {:>value_width$}  {:>value_width$}  candidate",
        "rank", "objective", "e", "i",
    );
    for (index, candidate) in result.ranked().iter().enumerate() {
        let rank = index + 1;
        let report = candidate.report();
        let objective = report.objective();
        let e = report.e();
        let i = report.i();
        println!(
            "{rank:>rank_width$}  {objective:>objective_width$.precision$}  \
             {e:>value_width$.precision$}  {i:>value_width$.precision$}  {}",
            candidate.encoding_string(),
        );
    }
}

fn cmd_selftest(
    cli: &Cli,
    fixtures: Option<&Path>,
    lambda: Option<f64>,
) -> Result<ExitCode, Failure> {
    let source = match fixtures {
        Some(dir) => FixtureSource::Dir(dir.to_path_buf()),
        None => FixtureSource::Embedded,
    };
    let report = selftest_report(&source, lambda);
    match cli.output {
        OutputFormat::Text => print_selftest(&report),
        OutputFormat::MachineReadable => {
            let rows: Vec<serde_json::Value> = report
                .rows()
                .iter()
                .map(|row| {
                    json!({
                        "name": row.name(),
                        "expected": row.expected(),
                        "computed": row.computed(),
                        "passed": row.passed(),
                    })
                })
                .collect();
            print_json(&json!({
                "lambda": canonical_f64(report.lambda()),
                "passed": report.passed(),
                "rows": rows,
            }));
        }
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn print_selftest(report: &SelftestReport) {
    println!("reference check (lambda = {})", report.lambda());
    for row in report.rows() {
        let status = if row.passed() { "PASS" } else { "FAIL" };
        println!("{status}  {}: {}", row.name(), row.computed());
        if !row.passed() {
            println!("      expected {}", row.expected());
        }
    }
    let total = report.rows().len();
    let passed = report.rows().iter().filter(|row| row.passed()).count();
    println!("{passed} of {total} checks passed");
}
