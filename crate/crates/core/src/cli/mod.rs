//! Command-line front end.
//!
//! Reports are `key value` lines in a fixed order with every rational written as
//! `num/den`. Errors go to stderr as `error <kind>: <message>`. Exit codes: 0 success,
//! 1 input or validation error, 2 unsupported structure, 3 resource limit.

mod format;
mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use format::{
    parse_graph, parse_model, parse_model_document, parse_observation, serialize_graph, serialize_model,
    serialize_observation, ModelDocument,
};
pub use report::ReportDocument;

use crate::canon::DEFAULT_MAX_TUPLES;
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, ExperimentReport};
use crate::graph::{self, ForbiddenReading};
use crate::invariance::{self, FunctionSpec, Witness};
use crate::polytope::{self, ConditionalQuery};
use crate::rational::{format_rational, parse_rational};
use crate::scm::{DiscreteScm, FiniteDomain};

#[derive(Debug, Parser)]
#[command(name = "cfinv", version, about = "Exact counterfactual-invariance analysis for discrete causal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate model, graph or observation files.
    Validate(ValidateArgs),
    /// Almost-sure, distributional and functional invariance of a model.
    Analyze(AnalyzeArgs),
    /// Valid adjustment sets and the independences they imply.
    Adjust(AdjustArgs),
    /// Exact bounds over all models compatible with an observed distribution.
    Bounds(BoundsArgs),
    /// Every functionally invariant function of the given inputs.
    EnumerateFci(EnumerateFciArgs),
    /// Reproducible sweeps and Monte Carlo runs.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCommand,
    },
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    obs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long)]
    intervene: String,
    /// Conditioning set for the distributional gap, comma separated; repeatable.
    /// The empty set is always reported.
    #[arg(long)]
    given: Vec<String>,
    /// Inputs of a function to check for functional invariance, comma separated.
    #[arg(long, requires = "function_table")]
    function_inputs: Option<String>,
    /// Function outputs over input assignments in lexicographic order, comma separated.
    #[arg(long, requires = "function_inputs")]
    function_table: Option<String>,
    /// Codomain values of the function.
    #[arg(long, default_value = "0,1")]
    codomain: String,
}

#[derive(Debug, Args)]
struct AdjustArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    exposure: String,
    #[arg(long)]
    outcome: String,
    #[arg(long, default_value_t = 2)]
    max_size: usize,
    /// Treat every descendant of the exposure as forbidden.
    #[arg(long)]
    include_exposure: bool,
    /// Check one candidate set, comma separated (empty for the empty set).
    #[arg(long)]
    check: Option<String>,
    /// Derive independences for a function of these inputs instead of the outcome.
    #[arg(long)]
    function_inputs: Option<String>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long)]
    intervene: String,
    /// Target value of a conditional query `P(target(level) = value | given, Z = factual)`.
    #[arg(long, requires_all = ["level", "factual"])]
    query_value: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    factual: Option<String>,
    /// Observed conditioning event of the query, e.g. `Y=0,W=1`.
    #[arg(long, default_value = "")]
    given: String,
}

#[derive(Debug, Args)]
struct EnumerateFciArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    inputs: String,
    #[arg(long)]
    intervene: String,
    #[arg(long, default_value = "0,1")]
    codomain: String,
    #[arg(long, default_value_t = DEFAULT_MAX_TUPLES)]
    limit: u64,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Count exactly and nearly invariant models among compatible ones.
    MeasureZero {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        intervene: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        #[arg(long)]
        target_mass: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare invariant functions with functions of non-descendants on random models.
    FciRarity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        intervene: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        inputs: String,
        #[arg(long, default_value_t = 2)]
        codomain: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Gap given a mediator when the target copies it.
    DciEmbedding {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        intervene: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        mediator: String,
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Degree range over the response line with `Y` independent of `Z`.
    UnboundedDegree {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Exit code and the text destined for stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs one invocation; `args` includes the program name.
pub fn run_command<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CommandOutcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(report) => CommandOutcome {
            code: 0,
            stdout: report.render(),
            stderr: String::new(),
        },
        Err(e) => CommandOutcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error {}: {e}\n", e.kind()),
        },
    }
}

fn dispatch(command: Command) -> Result<ReportDocument> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Analyze(a) => analyze(a),
        Command::Adjust(a) => adjust(a),
        Command::Bounds(a) => bounds(a),
        Command::EnumerateFci(a) => enumerate_fci(a),
        Command::Experiment { kind } => experiment(kind),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn split_assignments(s: &str) -> Result<Vec<(String, String)>> {
    split_list(s)
        .into_iter()
        .map(|item| {
            item.split_once('=')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| Error::InvalidArgument(format!("expected NAME=VALUE, got `{item}`")))
        })
        .collect()
}

fn set_label(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn validate(a: ValidateArgs) -> Result<ReportDocument> {
    if a.model.is_none() && a.graph.is_none() && a.obs.is_none() {
        return Err(Error::InvalidArgument("give at least one of --model, --graph, --obs".into()));
    }
    let mut r = ReportDocument::new();
    if let Some(path) = &a.model {
        let doc = parse_model_document(&read(path)?)?;
        let m = &doc.model;
        r.push("model_variables", m.dag().topological_names().join(","));
        r.push("model_edges", m.dag().edges().len());
        r.push("model_noise_support", m.noise_support_size());
        for (k, v) in &doc.metadata {
            r.push(format!("metadata_{k}"), v);
        }
    }
    if let Some(path) = &a.graph {
        let g = parse_graph(&read(path)?)?;
        r.push("graph_variables", g.topological_names().join(","));
        r.push("graph_edges", g.edges().len());
    }
    if let Some(path) = &a.obs {
        let d = parse_observation(&read(path)?)?;
        r.push("observation_variables", d.names().join(","));
        r.push("observation_support", d.support().count());
    }
    r.push("status", "ok");
    Ok(r)
}

fn render_witness(model: &DiscreteScm, intervened: usize, w: &Witness) -> String {
    let dag = model.dag();
    let zname = dag.name(intervened);
    let level = |x: usize| dag.variable(intervened).domain.value(x).to_string();
    match w {
        Witness::Noise { z, z_prime, noise } => format!(
            "{zname}={} vs {zname}={} at noise {}",
            level(*z),
            level(*z_prime),
            noise.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        ),
        Witness::Cell { z, z_prime, y, w } => format!(
            "cell {zname}={} w={} value={} vs {zname}={}",
            level(*z),
            w.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            y,
            level(*z_prime)
        ),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<ReportDocument> {
    let model = parse_model(&read(&a.model)?)?;
    let z = model.id(&a.intervene)?;
    let mut r = ReportDocument::new();
    r.push("target", &a.target);
    r.push("intervened", &a.intervene);
    let as_ci = invariance::as_ci_report(&model, &a.target, &a.intervene)?;
    r.push("as_ci_degree", format_rational(&as_ci.value));
    r.push("as_ci_holds", as_ci.holds);
    if let Some(w) = &as_ci.witness {
        r.push("as_ci_witness", render_witness(&model, z, w));
    }
    let mut sets: Vec<Vec<String>> = vec![Vec::new()];
    for g in &a.given {
        let s = split_list(g);
        if !sets.contains(&s) {
            sets.push(s);
        }
    }
    for set in &sets {
        let label = set_label(set);
        let d = invariance::dci_gap(&model, &a.target, &a.intervene, set)?;
        r.push(format!("dci_gap{label}"), format_rational(&d.gap));
        r.push(format!("dci_holds{label}"), d.holds());
        if !d.skipped_levels.is_empty() || !d.skipped_cells.is_empty() {
            r.push(
                format!("dci_skipped{label}"),
                format!("levels={} cells={}", d.skipped_levels.len(), d.skipped_cells.len()),
            );
        }
    }
    if let (Some(inputs), Some(table)) = (&a.function_inputs, &a.function_table) {
        let inputs = split_list(inputs);
        let codomain = FiniteDomain::new(split_list(&a.codomain))?;
        let table = split_list(table)
            .iter()
            .map(|v| {
                codomain
                    .index_of(v)
                    .ok_or_else(|| Error::InvalidArgument(format!("function output `{v}` is not in the codomain")))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = FunctionSpec::new(inputs.clone(), codomain, table);
        let direct = invariance::is_fci(&model, &f, &a.intervene)?;
        let augmented = invariance::fci_degree_by_augmentation(&model, &f, &a.intervene)?;
        r.push("fci_inputs", inputs.join(","));
        r.push("fci_degree", format_rational(&direct.value));
        r.push("fci_holds", direct.holds);
        r.push("fci_degree_augmented", format_rational(&augmented));
        r.push("fci_routes_agree", augmented == direct.value);
    }
    Ok(r)
}

fn adjust(a: AdjustArgs) -> Result<ReportDocument> {
    let dag = parse_graph(&read(&a.graph)?)?;
    let reading = if a.include_exposure {
        ForbiddenReading::IncludeExposure
    } else {
        ForbiddenReading::ExcludeExposure
    };
    let max_size = a.max_size.min(dag.len().saturating_sub(2));
    let mut r = ReportDocument::new();
    r.push("exposure", &a.exposure);
    r.push("outcome", &a.outcome);
    r.push("max_size", a.max_size);
    r.push(
        "forbidden_reading",
        if a.include_exposure { "include-exposure" } else { "exclude-exposure" },
    );
    let sets = graph::enumerate_adjustment_sets(&dag, &a.exposure, &a.outcome, max_size, reading)?;
    r.push("valid_set_count", sets.len());
    r.push(
        "valid_sets",
        sets.iter().map(|s| set_label(&s.members)).collect::<Vec<_>>().join(" "),
    );
    let function_inputs = a.function_inputs.as_deref().map(split_list);
    let stmts = graph::implied_independences(
        &dag,
        Some(&a.outcome),
        &a.exposure,
        max_size + usize::from(function_inputs.is_some()),
        function_inputs.as_deref(),
        reading,
    )?;
    r.push(
        "implied_independences",
        stmts.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    );
    let discrepancy = graph::forbidden_reading_discrepancy(&dag, &a.exposure, &a.outcome, max_size)?;
    r.push(
        "reading_discrepancy",
        if discrepancy.is_empty() {
            "none".to_string()
        } else {
            discrepancy.iter().map(|s| set_label(s)).collect::<Vec<_>>().join(" ")
        },
    );
    if let Some(check) = &a.check {
        let members = split_list(check);
        let s = graph::is_valid_adjustment_set(&dag, &a.exposure, &a.outcome, &members, reading)?;
        r.push("check_set", set_label(&s.members));
        r.push("check_valid", s.valid);
        r.push(
            "check_failing_condition",
            s.failing_condition.map_or_else(|| "none".to_string(), |c| c.to_string()),
        );
    }
    Ok(r)
}

fn bounds(a: BoundsArgs) -> Result<ReportDocument> {
    let dag = parse_graph(&read(&a.graph)?)?;
    let observed = parse_observation(&read(&a.obs)?)?;
    let p = polytope::build_polytope(&dag, &observed, &a.intervene)?;
    let degree = polytope::ci_degree_bounds_on(&p, &a.target)?;
    let mut r = ReportDocument::new();
    r.push("target", &a.target);
    r.push("intervened", &a.intervene);
    r.push("polytope_dimension", p.dimension());
    r.push("constraint_rows", p.cells().len());
    for line in polytope::render_bounds("degree", &p, &degree.bounds) {
        let (k, v) = line.split_once(' ').expect("key value");
        r.push(k, v);
    }
    r.push("ci_possible", degree.ci_possible);
    r.push("ci_forced", degree.ci_forced);
    if let Some(value) = &a.query_value {
        let query = ConditionalQuery {
            target: a.target.clone(),
            value: value.clone(),
            intervened: a.intervene.clone(),
            counterfactual_level: a.level.clone().expect("required by clap"),
            factual_level: a.factual.clone().expect("required by clap"),
            conditioning: split_assignments(&a.given)?,
        };
        let given: Vec<String> = query
            .conditioning
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .chain(std::iter::once(format!("{}={}", query.intervened, query.factual_level)))
            .collect();
        r.push(
            "query",
            format!(
                "P({}({}={})={} | {})",
                query.target,
                query.intervened,
                query.counterfactual_level,
                query.value,
                given.join(", ")
            ),
        );
        let b = polytope::conditional_query_bounds_on(&p, &query)?;
        for line in polytope::render_bounds("query", &p, &b) {
            let (k, v) = line.split_once(' ').expect("key value");
            r.push(k, v);
        }
    }
    Ok(r)
}

fn enumerate_fci(a: EnumerateFciArgs) -> Result<ReportDocument> {
    let model = parse_model(&read(&a.model)?)?;
    let inputs = split_list(&a.inputs);
    let codomain = FiniteDomain::new(split_list(&a.codomain))?;
    let scan = invariance::enumerate_fci_functions(&model, &inputs, &codomain, &a.intervene, a.limit)?;
    let mut r = ReportDocument::new();
    r.push("intervened", &a.intervene);
    r.push("inputs", inputs.join(","));
    r.push("nd_inputs", set_label(&scan.nd_inputs));
    r.push("scanned", scan.scanned);
    r.push("fci_count", scan.functions.len());
    r.push("nd_function_count", scan.nd_function_count(&model)?);
    for (i, (f, nd)) in scan.functions.iter().zip(&scan.factors_through_nd).enumerate() {
        r.push(format!("fci_{i}"), format!("table={} factors_through_nd={nd}", f.render()));
    }
    r.push("all_factor_through_nd", scan.all_factor_through_nd());
    Ok(r)
}

fn experiment(kind: ExperimentCommand) -> Result<ReportDocument> {
    let (report, csv) = match kind {
        ExperimentCommand::MeasureZero {
            graph,
            intervene,
            target,
            samples,
            seed,
            epsilon,
            target_mass,
            csv,
        } => {
            let dag = parse_graph(&read(&graph)?)?;
            let mut cfg = ExperimentConfig::new(dag, &intervene, &target, samples, seed);
            cfg.epsilon = parse_rational(&epsilon)?;
            cfg.target_mass = target_mass.as_deref().map(parse_rational).transpose()?;
            cfg.output = csv.clone();
            (experiments::measure_zero_as_ci(&cfg)?, csv)
        }
        ExperimentCommand::FciRarity {
            graph,
            intervene,
            target,
            inputs,
            codomain,
            samples,
            seed,
            csv,
        } => {
            let dag = parse_graph(&read(&graph)?)?;
            let mut cfg = ExperimentConfig::new(dag, &intervene, &target, samples, seed);
            cfg.inputs = split_list(&inputs);
            cfg.codomain = codomain;
            cfg.output = csv.clone();
            (experiments::fci_rarity(&cfg)?, csv)
        }
        ExperimentCommand::DciEmbedding {
            graph,
            intervene,
            target,
            mediator,
            grid,
            csv,
        } => {
            let dag = parse_graph(&read(&graph)?)?;
            let cfg = ExperimentConfig::new(dag, &intervene, &target, 1, 0);
            (experiments::dci_embedding_demo(&cfg, &mediator, grid)?, csv)
        }
        ExperimentCommand::UnboundedDegree { p, grid, csv } => {
            (experiments::demo_unbounded_degree(&parse_rational(&p)?, grid)?, csv)
        }
    };
    experiment_report(&report, csv.as_deref())
}

fn experiment_report(report: &ExperimentReport, csv: Option<&Path>) -> Result<ReportDocument> {
    let mut r = ReportDocument::new();
    r.push("experiment", &report.experiment);
    for (k, v) in &report.config {
        r.push(format!("config_{k}"), v);
    }
    r.push("records", report.records.len());
    for (k, v) in &report.summary {
        r.push(k, v);
    }
    if let Some(path) = csv {
        report.write_csv(path)?;
        r.push("csv", path.display());
    }
    Ok(r)
}
