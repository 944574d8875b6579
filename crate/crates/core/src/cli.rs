//! Batch command-line front end.
//!
//! Problem files are JSON:
//!
//! ```json
//! {
//!   "m": 3,
//!   "equations": [{"formula": "x1 | x2 | !x3", "rhs": 1}],
//!   "edges": [[1, 2], [2, 3]],
//!   "config": {"epsilon": 0.2, "seed": 7}
//! }
//! ```
//!
//! Node `i` (1-based) holds equation `i`. Solutions are written as bit
//! strings with `x1` first. Exit codes: 0 success, 1 input or runtime error,
//! 2 unsatisfiable verdict from `sat`, 3 `--verify` mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{BooleanSystem, Equation, FormulaError};
use crate::linalg::Vector;
use crate::matricization::bits_to_string;
use crate::network::{build_weights, Graph, NetworkError, NetworkRun};
use crate::solver::{
    lae_round_stream, lift_system, oracle_solve, round_initials, solve_approximate, solve_exact,
    verify_satisfiability, RoundCount, RunConfig, SatStage, SolutionSet, SolverError, Verdict,
    SAT_STREAM,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("equation {index}: {source}")]
    Formula { index: usize, source: FormulaError },
    #[error("equation {index}: rhs must be 0 or 1, got {value}")]
    Rhs { index: usize, value: u64 },
    #[error(transparent)]
    System(FormulaError),
    #[error(transparent)]
    Graph(#[from] NetworkError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Optional run settings inside a problem file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub epsilon: Option<f64>,
    pub k_star: Option<usize>,
    #[serde(rename = "T")]
    pub budget: Option<usize>,
    pub c_star: Option<f64>,
    pub gamma_star: Option<f64>,
    pub tol: Option<f64>,
    pub consensus_tol: Option<f64>,
    pub disagreement_tol: Option<f64>,
    pub max_rounds: Option<usize>,
    pub seed: Option<u64>,
    /// Use `k* = 2^m - chi0 + 1`.
    pub prior_chi0: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EquationSpec {
    pub formula: String,
    pub rhs: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub m: usize,
    pub equations: Vec<EquationSpec>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub config: ConfigOverrides,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: BooleanSystem,
    pub graph: Graph,
    pub config: RunConfig,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_problem(self) -> Result<Problem, CliError> {
        let mut equations = Vec::with_capacity(self.equations.len());
        for (k, spec) in self.equations.iter().enumerate() {
            let index = k + 1;
            let formula = crate::formula::parse_formula(&spec.formula, self.m)
                .map_err(|source| CliError::Formula { index, source })?;
            let rhs = match spec.rhs {
                0 => false,
                1 => true,
                value => return Err(CliError::Rhs { index, value }),
            };
            equations.push(Equation { formula, rhs });
        }
        let system = BooleanSystem::new(self.m, equations).map_err(CliError::System)?;
        let graph = Graph::from_one_based(system.n(), &self.edges)?;
        let mut config = RunConfig::default();
        apply_file_overrides(&mut config, &self.config);
        Ok(Problem {
            system,
            graph,
            config,
        })
    }
}

fn apply_file_overrides(config: &mut RunConfig, o: &ConfigOverrides) {
    if o.epsilon.is_some() {
        config.epsilon = o.epsilon;
    }
    if let Some(k) = o.k_star {
        config.rounds = RoundCount::Fixed(k);
    }
    if o.prior_chi0 == Some(true) {
        config.rounds = RoundCount::PriorKnowledgeChi0;
    }
    if o.budget.is_some() {
        config.budget = o.budget;
    }
    if o.c_star.is_some() {
        config.c_star = o.c_star;
    }
    if o.gamma_star.is_some() {
        config.gamma_star = o.gamma_star;
    }
    if let Some(v) = o.tol {
        config.tol = v;
    }
    if let Some(v) = o.consensus_tol {
        config.consensus_tol = v;
    }
    if let Some(v) = o.disagreement_tol {
        config.disagreement_tol = v;
    }
    if let Some(v) = o.max_rounds {
        config.max_rounds = v;
    }
    if let Some(v) = o.seed {
        config.seed = v;
    }
}

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ProblemFile::from_json(&text)?.into_problem()
}

#[derive(Debug, Parser)]
#[command(name = "boolnet", version, about = "Solve Boolean equation systems over a simulated network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact solver: k* randomized linear solves, then unit-vector search.
    Solve(RunArgs),
    /// Finite-budget solver; requires --T.
    SolveApprox(RunArgs),
    /// Distributed satisfiability check.
    Sat(RunArgs),
    /// Exhaustive reference solver.
    Oracle(RunArgs),
    /// Dump per-round node states of one projection-consensus run as CSV.
    Trace(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem file (JSON).
    pub problem: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "k-star")]
    pub k_star: Option<usize>,
    /// Use k* = 2^m - chi0 + 1 (chi0 computed centrally).
    #[arg(long = "prior-chi0")]
    pub prior_chi0: bool,
    /// Iteration budget per linear solve.
    #[arg(long = "T")]
    pub budget: Option<usize>,
    #[arg(long = "c-star")]
    pub c_star: Option<f64>,
    #[arg(long = "gamma-star")]
    pub gamma_star: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "consensus-tol")]
    pub consensus_tol: Option<f64>,
    #[arg(long = "disagreement-tol")]
    pub disagreement_tol: Option<f64>,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<usize>,
    /// Write the trajectory of a projection-consensus run to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Cross-check solutions against the exhaustive solver.
    #[arg(long)]
    pub verify: bool,
    /// Run independent linear solves in parallel.
    #[arg(long)]
    pub parallel: bool,
    /// Write the result document here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl RunArgs {
    fn apply(&self, config: &mut RunConfig) {
        let o = ConfigOverrides {
            epsilon: self.epsilon,
            k_star: self.k_star,
            budget: self.budget,
            c_star: self.c_star,
            gamma_star: self.gamma_star,
            tol: self.tol,
            consensus_tol: self.consensus_tol,
            disagreement_tol: self.disagreement_tol,
            max_rounds: self.max_rounds,
            seed: self.seed,
            prior_chi0: self.prior_chi0.then_some(true),
        };
        apply_file_overrides(config, &o);
        config.parallel |= self.parallel;
    }
}

fn names(set: &SolutionSet) -> Vec<String> {
    set.iter().map(|x| bits_to_string(x)).collect()
}

#[derive(Debug, Serialize)]
struct NodeReport {
    node: usize,
    solutions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
}

#[derive(Debug, Serialize)]
struct Document {
    mode: &'static str,
    seed: u64,
    m: usize,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<SatStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solutions: Option<Vec<String>>,
    nodes: Vec<NodeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

impl Document {
    fn new(mode: &'static str, problem: &Problem) -> Self {
        Self {
            mode,
            seed: problem.config.seed,
            m: problem.system.m(),
            n: problem.system.n(),
            verdict: None,
            stage: None,
            solutions: None,
            nodes: Vec::new(),
            rounds: None,
            diagnostics: None,
            verified: None,
        }
    }
}

fn node_reports(per_node: &[SolutionSet]) -> Vec<NodeReport> {
    per_node
        .iter()
        .enumerate()
        .map(|(i, s)| NodeReport {
            node: i + 1,
            solutions: names(s),
            fit_dim: None,
            fit_distance: None,
            verdict: None,
        })
        .collect()
}

/// Writes one projection-consensus trajectory in long format:
/// `round,node,coordinate,value` (node and coordinate 1-based).
pub fn write_trace<W: Write>(
    problem: &Problem,
    stream: u64,
    rounds: Option<usize>,
    out: W,
) -> Result<(usize, bool), CliError> {
    let mut out = std::io::BufWriter::new(out);
    let eqs = lift_system(&problem.system);
    let weights = build_weights(&problem.graph, problem.config.epsilon_for(problem.graph.n()))?;
    let dim = eqs[0].dim();
    let initials = round_initials(problem.config.seed, stream, problem.graph.n(), dim);
    let mut run = NetworkRun::new(problem.graph.clone(), weights, initials)?;
    let mut io_err = writeln!(out, "round,node,coordinate,value").err();
    let mut emit = |round: usize, states: &[Vector]| {
        if io_err.is_some() {
            return;
        }
        for (node, s) in states.iter().enumerate() {
            for (c, v) in s.iter().enumerate() {
                if let Err(e) = writeln!(out, "{},{},{},{:e}", round, node + 1, c + 1, v) {
                    io_err = Some(e);
                    return;
                }
            }
        }
    };
    let (used, converged) = match rounds {
        Some(t) => {
            emit(0, run.states());
            for _ in 0..t {
                run.step_projection_consensus(&eqs)?;
                emit(run.round(), run.states());
            }
            (t, true)
        }
        None => {
            let c = run.run_to_convergence_observed(
                &eqs,
                problem.config.consensus_tol,
                problem.config.max_rounds,
                &mut emit,
            )?;
            (c.rounds, c.converged)
        }
    };
    let write_err = |source| CliError::Write {
        path: PathBuf::from("<trace>"),
        source,
    };
    if let Some(e) = io_err {
        return Err(write_err(e));
    }
    out.flush().map_err(write_err)?;
    Ok((used, converged))
}

fn trace_to_file(problem: &Problem, path: &Path, stream: u64, rounds: Option<usize>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    write_trace(problem, stream, rounds, file)?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("diagnostics serialize")
}

/// Executes one parsed command; returns the result document (if any) and
/// the exit code.
pub fn execute(command: &Command) -> Result<(Option<String>, i32, Option<PathBuf>), CliError> {
    let (mode, args) = match command {
        Command::Solve(a) => ("solve", a),
        Command::SolveApprox(a) => ("solve-approx", a),
        Command::Sat(a) => ("sat", a),
        Command::Oracle(a) => ("oracle", a),
        Command::Trace(a) => ("trace", a),
    };
    let mut problem = load_problem(&args.problem)?;
    args.apply(&mut problem.config);
    let mut doc = Document::new(mode, &problem);
    let mut code = 0;

    match command {
        Command::Solve(_) => {
            let out = solve_exact(&problem.system, &problem.graph, &problem.config)?;
            doc.solutions = Some(names(&out.solutions));
            doc.nodes = node_reports(&out.per_node);
            doc.rounds = Some(out.diagnostics.rounds.clone());
            doc.diagnostics = Some(to_value(&out.diagnostics));
            if args.verify {
                let ok = oracle_solve(&problem.system)? == out.solutions;
                doc.verified = Some(ok);
                if !ok {
                    code = 3;
                }
            }
            if let Some(path) = &args.trace {
                trace_to_file(&problem, path, lae_round_stream(0), None)?;
            }
        }
        Command::SolveApprox(_) => {
            if problem.config.budget.is_none() {
                return Err(SolverError::MissingBudget.into());
            }
            let out = solve_approximate(&problem.system, &problem.graph, &problem.config)?;
            doc.solutions = Some(names(&out.per_node[0].solutions));
            doc.nodes = out
                .per_node
                .iter()
                .enumerate()
                .map(|(i, f)| NodeReport {
                    node: i + 1,
                    solutions: names(&f.solutions),
                    fit_dim: Some(f.fit_dim),
                    fit_distance: Some(f.fit_distance),
                    verdict: None,
                })
                .collect();
            doc.diagnostics = Some(serde_json::json!({
                "T": out.budget,
                "k_star": out.k_star,
                "epsilon": out.epsilon,
                "c_star": out.c_star,
                "gamma_star": out.gamma_star,
                "distance_budget_raw": out.distance_budget_raw,
                "distance_budget": out.distance_budget,
                "nodes_agree": out.nodes_agree,
                "sound": out.sound,
            }));
            if args.verify {
                let truth = oracle_solve(&problem.system)?;
                let ok = out.per_node.iter().all(|f| f.solutions == truth);
                doc.verified = Some(ok);
                if !ok {
                    code = 3;
                }
            }
            if let Some(path) = &args.trace {
                trace_to_file(&problem, path, lae_round_stream(0), problem.config.budget)?;
            }
        }
        Command::Sat(_) => {
            let out = verify_satisfiability(&problem.system, &problem.graph, &problem.config)?;
            doc.verdict = Some(out.verdict);
            doc.stage = Some(out.stage);
            if let Some(solve) = &out.solve {
                doc.solutions = Some(names(&solve.solutions));
                doc.nodes = node_reports(&solve.per_node);
                doc.rounds = Some(solve.diagnostics.rounds.clone());
            }
            for (i, v) in out.node_verdicts.iter().enumerate() {
                match doc.nodes.get_mut(i) {
                    Some(node) => node.verdict = Some(*v),
                    None => doc.nodes.push(NodeReport {
                        node: i + 1,
                        solutions: Vec::new(),
                        fit_dim: None,
                        fit_distance: None,
                        verdict: Some(*v),
                    }),
                }
            }
            doc.diagnostics = Some(serde_json::json!({
                "max_disagreement": out.max_disagreement,
                "consensus_rounds": out.consensus_rounds,
                "disagreement_tol": problem.config.disagreement_tol,
            }));
            if args.verify {
                let truth_sat = !oracle_solve(&problem.system)?.is_empty();
                let ok = truth_sat == (out.verdict == Verdict::Satisfiable);
                doc.verified = Some(ok);
                if !ok {
                    code = 3;
                }
            }
            if code == 0 && out.verdict == Verdict::Unsatisfiable {
                code = 2;
            }
            if let Some(path) = &args.trace {
                trace_to_file(&problem, path, SAT_STREAM, None)?;
            }
        }
        Command::Oracle(_) => {
            doc.solutions = Some(names(&oracle_solve(&problem.system)?));
        }
        Command::Trace(_) => {
            let rounds = problem.config.budget;
            let (used, converged) = match &args.trace {
                Some(path) => {
                    let file = fs::File::create(path).map_err(|source| CliError::Write {
                        path: path.clone(),
                        source,
                    })?;
                    write_trace(&problem, SAT_STREAM, rounds, file)?
                }
                None => {
                    // CSV goes to stdout; no JSON document in this case.
                    write_trace(&problem, SAT_STREAM, rounds, std::io::stdout().lock())?;
                    return Ok((None, 0, None));
                }
            };
            doc.rounds = Some(vec![used]);
            doc.diagnostics = Some(serde_json::json!({ "converged": converged }));
        }
    }

    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok((Some(text), code, args.output.clone()))
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok((doc, code, output)) => {
            if let Some(doc) = doc {
                let written = match &output {
                    Some(path) => fs::write(path, &doc).map_err(|source| CliError::Write {
                        path: path.clone(),
                        source,
                    }),
                    None => std::io::stdout()
                        .write_all(doc.as_bytes())
                        .map_err(|source| CliError::Write {
                            path: PathBuf::from("<stdout>"),
                            source,
                        }),
                };
                if let Err(e) = written {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
