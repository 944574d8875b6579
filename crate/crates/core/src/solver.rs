//! Distributed solvers built from lifting, projection consensus and the
//! unit-vector search, plus the exhaustive reference solver.
//!
//! Every node lifts its own equation `f_i(x) = sigma_i` to `M_{f_i} y =
//! Theta_1(sigma_i)`. Repeated projection-consensus runs from random initial
//! states give points of the joint affine solution set; once enough points
//! span it, each node finds the unit vectors it contains and maps them back
//! to assignments.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::{BooleanSystem, FormulaError};
use crate::linalg::{
    dist_to_affine, min_dimension_fit, LinalgError, LocalLinearEquation, StackedSystem, Vector,
};
use crate::matricization::{boolean_matricization, chi0, upsilon, UnitColumn};
use crate::network::{
    build_weights, default_epsilon, flood_any, uniform_states, ConsensusWeights, Graph,
    NetworkError, NetworkRun,
};
use crate::search::{boolean_vector_search, search_subspace};

pub type Assignment = Vec<bool>;
pub type SolutionSet = BTreeSet<Assignment>;

/// Largest `m` the exhaustive oracle accepts by default.
pub const ORACLE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("system has {equations} equations but the graph has {nodes} nodes")]
    NodeCount { equations: usize, nodes: usize },
    #[error("projection consensus did not converge within {rounds} rounds ({stage})")]
    NotConverged { stage: &'static str, rounds: usize },
    #[error("an iteration budget T is required for the approximate solver")]
    MissingBudget,
    #[error("m = {m} exceeds the oracle cap {cap}")]
    OracleCap { m: usize, cap: usize },
}

/// How many randomized linear-solve rounds to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum RoundCount {
    /// `2^m + 1`, sufficient without any knowledge of the system.
    Full,
    Fixed(usize),
    /// `2^m - chi0 + 1`. Needs `chi0`, which is global information computed
    /// centrally and treated as prior knowledge.
    PriorKnowledgeChi0,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Consensus step size; `None` means `0.9 / n`.
    pub epsilon: Option<f64>,
    pub rounds: RoundCount,
    /// Iteration budget `T` per linear solve for the approximate solver.
    pub budget: Option<usize>,
    /// Residual bound constants; `None` selects the defaults described on
    /// [`solve_approximate`].
    pub c_star: Option<f64>,
    pub gamma_star: Option<f64>,
    /// Sup-norm equality tolerance of the unit-vector search.
    pub tol: f64,
    /// Stop once successive states differ by less than this.
    pub consensus_tol: f64,
    pub max_rounds: usize,
    /// Threshold separating distinct consensus limits from residual error.
    pub disagreement_tol: f64,
    pub seed: u64,
    /// Run independent linear solves on the rayon pool.
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            rounds: RoundCount::Full,
            budget: None,
            c_star: None,
            gamma_star: None,
            tol: 1e-6,
            consensus_tol: 1e-10,
            max_rounds: 200_000,
            disagreement_tol: 1e-6,
            seed: 0,
            parallel: false,
        }
    }
}

impl RunConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn k_star(&self, system: &BooleanSystem) -> usize {
        let d = 1usize << system.m();
        match self.rounds {
            RoundCount::Full => d + 1,
            RoundCount::Fixed(k) => k.max(1),
            RoundCount::PriorKnowledgeChi0 => d - chi0(system) + 1,
        }
    }

    pub fn epsilon_for(&self, n: usize) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(n))
    }
}

/// `H_i = M_{f_i}`, `z_i = Theta_1(sigma_i)` for each node.
pub fn lift_system(system: &BooleanSystem) -> Vec<LocalLinearEquation> {
    system
        .equations()
        .iter()
        .map(|eq| {
            let mf = boolean_matricization(&eq.formula, system.m())
                .expect("system formulas are within range");
            let mut z = Vector::zeros(2);
            z[UnitColumn::from_bit(eq.rhs).row()] = 1.0;
            LocalLinearEquation::new(mf.to_dense(), z).expect("2-row block with 2-entry rhs")
        })
        .collect()
}

/// How long a linear solve runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaeMode {
    /// Until successive states differ by less than `tol`.
    Exact { tol: f64, max_rounds: usize },
    /// Exactly this many rounds.
    Finite(usize),
}

#[derive(Debug, Clone)]
pub struct LaeOutput {
    /// Final state of every node.
    pub states: Vec<Vector>,
    pub rounds: usize,
    pub converged: bool,
}

/// One projection-consensus solve of the stacked system from `initials`.
pub fn distributed_lae(
    eqs: &[LocalLinearEquation],
    graph: &Graph,
    weights: &ConsensusWeights,
    initials: Vec<Vector>,
    mode: LaeMode,
) -> Result<LaeOutput, SolverError> {
    let mut run = NetworkRun::new(graph.clone(), weights.clone(), initials)?;
    let (rounds, converged) = match mode {
        LaeMode::Exact { tol, max_rounds } => {
            let c = run.run_to_convergence(eqs, tol, max_rounds)?;
            (c.rounds, c.converged)
        }
        LaeMode::Finite(t) => {
            run.run_for(eqs, t)?;
            (t, true)
        }
    };
    Ok(LaeOutput {
        states: run.into_states(),
        rounds,
        converged,
    })
}

/// Central reference for an exact solve: `sum_k P_*(x_k(0)) / n`, i.e. the
/// projection of the initial mean onto the stacked solution set.
pub fn central_lae_limit(eqs: &[LocalLinearEquation], initials: &[Vector]) -> Result<Vector, SolverError> {
    let stacked = StackedSystem::new(eqs)?;
    let mean: Vector = initials.iter().sum::<Vector>() / initials.len() as f64;
    Ok(stacked.project(&mean))
}

/// Initial states for linear-solve round `s`; each round has its own
/// ChaCha stream so rounds can run in any order.
pub fn round_initials(seed: u64, stream: u64, n: usize, dim: usize) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    uniform_states(n, dim, &mut rng)
}

pub const SAT_STREAM: u64 = 0;
const CALIBRATION_STREAM: u64 = u64::MAX;

/// Stream used by linear-solve round `s` (0-based).
pub fn lae_round_stream(s: usize) -> u64 {
    s as u64 + 1
}

fn check_sizes(system: &BooleanSystem, graph: &Graph) -> Result<(), SolverError> {
    if system.n() != graph.n() {
        return Err(SolverError::NodeCount {
            equations: system.n(),
            nodes: graph.n(),
        });
    }
    Ok(())
}

fn run_rounds(
    eqs: &[LocalLinearEquation],
    graph: &Graph,
    weights: &ConsensusWeights,
    k: usize,
    mode: LaeMode,
    config: &RunConfig,
) -> Result<Vec<LaeOutput>, SolverError> {
    let dim = eqs[0].dim();
    let one = |s: usize| {
        let initials = round_initials(config.seed, lae_round_stream(s), graph.n(), dim);
        distributed_lae(eqs, graph, weights, initials, mode)
    };
    if config.parallel {
        (0..k).into_par_iter().map(one).collect()
    } else {
        (0..k).map(one).collect()
    }
}

fn to_assignments(indices: &BTreeSet<usize>, m: usize) -> SolutionSet {
    indices
        .iter()
        .map(|&i| upsilon(i, m).expect("search indices lie in 1..=2^m"))
        .collect()
}

fn all_sound(system: &BooleanSystem, sets: &[SolutionSet]) -> bool {
    sets.iter()
        .flatten()
        .all(|x| system.is_solution(x).unwrap_or(false))
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub k_star: usize,
    pub epsilon: f64,
    /// Consensus rounds used by each linear solve.
    pub rounds: Vec<usize>,
    /// `max_{i,s} ||H_i y_s - z_i||` at node 1's outputs.
    pub max_residual: f64,
    /// `dim Aff(y_1, ..., y_k)` at node 1.
    pub affine_dim: usize,
    pub nodes_agree: bool,
    /// Every returned assignment satisfies every equation.
    pub sound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    /// The set computed at node 1 (all nodes agree when `nodes_agree`).
    pub solutions: SolutionSet,
    pub per_node: Vec<SolutionSet>,
    /// Node 1's linear solutions `y_1, ..., y_k`.
    #[serde(skip)]
    pub linear_solutions: Vec<Vector>,
    pub diagnostics: Diagnostics,
}

/// Exact distributed solver. Assumes the system is satisfiable; an empty
/// set is returned otherwise only when the lifted linear system happens to be
/// consistent.
pub fn solve_exact(
    system: &BooleanSystem,
    graph: &Graph,
    config: &RunConfig,
) -> Result<SolveOutcome, SolverError> {
    check_sizes(system, graph)?;
    let eqs = lift_system(system);
    let epsilon = config.epsilon_for(graph.n());
    let weights = build_weights(graph, epsilon)?;
    let k = config.k_star(system);
    let mode = LaeMode::Exact {
        tol: config.consensus_tol,
        max_rounds: config.max_rounds,
    };
    let outputs = run_rounds(&eqs, graph, &weights, k, mode, config)?;
    if let Some(bad) = outputs.iter().find(|o| !o.converged) {
        return Err(SolverError::NotConverged {
            stage: "linear solve",
            rounds: bad.rounds,
        });
    }

    let m = system.m();
    let mut per_node = Vec::with_capacity(graph.n());
    let mut affine_dim = 0;
    for i in 0..graph.n() {
        let points: Vec<Vector> = outputs.iter().map(|o| o.states[i].clone()).collect();
        let report = crate::search::boolean_vector_search_report(&points, config.tol)?;
        if i == 0 {
            affine_dim = report.dim;
        }
        per_node.push(to_assignments(&report.indices, m));
    }

    let linear_solutions: Vec<Vector> = outputs.iter().map(|o| o.states[0].clone()).collect();
    let max_residual = linear_solutions
        .iter()
        .flat_map(|y| eqs.iter().map(move |e| e.residual(y)))
        .fold(0.0, f64::max);
    let nodes_agree = per_node.windows(2).all(|w| w[0] == w[1]);
    let sound = all_sound(system, &per_node);
    Ok(SolveOutcome {
        solutions: per_node[0].clone(),
        per_node,
        linear_solutions,
        diagnostics: Diagnostics {
            k_star: k,
            epsilon,
            rounds: outputs.iter().map(|o| o.rounds).collect(),
            max_residual,
            affine_dim,
            nodes_agree,
            sound,
        },
    })
}

/// Decay rate of successive differences on a calibration run: the slope of
/// `-ln delta(t)` over the second half of the rounds before `delta` reaches
/// round-off.
pub fn calibrate_gamma(
    eqs: &[LocalLinearEquation],
    graph: &Graph,
    weights: &ConsensusWeights,
    seed: u64,
    max_rounds: usize,
) -> Result<f64, SolverError> {
    let initials = round_initials(seed, CALIBRATION_STREAM, graph.n(), eqs[0].dim());
    let mut run = NetworkRun::new(graph.clone(), weights.clone(), initials)?;
    let mut deltas = Vec::new();
    for _ in 0..max_rounds {
        let delta = run.step_projection_consensus(eqs)?;
        if delta <= 1e-13 {
            break;
        }
        deltas.push(delta);
    }
    if deltas.len() < 4 {
        return Ok(f64::INFINITY);
    }
    let a = deltas.len() / 2;
    let b = deltas.len() - 1;
    let gamma = (deltas[a].ln() - deltas[b].ln()) / (b - a) as f64;
    Ok(if gamma > 0.0 { gamma } else { 0.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeFit {
    pub solutions: SolutionSet,
    /// Dimension of the fitted affine subspace.
    pub fit_dim: usize,
    /// Summed distances from this node's outputs to the fit.
    pub fit_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxOutcome {
    pub per_node: Vec<NodeFit>,
    pub budget: usize,
    pub k_star: usize,
    pub epsilon: f64,
    pub c_star: f64,
    pub gamma_star: f64,
    /// `c_star e^{-gamma_star T} (2^m + 1)` before flooring at `tol`.
    pub distance_budget_raw: f64,
    /// Budget actually used for the fit (and as search tolerance).
    pub distance_budget: f64,
    pub nodes_agree: bool,
    pub sound: bool,
}

/// Finite-budget solver: every linear solve runs exactly `T` rounds, and
/// every node fits the lowest-dimensional affine subspace whose summed
/// distance to its own outputs is at most `c_star e^{-gamma_star T} (2^m+1)`,
/// then searches that subspace.
///
/// Defaults: `c_star = 2^{m/2} n`; `gamma_star` is the decay rate measured by
/// [`calibrate_gamma`]. The distance budget is floored at `tol` since the
/// outputs carry round-off even for very large `T`.
pub fn solve_approximate(
    system: &BooleanSystem,
    graph: &Graph,
    config: &RunConfig,
) -> Result<ApproxOutcome, SolverError> {
    check_sizes(system, graph)?;
    let budget = config.budget.ok_or(SolverError::MissingBudget)?;
    let eqs = lift_system(system);
    let epsilon = config.epsilon_for(graph.n());
    let weights = build_weights(graph, epsilon)?;
    let m = system.m();
    let d = 1usize << m;
    let k = config.k_star(system);

    let c_star = config
        .c_star
        .unwrap_or_else(|| 2f64.powf(m as f64 / 2.0) * graph.n() as f64);
    let gamma_star = match config.gamma_star {
        Some(g) => g,
        None => calibrate_gamma(&eqs, graph, &weights, config.seed, 5_000)?,
    };
    let raw = c_star * (-gamma_star * budget as f64).exp() * (d + 1) as f64;
    let distance_budget = raw.max(config.tol);

    let outputs = run_rounds(&eqs, graph, &weights, k, LaeMode::Finite(budget), config)?;
    let mut per_node = Vec::with_capacity(graph.n());
    for i in 0..graph.n() {
        let points: Vec<Vector> = outputs.iter().map(|o| o.states[i].clone()).collect();
        let fit = min_dimension_fit(&points, distance_budget)?;
        let fit_distance = points
            .iter()
            .map(|p| dist_to_affine(p, &fit))
            .sum::<Result<f64, _>>()?;
        let indices = search_subspace(&fit, distance_budget);
        per_node.push(NodeFit {
            solutions: to_assignments(&indices, m),
            fit_dim: fit.dim(),
            fit_distance,
        });
    }
    let nodes_agree = per_node.windows(2).all(|w| w[0].solutions == w[1].solutions);
    let sets: Vec<SolutionSet> = per_node.iter().map(|f| f.solutions.clone()).collect();
    Ok(ApproxOutcome {
        sound: all_sound(system, &sets),
        per_node,
        budget,
        k_star: k,
        epsilon,
        c_star,
        gamma_star,
        distance_budget_raw: raw,
        distance_budget,
        nodes_agree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfiable,
    Unsatisfiable,
}

/// Where the satisfiability check reached its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SatStage {
    /// Projection-consensus limits differ: the lifted linear system is
    /// inconsistent.
    ConsensusDisagreement,
    /// The linear system is consistent but its solution set holds no unit
    /// vector.
    EmptySearch,
    SolutionFound,
}

#[derive(Debug, Clone, Serialize)]
pub struct SatOutcome {
    pub verdict: Verdict,
    pub stage: SatStage,
    pub node_verdicts: Vec<Verdict>,
    /// `max_i ||y_ave - y_i||_inf` after the averaging stage.
    pub max_disagreement: f64,
    /// Rounds used by the initial projection-consensus run.
    pub consensus_rounds: usize,
    pub solve: Option<SolveOutcome>,
}

/// Distributed satisfiability check.
///
/// Runs projection consensus to its per-node limits, averages those limits,
/// and declares the system unsatisfiable if any node's limit differs from the
/// average by more than `disagreement_tol` (the flag is spread by flooding so
/// all nodes agree). Otherwise runs [`solve_exact`] and answers by whether
/// the solution set is empty.
pub fn verify_satisfiability(
    system: &BooleanSystem,
    graph: &Graph,
    config: &RunConfig,
) -> Result<SatOutcome, SolverError> {
    check_sizes(system, graph)?;
    let eqs = lift_system(system);
    let epsilon = config.epsilon_for(graph.n());
    let weights = build_weights(graph, epsilon)?;
    let dim = eqs[0].dim();

    let initials = round_initials(config.seed, SAT_STREAM, graph.n(), dim);
    let mut run = NetworkRun::new(graph.clone(), weights.clone(), initials)?;
    let conv = run.run_to_convergence(&eqs, config.consensus_tol, config.max_rounds)?;
    if !conv.converged {
        return Err(SolverError::NotConverged {
            stage: "satisfiability consensus",
            rounds: conv.rounds,
        });
    }
    let limits = run.into_states();

    let mut averaging = NetworkRun::new(graph.clone(), weights, limits.clone())?;
    let avg = averaging.run_average_to_convergence(config.consensus_tol, config.max_rounds);
    if !avg.converged {
        return Err(SolverError::NotConverged {
            stage: "limit averaging",
            rounds: avg.rounds,
        });
    }
    let gaps: Vec<f64> = averaging
        .states()
        .iter()
        .zip(&limits)
        .map(|(a, y)| (a - y).amax())
        .collect();
    let max_disagreement = gaps.iter().copied().fold(0.0, f64::max);
    let flags: Vec<bool> = gaps.iter().map(|&g| g > config.disagreement_tol).collect();
    let flags = flood_any(graph, &flags);

    if flags.iter().any(|&f| f) {
        return Ok(SatOutcome {
            verdict: Verdict::Unsatisfiable,
            stage: SatStage::ConsensusDisagreement,
            node_verdicts: flags
                .iter()
                .map(|&f| if f { Verdict::Unsatisfiable } else { Verdict::Satisfiable })
                .collect(),
            max_disagreement,
            consensus_rounds: conv.rounds,
            solve: None,
        });
    }

    let solve = solve_exact(system, graph, config)?;
    let node_verdicts: Vec<Verdict> = solve
        .per_node
        .iter()
        .map(|s| if s.is_empty() { Verdict::Unsatisfiable } else { Verdict::Satisfiable })
        .collect();
    let (verdict, stage) = if solve.solutions.is_empty() {
        (Verdict::Unsatisfiable, SatStage::EmptySearch)
    } else {
        (Verdict::Satisfiable, SatStage::SolutionFound)
    };
    Ok(SatOutcome {
        verdict,
        stage,
        node_verdicts,
        max_disagreement,
        consensus_rounds: conv.rounds,
        solve: Some(solve),
    })
}

/// All satisfying assignments by enumeration of `{0,1}^m`.
pub fn oracle_solve(system: &BooleanSystem) -> Result<SolutionSet, SolverError> {
    oracle_solve_capped(system, ORACLE_CAP)
}

pub fn oracle_solve_capped(system: &BooleanSystem, cap: usize) -> Result<SolutionSet, SolverError> {
    let m = system.m();
    if m > cap {
        return Err(SolverError::OracleCap { m, cap });
    }
    let mut out = SolutionSet::new();
    for i in 1..=(1usize << m) {
        let x = upsilon(i, m).expect("index in range");
        if system.is_solution(&x)? {
            out.insert(x);
        }
    }
    Ok(out)
}

/// Unit-vector search over an arbitrary set of linear solutions, mapped
/// back to assignments.
pub fn assignments_in_hull(points: &[Vector], m: usize, tol: f64) -> Result<SolutionSet, SolverError> {
    Ok(to_assignments(&boolean_vector_search(points, tol)?, m))
}
