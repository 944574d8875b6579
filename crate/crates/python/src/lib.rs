//! Python bindings for `boolnet`.

use std::path::PathBuf;

use boolnet::formula::{BooleanSystem, Equation};
use boolnet::linalg::Vector;
use boolnet::matricization::{bits_to_string, boolean_matricization};
use boolnet::solver::{RoundCount, RunConfig, SolutionSet};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solver_err(e: boolnet::solver::SolverError) -> PyErr {
    match e {
        boolnet::solver::SolverError::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn names(set: &SolutionSet) -> Vec<String> {
    set.iter().map(|x| bits_to_string(x)).collect()
}

/// A system of Boolean equations `f_i(x) = rhs_i` over `x1..xm`.
#[pyclass(name = "System", module = "boolnet_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: BooleanSystem,
}

#[pymethods]
impl PySystem {
    /// `equations` is a list of `(formula, rhs)` pairs.
    #[new]
    fn new(m: usize, equations: Vec<(String, bool)>) -> PyResult<Self> {
        let inner = BooleanSystem::parse(m, &equations).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Canonical text of each formula.
    fn formulas(&self) -> Vec<String> {
        self.inner.equations().iter().map(|e| e.formula.to_string()).collect()
    }

    fn rhs(&self) -> Vec<bool> {
        self.inner.equations().iter().map(|e: &Equation| e.rhs).collect()
    }

    fn is_solution(&self, x: Vec<bool>) -> PyResult<bool> {
        self.inner.is_solution(&x).map_err(value_err)
    }

    /// Number of distinct output tuples over all assignments.
    fn chi0(&self) -> usize {
        boolnet::matricization::chi0(&self.inner)
    }

    /// Two rows of 0/1 entries for equation `index` (0-based).
    fn matricization(&self, index: usize) -> PyResult<Vec<Vec<u32>>> {
        let eq = self
            .inner
            .equations()
            .get(index)
            .ok_or_else(|| value_err(format!("no equation {index}")))?;
        let mat = boolean_matricization(&eq.formula, self.inner.m()).map_err(value_err)?;
        Ok(mat
            .rows()
            .iter()
            .map(|r| r.iter().map(|&v| u32::from(v)).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("System(m={}, n={})", self.inner.m(), self.inner.n())
    }
}

/// Connected undirected graph on nodes `1..=n`.
#[pyclass(name = "Graph", module = "boolnet_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: boolnet::network::Graph,
}

#[pymethods]
impl PyGraph {
    /// `edges` uses 1-based node ids.
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let edges: Vec<[usize; 2]> = edges.into_iter().map(|(a, b)| [a, b]).collect();
        let inner = boolnet::network::Graph::from_one_based(n, &edges).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn path(n: usize) -> Self {
        Self {
            inner: boolnet::network::Graph::path(n),
        }
    }

    #[staticmethod]
    fn complete(n: usize) -> Self {
        Self {
            inner: boolnet::network::Graph::complete(n),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Edges as 1-based pairs.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().map(|(a, b)| (a + 1, b + 1)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={:?})", self.inner.n(), self.edges())
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    seed: u64,
    epsilon: Option<f64>,
    k_star: Option<usize>,
    prior_chi0: bool,
    budget: Option<usize>,
    tol: Option<f64>,
    max_rounds: Option<usize>,
    parallel: bool,
) -> RunConfig {
    let mut c = RunConfig::default().with_seed(seed);
    c.epsilon = epsilon;
    if let Some(k) = k_star {
        c.rounds = RoundCount::Fixed(k);
    }
    if prior_chi0 {
        c.rounds = RoundCount::PriorKnowledgeChi0;
    }
    c.budget = budget;
    if let Some(t) = tol {
        c.tol = t;
    }
    if let Some(r) = max_rounds {
        c.max_rounds = r;
    }
    c.parallel = parallel;
    c
}

/// Exact distributed solve. Returns a dict with `solutions`, `per_node`,
/// `rounds`, `k_star`, `affine_dim` and `nodes_agree`.
#[pyfunction]
#[pyo3(signature = (system, graph, *, seed=0, epsilon=None, k_star=None, prior_chi0=false, tol=None, max_rounds=None, parallel=false))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    system: &PySystem,
    graph: &PyGraph,
    seed: u64,
    epsilon: Option<f64>,
    k_star: Option<usize>,
    prior_chi0: bool,
    tol: Option<f64>,
    max_rounds: Option<usize>,
    parallel: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let c = config(seed, epsilon, k_star, prior_chi0, None, tol, max_rounds, parallel);
    let out = boolnet::solver::solve_exact(&system.inner, &graph.inner, &c).map_err(solver_err)?;
    let d = PyDict::new(py);
    d.set_item("solutions", names(&out.solutions))?;
    d.set_item("per_node", out.per_node.iter().map(names).collect::<Vec<_>>())?;
    d.set_item("rounds", out.diagnostics.rounds.clone())?;
    d.set_item("k_star", out.diagnostics.k_star)?;
    d.set_item("affine_dim", out.diagnostics.affine_dim)?;
    d.set_item("nodes_agree", out.diagnostics.nodes_agree)?;
    d.set_item("seed", seed)?;
    Ok(d)
}

/// Finite-budget solve with `T` consensus rounds per linear solve.
#[pyfunction]
#[pyo3(signature = (system, graph, T, *, seed=0, epsilon=None, k_star=None, c_star=None, gamma_star=None, tol=None))]
#[allow(clippy::too_many_arguments, non_snake_case)]
fn solve_approx<'py>(
    py: Python<'py>,
    system: &PySystem,
    graph: &PyGraph,
    T: usize,
    seed: u64,
    epsilon: Option<f64>,
    k_star: Option<usize>,
    c_star: Option<f64>,
    gamma_star: Option<f64>,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut c = config(seed, epsilon, k_star, false, Some(T), tol, None, false);
    c.c_star = c_star;
    c.gamma_star = gamma_star;
    let out =
        boolnet::solver::solve_approximate(&system.inner, &graph.inner, &c).map_err(solver_err)?;
    let d = PyDict::new(py);
    d.set_item(
        "per_node",
        out.per_node.iter().map(|f| names(&f.solutions)).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "fit_dims",
        out.per_node.iter().map(|f| f.fit_dim).collect::<Vec<_>>(),
    )?;
    d.set_item("distance_budget", out.distance_budget)?;
    d.set_item("gamma_star", out.gamma_star)?;
    d.set_item("nodes_agree", out.nodes_agree)?;
    d.set_item("seed", seed)?;
    Ok(d)
}

/// Distributed satisfiability check. Returns a dict with `verdict`
/// (`"satisfiable"` / `"unsatisfiable"`), `stage` and `solutions`.
#[pyfunction]
#[pyo3(signature = (system, graph, *, seed=0, epsilon=None, disagreement_tol=None))]
fn sat<'py>(
    py: Python<'py>,
    system: &PySystem,
    graph: &PyGraph,
    seed: u64,
    epsilon: Option<f64>,
    disagreement_tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut c = config(seed, epsilon, None, false, None, None, None, false);
    if let Some(t) = disagreement_tol {
        c.disagreement_tol = t;
    }
    let out = boolnet::solver::verify_satisfiability(&system.inner, &graph.inner, &c)
        .map_err(solver_err)?;
    let verdict = match out.verdict {
        boolnet::solver::Verdict::Satisfiable => "satisfiable",
        boolnet::solver::Verdict::Unsatisfiable => "unsatisfiable",
    };
    let stage = match out.stage {
        boolnet::solver::SatStage::ConsensusDisagreement => "consensus-disagreement",
        boolnet::solver::SatStage::EmptySearch => "empty-search",
        boolnet::solver::SatStage::SolutionFound => "solution-found",
    };
    let d = PyDict::new(py);
    d.set_item("verdict", verdict)?;
    d.set_item("stage", stage)?;
    d.set_item("max_disagreement", out.max_disagreement)?;
    d.set_item(
        "solutions",
        out.solve.as_ref().map(|s| names(&s.solutions)).unwrap_or_default(),
    )?;
    Ok(d)
}

/// Exhaustive solution set as bit strings.
#[pyfunction]
fn oracle(system: &PySystem) -> PyResult<Vec<String>> {
    boolnet::solver::oracle_solve(&system.inner)
        .map(|s| names(&s))
        .map_err(solver_err)
}

/// 1-based indices `i` such that the `i`-th unit vector lies in the affine
/// hull of `points`.
#[pyfunction]
#[pyo3(signature = (points, tol=1e-6))]
fn search(points: Vec<Vec<f64>>, tol: f64) -> PyResult<Vec<usize>> {
    let pts: Vec<Vector> = points.iter().map(|p| Vector::from_vec(p.clone())).collect();
    boolnet::search::boolean_vector_search(&pts, tol)
        .map(|s| s.into_iter().collect())
        .map_err(value_err)
}

/// Canonical form of a formula, or `ValueError` with the byte position.
#[pyfunction]
fn parse_formula(text: &str, m: usize) -> PyResult<String> {
    boolnet::formula::parse_formula(text, m)
        .map(|f| f.to_string())
        .map_err(value_err)
}

/// Reads a JSON problem file; returns `(System, Graph)`.
#[pyfunction]
fn load_problem(path: PathBuf) -> PyResult<(PySystem, PyGraph)> {
    let p = boolnet::cli::load_problem(&path).map_err(value_err)?;
    Ok((PySystem { inner: p.system }, PyGraph { inner: p.graph }))
}

#[pyfunction]
fn btoi(x: Vec<bool>) -> PyResult<usize> {
    boolnet::matricization::btoi(&x).map_err(value_err)
}

#[pyfunction]
fn itob(i: usize, m: usize) -> PyResult<Vec<bool>> {
    boolnet::matricization::itob(i, m).map_err(value_err)
}

#[pymodule]
fn boolnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_approx, m)?)?;
    m.add_function(wrap_pyfunction!(sat, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(parse_formula, m)?)?;
    m.add_function(wrap_pyfunction!(load_problem, m)?)?;
    m.add_function(wrap_pyfunction!(btoi, m)?)?;
    m.add_function(wrap_pyfunction!(itob, m)?)?;
    Ok(())
}
