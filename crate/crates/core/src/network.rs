//! Simple undirected graphs and a synchronous round engine for consensus
//! and projection-consensus iterations.
//!
//! Every round reads only the round-`t` states and writes a fresh buffer, and
//! neighbor sums run in ascending neighbor order, so trajectories are
//! bit-reproducible.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{LocalLinearEquation, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("graph needs at least one node")]
    Empty,
    #[error("edge {{{0}, {1}}} is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge {{{0}, {1}}} appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{a}, {b}}} references a node outside 1..={n}")]
    NodeOutOfRange { a: usize, b: usize, n: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("step size {epsilon} must lie in (0, 1/{n})")]
    EpsilonOutOfRange { epsilon: f64, n: usize },
    #[error("expected {expected} node states/equations, got {got}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("node {node} state has dimension {got}, expected {expected}")]
    StateDimension {
        node: usize,
        expected: usize,
        got: usize,
    },
}

/// Connected simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds from 0-based edge pairs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        let mut set = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(NetworkError::NodeOutOfRange {
                    a: a + 1,
                    b: b + 1,
                    n,
                });
            }
            if a == b {
                return Err(NetworkError::SelfLoop(a + 1, b + 1));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(NetworkError::DuplicateEdge(a + 1, b + 1));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let graph = Self {
            n,
            edges: set,
            neighbors,
        };
        if !graph.is_connected() {
            return Err(NetworkError::Disconnected);
        }
        Ok(graph)
    }

    /// Builds from 1-based edge pairs, as written in problem files.
    pub fn from_one_based(n: usize, edges: &[[usize; 2]]) -> Result<Self, NetworkError> {
        let mut zero = Vec::with_capacity(edges.len());
        for &[a, b] in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(NetworkError::NodeOutOfRange { a, b, n });
            }
            zero.push((a - 1, b - 1));
        }
        Self::new(n, &zero)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path graphs are connected")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges).expect("complete graphs are connected")
    }

    /// Random spanning tree plus each remaining pair with probability
    /// `extra_edge_prob`.
    pub fn random_connected<R: Rng>(n: usize, extra_edge_prob: f64, rng: &mut R) -> Self {
        let mut edges = BTreeSet::new();
        for i in 1..n {
            let parent = rng.random_range(0..i);
            edges.insert((parent, i));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !edges.contains(&(i, j)) && rng.random_bool(extra_edge_prob) {
                    edges.insert((i, j));
                }
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        Self::new(n, &edges).expect("spanning tree keeps the graph connected")
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// `W_ij = epsilon` on edges, `W_ii = 1 - deg(i) epsilon`, 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    epsilon: f64,
    w: Matrix,
}

impl ConsensusWeights {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }
}

/// Requires `0 < epsilon < 1/n`.
pub fn build_weights(graph: &Graph, epsilon: f64) -> Result<ConsensusWeights, NetworkError> {
    let n = graph.n();
    if !(epsilon > 0.0 && epsilon < 1.0 / n as f64) {
        return Err(NetworkError::EpsilonOutOfRange { epsilon, n });
    }
    let mut w = Matrix::zeros(n, n);
    for (a, b) in graph.edges() {
        w[(a, b)] = epsilon;
        w[(b, a)] = epsilon;
    }
    for i in 0..n {
        w[(i, i)] = 1.0 - graph.neighbors(i).len() as f64 * epsilon;
    }
    Ok(ConsensusWeights { epsilon, w })
}

/// `0.9 / n`.
pub fn default_epsilon(n: usize) -> f64 {
    0.9 / n as f64
}

/// Outcome of [`NetworkRun::run_to_convergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub rounds: usize,
    pub converged: bool,
    /// `max_i ||x_i(t+1) - x_i(t)||_inf` of the last round.
    pub last_delta: f64,
}

/// Graph, weights and the per-node states `x_i(t)`.
#[derive(Debug, Clone)]
pub struct NetworkRun {
    graph: Graph,
    weights: ConsensusWeights,
    states: Vec<Vector>,
    round: usize,
    seed: Option<u64>,
}

impl NetworkRun {
    pub fn new(
        graph: Graph,
        weights: ConsensusWeights,
        states: Vec<Vector>,
    ) -> Result<Self, NetworkError> {
        if states.len() != graph.n() {
            return Err(NetworkError::NodeCountMismatch {
                expected: graph.n(),
                got: states.len(),
            });
        }
        let d = states[0].len();
        for (node, s) in states.iter().enumerate() {
            if s.len() != d {
                return Err(NetworkError::StateDimension {
                    node: node + 1,
                    expected: d,
                    got: s.len(),
                });
            }
        }
        Ok(Self {
            graph,
            weights,
            states,
            round: 0,
            seed: None,
        })
    }

    /// States drawn i.i.d. from `uniform([0,1]^dim)` with a ChaCha8 stream
    /// keyed by `seed`.
    pub fn with_random_states(
        graph: Graph,
        weights: ConsensusWeights,
        dim: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = uniform_states(graph.n(), dim, &mut rng);
        Self {
            graph,
            weights,
            states,
            round: 0,
            seed: Some(seed),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &ConsensusWeights {
        &self.weights
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn into_states(self) -> Vec<Vector> {
        self.states
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn mixed(&self, i: usize) -> Vector {
        let eps = self.weights.epsilon;
        let xi = &self.states[i];
        let mut acc = xi.clone();
        for &j in self.graph.neighbors(i) {
            acc += (&self.states[j] - xi) * eps;
        }
        acc
    }

    fn commit(&mut self, next: Vec<Vector>) -> f64 {
        let delta = next
            .iter()
            .zip(&self.states)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        self.states = next;
        self.round += 1;
        delta
    }

    /// `x_i <- x_i + eps sum_{j in N_i} (x_j - x_i)` for all nodes at once.
    /// Returns the sup-norm change.
    pub fn step_average_consensus(&mut self) -> f64 {
        let next = (0..self.graph.n()).map(|i| self.mixed(i)).collect();
        self.commit(next)
    }

    /// Consensus mix followed by each node's local affine projection.
    pub fn step_projection_consensus(
        &mut self,
        eqs: &[LocalLinearEquation],
    ) -> Result<f64, NetworkError> {
        self.check_equations(eqs)?;
        let next = (0..self.graph.n())
            .map(|i| eqs[i].project_unchecked(&self.mixed(i)))
            .collect();
        Ok(self.commit(next))
    }

    fn check_equations(&self, eqs: &[LocalLinearEquation]) -> Result<(), NetworkError> {
        if eqs.len() != self.graph.n() {
            return Err(NetworkError::NodeCountMismatch {
                expected: self.graph.n(),
                got: eqs.len(),
            });
        }
        let d = self.states[0].len();
        if let Some((node, eq)) = eqs.iter().enumerate().find(|(_, e)| e.dim() != d) {
            return Err(NetworkError::StateDimension {
                node: node + 1,
                expected: d,
                got: eq.dim(),
            });
        }
        Ok(())
    }

    /// Iterates projection consensus until the sup-norm change drops below
    /// `tol` or `max_rounds` rounds have run. `observer` sees every new
    /// state, starting with the initial one at round 0.
    pub fn run_to_convergence_observed<F>(
        &mut self,
        eqs: &[LocalLinearEquation],
        tol: f64,
        max_rounds: usize,
        mut observer: F,
    ) -> Result<Convergence, NetworkError>
    where
        F: FnMut(usize, &[Vector]),
    {
        self.check_equations(eqs)?;
        observer(self.round, &self.states);
        let mut last_delta = f64::INFINITY;
        for used in 1..=max_rounds {
            last_delta = self.step_projection_consensus(eqs)?;
            observer(self.round, &self.states);
            if last_delta < tol {
                return Ok(Convergence {
                    rounds: used,
                    converged: true,
                    last_delta,
                });
            }
        }
        Ok(Convergence {
            rounds: max_rounds,
            converged: false,
            last_delta,
        })
    }

    pub fn run_to_convergence(
        &mut self,
        eqs: &[LocalLinearEquation],
        tol: f64,
        max_rounds: usize,
    ) -> Result<Convergence, NetworkError> {
        self.run_to_convergence_observed(eqs, tol, max_rounds, |_, _| {})
    }

    /// Exactly `rounds` projection-consensus steps.
    pub fn run_for(&mut self, eqs: &[LocalLinearEquation], rounds: usize) -> Result<f64, NetworkError> {
        let mut delta = 0.0;
        for _ in 0..rounds {
            delta = self.step_projection_consensus(eqs)?;
        }
        Ok(delta)
    }

    /// Plain average consensus until the change drops below `tol`.
    pub fn run_average_to_convergence(&mut self, tol: f64, max_rounds: usize) -> Convergence {
        let mut last_delta = f64::INFINITY;
        for used in 1..=max_rounds {
            last_delta = self.step_average_consensus();
            if last_delta < tol {
                return Convergence {
                    rounds: used,
                    converged: true,
                    last_delta,
                };
            }
        }
        Convergence {
            rounds: max_rounds,
            converged: false,
            last_delta,
        }
    }
}

/// `n` vectors with i.i.d. `uniform[0,1)` entries.
pub fn uniform_states<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vector> {
    (0..n)
        .map(|_| Vector::from_fn(dim, |_, _| rng.random::<f64>()))
        .collect()
}

/// Distributed OR of per-node flags: `n - 1` flooding rounds in which every
/// node takes the max over itself and its neighbors.
pub fn flood_any(graph: &Graph, flags: &[bool]) -> Vec<bool> {
    let mut current = flags.to_vec();
    for _ in 1..graph.n() {
        current = (0..graph.n())
            .map(|i| current[i] || graph.neighbors(i).iter().any(|&j| current[j]))
            .collect();
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_weights() {
        let w = build_weights(&Graph::path(3), 0.2).unwrap();
        let expected = Matrix::from_row_slice(3, 3, &[0.8, 0.2, 0., 0.2, 0.6, 0.2, 0., 0.2, 0.8]);
        assert_relative_eq!(w.matrix(), &expected, epsilon = 1e-15);
    }

    #[test]
    fn complete_two_weights() {
        let w = build_weights(&Graph::complete(2), 0.25).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert_eq!(w.matrix(), &expected);
    }

    #[test]
    fn weights_are_symmetric_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..8 {
            let g = Graph::random_connected(n, 0.4, &mut rng);
            let w = build_weights(&g, default_epsilon(n)).unwrap();
            assert_eq!(w.matrix(), &w.matrix().transpose());
            for row in w.matrix().row_iter() {
                assert_relative_eq!(row.sum(), 1.0, epsilon = 1e-14);
                assert!(row.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn epsilon_bounds() {
        let g = Graph::path(3);
        assert!(build_weights(&g, 0.0).is_err());
        assert!(build_weights(&g, 1.0 / 3.0).is_err());
        assert!(build_weights(&g, f64::NAN).is_err());
        assert!(build_weights(&g, 0.33).is_ok());
    }

    #[test]
    fn graph_validation() {
        assert_eq!(Graph::new(0, &[]).unwrap_err(), NetworkError::Empty);
        assert_eq!(Graph::new(2, &[(0, 0)]).unwrap_err(), NetworkError::SelfLoop(1, 1));
        assert_eq!(
            Graph::new(2, &[(0, 1), (1, 0)]).unwrap_err(),
            NetworkError::DuplicateEdge(2, 1)
        );
        assert_eq!(Graph::new(3, &[(0, 1)]).unwrap_err(), NetworkError::Disconnected);
        assert!(matches!(
            Graph::from_one_based(3, &[[1, 4]]).unwrap_err(),
            NetworkError::NodeOutOfRange { a: 1, b: 4, n: 3 }
        ));
        let g = Graph::from_one_based(3, &[[1, 2], [2, 3]]).unwrap();
        assert_eq!(g, Graph::path(3));
        assert!(Graph::new(1, &[]).is_ok());
    }

    #[test]
    fn average_consensus_hand_example() {
        let g = Graph::complete(2);
        let w = build_weights(&g, 0.25).unwrap();
        let mut run = NetworkRun::new(
            g,
            w,
            vec![Vector::from_element(1, 0.0), Vector::from_element(1, 1.0)],
        )
        .unwrap();
        run.step_average_consensus();
        assert_eq!(run.states()[0][0], 0.25);
        assert_eq!(run.states()[1][0], 0.75);
    }

    #[test]
    fn average_consensus_fixed_point_and_sum() {
        let g = Graph::path(4);
        let w = build_weights(&g, 0.2).unwrap();
        let same = vec![Vector::from_element(3, 0.7); 4];
        let mut run = NetworkRun::new(g.clone(), w.clone(), same.clone()).unwrap();
        assert_eq!(run.step_average_consensus(), 0.0);
        assert_eq!(run.states(), &same[..]);

        let mut run = NetworkRun::with_random_states(g, w, 3, 11);
        let before: Vector = run.states().iter().sum();
        run.step_average_consensus();
        let after: Vector = run.states().iter().sum();
        assert_relative_eq!(before, after, epsilon = 1e-14);
    }

    #[test]
    fn single_node_projects_once() {
        let g = Graph::new(1, &[]).unwrap();
        let w = build_weights(&g, 0.5).unwrap();
        let eq = LocalLinearEquation::new(
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_element(1, 1.0),
        )
        .unwrap();
        let mut run = NetworkRun::new(g, w, vec![Vector::from_column_slice(&[2.0, 0.0])]).unwrap();
        run.step_projection_consensus(std::slice::from_ref(&eq)).unwrap();
        assert_relative_eq!(run.states()[0], Vector::from_column_slice(&[1.5, -0.5]), epsilon = 1e-14);
        let c = run.run_to_convergence(&[eq], 1e-12, 10).unwrap();
        assert_eq!(c.rounds, 1);
        assert!(c.converged);
    }

    #[test]
    fn projection_consensus_fixed_point() {
        let g = Graph::path(2);
        let w = build_weights(&g, 0.2).unwrap();
        let a = LocalLinearEquation::new(
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Vector::from_element(1, 1.0),
        )
        .unwrap();
        let b = LocalLinearEquation::new(
            Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
            Vector::from_element(1, 2.0),
        )
        .unwrap();
        let common = Vector::from_column_slice(&[1.0, 2.0]);
        let mut run = NetworkRun::new(g, w, vec![common.clone(), common.clone()]).unwrap();
        let c = run.run_to_convergence(&[a, b], 1e-12, 100).unwrap();
        assert_eq!(c.rounds, 1);
        assert_eq!(run.states()[1], common);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let g = Graph::path(2);
        let w = build_weights(&g, 0.2).unwrap();
        assert!(NetworkRun::new(g.clone(), w.clone(), vec![Vector::zeros(2)]).is_err());
        assert!(NetworkRun::new(g.clone(), w.clone(), vec![Vector::zeros(2), Vector::zeros(3)]).is_err());
        let mut run = NetworkRun::new(g, w, vec![Vector::zeros(2); 2]).unwrap();
        let eq = LocalLinearEquation::new(Matrix::identity(3, 3), Vector::zeros(3)).unwrap();
        assert!(run.step_projection_consensus(&[eq.clone(), eq]).is_err());
    }

    #[test]
    fn random_states_are_reproducible() {
        let g = Graph::path(3);
        let w = build_weights(&g, 0.2).unwrap();
        let a = NetworkRun::with_random_states(g.clone(), w.clone(), 8, 42);
        let b = NetworkRun::with_random_states(g, w, 8, 42);
        assert_eq!(a.states(), b.states());
        assert!(a.states()[0].iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn flooding_spreads_flag() {
        let g = Graph::path(5);
        assert_eq!(flood_any(&g, &[false, false, false, false, true]), vec![true; 5]);
        assert_eq!(flood_any(&g, &[false; 5]), vec![false; 5]);
    }
}
