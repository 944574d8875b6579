//! Distributed solving of Boolean equation systems.
//!
//! Each node of a connected network holds one equation `f_i(x) = sigma_i`
//! over `x1..xm`. Equations are lifted to linear systems `H_i y = z_i` over
//! `R^(2^m)`, solved by projection consensus, and the Boolean solutions are
//! read off as the unit vectors in the recovered affine solution space.

pub mod cli;
pub mod formula;
pub mod linalg;
pub mod matricization;
pub mod network;
pub mod random;
pub mod search;
pub mod solver;

pub use formula::{parse_formula, BooleanSystem, Equation, Formula, FormulaError};
pub use linalg::{AffineSubspace, LocalLinearEquation, Matrix, StackedSystem, Vector};
pub use matricization::{boolean_matricization, btoi, chi0, itob, theta, upsilon, BooleanMatrix};
pub use network::{build_weights, default_epsilon, ConsensusWeights, Graph, NetworkRun};
pub use search::{boolean_vector_search, boolean_vector_search_bruteforce};
pub use solver::{
    oracle_solve, solve_approximate, solve_exact, verify_satisfiability, ApproxOutcome,
    RoundCount, RunConfig, SatOutcome, SatStage, SolutionSet, SolveOutcome, SolverError, Verdict,
};
