//! Random problem instances for experiments and tests.

use rand::Rng;

use crate::formula::{BooleanSystem, Equation, Formula};

/// Random formula over `x1..xm` with at most `depth` levels of connectives.
pub fn random_formula<R: Rng>(m: usize, depth: usize, rng: &mut R) -> Formula {
    if depth == 0 || rng.random_bool(0.25) {
        return Formula::Var(rng.random_range(1..=m));
    }
    let op = rng.random_range(0..5);
    let mut sub = || random_formula(m, depth - 1, rng);
    match op {
        0 => sub().negate(),
        1 => sub().and(sub()),
        2 => sub().or(sub()),
        3 => sub().implies(sub()),
        _ => sub().iff(sub()),
    }
}

/// `n` random equations whose right-hand sides are chosen so that a random
/// planted assignment satisfies all of them. Returns the system and the
/// planted assignment.
pub fn random_satisfiable_system<R: Rng>(
    m: usize,
    n: usize,
    depth: usize,
    rng: &mut R,
) -> (BooleanSystem, Vec<bool>) {
    let planted: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
    let equations = (0..n)
        .map(|_| {
            let formula = random_formula(m, depth, rng);
            let rhs = formula.evaluate(&planted).expect("planted has length m");
            Equation { formula, rhs }
        })
        .collect();
    let system = BooleanSystem::new(m, equations).expect("m, n >= 1 and vars within range");
    (system, planted)
}

/// `n` random equations with uniformly random right-hand sides.
pub fn random_system<R: Rng>(m: usize, n: usize, depth: usize, rng: &mut R) -> BooleanSystem {
    let equations = (0..n)
        .map(|_| Equation {
            formula: random_formula(m, depth, rng),
            rhs: rng.random_bool(0.5),
        })
        .collect();
    BooleanSystem::new(m, equations).expect("m, n >= 1 and vars within range")
}
