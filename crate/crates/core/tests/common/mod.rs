#![allow(dead_code)]

use boolnet::formula::BooleanSystem;
use boolnet::linalg::{Matrix, Vector};
use rand::Rng;

pub fn unit(d: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[i - 1] = 1.0;
    v
}

pub fn example1() -> BooleanSystem {
    BooleanSystem::parse(
        3,
        &[
            ("x1 | x2 | !x3", true),
            ("x1 & (x1 <-> x2)", false),
            ("x2 & x3", false),
        ],
    )
    .unwrap()
}

pub fn example2() -> BooleanSystem {
    BooleanSystem::parse(
        3,
        &[
            ("(x1 | x2) & !x3", true),
            ("(x1 -> x2) | x3", false),
            ("x1 & x3", false),
        ],
    )
    .unwrap()
}

pub fn example3() -> BooleanSystem {
    BooleanSystem::parse(
        3,
        &[
            ("x1 & x2 & x3", true),
            ("!x1 | (x2 <-> x3)", true),
            ("x1 & (x2 | x3)", false),
        ],
    )
    .unwrap()
}

pub fn example4() -> BooleanSystem {
    BooleanSystem::parse(
        3,
        &[
            ("(x1 | x2) & !x3", false),
            ("(x1 -> x2) | x3", false),
            ("x1 & x3", true),
        ],
    )
    .unwrap()
}

fn columns(rows: &[&[f64]]) -> Vec<Vector> {
    let k = rows[0].len();
    (0..k)
        .map(|c| Vector::from_iterator(rows.len(), rows.iter().map(|r| r[c])))
        .collect()
}

/// The nine 4-decimal linear solutions printed for the first worked example.
pub fn example1_printed_ys() -> Vec<Vector> {
    columns(&[
        &[0.3837, 0.0299, -0.0509, 0.4616, 0.2897, 0.1139, 0.1043, 0.3578, 0.0277],
        &[0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
        &[0.1019, 0.4064, 0.2581, 0.1935, 0.3299, 0.2565, 0.4819, 0.3105, 0.1353],
        &[0.0640, 0.0604, 0.1110, 0.1157, 0.0974, 0.0806, 0.1506, 0.0511, 0.0300],
        &[0.0944, 0.1918, 0.3854, 0.2492, -0.1419, 0.1938, 0.0559, 0.2378, 0.3244],
        &[0.3561, 0.3116, 0.2964, -0.0201, 0.4249, 0.3551, 0.2073, 0.0429, 0.4827],
        &[0.0640, 0.0604, 0.1110, 0.1157, 0.0974, 0.0806, 0.1506, 0.0511, 0.0300],
        &[-0.0640, -0.0604, -0.1110, -0.1157, -0.0974, -0.0806, -0.1506, -0.0511, -0.0300],
    ])
}

/// The five 4-decimal linear solutions printed for the second worked example.
pub fn example2_printed_ys() -> Vec<Vector> {
    columns(&[
        &[-0.1558, 0.0871, -0.1208, -0.0962, -0.1209],
        &[0.1417, -0.1609, 0.1522, 0.1201, -0.0082],
        &[-0.0003, 0.0835, 0.0835, -0.1127, 0.1244],
        &[0.0141, 0.0738, -0.0314, -0.0239, 0.1292],
        &[1.0000, 1.0000, 1.0000, 1.0000, 1.0000],
        &[-0.0813, 0.0717, -0.1067, 0.1856, -0.0769],
        &[0.0003, -0.0835, -0.0835, 0.1127, -0.1244],
        &[0.0813, -0.0717, 0.1067, -0.1856, 0.0769],
    ])
}

/// A random search instance in `R^(2^m)`: an affine subspace spanned by a
/// random subset of unit vectors plus a few generic points, sampled by
/// `count` random affine combinations of those generators.
pub struct SearchInstance {
    pub points: Vec<Vector>,
    pub planted: Vec<usize>,
}

pub fn random_search_instance<R: Rng>(m: usize, rng: &mut R) -> SearchInstance {
    let d = 1usize << m;
    let mut planted: Vec<usize> = (1..=d).filter(|_| rng.random_bool(0.3)).collect();
    if planted.is_empty() && rng.random_bool(0.5) {
        planted.push(rng.random_range(1..=d));
    }
    let extra = rng.random_range(0..=2usize).min(d);
    let mut gens: Vec<Vector> = planted.iter().map(|&i| unit(d, i)).collect();
    for _ in 0..extra {
        gens.push(Vector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0));
    }
    if gens.is_empty() {
        gens.push(Vector::from_fn(d, |_, _| rng.random::<f64>()));
    }
    let count = gens.len() + rng.random_range(0..=3usize);
    let points = (0..count)
        .map(|_| {
            let mut w: Vec<f64> = gens.iter().map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
            let s: f64 = w.iter().sum();
            let last = w.len() - 1;
            w[last] += 1.0 - s;
            gens.iter().zip(&w).fold(Vector::zeros(d), |acc, (g, &c)| acc + g * c)
        })
        .collect();
    SearchInstance { points, planted }
}

pub fn as_matrix(points: &[Vector]) -> Matrix {
    Matrix::from_columns(points)
}
