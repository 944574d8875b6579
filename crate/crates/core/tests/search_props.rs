mod common;

use std::collections::BTreeSet;

use boolnet::linalg::Vector;
use boolnet::search::{
    boolean_vector_search, boolean_vector_search_bruteforce, boolean_vector_search_report,
};
use common::{example1_printed_ys, example2_printed_ys, random_search_instance, unit};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn matches_bruteforce(m in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_search_instance(m, &mut rng);
        let fast = boolean_vector_search(&inst.points, 1e-6).unwrap();
        let slow = boolean_vector_search_bruteforce(&inst.points, 1e-6).unwrap();
        prop_assert_eq!(&fast, &slow);
        for i in &inst.planted {
            prop_assert!(fast.contains(i));
        }
    }

    #[test]
    fn invariant_under_point_order(m in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_search_instance(m, &mut rng);
        let mut shuffled = inst.points.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(
            boolean_vector_search(&inst.points, 1e-6).unwrap(),
            boolean_vector_search(&shuffled, 1e-6).unwrap()
        );
    }

    #[test]
    fn results_are_unit_vectors_in_the_hull(m in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_search_instance(m, &mut rng);
        let d = 1usize << m;
        let hull = boolnet::linalg::affine_from_points(&inst.points, 1e-9).unwrap();
        for i in boolean_vector_search(&inst.points, 1e-6).unwrap() {
            prop_assert!((1..=d).contains(&i));
            prop_assert!(hull.contains(&unit(d, i), 1e-5).unwrap());
        }
    }
}

#[test]
fn printed_example_one_solutions() {
    // Four decimals leave residuals near 1e-4.
    let found = boolean_vector_search(&example1_printed_ys(), 2e-3).unwrap();
    assert_eq!(found, BTreeSet::from([1, 3, 5, 6]));
}

#[test]
fn printed_example_two_solutions() {
    let found = boolean_vector_search(&example2_printed_ys(), 2e-3).unwrap();
    assert_eq!(found, BTreeSet::from([5]));
}

#[test]
fn work_grows_polynomially() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut last = 0u64;
    for m in 2..=7 {
        let d = 1usize << m;
        let pts: Vec<Vector> = (0..=d)
            .map(|_| Vector::from_fn(d, |_, _| rng.random::<f64>()))
            .collect();
        let report = boolean_vector_search_report(&pts, 1e-9).unwrap();
        assert_eq!(report.dim, d);
        let bound = 4 * (d as u64).pow(3);
        assert!(report.flops <= bound, "m={m}: {} > {bound}", report.flops);
        assert!(report.flops > last);
        last = report.flops;
    }
}
