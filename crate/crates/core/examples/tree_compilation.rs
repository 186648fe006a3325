//! Trains a small forest on a parity-like target, compiles it to one formula
//! and confirms the formula agrees with the forest's vote on every input.

use dsama::bits::BitVector;
use dsama::compile::forest_to_formula;
use dsama::forest::{train_forest, ForestParams};
use dsama::formula::evaluate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let width = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let features: Vec<BitVector> = (0..400)
        .map(|_| BitVector::from_u64(width, rng.random_range(0..1u64 << width)))
        .collect();
    // x0 AND (x1 OR x2), with 5% label noise
    let labels: Vec<bool> = features
        .iter()
        .map(|x| (x.get(0) && (x.get(1) || x.get(2))) ^ rng.random_bool(0.05))
        .collect();

    let forest = train_forest(&features, &labels, &ForestParams::new(7, 5, 1)).unwrap();
    let (formula, stats) = forest_to_formula(&forest).unwrap();
    let mut agree = 0;
    for x in 0..1u64 << width {
        let x = BitVector::from_u64(width, x);
        assert_eq!(
            evaluate(&formula, &x).unwrap(),
            forest.predict_vote(&x).unwrap()
        );
        agree += 1;
    }
    println!("trees: {}", forest.tree_count());
    println!(
        "tree nodes: {}",
        forest.trees().iter().map(|t| t.node_count()).sum::<usize>()
    );
    println!("gate comparators: {}", stats.comparator_count);
    println!("formula gates: {}", stats.gate_count);
    println!("formula text bytes: {}", formula.text_len());
    println!("agreement: {agree}/{agree} inputs");
}
