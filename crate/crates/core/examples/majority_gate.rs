//! Builds the bitonic majority gate over free inputs and checks it against a
//! vote count on every assignment.

use dsama::bits::BitVector;
use dsama::compile::majority_gate;
use dsama::formula::{evaluate, Formula};

fn main() {
    println!(
        "{:>3} {:>8} {:>12} {:>6} {:>8}",
        "T", "padded", "comparators", "gates", "checked"
    );
    for t in 1..=9usize {
        let inputs: Vec<Formula> = (0..t).map(Formula::var).collect();
        let (gate, stats) = majority_gate(inputs);
        for x in 0..1u64 << t {
            let x = BitVector::from_u64(t, x);
            let expected = x.count_ones() > t / 2;
            assert_eq!(evaluate(&gate, &x).unwrap(), expected, "T={t} x={x}");
        }
        println!(
            "{t:>3} {:>8} {:>12} {:>6} {:>8}",
            stats.padded_inputs,
            stats.comparator_count,
            stats.gate_count,
            1u64 << t
        );
    }
}
