//! Recovers action labels from unlabeled LightsOut(4) transitions by raising
//! the label budget until the labels reconstruct successors.

use dsama::dataset::{make_lights_out, sample_transitions};
use dsama::labeler::{label_by_signature, label_capacity_bounded, tune_label_count};

fn main() {
    let domain = make_lights_out(4).unwrap();
    let unlabeled = sample_transitions(&domain, 5000, 3)
        .unwrap()
        .without_labels();

    let exact = label_by_signature(&unlabeled);
    println!("distinct flip signatures: {}", exact.label_count());

    for capacity in [4, 8, 12, 16] {
        let l = label_capacity_bounded(&unlabeled, capacity);
        println!(
            "capacity {capacity:>2}: {:>2} labels, reconstruction error {:.4}",
            l.label_count(),
            l.reconstruction_error(&unlabeled)
        );
    }

    let tuned = tune_label_count(&unlabeled);
    println!(
        "tuned: {} labels, error {:.4}, converged {}",
        tuned.label_count, tuned.error, tuned.converged
    );
}
