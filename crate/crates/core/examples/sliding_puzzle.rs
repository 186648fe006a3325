//! Learns the 2x2 sliding puzzle from unlabeled transitions: labels come from
//! flip signatures, so one label covers both moves across a cell pair.

use dsama::dataset::{make_sliding_puzzle, sample_transitions, split, GroundTruthDomain};
use dsama::forest::ForestParams;
use dsama::labeler::label_by_signature;
use dsama::model::{
    evaluate_effects, evaluate_preconditions, train_actions, ActionMapping, Decision, ModelParams,
};

fn main() {
    let domain = make_sliding_puzzle(2).unwrap();
    let ds = sample_transitions(&domain, 4000, 5).unwrap();
    let (train, test) = split(&ds, 0.9, 5).unwrap();
    let labeling = label_by_signature(&train.without_labels());
    println!(
        "{} oracle actions, {} signature labels over {} bits",
        domain.action_count(),
        labeling.label_count(),
        domain.width()
    );

    let train = labeling.apply_to(&train);
    let test = labeling.label_dataset(&test);
    let params = ModelParams {
        forest: ForestParams::new(10, 12, 5),
        ..ModelParams::default()
    };
    let trained = train_actions(&train, &params).unwrap();
    println!(
        "effect accuracy: {:.4}",
        evaluate_effects(&trained, &test).unwrap().accuracy
    );

    let mapping = ActionMapping::Signatures(labeling.centroids.clone());
    for decision in [Decision::Vote, Decision::Corrected] {
        let r = evaluate_preconditions(&trained, &test, &domain, &mapping, decision).unwrap();
        println!(
            "{decision:?}: recall {:?} specificity {:?} F {:.4}",
            r.recall(),
            r.specificity(),
            r.f_measure()
        );
    }
}
