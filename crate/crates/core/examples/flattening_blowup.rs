//! Compiles a small learned LightsOut(3) model and flattens each precondition
//! to DNF, showing how many terms a grounding planner would face.

use dsama::compile::{flatten_domain, FlattenCount};
use dsama::dataset::{make_lights_out, sample_transitions, split};
use dsama::forest::ForestParams;
use dsama::model::{assemble, to_document, train_actions, ModelParams};

fn main() {
    let cap: usize = std::env::args()
        .nth(1)
        .map_or(100_000, |a| a.parse().expect("cap must be a number"));
    let domain = make_lights_out(3).unwrap();
    let ds = sample_transitions(&domain, 10_000, 1).unwrap();
    let (train, _) = split(&ds, 0.9, 1).unwrap();
    let params = ModelParams {
        forest: ForestParams::new(5, 4, 1),
        ..ModelParams::default()
    };
    let models = assemble(&train_actions(&train, &params).unwrap(), false).unwrap();
    let doc = to_document("lightsout3", &models);

    let report = flatten_domain(&doc, cap);
    for (a, count) in doc.actions.iter().zip(&report.per_action) {
        let nodes = a.precondition.metrics();
        match count {
            FlattenCount::Terms(n) => println!("a{}: {nodes:?} -> {n} terms", a.id),
            FlattenCount::CapExceeded { materialized } => {
                println!(
                    "a{}: {nodes:?} -> over cap {cap} ({materialized} materialized)",
                    a.id
                )
            }
        }
    }
    println!(
        "total {} terms over {} actions ({:.1}x){}",
        report.total_terms(),
        report.action_count(),
        report.blowup(),
        if report.cap_exceeded() {
            ", cap exceeded"
        } else {
            ""
        }
    );
}
