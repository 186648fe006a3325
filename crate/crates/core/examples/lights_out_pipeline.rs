//! End to end on LightsOut(3): sample, train, score, compile to PDDL and plan
//! on the compiled domain.

use dsama::compile::domain_len;
use dsama::dataset::{
    make_instances, make_lights_out, sample_transitions, split, GroundTruthDomain,
};
use dsama::forest::ForestParams;
use dsama::formula::Formula;
use dsama::model::{
    assemble, evaluate_effects, to_document, train_actions, ActionMapping, InputMode, ModelParams,
};
use dsama::planner::{search, validate, Algorithm, GroundAction, Limits};

fn main() {
    let domain = make_lights_out(3).unwrap();
    let ds = sample_transitions(&domain, 10_000, 1).unwrap();
    let (train, test) = split(&ds, 0.9, 1).unwrap();

    let params = ModelParams {
        forest: ForestParams::new(5, 12, 1),
        input: InputMode::Joint,
        ..ModelParams::default()
    };
    let trained = train_actions(&train, &params).unwrap();
    let report = evaluate_effects(&trained, &test).unwrap();
    println!("effect accuracy: {:.4}", report.accuracy);

    let models = assemble(&trained, false).unwrap();
    let doc = to_document("lightsout3", &models);
    // sized without rendering; the text runs to about 100 MB
    println!(
        "domain: {} bytes, {} actions",
        domain_len(&doc),
        doc.actions.len()
    );
    for a in &doc.actions {
        println!(
            "  {}: precondition {:?}",
            a.name(),
            a.precondition.metrics()
        );
    }

    let actions: Vec<GroundAction> = doc.actions.iter().map(GroundAction::from_schema).collect();
    let instances = make_instances(&domain, &[7], 5, 1).unwrap();
    for (i, inst) in instances.iter().enumerate() {
        let goal = Formula::and(
            (0..domain.width())
                .map(|b| Formula::literal(b, inst.goal.get(b)))
                .collect(),
        );
        let r = search(
            &actions,
            &inst.init,
            &goal,
            Algorithm::Bfs,
            &Limits::default(),
        );
        let verdict = match r.outcome.plan() {
            Some(plan) => {
                let v = validate(
                    plan,
                    &actions,
                    &inst.init,
                    &goal,
                    &domain,
                    &ActionMapping::Identity,
                );
                format!("plan of {} steps, valid: {}", plan.len(), v.valid)
            }
            None => r.outcome.tag().to_string(),
        };
        println!("instance {i}: {verdict} ({} expanded)", r.stats.expanded);
    }
}
