//! A learned model written as PDDL and parsed back behaves exactly like the
//! in-memory model on every state.

use dsama::bits::BitVector;
use dsama::compile::emit_domain;
use dsama::dataset::{make_lights_out, sample_transitions_with, split, SamplingOptions};
use dsama::forest::ForestParams;
use dsama::model::{apply_model, assemble, to_document, train_actions, ApplyMode, ModelParams};
use dsama::planner::parse_domain;

#[test]
fn parsed_domain_agrees_with_the_model() {
    let d = make_lights_out(3).unwrap();
    // noise makes the preconditions non-trivial
    let options = SamplingOptions {
        noise: 0.02,
        ..SamplingOptions::default()
    };
    let ds = sample_transitions_with(&d, 3000, 4, &options).unwrap();
    let (train, _) = split(&ds, 0.9, 4).unwrap();
    let params = ModelParams {
        forest: ForestParams::new(3, 4, 4),
        ..ModelParams::default()
    };
    let models = assemble(&train_actions(&train, &params).unwrap(), false).unwrap();
    let text = emit_domain(&to_document("lightsout3", &models));
    let parsed = parse_domain(&text).unwrap();
    assert_eq!(parsed.actions.len(), models.len());

    let mut applicable = 0;
    for s in 0..512 {
        let s = BitVector::from_u64(9, s);
        for (m, action) in models.iter().zip(&parsed.actions) {
            let expected = if m.precondition_holds(&s).unwrap() {
                applicable += 1;
                Some(apply_model(m, &s, ApplyMode::Formula).unwrap())
            } else {
                None
            };
            assert_eq!(action.successor(&s), expected, "{} on {s}", action.name);
            if expected.is_some() {
                assert_eq!(expected, Some(apply_model(m, &s, ApplyMode::Vote).unwrap()));
            }
        }
    }
    assert!(applicable > 0 && applicable < 512 * 9, "{applicable}");
}
