//! Checked-in PDDL files: the hand-written LightsOut(3) domain against the
//! simulator, and a golden file for the emitter.

use dsama::bits::BitVector;
use dsama::compile::{emit_domain, ActionSchema, PddlDocument};
use dsama::dataset::{make_lights_out, GroundTruthDomain};
use dsama::formula::Formula;
use dsama::planner::parse_domain;

const LIGHTS_OUT: &str = include_str!("fixtures/lightsout3.pddl");
const ONE_BIT: &str = include_str!("fixtures/one_bit.pddl");

#[test]
fn hand_written_lights_out_matches_the_simulator() {
    let d = make_lights_out(3).unwrap();
    let parsed = parse_domain(LIGHTS_OUT).unwrap();
    assert_eq!(parsed.name, "lightsout3");
    assert_eq!(parsed.width, 9);
    assert_eq!(parsed.actions.len(), 9);
    for s in 0..512 {
        let s = BitVector::from_u64(9, s);
        for (a, action) in parsed.actions.iter().enumerate() {
            assert_eq!(action.name, format!("a{a}"));
            assert_eq!(action.successor(&s), d.apply(&s, a), "a{a} on {s}");
        }
    }
}

/// Two actions over one bit: `a0` sets it when clear, `a1` copies it (a no-op)
/// and is always applicable.
fn one_bit_document() -> PddlDocument {
    PddlDocument {
        domain_name: "onebit".into(),
        width: 1,
        actions: vec![
            ActionSchema {
                id: 0,
                precondition: Formula::neg_var(0),
                effects: vec![Formula::top()],
            },
            ActionSchema {
                id: 1,
                precondition: Formula::top(),
                effects: vec![Formula::var(0)],
            },
        ],
    }
}

#[test]
fn one_bit_domain_matches_the_golden_file() {
    assert_eq!(emit_domain(&one_bit_document()), ONE_BIT);
}

#[test]
fn golden_file_parses_to_the_same_transitions() {
    let parsed = parse_domain(ONE_BIT).unwrap();
    let zero = BitVector::zeros(1);
    let one = BitVector::ones(1);
    assert_eq!(parsed.actions[0].successor(&zero), Some(one.clone()));
    assert_eq!(parsed.actions[0].successor(&one), None);
    assert_eq!(parsed.actions[1].successor(&zero), Some(zero));
    assert_eq!(parsed.actions[1].successor(&one), Some(one));
}
