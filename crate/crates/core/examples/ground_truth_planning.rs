//! Writes the exact LightsOut(3) domain as PDDL, parses it back and solves
//! random-walk instances with both search algorithms.

use std::fmt::Write as _;

use dsama::bits::BitVector;
use dsama::compile::emit_problem;
use dsama::dataset::{make_instances, make_lights_out, GroundTruthDomain};
use dsama::model::ActionMapping;
use dsama::planner::{parse, search, validate, Algorithm, Limits};

fn lights_out_pddl(n: usize) -> String {
    let d = make_lights_out(n).unwrap();
    let mut out = String::from("(define (domain lightsout3)\n (:requirements :strips :negative-preconditions :conditional-effects)\n (:predicates");
    for i in 0..d.width() {
        write!(out, " (z{i})").unwrap();
    }
    out.push_str(")\n");
    for a in 0..d.action_count() {
        write!(
            out,
            " (:action a{a} :parameters () :precondition (and) :effect (and"
        )
        .unwrap();
        for b in d.mask(a).iter_ones() {
            write!(
                out,
                " (when (z{b}) (not (z{b}))) (when (not (z{b})) (z{b}))"
            )
            .unwrap();
        }
        out.push_str("))\n");
    }
    out.push_str(")\n");
    out
}

fn main() {
    let d = make_lights_out(3).unwrap();
    let domain_text = lights_out_pddl(3);
    for (i, inst) in make_instances(&d, &[7, 14], 3, 1)
        .unwrap()
        .iter()
        .enumerate()
    {
        let problem = emit_problem(&format!("p{i}"), "lightsout3", &inst.init, &inst.goal);
        let task = parse(&domain_text, &problem).unwrap();
        let init: &BitVector = task.init();
        for algo in [Algorithm::Bfs, Algorithm::AstarBlind] {
            let r = search(task.actions(), init, task.goal(), algo, &Limits::default());
            let plan = r.outcome.plan().expect("every instance is solvable");
            let v = validate(
                plan,
                task.actions(),
                init,
                task.goal(),
                &d,
                &ActionMapping::Identity,
            );
            println!(
                "p{i} walk {:>2} {algo:<11} plan {:>2} steps, valid {}, expanded {}",
                inst.walk_length,
                plan.len(),
                v.valid,
                r.stats.expanded
            );
        }
    }
}
