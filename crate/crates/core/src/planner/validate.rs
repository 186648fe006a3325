//! Replays a plan in the ground-truth simulator.

use std::fmt;

use crate::bits::BitVector;
use crate::dataset::GroundTruthDomain;
use crate::formula::{evaluate, Formula};
use crate::model::ActionMapping;

use super::GroundAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The name is not an action of the model, or not of the form `a<label>`.
    Unmappable,
    /// No oracle action realising the label applies.
    NotApplicable,
    /// The model's successor is not an oracle successor for the label.
    SuccessorMismatch,
    /// Every step replayed but the final state misses the goal.
    GoalNotReached,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Unmappable => "unmappable",
            ViolationKind::NotApplicable => "not_applicable",
            ViolationKind::SuccessorMismatch => "successor_mismatch",
            ViolationKind::GoalNotReached => "goal_not_reached",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    /// Plan index of the offending step; the plan length for `GoalNotReached`.
    pub step: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    pub first_violation: Option<Violation>,
}

impl Validation {
    fn fail(step: usize, kind: ViolationKind) -> Validation {
        Validation {
            valid: false,
            first_violation: Some(Violation { step, kind }),
        }
    }
}

fn label_of(name: &str) -> Option<usize> {
    name.strip_prefix('a')
        .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
        .and_then(|d| d.parse().ok())
}

/// Steps through `plan` from `init`. Each step must be an action of `actions`
/// named `a<label>`, some oracle action realising `label` (per `mapping`) must
/// apply, and the model's successor must be one of those oracle successors.
pub fn validate(
    plan: &[String],
    actions: &[GroundAction],
    init: &BitVector,
    goal: &Formula,
    oracle: &dyn GroundTruthDomain,
    mapping: &ActionMapping,
) -> Validation {
    let mut state = init.clone();
    for (step, name) in plan.iter().enumerate() {
        let (Some(action), Some(label)) =
            (actions.iter().find(|a| &a.name == name), label_of(name))
        else {
            return Validation::fail(step, ViolationKind::Unmappable);
        };
        let moves = mapping.oracle_moves(oracle, label, &state);
        if moves.is_empty() {
            return Validation::fail(step, ViolationKind::NotApplicable);
        }
        match action.successor(&state) {
            Some(next) if moves.iter().any(|(_, n)| n == &next) => state = next,
            _ => return Validation::fail(step, ViolationKind::SuccessorMismatch),
        }
    }
    if evaluate(goal, &state).unwrap_or(false) {
        Validation {
            valid: true,
            first_violation: None,
        }
    } else {
        Validation::fail(plan.len(), ViolationKind::GoalNotReached)
    }
}
