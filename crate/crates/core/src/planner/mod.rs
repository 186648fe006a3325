//! Grounded planning over the emitted PDDL subset.
//!
//! Actions have a precondition formula and conditional add/delete effects.
//! All effect conditions are evaluated in the state the action is applied to;
//! adds are applied first, then deletes, so a delete wins a conflict.

mod parse;
mod search;
mod validate;

use thiserror::Error;

use crate::bits::BitVector;
use crate::compile::ActionSchema;
use crate::formula::{evaluate, negate, simplify, Circuit, Formula};

pub use parse::{
    parse, parse_domain, parse_problem, ParseError, ParsedDomain, ParsedProblem, Task,
};
pub use search::{
    format_plan, format_plan_csv_row, parse_plan, search, Algorithm, Limit, Limits, Outcome,
    SearchResult, SearchStats, PLAN_CSV_HEADER,
};
pub use validate::{validate, Validation, Violation, ViolationKind};

#[derive(Debug, Clone)]
pub struct GroundAction {
    pub name: String,
    pub precondition: Formula,
    /// `(condition, bit)`: set `bit` when `condition` holds.
    pub add: Vec<(Formula, usize)>,
    /// `(condition, bit)`: clear `bit` when `condition` holds.
    pub del: Vec<(Formula, usize)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("action {action} both adds and deletes bit {bit}")]
pub struct EffectConflict {
    pub action: String,
    pub bit: usize,
}

impl GroundAction {
    /// The action emitted for a compiled schema: each bit is added under its
    /// effect condition and deleted under the condition's negation.
    pub fn from_schema(schema: &ActionSchema) -> GroundAction {
        GroundAction {
            name: schema.name(),
            precondition: schema.precondition.clone(),
            add: schema.effects.iter().cloned().zip(0..).collect(),
            del: schema
                .effects
                .iter()
                .map(|e| simplify(&negate(e)))
                .zip(0..)
                .collect(),
        }
    }

    /// Successor of `s`, or `None` when the precondition is false.
    pub fn successor(&self, s: &BitVector) -> Option<BitVector> {
        self.apply(s, false)
            .expect("lenient application never fails")
    }

    /// Like [`GroundAction::successor`] but reports a bit that is both added
    /// and deleted instead of letting the delete win.
    pub fn successor_strict(&self, s: &BitVector) -> Result<Option<BitVector>, EffectConflict> {
        self.apply(s, true)
    }

    fn apply(&self, s: &BitVector, strict: bool) -> Result<Option<BitVector>, EffectConflict> {
        let holds = |f: &Formula| evaluate(f, s).expect("formula within state width");
        if !holds(&self.precondition) {
            return Ok(None);
        }
        let adds: Vec<usize> = self
            .add
            .iter()
            .filter(|(c, _)| holds(c))
            .map(|&(_, b)| b)
            .collect();
        let dels: Vec<usize> = self
            .del
            .iter()
            .filter(|(c, _)| holds(c))
            .map(|&(_, b)| b)
            .collect();
        if strict {
            if let Some(&bit) = adds.iter().find(|b| dels.contains(b)) {
                return Err(EffectConflict {
                    action: self.name.clone(),
                    bit,
                });
            }
        }
        let mut next = s.clone();
        for b in adds {
            next.set(b, true);
        }
        for b in dels {
            next.set(b, false);
        }
        Ok(Some(next))
    }

    /// Largest proposition index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        let mut m = self.precondition.max_var();
        for (c, b) in self.add.iter().chain(&self.del) {
            m = m.max(c.max_var()).max(Some(*b));
        }
        m
    }
}

/// Actions lowered to one circuit each for fast repeated application.
#[derive(Debug, Clone)]
pub struct CompiledActions {
    actions: Vec<CompiledAction>,
}

#[derive(Debug, Clone)]
struct CompiledAction {
    circuit: Circuit,
    add_bits: Vec<usize>,
    del_bits: Vec<usize>,
}

impl CompiledActions {
    pub fn new(actions: &[GroundAction]) -> CompiledActions {
        let actions = actions
            .iter()
            .map(|a| {
                let roots = std::iter::once(&a.precondition)
                    .chain(a.add.iter().map(|(c, _)| c))
                    .chain(a.del.iter().map(|(c, _)| c));
                CompiledAction {
                    circuit: Circuit::new(roots),
                    add_bits: a.add.iter().map(|&(_, b)| b).collect(),
                    del_bits: a.del.iter().map(|&(_, b)| b).collect(),
                }
            })
            .collect();
        CompiledActions { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Successor of `s` under action `i`; `scratch` is reused between calls.
    pub fn successor(&self, i: usize, s: &BitVector, scratch: &mut Vec<bool>) -> Option<BitVector> {
        let a = &self.actions[i];
        a.circuit.eval_into(s, scratch);
        if !a.circuit.output(scratch, 0) {
            return None;
        }
        let mut next = s.clone();
        for (k, &b) in a.add_bits.iter().enumerate() {
            if a.circuit.output(scratch, 1 + k) {
                next.set(b, true);
            }
        }
        let offset = 1 + a.add_bits.len();
        for (k, &b) in a.del_bits.iter().enumerate() {
            if a.circuit.output(scratch, offset + k) {
                next.set(b, false);
            }
        }
        Some(next)
    }
}
