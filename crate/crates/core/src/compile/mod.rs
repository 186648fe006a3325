//! Compilation of trained classifiers into propositional formulas.
//!
//! A tree becomes a nested if-then-else over its split literals. A forest
//! becomes a majority gate: the tree formulas are sorted by a bitonic network
//! whose comparators are `∨` (max) and `∧` (min), and the middle output is
//! taken.

mod flatten;
mod pddl;

use thiserror::Error;

use crate::forest::{RandomForest, TreeNode};
use crate::formula::{
    conjoin, disjoin, gate_count, map_literals, negate, simplify, Formula, FormulaMetrics,
};

pub use flatten::{flatten_domain, flatten_preconditions, FlattenCount, FlattenReport};
pub use pddl::{
    domain_len, emit_domain, emit_problem, format_metrics_csv, write_domain, ActionSchema,
    PddlDocument, METRICS_CSV_HEADER, REQUIREMENTS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("{found} effect formulas for state width {width}")]
    EffectCount { width: usize, found: usize },
    #[error("effect formula {bit} references successor variable {index}")]
    NestedLookahead { bit: usize, index: usize },
    #[error("variable {index} outside the joint width {limit}")]
    VariableOutOfRange { index: usize, limit: usize },
}

/// Size of a compiled majority gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    /// Tree formulas fed to the gate.
    pub inputs: usize,
    /// Inputs after padding to a power of two.
    pub padded_inputs: usize,
    /// Compare-and-swap operations in the sorting network.
    pub comparator_count: usize,
    /// Sorted position taken as the output.
    pub output_index: usize,
    /// Distinct And/Or nodes of the output formula.
    pub gate_count: usize,
    pub metrics: FormulaMetrics,
}

/// Which sorted output of the gate is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOutput {
    /// Index `⌊T/2⌋`: strictly more than half of the trees vote 1.
    Majority,
    /// Index `⌈T·c/2⌉ − 1`: at least `⌈T·c/2⌉` trees vote 1, the vote-count
    /// analogue of comparing the corrected score `avg / c` against 0.5.
    PuAdjusted { c: f64 },
}

impl GateOutput {
    pub fn index(&self, trees: usize) -> usize {
        match *self {
            GateOutput::Majority => trees / 2,
            GateOutput::PuAdjusted { c } => {
                let needed = (trees as f64 * 0.5 * c.clamp(0.0, 1.0)).ceil() as usize;
                needed.clamp(1, trees) - 1
            }
        }
    }
}

/// Formula true exactly on the inputs for which the tree votes 1.
pub fn tree_to_formula(tree: &TreeNode) -> Result<Formula, CompileError> {
    tree.validate(usize::MAX)
        .map_err(|e| CompileError::MalformedTree(e.to_string()))?;
    Ok(tree_rec(tree))
}

fn tree_rec(node: &TreeNode) -> Formula {
    match node {
        TreeNode::Leaf { p0, p1 } => Formula::constant(p0 < p1),
        TreeNode::Split {
            feature,
            threshold,
            high,
            low,
        } => {
            // for a 0/1 feature, `x > θ` is constant outside [0, 1)
            if *threshold < 0.0 {
                tree_rec(high)
            } else if *threshold >= 1.0 {
                tree_rec(low)
            } else {
                let high = conjoin(vec![Formula::var(*feature), tree_rec(high)]);
                let low = conjoin(vec![Formula::neg_var(*feature), tree_rec(low)]);
                disjoin(vec![high, low])
            }
        }
    }
}

/// The forest's majority vote as a formula.
pub fn forest_to_formula(forest: &RandomForest) -> Result<(Formula, CircuitStats), CompileError> {
    forest_to_formula_with(forest, GateOutput::Majority)
}

pub fn forest_to_formula_with(
    forest: &RandomForest,
    output: GateOutput,
) -> Result<(Formula, CircuitStats), CompileError> {
    let inputs = forest
        .trees()
        .iter()
        .map(tree_to_formula)
        .collect::<Result<Vec<_>, _>>()?;
    let index = output.index(inputs.len());
    Ok(sorted_output(inputs, index))
}

/// Sorts `inputs` (descending, padded with ⊥ to a power of two) and returns
/// the formula at position `index`: true iff more than `index` inputs are true.
pub fn sorted_output(inputs: Vec<Formula>, index: usize) -> (Formula, CircuitStats) {
    assert!(
        index < inputs.len(),
        "gate output {index} outside {} inputs",
        inputs.len()
    );
    let count = inputs.len();
    let mut x = inputs;
    x.resize(count.next_power_of_two(), Formula::bottom());
    let padded = x.len();
    let mut comparators = 0;
    sort(true, &mut x, &mut comparators);
    let out = simplify(&x[index]);
    let stats = CircuitStats {
        inputs: count,
        padded_inputs: padded,
        comparator_count: comparators,
        output_index: index,
        gate_count: gate_count(&out),
        metrics: out.metrics(),
    };
    (out, stats)
}

/// Strict-majority gate over arbitrary input formulas.
pub fn majority_gate(inputs: Vec<Formula>) -> (Formula, CircuitStats) {
    let index = inputs.len() / 2;
    sorted_output(inputs, index)
}

/// `descending` puts the larger value (the disjunction) at the lower index.
fn sort(descending: bool, x: &mut [Formula], comparators: &mut usize) {
    if x.len() <= 1 {
        return;
    }
    let d = x.len() / 2;
    let (a, b) = x.split_at_mut(d);
    sort(true, a, comparators);
    sort(false, b, comparators);
    merge(descending, x, comparators);
}

fn merge(descending: bool, x: &mut [Formula], comparators: &mut usize) {
    if x.len() <= 1 {
        return;
    }
    compare_and_swap(descending, x, comparators);
    let d = x.len() / 2;
    let (a, b) = x.split_at_mut(d);
    merge(descending, a, comparators);
    merge(descending, b, comparators);
}

fn compare_and_swap(descending: bool, x: &mut [Formula], comparators: &mut usize) {
    let d = x.len() / 2;
    for i in 0..d {
        let pair = vec![x[i].clone(), x[i + d].clone()];
        let (max, min) = (disjoin(pair.clone()), conjoin(pair));
        if descending {
            x[i] = max;
            x[i + d] = min;
        } else {
            x[i] = min;
            x[i + d] = max;
        }
        *comparators += 1;
    }
}

/// Comparator count of the network for `2^k` inputs.
pub fn bitonic_comparators(k: u32) -> usize {
    let n = 1usize << k;
    (k * (k + 1) / 2) as usize * n / 2
}

/// Replaces successor variables `z_{F+j}` of a formula over `2F` inputs by
/// `effects[j]` (and their negations by the negated effect), giving a formula
/// over the current state only.
pub fn substitute_successor(f: &Formula, effects: &[Formula]) -> Result<Formula, CompileError> {
    let width = effects.len();
    for (bit, e) in effects.iter().enumerate() {
        if let Some(index) = e.max_var().filter(|&i| i >= width) {
            return Err(CompileError::NestedLookahead { bit, index });
        }
    }
    let mut negated: Vec<Option<Formula>> = vec![None; width];
    let out = map_literals(f, |i, positive| {
        if i < width {
            return Ok(Formula::literal(i, positive));
        }
        let j = i - width;
        if j >= width {
            return Err(CompileError::VariableOutOfRange {
                index: i,
                limit: 2 * width,
            });
        }
        if positive {
            Ok(effects[j].clone())
        } else {
            Ok(negated[j]
                .get_or_insert_with(|| simplify(&negate(&effects[j])))
                .clone())
        }
    })?;
    Ok(simplify(&out))
}
