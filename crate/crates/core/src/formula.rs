//! Negation-normal-form propositional formulas.
//!
//! A [`Formula`] is an immutable, reference-counted DAG: subformulas produced
//! by the majority-gate compiler are shared rather than copied. Every node
//! caches a structural hash, its tree-expanded size metrics and the length of
//! its PDDL rendering, so those stay O(1) even when the expanded tree is huge.
//!
//! Negation only ever appears on variables. [`negate`] pushes negations down
//! with De Morgan's laws.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::bits::BitVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("variable index {index} out of range for assignment width {width}")]
    VariableOutOfRange { index: usize, width: usize },
}

/// The shape of a formula node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    True,
    False,
    Var(usize),
    NegVar(usize),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

/// Size statistics of the tree expansion of a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FormulaMetrics {
    pub node_count: u64,
    pub depth: u64,
    pub or_count: u64,
    pub literal_count: u64,
}

struct Node {
    kind: Kind,
    hash: u64,
    metrics: FormulaMetrics,
    text_len: u64,
    max_var: Option<usize>,
    simplified: bool,
}

#[derive(Clone)]
pub struct Formula(Arc<Node>);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn mix(h: u64, x: u64) -> u64 {
    splitmix64(h ^ x.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

fn decimal_len(mut n: usize) -> u64 {
    let mut len = 1;
    while n >= 10 {
        n /= 10;
        len += 1;
    }
    len
}

impl Formula {
    fn build(kind: Kind, simplified: bool) -> Formula {
        let (hash, metrics, text_len, max_var) = match &kind {
            Kind::True => (splitmix64(1), leaf_metrics(0), 5, None),
            Kind::False => (splitmix64(2), leaf_metrics(0), 4, None),
            Kind::Var(i) => (
                mix(3, *i as u64),
                leaf_metrics(1),
                3 + decimal_len(*i),
                Some(*i),
            ),
            Kind::NegVar(i) => (
                mix(4, *i as u64),
                leaf_metrics(1),
                9 + decimal_len(*i),
                Some(*i),
            ),
            Kind::And(children) | Kind::Or(children) => {
                let is_or = matches!(kind, Kind::Or(_));
                let mut hash = if is_or { 6 } else { 5 };
                let mut m = FormulaMetrics {
                    node_count: 1,
                    depth: 0,
                    or_count: u64::from(is_or),
                    literal_count: 0,
                };
                // "(and" / "(or" plus the closing paren
                let mut text_len: u64 = if is_or { 4 } else { 5 };
                let mut max_var: Option<usize> = None;
                for c in children {
                    let n = &c.0;
                    hash = mix(hash, n.hash);
                    m.node_count = m.node_count.saturating_add(n.metrics.node_count);
                    m.depth = m.depth.max(n.metrics.depth + 1);
                    m.or_count = m.or_count.saturating_add(n.metrics.or_count);
                    m.literal_count = m.literal_count.saturating_add(n.metrics.literal_count);
                    text_len = text_len.saturating_add(1).saturating_add(n.text_len);
                    max_var = max_var.max(n.max_var);
                }
                (splitmix64(hash), m, text_len, max_var)
            }
        };
        Formula(Arc::new(Node {
            kind,
            hash,
            metrics,
            text_len,
            max_var,
            simplified,
        }))
    }

    pub fn top() -> Formula {
        Formula::build(Kind::True, true)
    }

    pub fn bottom() -> Formula {
        Formula::build(Kind::False, true)
    }

    pub fn constant(value: bool) -> Formula {
        if value {
            Formula::top()
        } else {
            Formula::bottom()
        }
    }

    pub fn var(index: usize) -> Formula {
        Formula::build(Kind::Var(index), true)
    }

    pub fn neg_var(index: usize) -> Formula {
        Formula::build(Kind::NegVar(index), true)
    }

    pub fn literal(index: usize, positive: bool) -> Formula {
        if positive {
            Formula::var(index)
        } else {
            Formula::neg_var(index)
        }
    }

    /// Builds a conjunction as given, without simplification.
    pub fn and(children: Vec<Formula>) -> Formula {
        Formula::build(Kind::And(children), false)
    }

    /// Builds a disjunction as given, without simplification.
    pub fn or(children: Vec<Formula>) -> Formula {
        Formula::build(Kind::Or(children), false)
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn metrics(&self) -> FormulaMetrics {
        self.0.metrics
    }

    /// Byte length of the PDDL rendering produced by `Display`.
    pub fn text_len(&self) -> u64 {
        self.0.text_len
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.0.max_var
    }

    pub fn is_true(&self) -> bool {
        matches!(self.0.kind, Kind::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self.0.kind, Kind::False)
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn order_key(&self) -> (u8, u64, u64) {
        match &self.0.kind {
            Kind::True => (0, 0, 0),
            Kind::False => (0, 1, 0),
            Kind::Var(i) => (1, *i as u64, 0),
            Kind::NegVar(i) => (1, *i as u64, 1),
            Kind::And(_) => (2, self.0.metrics.node_count, self.0.hash),
            Kind::Or(_) => (3, self.0.metrics.node_count, self.0.hash),
        }
    }

    /// Evaluates the formula under `assignment`.
    pub fn evaluate(&self, assignment: &BitVector) -> Result<bool, FormulaError> {
        evaluate(self, assignment)
    }
}

fn leaf_metrics(literals: u64) -> FormulaMetrics {
    FormulaMetrics {
        node_count: 1,
        depth: 0,
        or_count: 0,
        literal_count: literals,
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Formula {}

impl std::hash::Hash for Formula {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::True => f.write_str("True"),
            Kind::False => f.write_str("False"),
            Kind::Var(i) => write!(f, "Var({i})"),
            Kind::NegVar(i) => write!(f, "NegVar({i})"),
            Kind::And(c) => {
                f.write_str("And")?;
                f.debug_list().entries(c).finish()
            }
            Kind::Or(c) => {
                f.write_str("Or")?;
                f.debug_list().entries(c).finish()
            }
        }
    }
}

/// PDDL rendering over predicates `(z<i>)`: `⊤` prints as `(and)` and `⊥` as `(or)`.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::True => f.write_str("(and)"),
            Kind::False => f.write_str("(or)"),
            Kind::Var(i) => write!(f, "(z{i})"),
            Kind::NegVar(i) => write!(f, "(not (z{i}))"),
            Kind::And(c) | Kind::Or(c) => {
                f.write_str(if matches!(self.0.kind, Kind::And(_)) {
                    "(and"
                } else {
                    "(or"
                })?;
                for child in c {
                    write!(f, " {child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn evaluate(f: &Formula, assignment: &BitVector) -> Result<bool, FormulaError> {
    if let Some(index) = f.max_var() {
        if index >= assignment.width() {
            return Err(FormulaError::VariableOutOfRange {
                index,
                width: assignment.width(),
            });
        }
    }
    let mut memo = HashMap::new();
    Ok(eval_rec(f, assignment, &mut memo))
}

fn eval_rec(f: &Formula, x: &BitVector, memo: &mut HashMap<*const Node, bool>) -> bool {
    // unshared nodes are visited once, so only shared ones are memoised
    let shared = Arc::strong_count(&f.0) > 1;
    if shared {
        if let Some(&v) = memo.get(&f.ptr()) {
            return v;
        }
    }
    let v = match &f.0.kind {
        Kind::True => true,
        Kind::False => false,
        Kind::Var(i) => x.get(*i),
        Kind::NegVar(i) => !x.get(*i),
        Kind::And(c) => c.iter().all(|c| eval_rec(c, x, memo)),
        Kind::Or(c) => c.iter().any(|c| eval_rec(c, x, memo)),
    };
    if shared {
        memo.insert(f.ptr(), v);
    }
    v
}

/// Applies `v∧⊤=v`, `v∨⊥=v`, `v∧¬v=⊥`, `v∨¬v=⊤` (the last two on
/// literals), constant absorption, duplicate removal and single-child
/// unwrapping, bottom-up to a fixpoint. Children are put in a canonical order.
/// Nested conjunctions are not merged into their parents.
pub fn simplify(f: &Formula) -> Formula {
    Simplifier::default().run(f)
}

#[derive(Default)]
struct Simplifier {
    memo: HashMap<*const Node, Formula>,
}

impl Simplifier {
    fn run(&mut self, f: &Formula) -> Formula {
        if f.0.simplified {
            return f.clone();
        }
        if let Some(done) = self.memo.get(&f.ptr()) {
            return done.clone();
        }
        let out = match &f.0.kind {
            Kind::And(c) => {
                let c = c.iter().map(|c| self.run(c)).collect();
                simplify_junction(true, c)
            }
            Kind::Or(c) => {
                let c = c.iter().map(|c| self.run(c)).collect();
                simplify_junction(false, c)
            }
            _ => f.clone(),
        };
        self.memo.insert(f.ptr(), out.clone());
        out
    }
}

fn simplify_junction(is_and: bool, children: Vec<Formula>) -> Formula {
    let absorbing = !is_and;
    let mut kept: Vec<Formula> = Vec::with_capacity(children.len());
    let mut seen: HashSet<Formula> = HashSet::with_capacity(children.len());
    let mut positive = HashSet::new();
    let mut negative = HashSet::new();
    for c in children {
        match c.kind() {
            Kind::True | Kind::False => {
                if c.is_true() == absorbing {
                    return Formula::constant(absorbing);
                }
                continue;
            }
            Kind::Var(i) => {
                if negative.contains(i) {
                    return Formula::constant(absorbing);
                }
                positive.insert(*i);
            }
            Kind::NegVar(i) => {
                if positive.contains(i) {
                    return Formula::constant(absorbing);
                }
                negative.insert(*i);
            }
            _ => {}
        }
        if seen.insert(c.clone()) {
            kept.push(c);
        }
    }
    match kept.len() {
        0 => Formula::constant(!absorbing),
        1 => kept.pop().unwrap(),
        _ => {
            kept.sort_by_key(|c| c.order_key());
            let kind = if is_and {
                Kind::And(kept)
            } else {
                Kind::Or(kept)
            };
            Formula::build(kind, true)
        }
    }
}

/// Conjunction of already-built formulas, simplified at the top level.
pub fn conjoin(children: Vec<Formula>) -> Formula {
    simplify(&Formula::and(children))
}

/// Disjunction of already-built formulas, simplified at the top level.
pub fn disjoin(children: Vec<Formula>) -> Formula {
    simplify(&Formula::or(children))
}

/// NNF negation via De Morgan. The result is not re-simplified.
pub fn negate(f: &Formula) -> Formula {
    fn run(f: &Formula, memo: &mut HashMap<*const Node, Formula>) -> Formula {
        if let Some(done) = memo.get(&f.ptr()) {
            return done.clone();
        }
        let out = match f.kind() {
            Kind::True => Formula::bottom(),
            Kind::False => Formula::top(),
            Kind::Var(i) => Formula::neg_var(*i),
            Kind::NegVar(i) => Formula::var(*i),
            Kind::And(c) => Formula::or(c.iter().map(|c| run(c, memo)).collect()),
            Kind::Or(c) => Formula::and(c.iter().map(|c| run(c, memo)).collect()),
        };
        memo.insert(f.ptr(), out.clone());
        out
    }
    run(f, &mut HashMap::new())
}

pub fn metrics(f: &Formula) -> FormulaMetrics {
    f.metrics()
}

/// Rebuilds `f` bottom-up, replacing every literal with `map(index, positive)`.
/// Shared subformulas are rewritten once.
pub fn map_literals<E>(
    f: &Formula,
    mut map: impl FnMut(usize, bool) -> Result<Formula, E>,
) -> Result<Formula, E> {
    fn run<E>(
        f: &Formula,
        map: &mut dyn FnMut(usize, bool) -> Result<Formula, E>,
        memo: &mut HashMap<*const Node, Formula>,
    ) -> Result<Formula, E> {
        if let Some(done) = memo.get(&f.ptr()) {
            return Ok(done.clone());
        }
        let out = match f.kind() {
            Kind::True | Kind::False => f.clone(),
            Kind::Var(i) => map(*i, true)?,
            Kind::NegVar(i) => map(*i, false)?,
            Kind::And(c) => {
                let c: Vec<Formula> = c
                    .iter()
                    .map(|c| run(c, map, memo))
                    .collect::<Result<_, _>>()?;
                simplify_junction(true, c.iter().map(simplify).collect())
            }
            Kind::Or(c) => {
                let c: Vec<Formula> = c
                    .iter()
                    .map(|c| run(c, map, memo))
                    .collect::<Result<_, _>>()?;
                simplify_junction(false, c.iter().map(simplify).collect())
            }
        };
        memo.insert(f.ptr(), out.clone());
        Ok(out)
    }
    run(f, &mut map, &mut HashMap::new())
}

/// Number of distinct And/Or nodes in the DAG.
pub fn gate_count(f: &Formula) -> usize {
    fn run(f: &Formula, seen: &mut HashSet<*const Node>) {
        if let Kind::And(c) | Kind::Or(c) = f.kind() {
            if seen.insert(f.ptr()) {
                for c in c {
                    run(c, seen);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    run(f, &mut seen);
    seen.len()
}

/// A formula DAG lowered to a flat gate list for repeated evaluation.
///
/// Structurally equal subformulas are merged, so evaluation costs one pass
/// over the distinct nodes regardless of how large the tree expansion is.
#[derive(Debug, Clone)]
pub struct Circuit {
    gates: Vec<Gate>,
    operands: Vec<u32>,
    outputs: Vec<u32>,
    min_width: usize,
}

#[derive(Debug, Clone, Copy)]
enum Gate {
    Const(bool),
    Lit(u32, bool),
    And(u32, u32),
    Or(u32, u32),
}

impl Circuit {
    pub fn new<'a>(roots: impl IntoIterator<Item = &'a Formula>) -> Circuit {
        let mut c = Circuit {
            gates: Vec::new(),
            operands: Vec::new(),
            outputs: Vec::new(),
            min_width: 0,
        };
        let mut ids: HashMap<Formula, u32> = HashMap::new();
        for root in roots {
            let id = c.lower(root, &mut ids);
            c.outputs.push(id);
            if let Some(m) = root.max_var() {
                c.min_width = c.min_width.max(m + 1);
            }
        }
        c
    }

    fn lower(&mut self, f: &Formula, ids: &mut HashMap<Formula, u32>) -> u32 {
        if let Some(&id) = ids.get(f) {
            return id;
        }
        let gate = match f.kind() {
            Kind::True => Gate::Const(true),
            Kind::False => Gate::Const(false),
            Kind::Var(i) => Gate::Lit(*i as u32, true),
            Kind::NegVar(i) => Gate::Lit(*i as u32, false),
            Kind::And(ch) | Kind::Or(ch) => {
                let child_ids: Vec<u32> = ch.iter().map(|c| self.lower(c, ids)).collect();
                let start = self.operands.len() as u32;
                self.operands.extend(child_ids);
                let end = self.operands.len() as u32;
                if matches!(f.kind(), Kind::And(_)) {
                    Gate::And(start, end)
                } else {
                    Gate::Or(start, end)
                }
            }
        };
        let id = self.gates.len() as u32;
        self.gates.push(gate);
        ids.insert(f.clone(), id);
        id
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Smallest assignment width this circuit can be evaluated on.
    pub fn min_width(&self) -> usize {
        self.min_width
    }

    /// Evaluates every gate; `values` is scratch space reused across calls.
    pub fn eval_into(&self, x: &BitVector, values: &mut Vec<bool>) {
        assert!(
            x.width() >= self.min_width,
            "assignment width {} below circuit width {}",
            x.width(),
            self.min_width
        );
        values.clear();
        values.reserve(self.gates.len());
        for g in &self.gates {
            let v = match *g {
                Gate::Const(b) => b,
                Gate::Lit(i, pos) => x.get(i as usize) == pos,
                Gate::And(s, e) => self.operands[s as usize..e as usize]
                    .iter()
                    .all(|&o| values[o as usize]),
                Gate::Or(s, e) => self.operands[s as usize..e as usize]
                    .iter()
                    .any(|&o| values[o as usize]),
            };
            values.push(v);
        }
    }

    pub fn output(&self, values: &[bool], k: usize) -> bool {
        values[self.outputs[k] as usize]
    }

    pub fn eval(&self, x: &BitVector) -> Vec<bool> {
        let mut values = Vec::new();
        self.eval_into(x, &mut values);
        self.outputs.iter().map(|&o| values[o as usize]).collect()
    }

    pub fn eval_first(&self, x: &BitVector) -> bool {
        let mut values = Vec::new();
        self.eval_into(x, &mut values);
        values[self.outputs[0] as usize]
    }
}

/// A conjunction of literals over a fixed variable universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub positive: BitVector,
    pub negative: BitVector,
}

impl Term {
    pub fn empty(width: usize) -> Term {
        Term {
            positive: BitVector::zeros(width),
            negative: BitVector::zeros(width),
        }
    }

    pub fn len(&self) -> usize {
        self.positive.count_ones() + self.negative.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_formula(&self) -> Formula {
        let mut lits: Vec<Formula> = self.positive.iter_ones().map(Formula::var).collect();
        lits.extend(self.negative.iter_ones().map(Formula::neg_var));
        conjoin(lits)
    }
}

/// Result of disjunction flattening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dnf {
    Terms(Vec<Term>),
    /// The expansion was abandoned, holding `materialized` terms in its
    /// largest intermediate set at that point.
    CapExceeded {
        materialized: u64,
    },
}

impl Dnf {
    pub fn term_count(&self) -> Option<usize> {
        match self {
            Dnf::Terms(t) => Some(t.len()),
            Dnf::CapExceeded { .. } => None,
        }
    }
}

/// Term conjunctions attempted per unit of cap before flattening gives up.
pub const FLATTEN_WORK_PER_TERM: u64 = 1000;

/// Positive words followed by negative words.
type Packed = Box<[u64]>;

struct Flattener {
    words: usize,
    cap: usize,
    work_left: u64,
    largest: u64,
    memo: HashMap<*const Node, Rc<Vec<Packed>>>,
}

impl Flattener {
    fn literal(&self, i: usize, positive: bool) -> Packed {
        let mut t = vec![0u64; 2 * self.words];
        t[i / 64 + if positive { 0 } else { self.words }] |= 1 << (i % 64);
        t.into_boxed_slice()
    }

    fn conjoin(&self, a: &[u64], b: &[u64]) -> Option<Packed> {
        let t: Packed = a.iter().zip(b).map(|(x, y)| x | y).collect();
        let (pos, neg) = t.split_at(self.words);
        pos.iter().zip(neg).all(|(p, n)| p & n == 0).then_some(t)
    }

    fn grew(&mut self, n: usize) -> Result<(), ()> {
        self.largest = self.largest.max(n as u64);
        if n > self.cap {
            Err(())
        } else {
            Ok(())
        }
    }

    fn run(&mut self, f: &Formula) -> Result<Rc<Vec<Packed>>, ()> {
        if let Some(done) = self.memo.get(&f.ptr()) {
            return Ok(done.clone());
        }
        let terms = match f.kind() {
            Kind::True => vec![vec![0u64; 2 * self.words].into_boxed_slice()],
            Kind::False => Vec::new(),
            Kind::Var(i) => vec![self.literal(*i, true)],
            Kind::NegVar(i) => vec![self.literal(*i, false)],
            Kind::And(children) => {
                let mut acc = vec![vec![0u64; 2 * self.words].into_boxed_slice()];
                for c in children {
                    let rhs = self.run(c)?;
                    let pairs = (acc.len() as u64).saturating_mul(rhs.len() as u64);
                    if pairs > self.work_left {
                        return Err(());
                    }
                    self.work_left -= pairs;
                    let mut next = Vec::new();
                    let mut seen = HashSet::new();
                    for a in &acc {
                        for b in rhs.iter() {
                            if let Some(t) = self.conjoin(a, b) {
                                if seen.insert(t.clone()) {
                                    next.push(t);
                                    self.grew(next.len())?;
                                }
                            }
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            Kind::Or(children) => {
                let mut acc = Vec::new();
                let mut seen = HashSet::new();
                for c in children {
                    for t in self.run(c)?.iter() {
                        if seen.insert(t.clone()) {
                            acc.push(t.clone());
                            self.grew(acc.len())?;
                        }
                    }
                }
                acc
            }
        };
        let terms = Rc::new(terms);
        self.memo.insert(f.ptr(), terms.clone());
        Ok(terms)
    }
}

/// Distributes conjunctions over disjunctions, left to right, until the
/// formula is a disjunction of literal conjunctions. Contradictory terms are
/// dropped and duplicates merged. Gives up with `CapExceeded` as soon as an
/// intermediate term set grows past `cap`, or once more than
/// `cap * FLATTEN_WORK_PER_TERM` term conjunctions would be attempted.
pub fn flatten_to_dnf(f: &Formula, cap: usize) -> Dnf {
    let width = f.max_var().map_or(0, |m| m + 1);
    let words = width.div_ceil(64).max(1);
    let mut fl = Flattener {
        words,
        cap,
        work_left: (cap as u64).saturating_mul(FLATTEN_WORK_PER_TERM),
        largest: 0,
        memo: HashMap::new(),
    };
    match fl.run(f) {
        Ok(terms) => {
            let unpack = |half: &[u64]| {
                BitVector::from_indices(
                    width,
                    (0..width).filter(|&i| half[i / 64] >> (i % 64) & 1 == 1),
                )
            };
            Dnf::Terms(
                terms
                    .iter()
                    .map(|t| Term {
                        positive: unpack(&t[..words]),
                        negative: unpack(&t[words..]),
                    })
                    .collect(),
            )
        }
        Err(()) => Dnf::CapExceeded {
            materialized: fl.largest,
        },
    }
}
