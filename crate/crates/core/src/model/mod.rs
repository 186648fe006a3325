//! Per-action classifiers learned from labeled transitions.
//!
//! For every action `a` and state bit `f` an effect classifier predicts the
//! successor bit from the current state. A precondition classifier separates
//! the action's own transitions `(z0;z1)` from all other transitions, trained
//! positive-vs-unlabeled and rescaled by its mean score on held-out positives.

mod bundle;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bits::BitVector;
use crate::compile::{
    forest_to_formula, forest_to_formula_with, substitute_successor, ActionSchema, CompileError,
    GateOutput, PddlDocument,
};
use crate::dataset::{GroundTruthDomain, TransitionDataset};
use crate::forest::{train_forest, ForestError, ForestParams, RandomForest};
use crate::formula::{Circuit, Formula};

pub use bundle::{read_bundle, write_bundle, BundleError, MANIFEST_FILE};

/// Lower clamp of the positive-validation mean score.
pub const PU_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset has no action labels")]
    Unlabeled,
    #[error("no action has any transition")]
    NoActions,
    #[error("state width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("action {0} has no compiled formulas")]
    NotCompiled(usize),
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// The transitions of one action and the inputs its classifiers see.
#[derive(Debug, Clone)]
pub struct ActionPartition {
    pub action: usize,
    pub before: Vec<BitVector>,
    pub after: Vec<BitVector>,
    /// `before ; after` of this action's transitions.
    pub joint: Vec<BitVector>,
    /// `before ; after` of every other action's transitions.
    pub others: Vec<BitVector>,
    /// `before` of every other action's transitions.
    pub others_before: Vec<BitVector>,
}

/// One partition per label that occurs in the dataset, in label order.
/// Labels without transitions are skipped with a warning.
pub fn partition(ds: &TransitionDataset) -> Result<Vec<ActionPartition>, ModelError> {
    let labels = ds.label_count().ok_or(ModelError::Unlabeled)?;
    let mut parts: Vec<ActionPartition> = (0..labels)
        .map(|action| ActionPartition {
            action,
            before: Vec::new(),
            after: Vec::new(),
            joint: Vec::new(),
            others: Vec::new(),
            others_before: Vec::new(),
        })
        .collect();
    let joints: Vec<BitVector> = ds.transitions().iter().map(|t| t.joint()).collect();
    for (t, joint) in ds.transitions().iter().zip(&joints) {
        let a = t.label.expect("labeled dataset");
        parts[a].before.push(t.before.clone());
        parts[a].after.push(t.after.clone());
        parts[a].joint.push(joint.clone());
    }
    for p in &mut parts {
        for (t, joint) in ds.transitions().iter().zip(&joints) {
            if t.label != Some(p.action) {
                p.others.push(joint.clone());
                p.others_before.push(t.before.clone());
            }
        }
    }
    let (kept, dropped): (Vec<_>, Vec<_>) = parts.into_iter().partition(|p| !p.before.is_empty());
    for p in dropped {
        log::warn!("action {} has no transitions and is dropped", p.action);
    }
    if kept.is_empty() {
        return Err(ModelError::NoActions);
    }
    Ok(kept)
}

/// What the precondition classifier is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// `z0 ; z1`, width `2F`.
    Joint,
    /// `z0` only, width `F`.
    CurrentOnly,
}

/// How an applicability decision is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// `min(1, average / c) > 0.5`.
    Corrected,
    /// Plain majority vote of the precondition forest.
    Vote,
    /// The compiled precondition formula on `z0`.
    Compiled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub forest: ForestParams,
    /// Share of positives held out to estimate `c`.
    pub validation_fraction: f64,
    pub input: InputMode,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            forest: ForestParams::default(),
            validation_fraction: 0.2,
            input: InputMode::Joint,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(ModelError::InvalidParams(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the classifier for action `a`; `bit` is `None` for the precondition.
pub fn classifier_seed(seed: u64, action: usize, bit: Option<usize>) -> u64 {
    let kind = bit.map_or(u64::MAX, |b| b as u64);
    splitmix(splitmix(splitmix(seed) ^ action as u64) ^ kind)
}

/// Classifier from the current state to successor bit `f`.
pub fn train_effects(
    p: &ActionPartition,
    f: usize,
    params: &ForestParams,
) -> Result<RandomForest, ModelError> {
    let labels: Vec<bool> = p.after.iter().map(|z| z.get(f)).collect();
    let params = ForestParams {
        seed: classifier_seed(params.seed, p.action, Some(f)),
        ..params.clone()
    };
    Ok(train_forest(&p.before, &labels, &params)?)
}

/// Positive-vs-unlabeled precondition classifier and its correction constant `c`.
pub fn train_precondition(
    p: &ActionPartition,
    params: &ModelParams,
) -> Result<(RandomForest, f64), ModelError> {
    params.validate()?;
    let (positives, unlabeled) = match params.input {
        InputMode::Joint => (&p.joint, &p.others),
        InputMode::CurrentOnly => (&p.before, &p.others_before),
    };
    let seed = classifier_seed(params.forest.seed, p.action, None);
    let forest_params = ForestParams {
        seed,
        ..params.forest.clone()
    };

    let mut order: Vec<usize> = (0..positives.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = (params.validation_fraction * positives.len() as f64).round() as usize;
    let held = if positives.len() >= 2 && params.validation_fraction > 0.0 {
        held.clamp(1, positives.len() - 1)
    } else {
        0
    };
    if held == 0 && params.validation_fraction > 0.0 {
        log::warn!(
            "action {} has {} positive(s); training its precondition without correction",
            p.action,
            positives.len()
        );
    }
    let (validation, training) = order.split_at(held);

    let mut xs: Vec<BitVector> = training.iter().map(|&i| positives[i].clone()).collect();
    let mut ys = vec![true; xs.len()];
    xs.extend(unlabeled.iter().cloned());
    ys.resize(xs.len(), false);
    let forest = train_forest(&xs, &ys, &forest_params)?;

    let c = if validation.is_empty() {
        1.0
    } else {
        let sum: f64 = validation
            .iter()
            .map(|&i| forest.predict_average(&positives[i]))
            .sum::<Result<f64, _>>()?;
        (sum / validation.len() as f64).clamp(PU_EPSILON, 1.0)
    };
    Ok((forest, c))
}

/// `min(1, average / c)`.
pub fn corrected_score(average: f64, c: f64) -> f64 {
    (average / c).min(1.0)
}

/// The trained classifiers of one action.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAction {
    pub action: usize,
    pub width: usize,
    pub effect_forests: Vec<RandomForest>,
    pub precondition_forest: RandomForest,
    pub pu_constant: f64,
    pub input: InputMode,
}

impl TrainedAction {
    fn check(&self, s: &BitVector) -> Result<(), ModelError> {
        if s.width() != self.width {
            return Err(ModelError::WidthMismatch {
                expected: self.width,
                found: s.width(),
            });
        }
        Ok(())
    }

    /// Successor by voting each effect forest on `s`.
    pub fn predict_successor(&self, s: &BitVector) -> Result<BitVector, ModelError> {
        self.check(s)?;
        let bits = self
            .effect_forests
            .iter()
            .map(|f| f.predict_vote(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitVector::from_bools(&bits))
    }

    fn precondition_input(&self, z0: &BitVector, z1: &BitVector) -> BitVector {
        match self.input {
            InputMode::Joint => z0.concat(z1),
            InputMode::CurrentOnly => z0.clone(),
        }
    }

    /// Corrected precondition score of the transition `z0 → z1`.
    pub fn precondition_score(&self, z0: &BitVector, z1: &BitVector) -> Result<f64, ModelError> {
        self.check(z0)?;
        self.check(z1)?;
        let avg = self
            .precondition_forest
            .predict_average(&self.precondition_input(z0, z1))?;
        Ok(corrected_score(avg, self.pu_constant))
    }

    /// Applicability of the transition `z0 → z1` by the forest (not the compiled formula).
    pub fn applicable(
        &self,
        z0: &BitVector,
        z1: &BitVector,
        decision: Decision,
    ) -> Result<bool, ModelError> {
        match decision {
            Decision::Corrected => Ok(self.precondition_score(z0, z1)? > 0.5),
            Decision::Vote => {
                self.check(z0)?;
                self.check(z1)?;
                Ok(self
                    .precondition_forest
                    .predict_vote(&self.precondition_input(z0, z1))?)
            }
            Decision::Compiled => Err(ModelError::NotCompiled(self.action)),
        }
    }
}

/// Trains every action's classifiers. Per-classifier seeds make the result
/// independent of scheduling.
pub fn train_actions(
    ds: &TransitionDataset,
    params: &ModelParams,
) -> Result<Vec<TrainedAction>, ModelError> {
    params.validate()?;
    let parts = partition(ds)?;
    let width = ds.width();
    parts
        .par_iter()
        .map(|p| {
            let effect_forests = (0..width)
                .into_par_iter()
                .map(|f| train_effects(p, f, &params.forest))
                .collect::<Result<Vec<_>, _>>()?;
            let (precondition_forest, pu_constant) = train_precondition(p, params)?;
            Ok(TrainedAction {
                action: p.action,
                width,
                effect_forests,
                precondition_forest,
                pu_constant,
                input: params.input,
            })
        })
        .collect()
}

/// A trained action together with its compiled formulas.
#[derive(Debug, Clone)]
pub struct ActionModel {
    pub trained: TrainedAction,
    /// Over current-state variables, successor variables substituted away.
    pub precondition: Formula,
    pub effect_conditions: Vec<Formula>,
    circuit: Circuit,
}

impl ActionModel {
    pub fn action(&self) -> usize {
        self.trained.action
    }

    pub fn width(&self) -> usize {
        self.trained.width
    }

    pub fn pu_constant(&self) -> f64 {
        self.trained.pu_constant
    }

    pub fn schema(&self) -> ActionSchema {
        ActionSchema {
            id: self.action(),
            precondition: self.precondition.clone(),
            effects: self.effect_conditions.clone(),
        }
    }

    /// Compiled precondition evaluated on `s`.
    pub fn precondition_holds(&self, s: &BitVector) -> Result<bool, ModelError> {
        self.trained.check(s)?;
        Ok(self.circuit.eval_first(s))
    }

    pub fn applicable(
        &self,
        z0: &BitVector,
        z1: &BitVector,
        decision: Decision,
    ) -> Result<bool, ModelError> {
        match decision {
            Decision::Compiled => self.precondition_holds(z0),
            other => self.trained.applicable(z0, z1, other),
        }
    }
}

/// How a successor is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyMode {
    Vote,
    Formula,
}

/// Successor of `s` under the model's effects (preconditions are not checked).
pub fn apply_model(
    m: &ActionModel,
    s: &BitVector,
    mode: ApplyMode,
) -> Result<BitVector, ModelError> {
    match mode {
        ApplyMode::Vote => m.trained.predict_successor(s),
        ApplyMode::Formula => {
            m.trained.check(s)?;
            let out = m.circuit.eval(s);
            Ok(BitVector::from_bools(&out[1..]))
        }
    }
}

/// Compiles one trained action. With `pu_adjusted_gate` the precondition
/// gate output is shifted by the action's `c`.
pub fn compile_action(
    t: &TrainedAction,
    pu_adjusted_gate: bool,
) -> Result<ActionModel, ModelError> {
    let effect_conditions = t
        .effect_forests
        .iter()
        .map(|f| forest_to_formula(f).map(|(g, _)| g))
        .collect::<Result<Vec<_>, _>>()?;
    let gate = if pu_adjusted_gate {
        GateOutput::PuAdjusted { c: t.pu_constant }
    } else {
        GateOutput::Majority
    };
    let (raw, _) = forest_to_formula_with(&t.precondition_forest, gate)?;
    let precondition = match t.input {
        InputMode::Joint => substitute_successor(&raw, &effect_conditions)?,
        InputMode::CurrentOnly => raw,
    };
    let circuit = Circuit::new(std::iter::once(&precondition).chain(&effect_conditions));
    Ok(ActionModel {
        trained: t.clone(),
        precondition,
        effect_conditions,
        circuit,
    })
}

/// Compiles every action, in parallel.
pub fn assemble(
    trained: &[TrainedAction],
    pu_adjusted_gate: bool,
) -> Result<Vec<ActionModel>, ModelError> {
    trained
        .par_iter()
        .map(|t| compile_action(t, pu_adjusted_gate))
        .collect()
}

/// Domain document of compiled actions, in the given order.
pub fn to_document(domain_name: &str, models: &[ActionModel]) -> PddlDocument {
    PddlDocument {
        domain_name: domain_name.to_string(),
        width: models.first().map_or(0, ActionModel::width),
        actions: models.iter().map(ActionModel::schema).collect(),
    }
}

/// Anything that predicts successors for one action label.
pub trait SuccessorModel: Sync {
    fn action(&self) -> usize;
    fn successor(&self, s: &BitVector) -> Result<BitVector, ModelError>;
}

/// Anything that decides applicability of an observed transition.
pub trait ApplicabilityModel: Sync {
    fn action(&self) -> usize;
    fn applicable(
        &self,
        z0: &BitVector,
        z1: &BitVector,
        decision: Decision,
    ) -> Result<bool, ModelError>;
}

impl SuccessorModel for TrainedAction {
    fn action(&self) -> usize {
        self.action
    }
    fn successor(&self, s: &BitVector) -> Result<BitVector, ModelError> {
        self.predict_successor(s)
    }
}

impl ApplicabilityModel for TrainedAction {
    fn action(&self) -> usize {
        self.action
    }
    fn applicable(
        &self,
        z0: &BitVector,
        z1: &BitVector,
        decision: Decision,
    ) -> Result<bool, ModelError> {
        TrainedAction::applicable(self, z0, z1, decision)
    }
}

impl SuccessorModel for ActionModel {
    fn action(&self) -> usize {
        self.trained.action
    }
    fn successor(&self, s: &BitVector) -> Result<BitVector, ModelError> {
        apply_model(self, s, ApplyMode::Formula)
    }
}

impl ApplicabilityModel for ActionModel {
    fn action(&self) -> usize {
        self.trained.action
    }
    fn applicable(
        &self,
        z0: &BitVector,
        z1: &BitVector,
        decision: Decision,
    ) -> Result<bool, ModelError> {
        ActionModel::applicable(self, z0, z1, decision)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionAccuracy {
    pub action: usize,
    pub transitions: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    /// Mean over transitions and bits of correctly predicted successor bits.
    pub accuracy: f64,
    pub per_action: Vec<ActionAccuracy>,
    /// Transitions whose label has no model; scored as all bits wrong.
    pub unmodeled: usize,
}

/// Successor-bit accuracy on a labeled test set, using each transition's label
/// to pick the model.
pub fn evaluate_effects<M: SuccessorModel>(
    models: &[M],
    test: &TransitionDataset,
) -> Result<EffectReport, ModelError> {
    let labels = test.label_count().ok_or(ModelError::Unlabeled)?;
    let mut by_label: Vec<Option<&M>> = vec![None; labels];
    for m in models {
        if m.action() < labels {
            by_label[m.action()] = Some(m);
        }
    }
    let width = test.width();
    let scored: Vec<(usize, Option<usize>)> = test
        .transitions()
        .par_iter()
        .map(|t| {
            let l = t.label.expect("labeled dataset");
            match by_label[l] {
                Some(m) => m
                    .successor(&t.before)
                    .map(|p| (l, Some(width - p.hamming(&t.after)))),
                None => Ok((l, None)),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut correct = vec![0usize; labels];
    let mut count = vec![0usize; labels];
    let mut unmodeled = 0;
    for (l, c) in scored {
        count[l] += 1;
        match c {
            Some(c) => correct[l] += c,
            None => unmodeled += 1,
        }
    }
    let total: usize = correct.iter().sum();
    let accuracy = if test.is_empty() {
        0.0
    } else {
        total as f64 / (test.len() * width) as f64
    };
    let per_action = (0..labels)
        .filter(|&l| count[l] > 0)
        .map(|l| ActionAccuracy {
            action: l,
            transitions: count[l],
            accuracy: correct[l] as f64 / (count[l] * width) as f64,
        })
        .collect();
    Ok(EffectReport {
        accuracy,
        per_action,
        unmodeled,
    })
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }

    /// `P(predicted | truth)`; `None` without positives.
    pub fn recall(&self) -> Option<f64> {
        let p = self.tp + self.fn_;
        (p > 0).then(|| self.tp as f64 / p as f64)
    }

    /// `P(not predicted | not truth)`; `None` without negatives.
    pub fn specificity(&self) -> Option<f64> {
        let n = self.tn + self.fp;
        (n > 0).then(|| self.tn as f64 / n as f64)
    }

    /// True when recall or specificity is undefined.
    pub fn degenerate(&self) -> bool {
        self.recall().is_none() || self.specificity().is_none()
    }

    /// Harmonic mean of recall and specificity; 0 when either is undefined or both are 0.
    pub fn f_measure(&self) -> f64 {
        match (self.recall(), self.specificity()) {
            (Some(r), Some(s)) if r + s > 0.0 => 2.0 * r * s / (r + s),
            _ => 0.0,
        }
    }
}

/// How learned labels relate to oracle actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionMapping {
    /// Labels are the oracle's own action ids.
    Identity,
    /// Label `a` stands for any oracle action whose flip mask equals `centroids[a]`.
    Signatures(Vec<BitVector>),
}

impl ActionMapping {
    /// Whether `z0 → z1` is a genuine occurrence of label `a`.
    pub fn ground_truth(
        &self,
        oracle: &dyn GroundTruthDomain,
        a: usize,
        z0: &BitVector,
        z1: &BitVector,
    ) -> bool {
        match self {
            ActionMapping::Identity => {
                a < oracle.action_count() && oracle.apply(z0, a).as_ref() == Some(z1)
            }
            ActionMapping::Signatures(centroids) => {
                centroids.get(a).is_some_and(|c| &z0.xor(z1) == c)
                    && (0..oracle.action_count()).any(|b| oracle.apply(z0, b).as_ref() == Some(z1))
            }
        }
    }

    /// Oracle actions that realise label `a` from state `s`, with their successors.
    pub fn oracle_moves(
        &self,
        oracle: &dyn GroundTruthDomain,
        a: usize,
        s: &BitVector,
    ) -> Vec<(usize, BitVector)> {
        match self {
            ActionMapping::Identity => oracle.apply(s, a).map(|n| vec![(a, n)]).unwrap_or_default(),
            ActionMapping::Signatures(centroids) => match centroids.get(a) {
                None => Vec::new(),
                Some(c) => (0..oracle.action_count())
                    .filter_map(|b| oracle.apply(s, b).map(|n| (b, n)))
                    .filter(|(_, n)| &s.xor(n) == c)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionReport {
    pub pooled: Confusion,
    pub per_action: Vec<(usize, Confusion)>,
}

impl PreconditionReport {
    pub fn recall(&self) -> Option<f64> {
        self.pooled.recall()
    }
    pub fn specificity(&self) -> Option<f64> {
        self.pooled.specificity()
    }
    pub fn f_measure(&self) -> f64 {
        self.pooled.f_measure()
    }
    pub fn degenerate(&self) -> bool {
        self.pooled.degenerate()
    }
}

/// Scores every (test transition, model) pair: truth from the oracle, prediction
/// from the model's applicability decision. Counts are pooled over actions.
pub fn evaluate_preconditions<M: ApplicabilityModel>(
    models: &[M],
    test: &TransitionDataset,
    oracle: &dyn GroundTruthDomain,
    mapping: &ActionMapping,
    decision: Decision,
) -> Result<PreconditionReport, ModelError> {
    let per_action = models
        .par_iter()
        .map(|m| {
            let mut c = Confusion::default();
            for t in test.transitions() {
                let truth = mapping.ground_truth(oracle, m.action(), &t.before, &t.after);
                c.add(truth, m.applicable(&t.before, &t.after, decision)?);
            }
            Ok((m.action(), c))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let mut pooled = Confusion::default();
    for (_, c) in &per_action {
        pooled.merge(c);
    }
    Ok(PreconditionReport { pooled, per_action })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_lights_out, sample_transitions, Transition};
    use crate::formula::evaluate;

    fn bits(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    fn all_states(width: usize) -> Vec<BitVector> {
        (0..1u64 << width)
            .map(|x| BitVector::from_u64(width, x))
            .collect()
    }

    #[test]
    fn partition_counts() {
        let t = |l| Transition::new(bits("01"), bits("10"), Some(l));
        let ds = TransitionDataset::new(2, vec![t(0), t(1), t(0), t(1), t(0)], Some(2)).unwrap();
        let parts = partition(&ds).unwrap();
        assert_eq!((parts[0].joint.len(), parts[0].others.len()), (3, 2));
        assert_eq!((parts[1].joint.len(), parts[1].others.len()), (2, 3));
        assert!(parts[0].joint.iter().all(|z| z.width() == 4));
    }

    #[test]
    fn partition_drops_empty_actions() {
        let t = |l| Transition::new(bits("01"), bits("10"), Some(l));
        let ds = TransitionDataset::new(2, vec![t(0), t(2)], Some(3)).unwrap();
        let parts = partition(&ds).unwrap();
        assert_eq!(
            parts.iter().map(|p| p.action).collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert!(matches!(
            partition(&ds.without_labels()),
            Err(ModelError::Unlabeled)
        ));
    }

    #[test]
    fn lights_out_partition_covers_dataset() {
        let d = make_lights_out(4).unwrap();
        let ds = sample_transitions(&d, 9000, 1).unwrap();
        let parts = partition(&ds).unwrap();
        assert_eq!(parts.iter().map(|p| p.joint.len()).sum::<usize>(), 9000);
        for p in &parts {
            assert_eq!(p.joint.len() + p.others.len(), 9000);
            assert!(p.joint.iter().all(|z| z.width() == 32));
        }
    }

    fn small_lights_out_models(seed: u64) -> (crate::dataset::LightsOut, Vec<TrainedAction>) {
        let d = make_lights_out(2).unwrap();
        let ds = sample_transitions(&d, 800, seed).unwrap();
        let params = ModelParams {
            forest: ForestParams::new(5, 6, seed),
            ..ModelParams::default()
        };
        (d, train_actions(&ds, &params).unwrap())
    }

    #[test]
    fn lights_out_effects_are_identity_or_negation() {
        let (d, trained) = small_lights_out_models(3);
        for t in &trained {
            for s in all_states(4) {
                for f in 0..4 {
                    let expected = s.get(f) ^ d.mask(t.action).get(f);
                    assert_eq!(t.effect_forests[f].predict_vote(&s).unwrap(), expected);
                }
            }
        }
    }

    #[test]
    fn compiled_models_agree_with_votes() {
        let (d, trained) = small_lights_out_models(4);
        let models = assemble(&trained, false).unwrap();
        assert_eq!(models.len(), 4);
        for m in &models {
            assert_eq!(m.effect_conditions.len(), 4);
            assert!(m.precondition.max_var().is_none_or(|i| i < 4));
            for s in all_states(4) {
                let vote = apply_model(m, &s, ApplyMode::Vote).unwrap();
                assert_eq!(apply_model(m, &s, ApplyMode::Formula).unwrap(), vote);
                assert_eq!(vote, s.xor(d.mask(m.action())));
                for (f, e) in m.effect_conditions.iter().enumerate() {
                    assert_eq!(
                        evaluate(e, &s).unwrap(),
                        m.trained.effect_forests[f].predict_vote(&s).unwrap()
                    );
                }
                // the compiled precondition votes on (s ; predicted successor)
                let joint_vote = m
                    .trained
                    .precondition_forest
                    .predict_vote(&s.concat(&vote))
                    .unwrap();
                assert_eq!(m.precondition_holds(&s).unwrap(), joint_vote);
            }
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let (_, trained) = small_lights_out_models(5);
        assert!(matches!(
            trained[0].predict_successor(&BitVector::zeros(5)),
            Err(ModelError::WidthMismatch {
                expected: 4,
                found: 5
            })
        ));
        assert!(matches!(
            trained[0].applicable(
                &BitVector::zeros(4),
                &BitVector::zeros(4),
                Decision::Compiled
            ),
            Err(ModelError::NotCompiled(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (_, a) = small_lights_out_models(6);
        let (_, b) = small_lights_out_models(6);
        assert_eq!(a, b);
    }

    #[test]
    fn corrected_score_arithmetic() {
        assert!((corrected_score(0.4, 0.8) - 0.5).abs() < 1e-12);
        assert!(corrected_score(0.4, 0.8) <= 0.5 + 1e-12);
        assert_eq!(corrected_score(0.9, 0.5), 1.0);
        // c as the mean of the held-out scores
        let scores = [0.9, 0.7, 0.8];
        assert!((scores.iter().sum::<f64>() / 3.0 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pu_constant_lies_in_unit_interval() {
        let (_, trained) = small_lights_out_models(7);
        for t in &trained {
            assert!(t.pu_constant >= PU_EPSILON && t.pu_constant <= 1.0);
        }
    }

    #[test]
    fn tiny_partition_trains_without_correction() {
        let ds = TransitionDataset::new(
            2,
            vec![
                Transition::new(bits("00"), bits("10"), Some(0)),
                Transition::new(bits("01"), bits("11"), Some(1)),
                Transition::new(bits("11"), bits("01"), Some(1)),
            ],
            Some(2),
        )
        .unwrap();
        let parts = partition(&ds).unwrap();
        let (_, c) = train_precondition(&parts[0], &ModelParams::default()).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn corrected_recall_is_not_below_plain_recall() {
        let d = make_lights_out(3).unwrap();
        let ds = sample_transitions(&d, 3000, 11).unwrap();
        let (train, test) = crate::dataset::split(&ds, 0.9, 11).unwrap();
        let params = ModelParams {
            forest: ForestParams::new(10, 12, 11),
            ..ModelParams::default()
        };
        let trained = train_actions(&train, &params).unwrap();
        let corrected = evaluate_preconditions(
            &trained,
            &test,
            &d,
            &ActionMapping::Identity,
            Decision::Corrected,
        )
        .unwrap();
        let plain = evaluate_preconditions(
            &trained,
            &test,
            &d,
            &ActionMapping::Identity,
            Decision::Vote,
        )
        .unwrap();
        assert!(corrected.recall().unwrap() >= plain.recall().unwrap());
    }

    struct Oracle<'a>(&'a crate::dataset::LightsOut, usize);

    impl SuccessorModel for Oracle<'_> {
        fn action(&self) -> usize {
            self.1
        }
        fn successor(&self, s: &BitVector) -> Result<BitVector, ModelError> {
            Ok(self.0.apply(s, self.1).unwrap())
        }
    }

    struct Zeros(usize);

    impl SuccessorModel for Zeros {
        fn action(&self) -> usize {
            self.0
        }
        fn successor(&self, s: &BitVector) -> Result<BitVector, ModelError> {
            Ok(BitVector::zeros(s.width()))
        }
    }

    #[test]
    fn oracle_model_scores_perfectly() {
        let d = make_lights_out(3).unwrap();
        let test = sample_transitions(&d, 500, 2).unwrap();
        let oracle: Vec<Oracle> = (0..9).map(|a| Oracle(&d, a)).collect();
        let r = evaluate_effects(&oracle, &test).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.unmodeled, 0);
    }

    #[test]
    fn all_zero_model_is_near_chance() {
        let d = make_lights_out(4).unwrap();
        let test = sample_transitions(&d, 2000, 2).unwrap();
        let zeros: Vec<Zeros> = (0..16).map(Zeros).collect();
        let r = evaluate_effects(&zeros, &test).unwrap();
        assert!((r.accuracy - 0.5).abs() < 0.05, "{}", r.accuracy);
    }

    #[test]
    fn missing_models_count_as_wrong() {
        let d = make_lights_out(3).unwrap();
        let test = sample_transitions(&d, 300, 2).unwrap();
        let oracle: Vec<Oracle> = (0..8).map(|a| Oracle(&d, a)).collect();
        let r = evaluate_effects(&oracle, &test).unwrap();
        let missing = test
            .transitions()
            .iter()
            .filter(|t| t.label == Some(8))
            .count();
        assert_eq!(r.unmodeled, missing);
        assert!((r.accuracy - (300 - missing) as f64 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_arithmetic() {
        let c = Confusion {
            tp: 9,
            fn_: 1,
            tn: 7,
            fp: 3,
        };
        assert!((c.recall().unwrap() - 0.9).abs() < 1e-12);
        assert!((c.specificity().unwrap() - 0.7).abs() < 1e-12);
        assert!((c.f_measure() - 0.7875).abs() < 1e-12);
        let perfect = Confusion {
            tp: 4,
            fn_: 0,
            tn: 5,
            fp: 0,
        };
        assert_eq!(perfect.f_measure(), 1.0);
        let no_negatives = Confusion {
            tp: 4,
            ..Confusion::default()
        };
        assert!(no_negatives.degenerate());
        assert_eq!(no_negatives.f_measure(), 0.0);
        let zero_recall = Confusion {
            fn_: 2,
            tn: 3,
            ..Confusion::default()
        };
        assert_eq!(zero_recall.f_measure(), 0.0);
    }

    #[test]
    fn signature_mapping_ground_truth() {
        let d = make_lights_out(2).unwrap();
        let centroids: Vec<BitVector> = (0..4).map(|a| d.mask(a).clone()).collect();
        let mapping = ActionMapping::Signatures(centroids);
        let s = BitVector::zeros(4);
        let next = d.apply(&s, 2).unwrap();
        assert!(mapping.ground_truth(&d, 2, &s, &next));
        assert!(!mapping.ground_truth(&d, 1, &s, &next));
        assert!(!mapping.ground_truth(&d, 7, &s, &next));
        assert_eq!(mapping.oracle_moves(&d, 2, &s), vec![(2, next)]);
    }
}
