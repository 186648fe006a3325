//! Binary transition datasets: sampling from ground-truth simulators,
//! splitting, planning-instance generation and the line-oriented text format.
//!
//! The text format is one header line `F=<width> A=<labels|none>` followed by
//! one transition per line: `<before> <after>[ <label>]`, bits written as
//! `0`/`1` characters with index 0 first.

mod domains;

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::BitVector;

pub use domains::{
    domain_by_name, make_lights_out, make_sliding_puzzle, Direction, GroundTruthDomain, LightsOut,
    SlidingPuzzle,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: width {found} does not match dataset width {expected}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("transition {index}: {message}")]
    Invalid { index: usize, message: String },
    #[error("no applicable action from state {0}")]
    DeadEnd(BitVector),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub before: BitVector,
    pub after: BitVector,
    pub label: Option<usize>,
}

impl Transition {
    pub fn new(before: BitVector, after: BitVector, label: Option<usize>) -> Self {
        Transition {
            before,
            after,
            label,
        }
    }

    /// Bits that differ between the two states.
    pub fn flip_mask(&self) -> BitVector {
        self.before.xor(&self.after)
    }

    /// `before ; after`
    pub fn joint(&self) -> BitVector {
        self.before.concat(&self.after)
    }
}

/// A set of transitions over a common width. Either every transition carries
/// a label below `label_count`, or none do and `label_count` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDataset {
    width: usize,
    transitions: Vec<Transition>,
    label_count: Option<usize>,
}

impl TransitionDataset {
    pub fn new(
        width: usize,
        transitions: Vec<Transition>,
        label_count: Option<usize>,
    ) -> Result<Self, DatasetError> {
        if width == 0 {
            return Err(DatasetError::InvalidParameter(
                "width must be positive".into(),
            ));
        }
        for (index, t) in transitions.iter().enumerate() {
            if t.before.width() != width || t.after.width() != width {
                return Err(DatasetError::Invalid {
                    index,
                    message: format!(
                        "widths {}/{} differ from dataset width {width}",
                        t.before.width(),
                        t.after.width()
                    ),
                });
            }
            match (t.label, label_count) {
                (Some(l), Some(a)) if l >= a => {
                    return Err(DatasetError::Invalid {
                        index,
                        message: format!("label {l} not below label count {a}"),
                    })
                }
                (None, Some(_)) => {
                    return Err(DatasetError::Invalid {
                        index,
                        message: "missing label in labeled dataset".into(),
                    })
                }
                (Some(_), None) => {
                    return Err(DatasetError::Invalid {
                        index,
                        message: "label present in unlabeled dataset".into(),
                    })
                }
                _ => {}
            }
        }
        Ok(TransitionDataset {
            width,
            transitions,
            label_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn label_count(&self) -> Option<usize> {
        self.label_count
    }

    pub fn is_labeled(&self) -> bool {
        self.label_count.is_some()
    }

    /// Same transitions with labels replaced.
    pub fn with_labels(&self, labels: &[usize], label_count: usize) -> Result<Self, DatasetError> {
        if labels.len() != self.len() {
            return Err(DatasetError::InvalidParameter(format!(
                "{} labels for {} transitions",
                labels.len(),
                self.len()
            )));
        }
        let transitions = self
            .transitions
            .iter()
            .zip(labels)
            .map(|(t, &l)| Transition::new(t.before.clone(), t.after.clone(), Some(l)))
            .collect();
        TransitionDataset::new(self.width, transitions, Some(label_count))
    }

    pub fn without_labels(&self) -> Self {
        TransitionDataset {
            width: self.width,
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition::new(t.before.clone(), t.after.clone(), None))
                .collect(),
            label_count: None,
        }
    }
}

/// Knobs for [`sample_transitions_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    /// Independent flip probability for every bit of both states.
    pub noise: f64,
    /// Random steps taken from the goal after each restart before recording.
    /// Defaults to twice the state width.
    pub burn_in: Option<usize>,
    /// Consecutive transitions recorded between restarts. Defaults to four
    /// times the state width.
    pub restart_interval: Option<usize>,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            noise: 0.0,
            burn_in: None,
            restart_interval: None,
        }
    }
}

/// Samples `count` labeled transitions along random walks from the goal
/// state. Labels are the simulator's action ids.
pub fn sample_transitions(
    domain: &dyn GroundTruthDomain,
    count: usize,
    seed: u64,
) -> Result<TransitionDataset, DatasetError> {
    sample_transitions_with(domain, count, seed, &SamplingOptions::default())
}

pub fn sample_transitions_with(
    domain: &dyn GroundTruthDomain,
    count: usize,
    seed: u64,
    options: &SamplingOptions,
) -> Result<TransitionDataset, DatasetError> {
    if count == 0 {
        return Err(DatasetError::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&options.noise) {
        return Err(DatasetError::InvalidParameter(format!(
            "noise probability {} outside [0, 1]",
            options.noise
        )));
    }
    let width = domain.width();
    let burn_in = options.burn_in.unwrap_or(2 * width);
    let interval = options.restart_interval.unwrap_or(4 * width).max(1);
    let goal = domain.goal_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut transitions = Vec::with_capacity(count);
    let mut state = goal.clone();
    let mut since_restart = interval;
    while transitions.len() < count {
        if since_restart >= interval {
            state = goal.clone();
            for _ in 0..burn_in {
                match random_step(domain, &state, &mut rng) {
                    Some((_, next)) => state = next,
                    None => break,
                }
            }
            since_restart = 0;
        }
        match random_step(domain, &state, &mut rng) {
            Some((action, next)) => {
                transitions.push(Transition::new(state.clone(), next.clone(), Some(action)));
                state = next;
                since_restart += 1;
            }
            None if state == goal => return Err(DatasetError::DeadEnd(state)),
            None => since_restart = interval,
        }
    }

    if options.noise > 0.0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6E6F_6973_6521);
        for t in &mut transitions {
            for v in [&mut t.before, &mut t.after] {
                for i in 0..width {
                    if noise_rng.random_bool(options.noise) {
                        v.toggle(i);
                    }
                }
            }
        }
    }
    TransitionDataset::new(width, transitions, Some(domain.action_count()))
}

fn random_step(
    domain: &dyn GroundTruthDomain,
    state: &BitVector,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, BitVector)> {
    let actions = domain.applicable_actions(state);
    let &action = actions.choose(rng)?;
    domain.apply(state, action).map(|next| (action, next))
}

/// Shuffles with `seed` and returns the first `⌊ratio·N⌋` transitions and the rest.
pub fn split(
    ds: &TransitionDataset,
    ratio: f64,
    seed: u64,
) -> Result<(TransitionDataset, TransitionDataset), DatasetError> {
    if ds.is_empty() {
        return Err(DatasetError::Empty);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidParameter(format!(
            "split ratio {ratio} must lie strictly between 0 and 1"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (ratio * ds.len() as f64).floor() as usize;
    let pick = |idx: &[usize]| TransitionDataset {
        width: ds.width,
        transitions: idx.iter().map(|&i| ds.transitions[i].clone()).collect(),
        label_count: ds.label_count,
    };
    Ok((pick(&order[..cut]), pick(&order[cut..])))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningInstance {
    pub init: BitVector,
    pub goal: BitVector,
    pub walk_length: usize,
}

/// For each walk length, `per_length` instances whose initial state ends a
/// random walk of that many steps from the goal. The walk never steps straight
/// back to the state it just left unless that is the only move.
pub fn make_instances(
    domain: &dyn GroundTruthDomain,
    walk_lengths: &[usize],
    per_length: usize,
    seed: u64,
) -> Result<Vec<PlanningInstance>, DatasetError> {
    if let Some(&bad) = walk_lengths.iter().find(|&&l| l == 0) {
        return Err(DatasetError::InvalidParameter(format!(
            "walk length must be at least 1, got {bad}"
        )));
    }
    let goal = domain.goal_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(walk_lengths.len() * per_length);
    for &length in walk_lengths {
        for _ in 0..per_length {
            let mut previous: Option<BitVector> = None;
            let mut state = goal.clone();
            for _ in 0..length {
                let successors: Vec<BitVector> = domain
                    .applicable_actions(&state)
                    .into_iter()
                    .filter_map(|a| domain.apply(&state, a))
                    .collect();
                let fresh: Vec<&BitVector> = successors
                    .iter()
                    .filter(|s| Some(*s) != previous.as_ref())
                    .collect();
                let next = if fresh.is_empty() {
                    successors.choose(&mut rng)
                } else {
                    fresh.choose(&mut rng).copied()
                };
                let Some(next) = next.cloned() else {
                    return Err(DatasetError::DeadEnd(state));
                };
                previous = Some(std::mem::replace(&mut state, next));
            }
            out.push(PlanningInstance {
                init: state,
                goal: goal.clone(),
                walk_length: length,
            });
        }
    }
    Ok(out)
}

pub fn format_dataset(ds: &TransitionDataset) -> String {
    let mut out = String::with_capacity(ds.len() * (2 * ds.width + 8) + 16);
    match ds.label_count {
        Some(a) => writeln!(out, "F={} A={a}", ds.width).unwrap(),
        None => writeln!(out, "F={} A=none", ds.width).unwrap(),
    }
    for t in &ds.transitions {
        match t.label {
            Some(l) => writeln!(out, "{} {} {l}", t.before, t.after).unwrap(),
            None => writeln!(out, "{} {}", t.before, t.after).unwrap(),
        }
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<TransitionDataset, DatasetError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(DatasetError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let (width, label_count) = parse_header(header)?;
    let mut transitions = Vec::new();
    for (line, content) in lines {
        if content.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_bits = |s: &str| -> Result<BitVector, DatasetError> {
            let v: BitVector = s.parse().map_err(|e| DatasetError::Parse {
                line,
                message: format!("{e}"),
            })?;
            if v.width() != width {
                return Err(DatasetError::WidthMismatch {
                    line,
                    expected: width,
                    found: v.width(),
                });
            }
            Ok(v)
        };
        let label = match (fields.len(), label_count) {
            (2, None) => None,
            (3, Some(a)) => {
                let l: usize = fields[2].parse().map_err(|_| DatasetError::Parse {
                    line,
                    message: format!("invalid label {:?}", fields[2]),
                })?;
                if l >= a {
                    return Err(DatasetError::Parse {
                        line,
                        message: format!("label {l} not below A={a}"),
                    });
                }
                Some(l)
            }
            (n, Some(_)) => {
                return Err(DatasetError::Parse {
                    line,
                    message: format!("expected 3 fields, found {n}"),
                })
            }
            (n, None) => {
                return Err(DatasetError::Parse {
                    line,
                    message: format!("expected 2 fields, found {n}"),
                })
            }
        };
        let before = parse_bits(fields[0])?;
        let after = parse_bits(fields[1])?;
        transitions.push(Transition::new(before, after, label));
    }
    TransitionDataset::new(width, transitions, label_count)
}

fn parse_header(header: &str) -> Result<(usize, Option<usize>), DatasetError> {
    let bad = |message: String| DatasetError::Parse { line: 1, message };
    let mut width = None;
    let mut labels = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("F", v)) => {
                width = Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("invalid width {v:?}")))?,
                )
            }
            Some(("A", "none")) => labels = Some(None),
            Some(("A", v)) => {
                labels = Some(Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("invalid label count {v:?}")))?,
                ))
            }
            _ => return Err(bad(format!("unexpected header field {field:?}"))),
        }
    }
    match (width, labels) {
        (Some(w), Some(a)) if w > 0 => Ok((w, a)),
        _ => Err(bad(format!(
            "header must read \"F=<int> A=<int|none>\", got {header:?}"
        ))),
    }
}

pub fn write_dataset(ds: &TransitionDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    std::fs::write(path, format_dataset(ds))?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<TransitionDataset, DatasetError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}
