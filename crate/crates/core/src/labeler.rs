//! Action labels for unlabeled transitions.
//!
//! Transitions are clustered by their effect signature, the mask of bits that
//! change between the two states. Each label keeps a centroid mask; applying a
//! label to a state flips the centroid's bits.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::dataset::{Transition, TransitionDataset};

/// First label capacity tried by [`tune_label_count`].
pub const TUNE_START: usize = 8;
/// Capacity increment of [`tune_label_count`].
pub const TUNE_STEP: usize = 8;
/// Largest capacity tried by [`tune_label_count`].
pub const TUNE_MAX: usize = 128;
/// Mean absolute bit error below which tuning stops.
pub const TUNE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    /// Label of every transition, in dataset order.
    pub assignment: Vec<usize>,
    /// Effect signature of every label.
    pub centroids: Vec<BitVector>,
}

impl Labeling {
    pub fn label_count(&self) -> usize {
        self.centroids.len()
    }

    /// Label of the centroid nearest in Hamming distance to the transition's
    /// signature; ties go to the lowest label.
    pub fn assign(&self, t: &Transition) -> usize {
        nearest(&self.centroids, &t.flip_mask())
    }

    /// Successor predicted by flipping the label's centroid bits.
    pub fn predict(&self, before: &BitVector, label: usize) -> BitVector {
        before.xor(&self.centroids[label])
    }

    /// Mean over transitions and bits of `|after - predict(before, label)|`.
    pub fn reconstruction_error(&self, ds: &TransitionDataset) -> f64 {
        if ds.is_empty() {
            return 0.0;
        }
        let wrong: usize = ds
            .transitions()
            .iter()
            .zip(&self.assignment)
            .map(|(t, &l)| self.predict(&t.before, l).hamming(&t.after))
            .sum();
        wrong as f64 / (ds.len() * ds.width()) as f64
    }

    /// The dataset with this labeling attached.
    pub fn apply_to(&self, ds: &TransitionDataset) -> TransitionDataset {
        ds.with_labels(&self.assignment, self.label_count())
            .expect("labeling was built for this dataset")
    }

    /// Labels another dataset (for instance a test split) by nearest centroid.
    pub fn label_dataset(&self, ds: &TransitionDataset) -> TransitionDataset {
        let labels: Vec<usize> = ds.transitions().iter().map(|t| self.assign(t)).collect();
        ds.with_labels(&labels, self.label_count())
            .expect("nearest-centroid labels are in range")
    }
}

fn nearest(centroids: &[BitVector], signature: &BitVector) -> usize {
    centroids
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.hamming(signature), *i))
        .map(|(i, _)| i)
        .expect("at least one centroid")
}

fn signature_counts(ds: &TransitionDataset) -> BTreeMap<BitVector, usize> {
    let mut counts = BTreeMap::new();
    for t in ds.transitions() {
        *counts.entry(t.flip_mask()).or_insert(0) += 1;
    }
    counts
}

/// One label per distinct signature, labels ordered lexicographically by signature.
///
/// Panics on an empty dataset.
pub fn label_by_signature(ds: &TransitionDataset) -> Labeling {
    label_capacity_bounded(ds, usize::MAX)
}

/// At most `max_labels` labels: the most frequent signatures keep their own
/// label (frequency ties broken by signature order) and every other transition
/// joins the Hamming-nearest kept signature.
pub fn label_capacity_bounded(ds: &TransitionDataset, max_labels: usize) -> Labeling {
    assert!(!ds.is_empty(), "cannot label an empty dataset");
    assert!(max_labels >= 1, "label capacity must be at least 1");
    let counts = signature_counts(ds);
    let mut kept: Vec<BitVector> = if counts.len() <= max_labels {
        counts.into_keys().collect()
    } else {
        let mut by_frequency: Vec<(BitVector, usize)> = counts.into_iter().collect();
        by_frequency.sort_by(|(sa, ca), (sb, cb)| cb.cmp(ca).then_with(|| sa.cmp(sb)));
        by_frequency.truncate(max_labels);
        by_frequency.into_iter().map(|(s, _)| s).collect()
    };
    kept.sort();
    let assignment = ds
        .transitions()
        .iter()
        .map(|t| nearest(&kept, &t.flip_mask()))
        .collect();
    let mut labeling = Labeling {
        assignment,
        centroids: kept,
    };
    recompute_centroids(&mut labeling, ds);
    labeling
}

/// Sets every centroid to the per-bit majority of its members' signatures
/// (ties clear the bit). Labels without members keep their centroid.
fn recompute_centroids(labeling: &mut Labeling, ds: &TransitionDataset) {
    let width = ds.width();
    let mut ones = vec![vec![0usize; width]; labeling.label_count()];
    let mut sizes = vec![0usize; labeling.label_count()];
    for (t, &l) in ds.transitions().iter().zip(&labeling.assignment) {
        sizes[l] += 1;
        for i in t.flip_mask().iter_ones() {
            ones[l][i] += 1;
        }
    }
    for (l, centroid) in labeling.centroids.iter_mut().enumerate() {
        if sizes[l] > 0 {
            *centroid =
                BitVector::from_indices(width, (0..width).filter(|&i| 2 * ones[l][i] > sizes[l]));
        }
    }
}

#[derive(Debug, Clone)]
pub struct TunedLabels {
    pub label_count: usize,
    pub labeling: Labeling,
    pub error: f64,
    /// False when even the largest capacity stayed above the threshold.
    pub converged: bool,
}

/// Raises the label capacity from 8 to 128 in steps of 8 and stops at the
/// first capacity whose reconstruction error is below 0.01.
pub fn tune_label_count(ds: &TransitionDataset) -> TunedLabels {
    let mut last = None;
    for capacity in (TUNE_START..=TUNE_MAX).step_by(TUNE_STEP) {
        let labeling = label_capacity_bounded(ds, capacity);
        let error = labeling.reconstruction_error(ds);
        if error < TUNE_THRESHOLD {
            return TunedLabels {
                label_count: capacity,
                labeling,
                error,
                converged: true,
            };
        }
        last = Some((labeling, error));
    }
    let (labeling, error) = last.expect("capacity range is non-empty");
    log::warn!(
        "label tuning did not reach error {TUNE_THRESHOLD}; stopped at {TUNE_MAX} with {error:.4}"
    );
    TunedLabels {
        label_count: TUNE_MAX,
        labeling,
        error,
        converged: false,
    }
}

/// Reassigns a `fraction` of transitions to uniformly random labels.
pub fn perturb_labels(labeling: &Labeling, fraction: f64, seed: u64) -> Labeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = labeling.label_count();
    let assignment = labeling
        .assignment
        .iter()
        .map(|&l| {
            if rng.random_bool(fraction.clamp(0.0, 1.0)) {
                rng.random_range(0..a)
            } else {
                l
            }
        })
        .collect();
    Labeling {
        assignment,
        centroids: labeling.centroids.clone(),
    }
}
