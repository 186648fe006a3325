//! Binary random forests over bit-vector features.
//!
//! Trees split on a single feature with a threshold; an input goes to the
//! `high` child when its feature value (0 or 1) exceeds the threshold. Trained
//! trees always use threshold 0.5, so `high` is the branch for a set bit.

mod io;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bits::BitVector;

pub use io::{format_forest, parse_forest, read_forest, write_forest};

/// Splits whose information gain differs by at most this much count as ties.
const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("training data is empty")]
    Empty,
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("input width {found} does not match forest width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid forest parameter: {0}")]
    InvalidParams(String),
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the examples of each tree are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resampling {
    /// With replacement when balanced, without replacement otherwise.
    Auto,
    WithReplacement,
    WithoutReplacement,
}

/// Where the random feature subset is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSampling {
    PerSplit,
    PerTree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Fraction of examples (or of the minority class, when balanced) per tree.
    pub bag_fraction: f64,
    /// Features considered per split; `None` means `⌈√F⌉`.
    pub features_per_split: Option<usize>,
    /// Draw the same number of examples from each class.
    pub balanced: bool,
    pub resampling: Resampling,
    pub feature_sampling: FeatureSampling,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 80,
            max_depth: 25,
            bag_fraction: 2.0 / 3.0,
            features_per_split: None,
            balanced: true,
            resampling: Resampling::Auto,
            feature_sampling: FeatureSampling::PerSplit,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn new(trees: usize, max_depth: usize, seed: u64) -> Self {
        ForestParams {
            trees,
            max_depth,
            seed,
            ..ForestParams::default()
        }
    }

    /// Features tried per split for inputs of the given width.
    pub fn split_features(&self, width: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize)
            .clamp(1, width.max(1))
    }

    pub fn validate(&self, width: usize) -> Result<(), ForestError> {
        if self.trees == 0 {
            return Err(ForestError::InvalidParams(
                "tree count must be at least 1".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(ForestError::InvalidParams(
                "max depth must be at least 1".into(),
            ));
        }
        if !(self.bag_fraction > 0.0 && self.bag_fraction <= 1.0) {
            return Err(ForestError::InvalidParams(format!(
                "bag fraction {} outside (0, 1]",
                self.bag_fraction
            )));
        }
        if let Some(k) = self.features_per_split {
            if k == 0 || k > width {
                return Err(ForestError::InvalidParams(format!(
                    "features per split {k} outside 1..={width}"
                )));
            }
        }
        Ok(())
    }

    fn with_replacement(&self) -> bool {
        match self.resampling {
            Resampling::Auto => self.balanced,
            Resampling::WithReplacement => true,
            Resampling::WithoutReplacement => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Class probabilities `(p0, p1)`.
    Leaf { p0: f64, p1: f64 },
    Split {
        feature: usize,
        threshold: f64,
        /// Taken when the feature value exceeds the threshold.
        high: Box<TreeNode>,
        /// Taken otherwise.
        low: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(p0: f64, p1: f64) -> TreeNode {
        TreeNode::Leaf { p0, p1 }
    }

    pub fn split(feature: usize, threshold: f64, high: TreeNode, low: TreeNode) -> TreeNode {
        TreeNode::Split {
            feature,
            threshold,
            high: Box::new(high),
            low: Box::new(low),
        }
    }

    /// Probabilities of the leaf reached by `x`. `x` must be wide enough.
    pub fn leaf_for(&self, x: &BitVector) -> (f64, f64) {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { p0, p1 } => return (*p0, *p1),
                TreeNode::Split {
                    feature,
                    threshold,
                    high,
                    low,
                } => {
                    let value = if x.get(*feature) { 1.0 } else { 0.0 };
                    node = if value > *threshold { high } else { low };
                }
            }
        }
    }

    /// Argmax class at the reached leaf; a tie votes 0.
    pub fn vote(&self, x: &BitVector) -> bool {
        let (p0, p1) = self.leaf_for(x);
        p1 > p0
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { high, low, .. } => 1 + high.depth().max(low.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { high, low, .. } => 1 + high.node_count() + low.node_count(),
        }
    }

    /// Checks feature indices and leaf probabilities.
    pub fn validate(&self, width: usize) -> Result<(), ForestError> {
        match self {
            TreeNode::Leaf { p0, p1 } => {
                let ok = p0.is_finite() && p1.is_finite() && *p0 >= 0.0 && *p1 >= 0.0;
                if !ok || (p0 + p1 - 1.0).abs() > 1e-9 {
                    return Err(ForestError::Malformed(format!(
                        "leaf probabilities ({p0}, {p1})"
                    )));
                }
                Ok(())
            }
            TreeNode::Split {
                feature,
                threshold,
                high,
                low,
            } => {
                if *feature >= width {
                    return Err(ForestError::Malformed(format!(
                        "feature {feature} outside width {width}"
                    )));
                }
                if threshold.is_nan() {
                    return Err(ForestError::Malformed("NaN threshold".into()));
                }
                high.validate(width)?;
                low.validate(width)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    width: usize,
    trees: Vec<TreeNode>,
    params: ForestParams,
}

impl RandomForest {
    pub fn from_trees(
        width: usize,
        trees: Vec<TreeNode>,
        params: ForestParams,
    ) -> Result<Self, ForestError> {
        if trees.is_empty() {
            return Err(ForestError::Malformed("forest has no trees".into()));
        }
        for t in &trees {
            t.validate(width)?;
        }
        Ok(RandomForest {
            width,
            trees,
            params,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    fn check(&self, x: &BitVector) -> Result<(), ForestError> {
        if x.width() != self.width {
            return Err(ForestError::WidthMismatch {
                expected: self.width,
                found: x.width(),
            });
        }
        Ok(())
    }

    /// Number of trees voting class 1.
    pub fn votes(&self, x: &BitVector) -> Result<usize, ForestError> {
        self.check(x)?;
        Ok(self.trees.iter().filter(|t| t.vote(x)).count())
    }

    /// 1 iff strictly more than `⌊T/2⌋` trees vote 1.
    pub fn predict_vote(&self, x: &BitVector) -> Result<bool, ForestError> {
        Ok(self.votes(x)? > self.trees.len() / 2)
    }

    /// Mean of the trees' `p1`.
    pub fn predict_average(&self, x: &BitVector) -> Result<f64, ForestError> {
        self.check(x)?;
        let sum: f64 = self.trees.iter().map(|t| t.leaf_for(x).1).sum();
        Ok(sum / self.trees.len() as f64)
    }
}

/// Trains a forest. A single-class training set yields a one-tree constant
/// predictor.
pub fn train_forest(
    features: &[BitVector],
    labels: &[bool],
    params: &ForestParams,
) -> Result<RandomForest, ForestError> {
    if features.is_empty() {
        return Err(ForestError::Empty);
    }
    if features.len() != labels.len() {
        return Err(ForestError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    let width = features[0].width();
    if let Some(bad) = features.iter().find(|x| x.width() != width) {
        return Err(ForestError::WidthMismatch {
            expected: width,
            found: bad.width(),
        });
    }
    params.validate(width)?;

    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        let leaf = if positives == 0 {
            TreeNode::leaf(1.0, 0.0)
        } else {
            TreeNode::leaf(0.0, 1.0)
        };
        return Ok(RandomForest {
            width,
            trees: vec![leaf],
            params: params.clone(),
        });
    }

    let data = Data {
        features,
        labels,
        width,
    };
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ t as u64);
            data.grow_tree(params, &mut rng)
        })
        .collect();
    Ok(RandomForest {
        width,
        trees,
        params: params.clone(),
    })
}

struct Data<'a> {
    features: &'a [BitVector],
    labels: &'a [bool],
    width: usize,
}

impl Data<'_> {
    fn grow_tree(&self, params: &ForestParams, rng: &mut ChaCha8Rng) -> TreeNode {
        let mut sample = self.bootstrap(params, rng);
        let k = params.split_features(self.width);
        let pool = match params.feature_sampling {
            FeatureSampling::PerSplit => None,
            FeatureSampling::PerTree => {
                let mut chosen = index::sample(rng, self.width, k).into_vec();
                chosen.sort_unstable();
                Some(chosen)
            }
        };
        let grower = Grower {
            data: self,
            max_depth: params.max_depth,
            budget: k,
            pool,
        };
        grower.grow(&mut sample, 0, rng)
    }

    fn bootstrap(&self, params: &ForestParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let draw = |rng: &mut ChaCha8Rng, from: &[usize], m: usize, replace: bool| -> Vec<usize> {
            if replace {
                (0..m)
                    .map(|_| from[rng.random_range(0..from.len())])
                    .collect()
            } else {
                index::sample(rng, from.len(), m.min(from.len()))
                    .into_iter()
                    .map(|i| from[i])
                    .collect()
            }
        };
        let replace = params.with_replacement();
        if params.balanced {
            let (pos, neg): (Vec<usize>, Vec<usize>) =
                (0..self.labels.len()).partition(|&i| self.labels[i]);
            let minority = pos.len().min(neg.len());
            let m = ((params.bag_fraction * minority as f64).ceil() as usize).max(1);
            let mut sample = draw(rng, &pos, m, replace);
            sample.extend(draw(rng, &neg, m, replace));
            sample
        } else {
            let all: Vec<usize> = (0..self.labels.len()).collect();
            let m = ((params.bag_fraction * all.len() as f64).ceil() as usize).max(1);
            draw(rng, &all, m, replace)
        }
    }
}

struct Grower<'a, 'b> {
    data: &'a Data<'b>,
    max_depth: usize,
    budget: usize,
    pool: Option<Vec<usize>>,
}

fn entropy(pos: usize, total: usize) -> f64 {
    if pos == 0 || pos == total {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

impl Grower<'_, '_> {
    fn grow(&self, sample: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> TreeNode {
        let n = sample.len();
        let pos = sample.iter().filter(|&&i| self.data.labels[i]).count();
        let leaf = || TreeNode::leaf((n - pos) as f64 / n as f64, pos as f64 / n as f64);
        if pos == 0 || pos == n || depth >= self.max_depth {
            return leaf();
        }
        let Some(feature) = self.best_split(sample, pos, rng) else {
            return leaf();
        };
        let features = self.data.features;
        // high-branch examples first
        let mut cut = 0;
        for j in 0..n {
            if features[sample[j]].get(feature) {
                sample.swap(cut, j);
                cut += 1;
            }
        }
        let (high, low) = sample.split_at_mut(cut);
        let high = self.grow(high, depth + 1, rng);
        let low = self.grow(low, depth + 1, rng);
        TreeNode::split(feature, 0.5, high, low)
    }

    /// Best-gain feature among the sampled non-constant candidates. Ties go
    /// to the lowest index. Zero-gain splits are accepted.
    fn best_split(&self, sample: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let n = sample.len();
        let parent = entropy(pos, n);
        let mut order: Vec<usize> = match &self.pool {
            Some(pool) => pool.clone(),
            None => (0..self.data.width).collect(),
        };
        order.shuffle(rng);
        let limit = if self.pool.is_some() {
            order.len()
        } else {
            self.budget
        };

        let mut best: Option<(f64, usize)> = None;
        let mut tried = 0;
        for feature in order {
            if tried >= limit {
                break;
            }
            let (mut ones, mut ones_pos) = (0usize, 0usize);
            for &i in sample {
                if self.data.features[i].get(feature) {
                    ones += 1;
                    if self.data.labels[i] {
                        ones_pos += 1;
                    }
                }
            }
            if ones == 0 || ones == n {
                continue;
            }
            tried += 1;
            let zeros = n - ones;
            let gain = parent
                - (ones as f64 / n as f64) * entropy(ones_pos, ones)
                - (zeros as f64 / n as f64) * entropy(pos - ones_pos, zeros);
            best = match best {
                None => Some((gain, feature)),
                Some((g, _)) if gain > g + GAIN_EPSILON => Some((gain, feature)),
                Some((g, f)) if (gain - g).abs() <= GAIN_EPSILON && feature < f => {
                    Some((gain, feature))
                }
                keep => keep,
            };
        }
        best.map(|(_, f)| f)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn all_inputs(width: usize) -> impl Iterator<Item = BitVector> {
        (0..1u64 << width).map(move |x| BitVector::from_u64(width, x))
    }

    fn exact_params(trees: usize, depth: usize) -> ForestParams {
        ForestParams {
            trees,
            max_depth: depth,
            bag_fraction: 1.0,
            features_per_split: None,
            balanced: false,
            resampling: Resampling::WithoutReplacement,
            feature_sampling: FeatureSampling::PerSplit,
            seed: 3,
        }
    }

    #[test]
    fn xor_is_learned_by_depth_two_tree() {
        let xs: Vec<BitVector> = all_inputs(2).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x.get(0) ^ x.get(1)).collect();
        let mut params = exact_params(1, 2);
        params.features_per_split = Some(2);
        let f = train_forest(&xs, &ys, &params).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(f.predict_vote(x).unwrap(), *y);
        }
        assert!(f.trees()[0].depth() <= 2);
    }

    #[test]
    fn single_class_gives_constant_predictor() {
        let xs: Vec<BitVector> = all_inputs(3).collect();
        let f = train_forest(&xs, &[true; 8], &ForestParams::new(10, 4, 1)).unwrap();
        assert_eq!(f.tree_count(), 1);
        for x in all_inputs(3) {
            assert!(f.predict_vote(&x).unwrap());
            assert_eq!(f.predict_average(&x).unwrap(), 1.0);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs_fail() {
        assert!(matches!(
            train_forest(&[], &[], &ForestParams::default()),
            Err(ForestError::Empty)
        ));
        let xs = vec![BitVector::zeros(2)];
        assert!(matches!(
            train_forest(&xs, &[true, false], &ForestParams::default()),
            Err(ForestError::LengthMismatch { .. })
        ));
        let f = train_forest(&xs, &[true], &ForestParams::default()).unwrap();
        assert!(matches!(
            f.predict_vote(&BitVector::zeros(3)),
            Err(ForestError::WidthMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let xs = vec![BitVector::zeros(2), BitVector::ones(2)];
        let ys = [true, false];
        for p in [
            ForestParams::new(0, 3, 0),
            ForestParams::new(3, 0, 0),
            ForestParams {
                bag_fraction: 0.0,
                ..ForestParams::default()
            },
            ForestParams {
                features_per_split: Some(3),
                ..ForestParams::default()
            },
        ] {
            assert!(matches!(
                train_forest(&xs, &ys, &p),
                Err(ForestError::InvalidParams(_))
            ));
        }
    }

    fn leaf_with_vote(v: bool) -> TreeNode {
        if v {
            TreeNode::leaf(0.0, 1.0)
        } else {
            TreeNode::leaf(1.0, 0.0)
        }
    }

    #[test]
    fn four_tree_votes_need_strict_majority() {
        let x = BitVector::zeros(1);
        for pattern in 0u32..16 {
            let votes: Vec<bool> = (0..4).map(|t| pattern >> t & 1 == 1).collect();
            let trees = votes.iter().map(|&v| leaf_with_vote(v)).collect();
            let f = RandomForest::from_trees(1, trees, ForestParams::default()).unwrap();
            let ones = votes.iter().filter(|&&v| v).count();
            assert_eq!(f.predict_vote(&x).unwrap(), ones >= 3, "{votes:?}");
        }
    }

    #[test]
    fn average_and_vote_can_disagree() {
        let x = BitVector::zeros(1);
        let trees = vec![
            TreeNode::leaf(0.1, 0.9),
            TreeNode::leaf(0.6, 0.4),
            TreeNode::leaf(0.6, 0.4),
        ];
        let f = RandomForest::from_trees(1, trees, ForestParams::default()).unwrap();
        let avg = f.predict_average(&x).unwrap();
        assert!((avg - 1.7 / 3.0).abs() < 1e-12);
        assert!(avg > 0.5);
        assert!(!f.predict_vote(&x).unwrap());
    }

    #[test]
    fn average_of_two_trees() {
        let x = BitVector::zeros(1);
        let trees = vec![TreeNode::leaf(0.8, 0.2), TreeNode::leaf(0.2, 0.8)];
        let f = RandomForest::from_trees(1, trees, ForestParams::default()).unwrap();
        assert!((f.predict_average(&x).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn leaf_tie_votes_zero() {
        assert!(!TreeNode::leaf(0.5, 0.5).vote(&BitVector::zeros(1)));
    }

    #[test]
    fn degenerate_thresholds_pick_fixed_branch() {
        let t = TreeNode::split(0, -1.0, TreeNode::leaf(0.0, 1.0), TreeNode::leaf(1.0, 0.0));
        let u = TreeNode::split(0, 1.0, TreeNode::leaf(0.0, 1.0), TreeNode::leaf(1.0, 0.0));
        for x in all_inputs(1) {
            assert!(t.vote(&x));
            assert!(!u.vote(&x));
        }
    }

    #[test]
    fn training_is_deterministic_and_parallel_safe() {
        let xs: Vec<BitVector> = all_inputs(6).collect();
        let ys: Vec<bool> = xs
            .iter()
            .map(|x| x.get(1) && !x.get(4) || x.get(2))
            .collect();
        let p = ForestParams::new(12, 5, 42);
        let a = train_forest(&xs, &ys, &p).unwrap();
        let b = train_forest(&xs, &ys, &p).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&xs, &ys, &ForestParams::new(12, 5, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn per_tree_sampling_restricts_features() {
        let xs: Vec<BitVector> = all_inputs(8).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x.count_ones() % 3 == 0).collect();
        let p = ForestParams {
            feature_sampling: FeatureSampling::PerTree,
            features_per_split: Some(2),
            ..ForestParams::new(5, 6, 9)
        };
        let f = train_forest(&xs, &ys, &p).unwrap();
        fn used(t: &TreeNode, out: &mut Vec<usize>) {
            if let TreeNode::Split {
                feature, high, low, ..
            } = t
            {
                out.push(*feature);
                used(high, out);
                used(low, out);
            }
        }
        for t in f.trees() {
            let mut fs = Vec::new();
            used(t, &mut fs);
            fs.sort_unstable();
            fs.dedup();
            assert!(fs.len() <= 2);
        }
    }

    #[test]
    fn learns_a_simple_rule_well() {
        let xs: Vec<BitVector> = all_inputs(10).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x.get(3) || x.get(7)).collect();
        let f = train_forest(&xs, &ys, &ForestParams::new(20, 8, 5)).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| f.predict_vote(x).unwrap() == **y)
            .count();
        assert!(correct as f64 / xs.len() as f64 > 0.98);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn structure_invariants_hold(
            width in 2usize..7,
            seed in any::<u64>(),
            trees in 1usize..6,
            depth in 1usize..5,
            table in any::<u64>(),
        ) {
            let xs: Vec<BitVector> = all_inputs(width).collect();
            let ys: Vec<bool> = (0..xs.len()).map(|i| table >> (i % 64) & 1 == 1).collect();
            let f = train_forest(&xs, &ys, &ForestParams::new(trees, depth, seed)).unwrap();
            fn leaves_sum_to_one(t: &TreeNode) -> bool {
                match t {
                    TreeNode::Leaf { p0, p1 } => (p0 + p1 - 1.0).abs() < 1e-12,
                    TreeNode::Split { high, low, .. } => leaves_sum_to_one(high) && leaves_sum_to_one(low),
                }
            }
            for t in f.trees() {
                prop_assert!(t.depth() <= depth);
                prop_assert!(leaves_sum_to_one(t));
            }
            for x in &xs {
                let votes = f.trees().iter().filter(|t| t.vote(x)).count();
                prop_assert_eq!(f.predict_vote(x).unwrap(), 2 * votes > f.tree_count());
            }
        }
    }
}
