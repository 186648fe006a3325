//! Model bundle directory: `manifest.toml` plus one forest file per classifier,
//! `effect_a<a>_f<f>.forest` and `pre_a<a>.forest`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{
    read_forest, write_forest, FeatureSampling, ForestError, ForestParams, Resampling,
};

use super::{InputMode, ModelParams, TrainedAction};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Forest { path: PathBuf, source: ForestError },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    width: usize,
    label_count: usize,
    input: String,
    validation_fraction: f64,
    forest: ForestSection,
    actions: Vec<ActionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestSection {
    trees: usize,
    depth: usize,
    bag_fraction: f64,
    features_per_split: Option<usize>,
    balanced: bool,
    resampling: String,
    feature_sampling: String,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionEntry {
    id: usize,
    pu_constant: f64,
}

fn effect_file(a: usize, f: usize) -> String {
    format!("effect_a{a}_f{f}.forest")
}

fn precondition_file(a: usize) -> String {
    format!("pre_a{a}.forest")
}

fn input_name(m: InputMode) -> &'static str {
    match m {
        InputMode::Joint => "joint",
        InputMode::CurrentOnly => "current",
    }
}

/// Writes the bundle; `label_count` is the number of labels of the training data.
pub fn write_bundle(
    dir: impl AsRef<Path>,
    actions: &[TrainedAction],
    params: &ModelParams,
    label_count: usize,
) -> Result<(), BundleError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| BundleError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let width = actions.first().map_or(0, |a| a.width);
    let fp = &params.forest;
    let manifest = Manifest {
        width,
        label_count,
        input: input_name(params.input).into(),
        validation_fraction: params.validation_fraction,
        forest: ForestSection {
            trees: fp.trees,
            depth: fp.max_depth,
            bag_fraction: fp.bag_fraction,
            features_per_split: fp.features_per_split,
            balanced: fp.balanced,
            resampling: match fp.resampling {
                Resampling::Auto => "auto",
                Resampling::WithReplacement => "with",
                Resampling::WithoutReplacement => "without",
            }
            .into(),
            feature_sampling: match fp.feature_sampling {
                FeatureSampling::PerSplit => "per_split",
                FeatureSampling::PerTree => "per_tree",
            }
            .into(),
            seed: fp.seed,
        },
        actions: actions
            .iter()
            .map(|a| ActionEntry {
                id: a.action,
                pu_constant: a.pu_constant,
            })
            .collect(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).map_err(|e| BundleError::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(|source| BundleError::Io { path, source })?;

    for a in actions {
        for (f, forest) in a.effect_forests.iter().enumerate() {
            let path = dir.join(effect_file(a.action, f));
            write_forest(forest, &path).map_err(|source| BundleError::Forest { path, source })?;
        }
        let path = dir.join(precondition_file(a.action));
        write_forest(&a.precondition_forest, &path)
            .map_err(|source| BundleError::Forest { path, source })?;
    }
    Ok(())
}

/// A loaded bundle: trained actions, parameters and label count.
pub fn read_bundle(
    dir: impl AsRef<Path>,
) -> Result<(Vec<TrainedAction>, ModelParams, usize), BundleError> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| BundleError::Io {
        path: path.clone(),
        source,
    })?;
    let bad = |message: String| BundleError::Manifest {
        path: path.clone(),
        message,
    };
    let m: Manifest = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let input = match m.input.as_str() {
        "joint" => InputMode::Joint,
        "current" => InputMode::CurrentOnly,
        other => return Err(bad(format!("unknown input mode {other:?}"))),
    };
    let forest = ForestParams {
        trees: m.forest.trees,
        max_depth: m.forest.depth,
        bag_fraction: m.forest.bag_fraction,
        features_per_split: m.forest.features_per_split,
        balanced: m.forest.balanced,
        resampling: match m.forest.resampling.as_str() {
            "auto" => Resampling::Auto,
            "with" => Resampling::WithReplacement,
            "without" => Resampling::WithoutReplacement,
            other => return Err(bad(format!("unknown resampling {other:?}"))),
        },
        feature_sampling: match m.forest.feature_sampling.as_str() {
            "per_split" => FeatureSampling::PerSplit,
            "per_tree" => FeatureSampling::PerTree,
            other => return Err(bad(format!("unknown feature sampling {other:?}"))),
        },
        seed: m.forest.seed,
    };
    let params = ModelParams {
        forest,
        validation_fraction: m.validation_fraction,
        input,
    };
    let expected_pre_width = match input {
        InputMode::Joint => 2 * m.width,
        InputMode::CurrentOnly => m.width,
    };

    let mut actions = Vec::with_capacity(m.actions.len());
    for entry in &m.actions {
        if entry.id >= m.label_count {
            return Err(bad(format!(
                "action {} not below label count {}",
                entry.id, m.label_count
            )));
        }
        let load = |name: String, width: usize| {
            let path = dir.join(name);
            let forest = read_forest(&path).map_err(|source| BundleError::Forest {
                path: path.clone(),
                source,
            })?;
            if forest.width() != width {
                return Err(BundleError::Manifest {
                    path,
                    message: format!("forest width {} but expected {width}", forest.width()),
                });
            }
            Ok(forest)
        };
        let effect_forests = (0..m.width)
            .map(|f| load(effect_file(entry.id, f), m.width))
            .collect::<Result<Vec<_>, _>>()?;
        let precondition_forest = load(precondition_file(entry.id), expected_pre_width)?;
        actions.push(TrainedAction {
            action: entry.id,
            width: m.width,
            effect_forests,
            precondition_forest,
            pu_constant: entry.pu_constant,
            input,
        });
    }
    Ok((actions, params, m.label_count))
}
