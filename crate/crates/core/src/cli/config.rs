//! Experiment configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{domain_by_name, GroundTruthDomain};
use crate::forest::ForestParams;
use crate::model::{Decision, InputMode, ModelParams};
use crate::planner::{Algorithm, Limits};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSection,
    pub sampling: SamplingSection,
    pub labeling: LabelingSection,
    pub forest: ForestSection,
    pub model: ModelSection,
    pub compile: CompileSection,
    pub planner: PlannerSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    /// `lightsout` or `puzzle`.
    pub name: String,
    pub size: usize,
    /// Per-bit flip probability applied to sampled states.
    pub noise: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            name: "lightsout".into(),
            size: 3,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub count: usize,
    pub seed: u64,
    /// Training share of the sampled transitions.
    pub split: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            count: 10_000,
            seed: 1,
            split: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelingMode {
    /// The simulator's action ids.
    GroundTruth,
    /// One label per distinct flip mask.
    Signature,
    /// At most `labeling.capacity` labels.
    Capacity,
    /// Capacity raised until the reconstruction error is small.
    Tuned,
}

impl std::str::FromStr for LabelingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ground-truth" => Ok(LabelingMode::GroundTruth),
            "signature" => Ok(LabelingMode::Signature),
            "capacity" => Ok(LabelingMode::Capacity),
            "tuned" => Ok(LabelingMode::Tuned),
            other => Err(format!(
                "unknown labeling mode {other:?} (expected ground-truth, signature, capacity or tuned)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingSection {
    pub mode: LabelingMode,
    pub capacity: usize,
}

impl Default for LabelingSection {
    fn default() -> Self {
        LabelingSection {
            mode: LabelingMode::GroundTruth,
            capacity: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    /// `train` uses the first entry; `sweep` uses them all.
    pub trees: Vec<usize>,
    pub depths: Vec<usize>,
    pub bag_fraction: f64,
    pub balanced: bool,
    pub seed: u64,
}

impl Default for ForestSection {
    fn default() -> Self {
        let d = ForestParams::default();
        ForestSection {
            trees: vec![d.trees],
            depths: vec![d.max_depth],
            bag_fraction: d.bag_fraction,
            balanced: d.balanced,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSetting {
    Joint,
    Current,
}

impl From<InputSetting> for InputMode {
    fn from(s: InputSetting) -> InputMode {
        match s {
            InputSetting::Joint => InputMode::Joint,
            InputSetting::Current => InputMode::CurrentOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionSetting {
    Corrected,
    Vote,
    Compiled,
}

impl From<DecisionSetting> for Decision {
    fn from(s: DecisionSetting) -> Decision {
        match s {
            DecisionSetting::Corrected => Decision::Corrected,
            DecisionSetting::Vote => Decision::Vote,
            DecisionSetting::Compiled => Decision::Compiled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub input: InputSetting,
    pub validation_fraction: f64,
    /// Also train a current-state-only precondition model for comparison.
    pub ablation: bool,
    /// Applicability decision used by `eval`.
    pub decision: DecisionSetting,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            input: InputSetting::Joint,
            validation_fraction: 0.2,
            ablation: true,
            decision: DecisionSetting::Corrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompileSection {
    pub pu_adjusted_gate: bool,
    pub flatten_cap: usize,
    /// Domains larger than this are not written; the translation is reported as failed.
    pub max_domain_bytes: u64,
}

impl Default for CompileSection {
    fn default() -> Self {
        CompileSection {
            pu_adjusted_gate: false,
            flatten_cap: 100_000,
            max_domain_bytes: 1 << 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    /// `bfs` or `astar_blind`.
    pub algorithm: String,
    pub max_expanded: u64,
    pub max_seconds: f64,
    pub walk_lengths: Vec<usize>,
    pub per_length: usize,
    pub seed: u64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let l = Limits::default();
        PlannerSection {
            algorithm: "bfs".into(),
            max_expanded: l.max_expanded,
            max_seconds: l.max_seconds,
            walk_lengths: vec![7, 14],
            per_length: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

fn field(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigFile {
            path: None,
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ExperimentConfig, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: Some(path.to_path_buf()),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: Some(path.to_path_buf()),
            message: e.to_string(),
        })
    }

    /// Checks every value against the preconditions of the stage that reads it.
    pub fn validate(&self) -> Result<(), CliError> {
        self.oracle()?;
        if !(0.0..=1.0).contains(&self.domain.noise) {
            return Err(field("domain.noise", "must lie in [0, 1]"));
        }
        if self.sampling.count < 2 {
            return Err(field("sampling.count", "must be at least 2"));
        }
        if !(self.sampling.split > 0.0 && self.sampling.split < 1.0) {
            return Err(field("sampling.split", "must lie strictly between 0 and 1"));
        }
        if self.labeling.mode == LabelingMode::Capacity && self.labeling.capacity == 0 {
            return Err(field("labeling.capacity", "must be at least 1"));
        }
        if self.forest.trees.is_empty() || self.forest.trees.contains(&0) {
            return Err(field(
                "forest.trees",
                "must be a non-empty list of positive counts",
            ));
        }
        if self.forest.depths.is_empty() || self.forest.depths.contains(&0) {
            return Err(field(
                "forest.depths",
                "must be a non-empty list of positive depths",
            ));
        }
        if !(self.forest.bag_fraction > 0.0 && self.forest.bag_fraction <= 1.0) {
            return Err(field("forest.bag_fraction", "must lie in (0, 1]"));
        }
        if !(self.model.validation_fraction > 0.0 && self.model.validation_fraction < 1.0) {
            return Err(field(
                "model.validation_fraction",
                "must lie strictly between 0 and 1",
            ));
        }
        if self.compile.flatten_cap == 0 {
            return Err(field("compile.flatten_cap", "must be at least 1"));
        }
        self.algorithm()?;
        if self.planner.max_expanded == 0 {
            return Err(field("planner.max_expanded", "must be at least 1"));
        }
        if !(self.planner.max_seconds > 0.0 && self.planner.max_seconds.is_finite()) {
            return Err(field(
                "planner.max_seconds",
                "must be a positive number of seconds",
            ));
        }
        if self.planner.walk_lengths.is_empty() || self.planner.walk_lengths.contains(&0) {
            return Err(field(
                "planner.walk_lengths",
                "must be a non-empty list of positive lengths",
            ));
        }
        if self.planner.per_length == 0 {
            return Err(field("planner.per_length", "must be at least 1"));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(field("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn oracle(&self) -> Result<Box<dyn GroundTruthDomain>, CliError> {
        domain_by_name(&self.domain.name, self.domain.size)
            .map_err(|e| field("domain", e.to_string()))
    }

    /// PDDL domain name, e.g. `lightsout3`.
    pub fn domain_name(&self) -> String {
        format!(
            "{}{}",
            self.domain.name.replace(['_', '-'], ""),
            self.domain.size
        )
    }

    pub fn algorithm(&self) -> Result<Algorithm, CliError> {
        self.planner
            .algorithm
            .parse()
            .map_err(|e: String| field("planner.algorithm", e))
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_expanded: self.planner.max_expanded,
            max_seconds: self.planner.max_seconds,
        }
    }

    /// Model parameters for one `(trees, depth)` cell.
    pub fn model_params(&self, trees: usize, depth: usize, input: InputMode) -> ModelParams {
        ModelParams {
            forest: ForestParams {
                trees,
                max_depth: depth,
                bag_fraction: self.forest.bag_fraction,
                balanced: self.forest.balanced,
                seed: self.forest.seed,
                ..ForestParams::default()
            },
            validation_fraction: self.model.validation_fraction,
            input,
        }
    }

    /// The `(trees, depth)` cell used by `train`.
    pub fn primary_cell(&self) -> (usize, usize) {
        (self.forest.trees[0], self.forest.depths[0])
    }

    pub fn out(&self, name: impl AsRef<Path>) -> PathBuf {
        self.output.dir.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c =
            ExperimentConfig::from_toml("[domain]\nsize = 4\n[forest]\ntrees = [1, 2]\n").unwrap();
        assert_eq!(c.domain.size, 4);
        assert_eq!(c.domain.name, "lightsout");
        assert_eq!(c.forest.trees, vec![1, 2]);
        assert_eq!(c.planner.walk_lengths, vec![7, 14]);
        assert_eq!(c.domain_name(), "lightsout4");
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig::default();
        c.sampling.split = 1.0;
        match c.validate() {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "sampling.split"),
            other => panic!("{other:?}"),
        }
        let mut c = ExperimentConfig::default();
        c.planner.algorithm = "dfs".into();
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("planner.algorithm"));
        let mut c = ExperimentConfig::default();
        c.domain.name = "hanoi".into();
        assert!(c.validate().unwrap_err().to_string().contains("domain"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("[forest]\ntress = [1]\n").unwrap_err();
        assert!(err.to_string().contains("tress"));
    }
}
