//! Pipeline stages. Each reads its inputs from the output directory, writes
//! its artifacts there and returns a short summary.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::compile::{
    domain_len, emit_problem, flatten_domain, format_metrics_csv, write_domain, FlattenCount,
};
use crate::dataset::{
    make_instances, read_dataset, sample_transitions_with, split, write_dataset, GroundTruthDomain,
    SamplingOptions, TransitionDataset,
};
use crate::labeler::{label_by_signature, label_capacity_bounded, tune_label_count, Labeling};
use crate::model::{
    assemble, evaluate_effects, evaluate_preconditions, partition, read_bundle, to_document,
    train_actions, train_precondition, write_bundle, ActionMapping, ActionModel, Decision,
    InputMode, ModelParams, PreconditionReport, TrainedAction, MANIFEST_FILE,
};
use crate::planner::{
    format_plan, parse_domain, parse_problem, search, validate, GroundAction, Outcome, SearchResult,
};

use super::artifacts::*;
use super::config::{ExperimentConfig, LabelingMode};
use super::report::render_report;
use super::CliError;

fn stage(name: &'static str) -> impl Fn(String) -> CliError {
    move |message| CliError::Stage {
        stage: name,
        message,
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            path: path.to_path_buf(),
        })
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    require(path)?;
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_dataset(path: &Path) -> Result<TransitionDataset, CliError> {
    require(path)?;
    read_dataset(path).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn save_dataset(ds: &TransitionDataset, path: &Path) -> Result<(), CliError> {
    write_text(path, "")?;
    write_dataset(ds, path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_bundle(path: &Path) -> Result<(Vec<TrainedAction>, ModelParams), CliError> {
    require(&path.join(MANIFEST_FILE))?;
    let (trained, params, _) = read_bundle(path).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((trained, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSummary {
    pub transitions: usize,
    pub train: usize,
    pub test: usize,
}

/// Samples transitions from the simulator and splits them.
pub fn gen(cfg: &ExperimentConfig) -> Result<GenSummary, CliError> {
    let oracle = cfg.oracle()?;
    let options = SamplingOptions {
        noise: cfg.domain.noise,
        ..SamplingOptions::default()
    };
    let err = stage("gen");
    let ds = sample_transitions_with(
        oracle.as_ref(),
        cfg.sampling.count,
        cfg.sampling.seed,
        &options,
    )
    .map_err(|e| err(e.to_string()))?;
    let (train, test) =
        split(&ds, cfg.sampling.split, cfg.sampling.seed).map_err(|e| err(e.to_string()))?;
    save_dataset(&ds, &cfg.out(DATASET_FILE))?;
    save_dataset(&train, &cfg.out(TRAIN_FILE))?;
    save_dataset(&test, &cfg.out(TEST_FILE))?;
    Ok(GenSummary {
        transitions: ds.len(),
        train: train.len(),
        test: test.len(),
    })
}

/// Contents of `labeling.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingRecord {
    pub mode: LabelingMode,
    pub label_count: usize,
    /// Reconstruction error on the training split; absent for ground-truth labels.
    pub reconstruction_error: Option<f64>,
    /// Flip-mask centroid per label; empty for ground-truth labels.
    pub centroids: Vec<String>,
}

impl LabelingRecord {
    /// How labels relate to simulator actions when scoring against the oracle.
    pub fn mapping(&self) -> Result<ActionMapping, String> {
        if self.mode == LabelingMode::GroundTruth {
            return Ok(ActionMapping::Identity);
        }
        let centroids = self
            .centroids
            .iter()
            .map(|c| {
                c.parse::<BitVector>()
                    .map_err(|e| format!("centroid {c:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ActionMapping::Signatures(centroids))
    }
}

pub fn read_labeling(cfg: &ExperimentConfig) -> Result<LabelingRecord, CliError> {
    let path = cfg.out(LABELING_FILE);
    let text = read_text(&path)?;
    toml::from_str(&text).map_err(|e| CliError::Artifact {
        path,
        message: e.to_string(),
    })
}

fn read_mapping(cfg: &ExperimentConfig) -> Result<ActionMapping, CliError> {
    read_labeling(cfg)?
        .mapping()
        .map_err(|message| CliError::Artifact {
            path: cfg.out(LABELING_FILE),
            message,
        })
}

/// Assigns action labels to both splits.
pub fn label(cfg: &ExperimentConfig) -> Result<LabelingRecord, CliError> {
    let train = load_dataset(&cfg.out(TRAIN_FILE))?;
    let test = load_dataset(&cfg.out(TEST_FILE))?;
    let learned: Option<Labeling> = match cfg.labeling.mode {
        LabelingMode::GroundTruth => None,
        LabelingMode::Signature => Some(label_by_signature(&train)),
        LabelingMode::Capacity => Some(label_capacity_bounded(&train, cfg.labeling.capacity)),
        LabelingMode::Tuned => Some(tune_label_count(&train).labeling),
    };
    let (labeled_train, labeled_test, record) = match learned {
        None => {
            if !train.is_labeled() || !test.is_labeled() {
                return Err(stage("label")(
                    "ground-truth labeling needs simulator labels in the splits".into(),
                ));
            }
            let record = LabelingRecord {
                mode: LabelingMode::GroundTruth,
                label_count: train.label_count().unwrap_or(0),
                reconstruction_error: None,
                centroids: Vec::new(),
            };
            (train, test, record)
        }
        Some(l) => {
            let record = LabelingRecord {
                mode: cfg.labeling.mode,
                label_count: l.label_count(),
                reconstruction_error: Some((l.reconstruction_error(&train) * 1e6).round() / 1e6),
                centroids: l.centroids.iter().map(|c| c.to_string()).collect(),
            };
            (l.apply_to(&train), l.label_dataset(&test), record)
        }
    };
    save_dataset(&labeled_train, &cfg.out(LABELED_TRAIN_FILE))?;
    save_dataset(&labeled_test, &cfg.out(LABELED_TEST_FILE))?;
    let text = toml::to_string(&record).map_err(|e| stage("label")(e.to_string()))?;
    write_text(&cfg.out(LABELING_FILE), &text)?;
    Ok(record)
}

/// Same classifiers as `trained` with preconditions retrained on `z0` only.
pub fn current_state_ablation(
    ds: &TransitionDataset,
    trained: &[TrainedAction],
    cfg: &ExperimentConfig,
    trees: usize,
    depth: usize,
) -> Result<Vec<TrainedAction>, CliError> {
    let params = cfg.model_params(trees, depth, InputMode::CurrentOnly);
    let parts = partition(ds).map_err(|e| stage("train")(e.to_string()))?;
    trained
        .par_iter()
        .map(|t| {
            let p = parts
                .iter()
                .find(|p| p.action == t.action)
                .expect("trained actions come from the same partition");
            let (forest, c) =
                train_precondition(p, &params).map_err(|e| stage("train")(e.to_string()))?;
            Ok(TrainedAction {
                precondition_forest: forest,
                pu_constant: c,
                input: InputMode::CurrentOnly,
                ..t.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub actions: usize,
    pub trees: usize,
    pub depth: usize,
    pub ablation: bool,
}

/// Trains the primary `(T, D)` cell and writes the model bundle(s).
pub fn train(cfg: &ExperimentConfig) -> Result<TrainSummary, CliError> {
    let ds = load_dataset(&cfg.out(LABELED_TRAIN_FILE))?;
    let labels = ds.label_count().unwrap_or(0);
    let (trees, depth) = cfg.primary_cell();
    let input: InputMode = cfg.model.input.into();
    let params = cfg.model_params(trees, depth, input);
    let trained = train_actions(&ds, &params).map_err(|e| stage("train")(e.to_string()))?;
    let bundle_err = |e: crate::model::BundleError| stage("train")(e.to_string());
    write_bundle(cfg.out(MODEL_DIR), &trained, &params, labels).map_err(bundle_err)?;
    let ablation = cfg.model.ablation && input == InputMode::Joint;
    if ablation {
        let current = current_state_ablation(&ds, &trained, cfg, trees, depth)?;
        let params = cfg.model_params(trees, depth, InputMode::CurrentOnly);
        write_bundle(cfg.out(ABLATION_MODEL_DIR), &current, &params, labels).map_err(bundle_err)?;
    }
    Ok(TrainSummary {
        actions: trained.len(),
        trees,
        depth,
        ablation,
    })
}

/// Compiles the model bundle, writes the domain when it fits the byte budget,
/// and records sizes and flattening counts.
pub fn compile(cfg: &ExperimentConfig) -> Result<CompileRow, CliError> {
    let bundle = cfg.out(MODEL_DIR);
    let (trained, params) = load_bundle(&bundle)?;
    let models = assemble(&trained, cfg.compile.pu_adjusted_gate)
        .map_err(|e| stage("compile")(e.to_string()))?;
    let doc = to_document(&cfg.domain_name(), &models);
    let bytes = domain_len(&doc);
    let domain_path = cfg.out(DOMAIN_FILE);
    let emitted = bytes <= cfg.compile.max_domain_bytes;
    if emitted {
        let io = |e: std::io::Error| CliError::Io {
            path: domain_path.clone(),
            message: e.to_string(),
        };
        let mut w = BufWriter::new(File::create(&domain_path).map_err(io)?);
        write_domain(&doc, &mut w).map_err(io)?;
        w.flush().map_err(io)?;
    } else {
        log::warn!(
            "domain would take {bytes} bytes, over the budget of {}; not written",
            cfg.compile.max_domain_bytes
        );
        if domain_path.exists() {
            std::fs::remove_file(&domain_path).map_err(|e| CliError::Io {
                path: domain_path.clone(),
                message: e.to_string(),
            })?;
        }
    }
    write_text(&cfg.out(METRICS_FILE), &format_metrics_csv(&doc))?;

    let flat = flatten_domain(&doc, cfg.compile.flatten_cap);
    let rows: Vec<FlattenRow> = doc
        .actions
        .iter()
        .zip(&flat.per_action)
        .map(|(a, c)| FlattenRow {
            action: a.id,
            terms: c.reported(),
            cap_exceeded: matches!(c, FlattenCount::CapExceeded { .. }),
        })
        .collect();
    write_text(&cfg.out(FLATTEN_FILE), &format_csv(&rows))?;

    let row = CompileRow {
        trees: params.forest.trees,
        depth: params.forest.max_depth,
        actions: doc.actions.len(),
        domain_bytes: bytes,
        emitted,
        flatten_cap: cfg.compile.flatten_cap,
        flatten_terms: flat.total_terms(),
        flatten_cap_exceeded: flat.cap_exceeded(),
    };
    write_text(
        &cfg.out(COMPILE_FILE),
        &format_csv(std::slice::from_ref(&row)),
    )?;
    Ok(row)
}

/// Actions to plan with: the written domain, or the in-memory compilation of
/// the bundle when `compile` declined to write it.
fn planning_actions(cfg: &ExperimentConfig) -> Result<(Vec<GroundAction>, usize), CliError> {
    let domain_path = cfg.out(DOMAIN_FILE);
    if domain_path.exists() {
        let domain = parse_domain(&read_text(&domain_path)?).map_err(|e| CliError::Artifact {
            path: domain_path.clone(),
            message: e.to_string(),
        })?;
        return Ok((domain.actions, domain.width));
    }
    let compile_path = cfg.out(COMPILE_FILE);
    let not_emitted = compile_path.exists()
        && read_csv::<CompileRow>(&compile_path)?
            .iter()
            .any(|r| !r.emitted);
    if !not_emitted {
        return Err(CliError::Missing { path: domain_path });
    }
    log::info!("domain text was over budget; planning on the in-memory compilation");
    let (trained, _) = load_bundle(&cfg.out(MODEL_DIR))?;
    let models: Vec<ActionModel> = assemble(&trained, cfg.compile.pu_adjusted_gate)
        .map_err(|e| stage("plan")(e.to_string()))?;
    let width = trained.first().map_or(0, |t| t.width);
    Ok((
        models
            .iter()
            .map(|m| GroundAction::from_schema(&m.schema()))
            .collect(),
        width,
    ))
}

fn plan_row(
    index: usize,
    walk_length: usize,
    result: &SearchResult,
    check: crate::planner::Validation,
) -> PlanRow {
    PlanRow {
        instance: index,
        walk_length,
        outcome: result.outcome.tag(),
        plan_length: result.outcome.plan().map(<[String]>::len),
        expanded: result.stats.expanded,
        generated: result.stats.generated,
        valid: check.valid,
        violation_step: check.first_violation.map(|v| v.step),
        violation_kind: check
            .first_violation
            .map(|v| v.kind.to_string())
            .unwrap_or_default(),
    }
}

/// Generates random-walk instances, searches each and validates the plans
/// in the simulator.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<PlanRow>, CliError> {
    let oracle = cfg.oracle()?;
    let mapping = read_mapping(cfg)?;
    let (actions, width) = planning_actions(cfg)?;
    if width != oracle.width() {
        return Err(stage("plan")(format!(
            "domain has {width} propositions but the simulator has {}",
            oracle.width()
        )));
    }
    let instances = make_instances(
        oracle.as_ref(),
        &cfg.planner.walk_lengths,
        cfg.planner.per_length,
        cfg.planner.seed,
    )
    .map_err(|e| stage("plan")(e.to_string()))?;
    let algorithm = cfg.algorithm()?;
    let limits = cfg.limits();
    let domain_name = cfg.domain_name();

    let problems: Vec<(PathBuf, String)> = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let path = cfg.out(PROBLEMS_DIR).join(format!("p{i:02}.pddl"));
            (
                path,
                emit_problem(&format!("p{i:02}"), &domain_name, &inst.init, &inst.goal),
            )
        })
        .collect();
    for (path, text) in &problems {
        write_text(path, text)?;
    }

    let results: Vec<(SearchResult, PlanRow)> = instances
        .par_iter()
        .zip(&problems)
        .enumerate()
        .map(|(i, (inst, (path, text)))| {
            let problem = parse_problem(text, width).map_err(|e| CliError::Artifact {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let result = search(&actions, &problem.init, &problem.goal, algorithm, &limits);
            let check = match &result.outcome {
                Outcome::Plan(p) => validate(
                    p,
                    &actions,
                    &problem.init,
                    &problem.goal,
                    oracle.as_ref(),
                    &mapping,
                ),
                _ => crate::planner::Validation {
                    valid: false,
                    first_violation: None,
                },
            };
            let row = plan_row(i, inst.walk_length, &result, check);
            Ok((result, row))
        })
        .collect::<Result<_, CliError>>()?;

    for (i, (result, _)) in results.iter().enumerate() {
        write_text(
            &cfg.out(PLANS_DIR).join(format!("p{i:02}.plan")),
            &format_plan(result),
        )?;
    }
    let rows: Vec<PlanRow> = results.into_iter().map(|(_, r)| r).collect();
    write_text(&cfg.out(PLANS_FILE), &format_csv(&rows))?;
    Ok(rows)
}

fn precondition_row(input: &str, decision: Decision, r: &PreconditionReport) -> PreconditionRow {
    PreconditionRow {
        input: input.into(),
        decision: format!("{decision:?}").to_lowercase(),
        tp: r.pooled.tp,
        fn_: r.pooled.fn_,
        tn: r.pooled.tn,
        fp: r.pooled.fp,
        recall: r.recall(),
        specificity: r.specificity(),
        f_measure: r.f_measure(),
        degenerate: r.degenerate(),
    }
}

fn score_preconditions(
    trained: &[TrainedAction],
    test: &TransitionDataset,
    oracle: &dyn GroundTruthDomain,
    mapping: &ActionMapping,
    decision: Decision,
    pu_adjusted_gate: bool,
) -> Result<PreconditionReport, String> {
    let r = if decision == Decision::Compiled {
        let models = assemble(trained, pu_adjusted_gate).map_err(|e| e.to_string())?;
        evaluate_preconditions(&models, test, oracle, mapping, decision)
    } else {
        evaluate_preconditions(trained, test, oracle, mapping, decision)
    };
    r.map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub effects: Vec<EffectRow>,
    pub preconditions: Vec<PreconditionRow>,
}

/// Effect accuracy and precondition recall/specificity/F on the test split.
pub fn eval(cfg: &ExperimentConfig) -> Result<EvalSummary, CliError> {
    let test = load_dataset(&cfg.out(LABELED_TEST_FILE))?;
    let (trained, _) = load_bundle(&cfg.out(MODEL_DIR))?;
    let oracle = cfg.oracle()?;
    let mapping = read_mapping(cfg)?;
    let err = stage("eval");

    let report = evaluate_effects(&trained, &test).map_err(|e| err(e.to_string()))?;
    let mut effects: Vec<EffectRow> = report
        .per_action
        .iter()
        .map(|a| EffectRow {
            action: Some(a.action),
            transitions: a.transitions,
            accuracy: a.accuracy,
        })
        .collect();
    effects.push(EffectRow {
        action: None,
        transitions: test.len(),
        accuracy: report.accuracy,
    });
    write_text(&cfg.out(EFFECTS_FILE), &format_csv(&effects))?;

    let decision: Decision = cfg.model.decision.into();
    let mut models = vec![(trained, cfg.model.input)];
    let ablation_dir = cfg.out(ABLATION_MODEL_DIR);
    if ablation_dir.join(MANIFEST_FILE).exists() {
        models.push((
            load_bundle(&ablation_dir)?.0,
            super::config::InputSetting::Current,
        ));
    }
    let mut preconditions = Vec::new();
    for (trained, input) in &models {
        let name = match input {
            super::config::InputSetting::Joint => "joint",
            super::config::InputSetting::Current => "current",
        };
        let r = score_preconditions(
            trained,
            &test,
            oracle.as_ref(),
            &mapping,
            decision,
            cfg.compile.pu_adjusted_gate,
        )
        .map_err(&err)?;
        preconditions.push(precondition_row(name, decision, &r));
    }
    write_text(&cfg.out(PRECONDITIONS_FILE), &format_csv(&preconditions))?;
    Ok(EvalSummary {
        effects,
        preconditions,
    })
}

/// Trains, scores and sizes every `(T, D)` cell of the forest grid.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let train = load_dataset(&cfg.out(LABELED_TRAIN_FILE))?;
    let test = load_dataset(&cfg.out(LABELED_TEST_FILE))?;
    let cells: Vec<(usize, usize)> = cfg
        .forest
        .trees
        .iter()
        .flat_map(|&t| cfg.forest.depths.iter().map(move |&d| (t, d)))
        .collect();
    let input: InputMode = cfg.model.input.into();
    let rows = cells
        .par_iter()
        .map(|&(trees, depth)| {
            let err = stage("sweep");
            let params = cfg.model_params(trees, depth, input);
            let trained = train_actions(&train, &params).map_err(|e| err(e.to_string()))?;
            let accuracy = evaluate_effects(&trained, &test)
                .map_err(|e| err(e.to_string()))?
                .accuracy;
            let models =
                assemble(&trained, cfg.compile.pu_adjusted_gate).map_err(|e| err(e.to_string()))?;
            let row = SweepRow {
                trees,
                depth,
                accuracy,
                domain_bytes: domain_len(&to_document(&cfg.domain_name(), &models)),
            };
            let cell = cfg.out(SWEEP_DIR).join(format!("T{trees}_D{depth}.csv"));
            write_text(&cell, &format_csv(std::slice::from_ref(&row)))?;
            log::info!(
                "sweep cell T={trees} D={depth}: accuracy {accuracy:.4}, {} bytes",
                row.domain_bytes
            );
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_text(&cfg.out(SWEEP_FILE), &format_csv(&rows))?;
    Ok(rows)
}

/// Renders every available CSV into `report.txt`.
pub fn report(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let load = |name: &str| -> Result<Option<String>, CliError> {
        let path = cfg.out(name);
        if path.exists() {
            read_text(&path).map(Some)
        } else {
            Ok(None)
        }
    };
    let sources = super::report::ReportSources {
        effects: load(EFFECTS_FILE)?,
        preconditions: load(PRECONDITIONS_FILE)?,
        sweep: load(SWEEP_FILE)?,
        compile: load(COMPILE_FILE)?,
        plans: load(PLANS_FILE)?,
    };
    if sources.is_empty() {
        return Err(CliError::Missing {
            path: cfg.out(EFFECTS_FILE),
        });
    }
    let text = render_report(&sources).map_err(|(name, message)| CliError::Artifact {
        path: cfg.out(name),
        message,
    })?;
    write_text(&cfg.out(REPORT_FILE), &text)?;
    Ok(text)
}
