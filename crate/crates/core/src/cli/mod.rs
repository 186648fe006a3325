//! Command-line pipeline over an experiment directory.
//!
//! Each subcommand is one stage; stages communicate only through files in the
//! output directory, so any stage can be rerun on its own.

pub mod artifacts;
pub mod config;
pub mod report;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration value for {field}: {message}")]
    Config { field: String, message: String },
    #[error("cannot load configuration{}: {message}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    ConfigFile {
        path: Option<PathBuf>,
        message: String,
    },
    #[error("missing artifact {}; run the stage that produces it first", path.display())]
    Missing { path: PathBuf },
    #[error("malformed artifact {}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },
    #[error("{stage} failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("i/o error on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// 1 for bad invocations or configuration, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::ConfigFile { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dsama",
    version,
    about = "Learn PDDL action models from binary state transitions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample transitions from the simulator and split them.
    Gen,
    /// Assign action labels to the splits.
    Label,
    /// Train effect and precondition forests for the primary cell.
    Train,
    /// Compile the trained model to a PDDL domain.
    Compile,
    /// Solve random-walk instances and validate the plans.
    Plan,
    /// Score effects and preconditions on the test split.
    Eval,
    /// Train and size every (trees, depth) cell.
    Sweep,
    /// Summarise every available result in report.txt.
    Report,
}

/// Values that replace the corresponding configuration entries.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML configuration file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Simulator: lightsout or puzzle.
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// Simulator size (grid side).
    #[arg(long, visible_alias = "n", global = true)]
    pub size: Option<usize>,
    /// Number of sampled transitions.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Seed for sampling, splitting, forests and instances.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Probability of flipping each observed bit.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    /// Training share of the split.
    #[arg(long, global = true)]
    pub split: Option<f64>,
    /// ground-truth, signature, capacity or tuned.
    #[arg(long, global = true)]
    pub labeling: Option<config::LabelingMode>,
    /// Label budget for capacity labeling.
    #[arg(long, global = true)]
    pub capacity: Option<usize>,
    /// Tree counts, comma separated; the first is the primary cell.
    #[arg(long, value_delimiter = ',', global = true)]
    pub trees: Option<Vec<usize>>,
    /// Depth limits, comma separated; the first is the primary cell.
    #[arg(long, value_delimiter = ',', global = true)]
    pub depths: Option<Vec<usize>>,
    /// Precondition input: joint or current.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// bfs or astar_blind.
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    #[arg(long, global = true)]
    pub max_expanded: Option<u64>,
    #[arg(long, global = true)]
    pub max_seconds: Option<f64>,
}

impl Overrides {
    /// Loads the configuration file (or defaults) and applies the overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::read(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.output.dir = v.clone();
        }
        if let Some(v) = &self.domain {
            cfg.domain.name = v.clone();
        }
        if let Some(v) = self.size {
            cfg.domain.size = v;
        }
        if let Some(v) = self.count {
            cfg.sampling.count = v;
        }
        if let Some(v) = self.seed {
            cfg.sampling.seed = v;
            cfg.forest.seed = v;
            cfg.planner.seed = v;
        }
        if let Some(v) = self.noise {
            cfg.domain.noise = v;
        }
        if let Some(v) = self.split {
            cfg.sampling.split = v;
        }
        if let Some(v) = self.labeling {
            cfg.labeling.mode = v;
        }
        if let Some(v) = self.capacity {
            cfg.labeling.capacity = v;
        }
        if let Some(v) = &self.trees {
            cfg.forest.trees = v.clone();
        }
        if let Some(v) = &self.depths {
            cfg.forest.depths = v.clone();
        }
        if let Some(v) = &self.input {
            cfg.model.input = match v.as_str() {
                "joint" => config::InputSetting::Joint,
                "current" => config::InputSetting::Current,
                other => {
                    return Err(CliError::Config {
                        field: "model.input".into(),
                        message: format!("unknown input {other:?}; expected joint or current"),
                    })
                }
            };
        }
        if let Some(v) = &self.algorithm {
            cfg.planner.algorithm = v.clone();
        }
        if let Some(v) = self.max_expanded {
            cfg.planner.max_expanded = v;
        }
        if let Some(v) = self.max_seconds {
            cfg.planner.max_seconds = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one stage and returns a one-line summary.
pub fn run_stage(command: Command, cfg: &ExperimentConfig) -> Result<String, CliError> {
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::Io {
        path: cfg.output.dir.clone(),
        message: e.to_string(),
    })?;
    Ok(match command {
        Command::Gen => {
            let s = stages::gen(cfg)?;
            format!(
                "sampled {} transitions ({} train, {} test)",
                s.transitions, s.train, s.test
            )
        }
        Command::Label => {
            let r = stages::label(cfg)?;
            format!("{} labels ({:?})", r.label_count, r.mode)
        }
        Command::Train => {
            let s = stages::train(cfg)?;
            format!(
                "trained {} actions with T={} D={}{}",
                s.actions,
                s.trees,
                s.depth,
                if s.ablation {
                    " plus current-state ablation"
                } else {
                    ""
                }
            )
        }
        Command::Compile => {
            let r = stages::compile(cfg)?;
            format!(
                "domain {} bytes ({}), flattened preconditions {} terms{}",
                r.domain_bytes,
                if r.emitted { "written" } else { "over budget" },
                r.flatten_terms,
                if r.flatten_cap_exceeded {
                    " (cap exceeded)"
                } else {
                    ""
                }
            )
        }
        Command::Plan => {
            let rows = stages::plan(cfg)?;
            let found = rows.iter().filter(|r| r.plan_length.is_some()).count();
            let valid = rows.iter().filter(|r| r.valid).count();
            format!("{} instances, {found} plans, {valid} valid", rows.len())
        }
        Command::Eval => {
            let s = stages::eval(cfg)?;
            let all = s.effects.last().map_or(0.0, |r| r.accuracy);
            let f = s.preconditions.first().map_or(0.0, |r| r.f_measure);
            format!("effect accuracy {all:.4}, precondition F {f:.4}")
        }
        Command::Sweep => {
            let rows = stages::sweep(cfg)?;
            format!("{} cells", rows.len())
        }
        Command::Report => stages::report(cfg)?,
    })
}

/// Parses `args` (program name first), runs the stage and maps errors to exit codes.
pub fn run_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli
        .overrides
        .resolve()
        .and_then(|cfg| run_stage(cli.command, &cfg))
    {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use artifacts::*;

    fn small(dir: &std::path::Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.output.dir = dir.to_path_buf();
        cfg.sampling.count = 1500;
        cfg.forest.trees = vec![5, 3];
        cfg.forest.depths = vec![8, 4];
        cfg.planner.per_length = 10;
        cfg.compile.flatten_cap = 2000;
        cfg
    }

    #[test]
    fn overrides_reach_the_config() {
        let cli =
            Cli::try_parse_from(["dsama", "gen", "--n", "4", "--trees", "3,7", "--seed", "9"])
                .unwrap();
        assert_eq!(cli.command, Command::Gen);
        let cfg = cli.overrides.resolve().unwrap();
        assert_eq!(cfg.domain.size, 4);
        assert_eq!(cfg.forest.trees, vec![3, 7]);
        assert_eq!((cfg.sampling.seed, cfg.planner.seed), (9, 9));
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let cli = Cli::try_parse_from(["dsama", "gen", "--split", "1.5"]).unwrap();
        let e = cli.overrides.resolve().unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("sampling.split"));
        assert!(Cli::try_parse_from(["dsama", "frobnicate"]).is_err());
    }

    #[test]
    fn gen_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_stage(Command::Gen, &small(a.path())).unwrap();
        run_stage(Command::Gen, &small(b.path())).unwrap();
        for f in [DATASET_FILE, TRAIN_FILE, TEST_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn stages_name_missing_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        for (command, expected) in [
            (Command::Label, TRAIN_FILE),
            (Command::Train, LABELED_TRAIN_FILE),
            (Command::Eval, LABELED_TEST_FILE),
            (Command::Report, EFFECTS_FILE),
        ] {
            let e = run_stage(command, &cfg).unwrap_err();
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains(expected), "{command:?}: {e}");
        }
        let e = run_stage(Command::Compile, &cfg).unwrap_err();
        assert!(e.to_string().contains(MODEL_DIR), "{e}");
    }

    #[test]
    fn full_pipeline_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        for c in [
            Command::Gen,
            Command::Label,
            Command::Train,
            Command::Compile,
            Command::Plan,
            Command::Eval,
            Command::Sweep,
            Command::Report,
        ] {
            run_stage(c, &cfg).unwrap_or_else(|e| panic!("{c:?}: {e}"));
        }
        let plans = read_csv::<PlanRow>(&dir.path().join(PLANS_FILE)).unwrap();
        assert_eq!(plans.len(), 20);
        let sweep = read_csv::<SweepRow>(&dir.path().join(SWEEP_FILE)).unwrap();
        assert_eq!(sweep.len(), 4);
        for t in [5, 3] {
            for d in [8, 4] {
                assert!(dir
                    .path()
                    .join(SWEEP_DIR)
                    .join(format!("T{t}_D{d}.csv"))
                    .exists());
            }
        }
        let pre = read_csv::<PreconditionRow>(&dir.path().join(PRECONDITIONS_FILE)).unwrap();
        assert_eq!(
            pre.iter().map(|r| r.input.as_str()).collect::<Vec<_>>(),
            ["joint", "current"]
        );
        let report = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        for heading in [
            "Table 1",
            "Table 2",
            "Table 3a",
            "Table 3b",
            "Planning",
            "Failure modes",
        ] {
            assert!(report.contains(heading), "{heading}");
        }
    }

    #[test]
    fn over_budget_domain_still_plans() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.compile.max_domain_bytes = 10;
        cfg.planner.per_length = 2;
        for c in [
            Command::Gen,
            Command::Label,
            Command::Train,
            Command::Compile,
        ] {
            run_stage(c, &cfg).unwrap();
        }
        assert!(!dir.path().join(DOMAIN_FILE).exists());
        let rows = stages::plan(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        let report = stages::report(&cfg).unwrap();
        assert!(report.contains("translation budget exceeded"));
    }
}
