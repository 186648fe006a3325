//! File names and CSV rows of the experiment directory. Every CSV has a fixed
//! header; floats use six decimals so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::CliError;

pub const DATASET_FILE: &str = "dataset.txt";
pub const TRAIN_FILE: &str = "train.txt";
pub const TEST_FILE: &str = "test.txt";
pub const LABELED_TRAIN_FILE: &str = "labeled_train.txt";
pub const LABELED_TEST_FILE: &str = "labeled_test.txt";
pub const LABELING_FILE: &str = "labeling.toml";
pub const MODEL_DIR: &str = "model";
pub const ABLATION_MODEL_DIR: &str = "model_current";
pub const DOMAIN_FILE: &str = "domain.pddl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FLATTEN_FILE: &str = "flatten.csv";
pub const COMPILE_FILE: &str = "compile.csv";
pub const PROBLEMS_DIR: &str = "problems";
pub const PLANS_DIR: &str = "plans";
pub const PLANS_FILE: &str = "plans.csv";
pub const EFFECTS_FILE: &str = "effects.csv";
pub const PRECONDITIONS_FILE: &str = "preconditions.csv";
pub const SWEEP_DIR: &str = "sweep";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const REPORT_FILE: &str = "report.txt";

pub trait CsvRow: Sized {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<String>;
    fn parse(fields: &[&str]) -> Result<Self, String>;
}

pub fn format_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", R::HEADER).unwrap();
    for r in rows {
        writeln!(out, "{}", r.fields().join(",")).unwrap();
    }
    out
}

pub fn parse_csv<R: CsvRow>(text: &str) -> Result<Vec<R>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == R::HEADER => {}
        Some(h) => return Err(format!("expected header {:?}, found {h:?}", R::HEADER)),
        None => return Err("empty file".into()),
    }
    let columns = R::HEADER.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != columns {
                return Err(format!(
                    "line {}: expected {columns} fields, found {}",
                    i + 2,
                    fields.len()
                ));
            }
            R::parse(&fields).map_err(|e| format!("line {}: {e}", i + 2))
        })
        .collect()
}

pub fn read_csv<R: CsvRow>(path: &Path) -> Result<Vec<R>, CliError> {
    let text = super::stages::read_text(path)?;
    parse_csv(&text).map_err(|message| CliError::Artifact {
        path: path.to_path_buf(),
        message,
    })
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("invalid {what} {s:?}"))
}

fn opt_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        num(s, what).map(Some)
    }
}

fn float(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Effect accuracy for one action, or overall when `action` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectRow {
    pub action: Option<usize>,
    pub transitions: usize,
    pub accuracy: f64,
}

impl CsvRow for EffectRow {
    const HEADER: &'static str = "action,transitions,accuracy";
    fn fields(&self) -> Vec<String> {
        vec![
            self.action.map_or("all".into(), |a| a.to_string()),
            self.transitions.to_string(),
            float(self.accuracy),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(EffectRow {
            action: if f[0] == "all" {
                None
            } else {
                Some(num(f[0], "action")?)
            },
            transitions: num(f[1], "transition count")?,
            accuracy: num(f[2], "accuracy")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionRow {
    /// `joint` or `current`.
    pub input: String,
    pub decision: String,
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f_measure: f64,
    pub degenerate: bool,
}

impl CsvRow for PreconditionRow {
    const HEADER: &'static str =
        "input,decision,tp,fn,tn,fp,recall,specificity,f_measure,degenerate";
    fn fields(&self) -> Vec<String> {
        vec![
            self.input.clone(),
            self.decision.clone(),
            self.tp.to_string(),
            self.fn_.to_string(),
            self.tn.to_string(),
            self.fp.to_string(),
            opt_float(self.recall),
            opt_float(self.specificity),
            float(self.f_measure),
            self.degenerate.to_string(),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(PreconditionRow {
            input: f[0].into(),
            decision: f[1].into(),
            tp: num(f[2], "tp")?,
            fn_: num(f[3], "fn")?,
            tn: num(f[4], "tn")?,
            fp: num(f[5], "fp")?,
            recall: opt_num(f[6], "recall")?,
            specificity: opt_num(f[7], "specificity")?,
            f_measure: num(f[8], "f_measure")?,
            degenerate: num(f[9], "degenerate flag")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub trees: usize,
    pub depth: usize,
    pub accuracy: f64,
    pub domain_bytes: u64,
}

impl CsvRow for SweepRow {
    const HEADER: &'static str = "trees,depth,accuracy,domain_bytes";
    fn fields(&self) -> Vec<String> {
        vec![
            self.trees.to_string(),
            self.depth.to_string(),
            float(self.accuracy),
            self.domain_bytes.to_string(),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(SweepRow {
            trees: num(f[0], "trees")?,
            depth: num(f[1], "depth")?,
            accuracy: num(f[2], "accuracy")?,
            domain_bytes: num(f[3], "domain bytes")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileRow {
    pub trees: usize,
    pub depth: usize,
    pub actions: usize,
    pub domain_bytes: u64,
    /// False when the domain exceeded the byte budget and was not written.
    pub emitted: bool,
    pub flatten_cap: usize,
    pub flatten_terms: u64,
    pub flatten_cap_exceeded: bool,
}

impl CsvRow for CompileRow {
    const HEADER: &'static str =
        "trees,depth,actions,domain_bytes,emitted,flatten_cap,flatten_terms,flatten_cap_exceeded";
    fn fields(&self) -> Vec<String> {
        vec![
            self.trees.to_string(),
            self.depth.to_string(),
            self.actions.to_string(),
            self.domain_bytes.to_string(),
            self.emitted.to_string(),
            self.flatten_cap.to_string(),
            self.flatten_terms.to_string(),
            self.flatten_cap_exceeded.to_string(),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(CompileRow {
            trees: num(f[0], "trees")?,
            depth: num(f[1], "depth")?,
            actions: num(f[2], "action count")?,
            domain_bytes: num(f[3], "domain bytes")?,
            emitted: num(f[4], "emitted flag")?,
            flatten_cap: num(f[5], "flatten cap")?,
            flatten_terms: num(f[6], "flatten terms")?,
            flatten_cap_exceeded: num(f[7], "flatten flag")?,
        })
    }
}

/// Per-action flattening result.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenRow {
    pub action: usize,
    pub terms: u64,
    pub cap_exceeded: bool,
}

impl CsvRow for FlattenRow {
    const HEADER: &'static str = "action,terms,cap_exceeded";
    fn fields(&self) -> Vec<String> {
        vec![
            self.action.to_string(),
            self.terms.to_string(),
            self.cap_exceeded.to_string(),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(FlattenRow {
            action: num(f[0], "action")?,
            terms: num(f[1], "terms")?,
            cap_exceeded: num(f[2], "cap flag")?,
        })
    }
}

/// One planning query: search outcome plus oracle validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    pub instance: usize,
    pub walk_length: usize,
    /// `plan`, `unreachable` or `resource_exhausted_<limit>`.
    pub outcome: String,
    pub plan_length: Option<usize>,
    pub expanded: u64,
    pub generated: u64,
    pub valid: bool,
    pub violation_step: Option<usize>,
    pub violation_kind: String,
}

impl CsvRow for PlanRow {
    const HEADER: &'static str = concat!(
        "instance,walk_length,outcome,plan_length,expanded,generated",
        ",valid,violation_step,violation_kind"
    );
    fn fields(&self) -> Vec<String> {
        vec![
            self.instance.to_string(),
            self.walk_length.to_string(),
            self.outcome.clone(),
            self.plan_length.map(|l| l.to_string()).unwrap_or_default(),
            self.expanded.to_string(),
            self.generated.to_string(),
            self.valid.to_string(),
            self.violation_step
                .map(|s| s.to_string())
                .unwrap_or_default(),
            self.violation_kind.clone(),
        ]
    }
    fn parse(f: &[&str]) -> Result<Self, String> {
        Ok(PlanRow {
            instance: num(f[0], "instance")?,
            walk_length: num(f[1], "walk length")?,
            outcome: f[2].into(),
            plan_length: opt_num(f[3], "plan length")?,
            expanded: num(f[4], "expanded")?,
            generated: num(f[5], "generated")?,
            valid: num(f[6], "valid flag")?,
            violation_step: opt_num(f[7], "violation step")?,
            violation_kind: f[8].into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PLAN_CSV_HEADER;

    #[test]
    fn rows_round_trip() {
        let plans = vec![PlanRow {
            instance: 3,
            walk_length: 7,
            outcome: "plan".into(),
            plan_length: Some(5),
            expanded: 40,
            generated: 360,
            valid: false,
            violation_step: Some(2),
            violation_kind: "successor_mismatch".into(),
        }];
        assert_eq!(parse_csv::<PlanRow>(&format_csv(&plans)).unwrap(), plans);
        let pre = vec![PreconditionRow {
            input: "joint".into(),
            decision: "corrected".into(),
            tp: 1,
            fn_: 0,
            tn: 0,
            fp: 0,
            recall: Some(1.0),
            specificity: None,
            f_measure: 0.0,
            degenerate: true,
        }];
        assert_eq!(
            parse_csv::<PreconditionRow>(&format_csv(&pre)).unwrap(),
            pre
        );
        let eff = vec![EffectRow {
            action: None,
            transitions: 9,
            accuracy: 0.5,
        }];
        assert_eq!(parse_csv::<EffectRow>(&format_csv(&eff)).unwrap(), eff);
    }

    #[test]
    fn plan_header_extends_the_planner_header() {
        assert!(PlanRow::HEADER.starts_with(PLAN_CSV_HEADER));
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(parse_csv::<SweepRow>("a,b\n1,2\n").is_err());
        assert!(parse_csv::<SweepRow>("trees,depth,accuracy,domain_bytes\n1,2,0.5\n").is_err());
    }
}
