//! Plain-text summary of an experiment directory.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use super::artifacts::*;

/// Raw CSV text of each artifact that exists.
#[derive(Debug, Clone, Default)]
pub struct ReportSources {
    pub effects: Option<String>,
    pub preconditions: Option<String>,
    pub sweep: Option<String>,
    pub compile: Option<String>,
    pub plans: Option<String>,
}

impl ReportSources {
    pub fn is_empty(&self) -> bool {
        self.effects.is_none()
            && self.preconditions.is_none()
            && self.sweep.is_none()
            && self.compile.is_none()
            && self.plans.is_none()
    }
}

/// Why a compiled model did not yield a usable planning result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    /// The domain text was over the byte budget and was not written.
    TranslationBudget,
    /// Flattening to DNF stopped at the term cap.
    FlattenCap,
    /// Searches that proved the goal unreachable.
    Unreachable(usize),
    /// Searches stopped by the expansion or time limit.
    ResourceExhausted(usize),
    /// Plans found on the model that fail in the simulator.
    InvalidPlans(usize),
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureMode::TranslationBudget => f.write_str("translation budget exceeded"),
            FailureMode::FlattenCap => f.write_str("flattening cap exceeded"),
            FailureMode::Unreachable(n) => write!(f, "unreachable goal ({n})"),
            FailureMode::ResourceExhausted(n) => write!(f, "search resources exhausted ({n})"),
            FailureMode::InvalidPlans(n) => write!(f, "invalid plans ({n})"),
        }
    }
}

/// Failure modes visible in the compile and plan results.
pub fn failure_modes(compile: &[CompileRow], plans: &[PlanRow]) -> Vec<FailureMode> {
    let mut out = Vec::new();
    if compile.iter().any(|r| !r.emitted) {
        out.push(FailureMode::TranslationBudget);
    }
    if compile.iter().any(|r| r.flatten_cap_exceeded) {
        out.push(FailureMode::FlattenCap);
    }
    let count = |p: &dyn Fn(&PlanRow) -> bool| plans.iter().filter(|r| p(r)).count();
    let unreachable = count(&|r| r.outcome == "unreachable");
    let exhausted = count(&|r| r.outcome.starts_with("resource_exhausted"));
    let invalid = count(&|r| r.outcome == "plan" && !r.valid);
    if unreachable > 0 {
        out.push(FailureMode::Unreachable(unreachable));
    }
    if exhausted > 0 {
        out.push(FailureMode::ResourceExhausted(exhausted));
    }
    if invalid > 0 {
        out.push(FailureMode::InvalidPlans(invalid));
    }
    out
}

/// `1536` -> `1.5 KiB`.
pub fn human_bytes(bytes: u64) -> String {
    const UNITS: [&str; 7] = ["B", "KiB", "MiB", "GiB", "TiB", "PiB", "EiB"];
    let mut x = bytes as f64;
    let mut unit = 0;
    while x >= 1024.0 && unit + 1 < UNITS.len() {
        x /= 1024.0;
        unit += 1;
    }
    if unit == 0 {
        format!("{bytes} B")
    } else {
        format!("{x:.1} {}", UNITS[unit])
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn parsed<R: CsvRow>(
    text: &Option<String>,
    name: &'static str,
) -> Result<Option<Vec<R>>, (&'static str, String)> {
    text.as_deref()
        .map(|t| parse_csv::<R>(t).map_err(|e| (name, e)))
        .transpose()
}

fn effects_table(out: &mut String, rows: &[EffectRow]) {
    writeln!(out, "Table 1: effect accuracy on the test split").unwrap();
    writeln!(
        out,
        "{:>8} {:>12} {:>10}",
        "action", "transitions", "accuracy"
    )
    .unwrap();
    for r in rows {
        let action = r.action.map_or("all".into(), |a| format!("a{a}"));
        writeln!(
            out,
            "{action:>8} {:>12} {:>10.4}",
            r.transitions, r.accuracy
        )
        .unwrap();
    }
}

fn preconditions_table(out: &mut String, rows: &[PreconditionRow]) {
    writeln!(out, "Table 2: precondition scores (pooled over actions)").unwrap();
    writeln!(
        out,
        "{:>8} {:>10} {:>7} {:>7} {:>7} {:>7} {:>8} {:>11} {:>9}",
        "input", "decision", "tp", "fn", "tn", "fp", "recall", "specificity", "f"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:>8} {:>10} {:>7} {:>7} {:>7} {:>7} {:>8} {:>11} {:>9.4}{}",
            r.input,
            r.decision,
            r.tp,
            r.fn_,
            r.tn,
            r.fp,
            opt(r.recall),
            opt(r.specificity),
            r.f_measure,
            if r.degenerate { "  (degenerate)" } else { "" }
        )
        .unwrap();
    }
}

fn matrix(out: &mut String, title: &str, rows: &[SweepRow], cell: impl Fn(&SweepRow) -> String) {
    let trees: BTreeSet<usize> = rows.iter().map(|r| r.trees).collect();
    let depths: BTreeSet<usize> = rows.iter().map(|r| r.depth).collect();
    writeln!(out, "{title}").unwrap();
    write!(out, "{:>6}", "T\\D").unwrap();
    for d in &depths {
        write!(out, " {d:>10}").unwrap();
    }
    writeln!(out).unwrap();
    for t in &trees {
        write!(out, "{t:>6}").unwrap();
        for d in &depths {
            let text = rows
                .iter()
                .find(|r| r.trees == *t && r.depth == *d)
                .map_or("-".into(), &cell);
            write!(out, " {text:>10}").unwrap();
        }
        writeln!(out).unwrap();
    }
}

fn sweep_tables(out: &mut String, rows: &[SweepRow]) {
    matrix(
        out,
        "Table 3a: effect accuracy by trees (rows) and depth (columns)",
        rows,
        |r| format!("{:.4}", r.accuracy),
    );
    writeln!(out).unwrap();
    matrix(
        out,
        "Table 3b: domain size by trees (rows) and depth (columns)",
        rows,
        |r| human_bytes(r.domain_bytes),
    );
}

fn compile_summary(out: &mut String, rows: &[CompileRow]) {
    writeln!(out, "Compilation").unwrap();
    for r in rows {
        writeln!(
            out,
            "T={} D={}: {} actions, domain {} ({}), flattened preconditions {} terms{}",
            r.trees,
            r.depth,
            r.actions,
            human_bytes(r.domain_bytes),
            if r.emitted {
                "written"
            } else {
                "over budget, not written"
            },
            r.flatten_terms,
            if r.flatten_cap_exceeded {
                format!(" (cap {} exceeded)", r.flatten_cap)
            } else {
                String::new()
            }
        )
        .unwrap();
    }
}

fn planning_summary(out: &mut String, rows: &[PlanRow]) {
    writeln!(out, "Planning").unwrap();
    let lengths: BTreeSet<usize> = rows.iter().map(|r| r.walk_length).collect();
    writeln!(
        out,
        "{:>6} {:>9} {:>7} {:>7} {:>11} {:>9} {:>12}",
        "walk", "instances", "plans", "valid", "unreachable", "exhausted", "mean length"
    )
    .unwrap();
    for l in lengths {
        let group: Vec<&PlanRow> = rows.iter().filter(|r| r.walk_length == l).collect();
        let plans: Vec<usize> = group.iter().filter_map(|r| r.plan_length).collect();
        let mean = if plans.is_empty() {
            "n/a".into()
        } else {
            format!(
                "{:.2}",
                plans.iter().sum::<usize>() as f64 / plans.len() as f64
            )
        };
        writeln!(
            out,
            "{l:>6} {:>9} {:>7} {:>7} {:>11} {:>9} {mean:>12}",
            group.len(),
            plans.len(),
            group.iter().filter(|r| r.valid).count(),
            group.iter().filter(|r| r.outcome == "unreachable").count(),
            group
                .iter()
                .filter(|r| r.outcome.starts_with("resource_exhausted"))
                .count(),
        )
        .unwrap();
    }
}

/// Renders every available section. Errors name the artifact that failed to parse.
pub fn render_report(src: &ReportSources) -> Result<String, (&'static str, String)> {
    let effects = parsed::<EffectRow>(&src.effects, EFFECTS_FILE)?;
    let preconditions = parsed::<PreconditionRow>(&src.preconditions, PRECONDITIONS_FILE)?;
    let sweep = parsed::<SweepRow>(&src.sweep, SWEEP_FILE)?;
    let compile = parsed::<CompileRow>(&src.compile, COMPILE_FILE)?;
    let plans = parsed::<PlanRow>(&src.plans, PLANS_FILE)?;

    let mut sections = Vec::new();
    let mut section = |f: &dyn Fn(&mut String)| {
        let mut s = String::new();
        f(&mut s);
        sections.push(s);
    };
    if let Some(rows) = &effects {
        section(&|s| effects_table(s, rows));
    }
    if let Some(rows) = &preconditions {
        section(&|s| preconditions_table(s, rows));
    }
    if let Some(rows) = &sweep {
        section(&|s| sweep_tables(s, rows));
    }
    if let Some(rows) = &compile {
        section(&|s| compile_summary(s, rows));
    }
    if let Some(rows) = &plans {
        section(&|s| planning_summary(s, rows));
    }
    if compile.is_some() || plans.is_some() {
        let modes = failure_modes(
            compile.as_deref().unwrap_or(&[]),
            plans.as_deref().unwrap_or(&[]),
        );
        section(&|s| {
            writeln!(s, "Failure modes").unwrap();
            if modes.is_empty() {
                writeln!(s, "none").unwrap();
            }
            for m in &modes {
                writeln!(s, "- {m}").unwrap();
            }
        });
    }
    Ok(sections.join("\n"))
}
