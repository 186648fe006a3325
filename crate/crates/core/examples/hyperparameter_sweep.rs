//! Runs the gen, label and sweep stages into a scratch directory and prints
//! the accuracy and size matrices from the report.

use dsama::cli::{run_stage, Command, ExperimentConfig};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.output.dir = std::env::temp_dir().join("dsama-sweep-example");
    cfg.forest.trees = vec![1, 5, 10, 20];
    cfg.forest.depths = vec![4, 7, 12];
    cfg.validate().unwrap();
    for stage in [
        Command::Gen,
        Command::Label,
        Command::Sweep,
        Command::Report,
    ] {
        let summary = run_stage(stage, &cfg).unwrap_or_else(|e| panic!("{stage:?}: {e}"));
        if stage != Command::Report {
            println!("{stage:?}: {summary}");
        } else {
            println!("\n{summary}");
        }
    }
    println!("artifacts in {}", cfg.output.dir.display());
}
