//! End-to-end experiment: train a 1-100-10-1 network on
//! sin x + sin 3x + sin 5x with conjugate gradient and watch the
//! per-frequency error fall, lowest frequency first.
//!
//! Writes its artifacts to `target/freqlab-example` unless a directory is
//! given as the first argument.

use std::path::PathBuf;

use freqlab::harness::{run_experiment, ExperimentConfig, TargetId};
use freqlab::optimizers::OptimizerConfig;

fn main() -> freqlab::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("target/freqlab-example"), PathBuf::from);
    let mut cfg = ExperimentConfig::new(TargetId::Sin1_3_5, OptimizerConfig::from_id("cg")?);
    cfg.stop.max_iter = 400;
    cfg.record_every = 5;
    cfg.out_dir = out;

    let art = run_experiment(&cfg)?;
    let trace = &art.outcome.trace;
    println!("{:>6} {:>12} {}", "epoch", "loss", trace.kind.columns().join("  "));
    for row in trace.rows.iter().step_by(8) {
        let vals: Vec<String> = row.values.iter().map(|v| format!("{v:8.3}")).collect();
        println!("{:>6} {:>12.4e} {}", row.epoch, row.loss, vals.join("  "));
    }
    let s = &art.outcome.summary;
    println!("first epoch below 0.3: {:?}", s.convergence["0.3"]);
    println!("trace: {}\nheatmap: {}", art.trace_csv.display(), art.heatmap_svg.display());
    Ok(())
}
