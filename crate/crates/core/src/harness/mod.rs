//! Experiment orchestration: datasets, end-to-end training runs with
//! spectral probing, and the artifacts they leave behind.

mod config;
mod data;
mod experiment;
mod plot;
mod trace;
pub mod verify;

pub use config::{ClusterConfig, ExperimentConfig, MnistSource, TargetId};
pub use data::{build_1d_dataset, gaussian_clusters, load_idx, subsample, GRID_HALF_WIDTH};
pub use experiment::{
    first_crossing, is_ordered, run_experiment, run_in_memory, sweep, RunArtifacts, RunOutcome, Summary,
    SweepReport, CONVERGENCE_THRESHOLD,
};
pub use plot::{emit_heatmap_svg, heatmap_svg};
pub use trace::{emit_csv, parse_csv, read_csv, Trace, TraceKind, TraceRow};
