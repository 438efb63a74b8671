use std::collections::BTreeMap;
use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TargetId};
use super::data::{build_1d_dataset, gaussian_clusters, load_idx, subsample};
use super::plot::emit_heatmap_svg;
use super::trace::{emit_csv, Trace, TraceKind};
use crate::error::{Error, Result};
use crate::mlp::{init_params, Dataset, MlpObjective};
use crate::objective::{Objective, ObjectiveHandle, ParamVector};
use crate::optimizers::{Optimizer, RunResult};
use crate::spectrum::{dft, relative_spectral_error, select_peak_frequencies, GaussianFilter, SpectrumView};

/// Relative error below which a frequency counts as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 0.3;

/// Thresholds reported in summaries: the main one and its sensitivity band.
const REPORTED_THRESHOLDS: [f64; 3] = [0.2, CONVERGENCE_THRESHOLD, 0.4];

/// Filter comparisons only count epochs after this one.
const FILTER_BURN_IN: usize = 5;

/// Machine-readable digest of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub fingerprint: String,
    pub target: TargetId,
    pub widths: String,
    pub optimizer: String,
    pub seed: u64,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub termination: crate::optimizers::Termination,
    pub evaluations: u64,
    pub gradient_calls: u64,
    /// Threshold -> frequency -> first epoch below it (`None`: never).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub convergence: BTreeMap<String, BTreeMap<String, Option<usize>>>,
    /// Filter variance -> fraction of recorded epochs after the burn-in with
    /// `e_low < e_high`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub low_before_high: BTreeMap<String, f64>,
}

/// In-memory result of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub summary: Summary,
    pub theta: ParamVector,
    pub result: RunResult,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config_json: PathBuf,
    pub trace_csv: PathBuf,
    pub summary_json: PathBuf,
    pub heatmap_svg: PathBuf,
    pub fingerprint: String,
    pub outcome: RunOutcome,
}

fn dataset_for(cfg: &ExperimentConfig) -> Result<Dataset> {
    match cfg.target {
        TargetId::Sin1_3 | TargetId::Sin1_3_5 => build_1d_dataset(cfg.target, cfg.grid_points),
        TargetId::MnistSubset => {
            let src = cfg
                .mnist
                .as_ref()
                .ok_or_else(|| Error::config("mnist_subset needs image and label files"))?;
            let full = load_idx(&src.images, &src.labels)?;
            subsample(&full, src.count, cfg.data_seed)
        }
        TargetId::Clusters => gaussian_clusters(&cfg.clusters, cfg.data_seed),
    }
}

/// Measurement taken at every recorded epoch.
enum Probe {
    Spectral {
        target: SpectrumView,
        frequencies: Vec<usize>,
    },
    Filter {
        filters: Vec<GaussianFilter>,
    },
}

impl Probe {
    fn new(cfg: &ExperimentConfig, data: &Dataset) -> Result<Self> {
        if cfg.target.is_1d() {
            let target = dft(&data.targets().column(0).to_vec());
            let frequencies = match &cfg.frequencies {
                Some(f) => f.clone(),
                None => select_peak_frequencies(&target, cfg.peak_ratio)?,
            };
            if frequencies.is_empty() {
                return Err(Error::config("no frequencies to track"));
            }
            for &k in &frequencies {
                if k >= target.len() {
                    return Err(Error::config(format!("frequency {k} outside the {}-point grid", target.len())));
                }
                if target.magnitude(k) == 0.0 {
                    return Err(Error::ZeroTargetFrequency { k });
                }
            }
            Ok(Self::Spectral { target, frequencies })
        } else {
            let filters = cfg
                .deltas
                .iter()
                .map(|&d| GaussianFilter::new(data.inputs().view(), d))
                .collect::<Result<_>>()?;
            Ok(Self::Filter { filters })
        }
    }

    fn kind(&self) -> TraceKind {
        match self {
            Self::Spectral { frequencies, .. } => TraceKind::Spectral {
                frequencies: frequencies.clone(),
            },
            Self::Filter { filters } => TraceKind::Filter {
                deltas: filters.iter().map(GaussianFilter::delta).collect(),
            },
        }
    }

    fn measure(&self, obj: &MlpObjective, theta: &[f64]) -> Result<Vec<f64>> {
        let outputs = obj.outputs(theta);
        match self {
            Self::Spectral { target, frequencies } => {
                let spectrum = dft(&outputs.column(0).to_vec());
                frequencies
                    .iter()
                    .map(|&k| relative_spectral_error(target, &spectrum, k))
                    .collect()
            }
            Self::Filter { filters } => {
                let labels = obj.data().targets().view();
                let mut values = Vec::with_capacity(2 * filters.len());
                for f in filters {
                    let d = f.errors(labels, outputs.view())?;
                    values.push(d.e_low);
                    values.push(d.e_high);
                }
                Ok(values)
            }
        }
    }
}

/// First recorded epoch at which `values` drops below `threshold`.
pub fn first_crossing(epochs: &[usize], values: &[f64], threshold: f64) -> Option<usize> {
    epochs.iter().zip(values).find(|(_, v)| **v < threshold).map(|(e, _)| *e)
}

/// Whether the frequencies converge in increasing order: the lowest must
/// cross `threshold`, and the first-crossing epochs must be non-decreasing
/// in `k`, a frequency that never crosses counting as crossing last.
pub fn is_ordered(trace: &Trace, frequencies: &[usize], threshold: f64) -> bool {
    let epochs = trace.epochs();
    let mut sorted = frequencies.to_vec();
    sorted.sort_unstable();
    let crossings: Vec<Option<usize>> = sorted
        .iter()
        .map(|&k| trace.frequency(k).and_then(|v| first_crossing(&epochs, &v, threshold)))
        .collect();
    let Some(Some(_)) = crossings.first() else {
        return false;
    };
    crossings
        .windows(2)
        .all(|w| w[1].map_or(true, |b| w[0].is_some_and(|a| a <= b)))
}

fn summarize(cfg: &ExperimentConfig, trace: &Trace, result: &RunResult, handle: &ObjectiveHandle) -> Summary {
    let mut convergence = BTreeMap::new();
    let mut low_before_high = BTreeMap::new();
    let epochs = trace.epochs();
    match &trace.kind {
        TraceKind::Spectral { frequencies } => {
            for t in REPORTED_THRESHOLDS {
                let per_k = frequencies
                    .iter()
                    .map(|&k| {
                        let series = trace.frequency(k).expect("tracked");
                        (k.to_string(), first_crossing(&epochs, &series, t))
                    })
                    .collect();
                convergence.insert(t.to_string(), per_k);
            }
        }
        TraceKind::Filter { deltas } => {
            for (i, d) in deltas.iter().enumerate() {
                let (lo, hi) = trace.filter_pair(i).expect("filter column");
                let late: Vec<bool> = epochs
                    .iter()
                    .zip(lo.iter().zip(&hi))
                    .filter(|(e, _)| **e > FILTER_BURN_IN)
                    .map(|(_, (l, h))| l < h)
                    .collect();
                let frac = if late.is_empty() {
                    f64::NAN
                } else {
                    late.iter().filter(|b| **b).count() as f64 / late.len() as f64
                };
                low_before_high.insert(d.to_string(), frac);
            }
        }
    }
    Summary {
        fingerprint: cfg.fingerprint(),
        target: cfg.target,
        widths: cfg.widths.to_string(),
        optimizer: cfg.optimizer.id().to_string(),
        seed: cfg.seed,
        epochs: result.epochs(),
        initial_loss: result.reports.first().map_or(f64::NAN, |r| r.loss),
        final_loss: result.final_loss(),
        termination: result.termination,
        evaluations: handle.eval_count(),
        gradient_calls: handle.gradient_calls(),
        convergence,
        low_before_high,
    }
}

/// Runs one experiment without touching the file system.
pub fn run_in_memory(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = dataset_for(cfg)?;
    let probe = Probe::new(cfg, &data)?;
    let obj = MlpObjective::new(cfg.widths.clone(), data)?;
    let handle = ObjectiveHandle::new(&obj);
    let theta0 = init_params(&cfg.widths, cfg.seed);
    let optimizer = cfg.optimizer.clone().with_seed(cfg.seed);

    let mut trace = Trace::new(probe.kind());
    let mut failure = None;
    let record = |trace: &mut Trace, epoch: usize, theta: &[f64]| -> Result<()> {
        let values = probe.measure(&obj, theta)?;
        // Uncounted: probing is not part of training.
        trace.push(epoch, Objective::loss(&obj, theta), values);
        Ok(())
    };
    let mut callback = |epoch: usize, theta: &[f64]| {
        if epoch % cfg.record_every != 0 {
            return ControlFlow::Continue(());
        }
        if let Err(e) = record(&mut trace, epoch, theta) {
            failure = Some(e);
            return ControlFlow::Break(());
        }
        match cfg.halt_below {
            Some(t) if cfg.target.is_1d() => {
                let epochs = trace.epochs();
                let done = (0..trace.kind.width()).all(|c| first_crossing(&epochs, &trace.column(c), t).is_some());
                if done {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            }
            _ => ControlFlow::Continue(()),
        }
    };
    let result = optimizer.run(&handle, &theta0, &cfg.stop, &mut callback)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let last = result.epochs();
    if trace.rows.last().map(|r| r.epoch) != Some(last) {
        record(&mut trace, last, &result.theta)?;
    }
    let summary = summarize(cfg, &trace, &result, &handle);
    Ok(RunOutcome {
        trace,
        summary,
        theta: result.theta.clone(),
        result,
    })
}

/// Runs one experiment and writes `config.json`, `trace.csv`,
/// `summary.json` and `heatmap.svg` into `cfg.out_dir`. Files from a failed
/// write are removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let outcome = run_in_memory(cfg)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    let config_json = dir.join("config.json");
    let trace_csv = dir.join("trace.csv");
    let summary_json = dir.join("summary.json");
    let heatmap_svg = dir.join("heatmap.svg");
    let written = (|| -> Result<()> {
        fs::write(&config_json, cfg.to_json())?;
        emit_csv(&outcome.trace, &trace_csv)?;
        fs::write(&summary_json, serde_json::to_string_pretty(&outcome.summary)?)?;
        emit_heatmap_svg(&outcome.trace, &heatmap_svg)?;
        Ok(())
    })();
    if let Err(e) = written {
        for p in [&config_json, &trace_csv, &summary_json, &heatmap_svg] {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(RunArtifacts {
        config_json,
        trace_csv,
        summary_json,
        heatmap_svg,
        fingerprint: outcome.summary.fingerprint.clone(),
        outcome,
    })
}

/// Per-seed summaries of a sweep and how many seeds show low-to-high
/// ordering at each reported threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<Summary>,
    pub ordered: BTreeMap<String, usize>,
}

/// Runs `cfg` once per seed into `<out_dir>/seed_<s>` and writes
/// `<out_dir>/sweep.json`.
pub fn sweep(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<SweepReport> {
    let mut runs = Vec::with_capacity(seeds.len());
    let mut ordered: BTreeMap<String, usize> = BTreeMap::new();
    for &seed in seeds {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = seed;
        run_cfg.out_dir = seed_dir(&cfg.out_dir, seed);
        let artifacts = run_experiment(&run_cfg)?;
        let trace = &artifacts.outcome.trace;
        if let TraceKind::Spectral { frequencies } = &trace.kind {
            for t in REPORTED_THRESHOLDS {
                let entry = ordered.entry(t.to_string()).or_default();
                if is_ordered(trace, frequencies, t) {
                    *entry += 1;
                }
            }
        }
        runs.push(artifacts.outcome.summary);
    }
    let report = SweepReport { runs, ordered };
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}
