use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mlp::MlpSpec;
use crate::optimizers::{OptimizerConfig, StoppingRule};

/// What the network is trained to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetId {
    /// `sin x + sin 3x` on the 1-d grid.
    Sin1_3,
    /// `sin x + sin 3x + sin 5x` on the 1-d grid.
    Sin1_3_5,
    /// Subsample of an IDX image set, one-hot labels.
    MnistSubset,
    /// Seeded Gaussian clusters with one-hot labels, a stand-in for images.
    Clusters,
}

impl TargetId {
    pub fn is_1d(self) -> bool {
        matches!(self, Self::Sin1_3 | Self::Sin1_3_5)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sin1_3 => "sin1_3",
            Self::Sin1_3_5 => "sin1_3_5",
            Self::MnistSubset => "mnist_subset",
            Self::Clusters => "clusters",
        }
    }

    /// Target value at `x` for the 1-d targets.
    pub fn eval_1d(self, x: f64) -> Option<f64> {
        match self {
            Self::Sin1_3 => Some(x.sin() + (3.0 * x).sin()),
            Self::Sin1_3_5 => Some(x.sin() + (3.0 * x).sin() + (5.0 * x).sin()),
            _ => None,
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sin1_3" => Self::Sin1_3,
            "sin1_3_5" => Self::Sin1_3_5,
            "mnist_subset" => Self::MnistSubset,
            "clusters" => Self::Clusters,
            other => return Err(Error::config(format!("unknown target {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistSource {
    pub images: PathBuf,
    pub labels: PathBuf,
    #[serde(default = "default_mnist_count")]
    pub count: usize,
}

fn default_mnist_count() -> usize {
    550
}

/// Synthetic classification data: `classes` centers drawn from
/// `N(0, center_var I)`, samples from `N(center, spread_var I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub dim: usize,
    pub classes: usize,
    pub samples: usize,
    pub center_var: f64,
    pub spread_var: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            dim: 20,
            classes: 10,
            samples: 550,
            center_var: 0.5,
            spread_var: 0.1,
        }
    }
}

/// Everything that determines a run. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetId,
    pub widths: MlpSpec,
    pub optimizer: OptimizerConfig,
    pub stop: StoppingRule,
    /// Seeds the initialization and the stochastic optimizers.
    #[serde(default)]
    pub seed: u64,
    /// Seeds dataset sampling, so a seed sweep trains on one dataset.
    #[serde(default)]
    pub data_seed: u64,
    /// Epochs between spectral probes. The final epoch is always probed.
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Grid size for the 1-d targets.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Tracked frequencies; by default the peaks of the target spectrum.
    #[serde(default)]
    pub frequencies: Option<Vec<usize>>,
    #[serde(default = "default_peak_ratio")]
    pub peak_ratio: f64,
    /// Filter variances for the high-dimensional targets.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub mnist: Option<MnistSource>,
    #[serde(default)]
    pub clusters: ClusterConfig,
    /// Stop training once every tracked frequency has dropped below this
    /// relative error (1-d targets only).
    #[serde(default)]
    pub halt_below: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_grid_points() -> usize {
    201
}

fn default_peak_ratio() -> f64 {
    crate::spectrum::DEFAULT_PEAK_RATIO
}

fn default_deltas() -> Vec<f64> {
    vec![2.0, 7.0]
}

impl ExperimentConfig {
    /// Defaults for `target`: 1-100-10-1 and 2000 epochs on the 1-d targets,
    /// 784-64-10 (or 20-64-10 for clusters) and 200 epochs otherwise.
    pub fn new(target: TargetId, optimizer: OptimizerConfig) -> Self {
        let (widths, epochs) = match target {
            TargetId::Sin1_3 | TargetId::Sin1_3_5 => (vec![1, 100, 10, 1], 2000),
            TargetId::MnistSubset => (vec![784, 64, 10], 200),
            TargetId::Clusters => (vec![20, 64, 10], 200),
        };
        Self {
            target,
            widths: MlpSpec::new(widths).expect("default widths are valid"),
            optimizer,
            stop: StoppingRule::new(1e-8, epochs),
            seed: 0,
            data_seed: 0,
            record_every: 1,
            out_dir: default_out_dir(),
            grid_points: default_grid_points(),
            frequencies: None,
            peak_ratio: default_peak_ratio(),
            deltas: default_deltas(),
            mnist: None,
            clusters: ClusterConfig::default(),
            halt_below: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        self.stop.validate()?;
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        match self.target {
            TargetId::Sin1_3 | TargetId::Sin1_3_5 => {
                if self.grid_points < 2 {
                    return Err(Error::config("the 1-d grid needs at least 2 points"));
                }
                self.expect_dims(1, 1)?;
            }
            TargetId::MnistSubset => {
                if self.mnist.is_none() {
                    return Err(Error::config("mnist_subset needs image and label files"));
                }
                self.expect_dims(784, 10)?;
            }
            TargetId::Clusters => {
                let c = &self.clusters;
                if c.dim == 0 || c.classes < 2 || c.samples == 0 {
                    return Err(Error::config("cluster data needs dim >= 1, classes >= 2, samples >= 1"));
                }
                if !(c.center_var > 0.0 && c.spread_var > 0.0) {
                    return Err(Error::config("cluster variances must be positive"));
                }
                self.expect_dims(c.dim, c.classes)?;
            }
        }
        if !self.target.is_1d() {
            if self.deltas.is_empty() {
                return Err(Error::config("at least one filter variance is needed"));
            }
            if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(Error::config("filter variances must be positive"));
            }
        }
        if !(self.peak_ratio > 0.0 && self.peak_ratio <= 1.0) {
            return Err(Error::config("peak ratio must lie in (0, 1]"));
        }
        if let Some(t) = self.halt_below {
            if !(t > 0.0) {
                return Err(Error::config("halt threshold must be positive"));
            }
        }
        Ok(())
    }

    fn expect_dims(&self, input: usize, output: usize) -> Result<()> {
        if self.widths.input_dim() != input || self.widths.output_dim() != output {
            return Err(Error::config(format!(
                "target {} needs a {input}-...-{output} network, got {}",
                self.target, self.widths
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of every field except the output
    /// directory.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        // serde_json maps are ordered by key, so this text is canonical.
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
