use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ClusterConfig, TargetId};
use crate::error::{Error, Result};
use crate::mlp::Dataset;

/// The 1-d grid spans `[-GRID_HALF_WIDTH, GRID_HALF_WIDTH]`.
pub const GRID_HALF_WIDTH: f64 = 3.14;

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// `n` evenly spaced points on `[-3.14, 3.14]`, both endpoints included,
/// labelled with the 1-d target.
pub fn build_1d_dataset(target: TargetId, n: usize) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::config("the 1-d grid needs at least 2 points"));
    }
    if !target.is_1d() {
        return Err(Error::config(format!("{target} is not a 1-d target")));
    }
    let width = 2.0 * GRID_HALF_WIDTH;
    let xs: Vec<f64> = (0..n)
        .map(|j| -GRID_HALF_WIDTH + width * j as f64 / (n - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target.eval_1d(x).expect("1-d target")).collect();
    Dataset::new(
        Array2::from_shape_vec((n, 1), xs).expect("shape"),
        Array2::from_shape_vec((n, 1), ys).expect("shape"),
    )
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    let chunk = bytes.get(at..at + 4)?;
    Some(u32::from_be_bytes(chunk.try_into().ok()?))
}

/// Parses an IDX image file and its label file. Pixels are scaled to
/// `[0, 1]` and flattened row-major; labels become 10-dimensional one-hot
/// rows.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    let truncated = |p: &Path| Error::TruncatedFile {
        path: p.to_path_buf(),
    };

    let magic = read_u32(&images, 0).ok_or_else(|| truncated(images_path))?;
    if magic != IDX_IMAGES {
        return Err(Error::BadMagic {
            path: images_path.to_path_buf(),
            expected: IDX_IMAGES,
            found: magic,
        });
    }
    let count = read_u32(&images, 4).ok_or_else(|| truncated(images_path))? as usize;
    let rows = read_u32(&images, 8).ok_or_else(|| truncated(images_path))? as usize;
    let cols = read_u32(&images, 12).ok_or_else(|| truncated(images_path))? as usize;
    let pixels = rows * cols;
    let body = images
        .get(16..16 + count * pixels)
        .ok_or_else(|| truncated(images_path))?;

    let magic = read_u32(&labels, 0).ok_or_else(|| truncated(labels_path))?;
    if magic != IDX_LABELS {
        return Err(Error::BadMagic {
            path: labels_path.to_path_buf(),
            expected: IDX_LABELS,
            found: magic,
        });
    }
    let label_count = read_u32(&labels, 4).ok_or_else(|| truncated(labels_path))? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let label_bytes = labels.get(8..8 + count).ok_or_else(|| truncated(labels_path))?;

    let inputs = Array2::from_shape_vec((count, pixels), body.iter().map(|&b| f64::from(b) / 255.0).collect())
        .expect("shape");
    let mut targets = Array2::zeros((count, 10));
    for (i, &label) in label_bytes.iter().enumerate() {
        if label > 9 {
            return Err(Error::config(format!("label {label} at index {i} is not a digit")));
        }
        targets[[i, usize::from(label)]] = 1.0;
    }
    Dataset::new(inputs, targets)
}

/// `count` distinct samples chosen uniformly without replacement.
pub fn subsample(data: &Dataset, count: usize, seed: u64) -> Result<Dataset> {
    if count > data.len() {
        return Err(Error::CountTooLarge {
            requested: count,
            available: data.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, data.len(), count).into_vec();
    data.select(&picked)
}

/// Gaussian clusters labelled one-hot by cluster, classes assigned round
/// robin.
pub fn gaussian_clusters(cfg: &ClusterConfig, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let center_sd = cfg.center_var.sqrt();
    let spread_sd = cfg.spread_var.sqrt();
    let centers: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| (0..cfg.dim).map(|_| center_sd * normal()).collect())
        .collect();
    let mut inputs = Array2::zeros((cfg.samples, cfg.dim));
    let mut targets = Array2::zeros((cfg.samples, cfg.classes));
    for i in 0..cfg.samples {
        let class = i % cfg.classes;
        for k in 0..cfg.dim {
            inputs[[i, k]] = centers[class][k] + spread_sd * normal();
        }
        targets[[i, class]] = 1.0;
    }
    Dataset::new(inputs, targets)
}
