//! Frequency-domain measurements of how well a network fits its target.
//!
//! For one-dimensional targets sampled on a uniform grid, [`dft`] and
//! [`relative_spectral_error`] give the per-frequency relative error. For
//! high-dimensional inputs, where a DFT is not available, [`GaussianFilter`]
//! splits labels into a smooth low-frequency part and the high-frequency
//! remainder.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `1/n`-normalized DFT coefficients `F_k = (1/n) sum_j f_j exp(-2 pi i j k / n)`,
/// `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumView {
    coefficients: Vec<Complex64>,
}

impl SpectrumView {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> Complex64 {
        self.coefficients[k]
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.coefficients[k].norm()
    }
}

/// Direct O(n^2) summation. The sample index starts at 0, so an impulse at
/// the first sample has a flat spectrum; magnitudes do not depend on the
/// origin.
pub fn dft(samples: &[f64]) -> SpectrumView {
    let n = samples.len();
    let scale = 1.0 / n as f64;
    let coefficients = (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &f) in samples.iter().enumerate() {
                // Reduce j k mod n first so the angle stays small and exact.
                let phase = ((j * k) % n) as f64 / n as f64;
                let angle = -2.0 * std::f64::consts::PI * phase;
                acc += Complex64::from_polar(f, angle);
            }
            acc * scale
        })
        .collect();
    SpectrumView { coefficients }
}

/// `|F_out(k) - F_target(k)| / |F_target(k)|`.
pub fn relative_spectral_error(target: &SpectrumView, output: &SpectrumView, k: usize) -> Result<f64> {
    let t = target.coefficient(k);
    let denom = t.norm();
    if denom == 0.0 {
        return Err(Error::ZeroTargetFrequency { k });
    }
    Ok((output.coefficient(k) - t).norm() / denom)
}

pub const DEFAULT_PEAK_RATIO: f64 = 0.1;

/// Frequencies `k <= n/2` whose magnitude is at least `ratio` times the
/// largest magnitude, in increasing order.
pub fn select_peak_frequencies(target: &SpectrumView, ratio: f64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::config(format!("peak ratio {ratio} outside (0, 1]")));
    }
    let half = target.len() / 2;
    let max = (0..=half).map(|k| target.magnitude(k)).fold(0.0, f64::max);
    Ok((0..=half)
        .filter(|&k| target.magnitude(k) >= ratio * max)
        .collect())
}

/// Row-normalized Gaussian kernel over a fixed set of inputs.
///
/// `delta` is the variance: `G(x) = exp(-|x|^2 / (2 delta))`.
#[derive(Debug, Clone)]
pub struct GaussianFilter {
    delta: f64,
    weights: Array2<f64>,
}

impl GaussianFilter {
    /// `inputs` has one sample per row.
    pub fn new(inputs: ArrayView2<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::config(format!("filter variance {delta} must be positive")));
        }
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let sq: Vec<f64> = inputs.rows().into_iter().map(|r| r.dot(&r)).collect();
        let gram = inputs.dot(&inputs.t());
        let mut weights = Array2::zeros((n, n));
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let d2 = if i == j {
                    0.0
                } else {
                    let direct: f64 = inputs
                        .row(i)
                        .iter()
                        .zip(inputs.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    // The Gram form is cheaper but cancels badly for close
                    // points; fall back to the direct sum there.
                    let fast = (sq[i] + sq[j] - 2.0 * gram[[i, j]]).max(0.0);
                    if fast > 1e-6 * (sq[i] + sq[j]) {
                        fast
                    } else {
                        direct
                    }
                };
                let g = (-d2 / (2.0 * delta)).exp();
                weights[[i, j]] = g;
                row_sum += g;
            }
            weights.row_mut(i).mapv_inplace(|g| g / row_sum);
        }
        Ok(Self { delta, weights })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Low-pass part of `labels` (one sample per row).
    pub fn low(&self, labels: ArrayView2<f64>) -> Result<Array2<f64>> {
        if labels.nrows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: labels.nrows(),
            });
        }
        Ok(self.weights.dot(&labels))
    }

    pub fn decompose(&self, labels: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let low = self.low(labels)?;
        let high = &labels - &low;
        Ok((low, high))
    }

    /// Relative low- and high-frequency errors of `outputs` against
    /// `labels`.
    pub fn errors(&self, labels: ArrayView2<f64>, outputs: ArrayView2<f64>) -> Result<FilterDecomposition> {
        if labels.dim() != outputs.dim() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: outputs.len(),
            });
        }
        let (y_low, y_high) = self.decompose(labels)?;
        let (h_low, h_high) = self.decompose(outputs)?;
        let scale = frobenius(labels.iter());
        let e_low = relative_l2(&h_low, &y_low, scale, "low-frequency")?;
        let e_high = relative_l2(&h_high, &y_high, scale, "high-frequency")?;
        Ok(FilterDecomposition {
            delta: self.delta,
            y_low,
            y_high,
            e_low,
            e_high,
        })
    }
}

fn frobenius<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// `|approx - exact| / |exact|`. A part whose norm is rounding noise
/// relative to the labels (constant labels have no high-frequency part)
/// counts as zero.
fn relative_l2(approx: &Array2<f64>, exact: &Array2<f64>, scale: f64, which: &'static str) -> Result<f64> {
    let denom = frobenius(exact.iter());
    if denom <= 1e-13 * scale {
        return Err(Error::DegenerateDenominator { which });
    }
    let num = approx
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecomposition {
    pub delta: f64,
    pub y_low: Array2<f64>,
    pub y_high: Array2<f64>,
    pub e_low: f64,
    pub e_high: f64,
}

/// One-shot [`GaussianFilter::low`].
pub fn gaussian_lowpass(inputs: ArrayView2<f64>, labels: ArrayView2<f64>, delta: f64) -> Result<Array2<f64>> {
    GaussianFilter::new(inputs, delta)?.low(labels)
}

/// One-shot [`GaussianFilter::errors`]; returns `(e_low, e_high)`.
pub fn filter_errors(
    labels: ArrayView2<f64>,
    outputs: ArrayView2<f64>,
    inputs: ArrayView2<f64>,
    delta: f64,
) -> Result<(f64, f64)> {
    let d = GaussianFilter::new(inputs, delta)?.errors(labels, outputs)?;
    Ok((d.e_low, d.e_high))
}
