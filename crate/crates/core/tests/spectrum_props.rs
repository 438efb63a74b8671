use freqlab::spectrum::{dft, filter_errors, gaussian_lowpass, relative_spectral_error, GaussianFilter};
use ndarray::Array2;
use proptest::prelude::*;

/// Textbook DFT with its own normalization, used as an oracle.
fn naive_dft(f: &[f64]) -> Vec<(f64, f64)> {
    let n = f.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in f.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            (re / n as f64, im / n as f64)
        })
        .collect()
}

fn column(v: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()
}

fn signal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dft_matches_oracle(f in signal()) {
        let ours = dft(&f);
        for (k, (re, im)) in naive_dft(&f).into_iter().enumerate() {
            let c = ours.coefficient(k);
            prop_assert!((c.re - re).abs() <= 1e-10 && (c.im - im).abs() <= 1e-10);
        }
    }

    #[test]
    fn parseval(f in signal()) {
        let spec = dft(&f);
        let n = f.len() as f64;
        let energy: f64 = f.iter().map(|v| v * v).sum::<f64>() / n;
        let spectral: f64 = (0..f.len()).map(|k| spec.magnitude(k).powi(2)).sum();
        prop_assert!((energy - spectral).abs() <= 1e-10 * (1.0 + energy));
    }

    #[test]
    fn conjugate_symmetry(f in signal()) {
        let spec = dft(&f);
        let n = f.len();
        for k in 1..n {
            let a = spec.coefficient(k);
            let b = spec.coefficient(n - k).conj();
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn scaled_output_has_error_abs_c_minus_one(f in signal(), c in -3.0f64..3.0) {
        let target = dft(&f);
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        let output = dft(&scaled);
        for k in 0..f.len() {
            if target.magnitude(k) > 1e-6 {
                let e = relative_spectral_error(&target, &output, k).unwrap();
                prop_assert!((e - (c - 1.0).abs()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn filter_parts_reconstruct_labels(
        xs in prop::collection::vec(-3.0f64..3.0, 2..30),
        delta in 0.1f64..10.0,
        seed in 0u64..1000,
    ) {
        let labels: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + (i as u64 ^ seed) as f64 * 1e-3).collect();
        let filter = GaussianFilter::new(column(&xs).view(), delta).unwrap();
        let (low, high) = filter.decompose(column(&labels).view()).unwrap();
        for i in 0..xs.len() {
            prop_assert!((low[[i, 0]] + high[[i, 0]] - labels[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn lowpass_is_a_convex_combination(
        xs in prop::collection::vec(-3.0f64..3.0, 1..30),
        ys in prop::collection::vec(-5.0f64..5.0, 30),
        delta in 0.01f64..10.0,
    ) {
        let labels = &ys[..xs.len()];
        let low = gaussian_lowpass(column(&xs).view(), column(labels).view(), delta).unwrap();
        let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in low.iter() {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }
}

#[test]
fn two_point_filter_matches_closed_form() {
    let xs = [0.0, 1.0];
    let labels = [1.0, 0.0];
    let delta = 2.0;
    let w = (-1.0f64 / (2.0 * delta)).exp();
    let low = gaussian_lowpass(column(&xs).view(), column(&labels).view(), delta).unwrap();
    assert!((low[[0, 0]] - 1.0 / (1.0 + w)).abs() <= 1e-12);
    assert!((low[[1, 0]] - w / (1.0 + w)).abs() <= 1e-12);
}

#[test]
fn perfect_fit_has_zero_filter_error() {
    let xs: Vec<f64> = (0..20).map(|i| -3.0 + 0.3 * i as f64).collect();
    let labels: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
    let (e_low, e_high) = filter_errors(
        column(&labels).view(),
        column(&labels).view(),
        column(&xs).view(),
        2.0,
    )
    .unwrap();
    assert_eq!((e_low, e_high), (0.0, 0.0));
}
