use freqlab::mlp::{forward, init_params, mse_loss, Dataset, MlpObjective, MlpParams, MlpSpec};
use freqlab::objective::{fd_gradient, fd_gradient_with_loss};
use freqlab::{FdConfig, Objective, ObjectiveHandle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_regression(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3.0..3.0)]).collect();
    let ys: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
    Dataset::from_rows(&xs, &ys).unwrap()
}

/// Independent loss: explicit loops over the packed layout.
fn reference_loss(theta: &[f64], data: &Dataset) -> f64 {
    // 1-5-1: w1[5], b1[5], w2[5], b2.
    let (w1, rest) = theta.split_at(5);
    let (b1, rest) = rest.split_at(5);
    let (w2, b2) = rest.split_at(5);
    let mut sum = 0.0;
    for i in 0..data.len() {
        let x = data.inputs()[[i, 0]];
        let mut out = b2[0];
        for j in 0..5 {
            out += w2[j] / (1.0 + (-(w1[j] * x + b1[j])).exp());
        }
        sum += (out - data.targets()[[i, 0]]).powi(2);
    }
    sum / data.len() as f64
}

#[test]
fn forward_difference_matches_central_difference_oracle() {
    let spec = MlpSpec::parse("1-5-1").unwrap();
    for seed in 0..5 {
        let data = random_regression(seed, 30);
        let obj = MlpObjective::new(spec.clone(), data.clone()).unwrap();
        let handle = ObjectiveHandle::new(&obj);
        let theta = init_params(&spec, 100 + seed);
        let g = fd_gradient(&handle, &theta, &FdConfig::default()).unwrap();
        assert_eq!(handle.eval_count(), theta.len() as u64 + 1);
        let h = 1e-5;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            let central = (reference_loss(&up, &data) - reference_loss(&down, &data)) / (2.0 * h);
            let rel = (g[i] - central).abs() / central.abs().max(1e-3);
            assert!(rel <= 1e-4, "seed {seed} component {i}: {} vs {central}", g[i]);
        }
    }
}

#[test]
fn mlp_loss_matches_reference_implementation() {
    let spec = MlpSpec::parse("1-5-1").unwrap();
    let data = random_regression(9, 25);
    let theta = init_params(&spec, 4);
    let ours = mse_loss(&spec, &theta, &data).unwrap();
    assert!((ours - reference_loss(&theta, &data)).abs() <= 1e-14 * (1.0 + ours));
}

#[test]
fn gradient_counts_one_gradient_call() {
    let spec = MlpSpec::parse("1-3-2").unwrap();
    let data = Dataset::from_rows(&[vec![0.1], vec![0.7]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let obj = MlpObjective::new(spec.clone(), data).unwrap();
    let handle = ObjectiveHandle::new(&obj);
    let theta = init_params(&spec, 0);
    let est = fd_gradient_with_loss(&handle, &theta, &FdConfig::default()).unwrap();
    assert_eq!(handle.gradient_calls(), 1);
    assert_eq!(est.loss, obj.loss(&theta));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pack_unpack_round_trip(
        widths in prop::collection::vec(1usize..6, 2..5),
        seed in any::<u64>(),
    ) {
        let spec = MlpSpec::new(widths).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..spec.param_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let params = MlpParams::unpack(&spec, &theta).unwrap();
        prop_assert_eq!(params.pack(&spec).unwrap(), theta);
    }

    #[test]
    fn loss_is_pure_and_nonnegative(seed in any::<u64>()) {
        let spec = MlpSpec::parse("1-4-3-1").unwrap();
        let data = random_regression(seed, 12);
        let obj = MlpObjective::new(spec.clone(), data).unwrap();
        let theta = init_params(&spec, seed);
        let a = obj.loss(&theta);
        let b = obj.loss(&theta);
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn forward_is_affine_in_output_bias(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let spec = MlpSpec::parse("2-3-1").unwrap();
        let mut theta = init_params(&spec, seed);
        let x = [0.3, -0.8];
        let before = forward(&spec, &theta, &x).unwrap()[0];
        let last = theta.len() - 1;
        theta[last] += shift;
        let after = forward(&spec, &theta, &x).unwrap()[0];
        prop_assert!((after - before - shift).abs() <= 1e-12);
    }
}
