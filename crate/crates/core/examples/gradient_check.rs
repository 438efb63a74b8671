//! Forward-difference gradient of a small network's loss against a central
//! difference, plus the Hessian-vector product truncated Newton relies on.

use freqlab::harness::{build_1d_dataset, TargetId};
use freqlab::mlp::{init_params, MlpObjective, MlpSpec};
use freqlab::objective::{fd_gradient, fd_hessvec};
use freqlab::{FdConfig, Objective, ObjectiveHandle};

fn main() -> freqlab::Result<()> {
    let spec = MlpSpec::parse("1-5-1")?;
    let data = build_1d_dataset(TargetId::Sin1_3, 41)?;
    let obj = MlpObjective::new(spec.clone(), data)?;
    let handle = ObjectiveHandle::new(&obj);
    let theta = init_params(&spec, 7);
    let cfg = FdConfig::default();

    let g = fd_gradient(&handle, &theta, &cfg)?;
    println!("P = {}, loss evaluations for one gradient: {}", spec.param_count(), handle.eval_count());

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[i] += h;
        down[i] -= h;
        let central = (obj.loss(&up) - obj.loss(&down)) / (2.0 * h);
        let rel = (g[i] - central).abs() / central.abs().max(1e-8);
        worst = worst.max(rel);
        println!("  dL/dtheta[{i:2}] forward {:+.6e}  central {:+.6e}", g[i], central);
    }
    println!("worst relative deviation: {worst:.2e}");

    let v: Vec<f64> = g.iter().map(|x| -x).collect();
    let hv = fd_hessvec(&handle, &theta, &v, &cfg)?;
    let curvature: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
    println!("curvature along -g: {curvature:.4e}");
    Ok(())
}
