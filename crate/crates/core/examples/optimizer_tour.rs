//! Every optimizer on the Rosenbrock function from the classic start point.

use std::time::Instant;

use freqlab::optimizers::{no_callback, Optimizer, OptimizerConfig, Powell, StoppingRule};
use freqlab::{FnObjective, ObjectiveHandle};

fn main() -> freqlab::Result<()> {
    let rosen = FnObjective::new(2, |t: &[f64]| (1.0 - t[0]).powi(2) + 100.0 * (t[1] - t[0] * t[0]).powi(2));
    let start = [-1.2, 1.0];
    let stop = StoppingRule::new(1e-7, 500);

    println!("{:<8} {:>6} {:>14} {:>8} {:>10}  termination", "method", "iters", "final loss", "evals", "time");
    for id in ["gd", "cg", "tnc", "bfgs", "lbfgs", "powell", "pso", "mc"] {
        let mut opt = OptimizerConfig::from_id(id)?.with_seed(1);
        if let OptimizerConfig::Powell(p) = &mut opt {
            // Forward-only steps cannot reach (1, 1) from here.
            *p = Powell {
                bracket: [-1.0, 1.0],
                ..Powell::default()
            };
        }
        if let OptimizerConfig::Gd(g) = &mut opt {
            g.step_size = 1e-3;
        }
        let handle = ObjectiveHandle::new(&rosen);
        let t0 = Instant::now();
        let res = opt.run(&handle, &start, &stop, &mut no_callback)?;
        println!(
            "{:<8} {:>6} {:>14.6e} {:>8} {:>8.1?}  {:?}",
            id,
            res.epochs(),
            res.final_loss(),
            handle.eval_count(),
            t0.elapsed(),
            res.termination
        );
    }
    Ok(())
}
