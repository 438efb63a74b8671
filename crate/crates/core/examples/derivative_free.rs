//! Training a small network without any gradient: Powell, the particle swarm
//! and Monte-Carlo search on the same problem.

use freqlab::harness::{build_1d_dataset, TargetId};
use freqlab::mlp::{init_params, MlpObjective, MlpSpec};
use freqlab::optimizers::{no_callback, MonteCarlo, Optimizer, ParticleSwarm, Powell, StoppingRule};
use freqlab::ObjectiveHandle;

fn main() -> freqlab::Result<()> {
    let spec = MlpSpec::parse("1-10-1")?;
    let obj = MlpObjective::new(spec.clone(), build_1d_dataset(TargetId::Sin1_3, 201)?)?;
    let theta0 = init_params(&spec, 3);

    let methods: [(&str, Box<dyn Optimizer>); 3] = [
        ("powell", Box::new(Powell::default())),
        ("pso", Box::new(ParticleSwarm { seed: 3, ..ParticleSwarm::default() })),
        ("mc", Box::new(MonteCarlo { seed: 3, ..MonteCarlo::default() })),
    ];
    for (name, opt) in methods {
        let handle = ObjectiveHandle::new(&obj);
        let res = opt.run(&handle, &theta0, &StoppingRule::new(1e-9, 300), &mut no_callback)?;
        println!(
            "{name:<7} loss {:.4} -> {:.4} in {} iterations, {} loss evaluations, {} gradients ({:?})",
            res.reports[0].loss,
            res.final_loss(),
            res.epochs(),
            handle.eval_count(),
            handle.gradient_calls(),
            res.termination
        );
    }
    Ok(())
}
