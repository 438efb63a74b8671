use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::objective::ObjectiveHandle;

/// Monte-Carlo-like random search: each iteration draws `n_samples` Gaussian
/// candidates around the incumbent and keeps the best of them and the
/// incumbent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarlo {
    /// Componentwise standard deviation of the candidates.
    pub delta: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            delta: 0.05,
            n_samples: 100,
            seed: 0,
        }
    }
}

impl super::Optimizer for MonteCarlo {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if !(self.delta > 0.0) {
            return Err(Error::config("Monte-Carlo delta must be positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::config("Monte-Carlo needs at least one sample per iteration"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut loss = obj.finite_loss(&theta)?;
        let mut history = vec![loss];
        if tracker.record(0, &theta, loss, None, None).is_break() {
            return Ok(tracker.finish(theta, Termination::Halted));
        }
        let mut candidate = vec![0.0; theta.len()];
        let mut best: Option<Vec<f64>> = None;
        let mut epoch = 0;
        let termination = loop {
            if epoch >= stop.stall_window
                && (history[epoch] - history[epoch - stop.stall_window]).abs() <= stop.epsilon
            {
                break Termination::Stalled;
            }
            if epoch >= stop.max_iter {
                break Termination::MaxIter;
            }
            let mut best_loss = loss;
            for _ in 0..self.n_samples {
                for (c, t) in candidate.iter_mut().zip(&theta) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c = t + self.delta * z;
                }
                let l = obj.loss(&candidate);
                if l < best_loss {
                    best_loss = l;
                    match &mut best {
                        Some(b) => b.copy_from_slice(&candidate),
                        None => best = Some(candidate.clone()),
                    }
                }
            }
            if best_loss < loss {
                std::mem::swap(&mut theta, best.as_mut().expect("improving candidate stored"));
                loss = best_loss;
            }
            epoch += 1;
            history.push(loss);
            if tracker.record(epoch, &theta, loss, None, None).is_break() {
                break Termination::Halted;
            }
        };
        Ok(tracker.finish(theta, termination))
    }

    fn uses_gradient(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;
    use crate::optimizers::{no_callback, Optimizer};

    #[test]
    fn constant_loss_stalls_after_the_window() {
        let f = FnObjective::new(2, |_: &[f64]| 1.0);
        let h = ObjectiveHandle::new(&f);
        let res = MonteCarlo::default()
            .run(&h, &[0.1, 0.2], &StoppingRule::new(1e-9, 1000).with_stall_window(7), &mut no_callback)
            .unwrap();
        assert_eq!(res.termination, Termination::Stalled);
        assert_eq!(res.epochs(), 7);
        assert_eq!(res.theta, vec![0.1, 0.2]);
    }

    #[test]
    fn loss_strictly_drops_whenever_theta_moves() {
        let f = FnObjective::new(3, |t: &[f64]| t.iter().map(|x| (x - 0.3).powi(2)).sum());
        let h = ObjectiveHandle::new(&f);
        let mut thetas = Vec::new();
        let res = MonteCarlo {
            seed: 11,
            ..MonteCarlo::default()
        }
        .run(&h, &[0.0; 3], &StoppingRule::new(1e-12, 40), &mut |_, t| {
            thetas.push(t.to_vec());
            std::ops::ControlFlow::Continue(())
        })
        .unwrap();
        for (k, pair) in res.reports.windows(2).enumerate() {
            if thetas[k] == thetas[k + 1] {
                assert_eq!(pair[1].loss, pair[0].loss);
            } else {
                assert!(pair[1].loss < pair[0].loss);
            }
        }
        assert_eq!(h.gradient_calls(), 0);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let f = FnObjective::new(1, |t: &[f64]| t[0] * t[0]);
        let solved = (0..20)
            .filter(|&seed| {
                let h = ObjectiveHandle::new(&f);
                let res = MonteCarlo {
                    delta: 0.1,
                    n_samples: 100,
                    seed,
                }
                .run(&h, &[1.0], &StoppingRule::new(1e-12, 200), &mut no_callback)
                .unwrap();
                res.final_loss() < 0.01
            })
            .count();
        assert!(solved >= 18, "{solved}");
    }
}
