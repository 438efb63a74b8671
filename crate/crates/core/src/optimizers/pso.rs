use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sub, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::objective::{norm, ObjectiveHandle};

/// Particle swarm with `2P` particles and the fixed direction columns
/// `(I, -I)`.
///
/// Each step moves particle `i` by
/// `h_i + 2 r1 (pbest_i - x_i) + 2 r2 (gbest - x_i)` with scalar
/// `r1, r2 ~ U[0, 1]`; there is no velocity state. The reported point and loss
/// are the global best, which starts at `theta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticleSwarm {
    /// Particles start at `theta0` plus uniform noise on
    /// `[-init_width / 2, init_width / 2]` per component.
    pub init_width: f64,
    /// Largest swarm the run will allocate.
    pub max_particles: usize,
    pub seed: u64,
}

impl Default for ParticleSwarm {
    fn default() -> Self {
        Self {
            init_width: 1.0,
            max_particles: 8192,
            seed: 0,
        }
    }
}

/// Loss used for ranking; NaN ranks last.
fn rank(loss: f64) -> f64 {
    if loss.is_nan() {
        f64::INFINITY
    } else {
        loss
    }
}

impl super::Optimizer for ParticleSwarm {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if !(self.init_width >= 0.0) {
            return Err(Error::config("swarm init width must be non-negative"));
        }
        let p = theta0.len();
        let n = 2 * p;
        if n > self.max_particles {
            return Err(Error::SwarmTooLarge {
                particles: n,
                budget: self.max_particles,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut tracker = Tracker::new(obj, callback);
        let mut gbest = theta0.to_vec();
        let mut gbest_loss = obj.finite_loss(&gbest)?;
        if tracker.record(0, &gbest, gbest_loss, None, None).is_break() {
            return Ok(tracker.finish(gbest, Termination::Halted));
        }
        if stop.max_iter == 0 {
            return Ok(tracker.finish(gbest, Termination::MaxIter));
        }

        let half = 0.5 * self.init_width;
        let mut particles: Vec<Vec<f64>> = (0..n)
            .map(|_| theta0.iter().map(|t| t + rng.random_range(-half..=half)).collect())
            .collect();
        let mut pbest = particles.clone();
        let mut pbest_loss: Vec<f64> = particles.iter().map(|x| rank(obj.loss(x))).collect();
        let mut history = vec![gbest.clone()];

        let mut epoch = 0;
        let termination = loop {
            // The best personal best becomes the global best; the incumbent
            // only yields to a strict improvement.
            let (best_i, best_loss) = pbest_loss
                .iter()
                .copied()
                .enumerate()
                .fold((usize::MAX, gbest_loss), |acc, (i, l)| if l < acc.1 { (i, l) } else { acc });
            if best_i != usize::MAX {
                gbest.clone_from(&pbest[best_i]);
                gbest_loss = best_loss;
            }
            if epoch > 0 {
                history.push(gbest.clone());
                if tracker.record(epoch, &gbest, gbest_loss, None, None).is_break() {
                    break Termination::Halted;
                }
                if epoch >= stop.stall_window {
                    let old = &history[epoch - stop.stall_window];
                    if norm(&sub(old, &gbest)) <= stop.epsilon {
                        break Termination::Stalled;
                    }
                }
            }
            if epoch >= stop.max_iter {
                break Termination::MaxIter;
            }
            for i in 0..n {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let x = &mut particles[i];
                for k in 0..p {
                    x[k] += 2.0 * r1 * (pbest[i][k] - x[k]) + 2.0 * r2 * (gbest[k] - x[k]);
                }
                if i < p {
                    x[i] += 1.0;
                } else {
                    x[i - p] -= 1.0;
                }
                let loss = rank(obj.loss(x));
                if loss < pbest_loss[i] {
                    pbest_loss[i] = loss;
                    pbest[i].clone_from(x);
                }
            }
            epoch += 1;
        };
        Ok(tracker.finish(gbest, termination))
    }

    fn uses_gradient(&self) -> bool {
        false
    }
}
