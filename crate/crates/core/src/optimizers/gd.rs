use serde::{Deserialize, Serialize};

use super::{RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::objective::{fd_gradient_with_loss, norm, FdConfig, ObjectiveHandle};

/// Fixed-step gradient descent, `theta <- theta - step_size * g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientDescent {
    pub step_size: f64,
    pub fd: FdConfig,
}

impl Default for GradientDescent {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            fd: FdConfig::default(),
        }
    }
}

impl super::Optimizer for GradientDescent {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if !(self.step_size > 0.0) {
            return Err(Error::config("gradient descent step size must be positive"));
        }
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut est = fd_gradient_with_loss(obj, &theta, &self.fd)?;
        let mut gnorm = norm(&est.gradient);
        if tracker.record(0, &theta, est.loss, Some(gnorm), None).is_break() {
            return Ok(tracker.finish(theta, Termination::Halted));
        }
        let mut epoch = 0;
        let termination = loop {
            if gnorm <= stop.epsilon {
                break Termination::GradTol;
            }
            if epoch >= stop.max_iter {
                break Termination::MaxIter;
            }
            for (t, g) in theta.iter_mut().zip(&est.gradient) {
                *t -= self.step_size * g;
            }
            let slope = -gnorm * gnorm;
            est = fd_gradient_with_loss(obj, &theta, &self.fd)?;
            gnorm = norm(&est.gradient);
            epoch += 1;
            if tracker.record(epoch, &theta, est.loss, Some(gnorm), Some(slope)).is_break() {
                break Termination::Halted;
            }
        };
        Ok(tracker.finish(theta, termination))
    }

    fn uses_gradient(&self) -> bool {
        true
    }
}
