use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{neg, sub, wolfe_step, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::linesearch::WolfeConfig;
use crate::objective::{dot, fd_gradient_with_loss, norm, ObjectiveHandle};

/// Limited-memory BFGS: two-loop recursion over the last `memory` curvature
/// pairs with an identity initial inverse Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lbfgs {
    pub memory: usize,
    pub wolfe: WolfeConfig,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Self {
            memory: 10,
            wolfe: WolfeConfig::default(),
        }
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// The last `capacity` curvature pairs; applies the implied inverse Hessian
/// (identity start) by the two-loop recursion.
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<Pair>,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores `(s, y)`, evicting the oldest pair when full. Pairs with
    /// `s . y <= 0` are dropped; returns whether the pair was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 0.0) || self.capacity == 0 {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        true
    }

    /// `H g`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = vec![0.0; self.pairs.len()];
        for (k, pair) in self.pairs.iter().enumerate().rev() {
            let a = pair.rho * dot(&pair.s, &q);
            for (qi, yi) in q.iter_mut().zip(&pair.y) {
                *qi -= a * yi;
            }
            alphas[k] = a;
        }
        let mut r = q;
        for (k, pair) in self.pairs.iter().enumerate() {
            let b = pair.rho * dot(&pair.y, &r);
            for (ri, si) in r.iter_mut().zip(&pair.s) {
                *ri += (alphas[k] - b) * si;
            }
        }
        r
    }
}

impl super::Optimizer for Lbfgs {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if self.memory == 0 {
            return Err(Error::config("L-BFGS memory must be at least 1"));
        }
        let fd = &self.wolfe.fd;
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut pairs = LbfgsMemory::new(self.memory);
        let mut est = fd_gradient_with_loss(obj, &theta, fd)?;
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
            let mut d = neg(&pairs.apply(&est.gradient));
            let step = match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                Some(step) => step,
                None if !pairs.is_empty() => {
                    pairs.clear();
                    d = neg(&est.gradient);
                    match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                        Some(step) => step,
                        None => break Termination::LineSearchFailed,
                    }
                }
                None => break Termination::LineSearchFailed,
            };
            let slope = dot(&d, &est.gradient);
            let next = fd_gradient_with_loss(obj, &step.theta, fd)?;
            let s = sub(&step.theta, &theta);
            let y = sub(&next.gradient, &est.gradient);
            pairs.push(s, y);
            theta = step.theta;
            est = next;
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
