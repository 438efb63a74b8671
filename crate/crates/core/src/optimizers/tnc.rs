use serde::{Deserialize, Serialize};

use super::{neg, wolfe_step, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::linesearch::WolfeConfig;
use crate::objective::{dot, fd_gradient_with_loss, fd_hessvec_at, norm, ObjectiveHandle};

/// Forcing term for the inner solve: stop once `|r| / |g| <= eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    /// `eta = min(0.5, sqrt(|g|))`.
    Superlinear,
    Constant(f64),
}

impl EtaRule {
    pub fn eta(&self, grad_norm: f64) -> f64 {
        match *self {
            Self::Superlinear => grad_norm.sqrt().min(0.5),
            Self::Constant(eta) => eta,
        }
    }
}

/// Truncated Newton: an inner CG solve of `H p = -g` with finite-difference
/// Hessian-vector products, followed by a strong-Wolfe step along `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncatedNewton {
    pub eta: EtaRule,
    /// Inner iteration cap; `None` means `min(P, 50)`.
    pub max_inner: Option<usize>,
    pub wolfe: WolfeConfig,
}

impl Default for TruncatedNewton {
    fn default() -> Self {
        Self {
            eta: EtaRule::Superlinear,
            max_inner: None,
            wolfe: WolfeConfig::default(),
        }
    }
}

/// How the inner loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerExit {
    Curvature,
    Forcing,
    Cap,
}

impl TruncatedNewton {
    /// Approximate Newton direction at `theta`; falls back to `-g` when the
    /// inner loop stops before its first update.
    fn direction(
        &self,
        obj: &ObjectiveHandle,
        theta: &[f64],
        g: &[f64],
        curvature_tol: f64,
    ) -> Result<(Vec<f64>, InnerExit)> {
        let fd = &self.wolfe.fd;
        let gnorm = norm(g);
        let eta = self.eta.eta(gnorm);
        let cap = self.max_inner.unwrap_or_else(|| g.len().min(50));
        let mut p = vec![0.0; g.len()];
        let mut r = neg(g);
        let mut l = r.clone();
        let mut rr = dot(&r, &r);
        let mut delta = rr;
        let mut i = 0;
        let exit = loop {
            if i >= cap {
                break InnerExit::Cap;
            }
            let q = fd_hessvec_at(obj, theta, g, &l, fd)?;
            let lq = dot(&l, &q);
            if !(lq > curvature_tol * delta) {
                break InnerExit::Curvature;
            }
            let alpha = rr / lq;
            for k in 0..p.len() {
                p[k] += alpha * l[k];
                r[k] -= alpha * q[k];
            }
            i += 1;
            let rr_next = dot(&r, &r);
            if rr_next.sqrt() / gnorm <= eta {
                break InnerExit::Forcing;
            }
            let beta = rr_next / rr;
            for k in 0..l.len() {
                l[k] = r[k] + beta * l[k];
            }
            delta = rr_next + beta * beta * delta;
            rr = rr_next;
        };
        if i == 0 {
            Ok((neg(g), exit))
        } else {
            Ok((p, exit))
        }
    }
}

impl super::Optimizer for TruncatedNewton {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if let EtaRule::Constant(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(Error::config("forcing term must be positive"));
            }
        }
        let fd = &self.wolfe.fd;
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
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
            let (mut d, _) = self.direction(obj, &theta, &est.gradient, stop.epsilon)?;
            let step = match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                Some(step) => step,
                None if d != neg(&est.gradient) => {
                    d = neg(&est.gradient);
                    match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                        Some(step) => step,
                        None => break Termination::LineSearchFailed,
                    }
                }
                None => break Termination::LineSearchFailed,
            };
            let slope = dot(&d, &est.gradient);
            theta = step.theta;
            est = fd_gradient_with_loss(obj, &theta, fd)?;
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
