use serde::{Deserialize, Serialize};

use super::{neg, sub, wolfe_step, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::Result;
use crate::linesearch::WolfeConfig;
use crate::objective::{dot, fd_gradient_with_loss, norm, ObjectiveHandle};

/// Dense inverse-Hessian approximation, row-major `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseHessian {
    n: usize,
    data: Vec<f64>,
}

impl InverseHessian {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.n).map(|row| dot(row, v)).collect()
    }

    /// Largest `|H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`, `rho = 1 / s^T y`.
    ///
    /// Skipped, returning `false`, when `s^T y <= 1e-10 |s| |y|`.
    pub fn update(&mut self, s: &[f64], y: &[f64]) -> bool {
        let sy = dot(s, y);
        if !(sy > 1e-10 * norm(s) * norm(y)) {
            return false;
        }
        let rho = 1.0 / sy;
        let hy = self.apply(y);
        let yhy = dot(y, &hy);
        let coef = rho * rho * yhy + rho;
        let n = self.n;
        for i in 0..n {
            let row = &mut self.data[i * n..(i + 1) * n];
            let (si, hyi) = (s[i], hy[i]);
            for j in 0..n {
                row[j] += coef * si * s[j] - rho * (hyi * s[j] + si * hy[j]);
            }
        }
        true
    }
}

/// Quasi-Newton update event passed to [`Bfgs::run_observed`].
pub struct BfgsUpdate<'a> {
    pub epoch: usize,
    pub h: &'a InverseHessian,
    pub s: &'a [f64],
    pub y: &'a [f64],
}

/// BFGS with a dense inverse Hessian starting from the identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bfgs {
    pub wolfe: WolfeConfig,
}

impl Bfgs {
    /// [`Optimizer::run`](super::Optimizer::run) that also reports every
    /// accepted inverse-Hessian update.
    pub fn run_observed(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
        on_update: &mut dyn FnMut(BfgsUpdate<'_>),
    ) -> Result<RunResult> {
        let fd = &self.wolfe.fd;
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut h = InverseHessian::identity(theta.len());
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
            let mut d = neg(&h.apply(&est.gradient));
            let step = match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                Some(step) => step,
                None => {
                    h = InverseHessian::identity(theta.len());
                    d = neg(&est.gradient);
                    match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                        Some(step) => step,
                        None => break Termination::LineSearchFailed,
                    }
                }
            };
            let slope = dot(&d, &est.gradient);
            let next = fd_gradient_with_loss(obj, &step.theta, fd)?;
            let s = sub(&step.theta, &theta);
            let y = sub(&next.gradient, &est.gradient);
            epoch += 1;
            if h.update(&s, &y) {
                on_update(BfgsUpdate {
                    epoch,
                    h: &h,
                    s: &s,
                    y: &y,
                });
            }
            theta = step.theta;
            est = next;
            gnorm = norm(&est.gradient);
            if tracker.record(epoch, &theta, est.loss, Some(gnorm), Some(slope)).is_break() {
                break Termination::Halted;
            }
        };
        Ok(tracker.finish(theta, termination))
    }
}

impl super::Optimizer for Bfgs {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        self.run_observed(obj, theta0, stop, callback, &mut |_| {})
    }

    fn uses_gradient(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{no_callback, testing, Optimizer};

    #[test]
    fn update_satisfies_secant_and_symmetry() {
        let mut h = InverseHessian::identity(3);
        let s = [0.3, -0.1, 0.7];
        let y = [0.5, 0.2, 0.9];
        assert!(h.update(&s, &y));
        let hy = h.apply(&y);
        for (a, b) in hy.iter().zip(&s) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(h.asymmetry() < 1e-14);
    }

    #[test]
    fn update_skips_bad_curvature() {
        let mut h = InverseHessian::identity(2);
        assert!(!h.update(&[1.0, 0.0], &[-1.0, 0.0]));
        assert_eq!(h, InverseHessian::identity(2));
    }

    #[test]
    fn stationary_start() {
        let f = testing::stiff_quadratic();
        let h = ObjectiveHandle::new(&f);
        let res = Bfgs::default()
            .run(&h, &[0.0, 0.0], &StoppingRule::new(1e-6, 10), &mut no_callback)
            .unwrap();
        assert_eq!(res.epochs(), 0);
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let f = testing::rosenbrock();
        let h = ObjectiveHandle::new(&f);
        let mut secant = Vec::new();
        let res = Bfgs::default()
            .run_observed(
                &h,
                &[-1.2, 1.0],
                &StoppingRule::new(1e-7, 200),
                &mut no_callback,
                &mut |u| {
                    let hy = u.h.apply(u.y);
                    let err = hy.iter().zip(u.s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    secant.push((err, u.h.asymmetry()));
                },
            )
            .unwrap();
        assert!(res.final_loss() < 1e-8, "{} after {} epochs", res.final_loss(), res.epochs());
        assert!(res.epochs() <= 200);
        assert!(!secant.is_empty());
        for (err, asym) in secant {
            assert!(err <= 1e-8 && asym <= 1e-10, "{err} {asym}");
        }
    }
}
