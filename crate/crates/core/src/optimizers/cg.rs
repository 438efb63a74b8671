use serde::{Deserialize, Serialize};

use super::{neg, wolfe_step, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::Result;
use crate::linesearch::WolfeConfig;
use crate::objective::{dot, fd_gradient_with_loss, norm, ObjectiveHandle};

/// Polak-Ribière nonlinear conjugate gradient with strong-Wolfe steps.
///
/// The direction is reset to `-g` whenever it stops descending.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConjugateGradient {
    pub wolfe: WolfeConfig,
}

impl super::Optimizer for ConjugateGradient {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        let fd = &self.wolfe.fd;
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut est = fd_gradient_with_loss(obj, &theta, fd)?;
        let mut gnorm = norm(&est.gradient);
        if tracker.record(0, &theta, est.loss, Some(gnorm), None).is_break() {
            return Ok(tracker.finish(theta, Termination::Halted));
        }
        let mut d = neg(&est.gradient);
        let mut epoch = 0;
        let termination = loop {
            if gnorm <= stop.epsilon {
                break Termination::GradTol;
            }
            if epoch >= stop.max_iter {
                break Termination::MaxIter;
            }
            let mut slope = dot(&d, &est.gradient);
            let step = match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                Some(step) => step,
                None if d != neg(&est.gradient) => {
                    d = neg(&est.gradient);
                    slope = -gnorm * gnorm;
                    match wolfe_step(obj, &theta, &d, &self.wolfe)? {
                        Some(step) => step,
                        None => break Termination::LineSearchFailed,
                    }
                }
                None => break Termination::LineSearchFailed,
            };
            theta = step.theta;
            let next = fd_gradient_with_loss(obj, &theta, fd)?;
            let g_prev = &est.gradient;
            let beta = next
                .gradient
                .iter()
                .zip(g_prev)
                .map(|(g, p)| g * (g - p))
                .sum::<f64>()
                / dot(g_prev, g_prev);
            for (di, gi) in d.iter_mut().zip(&next.gradient) {
                *di = -gi + beta * *di;
            }
            if !(dot(&d, &next.gradient) < 0.0) {
                d = neg(&next.gradient);
            }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;
    use crate::optimizers::{no_callback, testing::stiff_quadratic, Optimizer};

    #[test]
    fn starting_at_minimizer_does_nothing() {
        let f = stiff_quadratic();
        let h = ObjectiveHandle::new(&f);
        let res = ConjugateGradient::default()
            .run(&h, &[0.0, 0.0], &StoppingRule::new(1e-6, 50), &mut no_callback)
            .unwrap();
        assert_eq!(res.epochs(), 0);
        assert_eq!(res.theta, vec![0.0, 0.0]);
        assert_eq!(res.termination, Termination::GradTol);
    }

    #[test]
    fn stiff_quadratic_converges_quickly() {
        let f = stiff_quadratic();
        let h = ObjectiveHandle::new(&f);
        let res = ConjugateGradient::default()
            .run(&h, &[1.0, 1.0], &StoppingRule::new(1e-6, 10), &mut no_callback)
            .unwrap();
        assert_eq!(res.termination, Termination::GradTol, "{:?}", res.reports);
        assert!(res.epochs() <= 10);
        assert!(res.theta.iter().all(|t| t.abs() <= 1e-4), "{:?}", res.theta);
        for r in &res.reports[1..] {
            assert!(r.slope.unwrap() < 0.0);
        }
    }

    #[test]
    fn directions_descend_on_a_nonconvex_function() {
        let f = FnObjective::new(3, |t: &[f64]| {
            (t[0] - 1.0).powi(2) + (t[1] * t[0]).sin() + 0.5 * t[2].powi(4) + t[1] * t[1]
        });
        let h = ObjectiveHandle::new(&f);
        let res = ConjugateGradient::default()
            .run(&h, &[2.0, -1.0, 1.5], &StoppingRule::new(1e-6, 40), &mut no_callback)
            .unwrap();
        for pair in res.reports.windows(2) {
            assert!(pair[1].slope.unwrap() < 0.0);
            assert!(pair[1].loss <= pair[0].loss);
        }
    }
}
