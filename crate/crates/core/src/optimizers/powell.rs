use serde::{Deserialize, Serialize};

use super::{axpy, sub, RunCallback, RunResult, StoppingRule, Termination, Tracker};
use crate::error::{Error, Result};
use crate::linesearch::golden_section_min;
use crate::objective::{norm, ObjectiveHandle};

/// Powell's conjugate direction method with golden-section line
/// minimizations over a fixed step bracket, `lambda in [0, 1]` by default.
///
/// The direction set starts as the coordinate basis. After each sweep the
/// composite step `s = y_p - y_0` replaces the direction of largest decrease
/// when Powell's test accepts it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Powell {
    /// Final bracket width of each golden-section search.
    pub line_tol: f64,
    /// Range of the step `lambda` along each direction. With the default
    /// `[0, 1]` a direction can only be followed forwards, so a sweep cannot
    /// undo an overshoot until the direction set has rotated.
    pub bracket: [f64; 2],
}

impl Default for Powell {
    fn default() -> Self {
        Self {
            line_tol: 1e-6,
            bracket: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone)]
enum Direction {
    Axis(usize),
    Dense(Vec<f64>),
}

struct Sweep {
    end: Vec<f64>,
    /// Index and size of the largest single-direction decrease.
    best: (usize, f64),
}

impl Powell {
    /// Minimizes along `dir` from `y`; only strict improvements move.
    fn line_min(&self, obj: &ObjectiveHandle, y: &mut Vec<f64>, fy: f64, dir: &Direction) -> f64 {
        let [lo, hi] = self.bracket;
        match dir {
            Direction::Axis(i) => {
                let (lambda, f) = {
                    let mut probe = obj.coordinate_probe(y);
                    golden_section_min(|l| probe.loss_at(*i, l), lo, hi, self.line_tol)
                };
                if f < fy {
                    y[*i] += lambda;
                    f
                } else {
                    fy
                }
            }
            Direction::Dense(d) => {
                let (lambda, f) =
                    golden_section_min(|l| obj.loss(&axpy(y, l, d)), lo, hi, self.line_tol);
                if f < fy {
                    *y = axpy(y, lambda, d);
                    f
                } else {
                    fy
                }
            }
        }
    }

    fn sweep(&self, obj: &ObjectiveHandle, start: &[f64], f0: f64, dirs: &[Direction]) -> Sweep {
        let mut y = start.to_vec();
        let mut fy = f0;
        let mut best = (0, f64::NEG_INFINITY);
        for (k, dir) in dirs.iter().enumerate() {
            let f = self.line_min(obj, &mut y, fy, dir);
            if fy - f > best.1 {
                best = (k, fy - f);
            }
            fy = f;
        }
        Sweep {
            end: y,
            best,
        }
    }
}

impl super::Optimizer for Powell {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        if !(self.line_tol > 0.0) {
            return Err(Error::config("golden-section tolerance must be positive"));
        }
        let [lo, hi] = self.bracket;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::config(format!("invalid Powell step bracket [{lo}, {hi}]")));
        }
        let mut tracker = Tracker::new(obj, callback);
        let mut theta = theta0.to_vec();
        let mut loss = obj.finite_loss(&theta)?;
        if tracker.record(0, &theta, loss, None, None).is_break() {
            return Ok(tracker.finish(theta, Termination::Halted));
        }
        let mut dirs: Vec<Direction> = (0..theta.len()).map(Direction::Axis).collect();
        let mut epoch = 0;
        let termination = loop {
            if epoch >= stop.max_iter {
                break Termination::MaxIter;
            }
            let sweep = self.sweep(obj, &theta, loss, &dirs);
            let s = sub(&sweep.end, &theta);
            let step_norm = norm(&s);
            if step_norm <= stop.epsilon {
                if step_norm > 0.0 {
                    let f = obj.finite_loss(&sweep.end)?;
                    if f < loss {
                        theta = sweep.end;
                        loss = f;
                        epoch += 1;
                        let _ = tracker.record(epoch, &theta, loss, None, None);
                    }
                }
                break Termination::Stalled;
            }
            let (m, delta_m) = sweep.best;
            let f1 = loss;
            // The sweep tracked probe values; re-evaluate the end point exactly.
            let f2 = obj.finite_loss(&sweep.end)?;
            let extrapolated: Vec<f64> = sweep.end.iter().zip(&theta).map(|(p, o)| 2.0 * p - o).collect();
            let f3 = obj.loss(&extrapolated);
            let mut next = sweep.end;
            let mut next_loss = f2;
            if 2.0 * (f1 - 2.0 * f2 + f3) * (f1 - f2 - delta_m).powi(2) < delta_m * (f1 - f3).powi(2) {
                let dir = Direction::Dense(s);
                next_loss = self.line_min(obj, &mut next, next_loss, &dir);
                dirs.remove(m);
                dirs.push(dir);
            }
            // Reject the epoch outright if rounding in the probes let the
            // exact loss rise.
            if next_loss <= loss {
                theta = next;
                loss = next_loss;
            }
            epoch += 1;
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
    fn constant_loss_stalls_at_start() {
        let f = FnObjective::new(2, |_: &[f64]| 3.0);
        let h = ObjectiveHandle::new(&f);
        let res = Powell::default()
            .run(&h, &[0.2, 0.7], &StoppingRule::new(1e-9, 10), &mut no_callback)
            .unwrap();
        assert_eq!(res.termination, Termination::Stalled);
        assert_eq!(res.theta, vec![0.2, 0.7]);
        assert_eq!(h.gradient_calls(), 0);
    }

    #[test]
    fn separable_quadratic_in_one_sweep() {
        let f = FnObjective::new(2, |t: &[f64]| t[0] * t[0] + t[1] * t[1]);
        let h = ObjectiveHandle::new(&f);
        let mut after_first = None;
        let res = Powell::default()
            .run(&h, &[-0.5, -0.5], &StoppingRule::new(1e-9, 1), &mut |epoch, theta| {
                if epoch == 1 {
                    after_first = Some(theta.to_vec());
                }
                std::ops::ControlFlow::Continue(())
            })
            .unwrap();
        let theta = after_first.unwrap();
        assert!(theta.iter().all(|t| t.abs() <= 1e-6), "{theta:?}");
        assert_eq!(res.epochs(), 1);
    }

    fn coupled() -> FnObjective<impl Fn(&[f64]) -> f64 + Send + Sync> {
        FnObjective::new(2, |t: &[f64]| (t[0] + t[1]).powi(2) + 0.1 * (t[0] - t[1]).powi(2))
    }

    #[test]
    fn forward_only_bracket_stalls_on_coupled_quadratic() {
        let f = coupled();
        let h = ObjectiveHandle::new(&f);
        let res = Powell::default()
            .run(&h, &[0.3, -0.4], &StoppingRule::new(1e-12, 50), &mut no_callback)
            .unwrap();
        // The first sweep overshoots x; no forward step can take it back.
        assert_eq!(res.termination, Termination::Stalled);
        assert!(res.final_loss() > 1e-3);
        assert!(res.final_loss() < res.reports[0].loss);
    }

    #[test]
    fn symmetric_bracket_solves_coupled_quadratic() {
        let f = coupled();
        let h = ObjectiveHandle::new(&f);
        let opt = Powell {
            bracket: [-1.0, 1.0],
            ..Powell::default()
        };
        let res = opt
            .run(&h, &[0.3, -0.4], &StoppingRule::new(1e-12, 50), &mut no_callback)
            .unwrap();
        assert!(res.final_loss() <= 1e-6, "{}", res.final_loss());
        for pair in res.reports.windows(2) {
            assert!(pair[1].loss <= pair[0].loss);
        }
    }
}
