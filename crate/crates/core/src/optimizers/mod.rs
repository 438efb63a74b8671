//! Training algorithms behind one run contract.
//!
//! Every optimizer starts from `theta0`, performs outer iterations ("epochs")
//! until its [`StoppingRule`] fires, and after each epoch (and once before
//! the first) hands the current parameters to a [`RunCallback`]. The callback
//! may stop the run early by returning [`ControlFlow::Break`].

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::{wolfe_search, WolfeConfig};
use crate::objective::{ObjectiveHandle, ParamVector};

mod bfgs;
mod cg;
mod gd;
mod lbfgs;
mod mc;
mod powell;
mod pso;
mod tnc;

pub use bfgs::{Bfgs, BfgsUpdate, InverseHessian};
pub use cg::ConjugateGradient;
pub use gd::GradientDescent;
pub use lbfgs::{Lbfgs, LbfgsMemory};
pub use mc::MonteCarlo;
pub use powell::Powell;
pub use pso::ParticleSwarm;
pub use tnc::{EtaRule, TruncatedNewton};

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Gradient-norm tolerance, or step/stall tolerance for gradient-free
    /// methods.
    pub epsilon: f64,
    /// Maximum number of outer iterations. Zero runs nothing and returns
    /// `theta0`.
    pub max_iter: usize,
    /// Window, in iterations, for the stall tests of the swarm and
    /// Monte-Carlo methods.
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
}

fn default_stall_window() -> usize {
    50
}

impl StoppingRule {
    pub fn new(epsilon: f64, max_iter: usize) -> Self {
        Self {
            epsilon,
            max_iter,
            stall_window: default_stall_window(),
        }
    }

    pub fn with_stall_window(mut self, window: usize) -> Self {
        self.stall_window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::config("stopping tolerance must be positive"));
        }
        if self.stall_window == 0 {
            return Err(Error::config("stall window must be at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    MaxIter,
    Stalled,
    LineSearchFailed,
    /// The run callback asked to stop.
    Halted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: Option<f64>,
    /// `d . g` of the direction that produced this epoch, for methods that
    /// search along one.
    pub slope: Option<f64>,
    /// Cumulative objective evaluations.
    pub evaluations: u64,
    /// Set on the last report only.
    pub status: Option<Termination>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub theta: ParamVector,
    pub reports: Vec<IterationReport>,
    pub termination: Termination,
}

impl RunResult {
    pub fn final_loss(&self) -> f64 {
        self.reports.last().map_or(f64::NAN, |r| r.loss)
    }

    /// Number of completed outer iterations.
    pub fn epochs(&self) -> usize {
        self.reports.last().map_or(0, |r| r.epoch)
    }
}

/// Invoked with `(epoch, theta)` after every outer iteration and once for the
/// starting point.
pub type RunCallback<'a> = dyn FnMut(usize, &[f64]) -> ControlFlow<()> + 'a;

/// Callback that never stops the run.
pub fn no_callback(_: usize, _: &[f64]) -> ControlFlow<()> {
    ControlFlow::Continue(())
}

pub trait Optimizer {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult>;

    /// Whether the method ever asks for a finite-difference gradient.
    fn uses_gradient(&self) -> bool;
}

/// Collects reports and forwards epochs to the callback.
struct Tracker<'a, 'b> {
    obj: &'a ObjectiveHandle<'a>,
    callback: &'a mut RunCallback<'b>,
    reports: Vec<IterationReport>,
}

impl<'a, 'b> Tracker<'a, 'b> {
    fn new(obj: &'a ObjectiveHandle<'a>, callback: &'a mut RunCallback<'b>) -> Self {
        Self {
            obj,
            callback,
            reports: Vec::new(),
        }
    }

    fn record(
        &mut self,
        epoch: usize,
        theta: &[f64],
        loss: f64,
        grad_norm: Option<f64>,
        slope: Option<f64>,
    ) -> ControlFlow<()> {
        self.reports.push(IterationReport {
            epoch,
            loss,
            grad_norm,
            slope,
            evaluations: self.obj.eval_count(),
            status: None,
        });
        (self.callback)(epoch, theta)
    }

    fn finish(mut self, theta: ParamVector, termination: Termination) -> RunResult {
        if let Some(last) = self.reports.last_mut() {
            last.status = Some(termination);
            last.evaluations = self.obj.eval_count();
        }
        RunResult {
            theta,
            reports: self.reports,
            termination,
        }
    }
}

/// Result of a strong-Wolfe step along `d`.
struct Step {
    theta: ParamVector,
}

/// Line search along `d`; `None` when the search fails or `d` does not
/// descend.
fn wolfe_step(
    obj: &ObjectiveHandle,
    theta: &[f64],
    d: &[f64],
    wolfe: &WolfeConfig,
) -> Result<Option<Step>> {
    match wolfe_search(obj, theta, d, wolfe) {
        Ok(out) if out.accepted() => Ok(Some(Step {
            theta: axpy(theta, out.alpha, d),
        })),
        Ok(_) | Err(Error::NonDescentDirection { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> ParamVector {
    x.iter().zip(d).map(|(x, d)| x + a * d).collect()
}

fn neg(v: &[f64]) -> ParamVector {
    v.iter().map(|x| -x).collect()
}

fn sub(a: &[f64], b: &[f64]) -> ParamVector {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

/// Serializable choice of optimizer and its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Gd(GradientDescent),
    Cg(ConjugateGradient),
    Tnc(TruncatedNewton),
    Bfgs(Bfgs),
    Lbfgs(Lbfgs),
    Powell(Powell),
    Pso(ParticleSwarm),
    Mc(MonteCarlo),
}

impl OptimizerConfig {
    /// Default settings for the optimizer named `id`.
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "gd" => Self::Gd(GradientDescent::default()),
            "cg" => Self::Cg(ConjugateGradient::default()),
            "tnc" => Self::Tnc(TruncatedNewton::default()),
            "bfgs" => Self::Bfgs(Bfgs::default()),
            "lbfgs" => Self::Lbfgs(Lbfgs::default()),
            "powell" => Self::Powell(Powell::default()),
            "pso" => Self::Pso(ParticleSwarm::default()),
            "mc" => Self::Mc(MonteCarlo::default()),
            other => return Err(Error::config(format!("unknown optimizer {other:?}"))),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Gd(_) => "gd",
            Self::Cg(_) => "cg",
            Self::Tnc(_) => "tnc",
            Self::Bfgs(_) => "bfgs",
            Self::Lbfgs(_) => "lbfgs",
            Self::Powell(_) => "powell",
            Self::Pso(_) => "pso",
            Self::Mc(_) => "mc",
        }
    }

    /// Reseeds the stochastic methods; no-op for the others.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Self::Pso(p) => p.seed = seed,
            Self::Mc(m) => m.seed = seed,
            _ => {}
        }
        self
    }

    fn as_optimizer(&self) -> &dyn Optimizer {
        match self {
            Self::Gd(o) => o,
            Self::Cg(o) => o,
            Self::Tnc(o) => o,
            Self::Bfgs(o) => o,
            Self::Lbfgs(o) => o,
            Self::Powell(o) => o,
            Self::Pso(o) => o,
            Self::Mc(o) => o,
        }
    }
}

impl Optimizer for OptimizerConfig {
    fn run(
        &self,
        obj: &ObjectiveHandle,
        theta0: &[f64],
        stop: &StoppingRule,
        callback: &mut RunCallback,
    ) -> Result<RunResult> {
        stop.validate()?;
        obj.check_dim(theta0.len())?;
        self.as_optimizer().run(obj, theta0, stop, callback)
    }

    fn uses_gradient(&self) -> bool {
        self.as_optimizer().uses_gradient()
    }
}
