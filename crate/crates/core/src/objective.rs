//! Black-box objectives and the forward-difference derivatives built on them.
//!
//! Optimizers never see a model; they see an [`ObjectiveHandle`], a pure map
//! from a flat parameter vector to a non-negative loss that counts every
//! evaluation. Gradients are estimated coordinate by coordinate with a
//! forward difference, and Hessian-vector products with a difference of two
//! such gradients.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Flat vector of every trainable parameter.
pub type ParamVector = Vec<f64>;

/// A pure loss function over a fixed-length parameter vector.
///
/// Implementations must be deterministic: evaluating the same `theta` twice
/// returns the same bits.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn loss(&self, theta: &[f64]) -> f64;

    /// Prepares repeated evaluation of single-coordinate perturbations of
    /// `theta`. Models that can reuse intermediate state (see
    /// [`crate::mlp::MlpObjective`]) override this; the default re-evaluates
    /// from scratch.
    fn coordinate_probe<'a>(&'a self, theta: &'a [f64]) -> Box<dyn CoordinateProbe + 'a> {
        Box::new(NaiveProbe {
            objective: self,
            base: self.loss(theta),
            scratch: theta.to_vec(),
        })
    }
}

/// Loss at `theta` and at `theta + h * e_i` for arbitrary `i`, `h`.
pub trait CoordinateProbe {
    /// `L(theta)`, computed when the probe was built.
    fn base(&self) -> f64;

    /// `L(theta + h * e_i)`.
    fn loss_at(&mut self, i: usize, h: f64) -> f64;
}

struct NaiveProbe<'a, O: ?Sized> {
    objective: &'a O,
    base: f64,
    scratch: Vec<f64>,
}

impl<O: Objective + ?Sized> CoordinateProbe for NaiveProbe<'_, O> {
    fn base(&self) -> f64 {
        self.base
    }

    fn loss_at(&mut self, i: usize, h: f64) -> f64 {
        let saved = self.scratch[i];
        self.scratch[i] = saved + h;
        let value = self.objective.loss(&self.scratch);
        self.scratch[i] = saved;
        value
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }
}

/// Counting front-end for an [`Objective`]; the only thing optimizers touch.
pub struct ObjectiveHandle<'a> {
    objective: &'a dyn Objective,
    evals: AtomicU64,
    gradient_calls: AtomicU64,
}

impl<'a> ObjectiveHandle<'a> {
    pub fn new(objective: &'a dyn Objective) -> Self {
        Self {
            objective,
            evals: AtomicU64::new(0),
            gradient_calls: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Evaluates the loss, counting one evaluation. The value is returned as
    /// is, finite or not.
    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.objective.loss(theta)
    }

    /// Like [`loss`](Self::loss) but rejects NaN and infinities.
    pub fn finite_loss(&self, theta: &[f64]) -> Result<f64> {
        finite(self.loss(theta))
    }

    /// Counting wrapper around [`Objective::coordinate_probe`]; building the
    /// probe costs one evaluation and each perturbed loss one more.
    pub fn coordinate_probe<'b>(&'b self, theta: &'b [f64]) -> HandleProbe<'b> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        HandleProbe {
            inner: self.objective.coordinate_probe(theta),
            evals: &self.evals,
        }
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Number of [`fd_gradient`] calls made through this handle.
    pub fn gradient_calls(&self) -> u64 {
        self.gradient_calls.load(Ordering::Relaxed)
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }
}

pub struct HandleProbe<'a> {
    inner: Box<dyn CoordinateProbe + 'a>,
    evals: &'a AtomicU64,
}

impl HandleProbe<'_> {
    pub fn base(&self) -> f64 {
        self.inner.base()
    }

    pub fn loss_at(&mut self, i: usize, h: f64) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.loss_at(i, h)
    }
}

pub(crate) fn finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteLoss { value })
    }
}

/// Step sizes for the finite-difference estimators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FdConfig {
    /// Forward-difference step for gradients.
    pub zeta: f64,
    /// Scale of the step used for Hessian-vector products.
    pub hv_step: f64,
}

/// Square root of the f64 machine epsilon, rounded.
pub const DEFAULT_ZETA: f64 = 1.49e-8;

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            zeta: DEFAULT_ZETA,
            hv_step: DEFAULT_ZETA.sqrt(),
        }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.zeta > 0.0 && self.hv_step > 0.0 {
            Ok(())
        } else {
            Err(Error::config("finite-difference steps must be positive"))
        }
    }
}

/// Loss at `theta` together with its forward-difference gradient.
#[derive(Debug, Clone)]
pub struct GradientEstimate {
    pub loss: f64,
    pub gradient: ParamVector,
}

/// Forward-difference gradient, `g_i = (L(theta + zeta e_i) - L(theta)) / zeta`.
///
/// Uses exactly `P + 1` evaluations: the base loss is computed once and
/// shared by all components.
pub fn fd_gradient(obj: &ObjectiveHandle, theta: &[f64], cfg: &FdConfig) -> Result<ParamVector> {
    fd_gradient_with_loss(obj, theta, cfg).map(|est| est.gradient)
}

/// [`fd_gradient`] that also returns the base loss it computed.
pub fn fd_gradient_with_loss(
    obj: &ObjectiveHandle,
    theta: &[f64],
    cfg: &FdConfig,
) -> Result<GradientEstimate> {
    obj.check_dim(theta.len())?;
    obj.gradient_calls.fetch_add(1, Ordering::Relaxed);
    let mut probe = obj.coordinate_probe(theta);
    let base = finite(probe.base())?;
    let zeta = cfg.zeta;
    let mut gradient = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let shifted = finite(probe.loss_at(i, zeta))?;
        gradient.push((shifted - base) / zeta);
    }
    Ok(GradientEstimate {
        loss: base,
        gradient,
    })
}

/// Hessian-vector product by differencing two forward-difference gradients.
///
/// The step is `hv_step * (1 + |theta|) / max(|v|, eps)`. Returns zeros
/// without evaluating anything when `v` is the zero vector.
pub fn fd_hessvec(
    obj: &ObjectiveHandle,
    theta: &[f64],
    v: &[f64],
    cfg: &FdConfig,
) -> Result<ParamVector> {
    obj.check_dim(v.len())?;
    if v.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; v.len()]);
    }
    let g = fd_gradient(obj, theta, cfg)?;
    fd_hessvec_at(obj, theta, &g, v, cfg)
}

/// [`fd_hessvec`] reusing an already computed gradient at `theta`.
pub fn fd_hessvec_at(
    obj: &ObjectiveHandle,
    theta: &[f64],
    gradient: &[f64],
    v: &[f64],
    cfg: &FdConfig,
) -> Result<ParamVector> {
    obj.check_dim(v.len())?;
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let h = cfg.hv_step * (1.0 + norm(theta)) / v_norm.max(f64::EPSILON);
    let shifted: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t + h * d).collect();
    let g_shift = fd_gradient(obj, &shifted, cfg)?;
    Ok(g_shift
        .iter()
        .zip(gradient)
        .map(|(a, b)| (a - b) / h)
        .collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
