//! One-dimensional searches.
//!
//! [`wolfe_search`] finds a step satisfying the strong Wolfe conditions along
//! a descent direction. It brackets inside `[0, alpha_max]` and picks each
//! new trial by cubic interpolation, falling back to a quadratic and then to
//! bisection when an interpolant is missing or lands too close to the ends of
//! the bracket. Slopes `phi'(alpha)` are forward differences of `phi`.
//!
//! [`golden_section`] is the derivative-free search used by Powell's method.

use crate::error::{Error, Result};
use crate::objective::{FdConfig, ObjectiveHandle};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct WolfeConfig {
    /// Sufficient-decrease constant.
    pub rho: f64,
    /// Curvature constant.
    pub sigma: f64,
    pub alpha_max: f64,
    pub maxiter: usize,
    pub fd: FdConfig,
}

impl Default for WolfeConfig {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            sigma: 0.9,
            alpha_max: 50.0,
            maxiter: 10,
            fd: FdConfig::default(),
        }
    }
}

impl WolfeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.rho && self.rho < self.sigma && self.sigma < 1.0) {
            return Err(Error::config("line search needs 0 < rho < sigma < 1"));
        }
        if !(self.alpha_max > 0.0) || self.maxiter == 0 {
            return Err(Error::config("line search needs alpha_max > 0 and maxiter >= 1"));
        }
        self.fd.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchStatus {
    Accepted,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub status: LineSearchStatus,
    /// Accepted step, or the last trial when the search failed.
    pub alpha: f64,
    /// `phi(alpha)`.
    pub phi: f64,
    /// `phi(0)`.
    pub phi0: f64,
    /// Forward-difference `phi'(0)`.
    pub dphi0: f64,
    /// Number of distinct `phi` evaluations, slope probes included.
    pub phi_evals: usize,
}

impl LineSearchOutcome {
    pub fn accepted(&self) -> bool {
        self.status == LineSearchStatus::Accepted
    }
}

/// Minimizer of the cubic through `(a, fa)`, `(b, fb)`, `(c, fc)` with slope
/// `fpa` at `a`, if it exists and lies between `a` and `b`.
pub fn cubicmin(a: f64, fa: f64, fpa: f64, b: f64, fb: f64, c: f64, fc: f64) -> Option<f64> {
    if ![a, fa, fpa, b, fb, c, fc].iter().all(|v| v.is_finite()) {
        return None;
    }
    // Write the cubic as fa + C t + B t^2 + A t^3 with t = x - a.
    let slope = fpa;
    let db = b - a;
    let dc = c - a;
    let denom = (db * dc).powi(2) * (db - dc);
    if denom == 0.0 {
        return None;
    }
    let rb = fb - fa - slope * db;
    let rc = fc - fa - slope * dc;
    let cubic = (dc * dc * rb - db * db * rc) / denom;
    let quad = (-dc.powi(3) * rb + db.powi(3) * rc) / denom;
    let radical = quad * quad - 3.0 * cubic * slope;
    if radical < 0.0 {
        return None;
    }
    let root = radical.sqrt();
    // Root of 3A t^2 + 2B t + C with positive second derivative, written to
    // avoid cancellation for either sign of B (and to cover A = 0).
    let t = if quad >= 0.0 {
        -slope / (quad + root)
    } else {
        (root - quad) / (3.0 * cubic)
    };
    within(a + t, a, b)
}

/// Minimizer of the quadratic through `(a, fa)`, `(b, fb)` with slope `fpa` at
/// `a`, if the curvature is positive and the minimizer lies between `a` and `b`.
pub fn quadmin(a: f64, fa: f64, fpa: f64, b: f64, fb: f64) -> Option<f64> {
    if ![a, fa, fpa, b, fb].iter().all(|v| v.is_finite()) {
        return None;
    }
    let db = b - a;
    if db == 0.0 {
        return None;
    }
    let curvature = (fb - fa - fpa * db) / (db * db);
    if !(curvature > 0.0) {
        return None;
    }
    within(a - fpa / (2.0 * curvature), a, b)
}

fn within(x: f64, a: f64, b: f64) -> Option<f64> {
    (x.is_finite() && x >= a.min(b) && x <= a.max(b)).then_some(x)
}

/// State of the bracketing loop: `lo` is the best step so far (sufficient
/// decrease holds, slope known), `hi` the other end, `rec` the previous `hi`
/// or `lo` used as the third cubic interpolation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub phi_lo: f64,
    pub dphi_lo: f64,
    pub hi: f64,
    pub phi_hi: f64,
    pub rec: f64,
    pub phi_rec: f64,
}

/// Next trial step strictly inside the bracket.
///
/// Cubic interpolation is tried from the second iteration on and rejected
/// when it falls within `0.2 |hi - lo|` of an end; then a quadratic, rejected
/// within `0.1 |hi - lo|`; then the midpoint.
pub fn next_alpha(bracket: &Bracket, iter: usize) -> f64 {
    let Bracket {
        lo,
        phi_lo,
        dphi_lo,
        hi,
        phi_hi,
        rec,
        phi_rec,
    } = *bracket;
    let width = hi - lo;
    let (left, right) = (lo.min(hi), lo.max(hi));
    let inside = |x: f64, margin: f64| x > left + margin && x < right - margin;

    if iter > 0 {
        let cchk = 0.2 * width.abs();
        if let Some(x) = cubicmin(lo, phi_lo, dphi_lo, hi, phi_hi, rec, phi_rec) {
            if inside(x, cchk) {
                return x;
            }
        }
    }
    let qchk = 0.1 * width.abs();
    if let Some(x) = quadmin(lo, phi_lo, dphi_lo, hi, phi_hi) {
        if inside(x, qchk) {
            return x;
        }
    }
    lo + 0.5 * width
}

/// `phi(alpha) = L(theta + alpha d)` with memoized values.
struct Phi<F> {
    f: F,
    seen: Vec<(f64, f64)>,
    zeta: f64,
}

impl<F: FnMut(f64) -> f64> Phi<F> {
    fn value(&mut self, alpha: f64) -> f64 {
        if let Some(&(_, v)) = self.seen.iter().find(|(a, _)| a.to_bits() == alpha.to_bits()) {
            return v;
        }
        let v = (self.f)(alpha);
        self.seen.push((alpha, v));
        v
    }

    fn slope(&mut self, alpha: f64, at: f64) -> f64 {
        (self.value(alpha + self.zeta) - at) / self.zeta
    }
}

/// Strong-Wolfe search on `phi(alpha) = L(theta + alpha d)`.
///
/// Errors with [`Error::NonDescentDirection`] when `phi'(0) >= 0` and with
/// [`Error::NonFiniteLoss`] when `phi(0)` is not finite. Exhausting
/// `maxiter` without meeting the curvature condition is reported as
/// [`LineSearchStatus::Failed`], not as an error.
pub fn wolfe_search(
    obj: &ObjectiveHandle,
    theta: &[f64],
    d: &[f64],
    cfg: &WolfeConfig,
) -> Result<LineSearchOutcome> {
    obj.check_dim(theta.len())?;
    obj.check_dim(d.len())?;
    let mut point = theta.to_vec();
    wolfe_search_scalar(
        |alpha| {
            for ((p, t), s) in point.iter_mut().zip(theta).zip(d) {
                *p = t + alpha * s;
            }
            obj.loss(&point)
        },
        cfg,
    )
}

/// [`wolfe_search`] on an arbitrary scalar function `phi`.
pub fn wolfe_search_scalar(phi: impl FnMut(f64) -> f64, cfg: &WolfeConfig) -> Result<LineSearchOutcome> {
    let mut phi = Phi {
        f: phi,
        seen: Vec::new(),
        zeta: cfg.fd.zeta,
    };
    let phi0 = phi.value(0.0);
    if !phi0.is_finite() {
        return Err(Error::NonFiniteLoss { value: phi0 });
    }
    let dphi0 = phi.slope(0.0, phi0);
    if !(dphi0 < 0.0) {
        return Err(Error::NonDescentDirection { slope: dphi0 });
    }

    let guess = 1.01 * 2.0 * (phi.value(1.0) - phi0) / dphi0;
    let mut alpha = if guess.is_finite() && guess > 0.0 {
        guess.min(1.0)
    } else {
        1.0
    };

    let mut lo = 0.0;
    let mut phi_lo = phi0;
    let mut dphi_lo = dphi0;
    let mut hi = cfg.alpha_max;
    let mut rec;
    let mut phi_a = f64::NAN;

    let finish = |status, alpha, phi_alpha, evals| LineSearchOutcome {
        status,
        alpha,
        phi: phi_alpha,
        phi0,
        dphi0,
        phi_evals: evals,
    };

    for i in 0..=cfg.maxiter {
        phi_a = phi.value(alpha);
        let armijo = phi_a <= phi0 + cfg.rho * alpha * dphi0;
        if !phi_a.is_finite() || !armijo || phi_a >= phi_lo {
            rec = hi;
            hi = alpha;
        } else {
            let dphi_a = phi.slope(alpha, phi_a);
            if dphi_a.abs() <= -cfg.sigma * dphi0 {
                return Ok(finish(LineSearchStatus::Accepted, alpha, phi_a, phi.seen.len()));
            }
            if dphi_a * (hi - lo) >= 0.0 {
                rec = hi;
                hi = lo;
            } else {
                rec = lo;
            }
            lo = alpha;
            phi_lo = phi_a;
            dphi_lo = dphi_a;
        }
        if i == cfg.maxiter {
            break;
        }
        let bracket = Bracket {
            lo,
            phi_lo,
            dphi_lo,
            hi,
            phi_hi: phi.value(hi),
            rec,
            phi_rec: phi.value(rec),
        };
        alpha = next_alpha(&bracket, i);
    }
    Ok(finish(LineSearchStatus::Failed, alpha, phi_a, phi.seen.len()))
}

/// `(sqrt(5) - 1) / 2`.
pub const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[lo, hi]`; returns the midpoint of the final
/// interval, whose width is at most `tol`.
pub fn golden_section(f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    golden_interval(f, lo, hi, tol).0
}

/// [`golden_section`] that also evaluates `f` at the returned point.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, _) = golden_interval(&mut f, lo, hi, tol);
    (x, f(x))
}

fn golden_interval(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, usize) {
    let r = GOLDEN_RATIO_CONJUGATE;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        // NaN compares false and pushes the search toward `c`.
        if fc < fd || fd.is_nan() {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (0.5 * (a + b), iterations)
}
