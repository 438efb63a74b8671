//! Self-check of the numerical building blocks on synthetic problems with
//! known answers. Backs the `verify` CLI subcommand.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linesearch::{golden_section, wolfe_search_scalar, WolfeConfig};
use crate::objective::{fd_gradient, FdConfig, FnObjective, ObjectiveHandle};
use crate::optimizers::{
    no_callback, Bfgs, ConjugateGradient, Lbfgs, MonteCarlo, Optimizer, ParticleSwarm, Powell, StoppingRule,
};
use crate::spectrum::{dft, GaussianFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn stiff(t: &[f64]) -> f64 {
    0.5 * (t[0] * t[0] + 10.0 * t[1] * t[1])
}

/// Runs every check; never panics.
pub fn run_all() -> Vec<Check> {
    vec![
        fd_gradient_on_quadratic(),
        cg_on_stiff_quadratic(),
        bfgs_secant(),
        lbfgs_matches_bfgs(),
        powell_separable(),
        derivative_free_methods_skip_gradients(),
        wolfe_conditions(),
        golden_section_accuracy(),
        parseval(),
        filter_reconstruction(),
    ]
}

fn fd_gradient_on_quadratic() -> Check {
    let f = FnObjective::new(2, |t: &[f64]| t.iter().map(|x| x * x).sum());
    let h = ObjectiveHandle::new(&f);
    let g = fd_gradient(&h, &[3.0, -1.0], &FdConfig::default());
    match g {
        Ok(g) => {
            let err = (g[0] - 6.0).abs().max((g[1] + 2.0).abs());
            check(
                "fd gradient of |x|^2",
                err < 1e-6 && h.eval_count() == 3,
                format!("max error {err:.2e}, {} evaluations", h.eval_count()),
            )
        }
        Err(e) => check("fd gradient of |x|^2", false, e.to_string()),
    }
}

fn cg_on_stiff_quadratic() -> Check {
    let f = FnObjective::new(2, stiff);
    let h = ObjectiveHandle::new(&f);
    match ConjugateGradient::default().run(&h, &[1.0, 1.0], &StoppingRule::new(1e-6, 10), &mut no_callback) {
        Ok(res) => {
            let dist = res.theta.iter().map(|t| t.abs()).fold(0.0, f64::max);
            check(
                "CG on diag(1, 10)",
                dist <= 1e-4 && res.reports.last().and_then(|r| r.grad_norm).is_some_and(|g| g <= 1e-6),
                format!("{} iterations, distance {dist:.2e}", res.epochs()),
            )
        }
        Err(e) => check("CG on diag(1, 10)", false, e.to_string()),
    }
}

fn bfgs_secant() -> Check {
    let f = FnObjective::new(2, |t: &[f64]| (1.0 - t[0]).powi(2) + 100.0 * (t[1] - t[0] * t[0]).powi(2));
    let h = ObjectiveHandle::new(&f);
    let mut worst: f64 = 0.0;
    let res = Bfgs::default().run_observed(
        &h,
        &[-1.2, 1.0],
        &StoppingRule::new(1e-7, 200),
        &mut no_callback,
        &mut |u| {
            let hy = u.h.apply(u.y);
            for (a, b) in hy.iter().zip(u.s) {
                worst = worst.max((a - b).abs());
            }
        },
    );
    match res {
        Ok(res) => check(
            "BFGS secant identity",
            worst <= 1e-8 && res.final_loss() < 1e-8,
            format!("max |Hy - s| {worst:.2e}, final loss {:.2e}", res.final_loss()),
        ),
        Err(e) => check("BFGS secant identity", false, e.to_string()),
    }
}

fn lbfgs_matches_bfgs() -> Check {
    let f = FnObjective::new(3, |t: &[f64]| {
        0.5 * (t[0] * t[0] + 4.0 * t[1] * t[1] + 9.0 * t[2] * t[2]) + 0.3 * t[0] * t[1]
    });
    let stop = StoppingRule::new(1e-9, 30);
    let path = |opt: &dyn Optimizer| {
        let h = ObjectiveHandle::new(&f);
        let steps = RefCell::new(Vec::new());
        let res = opt.run(&h, &[1.0, -0.5, 0.25], &stop, &mut |_, t| {
            steps.borrow_mut().push(t.to_vec());
            std::ops::ControlFlow::Continue(())
        });
        res.map(|_| steps.into_inner())
    };
    let full = Lbfgs {
        memory: 64,
        ..Lbfgs::default()
    };
    match (path(&Bfgs::default()), path(&full)) {
        (Ok(a), Ok(b)) => {
            let worst = a
                .iter()
                .zip(&b)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max);
            // Near the minimizer the gradient tolerance may fire one
            // iteration apart; the shared prefix must agree.
            check(
                "full-memory L-BFGS equals BFGS",
                a.len().abs_diff(b.len()) <= 1 && a.len().min(b.len()) >= 3 && worst <= 1e-8,
                format!("{} vs {} iterates, max deviation {worst:.2e}", a.len(), b.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => check("full-memory L-BFGS equals BFGS", false, e.to_string()),
    }
}

fn powell_separable() -> Check {
    let f = FnObjective::new(3, |t: &[f64]| t[0] * t[0] + 2.0 * t[1] * t[1] + 0.5 * t[2] * t[2]);
    let h = ObjectiveHandle::new(&f);
    let mut first = None;
    let res = Powell::default().run(&h, &[-0.5, -0.3, -0.8], &StoppingRule::new(1e-9, 1), &mut |e, t| {
        if e == 1 {
            first = Some(t.to_vec());
        }
        std::ops::ControlFlow::Continue(())
    });
    match (res, first) {
        (Ok(_), Some(t)) => {
            let dist = t.iter().map(|x| x.abs()).fold(0.0, f64::max);
            check(
                "Powell one-sweep separable quadratic",
                dist <= 1e-6 && h.gradient_calls() == 0,
                format!("distance after one sweep {dist:.2e}"),
            )
        }
        (Err(e), _) => check("Powell one-sweep separable quadratic", false, e.to_string()),
        (Ok(_), None) => check("Powell one-sweep separable quadratic", false, "no sweep recorded".into()),
    }
}

fn derivative_free_methods_skip_gradients() -> Check {
    let f = FnObjective::new(2, stiff);
    let stop = StoppingRule::new(1e-9, 20);
    let mut calls = 0;
    let mut monotone = true;
    let opts: [&dyn Optimizer; 3] = [&Powell::default(), &ParticleSwarm::default(), &MonteCarlo::default()];
    for opt in opts {
        let h = ObjectiveHandle::new(&f);
        match opt.run(&h, &[0.8, -0.6], &stop, &mut no_callback) {
            Ok(res) => {
                calls += h.gradient_calls();
                monotone &= res.reports.windows(2).all(|w| w[1].loss <= w[0].loss);
            }
            Err(_) => monotone = false,
        }
    }
    check(
        "derivative-free methods",
        calls == 0 && monotone,
        format!("{calls} gradient calls, monotone losses: {monotone}"),
    )
}

fn wolfe_conditions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = WolfeConfig::default();
    let mut accepted = 0;
    let mut violations = 0;
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.2..3.0);
        let b: f64 = rng.random_range(0.5..4.0);
        let c: f64 = rng.random_range(0.0..0.5);
        let w: f64 = rng.random_range(0.5..5.0);
        let phi = move |x: f64| a * (x - b).powi(2) + c * (w * x).sin();
        let phi0 = phi(0.0);
        let dphi = move |x: f64| 2.0 * a * (x - b) + c * w * (w * x).cos();
        if dphi(0.0) >= 0.0 {
            continue;
        }
        if let Ok(out) = wolfe_search_scalar(phi, &cfg) {
            if out.accepted() {
                accepted += 1;
                let armijo = phi(out.alpha) <= phi0 + cfg.rho * out.alpha * dphi(0.0) + 1e-12;
                // The search sees a forward-difference slope; allow its error.
                let curvature = dphi(out.alpha).abs() <= -cfg.sigma * dphi(0.0) + 1e-6;
                if !(armijo && curvature) {
                    violations += 1;
                }
            }
        }
    }
    check(
        "strong Wolfe acceptance",
        accepted > 0 && violations == 0,
        format!("{accepted} accepted, {violations} violations"),
    )
}

fn golden_section_accuracy() -> Check {
    let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-6);
    check("golden section", (x - 0.3).abs() <= 1e-6, format!("minimizer {x}"))
}

fn parseval() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for n in [1, 2, 7, 64, 201] {
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = dft(&f);
        let lhs: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        let rhs: f64 = f.iter().map(|v| v * v).sum::<f64>() / n as f64;
        worst = worst.max((lhs - rhs).abs());
    }
    check("Parseval identity", worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn filter_reconstruction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = ndarray::Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
    let y = ndarray::Array2::from_shape_fn((40, 2), |_| rng.random_range(-1.0..1.0));
    match GaussianFilter::new(x.view(), 0.5).and_then(|f| f.decompose(y.view())) {
        Ok((lo, hi)) => {
            let worst = (&lo + &hi - &y).iter().map(|v| v.abs()).fold(0.0, f64::max);
            check("filter reconstruction", worst <= 1e-12, format!("max deviation {worst:.2e}"))
        }
        Err(e) => check("filter reconstruction", false, e.to_string()),
    }
}
