//! Strong-Wolfe line search and golden-section search on one-dimensional
//! functions.

use freqlab::linesearch::{cubicmin, golden_section, quadmin, wolfe_search, WolfeConfig};
use freqlab::{FnObjective, ObjectiveHandle};

fn main() -> freqlab::Result<()> {
    // Search along d = (1, 1) from the origin on a shifted bowl.
    let bowl = FnObjective::new(2, |t: &[f64]| (t[0] - 1.5).powi(2) + 3.0 * (t[1] - 0.5).powi(2));
    let handle = ObjectiveHandle::new(&bowl);
    let cfg = WolfeConfig::default();
    let out = wolfe_search(&handle, &[0.0, 0.0], &[1.0, 1.0], &cfg)?;
    println!(
        "wolfe: {:?} alpha = {:.6} phi(0) = {:.4} -> phi(alpha) = {:.6} after {} phi evaluations",
        out.status, out.alpha, out.phi0, out.phi, out.phi_evals
    );
    println!("exact minimizer along the ray: {:.6}", (1.5 + 3.0 * 0.5) / 4.0);

    // The interpolants recover the minimizer of a matching polynomial.
    let q = |x: f64| 2.0 * (x - 0.7).powi(2) + 1.0;
    println!("quadmin: {:?}", quadmin(0.0, q(0.0), -2.8, 1.0, q(1.0)));
    let c = |x: f64| x.powi(3) - 2.0 * x * x + 0.5 * x;
    println!("cubicmin: {:?}", cubicmin(0.0, c(0.0), 0.5, 1.0, c(1.0), 2.0, c(2.0)));
    println!("true cubic local minimizer: {:.12}", (4.0 + (16.0f64 - 6.0).sqrt()) / 6.0);

    let x = golden_section(|x: f64| (x - 0.3).cos() * -1.0, 0.0, 1.0, 1e-8);
    println!("golden section on [0, 1]: {x:.8}");
    Ok(())
}
