//! DFT of the training targets, peak selection and per-frequency relative
//! error of an approximation.

use freqlab::harness::{build_1d_dataset, TargetId};
use freqlab::spectrum::{dft, relative_spectral_error, select_peak_frequencies, DEFAULT_PEAK_RATIO};

fn main() -> freqlab::Result<()> {
    let data = build_1d_dataset(TargetId::Sin1_3_5, 201)?;
    let xs = data.inputs().column(0).to_vec();
    let ys = data.targets().column(0).to_vec();
    let target = dft(&ys);

    let peaks = select_peak_frequencies(&target, DEFAULT_PEAK_RATIO)?;
    println!("peaks of sin x + sin 3x + sin 5x: {peaks:?}");
    for k in 0..8 {
        println!("  |F_{k}| = {:.5}", target.magnitude(k));
    }

    // A crude approximation that only has the lowest mode right.
    let approx: Vec<f64> = xs.iter().map(|x| x.sin() + 0.5 * (3.0 * x).sin()).collect();
    let spectrum = dft(&approx);
    for &k in &peaks {
        println!("relative error at k = {k}: {:.3}", relative_spectral_error(&target, &spectrum, k)?);
    }
    Ok(())
}
