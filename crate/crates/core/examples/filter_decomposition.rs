//! Low/high frequency split of labels in a high-dimensional input space with
//! a Gaussian kernel, and the relative errors of a model's outputs.

use freqlab::harness::{gaussian_clusters, ClusterConfig};
use freqlab::spectrum::GaussianFilter;
use ndarray::Array2;

fn main() -> freqlab::Result<()> {
    let data = gaussian_clusters(&ClusterConfig::default(), 0)?;
    let labels = data.targets().view();
    for delta in [0.5, 2.0, 7.0] {
        let filter = GaussianFilter::new(data.inputs().view(), delta)?;
        let (low, high) = filter.decompose(labels)?;
        let norm = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("delta {delta}: |y_low| = {:.3}, |y_high| = {:.3}", norm(&low), norm(&high));

        // A model that predicts the cluster average gets the smooth part right
        // and misses the rest.
        let smooth = filter.errors(labels, low.view())?;
        println!("  outputs = y_low:  e_low {:.3}, e_high {:.3}", smooth.e_low, smooth.e_high);
        let shrunk = labels.mapv(|v| 0.8 * v);
        let scaled = filter.errors(labels, shrunk.view())?;
        println!("  outputs = 0.8 y:  e_low {:.3}, e_high {:.3}", scaled.e_low, scaled.e_high);
    }
    Ok(())
}
