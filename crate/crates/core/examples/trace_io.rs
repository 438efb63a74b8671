//! Writing, reading and plotting traces without running an experiment.

use freqlab::harness::{emit_csv, emit_heatmap_svg, read_csv, Trace, TraceKind};

fn main() -> freqlab::Result<()> {
    let mut trace = Trace::new(TraceKind::Spectral { frequencies: vec![1, 3, 5] });
    for epoch in 0..60 {
        let t = epoch as f64;
        trace.push(epoch, (-t / 20.0).exp(), vec![(-t / 5.0).exp(), (-t / 15.0).exp(), (-t / 40.0).exp()]);
    }
    let dir = std::env::temp_dir().join("freqlab-trace-io");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("synthetic.csv");
    emit_csv(&trace, &csv)?;
    let back = read_csv(&csv)?;
    assert_eq!(back, trace);
    emit_heatmap_svg(&back, &dir.join("synthetic.svg"))?;
    println!("round-tripped {} rows through {}", back.rows.len(), csv.display());
    Ok(())
}
