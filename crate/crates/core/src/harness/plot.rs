use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::trace::{Trace, TraceKind};
use crate::error::{Error, Result};

const CELL_W: f64 = 6.0;
const CELL_H: f64 = 24.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Red for 0 through blue for 1 and above.
fn color(value: f64) -> String {
    let t = if value.is_nan() { 1.0 } else { value.clamp(0.0, 1.0) };
    let r = (255.0 * (1.0 - t)).round() as u8;
    let b = (255.0 * t).round() as u8;
    format!("#{r:02x}00{b:02x}")
}

fn row_labels(kind: &TraceKind) -> Vec<String> {
    match kind {
        TraceKind::Spectral { frequencies } => frequencies.iter().map(|k| format!("k = {k}")).collect(),
        TraceKind::Filter { deltas } => deltas
            .iter()
            .flat_map(|d| [format!("e_low d={d}"), format!("e_high d={d}")])
            .collect(),
    }
}

/// Standalone SVG with one row per measured quantity and one column per
/// recorded epoch. Values are clipped to `[0, 1]`.
pub fn heatmap_svg(trace: &Trace) -> Result<String> {
    if trace.rows.is_empty() {
        return Err(Error::config("cannot plot an empty trace"));
    }
    let labels = row_labels(&trace.kind);
    let cols = trace.rows.len();
    let width = MARGIN_LEFT + CELL_W * cols as f64 + 20.0;
    let height = MARGIN_TOP + CELL_H * labels.len() as f64 + MARGIN_BOTTOM;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (r, label) in labels.iter().enumerate().rev() {
        // Lowest frequency at the bottom.
        let y = MARGIN_TOP + CELL_H * (labels.len() - 1 - r) as f64;
        for (c, row) in trace.rows.iter().enumerate() {
            let x = MARGIN_LEFT + CELL_W * c as f64;
            let _ = writeln!(
                svg,
                r#"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}"/>"#,
                color(row.values[r])
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end" font-family="sans-serif">{label}</text>"#,
            MARGIN_LEFT - 6.0,
            y + CELL_H * 0.65
        );
    }
    let axis_y = MARGIN_TOP + CELL_H * labels.len() as f64;
    let first = trace.rows[0].epoch;
    let last = trace.rows[cols - 1].epoch;
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_LEFT}" y="{}" font-size="11" font-family="sans-serif">{first}</text>"#,
        axis_y + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{last}</text>"#,
        MARGIN_LEFT + CELL_W * cols as f64,
        axis_y + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif">epoch</text>"#,
        MARGIN_LEFT + CELL_W * cols as f64 / 2.0,
        axis_y + 34.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_heatmap_svg(trace: &Trace, path: &Path) -> Result<()> {
    fs::write(path, heatmap_svg(trace)?)?;
    Ok(())
}
