//! Two-row phase ribbons: ground truth above prediction.

use std::fmt::Write as _;

use phaseseg::metrics::SegmentList;

/// Thirteen distinct colours, one per class index; larger indices fall back
/// to evenly spaced hues.
pub const PALETTE: [&str; 13] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#393b79", "#f7b6d2", "#000000",
];

pub fn color(class: usize) -> String {
    match PALETTE.get(class) {
        Some(c) => (*c).to_string(),
        None => format!("hsl({}, 60%, 45%)", (class * 137) % 360),
    }
}

pub const FRAME_WIDTH: f64 = 1.0;
pub const ROW_HEIGHT: usize = 24;
const MARGIN: usize = 48;

fn row(out: &mut String, segs: &SegmentList, y: usize) {
    for s in segs.segments() {
        writeln!(
            out,
            r#"  <rect x="{}" y="{y}" width="{}" height="{ROW_HEIGHT}" fill="{}" data-label="{}"/>"#,
            MARGIN as f64 + s.start as f64 * FRAME_WIDTH,
            s.len() as f64 * FRAME_WIDTH,
            color(s.label),
            s.label
        )
        .unwrap();
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn ribbon(title: &str, gt: &SegmentList, pred: &SegmentList) -> String {
    let frames = gt.num_frames().max(pred.num_frames());
    let width = MARGIN as f64 + frames as f64 * FRAME_WIDTH;
    let height = 2 * ROW_HEIGHT + 28;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(out, r#"  <title>{}</title>"#, escape(title)).unwrap();
    writeln!(out, r#"  <text x="2" y="{}" font-size="12">gt</text>"#, 4 + ROW_HEIGHT / 2 + 4).unwrap();
    writeln!(out, r#"  <text x="2" y="{}" font-size="12">pred</text>"#, 8 + ROW_HEIGHT + ROW_HEIGHT / 2 + 4).unwrap();
    row(&mut out, gt, 4);
    row(&mut out, pred, 8 + ROW_HEIGHT);
    writeln!(
        out,
        r#"  <text x="{MARGIN}" y="{}" font-size="10">{frames} frames</text>"#,
        height - 6
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
