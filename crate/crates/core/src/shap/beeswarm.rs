//! Beeswarm summary plot: one row per top-ranked feature, one dot per
//! sample placed at its attribution and coloured by its scaled value.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AttributionMatrix, FeatureRanking};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dots drawn per feature row in the SVG; the CSV always holds every sample.
const SVG_MAX_POINTS_PER_ROW: usize = 2000;
const WIDTH: f64 = 820.0;
const LEFT: f64 = 220.0;
const RIGHT: f64 = 40.0;
const ROW: f64 = 30.0;
const TOP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub feature: String,
    pub rank: usize,
    pub scaled_value: f64,
    pub shap_value: f64,
    pub sample_id: usize,
}

// splitmix64, for jitter that depends only on (rank, sample).
fn jitter(rank: usize, sample: usize) -> f64 {
    let mut z = (rank as u64) << 32 ^ sample as u64;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Low values blue, high values red.
fn colour(v: f64) -> String {
    let t = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(0.0, 255.0), lerp(138.0, 0.0), lerp(255.0, 82.0))
}

/// Write the plot data (CSV) and figure (SVG) for the `top` highest-ranked
/// features. `scaled_x` holds the preprocessed inputs the attributions were
/// computed on, in the same column order.
pub fn export_beeswarm<T: Real>(
    attr: &AttributionMatrix<T>,
    scaled_x: &Array2<T>,
    ranking: &FeatureRanking,
    top: usize,
    csv_path: &Path,
    svg_path: &Path,
) -> Result<Vec<BeeswarmPoint>> {
    if scaled_x.dim() != attr.values.dim() {
        return Err(Error::ShapeMismatch(format!(
            "inputs {:?} vs attributions {:?}",
            scaled_x.dim(),
            attr.values.dim()
        )));
    }
    let n = attr.values.nrows();
    let mut points = Vec::with_capacity(n * top.min(ranking.features.len()));
    for (rank, f) in ranking.features.iter().take(top).enumerate() {
        let j = attr
            .feature_names
            .iter()
            .position(|name| *name == f.name)
            .ok_or_else(|| Error::ShapeMismatch(format!("ranked feature `{}` has no attributions", f.name)))?;
        for i in 0..n {
            points.push(BeeswarmPoint {
                feature: f.name.clone(),
                rank: rank + 1,
                scaled_value: scaled_x[[i, j]].as_f64(),
                shap_value: attr.values[[i, j]].as_f64(),
                sample_id: i,
            });
        }
    }

    let mut w = csv::Writer::from_path(csv_path)?;
    for p in &points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let svg = render_svg(&points, top.min(ranking.features.len()), n);
    std::fs::write(svg_path, svg).map_err(|e| Error::io(svg_path, e))?;
    Ok(points)
}

fn render_svg(points: &[BeeswarmPoint], rows: usize, n: usize) -> String {
    let (lo, hi) = points
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.shap_value), hi.max(p.shap_value)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let sx = |v: f64| LEFT + (v - lo) / span * plot_w;
    let height = TOP + ROW * rows as f64 + 50.0;
    let stride = n.div_ceil(SVG_MAX_POINTS_PER_ROW).max(1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let x0 = sx(0.0);
    let _ = writeln!(
        s,
        r##"<line x1="{x0:.1}" y1="{TOP}" x2="{x0:.1}" y2="{:.1}" stroke="#999"/>"##,
        TOP + ROW * rows as f64
    );
    for p in points {
        if p.sample_id % stride != 0 {
            continue;
        }
        let row = (p.rank - 1) as f64;
        if p.sample_id == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                TOP + ROW * (row + 0.5) + 4.0,
                p.feature
            );
        }
        let cy = TOP + ROW * (row + 0.5) + jitter(p.rank, p.sample_id) * ROW * 0.7;
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{cy:.2}" r="1.6" fill="{}" fill-opacity="0.7"/>"#,
            sx(p.shap_value),
            colour(p.scaled_value)
        );
    }
    let axis_y = TOP + ROW * rows as f64 + 20.0;
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{axis_y:.1}" text-anchor="middle">{lo:.2}</text><text x="{:.1}" y="{axis_y:.1}" text-anchor="middle">{hi:.2}</text>"#,
        sx(lo),
        sx(hi)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SHAP value (impact on predicted SPPB); colour: feature value low (blue) to high (red)</text>"#,
        LEFT + plot_w / 2.0,
        axis_y + 18.0
    );
    s.push_str("</svg>\n");
    s
}
