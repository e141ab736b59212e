use std::fmt::Write as _;
use std::path::Path;

use super::{PhaseLabError, SweepTable};

const VIRIDIS: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2d, 0x7b],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

const LEFT: f64 = 80.0;
const TOP: f64 = 50.0;
const PLOT: f64 = 440.0;
const BAR_X: f64 = 550.0;
const BAR_W: f64 = 20.0;
const WIDTH: f64 = 660.0;
const HEIGHT: f64 = 560.0;

/// Number of distinct colors; at this depth every step raises the
/// luminance after rounding to 8 bits.
pub(crate) const LEVELS: usize = 128;

/// Color for `t` in `[0, 1]`, quantized to [`LEVELS`] steps and
/// interpolated between the anchors.
pub(crate) fn colormap(t: f64) -> [u8; 3] {
    let level = (t.clamp(0.0, 1.0) * (LEVELS - 1) as f64).round();
    let x = level / (LEVELS - 1) as f64 * (VIRIDIS.len() - 1) as f64;
    let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// SVG heatmap of one column over the `(lambda1, impact1)` grid. Rows
/// without a value are drawn hatched.
pub fn heatmap_svg(table: &SweepTable, column: &str) -> Result<String, PhaseLabError> {
    if table.rows.is_empty() {
        return Err(PhaseLabError::EmptyTable);
    }
    let values = table.column(column)?;
    let xs = sorted_unique(table.rows.iter().map(|r| r.lambda1));
    let ys = sorted_unique(table.rows.iter().map(|r| r.impact1));
    if xs.len() * ys.len() != table.rows.len() {
        return Err(PhaseLabError::NonRectangularGrid);
    }
    let mut seen = vec![false; table.rows.len()];
    let mut cells = Vec::with_capacity(table.rows.len());
    for (row, v) in table.rows.iter().zip(&values) {
        let ix = xs.partition_point(|&x| x < row.lambda1);
        let iy = ys.partition_point(|&y| y < row.impact1);
        let slot = &mut seen[ix * ys.len() + iy];
        if *slot {
            return Err(PhaseLabError::NonRectangularGrid);
        }
        *slot = true;
        cells.push((ix, iy, *v));
    }

    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };

    let (cw, ch) = (PLOT / xs.len() as f64, PLOT / ys.len() as f64);
    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, "<defs>");
    let _ = writeln!(
        w,
        r##"<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><path d="M0 0H6V6H0Z" fill="#ffffff"/><path d="M0 0V6" stroke="#808080" stroke-width="2"/></pattern>"##
    );
    let _ = writeln!(w, r#"<linearGradient id="bar" x1="0" y1="1" x2="0" y2="0">"#);
    for (k, &c) in VIRIDIS.iter().enumerate() {
        let t = k as f64 / (VIRIDIS.len() - 1) as f64;
        let _ = writeln!(w, r#"<stop offset="{t:.4}" stop-color="{}"/>"#, hex(c));
    }
    let _ = writeln!(w, "</linearGradient>\n</defs>");
    let _ = writeln!(
        w,
        r#"<text class="title" x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + PLOT / 2.0,
        escape(column)
    );

    for &(ix, iy, v) in &cells {
        let x = LEFT + ix as f64 * cw;
        let y = TOP + (ys.len() - 1 - iy) as f64 * ch;
        let fill = match v {
            Some(v) if v.is_finite() => hex(colormap(scale(v))),
            _ => "url(#hatch)".to_string(),
        };
        let _ = writeln!(
            w,
            r#"<rect class="cell" x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{fill}"/>"#
        );
    }

    let bottom = TOP + PLOT;
    let _ = writeln!(
        w,
        r##"<path d="M{LEFT} {TOP}V{bottom}H{}" fill="none" stroke="#000000"/>"##,
        LEFT + PLOT
    );
    for (x, label) in [(LEFT, xs[0]), (LEFT + PLOT, xs[xs.len() - 1])] {
        let _ = writeln!(w, r#"<text x="{x}" y="{}" text-anchor="middle">{label}</text>"#, bottom + 16.0);
    }
    for (y, label) in [(bottom, ys[0]), (TOP, ys[ys.len() - 1])] {
        let _ = writeln!(w, r#"<text x="{}" y="{y}" text-anchor="end">{label}</text>"#, LEFT - 6.0);
    }
    let _ = writeln!(
        w,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">λ₁</text>"#,
        LEFT + PLOT / 2.0,
        bottom + 36.0
    );
    let _ = writeln!(
        w,
        r#"<text class="ylabel" x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">I₁</text>"#,
        LEFT - 40.0,
        TOP + PLOT / 2.0,
        LEFT - 40.0,
        TOP + PLOT / 2.0
    );

    let _ = writeln!(
        w,
        r##"<rect class="colorbar" x="{BAR_X}" y="{TOP}" width="{BAR_W}" height="{PLOT}" fill="url(#bar)" stroke="#000000"/>"##
    );
    let (lo_label, hi_label) = if lo <= hi {
        (format!("{lo:.4}"), format!("{hi:.4}"))
    } else {
        ("n/a".to_string(), "n/a".to_string())
    };
    let _ = writeln!(w, r#"<text x="{}" y="{}">{hi_label}</text>"#, BAR_X + BAR_W + 4.0, TOP + 4.0);
    let _ = writeln!(w, r#"<text x="{}" y="{}">{lo_label}</text>"#, BAR_X + BAR_W + 4.0, bottom + 4.0);
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Writes [`heatmap_svg`] to `path` and returns the document.
pub fn render_heatmap(
    table: &SweepTable,
    column: &str,
    path: impl AsRef<Path>,
) -> Result<String, PhaseLabError> {
    let svg = heatmap_svg(table, column)?;
    std::fs::write(path, &svg)?;
    Ok(svg)
}
