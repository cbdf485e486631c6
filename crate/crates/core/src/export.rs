//! Curve exporters: CSV point lists and SVG drawings.

use std::fmt::Write as _;
use std::path::Path;

use crate::gifs::Point;
use crate::parametrize::CurveApproximation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Replace corners by quadratic fillets through segment midpoints.
    pub rounded_corners: bool,
    pub stroke_width: f64,
    /// Margin added on every side of the bounding box.
    pub viewbox_padding: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            rounded_corners: false,
            stroke_width: 0.005,
            viewbox_padding: 0.05,
        }
    }
}

/// CSV with header `x,y` (or `x` / `x1,...,xd`), one point per LF-terminated
/// line, every coordinate with 17 significant digits.
pub fn to_csv(points: &[Point]) -> String {
    let d = points.first().map_or(2, |p| p.len());
    let mut out = match d {
        1 => "x".to_string(),
        2 => "x,y".to_string(),
        _ => (1..=d)
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(","),
    };
    out.push('\n');
    for p in points {
        let row: Vec<String> = p.iter().map(|&x| decimal17(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads back the output of [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<Point>, String> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(n, line)| {
            line.split(',')
                .map(|f| f.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1)))
                .collect::<Result<Vec<_>, _>>()
                .map(Point::from_vec)
        })
        .collect()
}

/// Plain positional decimal carrying exactly 17 significant digits.
fn decimal17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.16e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if (exp as usize) < digits.len() - 1 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("{}{}", digits, "0".repeat(exp as usize + 1 - digits.len()))
    };
    format!("{sign}{body}")
}

/// SVG drawing of a planar point sequence. The y axis is flipped so the
/// picture has the usual mathematical orientation.
pub fn to_svg(points: &[Point], opts: &SvgOptions) -> String {
    assert!(
        points.iter().all(|p| p.len() == 2),
        "SVG export needs planar points"
    );
    let flipped: Vec<(f64, f64)> = points.iter().map(|p| (p[0], -p[1])).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in &flipped {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let pad = opts.viewbox_padding;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        x0 - pad,
        y0 - pad,
        (x1 - x0) + 2.0 * pad,
        (y1 - y0) + 2.0 * pad
    );
    let style = format!(
        r#"fill="none" stroke="black" stroke-width="{}" stroke-linejoin="round""#,
        opts.stroke_width
    );
    if opts.rounded_corners && flipped.len() > 2 {
        let _ = writeln!(out, r#"<path d="{}" {style}/>"#, filleted_path(&flipped));
    } else {
        let pts: Vec<String> = flipped.iter().map(|(x, y)| format!("{x},{y}")).collect();
        let _ = writeln!(out, r#"<polyline points="{}" {style}/>"#, pts.join(" "));
    }
    out.push_str("</svg>\n");
    out
}

fn filleted_path(p: &[(f64, f64)]) -> String {
    let mid = |a: (f64, f64), b: (f64, f64)| (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    let mut d = format!("M {},{}", p[0].0, p[0].1);
    let first = mid(p[0], p[1]);
    let _ = write!(d, " L {},{}", first.0, first.1);
    for k in 1..p.len() - 1 {
        let m = mid(p[k], p[k + 1]);
        let _ = write!(d, " Q {},{} {},{}", p[k].0, p[k].1, m.0, m.1);
    }
    let last = p[p.len() - 1];
    let _ = write!(d, " L {},{}", last.0, last.1);
    d
}

/// Writes `curve` to `path` in the requested format.
pub fn export_curve(
    curve: &CurveApproximation,
    format: Format,
    path: impl AsRef<Path>,
    opts: &SvgOptions,
) -> std::io::Result<()> {
    let text = match format {
        Format::Csv => to_csv(&curve.points),
        Format::Svg => to_svg(&curve.points, opts),
    };
    std::fs::write(path, text)
}

/// Number of vertices in the first `<polyline>` of an SVG document.
pub fn polyline_point_count(svg: &str) -> Option<usize> {
    let start = svg.find("<polyline points=\"")? + "<polyline points=\"".len();
    let end = start + svg[start..].find('"')?;
    Some(svg[start..end].split_whitespace().count())
}
