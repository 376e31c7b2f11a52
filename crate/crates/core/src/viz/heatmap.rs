//! Standalone SVG heatmaps: filled cells through a colormap, marching-squares
//! contour polylines at evenly spaced levels, axis ticks in raw units, and an
//! optional coefficient caption.

use super::colormap::Colormap;
use super::LevelSurface;
use std::fmt::Write;

#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    pub contours: usize,
    pub colormap: Colormap,
    pub size_px: u32,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        Self {
            contours: 15,
            colormap: Colormap::Cubehelix,
            size_px: 640,
        }
    }
}

/// One contour segment in grid-axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

/// Marching squares on grid node values: `values[iy][ix]` sampled at
/// `(xs[ix], ys[iy])`. Returns the crossing segments of the `level` isoline,
/// with vertices linearly interpolated along cell edges.
pub fn marching_squares(
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<f64>],
    level: f64,
) -> Vec<Segment> {
    let nx = xs.len();
    let ny = ys.len();
    let mut segments = Vec::new();
    // Interpolated crossing point along one edge.
    let cross = |x0: f64, y0: f64, v0: f64, x1: f64, y1: f64, v1: f64| -> (f64, f64) {
        let t = if v1 == v0 { 0.5 } else { (level - v0) / (v1 - v0) };
        (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    };
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let (x0, x1) = (xs[ix], xs[ix + 1]);
            let (y0, y1) = (ys[iy], ys[iy + 1]);
            // Corner values: a = (x0,y0), b = (x1,y0), c = (x1,y1), d = (x0,y1).
            let va = values[iy][ix];
            let vb = values[iy][ix + 1];
            let vc = values[iy + 1][ix + 1];
            let vd = values[iy + 1][ix];
            let mut case = 0u8;
            if va >= level {
                case |= 1;
            }
            if vb >= level {
                case |= 2;
            }
            if vc >= level {
                case |= 4;
            }
            if vd >= level {
                case |= 8;
            }
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = || cross(x0, y0, va, x1, y0, vb);
            let right = || cross(x1, y0, vb, x1, y1, vc);
            let top = || cross(x0, y1, vd, x1, y1, vc);
            let left = || cross(x0, y0, va, x0, y1, vd);
            let mut push = |a: (f64, f64), b: (f64, f64)| segments.push(Segment { a, b });
            match case {
                1 | 14 => push(left(), bottom()),
                2 | 13 => push(bottom(), right()),
                3 | 12 => push(left(), right()),
                4 | 11 => push(right(), top()),
                6 | 9 => push(bottom(), top()),
                7 | 8 => push(left(), top()),
                5 | 10 => {
                    // Saddle: disambiguate with the cell-center average.
                    let center = 0.25 * (va + vb + vc + vd);
                    let center_high = center >= level;
                    if (case == 5) == center_high {
                        push(left(), bottom());
                        push(right(), top());
                    } else {
                        push(left(), top());
                        push(bottom(), right());
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

/// Evenly spaced interior contour levels between `min` and `max`.
pub fn contour_levels(min: f64, max: f64, count: usize) -> Vec<f64> {
    if !(max > min) || count == 0 {
        return Vec::new();
    }
    let step = (max - min) / (count + 1) as f64;
    (1..=count).map(|k| min + k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let formatted = format!("{v:.4}");
    if formatted.len() <= 8 && v.abs() < 1e4 && (v == 0.0 || v.abs() >= 1e-3) {
        let trimmed = formatted.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        format!("{v:.3e}")
    }
}

pub fn render_heatmap_svg(surface: &LevelSurface, opts: &HeatmapOptions) -> String {
    let size = opts.size_px.max(160) as f64;
    let (ml, mr, mt, mb) = (72.0, 24.0, 56.0, 56.0);
    let (pw, ph) = (size - ml - mr, size - mt - mb);
    let xs = &surface.axis1;
    let ys = &surface.axis2;
    let (x_lo, x_hi) = (xs[0], *xs.last().unwrap());
    let (y_lo, y_hi) = (ys[0], *ys.last().unwrap());
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = ml + (x - x_lo) / (x_hi - x_lo).max(f64::MIN_POSITIVE) * pw;
        let py = mt + ph - (y - y_lo) / (y_hi - y_lo).max(f64::MIN_POSITIVE) * ph;
        (px, py)
    };

    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for row in &surface.values {
        for &v in row {
            v_min = v_min.min(v);
            v_max = v_max.max(v);
        }
    }
    let span = v_max - v_min;

    let mut svg = String::with_capacity(1 << 16);
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
         viewBox=\"0 0 {size} {size}\" font-family=\"sans-serif\">\n\
         <rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n"
    );

    // Filled cells, one rect per grid node.
    let nx = xs.len();
    let ny = ys.len();
    let cw = pw / nx as f64;
    let ch = ph / ny as f64;
    for (iy, row) in surface.values.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            let t = if span > 0.0 { (v - v_min) / span } else { 0.5 };
            let [r, g, b] = opts.colormap.color(t);
            let px = ml + ix as f64 * cw;
            let py = mt + ph - (iy + 1) as f64 * ch;
            let _ = write!(
                svg,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"rgb({r},{g},{b})\"/>\n",
                cw + 0.5,
                ch + 0.5
            );
        }
    }

    // Contour lines (none when the surface is flat).
    for level in contour_levels(v_min, v_max, opts.contours) {
        let segments = marching_squares(xs, ys, &surface.values, level);
        if segments.is_empty() {
            continue;
        }
        let mut path = String::new();
        for s in &segments {
            let (ax, ay) = to_px(s.a.0, s.a.1);
            let (bx, by) = to_px(s.b.0, s.b.1);
            let _ = write!(path, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
        }
        let _ = write!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.7\" \
             stroke-opacity=\"0.55\"/>\n"
        );
    }

    // Frame and ticks.
    let _ = write!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let (px, _) = to_px(xv, y_lo);
        let (_, py) = to_px(x_lo, yv);
        let _ = write!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0,
            fmt_tick(xv)
        );
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{ml:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            ml - 5.0,
            ml - 8.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }

    // Labels, title, optional coefficient caption.
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        size - 12.0,
        xml_escape(&surface.axis1_label)
    );
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        xml_escape(&surface.axis2_label)
    );
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"22\" font-size=\"15\" font-weight=\"bold\" \
         text-anchor=\"middle\">Level {}</text>\n",
        ml + pw / 2.0,
        surface.level
    );
    if let Some(caption) = surface.beta_caption_text() {
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"42\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            ml + pw / 2.0,
            xml_escape(&caption)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Simple multi-curve line plot for curve bundles (used by the browser demo
/// and handy for eyeballing ICE output).
pub fn render_curves_svg(
    x: &[f64],
    curves: &[Vec<f64>],
    mean: Option<&[f64]>,
    x_label: &str,
    title: &str,
    size_px: u32,
) -> String {
    let size = size_px.max(160) as f64;
    let (ml, mr, mt, mb) = (64.0, 20.0, 40.0, 48.0);
    let (pw, ph) = (size - ml - mr, size * 0.75 - mt - mb);
    let height = size * 0.75;
    let (x_lo, x_hi) = (x[0], *x.last().unwrap());
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for c in curves.iter().chain(mean.map(|m| m.to_vec()).iter()) {
        for &v in c {
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    if !(y_hi > y_lo) {
        y_hi = y_lo + 1.0;
    }
    let to_px = |xv: f64, yv: f64| {
        (
            ml + (xv - x_lo) / (x_hi - x_lo) * pw,
            mt + ph - (yv - y_lo) / (y_hi - y_lo) * ph,
        )
    };
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{height}\" \
         viewBox=\"0 0 {size} {height}\" font-family=\"sans-serif\">\n\
         <rect width=\"{size}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    let poly = |ys: &[f64], stroke: &str, width: f64, opacity: f64| {
        let mut points = String::new();
        for (&xv, &yv) in x.iter().zip(ys) {
            let (px, py) = to_px(xv, yv);
            let _ = write!(points, "{px:.2},{py:.2} ");
        }
        format!(
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"{stroke}\" \
             stroke-width=\"{width}\" stroke-opacity=\"{opacity}\"/>\n"
        )
    };
    for c in curves {
        svg.push_str(&poly(c, "#4878b0", 1.0, 0.45));
    }
    if let Some(m) = mean {
        svg.push_str(&poly(m, "#c03028", 2.5, 1.0));
    }
    let _ = write!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let (px, _) = to_px(xv, y_lo);
        let (_, py) = to_px(x_lo, yv);
        let _ = write!(
            svg,
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            mt + ph + 16.0,
            fmt_tick(xv),
            ml - 5.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"{:.1}\" y=\"20\" font-size=\"14\" font-weight=\"bold\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        height - 10.0,
        xml_escape(x_label),
        ml + pw / 2.0,
        xml_escape(title)
    );
    svg.push_str("</svg>\n");
    svg
}
