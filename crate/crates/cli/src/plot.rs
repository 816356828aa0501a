//! Minimal SVG plots: curves coloured by group and 2-D feature scatters.

use std::fmt::Write as _;

use epiclust::FunctionalSample;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn colour(group: Option<usize>) -> &'static str {
    group.map_or(PALETTE[0], |g| PALETTE[g % PALETTE.len()])
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&mut xs.clone());
        let (y0, y1) = range(&mut ys.clone());
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#999999"/>"##,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, PAD / 2.0, escape(title)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 8.0, escape(xlabel)).unwrap();
        writeln!(
            s,
            r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        )
        .unwrap();
        for (v, x, y, anchor) in [
            (self.x0, PAD, H - PAD + 14.0, "start"),
            (self.x1, W - PAD, H - PAD + 14.0, "end"),
            (self.y0, PAD - 4.0, H - PAD, "end"),
            (self.y1, PAD - 4.0, PAD + 8.0, "end"),
        ] {
            writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v)).unwrap();
        }
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Every curve of `sample` as a polyline, coloured by `groups` when given.
pub fn curves_svg(sample: &FunctionalSample, groups: Option<&[usize]>, title: &str) -> String {
    let grid = sample.grid().points();
    let values = sample.values();
    let frame = Frame::fit(grid.iter().copied(), values.iter().copied());
    let mut s = String::new();
    frame.axes(&mut s, title, "t", "x(t)");
    for i in 0..sample.n_curves() {
        let pts: Vec<String> = grid
            .iter()
            .enumerate()
            .map(|(j, &t)| format!("{:.1},{:.1}", frame.px(t), frame.py(values[(i, j)])))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="0.8" stroke-opacity="0.7" points="{}"/>"#,
            colour(groups.map(|g| g[i])),
            pts.join(" ")
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of `(x[i], y[i])`, coloured by `groups` when given.
pub fn scatter_svg(x: &[f64], y: &[f64], groups: Option<&[usize]>, labels: (&str, &str), title: &str) -> String {
    let frame = Frame::fit(x.iter().copied(), y.iter().copied());
    let mut s = String::new();
    frame.axes(&mut s, title, labels.0, labels.1);
    for i in 0..x.len().min(y.len()) {
        writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            frame.px(x[i]),
            frame.py(y[i]),
            colour(groups.map(|g| g[i]))
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use epiclust::Grid;
    use nalgebra::DMatrix;

    #[test]
    fn one_polyline_per_curve() {
        let grid = Grid::uniform(0.0, 1.0, 5).unwrap();
        let values = DMatrix::from_fn(3, 5, |i, j| (i * j) as f64);
        let sample = FunctionalSample::new(values, grid, Some(vec![0, 1, 1])).unwrap();
        let svg = curves_svg(&sample, sample.labels(), "a < b");
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn constant_scatter_is_finite() {
        let svg = scatter_svg(&[1.0, 1.0], &[2.0, 2.0], None, ("EI", "HI"), "s");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
