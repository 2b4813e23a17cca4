//! Minimal static bar charts. Output depends only on the input values.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 20] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
    "#1f77b4", "#aec7e8", "#ffbb78", "#98df8a", "#c5b0d5", "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
    /// Stack series on one bar per category instead of grouping side by side.
    pub stacked: bool,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn value(series: &Series, i: usize) -> f64 {
    series.values.get(i).copied().unwrap_or(0.0).max(0.0)
}

impl BarChart {
    fn y_max(&self) -> f64 {
        let max = (0..self.categories.len())
            .map(|i| {
                if self.stacked {
                    self.series.iter().map(|s| value(s, i)).sum()
                } else {
                    self.series.iter().map(|s| value(s, i)).fold(0.0, f64::max)
                }
            })
            .fold(0.0, f64::max);
        if max > 0.0 {
            max
        } else {
            1.0
        }
    }

    pub fn to_svg(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let y_max = self.y_max();
        let y = |v: f64| TOP + plot_h - v / y_max * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        for step in 0..=4 {
            let v = y_max * step as f64 / 4.0;
            let yy = y(v);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + plot_w,
                LEFT - 4.0,
                yy + 4.0,
                format_tick(v)
            );
        }

        let n = self.categories.len().max(1) as f64;
        let slot = plot_w / n;
        let bar_w = slot * 0.8;
        for (i, category) in self.categories.iter().enumerate() {
            let x0 = LEFT + slot * i as f64 + slot * 0.1;
            let mut base = 0.0;
            for (k, series) in self.series.iter().enumerate() {
                let v = value(series, i);
                if v == 0.0 {
                    continue;
                }
                let color = PALETTE[k % PALETTE.len()];
                let (x, w, top, bottom) = if self.stacked {
                    let r = (x0, bar_w, y(base + v), y(base));
                    base += v;
                    r
                } else {
                    let w = bar_w / self.series.len() as f64;
                    (x0 + w * k as f64, w, y(v), y(0.0))
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="{color}"><title>{}: {}</title></rect>"#,
                    bottom - top,
                    escape(&series.name),
                    format_tick(v)
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x0 + bar_w / 2.0,
                TOP + plot_h + 14.0,
                escape(category)
            );
        }

        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0:.2}" stroke="black"/>"#,
            TOP + plot_h,
            LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        let legend_x = LEFT + plot_w + 16.0;
        for (k, series) in self.series.iter().enumerate() {
            let ly = TOP + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{legend_x:.2}" y="{ly:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                PALETTE[k % PALETTE.len()],
                legend_x + 14.0,
                ly + 9.0,
                escape(&series.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
