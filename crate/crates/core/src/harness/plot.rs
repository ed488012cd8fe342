use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::aggregate::{AggregateResult, SummaryRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    F1,
    Chamfer,
}

impl PlotMetric {
    fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::Chamfer => "chamfer",
        }
    }

    fn axis_label(self) -> &'static str {
        match self {
            Self::F1 => "F1 score",
            Self::Chamfer => "Chamfer distance (m)",
        }
    }

    fn value(self, r: &SummaryRow) -> (f64, f64) {
        match self {
            Self::F1 => (r.f1_mean, r.f1_ci95),
            Self::Chamfer => (r.chamfer_mean, r.chamfer_ci95),
        }
    }
}

/// One plotted series: view index, mean, CI half-width.
struct Series {
    planner: String,
    points: Vec<(f64, f64, f64)>,
}

/// Plot data range covering every mean ± half-width.
fn y_range(series: &[Series]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for &(_, m, h) in &s.points {
            lo = lo.min(m - h);
            hi = hi.max(m + h);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-6);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG line chart of `metric` against view index for one attention target:
/// one polyline and one CI band polygon per planner.
pub fn render_svg(agg: &AggregateResult, attention: &str, metric: PlotMetric) -> Result<String> {
    let planners = agg.planners();
    if planners.is_empty() {
        return Err(Error::EmptyAggregate("no planners to plot".into()));
    }
    let series: Vec<Series> = planners
        .iter()
        .map(|p| {
            let mut rows: Vec<&SummaryRow> =
                agg.summary.iter().filter(|r| &r.planner == p && r.attention == attention).collect();
            rows.sort_by_key(|r| r.view);
            let points = rows
                .into_iter()
                .filter_map(|r| {
                    let (m, h) = metric.value(r);
                    m.is_finite().then_some((r.view as f64, m, if h.is_finite() { h } else { 0.0 }))
                })
                .collect();
            Series { planner: p.clone(), points }
        })
        .filter(|s: &Series| !s.points.is_empty())
        .collect();
    if series.is_empty() {
        return Err(Error::EmptyAggregate(format!("no finite {} values for '{attention}'", metric.name())));
    }
    let max_view = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).fold(1.0, f64::max);
    let (y0, y1) = y_range(&series);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |v: f64| MARGIN_LEFT + if max_view > 1.0 { (v - 1.0) / (max_view - 1.0) } else { 0.5 } * plot_w;
    let sy = |y: f64| MARGIN_Y + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-ymin="{y0}" data-ymax="{y1}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{} — {}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(metric.axis_label()),
        escape(attention)
    );
    // Axes, ticks and labels.
    let (bx, by) = (MARGIN_LEFT, MARGIN_Y + plot_h);
    let _ = writeln!(svg, r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#, bx + plot_w);
    let _ = writeln!(svg, r#"<line x1="{bx}" y1="{MARGIN_Y}" x2="{bx}" y2="{by}" stroke="black"/>"#);
    for v in 1..=max_view as usize {
        let x = sx(v as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{v}</text>"#,
            by + 15.0
        );
    }
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{:.4}</text>"#,
            bx - 5.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12"># Views</text>"#,
        bx + plot_w / 2.0,
        HEIGHT - 8.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = s.points.iter().map(|&(v, m, h)| format!("{:.2},{:.2}", sx(v), sy(m + h)));
        let lower = s.points.iter().rev().map(|&(v, m, h)| format!("{:.2},{:.2}", sx(v), sy(m - h)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="ci-band" data-planner="{}" points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            escape(&s.planner),
            band.join(" ")
        );
        let line: Vec<String> = s.points.iter().map(|&(v, m, _)| format!("{:.2},{:.2}", sx(v), sy(m))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-planner="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&s.planner),
            line.join(" ")
        );
        let ly = MARGIN_Y + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 25.0,
            ly + 4.0,
            escape(&s.planner)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `<metric>_<attention>.svg` for F1 and chamfer and every attention
/// target in the aggregate. Nothing is written when the aggregate is empty.
pub fn emit_plots(agg: &AggregateResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if agg.planners().is_empty() {
        return Err(Error::EmptyAggregate("no planners to plot".into()));
    }
    let mut rendered = Vec::new();
    for attention in agg.attentions() {
        for metric in [PlotMetric::F1, PlotMetric::Chamfer] {
            match render_svg(agg, &attention, metric) {
                Ok(svg) => rendered.push((out_dir.join(format!("{}_{}.svg", metric.name(), attention)), svg)),
                Err(Error::EmptyAggregate(_)) if metric == PlotMetric::Chamfer => {}
                Err(e) => return Err(e),
            }
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for (path, svg) in rendered {
        std::fs::write(&path, svg)?;
        paths.push(path);
    }
    Ok(paths)
}
