//! Minimal self-contained SVG line plot of sector temperatures over time.

use crate::engine::StepReport;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 46.0;

struct Trace {
    label: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

/// Renders the bottom, middle, and top sector temperatures of the reported
/// period as an SVG document.
pub(crate) fn temperature_svg(reports: &[StepReport], sector_count: usize) -> String {
    let sectors = [
        (0usize, "bottom sector", "#1f77b4"),
        (sector_count / 2, "middle sector", "#2ca02c"),
        (sector_count - 1, "top sector", "#d62728"),
    ];
    let traces: Vec<Trace> = sectors
        .iter()
        .map(|&(idx, label, color)| Trace {
            label: format!("{label} ({idx})"),
            color,
            points: reports
                .iter()
                .map(|r| (r.timestamp_s / 3600.0, r.temps_end[idx]))
                .collect(),
        })
        .collect();

    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for trace in &traces {
        for &(t, y) in &trace.points {
            t_min = t_min.min(t);
            t_max = t_max.max(t);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !t_min.is_finite() {
        // No data: an empty but valid document.
        (t_min, t_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
    }
    if t_max - t_min < 1e-9 {
        t_max = t_min + 1.0;
    }
    // Pad the temperature range and round to whole degrees for calm ticks.
    y_min = (y_min - 1.0).floor();
    y_max = (y_max + 1.0).ceil();

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: f64| MARGIN_LEFT + (t - t_min) / (t_max - t_min) * plot_w;
    let y_of = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">Sector temperatures</text>\n",
        MARGIN_LEFT + plot_w / 2.0
    ));

    // Horizontal grid and temperature ticks.
    let y_ticks = 6;
    for k in 0..=y_ticks {
        let y_val = y_min + (y_max - y_min) * k as f64 / y_ticks as f64;
        let y = y_of(y_val);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{y_val:.1}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0
        ));
    }
    // Time ticks every 6 hours (or wider when the span is long).
    let span_h = t_max - t_min;
    let tick_h = if span_h <= 48.0 {
        6.0
    } else {
        (span_h / 8.0 / 6.0).ceil() * 6.0
    };
    let mut tick = (t_min / tick_h).ceil() * tick_h;
    while tick <= t_max + 1e-9 {
        let x = x_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{tick:.0}</text>\n",
            MARGIN_TOP + plot_h + 18.0
        ));
        tick += tick_h;
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">time, h</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">temperature, °C</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // Axes frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" \
         height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#333333\"/>\n"
    ));

    // Traces and legend.
    for (i, trace) in traces.iter().enumerate() {
        if !trace.points.is_empty() {
            let points: Vec<String> = trace
                .points
                .iter()
                .map(|&(t, y)| format!("{:.2},{:.2}", x_of(t), y_of(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
                trace.color,
                points.join(" ")
            ));
        }
        let legend_x = MARGIN_LEFT + 12.0 + i as f64 * 170.0;
        let legend_y = MARGIN_TOP + 14.0;
        svg.push_str(&format!(
            "<line x1=\"{legend_x:.2}\" y1=\"{legend_y:.2}\" x2=\"{:.2}\" y2=\"{legend_y:.2}\" \
             stroke=\"{}\" stroke-width=\"3\"/>\n",
            legend_x + 22.0,
            trace.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            legend_x + 28.0,
            legend_y + 4.0,
            trace.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
