//! Cumulative P&L chart as a standalone SVG: one polyline per model,
//! textual and diffable, no rendering dependencies.

use crate::alpha::SimReport;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn fmt_dollars(v: f64) -> String {
    if v.abs() >= 1e6 {
        format!("{:.1}M", v / 1e6)
    } else if v.abs() >= 1e3 {
        format!("{:.0}k", v / 1e3)
    } else {
        format!("{v:.0}")
    }
}

/// Renders the cumulative P&L of each report as one SVG chart. The x axis
/// spans the union of simulated dates; the gross investment level is
/// annotated under the title.
pub fn cumulative_pnl_svg(reports: &[SimReport]) -> String {
    let mut all_dates: Vec<chrono::NaiveDate> = reports
        .iter()
        .flat_map(|r| r.dates.iter().copied())
        .collect();
    all_dates.sort_unstable();
    all_dates.dedup();

    let mut y_min = 0.0f64;
    let mut y_max = 0.0f64;
    let curves: Vec<(&str, Vec<(usize, f64)>)> = reports
        .iter()
        .map(|r| {
            let cum = r.cumulative_pnl();
            let pts: Vec<(usize, f64)> = r
                .dates
                .iter()
                .zip(cum.iter())
                .map(|(d, v)| {
                    y_min = y_min.min(*v);
                    y_max = y_max.max(*v);
                    let x = all_dates.binary_search(d).expect("date in union");
                    (x, *v)
                })
                .collect();
            (r.model.as_str(), pts)
        })
        .collect();
    if y_max == y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_span = (all_dates.len().saturating_sub(1)).max(1) as f64;
    let to_x = |i: usize| MARGIN_LEFT + plot_w * i as f64 / x_span;
    let to_y = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"16\">Cumulative P&amp;L</text>\n",
        MARGIN_LEFT
    ));
    let investment = reports.first().map(|r| r.investment).unwrap_or(0.0);
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"36\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555\">\
         investment level (gross long + short): ${}</text>\n",
        MARGIN_LEFT,
        fmt_dollars(investment)
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w,
    ));

    // y gridlines and labels
    for tick in 0..=4 {
        let v = y_min + (y_max - y_min) * tick as f64 / 4.0;
        let y = to_y(v);
        svg.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{y:.2}\" x2=\"{r}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n\
             <text x=\"{lt}\" y=\"{yt:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{label}</text>\n",
            l = MARGIN_LEFT,
            r = MARGIN_LEFT + plot_w,
            lt = MARGIN_LEFT - 6.0,
            yt = y + 4.0,
            label = fmt_dollars(v)
        ));
    }

    // x labels: first and last date
    if let (Some(first), Some(last)) = (all_dates.first(), all_dates.last()) {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_LEFT,
            MARGIN_TOP + plot_h + 18.0,
            first.format("%Y-%m-%d")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT + plot_w,
            MARGIN_TOP + plot_h + 18.0,
            last.format("%Y-%m-%d")
        ));
    }

    for (c, (model, pts)) in curves.iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|(i, v)| format!("{:.2},{:.2}", to_x(*i), to_y(*v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        // legend entry
        let ly = MARGIN_TOP + 14.0 * c as f64 + 10.0;
        svg.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{ly:.2}\" x2=\"{x2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n\
             <text x=\"{xt}\" y=\"{yt:.2}\" font-family=\"sans-serif\" font-size=\"11\">{model}</text>\n",
            x1 = MARGIN_LEFT + 10.0,
            x2 = MARGIN_LEFT + 34.0,
            xt = MARGIN_LEFT + 40.0,
            yt = ly + 4.0,
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn report(model: &str, pnl: &[f64]) -> SimReport {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        SimReport {
            model: model.into(),
            dates: (0..pnl.len())
                .map(|i| d0 + chrono::Days::new(i as u64))
                .collect(),
            daily_pnl: pnl.to_vec(),
            holdings: vec![],
            roc: 0.1,
            sharpe: Some(1.0),
            cps: 0.5,
            shares_traded: 1000.0,
            investment: 2e7,
        }
    }

    #[test]
    fn one_polyline_per_model() {
        let reports = vec![
            report("int only", &[10.0, -5.0, 20.0]),
            report("int+prc", &[5.0, 15.0, 2.0]),
        ];
        let svg = cumulative_pnl_svg(&reports);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("int only"));
        assert!(svg.contains("int+prc"));
        assert!(svg.contains("$20.0M"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn deterministic_output() {
        let reports = vec![report("int only", &[10.0, -5.0, 20.0])];
        assert_eq!(cumulative_pnl_svg(&reports), cumulative_pnl_svg(&reports));
    }
}
