//! Grouped bar chart of macro-F1 and MAE as a static SVG.

use std::fmt::Write as _;
use std::path::Path;

use super::ReportRow;
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];
const BAR_W: f64 = 18.0;
const GROUP_GAP: f64 = 24.0;
const PANEL_H: f64 = 180.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn first_seen(values: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// One group per test set, one bar per system, F1 on top and MAE below.
pub fn render_svg(rows: &[ReportRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InsufficientData("no report rows to plot".into()));
    }
    let tests = first_seen(rows.iter().map(|r| r.test_set.clone()));
    let systems = first_seen(rows.iter().map(ReportRow::system));
    let group_w = systems.len() as f64 * BAR_W + GROUP_GAP;
    let plot_w = tests.len() as f64 * group_w;
    let legend_h = 16.0 * systems.len() as f64;
    let width = LEFT + plot_w + 20.0;
    let height = TOP + 2.0 * (PANEL_H + 50.0) + legend_h + 20.0;
    let max_mae = rows.iter().map(|r| r.mae).fold(0.0, f64::max).max(1.0);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let panels = [
        ("macro-F1", 1.0, TOP),
        ("MAE (frames)", max_mae, TOP + PANEL_H + 50.0),
    ];
    for (p, (title, scale, y0)) in panels.into_iter().enumerate() {
        let base = y0 + PANEL_H;
        let _ = writeln!(
            w,
            r#"<text x="{LEFT}" y="{:.1}" font-weight="bold">{title}</text>"#,
            y0 - 8.0
        );
        let _ = writeln!(
            w,
            r#"<line x1="{LEFT}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
            LEFT + plot_w
        );
        let _ = writeln!(
            w,
            r#"<line x1="{LEFT}" y1="{y0:.1}" x2="{LEFT}" y2="{base:.1}" stroke="black"/>"#
        );
        for tick in 0..=4 {
            let v = scale * tick as f64 / 4.0;
            let y = base - PANEL_H * tick as f64 / 4.0;
            let _ = writeln!(
                w,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
                LEFT - 4.0,
                y + 4.0
            );
        }
        for (g, test) in tests.iter().enumerate() {
            let gx = LEFT + g as f64 * group_w + GROUP_GAP / 2.0;
            for (s, system) in systems.iter().enumerate() {
                let Some(row) = rows
                    .iter()
                    .find(|r| &r.test_set == test && &r.system() == system)
                else {
                    continue;
                };
                let value = if p == 0 { row.macro_f1 } else { row.mae };
                let h = PANEL_H * (value / scale).clamp(0.0, 1.0);
                let _ = writeln!(
                    w,
                    r#"<rect x="{:.1}" y="{:.1}" width="{BAR_W:.1}" height="{h:.1}" fill="{}"><title>{} on {}: {value:.4}</title></rect>"#,
                    gx + s as f64 * BAR_W,
                    base - h,
                    PALETTE[s % PALETTE.len()],
                    escape(system),
                    escape(test)
                );
            }
            let _ = writeln!(
                w,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                gx + systems.len() as f64 * BAR_W / 2.0,
                base + 16.0,
                escape(test)
            );
        }
    }
    let ly = TOP + 2.0 * (PANEL_H + 50.0);
    for (s, system) in systems.iter().enumerate() {
        let y = ly + 16.0 * s as f64;
        let _ = writeln!(
            w,
            r#"<rect x="{LEFT}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y,
            PALETTE[s % PALETTE.len()],
            LEFT + 16.0,
            y + 9.0,
            escape(system)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(rows: &[ReportRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(rows)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::DelayMethod;
    use crate::matchers::MatcherKind;

    fn rows() -> Vec<ReportRow> {
        let mut out = Vec::new();
        for test in ["b", "c<"] {
            for m in [DelayMethod::HeatMap, DelayMethod::DenseDelay] {
                out.push(
                    ReportRow::score(MatcherKind::Oracle, m, "a", test, &[0, 1, 2], &[0, 1, 5])
                        .unwrap(),
                );
            }
        }
        out
    }

    #[test]
    fn deterministic_and_grouped() {
        let a = render_svg(&rows()).unwrap();
        assert_eq!(a, render_svg(&rows()).unwrap());
        assert!(a.starts_with("<svg"));
        assert!(a.contains(">b</text>"));
        assert!(a.contains(">c&lt;</text>"));
        // 2 test sets × 2 systems × 2 panels, plus the legend swatches.
        assert_eq!(a.matches("<rect x=").count(), 8 + 2);
    }

    #[test]
    fn empty_report_is_an_error() {
        assert!(render_svg(&[]).is_err());
    }
}
