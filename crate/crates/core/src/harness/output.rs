use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::compare::Comparison;
use super::localization::LocalizationStats;
use super::run::RunReport;
use super::HarnessError;
use crate::xapp::{DecisionRecord, FEATURE_ORDER};

pub const RUN_HEADER: &str = "tick,t_s,gnb_x,ue_x,ue_y,L_status,pl_db,snr_db,thr_bps";

fn io(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Per-frame series with header [`RUN_HEADER`].
pub fn write_run_csv<W: Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    if report.ticks.is_empty() {
        let mut out = out;
        return writeln!(out, "{RUN_HEADER}").map_err(io);
    }
    write_rows(&report.ticks, out)
}

pub fn write_compare_csv<W: Write>(c: &Comparison, out: W) -> Result<(), HarnessError> {
    write_rows(&c.rows, out)
}

pub fn decision_header() -> Vec<String> {
    let mut h = vec!["tick".to_string(), "t_s".into()];
    h.extend(FEATURE_ORDER.iter().map(|s| s.to_string()));
    h.extend(["q_maintain", "q_increase", "q_decrease", "action", "v_new", "x_target", "ctrl_x_cm"].map(String::from));
    h
}

/// One row per control epoch: the 11 features, Q-values, action and target.
pub fn write_decisions_csv<W: Write>(decisions: &[DecisionRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(decision_header()).map_err(io)?;
    for d in decisions {
        let mut row = vec![d.tick.to_string(), d.t_s.to_string()];
        row.extend(d.state.to_array().iter().map(f64::to_string));
        row.extend(d.decision.q.iter().map(f64::to_string));
        row.push(d.decision.action.index().to_string());
        row.push(d.decision.v_new.to_string());
        row.push(d.decision.x_target.to_string());
        row.push(d.decision.control.x.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_localization_csv<W: Write>(s: &LocalizationStats, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "gt", "mean", "max", "min", "mean_deviation", "frames", "estimated_frames"])
        .map_err(io)?;
    for (name, a) in [("x", &s.x), ("y", &s.y)] {
        w.write_record([
            name.to_string(),
            a.gt.to_string(),
            a.mean.to_string(),
            a.max.to_string(),
            a.min.to_string(),
            a.mean_deviation.to_string(),
            s.frames.to_string(),
            s.estimated_frames.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One named polyline.
pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Vertical dashed line at `t`.
pub struct Marker<'a> {
    pub t: f64,
    pub color: &'a str,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart as a standalone SVG document.
pub fn line_plot(title: &str, y_label: &str, series: &[Series], markers: &[Marker]) -> String {
    let (w, h) = (800.0, 320.0);
    let (l, r, t, b) = (70.0, 20.0, 30.0, 40.0);
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = (y1 - y0) * 0.05;
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<title>{}</title>"#, esc(title));
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(title));
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            l - 4.0,
            sy(v) + 3.0,
            format_tick(v)
        );
        let vx = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            sx(vx),
            h - b + 14.0,
            format_tick(vx)
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">time (s)</text>"#, w / 2.0, h - 6.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 14 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(y_label)
    );
    for m in markers {
        let x = sx(m.t);
        let _ = writeln!(
            svg,
            r#"<line class="transition" x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{}" stroke="{}" stroke-dasharray="4 3"/>"#,
            h - b,
            m.color
        );
    }
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="series-{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            esc(s.name),
            s.color,
            pts.join(" ")
        );
        let ly = t + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{}">{}</text>"#,
            w - r - 110.0,
            s.color,
            esc(s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    let a = v.abs();
    if a >= 1e6 {
        format!("{:.1}M", v / 1e6)
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

/// Path loss, SNR and throughput charts for one or more runs.
pub fn metric_plots(reports: &[&RunReport]) -> Vec<(&'static str, String)> {
    type Pick = fn(&super::run::TickRecord) -> f64;
    let metrics: [(&str, &str, &str, Pick); 3] = [
        ("path_loss.svg", "Path loss", "dB", |t| t.pl_db),
        ("snr.svg", "SNR", "dB", |t| t.snr_db),
        ("throughput.svg", "Throughput", "bit/s", |t| t.thr_bps),
    ];
    let markers: Vec<Marker> = reports
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.transitions_s.iter().map(move |&t| Marker { t, color: COLORS[i % 2] }))
        .collect();
    metrics
        .iter()
        .map(|(file, title, unit, pick)| {
            let series: Vec<Series> = reports
                .iter()
                .enumerate()
                .map(|(i, r)| Series {
                    name: r.mode.as_str(),
                    color: COLORS[i % 2],
                    points: r.ticks.iter().map(|t| (t.t_s, pick(t))).collect(),
                })
                .collect();
            (*file, line_plot(title, unit, &series, &markers))
        })
        .collect()
}

#[derive(Serialize)]
struct ReportFile<'a> {
    runs: Vec<&'a RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    localization: Option<&'a LocalizationStats>,
}

/// Writes CSVs, SVG charts and `report.json` into `dir`; returns the paths
/// written.
pub fn emit_outputs(
    dir: &Path,
    reports: &[&RunReport],
    comparison: Option<&Comparison>,
    localization: Option<&LocalizationStats>,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    let file = |name: &str| -> Result<(std::fs::File, PathBuf), HarnessError> {
        let p = dir.join(name);
        let f = std::fs::File::create(&p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
        Ok((f, p))
    };
    for r in reports {
        let (f, p) = file(&format!("run_{}.csv", r.mode.as_str()))?;
        write_run_csv(r, f)?;
        written.push(p);
        if !r.decisions.is_empty() {
            let (f, p) = file(&format!("decisions_{}.csv", r.mode.as_str()))?;
            write_decisions_csv(&r.decisions, f)?;
            written.push(p);
        }
    }
    if let Some(c) = comparison {
        let (f, p) = file("compare.csv")?;
        write_compare_csv(c, f)?;
        written.push(p);
    }
    if let Some(s) = localization {
        let (f, p) = file("localization.csv")?;
        write_localization_csv(s, f)?;
        written.push(p);
    }
    if !reports.is_empty() {
        for (name, svg) in metric_plots(reports) {
            let (mut f, p) = file(name)?;
            f.write_all(svg.as_bytes()).map_err(io)?;
            written.push(p);
        }
    }
    let body = ReportFile { runs: reports.to_vec(), comparison, localization };
    let (mut f, p) = file("report.json")?;
    let json = serde_json::to_string_pretty(&body).map_err(io)?;
    f.write_all(json.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(io)?;
    written.push(p);
    Ok(written)
}
