//! Trajectory CSV and convergence plots.

use accel_admm::engine::RunReport;
use anyhow::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;

#[derive(Serialize)]
struct TrajectoryRow {
    k: usize,
    t_k: f64,
    feasibility: f64,
    objective_gap: Option<f64>,
    lagrangian_gap: Option<f64>,
    energy_total: Option<f64>,
    inner_iters: usize,
}

pub fn write_trajectory<W: Write>(report: &RunReport<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.records {
        w.serialize(TrajectoryRow {
            k: r.k,
            t_k: r.t_k,
            feasibility: r.feasibility,
            objective_gap: r.objective_gap,
            lagrangian_gap: r.lagrangian_gap,
            energy_total: r.energy.map(|e| e.total()),
            inner_iters: r.inner_iters,
        })?;
    }
    w.flush()?;
    Ok(())
}

struct Series {
    label: &'static str,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Log-log plot of feasibility and the absolute gaps, with the `C/t_k²` bounds dashed.
pub fn convergence_svg(title: &str, report: &RunReport<f64>) -> String {
    let pos = |v: f64| (v > 0.0 && v.is_finite()).then_some(v);
    let collect =
        |f: &dyn Fn(&accel_admm::engine::IterationRecord<f64>) -> Option<f64>| -> Vec<(f64, f64)> {
            report
                .records
                .iter()
                .filter_map(|r| f(r).and_then(pos).map(|v| (r.k as f64, v)))
                .collect()
        };
    let mut series = vec![
        Series {
            label: "feasibility",
            color: "#1f77b4",
            dashed: false,
            points: collect(&|r| Some(r.feasibility)),
        },
        Series {
            label: "|objective gap|",
            color: "#2ca02c",
            dashed: false,
            points: collect(&|r| r.objective_gap.map(f64::abs)),
        },
        Series {
            label: "lagrangian gap",
            color: "#d62728",
            dashed: false,
            points: collect(&|r| r.lagrangian_gap),
        },
    ];
    if let Some(c) = report
        .certificates
        .as_ref()
        .filter(|_| report.status.binding)
    {
        series.push(Series {
            label: "feasibility bound",
            color: "#1f77b4",
            dashed: true,
            points: collect(&|r| Some(c.feasibility / (r.t_k * r.t_k))),
        });
        if let Some(l) = c.lagrangian {
            series.push(Series {
                label: "lagrangian bound",
                color: "#d62728",
                dashed: true,
                points: collect(&|r| Some(l / (r.t_k * r.t_k))),
            });
        }
    }
    series.retain(|s| !s.points.is_empty());
    render(title, &series)
}

fn render(title: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let ystep = ((y1 - y0) / 10.0).ceil().max(1.0);
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"##,
            TOP + ph,
            TOP + ph + 16.0
        );
    }
    let mut d = y0;
    while d <= y1 {
        let y = sy(10f64.powf(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            d as i32
        );
        d += ystep;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">k</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if ser.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            ser.color,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            ser.color,
            lx + 30.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
