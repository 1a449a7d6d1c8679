use std::fmt::Write as _;

use abrshare_core::ladder::LadderReport;
use serde::Serialize;

use crate::error::{Error, Result};

/// One CSV row per rung.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RungRow {
    pub scheme: String,
    pub rung: String,
    pub width: usize,
    pub height: usize,
    pub source: String,
    pub bitrate_kbps: f64,
    pub psnr_y: f64,
    pub mean_qp: f64,
    pub mode_evaluations: u64,
    pub wall_ms: f64,
}

pub fn rung_rows(report: &LadderReport) -> Vec<RungRow> {
    report
        .rungs
        .iter()
        .map(|r| RungRow {
            scheme: report.scheme.name().to_string(),
            rung: r.rung.label(),
            width: r.rung.width,
            height: r.rung.height,
            source: r.source.map_or_else(String::new, |e| report.rungs[e.from].rung.label()),
            bitrate_kbps: r.point.bitrate_kbps,
            psnr_y: r.point.psnr_db,
            mean_qp: r.mean_qp,
            mode_evaluations: r.stats.mode_evaluations,
            wall_ms: r.stats.wall_ns as f64 / 1e6,
        })
        .collect()
}

pub fn to_csv(report: &LadderReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rung_rows(report) {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.2}{unit}"))
}

/// Human-readable rung table followed by per-tier deltas.
pub fn to_table(report: &LadderReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scheme: {}", report.scheme);
    let _ = writeln!(
        s,
        "{:<20} {:<20} {:>10} {:>8} {:>6} {:>10}",
        "rung", "source", "kbps", "psnr", "qp", "work"
    );
    for row in rung_rows(report) {
        let _ = writeln!(
            s,
            "{:<20} {:<20} {:>10.1} {:>8.2} {:>6.1} {:>10}",
            row.rung,
            if row.source.is_empty() { "-" } else { &row.source },
            row.bitrate_kbps,
            row.psnr_y,
            row.mean_qp,
            row.mode_evaluations
        );
    }
    let _ = writeln!(s);
    for t in &report.tiers {
        let _ = writeln!(
            s,
            "tier {}x{}: work {} vs {} ({:+.1}% saved), BD-rate {}, BD-PSNR {}",
            t.width,
            t.height,
            t.work,
            t.baseline_work,
            t.work_reduction_pct,
            opt(t.bd_rate, "%"),
            opt(t.bd_psnr, " dB")
        );
    }
    let _ = writeln!(
        s,
        "total work {} vs {} ({:+.1}% saved), makespan {} vs {}",
        report.total_work, report.baseline_work, report.work_reduction_pct, report.makespan, report.baseline_makespan
    );
    s
}
