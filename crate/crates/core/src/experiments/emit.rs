use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, LogComparison};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn trials_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("arm,m,s,trial,seed,error,success,iterations,converged\n");
    for t in &report.trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t.arm,
            t.m,
            t.s,
            t.trial,
            t.seed,
            opt(t.error),
            t.success,
            t.iterations,
            t.converged
        );
    }
    out
}

fn aggregates_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("arm,m,s,trials,successes,success_rate,median_error,half_width\n");
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.arm,
            a.m,
            a.s,
            a.trials,
            a.successes,
            a.success_rate,
            opt(a.median_error),
            a.half_width
        );
    }
    out
}

fn trace_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("iteration,objective,primal_residual,dual_residual,constraint_residual\n");
    for r in &report.trace {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e}",
            r.iteration, r.objective, r.primal_residual, r.dual_residual, r.constraint_residual
        );
    }
    out
}

fn svg_frame(title: &str, x_label: &str, y_label: &str, x_max: f64, y_max: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" font-size="10" text-anchor="middle">0</text>"#, y0 + 14.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{}" font-size="10" text-anchor="middle">{x_max}</text>"#,
        y0 + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y_max}</text>"#,
        x0 - 4.0,
        y1 + 4.0
    );
    s
}

fn to_px(x: f64, y: f64, x_max: f64, y_max: f64) -> (f64, f64) {
    let px = MARGIN + (WIDTH - 2.0 * MARGIN) * if x_max > 0.0 { x / x_max } else { 0.0 };
    let py = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * if y_max > 0.0 { y / y_max } else { 0.0 };
    (px, py)
}

fn polyline(points: &[(f64, f64)], color: &str, label: &str) -> String {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline data-series=\"{label}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    )
}

fn legend(entries: &[(String, &str)]) -> String {
    let mut s = String::new();
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-size="11">{label}</text>"#, x + 14.0);
    }
    s
}

/// Success rate against `m`, one polyline per `(arm, s)` series.
pub fn svg_success_curves(report: &ExperimentReport) -> String {
    let mut series: BTreeMap<(String, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for a in &report.aggregates {
        series.entry((a.arm.clone(), a.s)).or_default().push((a.m, a.success_rate));
    }
    let x_max = report.aggregates.iter().map(|a| a.m).max().unwrap_or(1) as f64;
    let mut s = svg_frame(
        &format!("success rate ({})", report.config.study.name()),
        "measurements m",
        "success rate",
        x_max,
        1.0,
    );
    let mut entries = Vec::new();
    for (i, ((arm, sp), pts)) in series.into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let px: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(m, r)| to_px(m as f64, r, x_max, 1.0))
            .collect();
        let label = format!("{arm} s={sp}");
        s.push_str(&polyline(&px, color, &label));
        entries.push((label, color));
    }
    s.push_str(&legend(&entries));
    s.push_str("</svg>\n");
    s
}

/// Frequency against row index for the log scheme and the virtual frame.
pub fn svg_log_comparison(lc: &LogComparison) -> String {
    let len = lc.log_scheme.len().max(lc.virtual_frame.len());
    let y_max = lc
        .log_scheme
        .iter()
        .chain(&lc.virtual_frame)
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let mut s = svg_frame(
        &format!("log scheme vs virtual frame (N={}, C1={:.3})", lc.n, lc.c1),
        "row index l",
        "frequency",
        len as f64,
        y_max,
    );
    let mut entries = Vec::new();
    for (i, (label, seq)) in [("log_scheme", &lc.log_scheme), ("virtual_frame", &lc.virtual_frame)]
        .into_iter()
        .enumerate()
    {
        let color = PALETTE[i];
        let px: Vec<(f64, f64)> = seq
            .iter()
            .enumerate()
            .map(|(l, &k)| to_px((l + 1) as f64, k as f64, len as f64, y_max))
            .collect();
        s.push_str(&polyline(&px, color, label));
        entries.push((label.to_string(), color));
    }
    s.push_str(&legend(&entries));
    s.push_str("</svg>\n");
    s
}

/// Writes the requested formats into `dir` (created if missing) and returns
/// the written paths: `report.json`; `trials.csv`, `aggregates.csv` and
/// `trace.csv` (when a trace exists); `success.svg` and `log_vs_virtual.svg`
/// (when the comparison exists).
pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    for f in formats {
        match f {
            OutputFormat::Json => put("report.json", report.to_json()?)?,
            OutputFormat::Csv => {
                put("trials.csv", trials_csv(report))?;
                put("aggregates.csv", aggregates_csv(report))?;
                if !report.trace.is_empty() {
                    put("trace.csv", trace_csv(report))?;
                }
            }
            OutputFormat::Svg => {
                put("success.svg", svg_success_curves(report))?;
                if let Some(lc) = &report.log_comparison {
                    put("log_vs_virtual.svg", svg_log_comparison(lc))?;
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExperimentConfig, TrialRecord};

    fn rec(arm: &str, m: usize, ok: bool) -> TrialRecord {
        TrialRecord {
            arm: arm.into(),
            m,
            s: 3,
            trial: 0,
            seed: 1,
            error: Some(if ok { 1e-9 } else { 0.5 }),
            success: ok,
            iterations: 5,
            converged: true,
        }
    }

    #[test]
    fn empty_report_files_are_valid() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport::new(ExperimentConfig::default());
        let files = emit_report(&r, dir.path(), &[OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg]).unwrap();
        assert_eq!(files.len(), 4);
        let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let back = ExperimentReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn one_polyline_per_scheme() {
        let mut r = ExperimentReport::new(ExperimentConfig::default());
        r.set_trials(vec![
            rec("uniform", 8, false),
            rec("uniform", 16, true),
            rec("variable_density", 8, true),
            rec("variable_density", 16, true),
        ]);
        let svg = svg_success_curves(&r);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = ExperimentReport::new(ExperimentConfig::default());
        let mut t = rec("uniform", 8, false);
        t.error = Some(0.1 + 0.2);
        r.set_trials(vec![t]);
        r.extras.insert("x".into(), std::f64::consts::PI / 3.0);
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.trials[0].error.unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }
}
