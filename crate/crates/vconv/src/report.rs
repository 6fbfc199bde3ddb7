//! Report emission: schema-versioned JSON, per-row CSV, and minimal SVG
//! profile plots. All formatting is deterministic: identical reports give
//! byte-identical output.

use std::fmt::Write as _;

use serde::Serialize;

use crate::convergence::ScaleStatus;
use crate::error::Result;
use crate::runner::{Op, OpReport};
use crate::verdict::Verdict;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    op: &'static str,
    verdict: Verdict,
    report: &'a OpReport,
}

pub fn to_json(op: Op, verdict: Verdict, report: &OpReport) -> Result<String> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        op: op.name(),
        verdict,
        report,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

fn fmt_point(p: &[f64]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per (probe, k) or (probe, n), depending on the report type.
pub fn to_csv(report: &OpReport) -> String {
    let mut out = String::new();
    match report {
        OpReport::VDist(r) => {
            out.push_str("probe,k,s_k\n");
            for profile in &r.profiles {
                for (k, est) in profile.estimates.iter().enumerate() {
                    let _ = writeln!(out, "{},{k},{}", fmt_point(&profile.probe), est.value);
                }
            }
        }
        OpReport::Classify(r) => {
            out.push_str("mode,n,value\n");
            for (mode, res) in [
                ("uniform", &r.uniform),
                ("locally-uniform", &r.locally_uniform),
                ("v", &r.v),
                ("pointwise", &r.pointwise),
            ] {
                for (n, v) in res.profile.iter().enumerate() {
                    let _ = writeln!(out, "{mode},{n},{v}");
                }
            }
        }
        OpReport::Cauchy(rows) => {
            out.push_str("probe,n,scale,status,deviation\n");
            for w in rows {
                for check in &w.checked {
                    for sc in &check.scales {
                        let status = match sc.status {
                            ScaleStatus::Passed => "passed",
                            ScaleStatus::Refuted => "refuted",
                            ScaleStatus::Unresolved => "unresolved",
                        };
                        let dev = sc.worst.as_ref().map_or(0.0, |p| p.tail_max);
                        let _ = writeln!(
                            out,
                            "{},{},{},{status},{dev}",
                            fmt_point(&w.probe),
                            check.n,
                            sc.scale
                        );
                    }
                }
            }
        }
        OpReport::Series(r) => {
            out.push_str("probe,tail_offset,norm_partial\n");
            for row in &r.rows {
                for (i, v) in row.norm_tail.iter().enumerate() {
                    let _ = writeln!(out, "{},{i},{v}", fmt_point(&row.probe));
                }
            }
        }
        OpReport::Abel(r) => {
            out.push_str("probe,value,bound_estimate,eps_variation,oscillation_defect\n");
            for row in &r.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_point(&row.probe),
                    fmt_point(&row.value),
                    row.bound_estimate,
                    row.eps_variation,
                    row.oscillation_defect
                );
            }
        }
        OpReport::Interchange(r) => {
            out.push_str("p,value,stabilized\n");
            for inner in &r.inner {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    inner.p,
                    fmt_point(&inner.value),
                    inner.stabilized
                );
            }
        }
        OpReport::Patch(r) => {
            out.push_str("piece,center,radius,approx_defect,patched_defect\n");
            for row in &r.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.index,
                    fmt_point(&row.center),
                    row.radius,
                    row.approx_defect,
                    row.patched_defect
                );
            }
        }
        OpReport::Corpus(rows) => {
            out.push_str("name,parameters\n");
            for row in rows {
                let _ = writeln!(out, "{},{}", row.name, row.parameters);
            }
        }
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const PAD: f64 = 40.0;

fn polyline(values: &[f64], lo: f64, hi: f64, color: &str) -> String {
    if values.is_empty() {
        return String::new();
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let step = if values.len() > 1 {
        (SVG_W - 2.0 * PAD) / (values.len() - 1) as f64
    } else {
        0.0
    };
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = PAD + step * i as f64;
            let y = SVG_H - PAD - (v - lo) / span * (SVG_H - 2.0 * PAD);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!(
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    )
}

fn svg_frame(title: &str, series: &[(&str, &[f64])]) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, vals) in series {
        for v in *vals {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{PAD}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title}</text>\n\
         <line x1=\"{PAD}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#888\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y0}\" stroke=\"#888\"/>\n\
         <text x=\"4\" y=\"{PAD}\" font-family=\"monospace\" font-size=\"10\">{hi:.3e}</text>\n\
         <text x=\"4\" y=\"{y0}\" font-family=\"monospace\" font-size=\"10\">{lo:.3e}</text>\n",
        y0 = SVG_H - PAD,
        x1 = SVG_W - PAD,
    );
    for (i, (label, vals)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        out.push_str(&polyline(vals, lo, hi, color));
        let _ = writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" \
             fill=\"{color}\">{label}</text>",
            SVG_W - PAD + 4.0 - 120.0,
            PAD + 14.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of the report's main profile: `s_k` against `k` for distance
/// reports, per-mode values against `n` for classification runs, tail
/// partial sums for series. Reports without a profile get an empty frame.
pub fn to_svg(report: &OpReport) -> String {
    match report {
        OpReport::VDist(r) => {
            let series: Vec<(String, Vec<f64>)> = r
                .profiles
                .iter()
                .map(|p| {
                    (
                        format!("probe {}", fmt_point(&p.probe)),
                        p.estimates.iter().map(|e| e.value).collect(),
                    )
                })
                .collect();
            let borrowed: Vec<(&str, &[f64])> = series
                .iter()
                .map(|(l, v)| (l.as_str(), v.as_slice()))
                .collect();
            svg_frame("s_k per scale k", &borrowed)
        }
        OpReport::Classify(r) => svg_frame(
            "per-mode deviation per n",
            &[
                ("uniform", r.uniform.profile.as_slice()),
                ("locally-uniform", r.locally_uniform.profile.as_slice()),
                ("v", r.v.profile.as_slice()),
                ("pointwise", r.pointwise.profile.as_slice()),
            ],
        ),
        OpReport::Series(r) => {
            let series: Vec<(String, Vec<f64>)> = r
                .rows
                .iter()
                .map(|row| {
                    (
                        format!("probe {}", fmt_point(&row.probe)),
                        row.norm_tail.clone(),
                    )
                })
                .collect();
            let borrowed: Vec<(&str, &[f64])> = series
                .iter()
                .map(|(l, v)| (l.as_str(), v.as_slice()))
                .collect();
            svg_frame("norm partial sums (tail window)", &borrowed)
        }
        _ => svg_frame("no profile for this report", &[]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::runner;

    fn vdist_report() -> (Verdict, OpReport) {
        let cfg = RunConfig {
            family: Some("damped-oscillation".into()),
            index: Some(50),
            probes: Some(vec![0.3]),
            ..RunConfig::default()
        };
        runner::run(Op::VDist, &cfg).unwrap()
    }

    #[test]
    fn json_envelope_parses_and_is_stable() {
        let (verdict, report) = vdist_report();
        let a = to_json(Op::VDist, verdict, &report).unwrap();
        let b = to_json(Op::VDist, verdict, &report).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["op"], "vdist");
        assert!(v["report"]["profiles"].is_array());
    }

    #[test]
    fn vdist_csv_has_contract_header() {
        let (_, report) = vdist_report();
        let csv = to_csv(&report);
        assert!(csv.starts_with("probe,k,s_k\n"));
        assert!(csv.lines().count() > 1);
    }

    #[test]
    fn svg_polyline_is_non_increasing_for_vdist() {
        let (_, report) = vdist_report();
        let svg = to_svg(&report);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        // y coordinates grow downward, so a non-increasing profile gives a
        // non-decreasing y series.
        let pts: Vec<f64> = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        for w in pts.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn corpus_csv_lists_families() {
        let (_, report) = runner::run(Op::Corpus, &RunConfig::default()).unwrap();
        let csv = to_csv(&report);
        assert!(csv.starts_with("name,parameters\n"));
        assert!(csv.contains("dirichlet-kernel"));
    }
}
