//! Report schema for `run`: a JSON document carrying the full picture and a
//! flat one-row-per-method CSV for spreadsheets and plotting.

use nms_core::eval::{AgreementReport, ApResult};
use nms_core::io::csv_field;
use serde::Serialize;
use std::io::Write;

/// Echo of every knob the run was configured with, so a report file is
/// self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub output: String,
    pub methods: Vec<String>,
    pub iou_threshold: f64,
    pub per_class: bool,
    pub order: String,
    pub repeats: usize,
    pub baseline: String,
}

/// What the corpus contained.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorpusSummary {
    pub images: usize,
    pub detections: usize,
    /// Images carrying ground-truth annotations.
    pub annotated: usize,
}

/// One benchmarked method: timing, work counters, output size, and output
/// quality relative to the baseline (plus ground truth when available).
#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: String,
    /// Mean per-image latency over the repeats, microseconds.
    pub mean_latency_us: f64,
    /// Sample standard deviation of the per-repeat means.
    pub latency_std_dev_us: f64,
    pub total_iou_calls: u64,
    pub total_comparisons: u64,
    pub total_kept: u64,
    pub agreement_vs_baseline: AgreementReport,
    /// COCO-style average precision of the kept boxes; absent when no image
    /// in the corpus has ground truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap: Option<ApResult>,
}

/// The full `run` report.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    /// RFC 3339 UTC time the report was written.
    pub timestamp: String,
    pub config: ConfigEcho,
    pub corpus: CorpusSummary,
    pub methods: Vec<MethodReport>,
}

impl BenchReport {
    /// Flat CSV, one row per method in request order; `map_50_95` is left
    /// empty when no ground truth was available.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "method,mean_latency_us,latency_std_dev_us,total_iou_calls,total_comparisons,\
             total_kept,jaccard_vs_baseline,extra_kept,missing_kept,map_50_95"
        )?;
        for m in &self.methods {
            let map = m.ap.as_ref().map_or(String::new(), |ap| ap.map_50_95.to_string());
            writeln!(
                w,
                "{},{:.3},{:.3},{},{},{},{},{},{},{}",
                csv_field(&m.method),
                m.mean_latency_us,
                m.latency_std_dev_us,
                m.total_iou_calls,
                m.total_comparisons,
                m.total_kept,
                m.agreement_vs_baseline.jaccard,
                m.agreement_vs_baseline.extra_kept,
                m.agreement_vs_baseline.missing_kept,
                map
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BenchReport {
        BenchReport {
            timestamp: "2026-01-01T00:00:00Z".into(),
            config: ConfigEcho {
                input: "in.jsonl".into(),
                output: "out.json".into(),
                methods: vec!["original".into(), "eqsi".into()],
                iou_threshold: 0.7,
                per_class: false,
                order: "manhattan".into(),
                repeats: 5,
                baseline: "original".into(),
            },
            corpus: CorpusSummary { images: 2, detections: 10, annotated: 0 },
            methods: vec![
                MethodReport {
                    method: "original".into(),
                    mean_latency_us: 12.5,
                    latency_std_dev_us: 0.25,
                    total_iou_calls: 40,
                    total_comparisons: 33,
                    total_kept: 6,
                    agreement_vs_baseline: AgreementReport {
                        jaccard: 1.0,
                        extra_kept: 0,
                        missing_kept: 0,
                    },
                    ap: None,
                },
                MethodReport {
                    method: "eqsi".into(),
                    mean_latency_us: 3.0,
                    latency_std_dev_us: 0.5,
                    total_iou_calls: 18,
                    total_comparisons: 25,
                    total_kept: 7,
                    agreement_vs_baseline: AgreementReport {
                        jaccard: 0.75,
                        extra_kept: 1,
                        missing_kept: 0,
                    },
                    ap: None,
                },
            ],
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_method() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("method,mean_latency_us"));
        assert_eq!(lines[1], "original,12.500,0.250,40,33,6,1,0,0,");
        assert_eq!(lines[2], "eqsi,3.000,0.500,18,25,7,0.75,1,0,");
    }

    #[test]
    fn map_column_is_filled_when_ap_is_present() {
        let mut report = sample();
        report.methods[0].ap =
            Some(ApResult { ap_per_threshold: vec![(0.5, 1.0)], map_50_95: 0.45 });
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",0.45"));
    }

    #[test]
    fn json_report_omits_absent_ap() {
        let json = serde_json::to_string(&sample()).unwrap();
        assert!(!json.contains("\"ap\""));
        assert!(json.contains("\"agreement_vs_baseline\""));
    }
}
