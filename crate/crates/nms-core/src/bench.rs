//! Wall-clock measurement of a method over a corpus. The timed window is
//! exactly the mask computation — inputs are materialized by the caller
//! beforehand, and the result is handed to [`std::hint::black_box`] so the
//! optimizer cannot skip the work.

use crate::detection::DetectionSet;
use crate::methods::{run_method, Method, NmsConfig};
use serde::Serialize;
use std::hint::black_box;
use std::time::Instant;

/// Per-image latency of one method, aggregated over repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencySummary {
    /// Mean over repeats of (total wall time / image count), microseconds.
    pub mean_us: f64,
    /// Sample standard deviation over repeats (0 when repeats = 1).
    pub std_dev_us: f64,
    /// Fastest repeat.
    pub min_us: f64,
    pub repeats: usize,
    /// Per-image average of every repeat, in order.
    pub per_repeat_us: Vec<f64>,
}

/// Run `method` over every image `repeats` times and report per-image
/// latency. Each repeat times each image's mask computation individually and
/// averages over the images; repeats are sequential on the calling thread so
/// numbers from different methods stay comparable.
pub fn latency_benchmark(
    method: Method,
    sets: &[DetectionSet],
    cfg: &NmsConfig,
    repeats: usize,
) -> LatencySummary {
    assert!(repeats >= 1, "at least one repeat required");
    let images = sets.len().max(1) as f64;
    let mut per_repeat_us = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut total_us = 0.0;
        for dets in sets {
            let start = Instant::now();
            let out = run_method(method, dets, cfg);
            let elapsed = start.elapsed();
            black_box(&out);
            total_us += elapsed.as_secs_f64() * 1e6;
        }
        per_repeat_us.push(total_us / images);
    }
    let mean_us = per_repeat_us.iter().sum::<f64>() / repeats as f64;
    let std_dev_us = if repeats > 1 {
        let var = per_repeat_us.iter().map(|&x| (x - mean_us) * (x - mean_us)).sum::<f64>()
            / (repeats - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    let min_us = per_repeat_us.iter().copied().fold(f64::INFINITY, f64::min);
    LatencySummary { mean_us, std_dev_us, min_us, repeats, per_repeat_us }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn tiny_corpus() -> Vec<DetectionSet> {
        vec![DetectionSet::from_boxes(
            "img",
            vec![
                (BoundingBox::new(0.0, 0.0, 2.0, 2.0), 0.9, 0),
                (BoundingBox::new(0.5, 0.0, 2.5, 2.0), 0.8, 0),
            ],
        )]
    }

    #[test]
    fn single_repeat_smoke() {
        let s = latency_benchmark(Method::Original, &tiny_corpus(), &NmsConfig::default(), 1);
        assert!(s.mean_us.is_finite() && s.mean_us > 0.0);
        assert_eq!(s.std_dev_us, 0.0);
        assert_eq!(s.per_repeat_us.len(), 1);
        assert_eq!(s.min_us, s.mean_us);
    }

    #[test]
    fn repeats_are_all_reported() {
        let s = latency_benchmark(Method::Eqsi, &tiny_corpus(), &NmsConfig::default(), 3);
        assert_eq!(s.repeats, 3);
        assert_eq!(s.per_repeat_us.len(), 3);
        assert!(s.min_us <= s.mean_us);
        assert!(s.std_dev_us >= 0.0);
    }

    #[test]
    fn empty_corpus_reports_zero() {
        let s = latency_benchmark(Method::Qsi, &[], &NmsConfig::default(), 2);
        assert_eq!(s.mean_us, 0.0);
    }
}
