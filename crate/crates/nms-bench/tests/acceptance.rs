//! Acceptance gate for the harness protocol: the report a benchmark run
//! emits is a stable, machine-readable contract.
//!
//! The golden copy lives in `tests/golden/run_report.json` in normalized
//! form (timing, timestamp, and paths blanked — everything else is a
//! deterministic function of the pinned corpus and flags). Regenerate it
//! deliberately with `GOLDEN_BLESS=1 cargo test -p nms-bench --test
//! acceptance` after an intentional schema or corpus change.

mod common;

use common::{normalize_report, run_ok};
use serde_json::Value;
use std::fs;
use std::path::Path;
use tempfile::tempdir;

#[test]
fn c11_run_report_protocol_is_byte_stable() {
    let dir = tempdir().unwrap();
    run_ok(dir.path(), "synth -o corpus.jsonl --images 20 --seed 42");
    run_ok(dir.path(), "run -i corpus.jsonl -o report.json --repeats 5");
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();

    // --repeats 5 must surface as five-repeat means and std-devs.
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["config"]["repeats"], 5);
    let methods = report["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 6);
    for m in methods {
        let name = m["method"].as_str().unwrap();
        let mean = m["mean_latency_us"].as_f64().unwrap();
        let std = m["latency_std_dev_us"].as_f64().unwrap();
        assert!(mean > 0.0, "{name}: mean latency must be measured, got {mean}");
        assert!(std >= 0.0, "{name}: std-dev must be reported, got {std}");
    }

    let normalized = normalize_report(&text);
    let golden_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join("run_report.json");
    if std::env::var_os("GOLDEN_BLESS").is_some() {
        fs::create_dir_all(golden_path.parent().unwrap()).unwrap();
        fs::write(&golden_path, &normalized).unwrap();
        println!("c11 BLESSED: wrote {}", golden_path.display());
        return;
    }
    let golden = fs::read_to_string(&golden_path).unwrap_or_else(|e| {
        panic!(
            "golden file {} unreadable ({e}); create it deliberately with GOLDEN_BLESS=1",
            golden_path.display()
        )
    });
    assert_eq!(normalized, golden, "report drifted from the golden copy outside the timing fields");

    // Byte-stability is a property of the protocol, not of one stored file:
    // an independent rerun must normalize to the same bytes.
    run_ok(dir.path(), "run -i corpus.jsonl -o again.json --repeats 5");
    let again = normalize_report(&fs::read_to_string(dir.path().join("again.json")).unwrap());
    assert_eq!(again, golden, "an identical rerun produced different non-timing bytes");

    println!(
        "c11 PASS: --repeats 5 emits mean and std-dev for all 6 methods; \
         normalized report matches the golden copy and a rerun reproduces it"
    );
}
