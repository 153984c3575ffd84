//! Shared plumbing for the binary tests: spawning the CLI and normalizing
//! reports for comparisons that must ignore timing.

use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nms-bench"))
}

/// Run the CLI in `dir` and return the raw output. The command line is
/// split on whitespace, so it cannot carry arguments containing spaces —
/// none of these tests need any.
pub fn run_in(dir: &Path, cmd: &str) -> Output {
    bin().current_dir(dir).args(cmd.split_whitespace()).output().expect("binary must spawn")
}

/// Run the CLI in `dir` and insist on exit 0, echoing stderr on failure.
pub fn run_ok(dir: &Path, cmd: &str) -> Output {
    let out = run_in(dir, cmd);
    assert!(
        out.status.success(),
        "`{}` failed with {:?}\nstderr: {}",
        cmd,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// Each test binary compiles its own copy of this module and not all of
// them read captured output, hence the dead-code allowances.
#[allow(dead_code)]
pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[allow(dead_code)]
pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Canonical form of a run report with everything machine- or
/// moment-specific blanked: the timestamp, the echoed paths, and the
/// latency figures. All remaining fields are deterministic functions of the
/// corpus and flags.
pub fn normalize_report(text: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(text).expect("report must be JSON");
    v["timestamp"] = serde_json::Value::from("TIMESTAMP");
    v["config"]["input"] = serde_json::Value::from("INPUT");
    v["config"]["output"] = serde_json::Value::from("OUTPUT");
    for m in v["methods"].as_array_mut().expect("methods array") {
        m["mean_latency_us"] = serde_json::Value::from(0);
        m["latency_std_dev_us"] = serde_json::Value::from(0);
    }
    serde_json::to_string_pretty(&v).expect("re-serialization") + "\n"
}
