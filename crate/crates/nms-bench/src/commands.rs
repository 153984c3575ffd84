//! The four subcommands. Everything runs on one thread: corpora are fully
//! materialized before any timing starts, and the timed window covers
//! exactly the mask computation, so latency numbers from different methods
//! are comparable.

use crate::report::{BenchReport, ConfigEcho, CorpusSummary, MethodReport};
use chrono::{SecondsFormat, Utc};
use clap::Args;
use nms_core::bench::latency_benchmark;
use nms_core::datagen::{generate, SynthParams};
use nms_core::detection::{DetectionSet, KeepMask};
use nms_core::eval::{agreement_pooled, evaluate_ap, GroundTruthBox};
use nms_core::graph::{image_graph_stats, GraphStatsReport, GraphStatsRow};
use nms_core::io::{for_each_record, read_jsonl, write_jsonl, ParsedImage};
use nms_core::{run_method, Method, NmsConfig, Preorder};
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// What went wrong, coarse enough to pick an exit code: bad input is the
/// caller's problem, a broken invariant is ours.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, or an unusable flag combination.
    Input(String),
    /// An exactness guarantee failed during a run — that signals a bug in
    /// the suppression library, not in the invocation.
    Invariant(String),
}

impl CliError {
    /// 2 for input errors (clap uses the same code for usage errors),
    /// 3 for invariant violations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl From<nms_core::Error> for CliError {
    fn from(e: nms_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("threshold {v} must lie strictly between 0 and 1"))
    }
}

fn parse_repeats(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n == 0 {
        return Err("at least one repeat is required".into());
    }
    Ok(n)
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must not be negative"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_image_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| "expected WIDTHxHEIGHT, e.g. 640x640".to_string())?;
    let w: u32 = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h: u32 = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("image dimensions must be positive".into());
    }
    Ok((w, h))
}

/// Flags for `synth`. Defaults mirror the library's generator defaults.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output corpus path (JSON Lines).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Number of images to generate.
    #[arg(long, default_value_t = SynthParams::default().num_images)]
    pub images: usize,
    /// Mean objects per image (Poisson).
    #[arg(long, value_parser = parse_nonneg,
          default_value_t = SynthParams::default().objects_per_image)]
    pub objects: f64,
    /// Mean candidate boxes per object.
    #[arg(long, value_parser = parse_nonneg,
          default_value_t = SynthParams::default().boxes_per_object)]
    pub boxes_per_object: f64,
    /// Image size as WIDTHxHEIGHT pixels.
    #[arg(long, value_parser = parse_image_size, default_value = "640x640")]
    pub image_size: (u32, u32),
    /// Center/extent jitter as a fraction of object size.
    #[arg(long, value_parser = parse_nonneg,
          default_value_t = SynthParams::default().jitter_scale)]
    pub jitter: f64,
    /// How fast scores fall off with centre drift.
    #[arg(long, value_parser = parse_positive,
          default_value_t = SynthParams::default().score_decay)]
    pub score_decay: f64,
    /// Number of object categories.
    #[arg(long, default_value_t = SynthParams::default().num_categories)]
    pub categories: u32,
    /// PRNG seed; identical flags and seed reproduce the file byte-for-byte.
    #[arg(long, default_value_t = SynthParams::default().seed)]
    pub seed: u64,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let params = SynthParams {
        num_images: args.images,
        objects_per_image: args.objects,
        boxes_per_object: args.boxes_per_object,
        image_size: args.image_size,
        jitter_scale: args.jitter,
        score_decay: args.score_decay,
        num_categories: args.categories,
        seed: args.seed,
    };
    let images = generate(&params);
    let mut w = create(&args.output)?;
    write_jsonl(
        &mut w,
        images.iter().map(|img| (&img.detections, Some(img.ground_truth.as_slice()))),
    )?;
    w.flush()?;
    let detections: usize = images.iter().map(|img| img.detections.len()).sum();
    let objects: usize = images.iter().map(|img| img.ground_truth.len()).sum();
    if images.is_empty() {
        eprintln!("warning: wrote an empty corpus (0 images requested)");
    }
    println!(
        "wrote {} images ({detections} detections, {objects} ground-truth boxes) to {}",
        images.len(),
        args.output.display()
    );
    Ok(())
}

/// Flags for `run`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input corpus (JSON Lines).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Report path (JSON). A flat CSV is written next to it with the same
    /// stem and a .csv extension.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Methods to benchmark, comma-separated, reported in request order.
    #[arg(long, value_delimiter = ',', value_parser = Method::from_str,
          default_values_t = Method::ALL)]
    pub methods: Vec<Method>,
    /// Overlap threshold: boxes with IOU strictly above it suppress.
    #[arg(long, value_parser = parse_threshold, default_value_t = 0.7)]
    pub iou_threshold: f64,
    /// Suppress within categories only. The partitioning runs inside the
    /// timed window, so reported latency includes its overhead.
    #[arg(long)]
    pub per_class: bool,
    /// Centroid preorder used by the divide-and-conquer methods.
    #[arg(long, value_parser = Preorder::from_str,
          default_value_t = Preorder::Manhattan)]
    pub order: Preorder,
    /// Timing repeats per method; mean and std-dev are over repeats.
    #[arg(long, value_parser = parse_repeats, default_value_t = 5)]
    pub repeats: usize,
    /// Method whose kept set the others are compared against.
    #[arg(long, value_parser = Method::from_str,
          default_value_t = Method::Original)]
    pub baseline: Method,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = NmsConfig {
        iou_threshold: args.iou_threshold,
        order: args.order,
        per_class: args.per_class,
        gated_eqsi: false,
    };
    let parsed = load_corpus(&args.input)?;
    let mut sets: Vec<DetectionSet> = Vec::with_capacity(parsed.len());
    let mut gts: Vec<Option<Vec<GroundTruthBox>>> = Vec::with_capacity(parsed.len());
    for (dets, gt) in parsed {
        sets.push(dets);
        gts.push(gt);
    }
    if sets.is_empty() {
        eprintln!("warning: {} holds no images", args.input.display());
    }
    let annotated = gts.iter().filter(|g| g.is_some()).count();
    let gt_lists: Vec<Vec<GroundTruthBox>> =
        gts.iter().map(|g| g.clone().unwrap_or_default()).collect();

    let baseline_masks: Vec<KeepMask> =
        sets.iter().map(|s| run_method(args.baseline, s, &cfg).mask).collect();
    // The exact methods are checked against original even when the
    // agreement baseline is something else.
    let needs_exactness = args.methods.iter().any(|m| matches!(m, Method::Boe | Method::Cluster));
    let original_masks: Option<Vec<KeepMask>> =
        if needs_exactness && args.baseline != Method::Original {
            Some(sets.iter().map(|s| run_method(Method::Original, s, &cfg).mask).collect())
        } else {
            None
        };

    let mut rows: Vec<MethodReport> = Vec::with_capacity(args.methods.len());
    for &method in &args.methods {
        let latency = latency_benchmark(method, &sets, &cfg, args.repeats);
        let mut iou_calls = 0u64;
        let mut comparisons = 0u64;
        let mut kept = 0u64;
        let mut masks: Vec<KeepMask> = Vec::with_capacity(sets.len());
        for s in &sets {
            let out = run_method(method, s, &cfg);
            iou_calls += out.iou_calls;
            comparisons += out.comparisons;
            kept += out.mask.kept_count() as u64;
            masks.push(out.mask);
        }
        let agreement = agreement_pooled(masks.iter().zip(&baseline_masks))?;
        if matches!(method, Method::Boe | Method::Cluster) {
            let reference = original_masks.as_deref().unwrap_or(&baseline_masks);
            let vs_original = agreement_pooled(masks.iter().zip(reference))?;
            if vs_original.jaccard != 1.0 {
                return Err(CliError::Invariant(format!(
                    "{method} must match original exactly, but jaccard is {} \
                     ({} extra, {} missing)",
                    vs_original.jaccard, vs_original.extra_kept, vs_original.missing_kept
                )));
            }
        }
        let ap = (annotated > 0).then(|| {
            let kept_boxes: Vec<Vec<_>> = sets
                .iter()
                .zip(&masks)
                .map(|(s, m)| s.detections.iter().filter(|d| m[d.index]).cloned().collect())
                .collect();
            evaluate_ap(&kept_boxes, &gt_lists)
        });
        println!(
            "{:>8}: mean {:.1} us/image (std {:.1}), {} overlap tests, kept {}, jaccard {:.4} vs {}",
            method.name(),
            latency.mean_us,
            latency.std_dev_us,
            iou_calls,
            kept,
            agreement.jaccard,
            args.baseline.name()
        );
        rows.push(MethodReport {
            method: method.name().to_string(),
            mean_latency_us: latency.mean_us,
            latency_std_dev_us: latency.std_dev_us,
            total_iou_calls: iou_calls,
            total_comparisons: comparisons,
            total_kept: kept,
            agreement_vs_baseline: agreement,
            ap,
        });
    }

    let report = BenchReport {
        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        config: ConfigEcho {
            input: args.input.display().to_string(),
            output: args.output.display().to_string(),
            methods: args.methods.iter().map(|m| m.name().to_string()).collect(),
            iou_threshold: args.iou_threshold,
            per_class: args.per_class,
            order: args.order.name().to_string(),
            repeats: args.repeats,
            baseline: args.baseline.name().to_string(),
        },
        corpus: CorpusSummary {
            images: sets.len(),
            detections: sets.iter().map(DetectionSet::len).sum(),
            annotated,
        },
        methods: rows,
    };
    let mut w = create(&args.output)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    let csv_path = sibling_csv(&args.output);
    let mut w = create(&csv_path)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    println!("report: {} and {}", args.output.display(), csv_path.display());
    Ok(())
}

/// Flags for `stats`.
#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Input corpus (JSON Lines).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output stem; writes <stem>_scatter.csv and <stem>_histogram.csv.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Overlap threshold the suppression graph is built at.
    #[arg(long, value_parser = parse_threshold, default_value_t = 0.7)]
    pub iou_threshold: f64,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let file = open(&args.input)?;
    let mut rows: Vec<GraphStatsRow> = Vec::new();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    // Images are streamed so only the statistics stay resident.
    for_each_record(BufReader::new(file), |(dets, _gt)| {
        let (row, sizes) = image_graph_stats(&dets, args.iou_threshold);
        for s in sizes {
            *hist.entry(s).or_insert(0) += 1;
        }
        rows.push(row);
        Ok(())
    })
    .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let report = GraphStatsReport { rows, histogram: hist.into_iter().collect() };

    let scatter_path = suffixed_csv(&args.output, "scatter");
    let mut w = create(&scatter_path)?;
    report.write_rows_csv(&mut w)?;
    w.flush()?;
    let hist_path = suffixed_csv(&args.output, "histogram");
    let mut w = create(&hist_path)?;
    report.write_histogram_csv(&mut w)?;
    w.flush()?;

    let components: usize = report.histogram.iter().map(|&(_, c)| c).sum();
    println!(
        "{} images, {components} components at threshold {}; wrote {} and {}",
        report.rows.len(),
        args.iou_threshold,
        scatter_path.display(),
        hist_path.display()
    );
    Ok(())
}

/// Flags for `compare`.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Input corpus (JSON Lines).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output agreement matrix (CSV).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Methods to compare pairwise; at least two.
    #[arg(long, value_delimiter = ',', value_parser = Method::from_str,
          default_values_t = Method::ALL)]
    pub methods: Vec<Method>,
    /// Overlap thresholds to sweep, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_threshold,
          default_values_t = [0.3, 0.5, 0.7, 0.9])]
    pub sweep: Vec<f64>,
    /// Suppress within categories only.
    #[arg(long)]
    pub per_class: bool,
    /// Centroid preorder used by the divide-and-conquer methods.
    #[arg(long, value_parser = Preorder::from_str,
          default_value_t = Preorder::Manhattan)]
    pub order: Preorder,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    if args.methods.len() < 2 {
        return Err(CliError::Input(format!(
            "compare needs at least two methods, got {}",
            args.methods.len()
        )));
    }
    let sets: Vec<DetectionSet> =
        load_corpus(&args.input)?.into_iter().map(|(dets, _)| dets).collect();
    let mut w = create(&args.output)?;
    writeln!(w, "iou_threshold,method_a,method_b,jaccard,extra_kept,missing_kept")?;
    let mut written = 0usize;
    for &nt in &args.sweep {
        let cfg = NmsConfig {
            iou_threshold: nt,
            order: args.order,
            per_class: args.per_class,
            gated_eqsi: false,
        };
        let masks: Vec<Vec<KeepMask>> = args
            .methods
            .iter()
            .map(|&m| sets.iter().map(|s| run_method(m, s, &cfg).mask).collect())
            .collect();
        for a in 0..args.methods.len() {
            for b in a + 1..args.methods.len() {
                let rep = agreement_pooled(masks[a].iter().zip(&masks[b]))?;
                writeln!(
                    w,
                    "{nt},{},{},{},{},{}",
                    args.methods[a].name(),
                    args.methods[b].name(),
                    rep.jaccard,
                    rep.extra_kept,
                    rep.missing_kept
                )?;
                written += 1;
            }
        }
    }
    w.flush()?;
    println!(
        "wrote {written} agreement rows ({} thresholds) to {}",
        args.sweep.len(),
        args.output.display()
    );
    Ok(())
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn load_corpus(path: &Path) -> Result<Vec<ParsedImage>, CliError> {
    read_jsonl(BufReader::new(open(path)?))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `report.json` → `report.csv`; when that would collide with the report
/// itself (`x.csv`), fall back to `x.flat.csv`.
fn sibling_csv(path: &Path) -> PathBuf {
    let csv = path.with_extension("csv");
    if csv == path {
        path.with_extension("flat.csv")
    } else {
        csv
    }
}

/// `stats.csv` + `scatter` → `stats_scatter.csv`; a missing `.csv`
/// extension is tolerated.
fn suffixed_csv(base: &Path, suffix: &str) -> PathBuf {
    let name = base.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_distinguish_input_from_invariant() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Invariant("x".into()).exit_code(), 3);
    }

    #[test]
    fn threshold_parser_enforces_open_interval() {
        assert_eq!(parse_threshold("0.7"), Ok(0.7));
        assert!(parse_threshold("0").is_err());
        assert!(parse_threshold("1").is_err());
        assert!(parse_threshold("-0.2").is_err());
        assert!(parse_threshold("NaN").is_err());
        assert!(parse_threshold("forty").is_err());
    }

    #[test]
    fn repeats_parser_rejects_zero() {
        assert_eq!(parse_repeats("5"), Ok(5));
        assert!(parse_repeats("0").is_err());
    }

    #[test]
    fn image_size_parser_accepts_wxh() {
        assert_eq!(parse_image_size("640x480"), Ok((640, 480)));
        assert_eq!(parse_image_size("1024X768"), Ok((1024, 768)));
        assert!(parse_image_size("640").is_err());
        assert!(parse_image_size("0x480").is_err());
        assert!(parse_image_size("x480").is_err());
    }

    #[test]
    fn sibling_csv_avoids_clobbering_the_report() {
        assert_eq!(sibling_csv(Path::new("report.json")), PathBuf::from("report.csv"));
        assert_eq!(sibling_csv(Path::new("report")), PathBuf::from("report.csv"));
        assert_eq!(sibling_csv(Path::new("report.csv")), PathBuf::from("report.flat.csv"));
    }

    #[test]
    fn suffixed_csv_inserts_before_extension() {
        assert_eq!(
            suffixed_csv(Path::new("out/stats.csv"), "scatter"),
            PathBuf::from("out/stats_scatter.csv")
        );
        assert_eq!(
            suffixed_csv(Path::new("stats"), "histogram"),
            PathBuf::from("stats_histogram.csv")
        );
    }
}
