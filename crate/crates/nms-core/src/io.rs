//! On-disk formats: JSON Lines ingestion/emission for detection corpora, and
//! a small CSV quoting helper shared by the report writers.
//!
//! One line per image: `{"image_id": "...", "detections": [{"bbox":
//! [x1,y1,x2,y2], "score": s, "category": c}, ...], "ground_truth": [...]}`.
//! `ground_truth` is optional and omitted when absent. Detection order
//! within a line defines the index used for score tie-breaking.

use crate::detection::DetectionSet;
use crate::error::{Error, Result};
use crate::eval::GroundTruthBox;
use crate::geometry::BoundingBox;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonDetection {
    bbox: [f64; 4],
    score: f64,
    category: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonGroundTruth {
    bbox: [f64; 4],
    category: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ImageRecord {
    image_id: String,
    detections: Vec<JsonDetection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<JsonGroundTruth>>,
}

/// One parsed image: its detections and, when present, its annotations.
pub type ParsedImage = (DetectionSet, Option<Vec<GroundTruthBox>>);

fn check_bbox(raw: [f64; 4], line: usize, what: &str) -> Result<BoundingBox> {
    let [x1, y1, x2, y2] = raw;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line,
            message: format!("{what} bbox has a non-finite coordinate"),
        });
    }
    if x2 < x1 || y2 < y1 {
        return Err(Error::Parse {
            line,
            message: format!("{what} bbox corners are out of order [{x1}, {y1}, {x2}, {y2}]"),
        });
    }
    Ok(BoundingBox::new(x1, y1, x2, y2))
}

fn convert(record: ImageRecord, line: usize) -> Result<ParsedImage> {
    let mut boxes = Vec::with_capacity(record.detections.len());
    for d in record.detections {
        let bbox = check_bbox(d.bbox, line, "detection")?;
        if !d.score.is_finite() || !(0.0..=1.0).contains(&d.score) {
            return Err(Error::Parse {
                line,
                message: format!("detection score {} outside [0, 1]", d.score),
            });
        }
        boxes.push((bbox, d.score, d.category));
    }
    let dets = DetectionSet::from_boxes(record.image_id, boxes);
    let gt = match record.ground_truth {
        None => None,
        Some(gs) => {
            let mut out = Vec::with_capacity(gs.len());
            for g in gs {
                out.push(GroundTruthBox {
                    bbox: check_bbox(g.bbox, line, "ground-truth")?,
                    category: g.category,
                });
            }
            Some(out)
        }
    };
    Ok((dets, gt))
}

/// Stream a JSONL corpus record by record. Blank lines are skipped; parse
/// and validation errors carry their 1-based line number.
pub fn for_each_record<R, F>(reader: R, mut f: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(ParsedImage) -> Result<()>,
{
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ImageRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        f(convert(record, lineno)?)?;
    }
    Ok(())
}

/// Read a whole JSONL corpus into memory.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ParsedImage>> {
    let mut out = Vec::new();
    for_each_record(reader, |img| {
        out.push(img);
        Ok(())
    })?;
    Ok(out)
}

/// Write one image as a JSONL line.
pub fn write_record<W: Write>(
    w: &mut W,
    dets: &DetectionSet,
    ground_truth: Option<&[GroundTruthBox]>,
) -> Result<()> {
    let record = ImageRecord {
        image_id: dets.image_id.clone(),
        detections: dets
            .detections
            .iter()
            .map(|d| JsonDetection {
                bbox: [d.bbox.x_lt, d.bbox.y_lt, d.bbox.x_rb, d.bbox.y_rb],
                score: d.score,
                category: d.category,
            })
            .collect(),
        ground_truth: ground_truth.map(|gs| {
            gs.iter()
                .map(|g| JsonGroundTruth {
                    bbox: [g.bbox.x_lt, g.bbox.y_lt, g.bbox.x_rb, g.bbox.y_rb],
                    category: g.category,
                })
                .collect()
        }),
    };
    serde_json::to_writer(&mut *w, &record).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

/// Write a whole corpus as JSONL.
pub fn write_jsonl<'a, W, I>(w: &mut W, images: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a DetectionSet, Option<&'a [GroundTruthBox]>)>,
{
    for (dets, gt) in images {
        write_record(w, dets, gt)?;
    }
    Ok(())
}

/// Quote a CSV field only when it needs it (comma, quote, or newline).
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
