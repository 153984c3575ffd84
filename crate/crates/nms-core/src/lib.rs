//! Non-maximum suppression as a graph problem: exact and approximate
//! algorithms with instrumentation, plus the supporting pieces — geometry,
//! the suppression graph and its statistics, evaluation metrics, a seeded
//! synthetic data generator, latency measurement, and JSONL I/O.
//!
//! The greedy textbook procedure, its graph formulation (a dynamic program
//! over a DAG of "outranks and overlaps" arcs), two exact accelerations
//! (`boe`, `cluster`), and three approximations (`fast`, `qsi`, `eqsi`) all
//! share one interface and return a keep mask plus the number of overlap
//! tests they spent computing it.
//!
//! ```
//! use nms_core::detection::DetectionSet;
//! use nms_core::geometry::BoundingBox;
//! use nms_core::methods::{original_nms, NmsConfig};
//!
//! let dets = DetectionSet::from_boxes(
//!     "demo",
//!     vec![
//!         (BoundingBox::new(0.0, 0.0, 4.0, 4.0), 0.9, 0),
//!         (BoundingBox::new(0.5, 0.0, 4.5, 4.0), 0.7, 0),
//!     ],
//! );
//! let out = original_nms(&dets, &NmsConfig { iou_threshold: 0.5, ..NmsConfig::default() });
//! assert_eq!(out.mask.bits(), &[true, false]);
//! assert_eq!(out.iou_calls, 1);
//! ```

pub mod bench;
pub mod datagen;
pub mod detection;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod methods;
pub mod tree;

pub use detection::{Detection, DetectionSet, KeepMask};
pub use error::{Error, Result};
pub use geometry::{iou, BoundingBox, Preorder};
pub use methods::{run_method, run_named, InstrumentedMask, Method, NmsConfig};
