//! Axis-aligned box geometry: overlap (IOU), centroids, window scaling, and
//! the centroid preorders used to linearize boxes along the plane.

use crate::error::Error;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned box given by its top-left and bottom-right corners.
/// Corners must be ordered (`x_lt <= x_rb`, `y_lt <= y_rb`); zero-extent
/// (degenerate) boxes are allowed and have zero area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_lt: f64,
    pub y_lt: f64,
    pub x_rb: f64,
    pub y_rb: f64,
}

impl BoundingBox {
    pub fn new(x_lt: f64, y_lt: f64, x_rb: f64, y_rb: f64) -> Self {
        debug_assert!(x_lt <= x_rb && y_lt <= y_rb, "corners out of order");
        BoundingBox { x_lt, y_lt, x_rb, y_rb }
    }

    pub fn area(&self) -> f64 {
        (self.x_rb - self.x_lt) * (self.y_rb - self.y_lt)
    }
}

/// Intersection over union of two boxes, on closed real intervals (no pixel
/// +1 correction). Degenerate boxes contribute zero area; when both areas are
/// zero the result is 0. The quotient is clamped to [0, 1] against round-off.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x_rb.min(b.x_rb) - a.x_lt.max(b.x_lt)).max(0.0);
    let ih = (a.y_rb.min(b.y_rb) - a.y_lt.max(b.y_lt)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Geometric center of a box.
pub fn centroid(b: &BoundingBox) -> Point {
    Point::new((b.x_lt + b.x_rb) / 2.0, (b.y_lt + b.y_rb) / 2.0)
}

/// Closed-box membership: `p` inside `b`, boundary included.
pub fn centroid_within(p: &Point, b: &BoundingBox) -> bool {
    p.x >= b.x_lt && p.x <= b.x_rb && p.y >= b.y_lt && p.y <= b.y_rb
}

/// Scale a box about its centroid: every half-extent is multiplied by
/// `s >= 0`, the centroid stays put. Written as `corner + (1−s)·(center −
/// corner)` so that `s = 1` returns the box bit-for-bit.
pub fn scale_box(b: &BoundingBox, s: f64) -> BoundingBox {
    debug_assert!(s >= 0.0, "negative scale");
    let c = centroid(b);
    let t = 1.0 - s;
    BoundingBox {
        x_lt: b.x_lt + t * (c.x - b.x_lt),
        y_lt: b.y_lt + t * (c.y - b.y_lt),
        x_rb: b.x_rb - t * (b.x_rb - c.x),
        y_rb: b.y_rb - t * (b.y_rb - c.y),
    }
}

/// How centroids are compared when partitioning or sorting boxes spatially.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preorder {
    /// Lexicographic on (x, y).
    Lex,
    /// By |x| + |y|.
    #[default]
    Manhattan,
    /// By x² + y² (no square root needed for comparison).
    Euclid,
}

/// Outcome of a preorder comparison; `LessOrEqual` means the first point
/// precedes or ties the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOutcome {
    LessOrEqual,
    Greater,
}

impl Preorder {
    /// Compare two points by the preorder's measure alone, with no
    /// tie-breaking: distinct points can compare `Equal`.
    pub fn measure_cmp(self, p: &Point, q: &Point) -> Ordering {
        match self {
            Preorder::Lex => p.x.partial_cmp(&q.x).unwrap().then(p.y.partial_cmp(&q.y).unwrap()),
            Preorder::Manhattan => {
                let kp = p.x.abs() + p.y.abs();
                let kq = q.x.abs() + q.y.abs();
                kp.partial_cmp(&kq).unwrap()
            }
            Preorder::Euclid => {
                let kp = p.x * p.x + p.y * p.y;
                let kq = q.x * q.x + q.y * q.y;
                kp.partial_cmp(&kq).unwrap()
            }
        }
    }

    /// The measure as a single number when the preorder has that shape:
    /// `|x| + |y|` for Manhattan, `x² + y²` for Euclid. Lexicographic order
    /// compares coordinates directly and has no scalar form. Values for the
    /// same point are computed exactly as [`Preorder::measure_cmp`] computes
    /// them, so sorting by this key reproduces the comparator's order.
    pub fn scalar_measure(self, p: &Point) -> Option<f64> {
        match self {
            Preorder::Lex => None,
            Preorder::Manhattan => Some(p.x.abs() + p.y.abs()),
            Preorder::Euclid => Some(p.x * p.x + p.y * p.y),
        }
    }

    /// `p ⪯ q` under this preorder (ties count as LessOrEqual both ways).
    pub fn compare(self, p: &Point, q: &Point) -> CompareOutcome {
        if self.measure_cmp(p, q) == Ordering::Greater {
            CompareOutcome::Greater
        } else {
            CompareOutcome::LessOrEqual
        }
    }

    pub fn le(self, p: &Point, q: &Point) -> bool {
        self.measure_cmp(p, q) != Ordering::Greater
    }

    pub fn name(self) -> &'static str {
        match self {
            Preorder::Lex => "lex",
            Preorder::Manhattan => "manhattan",
            Preorder::Euclid => "euclid",
        }
    }
}

impl fmt::Display for Preorder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preorder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "lex" => Ok(Preorder::Lex),
            "manhattan" => Ok(Preorder::Manhattan),
            "euclid" => Ok(Preorder::Euclid),
            other => Err(Error::UnknownPreorder(other.to_string())),
        }
    }
}
