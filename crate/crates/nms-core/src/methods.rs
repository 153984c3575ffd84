//! The six suppression algorithms behind one interface. Each returns the
//! keep mask plus instrumentation: `iou_calls` counts every overlap
//! evaluation (the honest cost of the run), `comparisons` counts the
//! ordering probes that steer it (sort comparators, partition tests, stack
//! and binary-search probes).
//!
//! `original`, `cluster`, and `boe` produce identical masks on every input;
//! `fast` may suppress more; `qsi` and `eqsi` trade small mask deviations
//! for aggressively fewer overlap tests.

use crate::detection::{priority_cmp, Detection, DetectionSet, KeepMask};
use crate::error::{Error, Result};
use crate::geometry::{centroid, iou, scale_box, BoundingBox, Point, Preorder};
use crate::tree::QsiTree;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Shared knobs for every method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsConfig {
    /// Overlap threshold: boxes with IOU strictly above this suppress.
    /// Must lie in (0, 1).
    pub iou_threshold: f64,
    /// Centroid preorder used by the divide-and-conquer methods.
    pub order: Preorder,
    /// Partition detections by category and suppress within classes only.
    pub per_class: bool,
    /// Skip the overlap test in `eqsi` when the would-be suppressor is
    /// itself already suppressed. Off by default: the stack formulation
    /// lets dead boxes suppress, and that is the variant benchmarked.
    pub gated_eqsi: bool,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            iou_threshold: 0.7,
            order: Preorder::default(),
            per_class: false,
            gated_eqsi: false,
        }
    }
}

/// A keep mask plus the work it took to compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentedMask {
    pub mask: KeepMask,
    /// Number of times `iou()` was evaluated during the run.
    pub iou_calls: u64,
    /// Ordering comparisons performed (sorting, partitioning, probing).
    pub comparisons: u64,
}

/// Method identifiers accepted by the dispatcher and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Original,
    Fast,
    Cluster,
    Boe,
    Qsi,
    Eqsi,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Original, Method::Fast, Method::Cluster, Method::Boe, Method::Qsi, Method::Eqsi];

    pub fn name(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Fast => "fast",
            Method::Cluster => "cluster",
            Method::Boe => "boe",
            Method::Qsi => "qsi",
            Method::Eqsi => "eqsi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Method::Original),
            "fast" => Ok(Method::Fast),
            "cluster" => Ok(Method::Cluster),
            "boe" => Ok(Method::Boe),
            "qsi" => Ok(Method::Qsi),
            "eqsi" => Ok(Method::Eqsi),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

fn check_config(cfg: &NmsConfig) {
    debug_assert!(
        cfg.iou_threshold > 0.0 && cfg.iou_threshold < 1.0,
        "iou_threshold must lie in (0, 1), got {}",
        cfg.iou_threshold
    );
}

/// Indices sorted by descending score (ties by ascending index), counting
/// each comparator call.
fn counted_priority_order(ds: &[Detection], comparisons: &mut u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        *comparisons += 1;
        priority_cmp(&ds[a], &ds[b])
    });
    order
}

fn centroids(ds: &[Detection]) -> Vec<Point> {
    ds.iter().map(|d| centroid(&d.bbox)).collect()
}

/// Greedy suppression: repeatedly keep the best remaining box and overlap-test
/// it against everything still alive below it.
///
/// Survivors are compacted into a contiguous list after every round, so each
/// scan streams over exactly the boxes the classic formulation would still
/// have to look at — same tests in the same order, but cache-friendly at
/// large n.
pub fn original_nms(dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    check_config(cfg);
    let ds = &dets.detections;
    let n = ds.len();
    let mut comparisons = 0u64;
    let mut iou_calls = 0u64;
    let order = counted_priority_order(ds, &mut comparisons);
    let mut rest: Vec<(BoundingBox, usize)> = order.iter().map(|&i| (ds[i].bbox, i)).collect();
    let mut keep = vec![false; n];
    while let Some(&(pivot, winner)) = rest.first() {
        keep[winner] = true;
        let mut write = 0;
        for read in 1..rest.len() {
            let cand = rest[read];
            iou_calls += 1;
            if iou(&pivot, &cand.0) <= cfg.iou_threshold {
                rest[write] = cand;
                write += 1;
            }
        }
        rest.truncate(write);
    }
    InstrumentedMask { mask: keep.into(), iou_calls, comparisons }
}

/// Triangular-matrix suppression: a box dies when anything above it in
/// priority overlaps it, whether or not the suppressor survives. The whole
/// upper triangle is evaluated so `iou_calls` reports the formulation's
/// true cost.
pub fn fast_nms(dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    check_config(cfg);
    let ds = &dets.detections;
    let n = ds.len();
    let mut comparisons = 0u64;
    let mut iou_calls = 0u64;
    let order = counted_priority_order(ds, &mut comparisons);
    let mut keep = vec![true; n];
    for i in 0..n {
        for j in (i + 1)..n {
            iou_calls += 1;
            if iou(&ds[order[i]].bbox, &ds[order[j]].bbox) > cfg.iou_threshold {
                keep[order[j]] = false;
            }
        }
    }
    InstrumentedMask { mask: keep.into(), iou_calls, comparisons }
}

/// Fixed-point iteration on the triangular overlap structure: each round
/// revives boxes whose every overlapping superior died in the previous
/// round, until nothing changes. Converges to the greedy mask; also returns
/// the number of rounds taken.
pub fn cluster_nms(dets: &DetectionSet, cfg: &NmsConfig) -> (InstrumentedMask, u32) {
    check_config(cfg);
    let ds = &dets.detections;
    let n = ds.len();
    let mut comparisons = 0u64;
    let mut iou_calls = 0u64;
    if n == 0 {
        return (InstrumentedMask { mask: KeepMask::from(Vec::new()), iou_calls, comparisons }, 0);
    }
    let order = counted_priority_order(ds, &mut comparisons);
    // Overlap structure in priority positions: preds[j] lists positions
    // i < j whose boxes overlap j's above the threshold.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut has_succ = vec![false; n];
    for i in 0..n {
        for j in (i + 1)..n {
            iou_calls += 1;
            if iou(&ds[order[i]].bbox, &ds[order[j]].bbox) > cfg.iou_threshold {
                preds[j].push(i);
                has_succ[i] = true;
            }
        }
    }
    let mut alive = vec![true; n];
    let mut iterations = 0u32;
    loop {
        iterations += 1;
        let next: Vec<bool> = (0..n).map(|j| !preds[j].iter().any(|&i| alive[i])).collect();
        // The next round reads `next` only at positions that can suppress
        // someone; if those are unchanged the iteration has converged.
        let stable = (0..n).filter(|&i| has_succ[i]).all(|i| next[i] == alive[i]);
        alive = next;
        if stable {
            break;
        }
    }
    let mut keep = vec![false; n];
    for (pos, &v) in order.iter().enumerate() {
        keep[v] = alive[pos];
    }
    (InstrumentedMask { mask: keep.into(), iou_calls, comparisons }, iterations)
}

/// Greedy suppression with a spatial shortcut: candidates are restricted to
/// boxes whose centroid falls inside a window scaled from the kept box
/// (factor 1/threshold − 1, which provably contains every centroid that
/// could overlap above the threshold). Centroids are binary-searched on x
/// and filtered on y, so the mask is exactly the greedy mask at every
/// threshold while most overlap tests never happen.
pub fn boe_nms(dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    check_config(cfg);
    let ds = &dets.detections;
    let n = ds.len();
    let mut comparisons = 0u64;
    let mut iou_calls = 0u64;
    let order = counted_priority_order(ds, &mut comparisons);
    let cents = centroids(ds);
    let mut xs: Vec<(f64, usize)> = cents.iter().enumerate().map(|(i, c)| (c.x, i)).collect();
    xs.sort_unstable_by(|a, b| {
        comparisons += 1;
        a.0.partial_cmp(&b.0).expect("finite centroid").then(a.1.cmp(&b.1))
    });
    let window_scale = 1.0 / cfg.iou_threshold - 1.0;
    let mut removed = vec![false; n];
    let mut keep = vec![false; n];
    for &v in &order {
        if removed[v] {
            continue;
        }
        keep[v] = true;
        // Take the kept box out of the pool up front so the window scan
        // never tests it against itself.
        removed[v] = true;
        let window = scale_box(&ds[v].bbox, window_scale);
        let lo = xs.partition_point(|&(cx, _)| {
            comparisons += 1;
            cx < window.x_lt
        });
        let hi = xs.partition_point(|&(cx, _)| {
            comparisons += 1;
            cx <= window.x_rb
        });
        for &(_, u) in &xs[lo..hi] {
            if removed[u] {
                continue;
            }
            comparisons += 1;
            if cents[u].y < window.y_lt || cents[u].y > window.y_rb {
                continue;
            }
            iou_calls += 1;
            if iou(&ds[v].bbox, &ds[u].bbox) > cfg.iou_threshold {
                removed[u] = true;
            }
        }
    }
    InstrumentedMask { mask: keep.into(), iou_calls, comparisons }
}

/// Quickselect-style divide and conquer over centroid measures.
struct QsiRun<'a> {
    ds: &'a [Detection],
    cents: Vec<Point>,
    /// Permutation of detection indices, partitioned in place.
    idx: Vec<usize>,
    keep: Vec<bool>,
    nt: f64,
    order: Preorder,
    iou_calls: u64,
    comparisons: u64,
}

impl<'a> QsiRun<'a> {
    fn new(dets: &'a DetectionSet, cfg: &NmsConfig) -> Self {
        let ds = &dets.detections[..];
        QsiRun {
            cents: centroids(ds),
            idx: (0..ds.len()).collect(),
            keep: vec![true; ds.len()],
            nt: cfg.iou_threshold,
            order: cfg.order,
            iou_calls: 0,
            comparisons: 0,
            ds,
        }
    }

    /// Swap the highest-priority box of `[lo, hi)` to the back, partition the
    /// rest by measure (keys ≤ pivot's go left), plant the pivot between the
    /// halves, and return its position.
    fn partition(&mut self, lo: usize, hi: usize) -> usize {
        let mut m = lo;
        for i in (lo + 1)..hi {
            self.comparisons += 1;
            if priority_cmp(&self.ds[self.idx[i]], &self.ds[self.idx[m]]) == Ordering::Less {
                m = i;
            }
        }
        let last = hi - 1;
        self.idx.swap(m, last);
        let pivot_c = self.cents[self.idx[last]];
        let mut p = lo;
        for i in lo..last {
            self.comparisons += 1;
            if self.order.le(&self.cents[self.idx[i]], &pivot_c) {
                self.idx.swap(p, i);
                p += 1;
            }
        }
        self.idx.swap(p, last);
        p
    }

    /// If the pivot is still alive, overlap-test it against every other box
    /// in its range and clear the losers.
    fn suppress(&mut self, lo: usize, hi: usize, p: usize) {
        let pv = self.idx[p];
        if !self.keep[pv] {
            return;
        }
        let pb = self.ds[pv].bbox;
        for i in lo..hi {
            if i == p {
                continue;
            }
            let u = self.idx[i];
            self.iou_calls += 1;
            if iou(&pb, &self.ds[u].bbox) > self.nt {
                self.keep[u] = false;
            }
        }
    }

    /// Hot path: recurse into the smaller half and loop on the larger so the
    /// stack stays logarithmic even on adversarially sorted input. Ranges of
    /// one box have nothing to do (their survival was settled by ancestors).
    fn solve(&mut self, mut lo: usize, mut hi: usize) {
        while hi - lo > 1 {
            let p = self.partition(lo, hi);
            self.suppress(lo, hi, p);
            if p - lo < hi - p {
                self.solve(lo, p);
                lo = p + 1;
            } else {
                self.solve(p + 1, hi);
                hi = p;
            }
        }
    }

    /// Plain recursion that additionally records the pivot tree, including
    /// leaf nodes for single-box ranges. Same mask and counters as `solve`.
    fn solve_traced(&mut self, tree: &mut QsiTree, lo: usize, hi: usize) -> Option<usize> {
        if lo >= hi {
            return None;
        }
        let p = self.partition(lo, hi);
        self.suppress(lo, hi, p);
        let node = tree.push_node(self.idx[p]);
        let left = self.solve_traced(tree, lo, p);
        let right = self.solve_traced(tree, p + 1, hi);
        tree.nodes[node].left = left;
        tree.nodes[node].right = right;
        Some(node)
    }

    fn finish(self) -> InstrumentedMask {
        InstrumentedMask {
            mask: self.keep.into(),
            iou_calls: self.iou_calls,
            comparisons: self.comparisons,
        }
    }
}

/// Divide-and-conquer suppression: the best box of each range suppresses
/// across the whole range, then the range is split around its centroid
/// measure and the halves are solved independently.
pub fn qsi_nms(dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    check_config(cfg);
    let mut run = QsiRun::new(dets, cfg);
    let n = run.idx.len();
    run.solve(0, n);
    run.finish()
}

/// As [`qsi_nms`], but also returns the recursion's pivot tree: in-order it
/// walks the boxes ascending by measure, and every pivot outranks its
/// descendants.
pub fn qsi_nms_traced(dets: &DetectionSet, cfg: &NmsConfig) -> (InstrumentedMask, QsiTree) {
    check_config(cfg);
    let mut run = QsiRun::new(dets, cfg);
    let n = run.idx.len();
    let mut tree = QsiTree::default();
    tree.root = run.solve_traced(&mut tree, 0, n);
    (run.finish(), tree)
}

/// Detection indices ascending by centroid measure, breaking measure ties
/// lower-priority-first — exactly the in-order sequence of the traced pivot
/// tree (the inclusive partition sends equal keys left of the pivot).
pub fn measure_order(dets: &DetectionSet, order: Preorder) -> Vec<usize> {
    let ds = &dets.detections;
    let cents = centroids(ds);
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.sort_by(|&a, &b| {
        order.measure_cmp(&cents[a], &cents[b]).then_with(|| priority_cmp(&ds[b], &ds[a]))
    });
    idx
}

/// Two monotone stack sweeps over the measure-sorted boxes: walking the
/// order (then its reverse), each box pops every lower-priority box below
/// it on the stack and overlap-tests the popped box once. At most 2n tests
/// ever happen. A popped box is tested even when the current box is already
/// suppressed, unless `gated_eqsi` is set.
pub fn eqsi_nms(dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    check_config(cfg);
    let ds = &dets.detections;
    let n = ds.len();
    let mut comparisons = 0u64;
    let mut iou_calls = 0u64;
    // Gather once into measure order so both sweeps stream over contiguous
    // memory instead of chasing indices.
    let sorted = measure_sorted(ds, cfg.order, &mut comparisons);
    let mut keep = vec![true; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    eqsi_pass(&sorted, cfg, 0..n, &mut keep, &mut stack, &mut iou_calls, &mut comparisons);
    eqsi_pass(&sorted, cfg, (0..n).rev(), &mut keep, &mut stack, &mut iou_calls, &mut comparisons);
    let mut mask = vec![true; n];
    for (pos, det) in sorted.iter().enumerate() {
        mask[det.index] = keep[pos];
    }
    InstrumentedMask { mask: mask.into(), iou_calls, comparisons }
}

/// Detections ordered by (centroid measure, input index). Scalar measures
/// (Manhattan, Euclid) sort comparison-free through a radix pass and add
/// nothing to `comparisons`; the lexicographic preorder falls back to the
/// counted comparator sort.
fn measure_sorted(ds: &[Detection], order: Preorder, comparisons: &mut u64) -> Vec<Detection> {
    let cents = centroids(ds);
    let keys: Option<Vec<u64>> =
        cents.iter().map(|c| order.scalar_measure(c).map(float_sort_key)).collect();
    match keys {
        Some(keys) => radix_argsort(&keys).iter().map(|&i| ds[i as usize].clone()).collect(),
        None => {
            let mut keyed: Vec<(Point, usize)> = cents.iter().copied().zip(0..ds.len()).collect();
            keyed.sort_unstable_by(|a, b| {
                *comparisons += 1;
                order.measure_cmp(&a.0, &b.0).then(a.1.cmp(&b.1))
            });
            keyed.iter().map(|&(_, i)| ds[i].clone()).collect()
        }
    }
}

/// Order-preserving map from non-NaN f64 to u64: negative values flip all
/// bits, others set the sign bit, and −0.0 is folded onto +0.0 first so
/// values that compare equal get equal keys.
fn float_sort_key(v: f64) -> u64 {
    debug_assert!(!v.is_nan());
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Stable LSD radix argsort: indices of `keys` in ascending key order, ties
/// keeping input order. Six 11-bit digit passes cover all 64 bits; passes
/// whose digit is constant across the input are skipped.
fn radix_argsort(keys: &[u64]) -> Vec<u32> {
    const BITS: u32 = 11;
    const BUCKETS: usize = 1 << BITS;
    const PASSES: usize = 6;
    let n = keys.len();
    assert!(n <= u32::MAX as usize, "radix argsort limited to u32 indices");
    let mut kv: Vec<(u64, u32)> = keys.iter().copied().zip(0..n as u32).collect();
    let mut swap: Vec<(u64, u32)> = vec![(0, 0); n];
    let mut hist = vec![0u32; BUCKETS * PASSES];
    for &k in keys {
        for pass in 0..PASSES {
            let digit = ((k >> (pass as u32 * BITS)) as usize) & (BUCKETS - 1);
            hist[pass * BUCKETS + digit] += 1;
        }
    }
    for pass in 0..PASSES {
        let h = &mut hist[pass * BUCKETS..(pass + 1) * BUCKETS];
        if h.iter().any(|&c| c as usize == n) {
            continue;
        }
        let mut offset = 0u32;
        for c in h.iter_mut() {
            let count = *c;
            *c = offset;
            offset += count;
        }
        let shift = pass as u32 * BITS;
        for &(k, i) in &kv {
            let digit = ((k >> shift) as usize) & (BUCKETS - 1);
            swap[h[digit] as usize] = (k, i);
            h[digit] += 1;
        }
        std::mem::swap(&mut kv, &mut swap);
    }
    kv.iter().map(|&(_, i)| i).collect()
}

/// One monotone stack sweep for [`eqsi_nms`]; `keep` and the walk are keyed
/// by position in the measure-sorted slice.
fn eqsi_pass(
    sorted: &[Detection],
    cfg: &NmsConfig,
    walk: impl Iterator<Item = usize>,
    keep: &mut [bool],
    stack: &mut Vec<usize>,
    iou_calls: &mut u64,
    comparisons: &mut u64,
) {
    stack.clear();
    for cur in walk {
        while let Some(&top) = stack.last() {
            *comparisons += 1;
            if priority_cmp(&sorted[cur], &sorted[top]) == Ordering::Less {
                if !cfg.gated_eqsi || keep[cur] {
                    *iou_calls += 1;
                    if iou(&sorted[cur].bbox, &sorted[top].bbox) > cfg.iou_threshold {
                        keep[top] = false;
                    }
                }
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(cur);
    }
}

fn split_by_category(dets: &DetectionSet) -> Vec<(Vec<usize>, DetectionSet)> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for d in &dets.detections {
        groups.entry(d.category).or_default().push(d.index);
    }
    groups
        .into_values()
        .map(|idxs| {
            let boxes: Vec<_> = idxs
                .iter()
                .map(|&i| {
                    let d = &dets.detections[i];
                    (d.bbox, d.score, d.category)
                })
                .collect();
            (idxs, DetectionSet::from_boxes(dets.image_id.clone(), boxes))
        })
        .collect()
}

/// Uniform dispatch. With `per_class` set, detections are partitioned by
/// category, each class is suppressed on its own, and the verdicts are
/// scattered back to the original indices; counters are summed.
pub fn run_method(method: Method, dets: &DetectionSet, cfg: &NmsConfig) -> InstrumentedMask {
    if cfg.per_class {
        let sub_cfg = NmsConfig { per_class: false, ..*cfg };
        let mut keep = vec![false; dets.len()];
        let mut iou_calls = 0u64;
        let mut comparisons = 0u64;
        for (orig, sub) in split_by_category(dets) {
            let out = run_method(method, &sub, &sub_cfg);
            for (&slot, &bit) in orig.iter().zip(out.mask.bits()) {
                keep[slot] = bit;
            }
            iou_calls += out.iou_calls;
            comparisons += out.comparisons;
        }
        return InstrumentedMask { mask: keep.into(), iou_calls, comparisons };
    }
    match method {
        Method::Original => original_nms(dets, cfg),
        Method::Fast => fast_nms(dets, cfg),
        Method::Cluster => cluster_nms(dets, cfg).0,
        Method::Boe => boe_nms(dets, cfg),
        Method::Qsi => qsi_nms(dets, cfg),
        Method::Eqsi => eqsi_nms(dets, cfg),
    }
}

/// [`run_method`] addressed by name; unknown names are an error.
pub fn run_named(name: &str, dets: &DetectionSet, cfg: &NmsConfig) -> Result<InstrumentedMask> {
    Ok(run_method(name.parse()?, dets, cfg))
}
