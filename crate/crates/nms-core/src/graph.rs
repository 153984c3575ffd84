//! The suppression graph: an arc runs from a higher-priority box to every
//! lower-priority box it overlaps above the threshold. The keep/suppress
//! verdict is a dynamic program over any topological order, and the weakly
//! connected components bound how far suppression can propagate.

use crate::detection::{priority_cmp, DetectionSet, KeepMask};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::io::csv_field;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

/// Directed acyclic graph over detection indices. Arc `(v, u)` means `v`
/// outranks `u` and their boxes overlap above the threshold, so `v`
/// suppresses `u` whenever `v` itself survives.
#[derive(Debug, Clone)]
pub struct SuppressionGraph {
    node_count: usize,
    /// Successor adjacency, indexed by source node.
    succ: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
    arc_count: usize,
}

impl SuppressionGraph {
    /// Assemble a graph from explicit arcs. The caller is responsible for
    /// orientation and acyclicity; `topo_dp` reports cycles as errors.
    pub fn from_arcs(node_count: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut succ = vec![Vec::new(); node_count];
        let mut in_degree = vec![0usize; node_count];
        let mut arc_count = 0;
        for (v, u) in arcs {
            debug_assert!(v != u, "self-loop");
            succ[v].push(u);
            in_degree[u] += 1;
            arc_count += 1;
        }
        SuppressionGraph { node_count, succ, in_degree, arc_count }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_degree[u]
    }

    /// All arcs, grouped by source node.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(v, us)| us.iter().map(move |&u| (v, u)))
    }
}

/// Exact O(n²) construction: every pair is IOU-tested and arcs point from the
/// higher-priority endpoint. This is the reference oracle, not a fast path.
pub fn build_graph(dets: &DetectionSet, iou_threshold: f64) -> SuppressionGraph {
    let ds = &dets.detections;
    let n = ds.len();
    let mut succ = vec![Vec::new(); n];
    let mut in_degree = vec![0usize; n];
    let mut arc_count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if iou(&ds[i].bbox, &ds[j].bbox) > iou_threshold {
                let (v, u) =
                    if priority_cmp(&ds[i], &ds[j]) == Ordering::Less { (i, j) } else { (j, i) };
                succ[v].push(u);
                in_degree[u] += 1;
                arc_count += 1;
            }
        }
    }
    SuppressionGraph { node_count: n, succ, in_degree, arc_count }
}

/// Keep/suppress dynamic program over a Kahn traversal: a node is suppressed
/// exactly when some retained predecessor points at it. Verdicts are pushed
/// forward along arcs, so a node's own verdict is final by the time its
/// in-degree is exhausted; the mask is the same for every valid topological
/// order. Errors when the graph has a cycle.
pub fn topo_dp(g: &SuppressionGraph) -> Result<KeepMask> {
    let n = g.node_count;
    let mut indeg = g.in_degree.clone();
    let mut keep = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&u| indeg[u] == 0).collect();
    let mut processed = 0;
    while let Some(v) = queue.pop_front() {
        processed += 1;
        for &u in &g.succ[v] {
            if keep[v] {
                keep[u] = false;
            }
            indeg[u] -= 1;
            if indeg[u] == 0 {
                queue.push_back(u);
            }
        }
    }
    if processed != n {
        return Err(Error::CycleDetected);
    }
    Ok(KeepMask::from(keep))
}

/// Run the same dynamic program along a caller-chosen topological order.
/// Exists so order-independence can be exercised directly; panics if `order`
/// is not a topological permutation of the nodes.
pub fn dp_along(g: &SuppressionGraph, order: &[usize]) -> KeepMask {
    let n = g.node_count;
    assert_eq!(order.len(), n, "order must cover every node");
    let mut position = vec![usize::MAX; n];
    for (pos, &v) in order.iter().enumerate() {
        assert_eq!(position[v], usize::MAX, "order repeats node {v}");
        position[v] = pos;
    }
    for (v, u) in g.arcs() {
        assert!(position[v] < position[u], "order is not topological at arc ({v},{u})");
    }
    let mut keep = vec![true; n];
    for &v in order {
        if keep[v] {
            for &u in &g.succ[v] {
                keep[u] = false;
            }
        }
    }
    KeepMask::from(keep)
}

/// Weakly connected components of a suppression graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WccStats {
    /// Component label per node, numbered 0.. in order of first appearance.
    pub component_id: Vec<usize>,
    pub component_sizes: Vec<usize>,
    pub wcc_count: usize,
    pub arc_count: usize,
    pub node_count: usize,
}

impl WccStats {
    pub fn max_size(&self) -> usize {
        self.component_sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Connected components of the graph with arc direction ignored
/// (union-find with path halving).
pub fn wcc(g: &SuppressionGraph) -> WccStats {
    let n = g.node_count;
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for (v, u) in g.arcs() {
        let rv = find(&mut parent, v);
        let ru = find(&mut parent, u);
        if rv != ru {
            parent[rv.max(ru)] = rv.min(ru);
        }
    }

    let mut label = vec![usize::MAX; n];
    let mut component_id = vec![0usize; n];
    let mut component_sizes: Vec<usize> = Vec::new();
    for (x, slot) in component_id.iter_mut().enumerate() {
        let r = find(&mut parent, x);
        if label[r] == usize::MAX {
            label[r] = component_sizes.len();
            component_sizes.push(0);
        }
        *slot = label[r];
        component_sizes[label[r]] += 1;
    }
    WccStats {
        component_id,
        wcc_count: component_sizes.len(),
        component_sizes,
        arc_count: g.arc_count,
        node_count: n,
    }
}

/// One scatter row per image: node, arc, and component counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStatsRow {
    pub image_id: String,
    pub nodes: usize,
    pub arcs: usize,
    pub wccs: usize,
}

/// Scatter rows plus the aggregate WCC-size histogram.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphStatsReport {
    pub rows: Vec<GraphStatsRow>,
    /// (component size, number of components of that size), ascending.
    pub histogram: Vec<(usize, usize)>,
}

/// Stats for a single image: its scatter row and its component sizes
/// (so a streaming caller can accumulate the histogram itself).
pub fn image_graph_stats(dets: &DetectionSet, iou_threshold: f64) -> (GraphStatsRow, Vec<usize>) {
    let g = build_graph(dets, iou_threshold);
    let stats = wcc(&g);
    let row = GraphStatsRow {
        image_id: dets.image_id.clone(),
        nodes: stats.node_count,
        arcs: stats.arc_count,
        wccs: stats.wcc_count,
    };
    (row, stats.component_sizes)
}

pub fn graph_stats_report(sets: &[DetectionSet], iou_threshold: f64) -> GraphStatsReport {
    let mut rows = Vec::with_capacity(sets.len());
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for dets in sets {
        let (row, sizes) = image_graph_stats(dets, iou_threshold);
        rows.push(row);
        for s in sizes {
            *hist.entry(s).or_insert(0) += 1;
        }
    }
    GraphStatsReport { rows, histogram: hist.into_iter().collect() }
}

impl GraphStatsReport {
    pub fn write_rows_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "image_id,nodes,arcs,wccs")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", csv_field(&r.image_id), r.nodes, r.arcs, r.wccs)?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "wcc_size,count")?;
        for &(size, count) in &self.histogram {
            writeln!(w, "{size},{count}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2)
    }

    fn three_box_set() -> DetectionSet {
        DetectionSet::from_boxes(
            "img",
            vec![
                (bb(0.0, 0.0, 2.0, 2.0), 0.9, 0),
                (bb(0.0, 0.0, 2.0, 2.0), 0.8, 0),
                (bb(10.0, 10.0, 12.0, 12.0), 0.7, 0),
            ],
        )
    }

    #[test]
    fn build_graph_points_from_higher_priority() {
        let g = build_graph(&three_box_set(), 0.5);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.in_degree(1), 1);
        assert_eq!(g.in_degree(0), 0);
    }

    #[test]
    fn build_graph_no_pairs_no_arcs() {
        let single = DetectionSet::from_boxes("one", vec![(bb(0.0, 0.0, 1.0, 1.0), 0.5, 0)]);
        assert_eq!(build_graph(&single, 0.5).arc_count(), 0);

        let disjoint = DetectionSet::from_boxes(
            "two",
            vec![(bb(0.0, 0.0, 1.0, 1.0), 0.2, 0), (bb(5.0, 5.0, 6.0, 6.0), 0.9, 0)],
        );
        assert_eq!(build_graph(&disjoint, 0.1).arc_count(), 0);
    }

    #[test]
    fn build_graph_orients_score_ties_by_index() {
        let tied = DetectionSet::from_boxes(
            "tie",
            vec![(bb(0.0, 0.0, 2.0, 2.0), 0.8, 0), (bb(0.0, 0.0, 2.0, 2.0), 0.8, 0)],
        );
        let g = build_graph(&tied, 0.5);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn topo_dp_chain() {
        let g = SuppressionGraph::from_arcs(3, vec![(0, 1), (1, 2)]);
        assert_eq!(topo_dp(&g).unwrap().bits(), &[true, false, true]);
    }

    #[test]
    fn topo_dp_no_arcs_keeps_all() {
        let g = SuppressionGraph::from_arcs(4, vec![]);
        assert_eq!(topo_dp(&g).unwrap().bits(), &[true; 4]);
    }

    #[test]
    fn topo_dp_star() {
        let g = SuppressionGraph::from_arcs(4, vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(topo_dp(&g).unwrap().bits(), &[true, false, false, false]);
    }

    #[test]
    fn topo_dp_rejects_cycles() {
        let g = SuppressionGraph::from_arcs(3, vec![(0, 1), (1, 2), (2, 0)]);
        assert!(matches!(topo_dp(&g), Err(Error::CycleDetected)));
    }

    #[test]
    fn dp_along_agrees_with_kahn() {
        let g = SuppressionGraph::from_arcs(5, vec![(0, 1), (1, 2), (0, 3)]);
        let kahn = topo_dp(&g).unwrap();
        assert_eq!(dp_along(&g, &[4, 0, 3, 1, 2]), kahn);
        assert_eq!(dp_along(&g, &[0, 1, 2, 3, 4]), kahn);
    }

    #[test]
    fn wcc_examples() {
        let g = SuppressionGraph::from_arcs(3, vec![(0, 1)]);
        let s = wcc(&g);
        assert_eq!(s.component_sizes, vec![2, 1]);
        assert_eq!(s.wcc_count, 2);
        assert_eq!(s.component_id, vec![0, 0, 1]);

        let loose = wcc(&SuppressionGraph::from_arcs(5, vec![]));
        assert_eq!(loose.component_sizes, vec![1; 5]);

        let chain = wcc(&SuppressionGraph::from_arcs(6, (0..5).map(|i| (i, i + 1))));
        assert_eq!(chain.component_sizes, vec![6]);
        assert_eq!(chain.max_size(), 6);
    }

    #[test]
    fn stats_report_rows_and_histogram() {
        let report = graph_stats_report(&[three_box_set()], 0.5);
        assert_eq!(
            report.rows,
            vec![GraphStatsRow { image_id: "img".into(), nodes: 3, arcs: 1, wccs: 2 }]
        );
        assert_eq!(report.histogram, vec![(1, 1), (2, 1)]);

        let empty = DetectionSet::from_boxes("none", Vec::<(BoundingBox, f64, u32)>::new());
        let report = graph_stats_report(&[empty], 0.5);
        assert_eq!(
            report.rows,
            vec![GraphStatsRow { image_id: "none".into(), nodes: 0, arcs: 0, wccs: 0 }]
        );
        assert!(report.histogram.is_empty());
    }

    #[test]
    fn stats_csv_bytes() {
        let report = graph_stats_report(&[three_box_set()], 0.5);
        let mut rows = Vec::new();
        report.write_rows_csv(&mut rows).unwrap();
        assert_eq!(String::from_utf8(rows).unwrap(), "image_id,nodes,arcs,wccs\nimg,3,1,2\n");
        let mut hist = Vec::new();
        report.write_histogram_csv(&mut hist).unwrap();
        assert_eq!(String::from_utf8(hist).unwrap(), "wcc_size,count\n1,1\n2,1\n");
    }
}
