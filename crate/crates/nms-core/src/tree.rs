//! Recursion-trace trees. The divide-and-conquer suppressor can record which
//! pivot split which range; that trace is a binary tree over the measure-sorted
//! boxes, and it coincides with the Cartesian tree built from the priority
//! keys. Both live here so the equivalence can be tested shape-for-shape.

/// Arena node: the detection index at this pivot plus child links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QsiTreeNode {
    /// Index into the original detection set.
    pub detection: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

/// Binary tree in arena form, as recorded by a traced suppression run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QsiTree {
    pub nodes: Vec<QsiTreeNode>,
    pub root: Option<usize>,
}

impl QsiTree {
    pub fn push_node(&mut self, detection: usize) -> usize {
        self.nodes.push(QsiTreeNode { detection, left: None, right: None });
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Detection indices in left-root-right order (iterative; trees can be
    /// spine-shaped and deep).
    pub fn in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        let mut cur = self.root;
        while cur.is_some() || !stack.is_empty() {
            while let Some(id) = cur {
                stack.push(id);
                cur = self.nodes[id].left;
            }
            let id = stack.pop().expect("stack non-empty by loop condition");
            out.push(self.nodes[id].detection);
            cur = self.nodes[id].right;
        }
        out
    }

    /// Structural equality: same shape and same detection at every position,
    /// regardless of arena numbering.
    pub fn same_shape(&self, other: &QsiTree) -> bool {
        fn eq(a: &QsiTree, b: &QsiTree, na: Option<usize>, nb: Option<usize>) -> bool {
            match (na, nb) {
                (None, None) => true,
                (Some(ia), Some(ib)) => {
                    let (x, y) = (&a.nodes[ia], &b.nodes[ib]);
                    x.detection == y.detection
                        && eq(a, b, x.left, y.left)
                        && eq(a, b, x.right, y.right)
                }
                _ => false,
            }
        }
        eq(self, other, self.root, other.root)
    }
}

/// Cartesian tree over `keys`: in-order traversal is 0..n, and every node's
/// key is strictly greater than both children's (callers wanting "earlier
/// wins" ties make earlier keys compare greater). Built with the classic
/// rightmost-spine stack in O(n).
pub fn cartesian_tree<K: PartialOrd>(keys: &[K]) -> QsiTree {
    let mut tree = QsiTree::default();
    let mut spine: Vec<usize> = Vec::new();
    for i in 0..keys.len() {
        let node = tree.push_node(i);
        let mut last_popped = None;
        while let Some(&top) = spine.last() {
            if keys[tree.nodes[top].detection] < keys[i] {
                last_popped = spine.pop();
            } else {
                break;
            }
        }
        tree.nodes[node].left = last_popped;
        if let Some(&top) = spine.last() {
            tree.nodes[top].right = Some(node);
        }
        spine.push(node);
    }
    tree.root = spine.first().copied();
    tree
}
