use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use super::metrics::sq_dist;
use super::PointCloud;
use crate::{Error, Result};

const LEAF_SIZE: usize = 16;
// Above this many axes a kd-tree prunes almost nothing.
const MAX_TREE_DIM: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact radius and k-nearest-neighbor queries over a [`PointCloud`].
///
/// Results coincide with a brute-force scan using [`sq_dist`]: radius queries
/// return the closed ball in ascending index order, kNN queries sort by
/// distance and break ties by ascending index. Low-dimensional clouds are
/// indexed by a kd-tree, high-dimensional ones are scanned linearly.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cloud: Arc<PointCloud>,
    order: Vec<usize>,
    nodes: Arc<Vec<Node>>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_shared(Arc::new(cloud.clone()))
    }

    pub fn from_shared(cloud: Arc<PointCloud>) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        let mut nodes = Vec::new();
        if cloud.dim() <= MAX_TREE_DIM {
            build_node(&cloud, &mut order, 0, &mut nodes);
        } else {
            nodes.push(Node::Leaf {
                start: 0,
                end: order.len(),
            });
        }
        Ok(Self {
            cloud,
            order,
            nodes: Arc::new(nodes),
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    fn check_center(&self, center: &[f64]) -> Result<()> {
        if center.len() != self.cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cloud.dim(),
                got: center.len(),
            });
        }
        Ok(())
    }

    /// Indices `i` with `‖p_i − center‖ ≤ r`, ascending.
    pub fn radius_query(&self, center: &[f64], r: f64) -> Result<Vec<usize>> {
        self.check_center(center)?;
        if !(r >= 0.0) {
            return Err(Error::invalid("r", format!("radius must be >= 0, got {r}")));
        }
        let r2 = r * r;
        let mut out = Vec::new();
        self.radius_rec(0, center, r2, &mut out);
        out.sort_unstable();
        Ok(out)
    }

    fn radius_rec(&self, node: usize, c: &[f64], r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if sq_dist(self.cloud.point(i), c) <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let x = c[axis];
                if x <= value || sq(x - value) <= r2 {
                    self.radius_rec(left, c, r2, out);
                }
                if x >= value || sq(value - x) <= r2 {
                    self.radius_rec(right, c, r2, out);
                }
            }
        }
    }

    /// The `k` nearest indices, by ascending distance then ascending index.
    pub fn knn_query(&self, center: &[f64], k: usize) -> Result<Vec<usize>> {
        Ok(self.knn_with_sq_dist(center, k)?.into_iter().map(|(i, _)| i).collect())
    }

    /// As [`knn_query`](Self::knn_query), paired with squared distances.
    pub fn knn_with_sq_dist(&self, center: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        self.check_center(center)?;
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange { k, len: self.len() });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, center, k, &mut heap);
        let mut v: Vec<Candidate> = heap.into_vec();
        v.sort_unstable();
        Ok(v.into_iter().map(|c| (c.index, c.d2)).collect())
    }

    fn knn_rec(&self, node: usize, c: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Candidate {
                        d2: sq_dist(self.cloud.point(i), c),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let x = c[axis];
                let (near, far) = if x <= value { (left, right) } else { (right, left) };
                self.knn_rec(near, c, k, heap);
                let gap = sq(x - value);
                if heap.len() < k || gap <= heap.peek().unwrap().d2 {
                    self.knn_rec(far, c, k, heap);
                }
            }
        }
    }

    /// Squared distance from `center` to its nearest indexed point.
    pub fn nearest_sq_dist(&self, center: &[f64]) -> Result<f64> {
        Ok(self.knn_with_sq_dist(center, 1)?[0].1)
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn build_node(cloud: &PointCloud, order: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len(),
        });
        return id;
    }
    let axis = widest_axis(cloud, order);
    order.sort_unstable_by(|&a, &b| {
        cloud.point(a)[axis]
            .total_cmp(&cloud.point(b)[axis])
            .then(a.cmp(&b))
    });
    let mid = order.len() / 2;
    let value = cloud.point(order[mid])[axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(cloud, lo, offset, nodes);
    let right = build_node(cloud, hi, offset + mid, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

fn widest_axis(cloud: &PointCloud, order: &[usize]) -> usize {
    let dim = cloud.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in order {
        for (a, &x) in cloud.point(i).iter().enumerate() {
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
        }
    }
    (0..dim)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
        .unwrap_or(0)
}
