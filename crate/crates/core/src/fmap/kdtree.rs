//! Exact nearest-neighbour search over the rows of a point set.
//!
//! Spectral embeddings have many coordinates but low intrinsic dimension
//! (they are images of a surface). Each node of the tree carries both a
//! coordinate split and a bounding ball; the split bound is sharp near the
//! root, the ball bound adapts to the intrinsic dimension further down.

use rayon::prelude::*;

const LEAF: usize = 24;

struct Node {
    /// Rows `start..end` of the reordered point buffer.
    start: usize,
    end: usize,
    radius: f64,
    /// `(dim, value, left, right)` for inner nodes.
    split: Option<(usize, f64, usize, usize)>,
}

pub struct KdTree {
    dim: usize,
    /// Points in tree order.
    points: Vec<f64>,
    /// Original row index of each reordered point.
    index: Vec<u32>,
    centers: Vec<f64>,
    nodes: Vec<Node>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    /// `points` is row-major with `dim` coordinates per row.
    pub fn new(points: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim), "point buffer does not match dimension");
        let n = points.len() / dim;
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        let mut centers = Vec::new();
        if n > 0 {
            build(&points, dim, &mut order, 0, n, &mut nodes, &mut centers);
        }
        let mut sorted = Vec::with_capacity(points.len());
        for &i in &order {
            sorted.extend_from_slice(&points[i as usize * dim..(i as usize + 1) * dim]);
        }
        KdTree { dim, points: sorted, index: order, centers, nodes }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Nearest row to `q` as `(index, squared distance)`; ties go to the
    /// lowest index.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        assert_eq!(q.len(), self.dim, "query dimension");
        let mut best = (u32::MAX, f64::INFINITY);
        let mut off = vec![0.0; self.dim];
        self.search(0, q, &mut off, 0.0, &mut best);
        Some((best.0 as usize, best.1))
    }

    fn row(&self, pos: usize) -> &[f64] {
        &self.points[pos * self.dim..(pos + 1) * self.dim]
    }

    /// Lower bound on the squared distance from `q` to the node's ball, with
    /// slack for rounding so exact ties are never pruned.
    fn ball_bound(&self, node: usize, q: &[f64]) -> f64 {
        let c = &self.centers[node * self.dim..(node + 1) * self.dim];
        let d = dist2(c, q).sqrt();
        let r = self.nodes[node].radius;
        let gap = d - r - 1e-12 * (d + r);
        if gap > 0.0 {
            gap * gap
        } else {
            0.0
        }
    }

    fn search(&self, node: usize, q: &[f64], off: &mut [f64], bound: f64, best: &mut (u32, f64)) {
        let nd = &self.nodes[node];
        match nd.split {
            None => {
                for pos in nd.start..nd.end {
                    let row = self.row(pos);
                    let mut d2 = 0.0;
                    for (a, b) in row.iter().zip(q) {
                        let t = a - b;
                        d2 += t * t;
                        if d2 > best.1 {
                            break;
                        }
                    }
                    let i = self.index[pos];
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Some((dim, value, left, right)) => {
                let diff = q[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                if self.ball_bound(near, q) <= best.1 {
                    self.search(near, q, off, bound, best);
                }
                let old = off[dim];
                let far_bound = bound - old * old + diff * diff;
                if far_bound <= best.1 && self.ball_bound(far, q) <= best.1 {
                    off[dim] = diff;
                    self.search(far, q, off, far_bound, best);
                    off[dim] = old;
                }
            }
        }
    }

    /// Nearest row for every query row, in parallel, in query order.
    pub fn nearest_all(&self, queries: &[f64]) -> Vec<usize> {
        assert_eq!(queries.len() % self.dim, 0);
        queries.par_chunks(self.dim).map(|q| self.nearest(q).map_or(usize::MAX, |r| r.0)).collect()
    }
}

fn build(
    points: &[f64],
    dim: usize,
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
    centers: &mut Vec<f64>,
) -> usize {
    let id = nodes.len();
    let count = (end - start) as f64;
    let mut center = vec![0.0; dim];
    let (mut lo, mut hi) = (vec![f64::INFINITY; dim], vec![f64::NEG_INFINITY; dim]);
    for &i in &order[start..end] {
        let row = &points[i as usize * dim..(i as usize + 1) * dim];
        for d in 0..dim {
            center[d] += row[d];
            lo[d] = lo[d].min(row[d]);
            hi[d] = hi[d].max(row[d]);
        }
    }
    center.iter_mut().for_each(|c| *c /= count);
    let radius = order[start..end]
        .iter()
        .map(|&i| dist2(&points[i as usize * dim..(i as usize + 1) * dim], &center))
        .fold(0.0f64, f64::max)
        .sqrt();
    centers.extend_from_slice(&center);
    nodes.push(Node { start, end, radius, split: None });
    let (sdim, spread) = (0..dim).map(|d| (d, hi[d] - lo[d])).fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
    if end - start <= LEAF || spread <= 0.0 {
        return id;
    }
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        points[a as usize * dim + sdim].total_cmp(&points[b as usize * dim + sdim]).then(a.cmp(&b))
    });
    let value = points[order[mid] as usize * dim + sdim];
    let left = build(points, dim, order, start, mid, nodes, centers);
    let right = build(points, dim, order, mid, end, nodes, centers);
    nodes[id].split = Some((sdim, value, left, right));
    id
}

/// Brute-force nearest row with the same tie rule; test oracle.
pub fn nearest_brute(points: &[f64], dim: usize, q: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in points.chunks(dim).enumerate() {
        let d2 = dist2(row, q);
        if best.is_none_or(|b| d2 < b.1) {
            best = Some((i, d2));
        }
    }
    best
}
