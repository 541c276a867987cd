//! Bounding-volume hierarchy over triangles for exact closest-point queries.

use crate::mesh::{dot, sub, Point3, TriMesh};

const LEAF: usize = 4;

/// Closest point on triangle `abc` to `p` as barycentric weights of `a, b, c`
/// (Voronoi-region walk; vertex and edge regions return exact zeros).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> [f64; 3] {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = va + vb + vc;
    if denom <= 0.0 || !denom.is_finite() {
        // degenerate triangle whose vertex/edge tests all failed
        return [1.0, 0.0, 0.0];
    }
    let v = vb / denom;
    let w = vc / denom;
    let u = 1.0 - v - w;
    if u < 0.0 {
        let s = v + w;
        return [0.0, v / s, w / s];
    }
    [u, v, w]
}

pub fn bary_point(bary: &[f64; 3], a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    std::array::from_fn(|k| bary[0] * a[k] + bary[1] * b[k] + bary[2] * c[k])
}

fn dist2(a: &Point3, b: &Point3) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

struct Node {
    lo: Point3,
    hi: Point3,
    /// Triangles `order[start..end]` lie below this node.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

pub struct TriangleTree<'a> {
    mesh: &'a TriMesh,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl<'a> TriangleTree<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let n = mesh.num_triangles();
        let centroids: Vec<Point3> = mesh
            .triangles()
            .map(|[a, b, c]| {
                let (a, b, c) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
                std::array::from_fn(|k| (a[k] + b[k] + c[k]) / 3.0)
            })
            .collect();
        let mut tree = TriangleTree { mesh, order: (0..n as u32).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(&centroids, 0, n);
        }
        tree
    }

    fn build(&mut self, centroids: &[Point3], start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut clo = [f64::INFINITY; 3];
        let mut chi = [f64::NEG_INFINITY; 3];
        for &t in &self.order[start..end] {
            for v in self.mesh.triangle(t as usize) {
                let p = self.mesh.vertex(v);
                for k in 0..3 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let c = centroids[t as usize];
            for k in 0..3 {
                clo[k] = clo[k].min(c[k]);
                chi[k] = chi[k].max(c[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, start, end, children: None });
        if end - start <= LEAF {
            return id;
        }
        let axis = (0..3).max_by(|&a, &b| (chi[a] - clo[a]).total_cmp(&(chi[b] - clo[b]))).unwrap();
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]).then(a.cmp(&b))
        });
        let left = self.build(centroids, start, mid);
        let right = self.build(centroids, mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    fn box_dist2(&self, node: usize, p: &Point3) -> f64 {
        let n = &self.nodes[node];
        (0..3)
            .map(|k| {
                let d = (n.lo[k] - p[k]).max(p[k] - n.hi[k]).max(0.0);
                d * d
            })
            .sum()
    }

    /// Closest triangle to `p` as `(triangle, barycentric, squared distance)`;
    /// equidistant triangles resolve to the lowest index.
    pub fn closest(&self, p: &Point3) -> Option<(usize, [f64; 3], f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: (usize, [f64; 3], f64) = (usize::MAX, [1.0, 0.0, 0.0], f64::INFINITY);
        let mut stack = vec![(0usize, self.box_dist2(0, p))];
        while let Some((node, bound)) = stack.pop() {
            if bound > best.2 {
                continue;
            }
            let n = &self.nodes[node];
            match n.children {
                None => {
                    for &t in &self.order[n.start..n.end] {
                        let t = t as usize;
                        let cand = closest_on(self.mesh, t, p);
                        if cand.1 < best.2 || (cand.1 == best.2 && t < best.0) {
                            best = (t, cand.0, cand.1);
                        }
                    }
                }
                Some((l, r)) => {
                    let (dl, dr) = (self.box_dist2(l, p), self.box_dist2(r, p));
                    // push the nearer child last so it is searched first
                    if dl <= dr {
                        stack.push((r, dr));
                        stack.push((l, dl));
                    } else {
                        stack.push((l, dl));
                        stack.push((r, dr));
                    }
                }
            }
        }
        Some(best)
    }
}

fn closest_on(mesh: &TriMesh, t: usize, p: &Point3) -> ([f64; 3], f64) {
    let [a, b, c] = mesh.triangle(t).map(|v| mesh.vertex(v));
    let bary = closest_point_on_triangle(p, &a, &b, &c);
    (bary, dist2(&bary_point(&bary, &a, &b, &c), p))
}

/// Linear scan with the same tie rule; test oracle.
pub fn closest_brute(mesh: &TriMesh, p: &Point3) -> Option<(usize, [f64; 3], f64)> {
    let mut best: Option<(usize, [f64; 3], f64)> = None;
    for t in 0..mesh.num_triangles() {
        let (bary, d2) = closest_on(mesh, t, p);
        if best.is_none_or(|b| d2 < b.2) {
            best = Some((t, bary, d2));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_regions() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(closest_point_on_triangle(&[-1.0, -1.0, 3.0], &a, &b, &c), [1.0, 0.0, 0.0]);
        assert_eq!(closest_point_on_triangle(&[2.0, -0.5, 0.0], &a, &b, &c), [0.0, 1.0, 0.0]);
        assert_eq!(closest_point_on_triangle(&[0.5, -1.0, 0.0], &a, &b, &c), [0.5, 0.5, 0.0]);
        let w = closest_point_on_triangle(&[1.0, 1.0, -2.0], &a, &b, &c);
        assert!((w[0]).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = closest_point_on_triangle(&[0.25, 0.25, 1.0], &a, &b, &c);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mesh in [shapes::icosphere(2), shapes::torus(1.0, 0.3, 24, 10), shapes::grid_patch(9, 7, 0.05)] {
            let tree = TriangleTree::new(&mesh);
            for _ in 0..1000 {
                let p = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
                let (t, bary, d) = tree.closest(&p).unwrap();
                let (bt, _, bd) = closest_brute(&mesh, &p).unwrap();
                assert!((d - bd).abs() <= 1e-12, "{d} vs {bd}");
                assert_eq!(t, bt);
                assert!(bary.iter().all(|&w| w >= 0.0) && (bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
