//! Shared corpus and independent oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use meshcorr::mesh::{shapes, TriMesh};

pub fn named(name: &str, m: TriMesh) -> (String, TriMesh) {
    (name.to_string(), m)
}

/// Meshes of up to 2k vertices covering closed, bordered, higher-genus,
/// disconnected and sliver-heavy cases.
pub fn small_corpus() -> Vec<(String, TriMesh)> {
    vec![
        named("octahedron", shapes::octahedron()),
        named("icosahedron", shapes::icosahedron()),
        named("icosphere2", shapes::icosphere(2)),
        named("icosphere3", shapes::icosphere(3)),
        named("torus", shapes::torus(1.0, 0.4, 40, 16)),
        named("genus2", shapes::genus2(3)),
        named("grid_patch", shapes::grid_patch(30, 20, 0.1)),
        named(
            "two_components",
            shapes::disjoint_union(&shapes::icosphere(2), &shapes::torus(1.0, 0.3, 20, 10).translated([4.0, 0.0, 0.0])),
        ),
        named("uv_sphere", shapes::uv_sphere(30, 16)),
        named("bumpy_tube", shapes::bumpy_tube(16, 40, 0.5)),
    ]
}

/// The remeshing corpus: the topological zoo at realistic sizes.
pub fn full_corpus() -> Vec<(String, TriMesh)> {
    vec![
        named("icosphere3", shapes::icosphere(3)),
        named("icosphere4", shapes::icosphere(4)),
        named("icosphere5", shapes::icosphere(5)),
        named("torus", shapes::torus(1.0, 0.35, 240, 90)),
        named("genus2", shapes::genus2(12)),
        named("grid_patch", shapes::grid_patch(150, 110, 0.01)),
        named(
            "two_components",
            shapes::disjoint_union(
                &shapes::icosphere(5),
                &shapes::torus(1.0, 0.35, 200, 70).translated([4.0, 0.0, 0.0]),
            ),
        ),
        named("uv_sphere_slivers", shapes::uv_sphere(300, 150)),
        named("bumpy_tube", shapes::bumpy_tube(64, 200, 0.6)),
        named("geodesic_sphere_150k", shapes::geodesic_sphere(122)),
        named("geodesic_sphere_300k", shapes::geodesic_sphere(173)),
    ]
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn adjacency(m: &TriMesh) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); m.num_vertices()];
    for (e, [a, b]) in m.edges().enumerate() {
        let l = m.edge_length(e);
        adj[a].push((b, l));
        adj[b].push((a, l));
    }
    adj
}

/// Textbook Dijkstra seeded with every source at once.
pub fn batch_dijkstra(m: &TriMesh, sources: &[usize]) -> Vec<f64> {
    let adj = adjacency(m);
    let mut d = vec![f64::INFINITY; m.num_vertices()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        d[s] = 0.0;
        heap.push(Item(0.0, s));
    }
    while let Some(Item(du, u)) = heap.pop() {
        if du > d[u] {
            continue;
        }
        for &(v, l) in &adj[u] {
            let nd = du + l;
            if nd < d[v] {
                d[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    d
}

/// Farthest-point sampling by full rescan: after each pick the distance
/// field is the pointwise minimum of single-source fields, and the next
/// sample is the lowest-index non-sample attaining the maximum.
pub fn naive_fps(m: &TriMesh, first: usize, count: usize) -> Vec<usize> {
    let n = m.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut is_sample = vec![false; n];
    let mut out = Vec::new();
    let mut next = first;
    while out.len() < count {
        out.push(next);
        is_sample[next] = true;
        for (d, e) in dist.iter_mut().zip(batch_dijkstra(m, &[next])) {
            *d = d.min(e);
        }
        let mut best: Option<(usize, f64)> = None;
        for v in 0..n {
            if !is_sample[v] && best.is_none_or(|b| dist[v] > b.1) {
                best = Some((v, dist[v]));
            }
        }
        match best {
            Some((v, _)) => next = v,
            None => break,
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Point {
    Centroid(usize),
    Midpoint(usize),
    Corner(usize),
}

/// Euler characteristic of the union of dual cells of `region`, built as an
/// explicit cell complex: each dual cell is the polygon through the centroids
/// of its incident triangles and the midpoints of its incident edges, closed
/// off at the surface boundary through the primal vertex itself.
pub fn explicit_dual_euler(m: &TriMesh, region: &[usize]) -> i64 {
    let mut points: HashSet<Point> = HashSet::new();
    let mut segments: HashSet<(Point, Point)> = HashSet::new();
    let mut cells: HashSet<usize> = HashSet::new();
    let mut seg = |a: Point, b: Point, points: &mut HashSet<Point>| {
        points.insert(a);
        points.insert(b);
        segments.insert(if a < b { (a, b) } else { (b, a) });
    };
    for &v in region {
        if !cells.insert(v) {
            continue;
        }
        for t in m.vertex_triangles(v) {
            for e in m.triangle_edges(t) {
                if m.edge(e).contains(&v) {
                    seg(Point::Centroid(t), Point::Midpoint(e), &mut points);
                }
            }
        }
        for (_, e) in m.neighbors(v) {
            if m.is_boundary_edge(e) {
                seg(Point::Midpoint(e), Point::Corner(v), &mut points);
            }
        }
    }
    points.len() as i64 - segments.len() as i64 + cells.len() as i64
}

/// Per connected component: (Euler characteristic, closed?), sorted.
pub fn component_signature(m: &TriMesh) -> Vec<(i64, bool)> {
    let comps = meshcorr::mesh::connected_components(m);
    let k = comps.count();
    let (mut v, mut e, mut f, mut closed) = (vec![0i64; k], vec![0i64; k], vec![0i64; k], vec![true; k]);
    for l in &comps.label {
        v[*l] += 1;
    }
    for (i, [a, _]) in m.edges().enumerate() {
        e[comps.label[a]] += 1;
        if m.is_boundary_edge(i) {
            closed[comps.label[a]] = false;
        }
    }
    for [a, _, _] in m.triangles() {
        f[comps.label[a]] += 1;
    }
    let mut sig: Vec<(i64, bool)> = (0..k).map(|c| (v[c] - e[c] + f[c], closed[c])).collect();
    sig.sort_unstable();
    sig
}
