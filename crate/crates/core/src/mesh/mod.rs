//! Indexed triangle meshes with precomputed adjacency.
//!
//! A [`TriMesh`] is immutable once built. Construction derives the unique edge
//! list, vertex-to-triangle and edge-to-triangle incidence, and a vertex
//! neighbourhood table that the front propagation code walks directly.

pub mod io;
pub mod shapes;
pub mod topology;

pub use io::{load_mesh, save_mesh, MeshFormat};
pub use topology::{
    connected_components, degenerate_triangles, region_euler_characteristic, region_subregion_counts,
    remove_small_components, validate_manifold, validate_simplicial, ComponentStats, Components, Defect,
    SubregionCounts,
};

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

pub type Point3 = [f64; 3];

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    edges: Vec<[u32; 2]>,
    edge_lengths: Vec<f64>,
    /// `tri_edges[t][k]` is the edge joining corners `k` and `(k + 1) % 3`.
    tri_edges: Vec<[u32; 3]>,
    vt_offsets: Vec<u32>,
    vt_items: Vec<u32>,
    et_offsets: Vec<u32>,
    et_items: Vec<u32>,
    /// Per vertex, `(neighbour, edge)` sorted by neighbour.
    vv_offsets: Vec<u32>,
    vv_items: Vec<(u32, u32)>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

impl TriMesh {
    /// Builds a mesh, checking that every triangle has three distinct in-range
    /// corners. Manifoldness is not required here; see [`validate_manifold`].
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if n >= NONE as usize || triangles.len() >= NONE as usize {
            return Err(Error::InvalidInput("mesh too large for 32-bit indices".into()));
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::Parse(format!("triangle {t} references vertex {v}, mesh has {n}")));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Parse(format!("triangle {t} repeats a vertex: {tri:?}")));
            }
            tris.push([tri[0] as u32, tri[1] as u32, tri[2] as u32]);
        }
        for p in &vertices {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse("non-finite vertex coordinate".into()));
            }
        }
        Ok(Self::build(vertices, tris))
    }

    fn build(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Self {
        let n = vertices.len();
        let nt = triangles.len();

        // edges: sort (min, max, triangle, side) and collapse duplicates
        let mut sides: Vec<(u32, u32, u32, u8)> = Vec::with_capacity(3 * nt);
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                sides.push((a.min(b), a.max(b), t as u32, k as u8));
            }
        }
        sides.sort_unstable();
        let mut edges: Vec<[u32; 2]> = Vec::with_capacity(sides.len() / 2 + 1);
        let mut tri_edges = vec![[NONE; 3]; nt];
        let mut et_offsets = vec![0u32];
        let mut et_items = Vec::with_capacity(sides.len());
        for (i, &(a, b, t, k)) in sides.iter().enumerate() {
            if i == 0 || (sides[i - 1].0, sides[i - 1].1) != (a, b) {
                if i > 0 {
                    et_offsets.push(et_items.len() as u32);
                }
                edges.push([a, b]);
            }
            let e = (edges.len() - 1) as u32;
            tri_edges[t as usize][k as usize] = e;
            et_items.push(t);
        }
        if !edges.is_empty() {
            et_offsets.push(et_items.len() as u32);
        }

        let edge_lengths = edges.iter().map(|&[a, b]| dist(&vertices[a as usize], &vertices[b as usize])).collect();

        let mut vt_count = vec![0u32; n + 1];
        for tri in &triangles {
            for &v in tri {
                vt_count[v as usize + 1] += 1;
            }
        }
        let vt_offsets = prefix_sum(vt_count);
        let mut fill = vt_offsets.clone();
        let mut vt_items = vec![0u32; 3 * nt];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vt_items[fill[v as usize] as usize] = t as u32;
                fill[v as usize] += 1;
            }
        }

        let mut vv_count = vec![0u32; n + 1];
        for &[a, b] in &edges {
            vv_count[a as usize + 1] += 1;
            vv_count[b as usize + 1] += 1;
        }
        let vv_offsets = prefix_sum(vv_count);
        let mut fill = vv_offsets.clone();
        let mut vv_items = vec![(0u32, 0u32); 2 * edges.len()];
        for (e, &[a, b]) in edges.iter().enumerate() {
            vv_items[fill[a as usize] as usize] = (b, e as u32);
            fill[a as usize] += 1;
            vv_items[fill[b as usize] as usize] = (a, e as u32);
            fill[b as usize] += 1;
        }
        for v in 0..n {
            let (s, e) = (vv_offsets[v] as usize, vv_offsets[v + 1] as usize);
            vv_items[s..e].sort_unstable();
        }

        TriMesh {
            vertices,
            triangles,
            edges,
            edge_lengths,
            tri_edges,
            vt_offsets,
            vt_items,
            et_offsets,
            et_items,
            vv_offsets,
            vv_items,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point3 {
        self.vertices[v]
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        let [a, b, c] = self.triangles[t];
        [a as usize, b as usize, c as usize]
    }

    pub fn triangles(&self) -> impl ExactSizeIterator<Item = [usize; 3]> + '_ {
        self.triangles.iter().map(|&[a, b, c]| [a as usize, b as usize, c as usize])
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        let [a, b] = self.edges[e];
        [a as usize, b as usize]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = [usize; 2]> + '_ {
        self.edges.iter().map(|&[a, b]| [a as usize, b as usize])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        let [a, b, c] = self.tri_edges[t];
        [a as usize, b as usize, c as usize]
    }

    pub fn vertex_triangles(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        let (s, e) = (self.vt_offsets[v] as usize, self.vt_offsets[v + 1] as usize);
        self.vt_items[s..e].iter().map(|&t| t as usize)
    }

    pub fn edge_triangles(&self, e: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        let (s, f) = (self.et_offsets[e] as usize, self.et_offsets[e + 1] as usize);
        self.et_items[s..f].iter().map(|&t| t as usize)
    }

    pub fn edge_triangle_count(&self, e: usize) -> usize {
        (self.et_offsets[e + 1] - self.et_offsets[e]) as usize
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangle_count(e) == 1
    }

    /// Neighbouring vertices of `v` together with the connecting edge index,
    /// in ascending neighbour order.
    pub fn neighbors(&self, v: usize) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        let (s, e) = (self.vv_offsets[v] as usize, self.vv_offsets[v + 1] as usize);
        self.vv_items[s..e].iter().map(|&(u, e)| (u as usize, e as usize))
    }

    pub fn degree(&self, v: usize) -> usize {
        (self.vv_offsets[v + 1] - self.vv_offsets[v]) as usize
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let (s, e) = (self.vv_offsets[a] as usize, self.vv_offsets[a + 1] as usize);
        let items = &self.vv_items[s..e];
        items.binary_search_by_key(&(b as u32), |&(u, _)| u).ok().map(|i| items[i].1 as usize)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.neighbors(v).any(|(_, e)| self.is_boundary_edge(e))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// `|V| - |E| + |T|` of the whole mesh.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Returns a copy with vertex positions replaced; connectivity unchanged.
    pub fn with_vertices(&self, vertices: Vec<Point3>) -> Result<TriMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Dimension(format!(
                "expected {} positions, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self::build(vertices, self.triangles.clone()))
    }

    /// Drops vertices that no triangle references. Returns the compacted mesh
    /// and, for each old vertex, its new index.
    pub fn drop_isolated(&self) -> (TriMesh, Vec<Option<usize>>) {
        let mut map = vec![None; self.num_vertices()];
        let mut verts = Vec::with_capacity(self.num_vertices());
        for v in 0..self.num_vertices() {
            if self.vt_offsets[v + 1] > self.vt_offsets[v] {
                map[v] = Some(verts.len());
                verts.push(self.vertices[v]);
            }
        }
        let tris = self.triangles.iter().map(|t| t.map(|v| map[v as usize].unwrap() as u32)).collect();
        (Self::build(verts, tris), map)
    }

    /// Keeps the listed vertices (in the given order) and every triangle whose
    /// corners all survive.
    pub fn submesh(&self, keep: &[usize]) -> (TriMesh, Vec<Option<usize>>) {
        let mut map = vec![None; self.num_vertices()];
        for (i, &v) in keep.iter().enumerate() {
            map[v] = Some(i);
        }
        let verts = keep.iter().map(|&v| self.vertices[v]).collect();
        let tris = self
            .triangles
            .iter()
            .filter_map(|t| Some([map[t[0] as usize]? as u32, map[t[1] as usize]? as u32, map[t[2] as usize]? as u32]))
            .collect();
        (Self::build(verts, tris), map)
    }
}

fn prefix_sum(mut counts: Vec<u32>) -> Vec<u32> {
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    counts
}

pub fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &Point3, b: &Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    norm(&sub(a, b))
}

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * norm(&cross(&sub(b, a), &sub(c, a)))
}

#[cfg(test)]
mod tests {
    use super::shapes;
    use super::*;

    #[test]
    fn single_triangle_counts() {
        let m = TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (3, 3, 1));
        assert!((0..3).all(|e| m.is_boundary_edge(e)));
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn octahedron_adjacency() {
        let m = shapes::octahedron();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (6, 12, 8));
        assert_eq!(m.euler_characteristic(), 2);
        for v in 0..6 {
            assert_eq!(m.degree(v), 4);
            assert_eq!(m.vertex_triangles(v).len(), 4);
        }
        for e in 0..12 {
            assert_eq!(m.edge_triangle_count(e), 2);
            let [a, b] = m.edge(e);
            assert_eq!(m.find_edge(a, b), Some(e));
            assert_eq!(m.find_edge(b, a), Some(e));
        }
        for t in 0..8 {
            let tri = m.triangle(t);
            for (k, e) in m.triangle_edges(t).into_iter().enumerate() {
                let [a, b] = m.edge(e);
                let (x, y) = (tri[k], tri[(k + 1) % 3]);
                assert_eq!((a, b), (x.min(y), x.max(y)));
            }
        }
    }

    #[test]
    fn rejects_bad_triangles() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn drop_isolated_preserves_order() {
        let m = TriMesh::new(vec![[9.0; 3], [0.0; 3], [1.0, 0.0, 0.0], [5.0; 3], [0.0, 1.0, 0.0]], vec![[1, 2, 4]])
            .unwrap();
        let (d, map) = m.drop_isolated();
        assert_eq!(d.num_vertices(), 3);
        assert_eq!(map, vec![None, Some(0), Some(1), None, Some(2)]);
        assert_eq!(d.vertex(2), [0.0, 1.0, 0.0]);
    }
}
