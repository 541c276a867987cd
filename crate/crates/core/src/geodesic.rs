//! Edge-graph geodesics by front propagation.
//!
//! Distances are shortest edge-path lengths (Dijkstra). A [`DistanceField`]
//! stores, per vertex, the distance to the nearest source and which source
//! that is. [`propagate_update`] grows the source set by one, visiting only the
//! vertices that the new source claims.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Marker in [`DistanceField::source`] for vertices no front has reached.
pub const UNREACHED: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    pub dist: Vec<f64>,
    pub source: Vec<usize>,
}

impl DistanceField {
    pub fn unreached(n: usize) -> Self {
        DistanceField { dist: vec![f64::INFINITY; n], source: vec![UNREACHED; n] }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.source[v] == v
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on vertex index for a stable settle order
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable scratch space for repeated propagations on one mesh.
#[derive(Default)]
pub struct Propagator {
    heap: BinaryHeap<Entry>,
    stamp: Vec<u32>,
    generation: u32,
}

impl Propagator {
    pub fn new(n: usize) -> Self {
        Propagator { heap: BinaryHeap::new(), stamp: vec![0; n], generation: 0 }
    }

    fn next_generation(&mut self, n: usize) {
        if self.stamp.len() != n {
            self.stamp = vec![0; n];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
    }

    /// Adds `new_source` to the field and returns the vertices whose distance
    /// or source changed. Vertices at equal distance stay with their current
    /// source.
    pub fn add_source(
        &mut self,
        mesh: &TriMesh,
        new_source: usize,
        field: &mut DistanceField,
        touched: &mut Vec<usize>,
    ) -> Result<()> {
        let n = mesh.num_vertices();
        if new_source >= n {
            return Err(Error::InvalidInput(format!("source {new_source} out of range")));
        }
        if field.len() != n {
            return Err(Error::Dimension("distance field does not match mesh".into()));
        }
        if field.is_source(new_source) {
            return Err(Error::InvalidInput(format!("vertex {new_source} is already a source")));
        }
        self.next_generation(n);
        touched.clear();
        self.heap.clear();
        field.dist[new_source] = 0.0;
        field.source[new_source] = new_source;
        self.stamp[new_source] = self.generation;
        touched.push(new_source);
        self.heap.push(Entry { dist: 0.0, vertex: new_source as u32 });
        while let Some(Entry { dist: d, vertex }) = self.heap.pop() {
            let v = vertex as usize;
            if d > field.dist[v] || field.source[v] != new_source {
                continue;
            }
            for (u, e) in mesh.neighbors(v) {
                let cand = d + mesh.edge_length(e);
                if cand < field.dist[u] {
                    field.dist[u] = cand;
                    field.source[u] = new_source;
                    if self.stamp[u] != self.generation {
                        self.stamp[u] = self.generation;
                        touched.push(u);
                    }
                    self.heap.push(Entry { dist: cand, vertex: u as u32 });
                }
            }
        }
        Ok(())
    }

    /// Distance between two vertices, exploring only the ball around `from`
    /// that reaches `to`. Infinite when they lie in different components.
    pub fn pair_distance(&mut self, mesh: &TriMesh, from: usize, to: usize, scratch: &mut Vec<f64>) -> f64 {
        if from == to {
            return 0.0;
        }
        let n = mesh.num_vertices();
        if scratch.len() != n {
            *scratch = vec![f64::INFINITY; n];
        }
        self.next_generation(n);
        self.heap.clear();
        let mut visited: Vec<usize> = vec![from];
        scratch[from] = 0.0;
        self.heap.push(Entry { dist: 0.0, vertex: from as u32 });
        let mut result = f64::INFINITY;
        while let Some(Entry { dist: d, vertex }) = self.heap.pop() {
            let v = vertex as usize;
            if d > scratch[v] {
                continue;
            }
            if v == to {
                result = d;
                break;
            }
            for (u, e) in mesh.neighbors(v) {
                let cand = d + mesh.edge_length(e);
                if cand < scratch[u] {
                    if scratch[u] == f64::INFINITY {
                        visited.push(u);
                    }
                    scratch[u] = cand;
                    self.heap.push(Entry { dist: cand, vertex: u as u32 });
                }
            }
        }
        for v in visited {
            scratch[v] = f64::INFINITY;
        }
        result
    }
}

/// Distances from one vertex to every vertex of its component.
pub fn single_source(mesh: &TriMesh, source: usize) -> Result<DistanceField> {
    let mut field = DistanceField::unreached(mesh.num_vertices());
    let mut touched = Vec::new();
    Propagator::new(mesh.num_vertices()).add_source(mesh, source, &mut field, &mut touched)?;
    Ok(field)
}

/// Adds one source to an existing field; returns the touched vertices.
pub fn propagate_update(mesh: &TriMesh, new_source: usize, state: &mut DistanceField) -> Result<Vec<usize>> {
    let mut touched = Vec::new();
    Propagator::new(mesh.num_vertices()).add_source(mesh, new_source, state, &mut touched)?;
    Ok(touched)
}

/// Field of a whole source set, built by adding sources in order.
pub fn multi_source(mesh: &TriMesh, sources: &[usize]) -> Result<DistanceField> {
    let mut field = DistanceField::unreached(mesh.num_vertices());
    let mut prop = Propagator::new(mesh.num_vertices());
    let mut touched = Vec::new();
    for &s in sources {
        prop.add_source(mesh, s, &mut field, &mut touched)?;
    }
    Ok(field)
}

/// Double-sweep estimate of the graph diameter of each component, reported as
/// the maximum over components.
pub fn approximate_diameter(mesh: &TriMesh) -> f64 {
    let n = mesh.num_vertices();
    let mut seen = vec![false; n];
    let mut best: f64 = 0.0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let first = single_source(mesh, start).expect("in range");
        let mut far = start;
        for v in 0..n {
            if first.dist[v].is_finite() {
                seen[v] = true;
                if first.dist[v] > first.dist[far] {
                    far = v;
                }
            }
        }
        let second = single_source(mesh, far).expect("in range");
        let d = second.dist.iter().filter(|d| d.is_finite()).fold(0.0f64, |a, &b| a.max(b));
        best = best.max(d);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn strip_distances() {
        // a - b - c along a strip of two triangles with unit spacing
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
            vec![[0, 1, 3], [1, 2, 3]],
        )
        .unwrap();
        let f = single_source(&m, 0).unwrap();
        assert_eq!(&f.dist[..3], &[0.0, 1.0, 2.0]);
        assert_eq!(f.source, vec![0; 4]);
    }

    #[test]
    fn unreachable_component_is_infinite() {
        let m = shapes::disjoint_union(&shapes::octahedron(), &shapes::octahedron().translated([4.0, 0.0, 0.0]));
        let f = single_source(&m, 2).unwrap();
        assert_eq!(f.dist[2], 0.0);
        assert!(f.dist[6..].iter().all(|d| d.is_infinite()));
        assert!(f.source[6..].iter().all(|&s| s == UNREACHED));
        let touched = propagate_update(&m, 9, &mut f.clone()).unwrap();
        let mut t = touched.clone();
        t.sort();
        assert_eq!(t, (6..12).collect::<Vec<_>>());
    }

    #[test]
    fn ties_keep_incumbent() {
        // octahedron: poles 4 and 5, the equator is equidistant from both
        let m = shapes::octahedron();
        let mut f = single_source(&m, 4).unwrap();
        let before = f.clone();
        let touched = propagate_update(&m, 5, &mut f).unwrap();
        assert_eq!(touched, vec![5]);
        for v in 0..4 {
            assert_eq!(f.source[v], 4);
            assert_eq!(f.dist[v], before.dist[v]);
        }
    }

    #[test]
    fn duplicate_source_rejected() {
        let m = shapes::octahedron();
        let mut f = single_source(&m, 0).unwrap();
        assert!(propagate_update(&m, 0, &mut f).is_err());
    }

    #[test]
    fn pair_distance_matches_field() {
        let m = shapes::icosphere(2);
        let f = single_source(&m, 7).unwrap();
        let mut p = Propagator::new(m.num_vertices());
        let mut scratch = Vec::new();
        for v in [0, 7, 55, 100, 161] {
            assert_eq!(p.pair_distance(&m, 7, v, &mut scratch), f.dist[v]);
        }
    }
}
