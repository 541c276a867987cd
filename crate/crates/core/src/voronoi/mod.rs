//! Joint geodesic farthest-point sampling and Voronoi decomposition.
//!
//! Texels are vertex sets (dual faces). The state keeps the distance field
//! and a fixed-size max-heap over the same distances, so the next farthest
//! vertex is available in `O(log |V|)` after every front propagation.

mod heap;

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use heap::IndexedMaxHeap;

use crate::error::{Error, Result};
use crate::geodesic::{DistanceField, Propagator, UNREACHED};
use crate::mesh::TriMesh;

const NOT_A_SAMPLE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seed {
    Vertex(usize),
    /// First sample drawn uniformly from a ChaCha8 stream with this seed.
    Random(u64),
}

#[derive(Clone)]
pub struct VoronoiState {
    samples: Vec<usize>,
    field: DistanceField,
    heap: IndexedMaxHeap,
    sample_index: Vec<usize>,
    propagator_touched: Vec<usize>,
}

impl std::fmt::Debug for VoronoiState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoronoiState")
            .field("samples", &self.samples.len())
            .field("vertices", &self.field.len())
            .finish()
    }
}

impl VoronoiState {
    pub fn init(mesh: &TriMesh, seed: Seed) -> Result<Self> {
        let n = mesh.num_vertices();
        if n == 0 {
            return Err(Error::InvalidInput("cannot sample an empty mesh".into()));
        }
        let first = match seed {
            Seed::Vertex(v) if v < n => v,
            Seed::Vertex(v) => return Err(Error::InvalidInput(format!("seed vertex {v} out of range"))),
            Seed::Random(s) => ChaCha8Rng::seed_from_u64(s).gen_range(0..n),
        };
        let mut field = DistanceField::unreached(n);
        let mut touched = Vec::new();
        Propagator::new(n).add_source(mesh, first, &mut field, &mut touched)?;
        let heap = IndexedMaxHeap::from_keys(field.dist.clone());
        let mut sample_index = vec![NOT_A_SAMPLE; n];
        sample_index[first] = 0;
        Ok(VoronoiState { samples: vec![first], field, heap, sample_index, propagator_touched: touched })
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn field(&self) -> &DistanceField {
        &self.field
    }

    pub fn heap(&self) -> &IndexedMaxHeap {
        &self.heap
    }

    pub fn num_texels(&self) -> usize {
        self.samples.len()
    }

    pub fn is_sample(&self, v: usize) -> bool {
        self.sample_index[v] != NOT_A_SAMPLE
    }

    /// Texel id (index into `samples`) of vertex `v`, if reached.
    pub fn texel(&self, v: usize) -> Option<usize> {
        match self.field.source[v] {
            UNREACHED => None,
            s => Some(self.sample_index[s]),
        }
    }

    /// Texel id per vertex; `usize::MAX` where unreached.
    pub fn labels(&self) -> Vec<usize> {
        self.field.source.iter().map(|&s| if s == UNREACHED { usize::MAX } else { self.sample_index[s] }).collect()
    }

    /// Adds vertex `p` as a generator and returns the vertices it claimed.
    pub fn add_sample(&mut self, mesh: &TriMesh, p: usize) -> Result<Vec<usize>> {
        self.add_sample_with(mesh, p, &mut Propagator::new(mesh.num_vertices()))?;
        Ok(self.propagator_touched.clone())
    }

    fn add_sample_with(&mut self, mesh: &TriMesh, p: usize, prop: &mut Propagator) -> Result<usize> {
        if p >= self.field.len() {
            return Err(Error::InvalidInput(format!("sample {p} out of range")));
        }
        if self.is_sample(p) {
            return Err(Error::InvalidInput(format!("vertex {p} is already a sample")));
        }
        self.heap.set_key(p, 0.0);
        prop.add_source(mesh, p, &mut self.field, &mut self.propagator_touched)?;
        for &v in &self.propagator_touched {
            self.heap.set_key(v, self.field.dist[v]);
        }
        self.sample_index[p] = self.samples.len();
        self.samples.push(p);
        Ok(self.propagator_touched.len())
    }

    /// Lowest-index vertex among non-samples with the largest distance.
    pub fn farthest(&self) -> Option<usize> {
        let (v, key) = self.heap.find_max()?;
        if !self.is_sample(v) {
            return Some(v);
        }
        // only when every vertex sits at distance zero from the sample set
        debug_assert_eq!(key, 0.0);
        (0..self.field.len()).find(|&u| !self.is_sample(u))
    }

    /// Adds `count` farthest-point samples. Returns the total number of
    /// vertices touched by the propagations.
    pub fn extend_fps(&mut self, mesh: &TriMesh, count: usize) -> Result<usize> {
        let mut prop = Propagator::new(mesh.num_vertices());
        let mut work = 0;
        for _ in 0..count {
            let p = self.farthest().ok_or_else(|| Error::InvalidInput("no vertex left to sample".into()))?;
            work += self.add_sample_with(mesh, p, &mut prop)?;
        }
        Ok(work)
    }

    /// Mirror coherence, sample self-ownership and heap order.
    pub fn check_invariants(&self) -> bool {
        self.heap.check_invariants()
            && self.heap.keys() == self.field.dist.as_slice()
            && self.samples.iter().all(|&p| self.field.dist[p] == 0.0 && self.field.source[p] == p)
            && self.field.source.iter().all(|&s| s == UNREACHED || self.sample_index[s] != NOT_A_SAMPLE)
    }

    pub fn write_labels(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(self.field.len() * 8);
        for (v, l) in self.labels().into_iter().enumerate() {
            if l == usize::MAX {
                writeln!(out, "{v} -1").unwrap();
            } else {
                writeln!(out, "{v} {l}").unwrap();
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Farthest-point sampling of `s` vertices with the induced Voronoi texels.
pub fn fps(mesh: &TriMesh, s: usize, seed: Seed) -> Result<VoronoiState> {
    if s < 1 || s > mesh.num_vertices() {
        return Err(Error::InvalidInput(format!("sample count {s} must lie in [1, {}]", mesh.num_vertices())));
    }
    let mut state = VoronoiState::init(mesh, seed)?;
    state.extend_fps(mesh, s - 1)?;
    Ok(state)
}

pub type Adjacency = (Vec<(usize, usize)>, Vec<(usize, usize, usize)>);

/// Texel adjacency as sorted pairs `(i, j)` with `i < j` and sorted triples
/// `(i, j, k)` with `i < j < k`.
pub fn voronoi_adjacency(state: &VoronoiState, mesh: &TriMesh) -> Adjacency {
    let labels = state.labels();
    let mut pairs = Vec::new();
    for [a, b] in mesh.edges() {
        let (la, lb) = (labels[a], labels[b]);
        if la != lb && la != usize::MAX && lb != usize::MAX {
            pairs.push((la.min(lb), la.max(lb)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut triples = Vec::new();
    for tri in mesh.triangles() {
        let mut l = tri.map(|v| labels[v]);
        l.sort_unstable();
        if l[0] != l[1] && l[1] != l[2] && l[2] != usize::MAX {
            triples.push((l[0], l[1], l[2]));
        }
    }
    triples.sort_unstable();
    triples.dedup();
    (pairs, triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn init_single_texel() {
        let m = shapes::octahedron();
        let s = VoronoiState::init(&m, Seed::Vertex(0)).unwrap();
        assert_eq!(s.samples(), &[0]);
        assert!(s.labels().iter().all(|&l| l == 0));
        assert!(s.check_invariants());
        assert!(VoronoiState::init(&TriMesh::new(vec![], vec![]).unwrap(), Seed::Random(1)).is_err());
    }

    #[test]
    fn random_seed_is_deterministic() {
        let m = shapes::icosphere(2);
        let a = fps(&m, 12, Seed::Random(42)).unwrap();
        let b = fps(&m, 12, Seed::Random(42)).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(a.field(), b.field());
    }

    #[test]
    fn unreached_component_has_infinite_key() {
        let m = shapes::disjoint_union(&shapes::octahedron(), &shapes::octahedron().translated([4.0, 0.0, 0.0]));
        let s = VoronoiState::init(&m, Seed::Vertex(1)).unwrap();
        for v in 6..12 {
            assert_eq!(s.heap().key(v), f64::INFINITY);
        }
        // infinity wins, lowest index first
        assert_eq!(s.farthest(), Some(6));
    }

    #[test]
    fn second_sample_is_opposite_pole() {
        let m = shapes::octahedron();
        let s = fps(&m, 2, Seed::Vertex(4)).unwrap();
        assert_eq!(s.samples(), &[4, 5]);
    }

    #[test]
    fn antipodal_pair_on_octahedron() {
        let m = shapes::octahedron();
        let mut s = VoronoiState::init(&m, Seed::Vertex(4)).unwrap();
        s.add_sample(&m, 5).unwrap();
        let labels = s.labels();
        // equator ties keep the incumbent texel
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 1]);
        assert!(s.check_invariants());
        assert!(s.add_sample(&m, 5).is_err());
        let (pairs, triples) = voronoi_adjacency(&s, &m);
        assert_eq!(pairs, vec![(0, 1)]);
        assert!(triples.is_empty());
    }

    #[test]
    fn full_sampling_zeroes_everything() {
        let m = shapes::octahedron();
        let s = fps(&m, 6, Seed::Vertex(2)).unwrap();
        assert!(s.field().dist.iter().all(|&d| d == 0.0));
        assert!(fps(&m, 7, Seed::Vertex(0)).is_err());
        assert!(fps(&m, 0, Seed::Vertex(0)).is_err());
    }

    #[test]
    fn single_sample_has_no_adjacency() {
        let m = shapes::icosphere(1);
        let s = fps(&m, 1, Seed::Vertex(0)).unwrap();
        let (p, t) = voronoi_adjacency(&s, &m);
        assert!(p.is_empty() && t.is_empty());
    }
}
