//! Flat Union Property check and repair.
//!
//! Euler characteristics of every texel, adjacent pair and meeting triple are
//! computed in one pass over vertices, edges and triangles. Each primal cell
//! contributes its signed dual count to every texel set it touches; unions
//! then follow by inclusion-exclusion.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::mesh::{validate_manifold, Defect, TriMesh};
use crate::voronoi::VoronoiState;

use super::extract::triangles_from_labels;

type Pair = (usize, usize);
type Triple = (usize, usize, usize);

/// Texel sets whose closed union is not a disk.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FupReport {
    pub bad_texels: Vec<usize>,
    pub bad_pairs: Vec<Pair>,
    pub bad_triples: Vec<Triple>,
    /// Adjacent pairs that no triple covers: their Delaunay edge would
    /// bound no triangle.
    pub dangling_pairs: Vec<Pair>,
}

impl FupReport {
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        self.bad_texels.len() + self.bad_pairs.len() + self.bad_triples.len() + self.dangling_pairs.len()
    }
}

#[derive(Default)]
struct SignedCounts {
    single: Vec<i64>,
    pair: HashMap<Pair, i64>,
    triple: HashMap<Triple, i64>,
}

fn sorted2(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn distinct_labels(l: [usize; 3]) -> ([usize; 3], usize) {
    let mut s = l;
    s.sort_unstable();
    if s[0] == s[1] && s[1] == s[2] {
        ([s[0], 0, 0], 1)
    } else if s[0] == s[1] {
        ([s[0], s[2], 0], 2)
    } else if s[1] == s[2] {
        ([s[0], s[1], 0], 2)
    } else {
        (s, 3)
    }
}

fn signed_counts(mesh: &TriMesh, labels: &[usize], num_texels: usize) -> SignedCounts {
    let mut c = SignedCounts { single: vec![0; num_texels], ..Default::default() };
    for v in 0..mesh.num_vertices() {
        let l = labels[v];
        if l == usize::MAX {
            continue;
        }
        let b = mesh.neighbors(v).filter(|&(_, e)| mesh.is_boundary_edge(e)).count() as i64;
        c.single[l] += 1 - b + i64::from(b > 0);
    }
    for (e, [a, b]) in mesh.edges().enumerate() {
        let (la, lb) = (labels[a], labels[b]);
        if la == usize::MAX || lb == usize::MAX {
            continue;
        }
        // a boundary edge also adds its midpoint as a dual vertex; the two cancel
        if mesh.is_boundary_edge(e) {
            continue;
        }
        c.single[la] -= 1;
        if la != lb {
            c.single[lb] -= 1;
            *c.pair.entry(sorted2(la, lb)).or_default() -= 1;
        }
    }
    for tri in mesh.triangles() {
        let l = tri.map(|v| labels[v]);
        if l.contains(&usize::MAX) {
            continue;
        }
        let (d, n) = distinct_labels(l);
        for &x in &d[..n] {
            c.single[x] += 1;
        }
        match n {
            2 => *c.pair.entry((d[0], d[1])).or_default() += 1,
            3 => {
                for p in [(d[0], d[1]), (d[0], d[2]), (d[1], d[2])] {
                    *c.pair.entry(p).or_default() += 1;
                }
                *c.triple.entry((d[0], d[1], d[2])).or_default() += 1;
            }
            _ => {}
        }
    }
    // pairs that only ever meet along boundary edges still need a key
    for [a, b] in mesh.edges() {
        let (la, lb) = (labels[a], labels[b]);
        if la != lb && la != usize::MAX && lb != usize::MAX {
            c.pair.entry(sorted2(la, lb)).or_default();
        }
    }
    c
}

/// Euler characteristics of texels, adjacent pairs and meeting triples.
pub struct UnionCharacteristics {
    pub texels: Vec<i64>,
    pub pairs: Vec<(Pair, i64)>,
    pub triples: Vec<(Triple, i64)>,
}

/// Euler characteristic of every texel, texel pair and texel triple that
/// [`crate::voronoi::voronoi_adjacency`] reports, all sorted.
pub fn union_characteristics(mesh: &TriMesh, labels: &[usize], num_texels: usize) -> UnionCharacteristics {
    let c = signed_counts(mesh, labels, num_texels);
    let s = &c.single;
    let mut pairs: Vec<(Pair, i64)> = c.pair.iter().map(|(&(i, j), &p)| ((i, j), s[i] + s[j] - p)).collect();
    pairs.sort_unstable();
    let pv = |i: usize, j: usize| c.pair.get(&(i, j)).copied().unwrap_or(0);
    let mut triples: Vec<(Triple, i64)> = c
        .triple
        .iter()
        .map(|(&(i, j, k), &t)| ((i, j, k), s[i] + s[j] + s[k] - pv(i, j) - pv(i, k) - pv(j, k) + t))
        .collect();
    triples.sort_unstable();
    UnionCharacteristics { texels: c.single.clone(), pairs, triples }
}

fn report_from_labels(mesh: &TriMesh, labels: &[usize], num_texels: usize) -> FupReport {
    let u = union_characteristics(mesh, labels, num_texels);
    let mut covered = HashSet::new();
    for &((i, j, k), _) in &u.triples {
        covered.insert((i, j));
        covered.insert((i, k));
        covered.insert((j, k));
    }
    FupReport {
        bad_texels: (0..num_texels).filter(|&i| u.texels[i] != 1).collect(),
        bad_pairs: u.pairs.iter().filter(|p| p.1 != 1).map(|p| p.0).collect(),
        bad_triples: u.triples.iter().filter(|t| t.1 != 1).map(|t| t.0).collect(),
        dangling_pairs: u.pairs.iter().map(|p| p.0).filter(|p| !covered.contains(p)).collect(),
    }
}

/// Lists every texel, adjacent pair and meeting triple whose union is not a
/// closed disk, plus adjacent pairs that no triple covers.
pub fn check_fup(state: &VoronoiState, mesh: &TriMesh) -> FupReport {
    report_from_labels(mesh, &state.labels(), state.num_texels())
}

/// Defects of the dual that the Euler test cannot see, e.g. a disk texel
/// that meets the surface boundary along two separate arcs.
fn dual_defects(mesh: &TriMesh, labels: &[usize], num_texels: usize, report: &mut FupReport) {
    let tris = triangles_from_labels(mesh, labels);
    let verts = vec![[0.0; 3]; num_texels];
    let Ok(dual) = TriMesh::new(verts, tris) else { return };
    let mut texels = Vec::new();
    for d in validate_manifold(&dual) {
        match d {
            Defect::NonManifoldVertex { vertex, .. } | Defect::IsolatedVertex { vertex } => texels.push(vertex),
            Defect::NonManifoldEdge { edge, .. } => {
                let [a, b] = dual.edge(edge);
                report.bad_pairs.push(sorted2(a, b));
            }
            Defect::DuplicateTriangle { .. } => {}
        }
    }
    report.bad_texels.extend(texels);
    report.bad_texels.sort_unstable();
    report.bad_texels.dedup();
    report.bad_pairs.sort_unstable();
    report.bad_pairs.dedup();
}

/// Full check used by repair and extraction: FUP plus a manifold dual.
pub(crate) fn full_report(state: &VoronoiState, mesh: &TriMesh) -> FupReport {
    let labels = state.labels();
    let mut report = report_from_labels(mesh, &labels, state.num_texels());
    if report.is_empty() {
        dual_defects(mesh, &labels, state.num_texels(), &mut report);
    }
    report
}

#[derive(Clone, Copy)]
struct Best {
    dist: f64,
    vertex: usize,
}

impl Best {
    fn offer(slot: &mut Option<Best>, dist: f64, vertex: usize) {
        match slot {
            Some(b) if b.dist > dist || (b.dist == dist && b.vertex < vertex) => {}
            _ => *slot = Some(Best { dist, vertex }),
        }
    }
}

/// Repair sample for each defect, in the order texels, pairs, triples.
fn placements(state: &VoronoiState, mesh: &TriMesh, report: &FupReport) -> Vec<usize> {
    let labels = state.labels();
    let dist = &state.field().dist;
    let n = state.num_texels();
    let mut bad_texel = vec![false; n];
    for &i in &report.bad_texels {
        bad_texel[i] = true;
    }
    let pair_slot: HashMap<Pair, usize> =
        report.bad_pairs.iter().chain(&report.dangling_pairs).enumerate().map(|(k, &p)| (p, k)).collect();
    let triple_slot: HashMap<Triple, usize> = report.bad_triples.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let mut texel_edge: Vec<Option<Best>> = vec![None; n];
    let mut texel_any: Vec<Option<Best>> = vec![None; n];
    let mut pair_best: Vec<Option<Best>> = vec![None; report.bad_pairs.len() + report.dangling_pairs.len()];
    let mut triple_best: Vec<Option<Best>> = vec![None; report.bad_triples.len()];

    for v in 0..mesh.num_vertices() {
        let l = labels[v];
        if l != usize::MAX && bad_texel[l] && !state.is_sample(v) {
            Best::offer(&mut texel_any[l], dist[v], v);
        }
    }
    for [a, b] in mesh.edges() {
        let (la, lb) = (labels[a], labels[b]);
        if la == lb || la == usize::MAX || lb == usize::MAX {
            continue;
        }
        for (v, l) in [(a, la), (b, lb)] {
            if state.is_sample(v) {
                continue;
            }
            if bad_texel[l] {
                Best::offer(&mut texel_edge[l], dist[v], v);
            }
            if let Some(&k) = pair_slot.get(&sorted2(la, lb)) {
                Best::offer(&mut pair_best[k], dist[v], v);
            }
        }
    }
    if !triple_slot.is_empty() {
        for tri in mesh.triangles() {
            let (d, cnt) = distinct_labels(tri.map(|v| labels[v]));
            if cnt != 3 {
                continue;
            }
            if let Some(&k) = triple_slot.get(&(d[0], d[1], d[2])) {
                for v in tri {
                    if !state.is_sample(v) {
                        Best::offer(&mut triple_best[k], dist[v], v);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for &i in &report.bad_texels {
        if let Some(b) = texel_edge[i].or(texel_any[i]) {
            out.push(b.vertex);
        }
    }
    out.extend(pair_best.iter().flatten().map(|b| b.vertex));
    out.extend(triple_best.iter().flatten().map(|b| b.vertex));
    let mut seen = HashSet::new();
    out.retain(|v| seen.insert(*v));
    out
}

/// Inserts samples until the Flat Union Property holds and the dual is a
/// manifold triangulation. Components that no sample reached get one
/// sample each first. Returns the number of rounds used.
pub fn repair_fup(state: &mut VoronoiState, mesh: &TriMesh, max_rounds: usize) -> Result<usize> {
    if max_rounds == 0 {
        return Err(Error::InvalidInput("max_rounds must be at least 1".into()));
    }
    let mut rounds = 0;
    while let Some(v) = state.farthest() {
        if state.field().dist[v].is_finite() {
            break;
        }
        state.add_sample(mesh, v)?;
    }
    loop {
        let report = full_report(state, mesh);
        if report.is_empty() {
            return Ok(rounds);
        }
        if rounds == max_rounds {
            return Err(Error::RepairNotConverged { rounds, report: Box::new(report) });
        }
        let new = placements(state, mesh, &report);
        if new.is_empty() {
            return Err(Error::RepairNotConverged { rounds, report: Box::new(report) });
        }
        log::debug!("repair round {rounds}: {} defects, {} new samples", report.len(), new.len());
        for v in new {
            state.add_sample(mesh, v)?;
        }
        rounds += 1;
    }
}
