//! Evaluation protocol: geodesic accuracy curves, perturbed benchmark
//! synthesis, geodesic transfer error and timing summaries.

mod manifest;

use std::collections::HashMap;
use std::fmt::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use manifest::{Manifest, ManifestEntry};

use crate::error::{Error, Result};
use crate::fmap::{KdTree, PointMap};
use crate::geodesic::{approximate_diameter, multi_source, single_source, Propagator};
use crate::mesh::TriMesh;
use crate::prolongation::ProlongationMap;
use crate::remesh::RemeshOutput;
use crate::textio::{format_index_lines, parse_index_lines, read_text, write_text};
use crate::timing::{Stage, Timings};
use crate::voronoi::{fps, Seed};

pub const CURVE_SAMPLES: usize = 256;
pub const CURVE_MAX: f64 = 0.25;

/// Ground-truth targets per source vertex; `None` where unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthMap {
    pub target_of: Vec<Option<usize>>,
}

impl GroundTruthMap {
    pub fn from_pointmap(p: &PointMap) -> Self {
        GroundTruthMap { target_of: p.target_of.iter().map(|&t| Some(t)).collect() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(GroundTruthMap { target_of: parse_index_lines(text)? })
    }

    pub fn to_text(&self) -> String {
        let v: Vec<usize> = self.target_of.iter().map(|t| t.unwrap_or(usize::MAX)).collect();
        format_index_lines(&v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
    pub age: f64,
    pub auc: f64,
}

impl AccuracyCurve {
    /// Curve of a set of normalized errors over `[0, max]` with `samples`
    /// thresholds; AUC by the trapezoid rule, scaled to `[0, 1]`.
    pub fn from_errors(errors: &[f64], samples: usize, max: f64) -> Self {
        let samples = samples.max(2);
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len().max(1) as f64;
        let thresholds: Vec<f64> = (0..samples).map(|i| max * i as f64 / (samples - 1) as f64).collect();
        let fractions: Vec<f64> = thresholds.iter().map(|&t| sorted.partition_point(|&e| e <= t) as f64 / n).collect();
        let area: f64 =
            thresholds.windows(2).zip(fractions.windows(2)).map(|(t, f)| (t[1] - t[0]) * (f[0] + f[1]) * 0.5).sum();
        let age = if errors.is_empty() { 0.0 } else { errors.iter().sum::<f64>() / n };
        AccuracyCurve { thresholds, fractions, age, auc: area / max }
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicError {
    /// Normalized error per source vertex; `None` where the ground truth is
    /// missing.
    pub per_vertex: Vec<Option<f64>>,
    pub diameter: f64,
    pub curve: AccuracyCurve,
}

/// Graph-geodesic distance on `target` between predicted and true targets,
/// divided by the double-sweep diameter of `target`. Pairs in different
/// components count as a full diameter.
pub fn geodesic_error(pred: &PointMap, gt: &GroundTruthMap, target: &TriMesh) -> Result<GeodesicError> {
    if pred.len() != gt.target_of.len() {
        return Err(Error::Dimension(format!(
            "prediction has {} entries, ground truth {}",
            pred.len(),
            gt.target_of.len()
        )));
    }
    let n = target.num_vertices();
    let pairs: Vec<(usize, usize, usize)> =
        gt.target_of.iter().enumerate().filter_map(|(i, g)| g.map(|g| (i, g, pred.target_of[i]))).collect();
    if pairs.is_empty() {
        return Err(Error::InvalidInput("ground truth has no valid entries".into()));
    }
    if let Some(&(i, g, p)) = pairs.iter().find(|&&(_, g, p)| g >= n || p >= n) {
        return Err(Error::Dimension(format!("vertex {i} maps to {p} (truth {g}) outside the {n}-vertex target")));
    }
    let diameter = approximate_diameter(target);
    let scale = if diameter > 0.0 { 1.0 / diameter } else { 0.0 };
    let mut by_truth: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &(_, g, p)) in pairs.iter().enumerate() {
        if g != p {
            by_truth.entry(g).or_default().push(k);
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = by_truth.into_iter().collect();
    groups.sort_unstable_by_key(|g| g.0);
    // large groups (many sources sharing one truth vertex) get one full
    // propagation; the rest use early-exit searches
    let results: Vec<(usize, f64)> = groups
        .par_iter()
        .map_init(
            || (Propagator::new(n), Vec::new()),
            |(prop, scratch), (g, members)| {
                if members.len() >= 32 {
                    let field = single_source(target, *g).expect("in range");
                    members.iter().map(|&k| (k, field.dist[pairs[k].2])).collect::<Vec<_>>()
                } else {
                    members.iter().map(|&k| (k, prop.pair_distance(target, *g, pairs[k].2, scratch))).collect()
                }
            },
        )
        .flatten()
        .collect();
    let mut err = vec![0.0; pairs.len()];
    for (k, d) in results {
        err[k] = if d.is_finite() { d * scale } else { 1.0 };
    }
    let mut per_vertex = vec![None; pred.len()];
    for (k, &(i, _, _)) in pairs.iter().enumerate() {
        per_vertex[i] = Some(err[k]);
    }
    Ok(GeodesicError { per_vertex, diameter, curve: AccuracyCurve::from_errors(&err, CURVE_SAMPLES, CURVE_MAX) })
}

/// Moves every vertex to a uniformly random point of a uniformly random
/// incident triangle. Returns the new mesh and `U_pert` with
/// `V̂ = U_pert V`.
pub fn badtosca_perturb(mesh: &TriMesh, seed: u64) -> Result<(TriMesh, ProlongationMap)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.num_vertices();
    let mut rows = Vec::with_capacity(n);
    for v in 0..n {
        let tris: Vec<usize> = mesh.vertex_triangles(v).collect();
        if tris.is_empty() {
            rows.push(vec![(v, 1.0)]);
            continue;
        }
        let t = tris[rng.gen_range(0..tris.len())];
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let w = [1.0 - s, s * (1.0 - r2), s * r2];
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(3);
        for (k, &c) in mesh.triangle(t).iter().enumerate() {
            row.push((c, w[k]));
        }
        rows.push(row);
    }
    let u = ProlongationMap::from_rows(n, rows)?;
    let vertices = (0..n)
        .map(|i| {
            let mut p = [0.0; 3];
            for (c, w) in u.row(i) {
                let q = mesh.vertex(c);
                for k in 0..3 {
                    p[k] += w * q[k];
                }
            }
            p
        })
        .collect();
    Ok((mesh.with_vertices(vertices)?, u))
}

/// Ground truth between the perturbations `U_i` and `U_j` of two meshes with
/// shared connectivity: each point of `U_i V_i` maps to its nearest point of
/// `U_j V_i`.
pub fn badtosca_groundtruth(mesh_i: &TriMesh, u_i: &ProlongationMap, u_j: &ProlongationMap) -> Result<GroundTruthMap> {
    let n = mesh_i.num_vertices();
    for u in [u_i, u_j] {
        if u.rows() != n || u.cols() != n {
            return Err(Error::Dimension(format!(
                "perturbation is {}x{} but the mesh has {n} vertices",
                u.rows(),
                u.cols()
            )));
        }
    }
    let coords: Vec<Vec<f64>> = (0..3).map(|k| mesh_i.vertices().iter().map(|p| p[k]).collect()).collect();
    let embed = |u: &ProlongationMap| -> Result<Vec<f64>> {
        let cols: Vec<Vec<f64>> = coords.iter().map(|c| u.apply(c)).collect::<Result<_>>()?;
        Ok((0..n).flat_map(|i| [cols[0][i], cols[1][i], cols[2][i]]).collect())
    };
    let src = embed(u_i)?;
    let tree = KdTree::new(embed(u_j)?, 3);
    Ok(GroundTruthMap { target_of: tree.nearest_all(&src).into_iter().map(Some).collect() })
}

pub fn vertex_areas(mesh: &TriMesh) -> Vec<f64> {
    let mut a = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().enumerate() {
        let third = mesh.triangle_area(t) / 3.0;
        for v in tri {
            a[v] += third;
        }
    }
    a
}

#[derive(Clone, Debug)]
pub struct TransferStudy {
    pub sources: Vec<usize>,
    /// Area-normalized norm of `|U d̂ − d| / max d` per source.
    pub per_source: Vec<f64>,
    /// Same measure for the distance to the nearest of all sources.
    pub min_dist: f64,
}

/// Compares dense geodesic distance fields with low-resolution ones carried
/// back through `u`, from `n_sources` farthest-point sources on the dense
/// mesh. Each dense source is represented by the generator of its texel.
pub fn transfer_error_study(
    dense: &TriMesh,
    remesh: &RemeshOutput,
    u: &ProlongationMap,
    n_sources: usize,
    seed: u64,
) -> Result<TransferStudy> {
    let low = &remesh.lowres;
    if u.rows() != dense.num_vertices() || u.cols() != low.num_vertices() {
        return Err(Error::Dimension("prolongation does not match the meshes".into()));
    }
    let n_sources = n_sources.clamp(1, dense.num_vertices());
    let sources = fps(dense, n_sources, Seed::Random(seed))?.samples().to_vec();
    let areas = vertex_areas(dense);
    let low_tree = KdTree::new(low.vertices().iter().flat_map(|p| *p).collect(), 3);
    let representative = |p: usize| -> usize {
        match remesh.texel_of.get(p) {
            Some(&t) if t < low.num_vertices() => t,
            _ => low_tree.nearest(&dense.vertex(p)).map_or(0, |r| r.0),
        }
    };
    let fields: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_iter()
        .map(|&p| -> Result<(Vec<f64>, Vec<f64>)> {
            let exact = single_source(dense, p)?.dist;
            let coarse = u.apply(&single_source(low, representative(p))?.dist)?;
            Ok((exact, coarse))
        })
        .collect::<Result<_>>()?;
    let per_source = fields.iter().map(|(d, dh)| normalized_error(d, dh, &areas)).collect();
    let exact_min = multi_source(dense, &sources)?.dist;
    let reps: Vec<usize> = sources.iter().map(|&p| representative(p)).collect();
    let mut uniq = reps.clone();
    uniq.sort_unstable();
    uniq.dedup();
    let coarse_min = u.apply(&multi_source(low, &uniq)?.dist)?;
    Ok(TransferStudy { sources, per_source, min_dist: normalized_error(&exact_min, &coarse_min, &areas) })
}

fn normalized_error(exact: &[f64], approx: &[f64], areas: &[f64]) -> f64 {
    let scale = exact.iter().filter(|d| d.is_finite()).fold(0.0f64, |a, &b| a.max(b));
    if scale == 0.0 {
        return 0.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..exact.len() {
        if exact[i].is_finite() && approx[i].is_finite() {
            let e = (approx[i] - exact[i]) / scale;
            num += areas[i] * e * e;
            den += areas[i];
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingReport {
    /// `pair_id,stage,seconds`.
    pub csv: String,
    /// `(seconds, fraction of jobs finished within that total)`, ascending.
    pub cumulative: Vec<(f64, f64)>,
}

impl TimingReport {
    pub fn cumulative_csv(&self) -> String {
        let mut s = String::from("seconds,fraction\n");
        for (t, f) in &self.cumulative {
            writeln!(s, "{t},{f}").unwrap();
        }
        s
    }
}

pub fn timing_report(jobs: &[(String, Timings)]) -> TimingReport {
    let mut csv = String::from("pair_id,stage,seconds\n");
    for (id, t) in jobs {
        for &(stage, secs) in &t.entries {
            writeln!(csv, "{},{},{secs}", csv_field(id), stage.name()).unwrap();
        }
    }
    let mut totals: Vec<f64> = jobs.iter().map(|(_, t)| t.total()).collect();
    totals.sort_by(f64::total_cmp);
    let n = totals.len() as f64;
    let cumulative = totals.iter().enumerate().map(|(i, &t)| (t, (i + 1) as f64 / n)).collect();
    TimingReport { csv, cumulative }
}

/// Parses a report back into per-job timings, in file order.
pub fn parse_timing_csv(text: &str) -> Result<Vec<(String, Timings)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("pair_id,stage,seconds") {
        return Err(Error::Parse("timing CSV header missing".into()));
    }
    let mut jobs: Vec<(String, Timings)> = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut parts = line.rsplitn(3, ',');
        let bad = || Error::Parse(format!("bad timing row {line:?}"));
        let secs: f64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let stage = parts.next().and_then(Stage::from_name).ok_or_else(bad)?;
        let id = parts.next().ok_or_else(bad)?.to_string();
        match jobs.last_mut() {
            Some((last, t)) if *last == id => t.record(stage, secs),
            _ => {
                let mut t = Timings::default();
                t.record(stage, secs);
                jobs.push((id, t));
            }
        }
    }
    Ok(jobs)
}

pub(crate) fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], "_")
}

/// One accuracy summary row per evaluated pair.
#[derive(Clone, Debug)]
pub struct EvalRow {
    pub pair_id: String,
    pub age: f64,
    pub auc: f64,
    pub curve: AccuracyCurve,
}

pub fn summary_csv(rows: &[EvalRow]) -> String {
    let mut s = String::from("pair_id,age,auc\n");
    for r in rows {
        writeln!(s, "{},{},{}", csv_field(&r.pair_id), r.age, r.auc).unwrap();
    }
    s
}

pub fn curves_csv(rows: &[EvalRow]) -> String {
    let mut s = String::from("pair_id,threshold,fraction\n");
    for r in rows {
        for (t, f) in r.curve.thresholds.iter().zip(&r.curve.fractions) {
            writeln!(s, "{},{t},{f}", csv_field(&r.pair_id)).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::prolongation::build_prolongation;

    #[test]
    fn perfect_prediction() {
        let m = shapes::icosphere(2);
        let pi = PointMap::identity(m.num_vertices());
        let e = geodesic_error(&pi, &GroundTruthMap::from_pointmap(&pi), &m).unwrap();
        assert_eq!(e.curve.age, 0.0);
        assert!((e.curve.auc - 1.0).abs() < 1e-12);
        assert_eq!(e.curve.thresholds.len(), 256);
    }

    #[test]
    fn constant_prediction_matches_distance_field() {
        let m = shapes::torus(1.0, 0.4, 30, 12);
        let n = m.num_vertices();
        let pred = PointMap { target_of: vec![7; n] };
        let e = geodesic_error(&pred, &GroundTruthMap::from_pointmap(&PointMap::identity(n)), &m).unwrap();
        let d = single_source(&m, 7).unwrap().dist;
        let expect = d.iter().sum::<f64>() / n as f64 / approximate_diameter(&m);
        assert!((e.curve.age - expect).abs() < 1e-12);
    }

    #[test]
    fn invalid_truth_is_skipped_or_rejected() {
        let m = shapes::octahedron();
        let pred = PointMap::identity(6);
        let none = GroundTruthMap { target_of: vec![None; 6] };
        assert!(geodesic_error(&pred, &none, &m).is_err());
        let mut part = GroundTruthMap::from_pointmap(&pred);
        part.target_of[2] = None;
        let e = geodesic_error(&pred, &part, &m).unwrap();
        assert_eq!(e.per_vertex[2], None);
    }

    #[test]
    fn auc_matches_riemann_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let errs: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..0.3)).collect();
        let c = AccuracyCurve::from_errors(&errs, 256, 0.25);
        assert!(c.fractions.windows(2).all(|w| w[0] <= w[1]));
        let steps = 200_000;
        let h = 0.25 / steps as f64;
        let riemann: f64 = (0..steps)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                // piecewise-linear interpolation of the sampled curve
                let x = t / 0.25 * 255.0;
                let j = (x.floor() as usize).min(254);
                let f = x - j as f64;
                c.fractions[j] * (1.0 - f) + c.fractions[j + 1] * f
            })
            .sum::<f64>()
            * h
            / 0.25;
        assert!((riemann - c.auc).abs() < 1e-6, "{riemann} {}", c.auc);
    }

    #[test]
    fn perturbation_rows_are_local() {
        let m = shapes::icosphere(2);
        let (p, u) = badtosca_perturb(&m, 9).unwrap();
        assert!(u.max_row_sum_error() < 1e-12);
        for v in 0..m.num_vertices() {
            let cols: Vec<usize> = u.row(v).map(|(c, _)| c).collect();
            assert!(cols.len() <= 3);
            assert!(m.vertex_triangles(v).any(|t| cols.iter().all(|c| m.triangle(t).contains(c))));
        }
        let (p2, _) = badtosca_perturb(&m, 9).unwrap();
        assert_eq!(p, p2);
        let gt = badtosca_groundtruth(&m, &u, &u).unwrap();
        assert_eq!(gt, GroundTruthMap::from_pointmap(&PointMap::identity(m.num_vertices())));
    }

    #[test]
    fn groundtruth_matches_brute_force() {
        let m = shapes::torus(1.0, 0.4, 16, 8);
        let (_, ui) = badtosca_perturb(&m, 1).unwrap();
        let (_, uj) = badtosca_perturb(&m, 2).unwrap();
        let gt = badtosca_groundtruth(&m, &ui, &uj).unwrap();
        let coords = |u: &ProlongationMap| -> Vec<f64> {
            let c: Vec<Vec<f64>> =
                (0..3).map(|k| u.apply(&m.vertices().iter().map(|p| p[k]).collect::<Vec<_>>()).unwrap()).collect();
            (0..m.num_vertices()).flat_map(|i| [c[0][i], c[1][i], c[2][i]]).collect()
        };
        let (src, tgt) = (coords(&ui), coords(&uj));
        for i in 0..m.num_vertices() {
            let b = crate::fmap::nearest_brute(&tgt, 3, &src[3 * i..3 * i + 3]).unwrap().0;
            assert_eq!(gt.target_of[i], Some(b));
        }
        assert!(badtosca_groundtruth(&shapes::octahedron(), &ui, &uj).is_err());
    }

    #[test]
    fn identity_remesh_has_no_transfer_error() {
        let m = shapes::icosphere(2);
        let r = RemeshOutput {
            lowres: m.clone(),
            generator_of: (0..m.num_vertices()).collect(),
            texel_of: (0..m.num_vertices()).collect(),
            repair_count: 0,
        };
        let u = build_prolongation(&m, &r).unwrap();
        let s = transfer_error_study(&m, &r, &u, 5, 0).unwrap();
        assert!(s.per_source.iter().all(|&e| e == 0.0));
        assert_eq!(s.min_dist, 0.0);
    }

    #[test]
    fn timing_csv() {
        let empty = timing_report(&[]);
        assert_eq!(empty.csv, "pair_id,stage,seconds\n");
        assert!(empty.cumulative.is_empty());
        let mut t = Timings::default();
        t.record(Stage::Fps, 0.5);
        t.record(Stage::Eigens, 0.25);
        let mut t2 = Timings::default();
        t2.record(Stage::Zoomout, 0.125);
        let jobs = vec![("a".to_string(), t), ("b".to_string(), t2)];
        let rep = timing_report(&jobs);
        assert_eq!(rep.cumulative, vec![(0.125, 0.5), (0.75, 1.0)]);
        let back = parse_timing_csv(&rep.csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1.total(), 0.75);
    }
}
