//! Intrinsic Delaunay remeshing: sample, repair until every texel union is a
//! disk, then read the dual triangulation off the texel labels.

mod extract;
mod fup;
mod resample;

use std::path::Path;

pub use extract::extract_idt;
pub use fup::{check_fup, repair_fup, union_characteristics, FupReport, UnionCharacteristics};
pub use resample::{max_edge_length, resample_large_triangles, resample_threshold};

use crate::error::{Error, Result};
use crate::mesh::{remove_small_components, validate_manifold, TriMesh};
use crate::textio::{format_index_lines, write_text};
use crate::timing::{Stage, Timings};
use crate::voronoi::{fps, Seed};

#[derive(Clone, Debug, PartialEq)]
pub struct RemeshOutput {
    /// Vertex `i` sits exactly at dense vertex `generator_of[i]`.
    pub lowres: TriMesh,
    pub generator_of: Vec<usize>,
    /// Low-resolution vertex owning each dense vertex; `usize::MAX` for
    /// vertices whose texel was dropped with a small component.
    pub texel_of: Vec<usize>,
    pub repair_count: usize,
}

impl RemeshOutput {
    pub fn write_sidecars(&self, texel_path: &Path, generator_path: &Path) -> Result<()> {
        write_text(texel_path, &format_index_lines(&self.texel_of))?;
        write_text(generator_path, &format_index_lines(&self.generator_of))
    }
}

#[derive(Clone, Debug)]
pub struct RemeshParams {
    pub samples: usize,
    pub seed: u64,
    pub resample: bool,
    /// Drop low-resolution components below this fraction of the area;
    /// `0.0` keeps everything.
    pub component_threshold: f64,
    pub max_rounds: usize,
}

impl Default for RemeshParams {
    fn default() -> Self {
        RemeshParams { samples: 3000, seed: 0, resample: false, component_threshold: 0.0, max_rounds: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct Remeshed {
    pub output: RemeshOutput,
    /// The refined input when resampling ran; `texel_of` and
    /// `generator_of` then index into it.
    pub resampled: Option<TriMesh>,
    pub repair_rounds: usize,
    pub removed_lowres: Vec<usize>,
}

impl Remeshed {
    pub fn domain<'a>(&'a self, original: &'a TriMesh) -> &'a TriMesh {
        self.resampled.as_ref().unwrap_or(original)
    }
}

/// Full remeshing pipeline: optional refinement, sampling, repair,
/// extraction and optional small-component removal.
pub fn remesh(mesh: &TriMesh, params: &RemeshParams, timings: &mut Timings) -> Result<Remeshed> {
    let defects = validate_manifold(mesh);
    if let Some(d) = defects.first() {
        return Err(Error::Topology(format!("input is not a manifold mesh: {d} ({} defects)", defects.len())));
    }
    let resampled = if params.resample {
        Some(timings.time(Stage::Resample, || resample_large_triangles(mesh, params.samples.max(1)))?)
    } else {
        None
    };
    let domain = resampled.as_ref().unwrap_or(mesh);
    let n = domain.num_vertices();
    let mut s = params.samples.max(1);
    if s > n {
        log::warn!("requested {s} samples but the mesh has {n} vertices; using {n}");
        s = n;
    }
    let mut state = timings.time(Stage::Fps, || fps(domain, s, Seed::Random(params.seed)))?;
    let rounds = timings.time(Stage::Repair, || repair_fup(&mut state, domain, params.max_rounds))?;
    let mut output = timings.time(Stage::Extract, || extract_idt(&state, domain))?;
    output.repair_count = state.num_texels() - s;
    log::info!(
        "remeshed {n} -> {} vertices ({} repair samples, {rounds} rounds)",
        output.lowres.num_vertices(),
        output.repair_count
    );
    let mut removed = Vec::new();
    if params.component_threshold > 0.0 {
        let (kept, gone) = remove_small_components(&output.lowres, params.component_threshold)?;
        if !gone.is_empty() {
            let mut new_index = vec![usize::MAX; output.lowres.num_vertices()];
            let mut next = 0;
            let mut is_gone = vec![false; new_index.len()];
            for &g in &gone {
                is_gone[g] = true;
            }
            for (i, slot) in new_index.iter_mut().enumerate() {
                if !is_gone[i] {
                    *slot = next;
                    next += 1;
                }
            }
            output.generator_of = (0..is_gone.len()).filter(|&i| !is_gone[i]).map(|i| output.generator_of[i]).collect();
            for t in output.texel_of.iter_mut() {
                if *t != usize::MAX {
                    *t = new_index[*t];
                }
            }
            output.lowres = kept;
            log::info!("dropped {} low-resolution vertices in small components", gone.len());
        }
        removed = gone;
    }
    Ok(Remeshed { output, resampled, repair_rounds: rounds, removed_lowres: removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{shapes, validate_simplicial};

    fn run(mesh: &TriMesh, s: usize) -> Remeshed {
        let p = RemeshParams { samples: s, ..Default::default() };
        remesh(mesh, &p, &mut Timings::default()).unwrap()
    }

    #[test]
    fn icosphere_remesh_is_sphere() {
        let m = shapes::icosphere(4);
        let r = run(&m, 42);
        let low = &r.output.lowres;
        assert!(validate_simplicial(low).is_empty());
        assert_eq!(low.euler_characteristic(), 2);
        assert_eq!(low.num_vertices(), 42 + r.output.repair_count);
        for (i, &g) in r.output.generator_of.iter().enumerate() {
            assert_eq!(low.vertex(i), m.vertex(g));
            assert_eq!(r.output.texel_of[g], i);
        }
    }

    #[test]
    fn clamps_oversized_request() {
        let m = shapes::octahedron();
        let r = run(&m, 100);
        assert_eq!(r.output.lowres.num_vertices(), 6);
    }

    #[test]
    fn deterministic() {
        let m = shapes::torus(1.0, 0.4, 40, 16);
        assert_eq!(run(&m, 60).output, run(&m, 60).output);
    }

    #[test]
    fn drops_small_components() {
        let m = shapes::disjoint_union(
            &shapes::icosphere(3),
            &shapes::icosphere(3).scaled(0.05).translated([3.0, 0.0, 0.0]),
        );
        let p = RemeshParams { samples: 80, component_threshold: 0.01, ..Default::default() };
        let r = remesh(&m, &p, &mut Timings::default()).unwrap();
        assert!(!r.removed_lowres.is_empty());
        assert_eq!(r.output.lowres.euler_characteristic(), 2);
        assert!(r.output.texel_of[700..].iter().all(|&t| t == usize::MAX));
        for (i, &g) in r.output.generator_of.iter().enumerate() {
            assert_eq!(r.output.texel_of[g], i);
        }
    }
}
