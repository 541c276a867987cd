//! End-to-end matching of two dense meshes and the artifacts it produces.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{fmap_init, zoomout_with_map, FunctionalMap, InitWeights, PointMap};
use crate::mesh::{save_mesh, TriMesh};
use crate::prolongation::{build_prolongation, recover_dense_pointmap, ProlongationMap};
use crate::remesh::{remesh, RemeshParams, Remeshed};
use crate::spectral::cache::encode_basis;
use crate::spectral::{build_laplacian, descriptors, eigenbasis, DescriptorKind, SpectralBasis};
use crate::textio::write_text;
use crate::timing::{Stage, Timings};

/// Every knob of the pipeline. Unset fields in a config file take these
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Target sample count per remesh.
    pub samples: usize,
    pub seed: u64,
    pub resample: bool,
    /// Low-resolution components below this area fraction are dropped.
    pub component_area_threshold: f64,
    pub max_repair_rounds: usize,
    pub k0: usize,
    pub step: usize,
    pub k_final: usize,
    pub descriptor: DescriptorKind,
    pub descriptor_count: usize,
    pub init_weights: InitWeights,
    /// Worker threads; `0` uses every core.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            samples: 3000,
            seed: 0,
            resample: false,
            component_area_threshold: 0.01,
            max_repair_rounds: 50,
            k0: 20,
            step: 5,
            k_final: 100,
            descriptor: DescriptorKind::Wks,
            descriptor_count: 100,
            init_weights: InitWeights::default(),
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples == 0
            || self.k0 == 0
            || self.step == 0
            || self.descriptor_count == 0
            || self.max_repair_rounds == 0
        {
            return bad("samples, k0, step, descriptor_count and max_repair_rounds must be positive".into());
        }
        if !(0.0..1.0).contains(&self.component_area_threshold) {
            return bad(format!("component_area_threshold {} must lie in [0, 1)", self.component_area_threshold));
        }
        if self.k0 > self.k_final {
            return bad(format!("k0 = {} exceeds k_final = {}", self.k0, self.k_final));
        }
        if self.k_final >= self.samples {
            return bad(format!("k_final = {} must be below the sample count {}", self.k_final, self.samples));
        }
        if self.init_weights.product < 0.0 || self.init_weights.laplacian < 0.0 {
            return bad("initialization weights must be non-negative".into());
        }
        Ok(())
    }

    /// Remesh parameters for one side; the target side draws an independent
    /// seed so self-matches do not share samples.
    pub fn remesh_params(&self, side: Side) -> RemeshParams {
        RemeshParams {
            samples: self.samples,
            seed: match side {
                Side::Source => self.seed,
                Side::Target => self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            },
            resample: self.resample,
            component_threshold: self.component_area_threshold,
            max_rounds: self.max_repair_rounds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// One shape after remeshing, spectral analysis and prolongation.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub remeshed: Remeshed,
    pub basis: SpectralBasis,
    pub prolongation: ProlongationMap,
}

/// Outputs of [`match_meshes`]; the dense map runs source → target.
#[derive(Clone, Debug)]
pub struct MatchResult {
    pub source: Prepared,
    pub target: Prepared,
    pub c_init: FunctionalMap,
    pub c: FunctionalMap,
    pub lowres_map: PointMap,
    pub dense_map: PointMap,
    pub timings: Timings,
}

/// Remesh, Laplacian, eigenbasis and prolongation for one side.
pub fn prepare(mesh: &TriMesh, cfg: &PipelineConfig, side: Side, timings: &mut Timings) -> Result<Prepared> {
    let remeshed = remesh(mesh, &cfg.remesh_params(side), timings)?;
    let low = &remeshed.output.lowres;
    if cfg.k_final >= low.num_vertices() {
        return Err(Error::Config(format!(
            "k_final = {} needs more than the {} low-resolution vertices",
            cfg.k_final,
            low.num_vertices()
        )));
    }
    let lap = timings.time(Stage::Laplacian, || build_laplacian(low));
    let basis = timings.time(Stage::Eigens, || eigenbasis(&lap, cfg.k_final))?;
    let prolongation = timings.time(Stage::Prolongation, || build_prolongation(mesh, &remeshed.output))?;
    Ok(Prepared { remeshed, basis, prolongation })
}

pub fn match_meshes(source: &TriMesh, target: &TriMesh, cfg: &PipelineConfig) -> Result<MatchResult> {
    cfg.validate()?;
    let (mut ts, mut tt) = (Timings::default(), Timings::default());
    let (src, tgt) =
        rayon::join(|| prepare(source, cfg, Side::Source, &mut ts), || prepare(target, cfg, Side::Target, &mut tt));
    let (src, tgt) = (src?, tgt?);
    let mut timings = ts;
    timings.extend(tt);
    let c_init = timings.time(Stage::FmapInit, || -> Result<FunctionalMap> {
        let ds = descriptors(&src.basis, cfg.descriptor, cfg.descriptor_count)?;
        let dt = descriptors(&tgt.basis, cfg.descriptor, cfg.descriptor_count)?;
        fmap_init(&ds, &dt, &src.basis, &tgt.basis, cfg.k0, cfg.init_weights)
    })?;
    let (c, lowres_map) =
        timings.time(Stage::Zoomout, || zoomout_with_map(&c_init, &src.basis, &tgt.basis, cfg.step, cfg.k_final))?;
    let dense_map = timings.time(Stage::NnRecovery, || {
        recover_dense_pointmap(&c, &src.prolongation, &tgt.prolongation, &src.basis, &tgt.basis)
    })?;
    Ok(MatchResult { source: src, target: tgt, c_init, c, lowres_map, dense_map, timings })
}

impl MatchResult {
    /// Writes every artifact into `dir` (created if missing).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.dense_map.save(&dir.join("pointmap.txt"))?;
        self.lowres_map.save(&dir.join("lowres_pointmap.txt"))?;
        self.c.save(&dir.join("fmap.txt"))?;
        self.c_init.save(&dir.join("fmap_init.txt"))?;
        for (name, p) in [("source", &self.source), ("target", &self.target)] {
            let out = &p.remeshed.output;
            save_mesh(&out.lowres, dir.join(format!("{name}_lowres.off")), None)?;
            out.write_sidecars(&dir.join(format!("{name}_texels.txt")), &dir.join(format!("{name}_generators.txt")))?;
            p.prolongation.save(&dir.join(format!("{name}_prolongation.txt")))?;
            let path = dir.join(format!("{name}.basis"));
            std::fs::write(&path, encode_basis(&p.basis.phi, &p.basis.lambda)).map_err(|e| Error::io(path, e))?;
        }
        let json = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
        write_text(&dir.join("timing.json"), &json)
    }
}

/// Carries functions on the target's dense vertices (one per column) to the
/// source through `C`: least-squares coefficients in the extended target
/// basis, mapped by `C`, reconstructed in the extended source basis.
pub fn transfer_functions(
    c: &FunctionalMap,
    ext_src: &DMatrix<f64>,
    ext_tgt: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if ext_src.ncols() < c.k_source() || ext_tgt.ncols() < c.k_target() {
        return Err(Error::Dimension("functional map larger than the bases".into()));
    }
    if f.nrows() != ext_tgt.nrows() {
        return Err(Error::Dimension(format!(
            "function has {} rows, target mesh has {} vertices",
            f.nrows(),
            ext_tgt.nrows()
        )));
    }
    let psi = ext_tgt.columns(0, c.k_target());
    let phi = ext_src.columns(0, c.k_source());
    let coeffs = psi
        .into_owned()
        .svd(true, true)
        .solve(f, 1e-12)
        .map_err(|e| Error::Numerical(format!("least-squares projection failed: {e}")))?;
    Ok(phi * (&c.c * coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{geodesic_error, GroundTruthMap};
    use crate::mesh::shapes;

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let c = PipelineConfig { k_final: 3000, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = PipelineConfig { component_area_threshold: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = PipelineConfig { k0: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_toml_defaults_fill_in() {
        let c: PipelineConfig = serde_json::from_str(r#"{"samples": 500, "descriptor": "hks"}"#).unwrap();
        assert_eq!(c.samples, 500);
        assert_eq!(c.descriptor, DescriptorKind::Hks);
        assert_eq!(c.k_final, 100);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sample": 5}"#).is_err());
    }

    #[test]
    fn self_match_on_small_tube() {
        let m = shapes::bumpy_tube(24, 48, 0.3);
        let cfg = PipelineConfig { samples: 300, k0: 10, k_final: 30, descriptor_count: 40, ..Default::default() };
        let r = match_meshes(&m, &m, &cfg).unwrap();
        assert_eq!(r.dense_map.len(), m.num_vertices());
        assert_eq!(r.c.k_source(), 30);
        let gt = GroundTruthMap::from_pointmap(&PointMap::identity(m.num_vertices()));
        let e = geodesic_error(&r.dense_map, &gt, &m).unwrap();
        // coarse smoke bound; the accuracy criteria live in the acceptance tests
        assert!(e.curve.age < 0.1, "{}", e.curve.age);
    }

    #[test]
    fn constants_transfer_to_constants() {
        let m = shapes::icosphere(2);
        let b = eigenbasis(&build_laplacian(&m), 10).unwrap();
        let f = DMatrix::from_element(m.num_vertices(), 1, 2.5);
        let g = transfer_functions(&FunctionalMap::identity(10), &b.phi, &b.phi, &f).unwrap();
        assert!(g.iter().all(|x| (x - 2.5).abs() < 1e-9));
    }
}
