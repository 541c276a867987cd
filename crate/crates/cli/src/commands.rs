use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use meshcorr::bench::{
    badtosca_groundtruth, badtosca_perturb, curves_csv, geodesic_error, summary_csv, timing_report, EvalRow,
    GroundTruthMap, Manifest,
};
use meshcorr::fmap::{FunctionalMap, PointMap};
use meshcorr::mesh::{load_mesh, save_mesh, MeshFormat, TriMesh};
use meshcorr::pipeline::{match_meshes, transfer_functions, PipelineConfig, Side};
use meshcorr::prolongation::ProlongationMap;
use meshcorr::remesh::remesh as remesh_mesh;
use meshcorr::spectral::cache::decode_basis;
use meshcorr::textio::{parse_matrix_rows, read_text, write_text};
use meshcorr::timing::Timings;
use meshcorr::{Error, Result};
use nalgebra::DMatrix;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn remesh(input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mesh = load_mesh(input, None)?;
    MeshFormat::from_path(output)?;
    let mut timings = Timings::default();
    let r = remesh_mesh(&mesh, &cfg.remesh_params(Side::Source), &mut timings)?;
    save_mesh(&r.output.lowres, output, None)?;
    r.output.write_sidecars(&with_suffix(output, ".texels.txt"), &with_suffix(output, ".generators.txt"))?;
    if let Some(refined) = &r.resampled {
        save_mesh(refined, with_suffix(output, ".resampled.off"), None)?;
    }
    let json = serde_json::to_string_pretty(&timings).expect("timings serialize");
    write_text(&with_suffix(output, ".timing.json"), &json)?;
    log::info!("wrote {} ({} vertices)", output.display(), r.output.lowres.num_vertices());
    Ok(())
}

pub fn match_pair(source: &Path, target: &Path, out_dir: &Path, cfg: &PipelineConfig) -> Result<()> {
    let (src, tgt) = (load_mesh(source, None)?, load_mesh(target, None)?);
    let r = match_meshes(&src, &tgt, cfg)?;
    r.write(out_dir)?;
    write_text(&out_dir.join("config.toml"), &toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?)?;
    log::info!("wrote match artifacts to {} in {:.2} s", out_dir.display(), r.timings.total());
    Ok(())
}

fn read_basis(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_basis(&bytes)?.0)
}

pub fn transfer(match_dir: &Path, function: &Path, output: &Path) -> Result<()> {
    let c = FunctionalMap::load(&match_dir.join("fmap.txt"))?;
    let ext = |name: &str| -> Result<DMatrix<f64>> {
        let u = ProlongationMap::load(&match_dir.join(format!("{name}_prolongation.txt")))?;
        u.apply_matrix(&read_basis(&match_dir.join(format!("{name}.basis")))?)
    };
    let (ext_src, ext_tgt) = (ext("source")?, ext("target")?);
    let rows = parse_matrix_rows(&read_text(function)?)?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) || width == 0 {
        return Err(Error::Parse(format!("{}: rows must have equal, nonzero length", function.display())));
    }
    let f = DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]);
    let g = transfer_functions(&c, &ext_src, &ext_tgt, &f)?;
    let mut s = String::new();
    for row in g.row_iter() {
        let vals: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        writeln!(s, "{}", vals.join(" ")).unwrap();
    }
    write_text(output, &s)
}

fn mesh_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| MeshFormat::from_path(p).is_ok())
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Mesh `i` is perturbed with seed `seed + i` (files in name order).
pub fn badtosca(in_dir: &Path, out_dir: &Path, seed: u64) -> Result<()> {
    let files = mesh_files(in_dir)?;
    create_dir(out_dir)?;
    let mut meshes: Vec<(String, TriMesh, ProlongationMap)> = Vec::new();
    let mut seeds = String::from("mesh,seed\n");
    for (i, f) in files.iter().enumerate() {
        let mesh = load_mesh(f, None)?;
        let s = seed.wrapping_add(i as u64);
        let (perturbed, u) = badtosca_perturb(&mesh, s)?;
        let name = stem(f);
        save_mesh(&perturbed, out_dir.join(format!("{name}.off")), None)?;
        u.save(&out_dir.join(format!("{name}.perturbation.txt")))?;
        log::info!("perturbed {name} with seed {s}");
        writeln!(seeds, "{name},{s}").unwrap();
        meshes.push((name, mesh, u));
    }
    write_text(&out_dir.join("seeds.csv"), &seeds)?;
    let mut manifest = String::new();
    for i in 0..meshes.len() {
        for j in 0..meshes.len() {
            let ((ni, mi, ui), (nj, mj, uj)) = (&meshes[i], &meshes[j]);
            if i == j || !same_connectivity(mi, mj) {
                continue;
            }
            let gt = badtosca_groundtruth(mi, ui, uj)?;
            let gt_name = format!("{ni}__{nj}.gt.txt");
            gt.save(&out_dir.join(&gt_name))?;
            writeln!(manifest, "{ni}.off {nj}.off {gt_name}").unwrap();
        }
    }
    write_text(&out_dir.join("manifest.txt"), &manifest)
}

fn same_connectivity(a: &TriMesh, b: &TriMesh) -> bool {
    a.num_vertices() == b.num_vertices() && a.triangles().eq(b.triangles())
}

pub fn eval(manifest: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let m = Manifest::load(manifest)?;
    let mut rows = Vec::new();
    let mut jobs = Vec::new();
    for entry in &m.entries {
        let id = entry.pair_id();
        let target = load_mesh(&entry.target, None)?;
        let gt = GroundTruthMap::load(&entry.ground_truth)?;
        let pred = match &entry.prediction {
            Some(p) => PointMap::load(p)?,
            None => {
                let source = load_mesh(&entry.source, None)?;
                let r = match_meshes(&source, &target, cfg)?;
                jobs.push((id.clone(), r.timings));
                r.dense_map
            }
        };
        let e = geodesic_error(&pred, &gt, &target)?;
        log::info!("{id}: AGE {:.4}, AUC {:.4}", e.curve.age, e.curve.auc);
        rows.push(EvalRow { pair_id: id, age: e.curve.age, auc: e.curve.auc, curve: e.curve });
    }
    write_text(output, &summary_csv(&rows))?;
    write_text(&with_suffix(output, "_curves.csv"), &curves_csv(&rows))?;
    let report = timing_report(&jobs);
    write_text(&with_suffix(output, "_timing.csv"), &report.csv)?;
    write_text(&with_suffix(output, "_timing_cdf.csv"), &report.cumulative_csv())
}
