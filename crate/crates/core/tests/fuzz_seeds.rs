//! Every checked-in fuzz seed is a valid input for its target.

use std::path::{Path, PathBuf};

use meshcorr::bench::{parse_timing_csv, GroundTruthMap, Manifest};
use meshcorr::fmap::{FunctionalMap, PointMap};
use meshcorr::mesh::io::parse_mesh;
use meshcorr::mesh::MeshFormat;
use meshcorr::prolongation::ProlongationMap;
use meshcorr::spectral::cache::decode_basis;
use meshcorr::textio::parse_matrix_rows;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn check(target: &str, parse: impl Fn(&[u8]) -> bool) {
    for (path, bytes) in seeds(target) {
        assert!(parse(&bytes), "{} does not parse", path.display());
    }
}

fn text(b: &[u8]) -> &str {
    std::str::from_utf8(b).unwrap()
}

#[test]
fn seeds_parse() {
    check("mesh_off", |b| parse_mesh(b, MeshFormat::Off).is_ok());
    check("mesh_obj", |b| parse_mesh(b, MeshFormat::Obj).is_ok());
    check("mesh_ply", |b| parse_mesh(b, MeshFormat::Ply).is_ok());
    check("fmap", |b| FunctionalMap::parse(text(b)).is_ok());
    check("pointmap", |b| PointMap::parse(text(b)).is_ok());
    check("prolongation", |b| ProlongationMap::parse(text(b)).is_ok());
    check("groundtruth", |b| GroundTruthMap::parse(text(b)).is_ok());
    check("manifest", |b| Manifest::parse(text(b), Path::new("/data")).is_ok());
    check("timing_csv", |b| parse_timing_csv(text(b)).is_ok());
    check("basis_cache", |b| decode_basis(b).is_ok());
    check("matrix_rows", |b| parse_matrix_rows(text(b)).is_ok());
}
