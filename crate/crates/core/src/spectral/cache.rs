//! On-disk eigenbasis cache keyed by mesh content.
//!
//! Layout (little endian): `u64 |V|`, `u64 k`, `|V|·k` row-major `f64`
//! entries of Φ, then `k` eigenvalues.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::eigen::SpectralBasis;
use super::laplacian::LaplacianPair;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Hex SHA-256 over vertex coordinate bits, triangles and `k`.
pub fn cache_key(mesh: &TriMesh, k: usize) -> String {
    let mut h = Sha256::new();
    h.update((mesh.num_vertices() as u64).to_le_bytes());
    for p in mesh.vertices() {
        for c in p {
            h.update(c.to_bits().to_le_bytes());
        }
    }
    h.update((mesh.num_triangles() as u64).to_le_bytes());
    for t in mesh.triangles() {
        for v in t {
            h.update((v as u64).to_le_bytes());
        }
    }
    h.update((k as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode_basis(phi: &DMatrix<f64>, lambda: &[f64]) -> Vec<u8> {
    let (n, k) = phi.shape();
    let mut out = Vec::with_capacity(16 + 8 * (n * k + k));
    out.extend((n as u64).to_le_bytes());
    out.extend((k as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..k {
            out.extend(phi[(i, j)].to_le_bytes());
        }
    }
    for l in lambda {
        out.extend(l.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_basis`]; checks the length against the header.
pub fn decode_basis(bytes: &[u8]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| Error::Parse("basis cache truncated".into()))
    };
    let n = u64::from_le_bytes(word(0)?);
    let k = u64::from_le_bytes(word(1)?);
    let count = n
        .checked_mul(k)
        .and_then(|nk| nk.checked_add(k))
        .and_then(|c| c.checked_add(2))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Parse("basis cache header overflows".into()))?;
    if count != bytes.len() as u64 {
        return Err(Error::Parse(format!("basis cache holds {} bytes, header implies {count}", bytes.len())));
    }
    let (n, k) = (n as usize, k as usize);
    let f = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let phi = DMatrix::from_fn(n, k, |i, j| f(2 + i * k + j));
    let lambda = (0..k).map(|j| f(2 + n * k + j)).collect();
    Ok((phi, lambda))
}

pub fn cache_path(dir: &Path, mesh: &TriMesh, k: usize) -> PathBuf {
    dir.join(format!("{}.basis", cache_key(mesh, k)))
}

pub fn store_basis(dir: &Path, mesh: &TriMesh, basis: &SpectralBasis) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = cache_path(dir, mesh, basis.k());
    std::fs::write(&path, encode_basis(&basis.phi, &basis.lambda)).map_err(|e| Error::io(path, e))
}

/// Cached basis for this mesh and `k`, if present and well formed.
pub fn load_basis(dir: &Path, mesh: &TriMesh, lap: &LaplacianPair, k: usize) -> Option<SpectralBasis> {
    let bytes = std::fs::read(cache_path(dir, mesh, k)).ok()?;
    let (phi, lambda) = decode_basis(&bytes).ok()?;
    (phi.shape() == (mesh.num_vertices(), k)).then(|| SpectralBasis { phi, lambda, mass: lap.mass.clone() })
}
