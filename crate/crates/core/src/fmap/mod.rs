//! Functional maps between two shapes `M` (source) and `N` (target).
//!
//! Orientation is fixed everywhere: a [`PointMap`] `Π : M → N` stores a
//! target vertex per source vertex, and a [`FunctionalMap`]
//! `C = Φᵀ A_M Π Ψ` (`k_M × k_N`) carries coefficients of functions on `N`
//! to coefficients of their pullbacks on `M`. Point maps are recovered from
//! `Π Ψ ≈ Φ C`: each source row of `Φ C` looks up its nearest row of `Ψ`.

mod kdtree;

use std::fmt::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

pub use kdtree::{nearest_brute, KdTree};

use crate::error::{Error, Result};
use crate::spectral::{DescriptorSet, SpectralBasis};
use crate::textio::{format_index_lines, parse_index_lines, read_text, write_text};

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalMap {
    /// `k_source × k_target`.
    pub c: DMatrix<f64>,
}

impl FunctionalMap {
    pub fn identity(k: usize) -> Self {
        FunctionalMap { c: DMatrix::identity(k, k) }
    }

    pub fn k_source(&self) -> usize {
        self.c.nrows()
    }

    pub fn k_target(&self) -> usize {
        self.c.ncols()
    }

    /// Header `k_source k_target`, then one row of `C` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.k_source(), self.k_target());
        for i in 0..self.k_source() {
            let row: Vec<String> = (0..self.k_target()).map(|j| format!("{}", self.c[(i, j)])).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty functional map file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| Error::Parse(format!("bad functional map header {header:?}"))))
            .collect::<Result<_>>()?;
        let [ks, kt] = dims[..] else {
            return Err(Error::Parse(format!("functional map header needs two sizes, got {header:?}")));
        };
        let total = ks
            .checked_mul(kt)
            .filter(|&t| t <= 1 << 26)
            .ok_or_else(|| Error::Parse("functional map too large".into()))?;
        let mut values = Vec::with_capacity(total);
        for line in lines {
            for w in line.split_whitespace() {
                values.push(w.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {w:?}")))?);
            }
        }
        if values.len() != total {
            return Err(Error::Parse(format!("functional map expects {total} values, found {}", values.len())));
        }
        Ok(FunctionalMap { c: DMatrix::from_row_slice(ks, kt, &values) })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointMap {
    pub target_of: Vec<usize>,
}

impl PointMap {
    pub fn identity(n: usize) -> Self {
        PointMap { target_of: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.target_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_of.is_empty()
    }

    pub fn to_text(&self) -> String {
        format_index_lines(&self.target_of)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let target_of = parse_index_lines(text)?
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::Parse(format!("point map entry {i} is missing"))))
            .collect::<Result<_>>()?;
        Ok(PointMap { target_of })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// `C = Φᵀ A_M Π Ψ` with `Π` applied as a row gather of `Ψ`.
pub fn fmap_from_pointmap(
    pi: &PointMap,
    phi_src: &DMatrix<f64>,
    mass_src: &[f64],
    psi_tgt: &DMatrix<f64>,
) -> Result<FunctionalMap> {
    let (n, km) = phi_src.shape();
    let kn = psi_tgt.ncols();
    if pi.len() != n || mass_src.len() != n {
        return Err(Error::Dimension(format!(
            "point map has {} entries, source basis {n} rows, mass {}",
            pi.len(),
            mass_src.len()
        )));
    }
    if let Some(&bad) = pi.target_of.iter().find(|&&t| t >= psi_tgt.nrows()) {
        return Err(Error::Dimension(format!("point map target {bad} exceeds target basis rows {}", psi_tgt.nrows())));
    }
    let mut c = DMatrix::zeros(km, kn);
    for i in 0..n {
        let t = pi.target_of[i];
        for b in 0..kn {
            let g = mass_src[i] * psi_tgt[(t, b)];
            if g == 0.0 {
                continue;
            }
            for a in 0..km {
                c[(a, b)] += phi_src[(i, a)] * g;
            }
        }
    }
    Ok(FunctionalMap { c })
}

/// Same as [`fmap_from_pointmap`] on two bases truncated to `k` columns each.
pub fn fmap_from_pointmap_k(
    pi: &PointMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
    k: usize,
) -> Result<FunctionalMap> {
    if k > src.k() || k > tgt.k() {
        return Err(Error::Dimension(format!("size {k} exceeds basis sizes {} / {}", src.k(), tgt.k())));
    }
    fmap_from_pointmap(pi, &src.phi.columns(0, k).into_owned(), &src.mass, &tgt.phi.columns(0, k).into_owned())
}

/// For each source row of `Φ C`, the nearest row of `Ψ` (exact, lowest
/// index on ties).
pub fn pointmap_from_fmap(c: &FunctionalMap, emb_src: &DMatrix<f64>, emb_tgt: &DMatrix<f64>) -> Result<PointMap> {
    if emb_src.ncols() != c.k_source() || emb_tgt.ncols() != c.k_target() {
        return Err(Error::Dimension(format!(
            "map is {}x{}, embeddings have {} and {} columns",
            c.k_source(),
            c.k_target(),
            emb_src.ncols(),
            emb_tgt.ncols()
        )));
    }
    if emb_src.nrows() == 0 || emb_tgt.nrows() == 0 || c.k_target() == 0 {
        return Err(Error::InvalidInput("empty embedding".into()));
    }
    let queries = emb_src * &c.c;
    let tree = KdTree::new(row_major(emb_tgt), c.k_target());
    Ok(PointMap { target_of: tree.nearest_all(&row_major(&queries)) })
}

/// Point map from a square map using the leading columns of both bases.
pub fn pointmap_from_fmap_k(c: &FunctionalMap, src: &SpectralBasis, tgt: &SpectralBasis) -> Result<PointMap> {
    if c.k_source() > src.k() || c.k_target() > tgt.k() {
        return Err(Error::Dimension("functional map larger than the bases".into()));
    }
    pointmap_from_fmap(
        c,
        &src.phi.columns(0, c.k_source()).into_owned(),
        &tgt.phi.columns(0, c.k_target()).into_owned(),
    )
}

/// Weights of the initialization energy relative to descriptor preservation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InitWeights {
    pub product: f64,
    pub laplacian: f64,
}

impl Default for InitWeights {
    fn default() -> Self {
        InitWeights { product: 0.1, laplacian: 1e-3 }
    }
}

/// Least-squares initial map of size `k0 × k0` preserving descriptors,
/// commuting with descriptor multiplication operators and (weakly) with the
/// Laplacians.
pub fn fmap_init(
    desc_src: &DescriptorSet,
    desc_tgt: &DescriptorSet,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
    k0: usize,
    weights: InitWeights,
) -> Result<FunctionalMap> {
    if desc_src.kind != desc_tgt.kind || desc_src.values.ncols() != desc_tgt.values.ncols() {
        return Err(Error::Dimension("descriptor sets differ in kind or count".into()));
    }
    if k0 == 0 || k0 > src.k() || k0 > tgt.k() {
        return Err(Error::Dimension(format!("k0 = {k0} must lie in [1, {}]", src.k().min(tgt.k()))));
    }
    if desc_src.values.iter().all(|&x| x == 0.0) || desc_tgt.values.iter().all(|&x| x == 0.0) {
        return Err(Error::Numerical("descriptors are all zero; the initialization is rank deficient".into()));
    }
    let phi = src.phi.columns(0, k0).into_owned();
    let psi = tgt.phi.columns(0, k0).into_owned();
    let a = weighted_tr_mul(&phi, &src.mass, &desc_src.values);
    let b = weighted_tr_mul(&psi, &tgt.mass, &desc_tgt.values);
    let k = k0;
    let nk = k * k;
    let eye = DMatrix::<f64>::identity(k, k);
    // energy ‖C B − A‖² + μ_p Σ_f ‖C Y_f − X_f C‖² + μ_l ‖C Λ_N − Λ_M C‖² in vec(C)
    let mut lhs = kron(&(&b * b.transpose()), &eye);
    let rhs_mat = &a * b.transpose();
    let mut rhs = DVector::from_column_slice(rhs_mat.as_slice());
    if weights.product > 0.0 {
        for f in 0..desc_src.values.ncols() {
            let x = multiplication_operator(&phi, &src.mass, desc_src.values.column(f).as_slice());
            let y = multiplication_operator(&psi, &tgt.mass, desc_tgt.values.column(f).as_slice());
            let term = kron(&(&y * &y), &eye) - kron(&y, &x) * 2.0 + kron(&eye, &(&x * &x));
            lhs += term * weights.product;
        }
    }
    let lmax = src.lambda[k - 1].abs().max(tgt.lambda[k - 1].abs()).max(f64::MIN_POSITIVE);
    for col in 0..k {
        for row in 0..k {
            let d = (tgt.lambda[col] - src.lambda[row]) / lmax;
            lhs[(col * k + row, col * k + row)] += weights.laplacian * d * d;
        }
    }
    let sym = (&lhs + lhs.transpose()) * 0.5;
    let x = match sym.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let ridge = 1e-8 * (0..nk).map(|i| sym[(i, i)]).sum::<f64>() / nk as f64;
            log::warn!("initialization system is rank deficient; adding ridge {ridge:e}");
            let mut reg = sym;
            for i in 0..nk {
                reg[(i, i)] += ridge.max(1e-300);
            }
            reg.cholesky().ok_or_else(|| Error::Numerical("initialization system is singular".into()))?.solve(&rhs)
        }
    };
    rhs = x;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("initialization produced non-finite coefficients".into()));
    }
    Ok(FunctionalMap { c: DMatrix::from_column_slice(k, k, rhs.as_slice()) })
}

fn weighted_tr_mul(phi: &DMatrix<f64>, mass: &[f64], f: &DMatrix<f64>) -> DMatrix<f64> {
    let mut af = f.clone();
    for (i, mut row) in af.row_iter_mut().enumerate() {
        row *= mass[i];
    }
    phi.tr_mul(&af)
}

/// `Φᵀ A diag(f) Φ`.
fn multiplication_operator(phi: &DMatrix<f64>, mass: &[f64], f: &[f64]) -> DMatrix<f64> {
    let mut scaled = phi.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= mass[i] * f[i];
    }
    phi.tr_mul(&scaled)
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// ZoomOut: alternate point-map extraction and re-projection while the map
/// grows by `step` up to `k_final`.
pub fn zoomout(
    c0: &FunctionalMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
    step: usize,
    k_final: usize,
) -> Result<FunctionalMap> {
    zoomout_with_map(c0, src, tgt, step, k_final).map(|r| r.0)
}

/// [`zoomout`] that also returns the last extracted point map.
pub fn zoomout_with_map(
    c0: &FunctionalMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
    step: usize,
    k_final: usize,
) -> Result<(FunctionalMap, PointMap)> {
    if c0.k_source() != c0.k_target() {
        return Err(Error::Dimension("zoomout expects a square initial map".into()));
    }
    if k_final > src.k() || k_final > tgt.k() {
        return Err(Error::Dimension(format!("k_final = {k_final} exceeds basis sizes {} / {}", src.k(), tgt.k())));
    }
    if k_final < c0.k_source() {
        return Err(Error::InvalidInput("k_final is smaller than the initial map".into()));
    }
    if step == 0 && k_final > c0.k_source() {
        return Err(Error::InvalidInput("zoomout step must be positive".into()));
    }
    let mut c = c0.clone();
    loop {
        let k = c.k_source();
        let pi = pointmap_from_fmap_k(&c, src, tgt)?;
        let next = (k + step).min(k_final);
        c = fmap_from_pointmap_k(&pi, src, tgt, next)?;
        if next >= k_final {
            return Ok((c, pi));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::spectral::{build_laplacian, descriptors, eigenbasis, eigenbasis_dense, DescriptorKind};

    fn basis(m: &crate::TriMesh, k: usize) -> SpectralBasis {
        eigenbasis(&build_laplacian(m), k).unwrap()
    }

    #[test]
    fn identity_map_gives_identity() {
        let m = shapes::icosphere(2);
        let b = basis(&m, 12);
        let c = fmap_from_pointmap(&PointMap::identity(m.num_vertices()), &b.phi, &b.mass, &b.phi).unwrap();
        assert!((c.c - DMatrix::<f64>::identity(12, 12)).abs().max() < 1e-9);
        let pi = pointmap_from_fmap(&FunctionalMap::identity(12), &b.phi, &b.phi).unwrap();
        assert_eq!(pi, PointMap::identity(m.num_vertices()));
    }

    #[test]
    fn single_constant_coefficient() {
        let m = shapes::torus(1.0, 0.4, 20, 8);
        let b = basis(&m, 1);
        let pi = PointMap { target_of: (0..m.num_vertices()).map(|i| (i * 7) % m.num_vertices()).collect() };
        let c = fmap_from_pointmap(&pi, &b.phi, &b.mass, &b.phi).unwrap();
        assert!((c.c[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permuted_copy_is_orthogonal() {
        let m = shapes::octahedron();
        let n = m.num_vertices();
        let perm = [3, 5, 0, 4, 1, 2];
        let tris: Vec<[usize; 3]> = m.triangles().map(|t| t.map(|v| perm[v])).collect();
        let mut verts = vec![[0.0; 3]; n];
        for v in 0..n {
            verts[perm[v]] = m.vertex(v);
        }
        let p = crate::TriMesh::new(verts, tris).unwrap();
        let bm = eigenbasis_dense(&build_laplacian(&m), n).unwrap();
        let bp = eigenbasis_dense(&build_laplacian(&p), n).unwrap();
        let pi = PointMap { target_of: perm.to_vec() };
        let c = fmap_from_pointmap(&pi, &bm.phi, &bm.mass, &bp.phi).unwrap();
        assert!((c.c.transpose() * &c.c - DMatrix::<f64>::identity(n, n)).abs().max() < 1e-9);
        // complete bases: point map recovered exactly
        assert_eq!(pointmap_from_fmap(&c, &bm.phi, &bp.phi).unwrap(), pi);
    }

    #[test]
    fn dimension_errors() {
        let m = shapes::octahedron();
        let b = basis(&m, 3);
        assert!(fmap_from_pointmap(&PointMap::identity(5), &b.phi, &b.mass, &b.phi).is_err());
        assert!(fmap_from_pointmap(&PointMap { target_of: vec![9; 6] }, &b.phi, &b.mass, &b.phi).is_err());
        assert!(pointmap_from_fmap(&FunctionalMap::identity(2), &b.phi, &b.phi).is_err());
    }

    #[test]
    fn init_on_identical_shapes_is_identity() {
        let m = shapes::bumpy_tube(16, 30, 0.0);
        let b = basis(&m, 20);
        let d = descriptors(&b, DescriptorKind::Wks, 40).unwrap();
        let c = fmap_init(&d, &d, &b, &b, 10, InitWeights::default()).unwrap();
        let off: f64 = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| c.c[(i, j)].abs())
            .sum();
        assert!(off < 1e-3, "{off}");
        let mut zero = d.clone();
        zero.values.fill(0.0);
        assert!(fmap_init(&zero, &zero, &b, &b, 10, InitWeights::default()).is_err());
    }

    #[test]
    fn zoomout_identity_fixed_point() {
        let m = shapes::bumpy_tube(16, 30, 0.0);
        let b = basis(&m, 20);
        let (c, pi) = zoomout_with_map(&FunctionalMap::identity(5), &b, &b, 5, 20).unwrap();
        assert!((c.c - DMatrix::<f64>::identity(20, 20)).abs().max() < 1e-6);
        assert_eq!(pi, PointMap::identity(m.num_vertices()));
        assert!(zoomout(&FunctionalMap::identity(5), &b, &b, 5, 21).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let c = FunctionalMap { c: DMatrix::from_fn(3, 2, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0)) };
        assert_eq!(FunctionalMap::parse(&c.to_text()).unwrap(), c);
        assert!(FunctionalMap::parse("2 2\n1 2 3\n").is_err());
        let p = PointMap { target_of: vec![2, 0, 1] };
        assert_eq!(PointMap::parse(&p.to_text()).unwrap(), p);
        assert!(PointMap::parse("1\n-1\n").is_err());
    }
}
