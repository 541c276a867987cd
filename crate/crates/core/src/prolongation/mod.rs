//! Closest-surface-point prolongation `U` from a low-resolution remesh back
//! to the dense mesh it came from.

mod aabb;

use std::fmt::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use aabb::{bary_point, closest_brute, closest_point_on_triangle, TriangleTree};

use crate::error::{Error, Result};
use crate::fmap::{pointmap_from_fmap, FunctionalMap, PointMap};
use crate::mesh::{Point3, TriMesh};
use crate::remesh::RemeshOutput;
use crate::spectral::SpectralBasis;
use crate::textio::{read_text, write_text};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub triangle: usize,
    pub bary: [f64; 3],
}

/// Closest point of `lowres` to `query`; `None` only for a mesh without
/// triangles.
pub fn closest_surface_point(tree: &TriangleTree, query: &Point3) -> Option<SurfacePoint> {
    tree.closest(query).map(|(triangle, bary, _)| SurfacePoint { triangle, bary })
}

/// Sparse row-stochastic `m × s` matrix in compressed row form.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongationMap {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl ProlongationMap {
    /// Rows of `(column, weight)`; columns are sorted and zero weights dropped.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let (mut col, mut val) = (Vec::new(), Vec::new());
        for mut r in rows {
            r.retain(|&(_, w)| w != 0.0);
            r.sort_by_key(|&(c, _)| c);
            for (k, &(c, w)) in r.iter().enumerate() {
                if c >= cols || !w.is_finite() || (k > 0 && r[k - 1].0 == c) {
                    return Err(Error::InvalidInput(format!("bad prolongation entry ({c}, {w})")));
                }
                col.push(c);
                val.push(w);
            }
            row_ptr.push(col.len());
        }
        Ok(ProlongationMap { rows: row_ptr.len() - 1, cols, row_ptr, col, val })
    }

    pub fn identity(n: usize) -> Self {
        ProlongationMap { rows: n, cols: n, row_ptr: (0..=n).collect(), col: (0..n).collect(), val: vec![1.0; n] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.cols {
            return Err(Error::Dimension(format!("function has {} values, map has {} columns", f.len(), self.cols)));
        }
        Ok((0..self.rows).map(|i| self.row(i).map(|(c, w)| w * f[c]).sum()).collect())
    }

    /// `U X` for a dense `s × k` matrix.
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.cols {
            return Err(Error::Dimension(format!("matrix has {} rows, map has {} columns", x.nrows(), self.cols)));
        }
        let k = x.ncols();
        let rows: Vec<Vec<f64>> = (0..self.rows)
            .into_par_iter()
            .map(|i| {
                let mut out = vec![0.0; k];
                for (c, w) in self.row(i) {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += w * x[(c, j)];
                    }
                }
                out
            })
            .collect();
        Ok(DMatrix::from_fn(self.rows, k, |i, j| rows[i][j]))
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.rows).map(|i| (self.row(i).map(|(_, w)| w).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Header `m s nnz`, then `row col weight` sorted by row and column.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.nnz());
        for i in 0..self.rows {
            for (c, w) in self.row(i) {
                writeln!(s, "{i} {c} {w}").unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty prolongation file".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| Error::Parse(format!("bad prolongation header {header:?}"))))
            .collect::<Result<_>>()?;
        let [m, s, nnz] = h[..] else {
            return Err(Error::Parse(format!("prolongation header needs three sizes, got {header:?}")));
        };
        if m > 1 << 28 || nnz > 1 << 30 {
            return Err(Error::Parse("prolongation map too large".into()));
        }
        let mut row_ptr = vec![0usize; m + 1];
        let (mut col, mut val) = (Vec::with_capacity(nnz.min(1 << 20)), Vec::with_capacity(nnz.min(1 << 20)));
        let mut last: Option<(usize, usize)> = None;
        for line in lines {
            let mut it = line.split_whitespace();
            let bad = || Error::Parse(format!("bad prolongation triplet {line:?}"));
            let r: usize = it.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
            let c: usize = it.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
            let w: f64 = it.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() || r >= m || c >= s || !w.is_finite() {
                return Err(bad());
            }
            if last.is_some_and(|l| l >= (r, c)) {
                return Err(Error::Parse(format!("prolongation triplets not sorted at {line:?}")));
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col.push(c);
            val.push(w);
        }
        if col.len() != nnz {
            return Err(Error::Parse(format!("prolongation header promises {nnz} entries, found {}", col.len())));
        }
        for i in 0..m {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(ProlongationMap { rows: m, cols: s, row_ptr, col, val })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}

/// Barycentric closest-point weights for every dense vertex against the
/// (possibly component-filtered) low-resolution mesh. Generator vertices get
/// exact unit rows.
pub fn build_prolongation(dense: &TriMesh, remesh: &RemeshOutput) -> Result<ProlongationMap> {
    let low = &remesh.lowres;
    if low.num_triangles() == 0 {
        return Err(Error::InvalidInput("low-resolution mesh has no triangles".into()));
    }
    if remesh.generator_of.len() != low.num_vertices() {
        return Err(Error::Dimension("generator list does not match the low-resolution mesh".into()));
    }
    let m = dense.num_vertices();
    let mut unit = vec![usize::MAX; m];
    for (j, &g) in remesh.generator_of.iter().enumerate() {
        // generators past the dense range are refinement midpoints
        if g < m {
            unit[g] = j;
        }
    }
    let tree = TriangleTree::new(low);
    let rows: Vec<Vec<(usize, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            if unit[i] != usize::MAX {
                return vec![(unit[i], 1.0)];
            }
            let sp = closest_surface_point(&tree, &dense.vertex(i)).expect("tree is nonempty");
            let tri = low.triangle(sp.triangle);
            (0..3).map(|k| (tri[k], sp.bary[k])).collect()
        })
        .collect();
    ProlongationMap::from_rows(low.num_vertices(), rows)
}

/// `U Φ̂`, without re-orthonormalization.
pub fn extend_basis(u: &ProlongationMap, low: &SpectralBasis) -> Result<DMatrix<f64>> {
    u.apply_matrix(&low.phi)
}

/// Dense point map `M → N`: nearest row of `U_N Ψ̂` for each row of
/// `(U_M Φ̂) C`.
pub fn recover_dense_pointmap(
    c: &FunctionalMap,
    u_src: &ProlongationMap,
    u_tgt: &ProlongationMap,
    low_src: &SpectralBasis,
    low_tgt: &SpectralBasis,
) -> Result<PointMap> {
    if c.k_source() > low_src.k() || c.k_target() > low_tgt.k() {
        return Err(Error::Dimension("functional map larger than the low-resolution bases".into()));
    }
    let src = u_src.apply_matrix(&low_src.phi.columns(0, c.k_source()).into_owned())?;
    let tgt = u_tgt.apply_matrix(&low_tgt.phi.columns(0, c.k_target()).into_owned())?;
    pointmap_from_fmap(c, &src, &tgt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::remesh::{remesh, RemeshParams};
    use crate::spectral::{build_laplacian, eigenbasis};
    use crate::timing::Timings;

    fn identity_remesh(m: &TriMesh) -> RemeshOutput {
        RemeshOutput {
            lowres: m.clone(),
            generator_of: (0..m.num_vertices()).collect(),
            texel_of: (0..m.num_vertices()).collect(),
            repair_count: 0,
        }
    }

    #[test]
    fn identity_remesh_is_identity() {
        let m = shapes::icosphere(2);
        let u = build_prolongation(&m, &identity_remesh(&m)).unwrap();
        assert_eq!(u, ProlongationMap::identity(m.num_vertices()));
        let b = eigenbasis(&build_laplacian(&m), 10).unwrap();
        assert_eq!(extend_basis(&u, &b).unwrap(), b.phi);
        let pi = recover_dense_pointmap(&FunctionalMap::identity(10), &u, &u, &b, &b).unwrap();
        assert_eq!(pi, PointMap::identity(m.num_vertices()));
    }

    #[test]
    fn centroid_query() {
        let m = shapes::octahedron();
        let tree = TriangleTree::new(&m);
        let [a, b, c] = m.triangle(0).map(|v| m.vertex(v));
        let mut n = crate::mesh::cross(&crate::mesh::sub(&b, &a), &crate::mesh::sub(&c, &a));
        let len = crate::mesh::norm(&n);
        n = n.map(|x| x / len * 0.1);
        let q: Point3 = std::array::from_fn(|k| (a[k] + b[k] + c[k]) / 3.0 + n[k]);
        let sp = closest_surface_point(&tree, &q).unwrap();
        assert_eq!(sp.triangle, 0);
        assert!(sp.bary.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-12));
        let sp = closest_surface_point(&tree, &m.vertex(4)).unwrap();
        assert_eq!(sp.bary.iter().filter(|&&w| w == 1.0).count(), 1);
    }

    #[test]
    fn remeshed_rows_are_stochastic_and_local() {
        let m = shapes::icosphere(4);
        let r = remesh(&m, &RemeshParams { samples: 200, ..Default::default() }, &mut Timings::default()).unwrap();
        let u = build_prolongation(&m, &r.output).unwrap();
        assert_eq!((u.rows(), u.cols()), (m.num_vertices(), 200));
        assert!(u.max_row_sum_error() < 1e-12);
        for (j, &g) in r.output.generator_of.iter().enumerate() {
            assert_eq!(u.row(g).collect::<Vec<_>>(), vec![(j, 1.0)]);
        }
        let low = &r.output.lowres;
        for i in 0..u.rows() {
            let cols: Vec<usize> = u.row(i).map(|(c, _)| c).collect();
            assert!(cols.len() <= 3);
            assert!(low.triangles().any(|t| cols.iter().all(|c| t.contains(c))));
            assert!(u.row(i).all(|(_, w)| (0.0..=1.0).contains(&w)));
        }
        let ones = u.apply(&vec![1.0; 200]).unwrap();
        assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn text_roundtrip() {
        let u = ProlongationMap::from_rows(3, vec![vec![(2, 0.25), (0, 0.75)], vec![(1, 1.0)]]).unwrap();
        let t = u.to_text();
        assert_eq!(t, "2 3 3\n0 0 0.75\n0 2 0.25\n1 1 1\n");
        assert_eq!(ProlongationMap::parse(&t).unwrap(), u);
        assert!(ProlongationMap::parse("2 3 2\n0 2 0.5\n0 0 0.5\n").is_err());
        assert!(ProlongationMap::parse("2 3 2\n0 0 1\n").is_err());
        assert!(ProlongationMap::parse("1 1 1\n0 4 1\n").is_err());
    }
}
