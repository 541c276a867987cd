//! Envelope (skyline) Cholesky factorization under reverse Cuthill-McKee
//! ordering. Mesh Laplacians have a small profile after RCM, so the envelope
//! keeps fill-in modest without a general sparse symbolic phase.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &CsrMatrix) -> Vec<usize> {
    let n = m.dim();
    let degree: Vec<usize> = (0..n).map(|i| m.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut nbrs: Vec<usize> = Vec::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: walk to the farthest min-degree node
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..8 {
            let (far, e) = farthest_level(m, start, &degree, &mut level);
            if e <= ecc {
                break;
            }
            ecc = e;
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(m.row(v).map(|(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn farthest_level(m: &CsrMatrix, start: usize, degree: &[usize], level: &mut [usize]) -> (usize, usize) {
    let mut touched = vec![start];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let l = level[v];
        if l > best.1 || (l == best.1 && degree[v] < degree[best.0]) {
            best = (v, l);
        }
        for (j, _) in m.row(v) {
            if level[j] == usize::MAX {
                level[j] = l + 1;
                touched.push(j);
                queue.push_back(j);
            }
        }
    }
    for v in touched {
        level[v] = usize::MAX;
    }
    best
}

/// Lower-triangular factor `L` with `P K Pᵀ = L Lᵀ`, stored row by row from
/// the first structurally nonzero column.
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(k: &CsrMatrix) -> Result<Self> {
        let n = k.dim();
        let perm = reverse_cuthill_mckee(k);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> =
            (0..n).map(|i| k.row(perm[i]).map(|(j, _)| inv[j]).filter(|&j| j <= i).min().unwrap_or(i).min(i)).collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in k.row(perm[i]) {
                let jn = inv[j];
                if jn <= i {
                    values[offset[i] + jn - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(offset[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &done[offset[j]..offset[j + 1]];
                let lo = fi.max(fj);
                let dot: f64 = row_i[lo - fi..j - fi].iter().zip(&row_j[lo - fj..j - fj]).map(|(a, b)| a * b).sum();
                row_i[j - fi] = (row_i[j - fi] - dot) / row_j[j - fj];
            }
            let sq: f64 = row_i[..i - fi].iter().map(|x| x * x).sum();
            let d = row_i[i - fi] - sq;
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Numerical(format!("matrix is not positive definite (pivot {i})")));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky { perm, first, offset, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn profile(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.dim();
        let mut z: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&z[fi..i]).map(|(a, b)| a * b).sum();
            z[i] = (z[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let xi = z[i] / row[i - fi];
            z[i] = xi;
            for (zk, l) in z[fi..i].iter_mut().zip(&row[..i - fi]) {
                *zk -= l * xi;
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
    }
}
