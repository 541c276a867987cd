//! Smallest eigenpairs of the pencil `S x = λ A x` with diagonal `A`.
//!
//! The pencil is reduced to the symmetric operator
//! `y ↦ A^{1/2} (S − σA)^{-1} A^{1/2} y`, whose largest eigenvalues
//! `θ = 1 / (λ − σ)` belong to the smallest `λ`. A block Krylov method with
//! full reorthogonalization and thick restarts extracts them; the block size
//! lets it resolve eigenvalues of multiplicity up to the block width, which
//! symmetric shapes produce exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cholesky::EnvelopeCholesky;
use super::laplacian::LaplacianPair;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

const BLOCK: usize = 6;
const TOL: f64 = 1e-10;
const DENSE_LIMIT: usize = 400;

/// Truncated Laplace-Beltrami eigenbasis with its mass matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    /// `|V| × k`, A-orthonormal columns.
    pub phi: DMatrix<f64>,
    /// Ascending.
    pub lambda: Vec<f64>,
    pub mass: Vec<f64>,
}

impl SpectralBasis {
    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.phi.nrows()
    }

    /// First `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> SpectralBasis {
        SpectralBasis {
            phi: self.phi.columns(0, k).into_owned(),
            lambda: self.lambda[..k].to_vec(),
            mass: self.mass.clone(),
        }
    }

    /// `Φᵀ A F` for an `|V| × d` matrix of functions.
    pub fn project(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let mut af = f.clone();
        for (i, mut row) in af.row_iter_mut().enumerate() {
            row *= self.mass[i];
        }
        self.phi.tr_mul(&af)
    }

    /// Largest entry of `|ΦᵀAΦ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.project(&self.phi);
        let k = self.k();
        (g - DMatrix::<f64>::identity(k, k)).abs().max()
    }

    /// Largest column residual `‖SΦ_i − λ_i AΦ_i‖_∞` relative to `‖S‖_∞`.
    pub fn residual(&self, stiffness: &CsrMatrix) -> f64 {
        let n = self.num_vertices();
        let mut sx = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for (c, &l) in self.lambda.iter().enumerate() {
            let x: Vec<f64> = self.phi.column(c).iter().copied().collect();
            stiffness.mul_vec(&x, &mut sx);
            for i in 0..n {
                worst = worst.max((sx[i] - l * self.mass[i] * x[i]).abs());
            }
        }
        worst / stiffness.norm_inf()
    }
}

/// `k` smallest eigenpairs, A-orthonormal, ascending, with the first
/// significant entry of each column positive.
pub fn eigenbasis(lap: &LaplacianPair, k: usize) -> Result<SpectralBasis> {
    let n = lap.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("eigenpair count {k} must lie in [1, {})", n)));
    }
    if n <= DENSE_LIMIT || 2 * k + 2 * BLOCK >= n {
        eigenbasis_dense(lap, k)
    } else {
        eigenbasis_lanczos(lap, k)
    }
}

/// Dense solve of `A^{-1/2} S A^{-1/2}`; exact reference for small meshes.
pub fn eigenbasis_dense(lap: &LaplacianPair, k: usize) -> Result<SpectralBasis> {
    let n = lap.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("eigenpair count {k} must lie in [1, {n}]")));
    }
    let isq: Vec<f64> = lap.mass.iter().map(|a| 1.0 / a.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in lap.stiffness.row(i) {
            m[(i, j)] = v * isq[i] * isq[j];
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut phi = DMatrix::zeros(n, k);
    let mut lambda = Vec::with_capacity(k);
    for (c, &o) in order.iter().take(k).enumerate() {
        lambda.push(eig.eigenvalues[o]);
        for i in 0..n {
            phi[(i, c)] = eig.eigenvectors[(i, o)] * isq[i];
        }
    }
    Ok(finish(phi, lambda, lap))
}

/// Shift-invert block Lanczos.
pub fn eigenbasis_lanczos(lap: &LaplacianPair, k: usize) -> Result<SpectralBasis> {
    let n = lap.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("eigenpair count {k} must lie in [1, {n})")));
    }
    let diag = lap.stiffness.diagonal();
    let sigma = -1e-8 * diag.iter().sum::<f64>() / n as f64;
    let shifted = shifted_matrix(&lap.stiffness, &lap.mass, sigma);
    let chol = EnvelopeCholesky::factor(&shifted)?;
    log::debug!("shift-invert factor: n = {n}, profile = {}", chol.profile());
    let sq: Vec<f64> = lap.mass.iter().map(|a| a.sqrt()).collect();
    // the kernel (one constant per component) is known exactly; deflating it
    // keeps its huge shift-inverted eigenvalue from swamping the rest
    let kernel: Vec<Vec<f64>> = component_labels(&lap.stiffness)
        .into_iter()
        .map(|members| {
            let mut u = vec![0.0; n];
            for &i in &members {
                u[i] = sq[i];
            }
            let norm = dotv(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= norm);
            u
        })
        .collect();
    let c = kernel.len().min(k);
    let mut vecs: Vec<Vec<f64>> = kernel[..c].to_vec();
    if k > c {
        let mut tmp = vec![0.0; n];
        let mut sol = vec![0.0; n];
        let mut op = |y: &[f64]| -> Vec<f64> {
            for i in 0..n {
                tmp[i] = sq[i] * y[i];
            }
            chol.solve(&tmp, &mut sol);
            let mut out: Vec<f64> = (0..n).map(|i| sq[i] * sol[i]).collect();
            for u in &kernel {
                let d = dotv(u, &out);
                axpy(-d, u, &mut out);
            }
            out
        };
        let (_, rest) = block_krylov_largest(&mut op, n, k - c, TOL, 30 * k, &kernel)?;
        vecs.extend(rest);
    }
    let mut phi = DMatrix::zeros(n, k);
    for (c, y) in vecs.iter().enumerate() {
        for i in 0..n {
            phi[(i, c)] = y[i] / sq[i];
        }
    }
    // Rayleigh quotients are more accurate than 1/θ + σ near zero
    let mut pairs: Vec<(f64, usize)> = (0..k)
        .map(|c| {
            let x: Vec<f64> = phi.column(c).iter().copied().collect();
            let mut sx = vec![0.0; n];
            lap.stiffness.mul_vec(&x, &mut sx);
            let num: f64 = x.iter().zip(&sx).map(|(a, b)| a * b).sum();
            let den: f64 = x.iter().zip(&lap.mass).map(|(a, m)| a * a * m).sum();
            (num / den, c)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sorted = DMatrix::zeros(n, k);
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        sorted.set_column(dst, &phi.column(src));
    }
    Ok(finish(sorted, pairs.iter().map(|p| p.0).collect(), lap))
}

/// Vertex sets of the connected components of the sparsity graph, ordered by
/// smallest member.
fn component_labels(m: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut members = vec![s];
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            i += 1;
            for (j, _) in m.row(v) {
                if !seen[j] {
                    seen[j] = true;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

fn shifted_matrix(s: &CsrMatrix, mass: &[f64], sigma: f64) -> CsrMatrix {
    let rows = (0..s.dim())
        .map(|i| s.row(i).map(|(j, v)| (j, if i == j { v - sigma * mass[i] } else { v })).collect())
        .collect();
    CsrMatrix::from_rows(rows)
}

fn finish(mut phi: DMatrix<f64>, lambda: Vec<f64>, lap: &LaplacianPair) -> SpectralBasis {
    for mut col in phi.column_iter_mut() {
        let norm: f64 = col.iter().zip(&lap.mass).map(|(x, m)| x * x * m).sum::<f64>().sqrt();
        col /= norm;
        let big = col.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-10 * big) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
    }
    SpectralBasis { phi, lambda, mass: lap.mass.clone() }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthonormalizes `block` against `basis` and itself (two Gram-Schmidt
/// passes), dropping vectors that are numerically dependent.
fn orthonormalize(block: Vec<Vec<f64>>, basis: &[Vec<f64>], locked: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut x in block {
        let before = dotv(&x, &x).sqrt();
        if before == 0.0 || !before.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in locked.iter().chain(basis).chain(out.iter()) {
                let c = dotv(q, &x);
                axpy(-c, q, &mut x);
            }
        }
        let after = dotv(&x, &x).sqrt();
        if after > 1e-10 * before {
            x.iter_mut().for_each(|v| *v /= after);
            out.push(x);
        }
    }
    out
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Vec<Vec<f64>> {
    (0..b).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Largest `k` eigenpairs of a symmetric operator given only by its action.
fn block_krylov_largest(
    op: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    n: usize,
    k: usize,
    tol: f64,
    max_steps: usize,
    locked: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let b = BLOCK.min(n);
    let m_max = (2 * k + 2 * b).min(n);
    let keep = (k + b).min(m_max.saturating_sub(b)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut block = random_block(&mut rng, n, b);
    let mut steps = 0;
    loop {
        let mut stalls = 0;
        while v.len() < m_max {
            let mut q = orthonormalize(std::mem::take(&mut block), &v, locked);
            if q.is_empty() {
                stalls += 1;
                if stalls > 3 {
                    break;
                }
                block = random_block(&mut rng, n, b);
                continue;
            }
            q.truncate(m_max - v.len());
            steps += 1;
            for x in q {
                let y = op(&x);
                block.push(y.clone());
                v.push(x);
                w.push(y);
            }
        }
        let m = v.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = dotv(&v[i], &w[j]);
            }
        }
        let hs = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(hs);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
        let top = keep.min(m);
        let mut thetas = Vec::with_capacity(top);
        let mut ys = Vec::with_capacity(top);
        let mut zs = Vec::with_capacity(top);
        let mut rs = Vec::with_capacity(top);
        let mut converged = vec![false; top];
        for (t, &o) in order.iter().take(top).enumerate() {
            let qv = eig.eigenvectors.column(o);
            let theta = eig.eigenvalues[o];
            let mut y = vec![0.0; n];
            let mut z = vec![0.0; n];
            for j in 0..m {
                axpy(qv[j], &v[j], &mut y);
                axpy(qv[j], &w[j], &mut z);
            }
            // residual component outside the current subspace
            let hq = &h * qv;
            let mut r = z.clone();
            for j in 0..m {
                axpy(-hq[j], &v[j], &mut r);
            }
            let res = dotv(&r, &r).sqrt();
            converged[t] = res <= tol * theta.abs();
            thetas.push(theta);
            ys.push(y);
            zs.push(z);
            rs.push(r);
        }
        log::trace!(
            "block step {steps}: {} of {k} Ritz pairs converged",
            converged[..k].iter().filter(|c| **c).count()
        );
        if converged[..k].iter().all(|&c| c) || m == n {
            ys.truncate(k);
            thetas.truncate(k);
            return Ok((thetas, ys));
        }
        if steps >= max_steps {
            let left = converged[..k].iter().filter(|c| !**c).count();
            return Err(Error::Numerical(format!(
                "eigensolver did not converge: {left} of {k} pairs above tolerance after {steps} block steps"
            )));
        }
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(b);
        for t in (0..top).filter(|&t| !converged[t]) {
            if next.len() == b {
                break;
            }
            next.push(rs[t].clone());
        }
        block = next;
        if block.is_empty() {
            block = random_block(&mut rng, n, b);
        }
        v = ys;
        w = zs;
    }
}
