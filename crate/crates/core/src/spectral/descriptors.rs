use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::SpectralBasis;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Wks,
    Hks,
}

/// Per-vertex descriptor functions, one per column.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSet {
    pub values: DMatrix<f64>,
    pub kind: DescriptorKind,
    /// Log-energies (WKS) or diffusion times (HKS) per column.
    pub samples: Vec<f64>,
}

fn logspace(lo: f64, hi: f64, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![lo];
    }
    (0..d).map(|i| lo + (hi - lo) * i as f64 / (d - 1) as f64).collect()
}

/// Wave (WKS) or heat (HKS) kernel signatures from the basis, with each
/// column scaled to unit A-norm.
pub fn descriptors(basis: &SpectralBasis, kind: DescriptorKind, d: usize) -> Result<DescriptorSet> {
    let k = basis.k();
    if k < 2 {
        return Err(Error::InvalidInput(format!("descriptors need at least 2 eigenpairs, got {k}")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("descriptor count must be positive".into()));
    }
    let lmax = basis.lambda[k - 1];
    // skip the kernel (one near-zero eigenvalue per component)
    let first = basis.lambda.iter().position(|&l| l > 1e-8 * lmax.abs().max(f64::MIN_POSITIVE));
    let Some(first) = first.filter(|&f| f < k) else {
        return Err(Error::InvalidInput("basis has no nonzero eigenvalue".into()));
    };
    let lam = &basis.lambda[first..];
    let n = basis.num_vertices();
    let sq = |i: usize, c: usize| {
        let x = basis.phi[(i, first + c)];
        x * x
    };
    let mut values = DMatrix::zeros(n, d);
    let samples;
    match kind {
        DescriptorKind::Wks => {
            let (emin, emax) = (lam[0].ln(), lam[lam.len() - 1].ln());
            let sigma = 7.0 * (emax - emin).max(1e-12) / d as f64;
            let (lo, hi) =
                if emax - emin > 4.0 * sigma { (emin + 2.0 * sigma, emax - 2.0 * sigma) } else { (emin, emax) };
            samples = logspace(lo, hi, d);
            for (c, &e) in samples.iter().enumerate() {
                let w: Vec<f64> = lam.iter().map(|l| (-(e - l.ln()).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
                let total: f64 = w.iter().sum();
                for i in 0..n {
                    let s: f64 = w.iter().enumerate().map(|(j, wj)| wj * sq(i, j)).sum();
                    values[(i, c)] = s / total;
                }
            }
        }
        DescriptorKind::Hks => {
            let ln10 = 10f64.ln();
            let (tmin, tmax) = (4.0 * ln10 / lam[lam.len() - 1], 4.0 * ln10 / lam[0]);
            samples = logspace(tmin.ln(), tmax.ln(), d).into_iter().map(f64::exp).collect();
            for (c, &t) in samples.iter().enumerate() {
                let w: Vec<f64> = lam.iter().map(|l| (-t * l).exp()).collect();
                for i in 0..n {
                    values[(i, c)] = w.iter().enumerate().map(|(j, wj)| wj * sq(i, j)).sum();
                }
            }
        }
    }
    for mut col in values.column_iter_mut() {
        let norm: f64 = col.iter().zip(&basis.mass).map(|(x, a)| x * x * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
    Ok(DescriptorSet { values, kind, samples })
}
