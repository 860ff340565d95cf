//! Small dense symmetric-matrix helpers (cyclic Jacobi eigendecomposition).
//!
//! Matrices are n x n row-major slices. Jacobi is slow for large n but
//! unconditionally robust for the symmetric positive-semidefinite inputs
//! this crate produces.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix: `values[k]` belongs to the
/// eigenvector stored in column `k` of `vectors` (row-major n x n).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi iteration; input must be symmetric.
pub fn symmetric_eigen(mat: &[f64], n: usize) -> Result<SymEigen> {
    assert_eq!(mat.len(), n * n);
    let mut a = mat.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Ok(SymEigen {
            values: (0..n).map(|i| a[i * n + i]).collect(),
            vectors: v,
        });
    }

    let scale: f64 = mat.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            return Ok(SymEigen {
                values: (0..n).map(|i| a[i * n + i]).collect(),
                vectors: v,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::EigenNonConvergence { sweeps: MAX_SWEEPS })
}

/// `a * b` for n x n row-major matrices.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Symmetric square root with eigenvalues clamped at zero.
pub fn psd_sqrt(mat: &[f64], n: usize) -> Result<Vec<f64>> {
    let eig = symmetric_eigen(mat, n)?;
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    // V * diag(roots) * V^T
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let acc: f64 = roots
                .iter()
                .enumerate()
                .map(|(k, r)| eig.vectors[i * n + k] * r * eig.vectors[j * n + k])
                .sum();
            out[i * n + j] = acc;
        }
    }
    Ok(out)
}
