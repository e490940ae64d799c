use crate::dense::DenseMatrix;
use crate::densela::qr_householder;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;

pub const SVD_MAX_SWEEPS: usize = 30;

/// Economy SVD `A = U diag(s) V^T` with `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// `U_k diag(s_k) V_k^T` using the leading `k` triplets.
    pub fn reconstruct(&self, k: usize) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(m, n);
        for t in 0..k.min(self.s.len()) {
            let s = self.s[t];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let ui = self.u[(i, t)] * s;
                if ui == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += ui * self.v[(j, t)];
                }
            }
        }
        out
    }
}

/// One-sided (Hestenes) Jacobi SVD in `f64`.
///
/// Tall inputs are first reduced by Householder QR so the rotations act on
/// the small triangular factor. A sweep rotates every column pair whose
/// cosine exceeds machine epsilon; convergence is a sweep without rotations.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    if n == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(m, 0),
            s: vec![],
            v: DenseMatrix::zeros(0, 0),
        });
    }
    if m > n {
        let qr = qr_householder(a, PrecisionContext::fp64())?;
        let inner = jacobi(qr.r())?;
        let q = qr.q_thin();
        return Ok(Svd {
            u: q.mul(&inner.u),
            s: inner.s,
            v: inner.v,
        });
    }
    jacobi(a)
}

fn jacobi(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let eps = f64::EPSILON;
    // Gram entries below this are rounding noise of the whole matrix;
    // rotating them would cycle on numerically rank-deficient inputs.
    let fro2: f64 = w.iter().map(|c| dot(c, c)).sum();
    let noise = eps * eps * fro2;
    let mut converged = false;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma.abs() <= noise {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wp, wq) = pair_mut(&mut w, p, q);
                rotate(wp, wq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s);
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: SVD_MAX_SWEEPS,
        });
    }

    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = w
        .into_iter()
        .zip(v)
        .map(|(col, vcol)| {
            let s = dot(&col, &col).sqrt();
            let u = if s > 0.0 {
                col.iter().map(|x| x / s).collect()
            } else {
                vec![0.0; m]
            };
            (s, u, vcol)
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));

    let s: Vec<f64> = triplets.iter().map(|t| t.0).collect();
    let mut ucols: Vec<Vec<f64>> = triplets.iter().map(|t| t.1.clone()).collect();
    complete_orthonormal(&mut ucols, &s);
    let vcols: Vec<Vec<f64>> = triplets.into_iter().map(|t| t.2).collect();
    Ok(Svd {
        u: DenseMatrix::from_columns(&ucols),
        s,
        v: DenseMatrix::from_columns(&vcols),
    })
}

/// Replaces the left vectors of zero singular values with unit vectors
/// orthogonalized against the rest, so `U` keeps orthonormal columns.
fn complete_orthonormal(cols: &mut [Vec<f64>], s: &[f64]) {
    let m = cols.first().map_or(0, |c| c.len());
    let mut next_unit = 0;
    for j in 0..cols.len() {
        if s[j] > 0.0 {
            continue;
        }
        while next_unit < m {
            let mut e = vec![0.0; m];
            e[next_unit] = 1.0;
            next_unit += 1;
            for _ in 0..2 {
                for (i, other) in cols.iter().enumerate() {
                    if i == j || (s[i] == 0.0 && i > j) {
                        continue;
                    }
                    let d = dot(other, &e);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= d * o;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 0.5 {
                cols[j] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}
