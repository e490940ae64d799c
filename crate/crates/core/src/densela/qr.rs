use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;

/// Householder QR, `A = Q R` with `Q = H_0 H_1 ... H_{n-1}` kept implicit.
///
/// `H_k = I - beta_k v_k v_k^T` acts on rows `k..m`; a reflector with
/// `beta_k = 0` is the identity (the subcolumn was already zero below the
/// diagonal).
#[derive(Debug, Clone)]
pub struct QrFactors {
    rows: usize,
    r: DenseMatrix,
    reflectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
    ctx: PrecisionContext,
}

pub fn qr_householder(a: &DenseMatrix, ctx: PrecisionContext) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "QR needs rows >= cols, got {m}x{n}"
        )));
    }
    // Work column-major.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| ctx.round_vec(&a.col(j))).collect();
    let mut reflectors = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    for k in 0..n {
        let x = &cols[k][k..];
        let tail_zero = x[1..].iter().all(|&v| v == 0.0);
        if tail_zero {
            reflectors.push(vec![0.0; m - k]);
            betas.push(0.0);
            continue;
        }
        let sigma = ctx.norm2(x);
        let x0 = x[0];
        let alpha = if x0 >= 0.0 { -sigma } else { sigma };
        let mut v = x.to_vec();
        v[0] = ctx.sub(x0, alpha);
        let vtv = ctx.dot(&v, &v);
        let beta = if vtv == 0.0 { 0.0 } else { ctx.div(2.0, vtv) };
        cols[k][k] = alpha;
        for c in cols[k][k + 1..].iter_mut() {
            *c = 0.0;
        }
        for col in cols.iter_mut().skip(k + 1) {
            apply_reflector(&v, beta, &mut col[k..], ctx);
        }
        reflectors.push(v);
        betas.push(beta);
    }
    let r = DenseMatrix::from_fn(n, n, |i, j| if i <= j { cols[j][i] } else { 0.0 });
    Ok(QrFactors {
        rows: m,
        r,
        reflectors,
        betas,
        ctx,
    })
}

#[inline]
fn apply_reflector(v: &[f64], beta: f64, y: &mut [f64], ctx: PrecisionContext) {
    if beta == 0.0 {
        return;
    }
    let s = ctx.mul(beta, ctx.dot(v, y));
    if s != 0.0 {
        ctx.axpy(-s, v, y);
    }
}

impl QrFactors {
    /// The `n x n` upper-triangular factor.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `Q^T b` (length `m`), arithmetic in the factorization's context.
    pub fn apply_qt(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let mut y = self.ctx.round_vec(b);
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            apply_reflector(v, beta, &mut y[k..], self.ctx);
        }
        y
    }

    /// `Q y` for `y` of length `m`.
    pub fn apply_q(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut x = self.ctx.round_vec(y);
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            apply_reflector(v, beta, &mut x[k..], self.ctx);
        }
        x
    }

    /// Explicit thin `Q` (`m x n`).
    pub fn q_thin(&self) -> DenseMatrix {
        let n = self.r.cols();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; self.rows];
                e[j] = 1.0;
                self.apply_q(&e)
            })
            .collect();
        DenseMatrix::from_columns(&cols)
    }

    /// Least-squares solution of `min ||b - A x||_2`.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.r.cols();
        let y = self.apply_qt(b);
        let mut x = y[..n].to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = self.ctx.sub(s, self.ctx.mul(self.r[(i, j)], x[j]));
            }
            let d = self.r[(i, i)];
            if d == 0.0 {
                return Err(Error::SingularPivot { index: i });
            }
            x[i] = self.ctx.div(s, d);
        }
        Ok(x)
    }
}
