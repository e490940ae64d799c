use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;

/// Upper-triangular `C` with `A = C^T C`, reading only the upper triangle of
/// `A`. A nonpositive (or non-finite) pivot is reported as
/// [`Error::NotPositiveDefinite`]; after rounding this usually means the
/// format destroyed definiteness and the caller should shift and retry.
pub fn chol(a: &DenseMatrix, ctx: PrecisionContext) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let a = a.map(|x| ctx.round(x));
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = ctx.sub(d, ctx.mul(c[(k, j)], c[(k, j)]));
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let cjj = ctx.sqrt(d);
        c[(j, j)] = cjj;
        for i in j + 1..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s = ctx.sub(s, ctx.mul(c[(k, j)], c[(k, i)]));
            }
            c[(j, i)] = ctx.div(s, cjj);
        }
    }
    Ok(c)
}
