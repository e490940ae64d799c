use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::{PrecisionContext, RoundingEvents};

/// `A·B` with every product and every partial sum rounded to `ctx`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix, ctx: PrecisionContext) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "matmul {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if ctx.is_native() {
        return Ok(a.mul(b));
    }
    let a = a.map(|x| ctx.round(x));
    // Columns of B contiguous, so each entry is one sequential dot product.
    let bt = b.transpose().map(|x| ctx.round(x));
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    let m = b.cols();
    for i in 0..a.rows() {
        let arow = a.row(i);
        let mut j = 0;
        // Four independent left-to-right sums at a time, so the rounding
        // chains overlap; each entry is still summed in order.
        while j + 4 <= m {
            let (b0, b1, b2, b3) = (bt.row(j), bt.row(j + 1), bt.row(j + 2), bt.row(j + 3));
            let mut acc = [0.0f64; 4];
            for (p, &x) in arow.iter().enumerate() {
                acc[0] = ctx.mul_add(acc[0], x, b0[p]);
                acc[1] = ctx.mul_add(acc[1], x, b1[p]);
                acc[2] = ctx.mul_add(acc[2], x, b2[p]);
                acc[3] = ctx.mul_add(acc[3], x, b3[p]);
            }
            for (c, v) in acc.into_iter().enumerate() {
                out[(i, j + c)] = v;
            }
            j += 4;
        }
        for j in j..m {
            out[(i, j)] = ctx.dot(arow, bt.row(j));
        }
    }
    Ok(out)
}

/// `A·x` under `ctx`.
pub fn matvec(a: &DenseMatrix, x: &[f64], ctx: PrecisionContext) -> Result<Vec<f64>> {
    if a.cols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "matvec {}x{} by vector of length {}",
            a.rows(),
            a.cols(),
            x.len()
        )));
    }
    if ctx.is_native() {
        return Ok(a.matvec(x));
    }
    let x = ctx.round_vec(x);
    Ok((0..a.rows())
        .map(|i| {
            let row = ctx.round_vec(a.row(i));
            ctx.dot(&row, &x)
        })
        .collect())
}

/// Overflow events visible in a computed result (entries that became
/// infinite or NaN).
pub fn overflow_events(m: &DenseMatrix) -> RoundingEvents {
    RoundingEvents {
        overflow: m.count_nonfinite(),
        underflow: 0,
    }
}
