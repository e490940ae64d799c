use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Solve `T X = B`.
    Left,
    /// Solve `X T = B`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uplo {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diag {
    Unit,
    NonUnit,
}

/// Substitution for one right-hand side against `T` or `T^T`.
fn substitute(
    t: &DenseMatrix,
    b: &mut [f64],
    lower: bool,
    transposed: bool,
    diag: Diag,
    ctx: PrecisionContext,
) -> Result<()> {
    let n = t.rows();
    let at = |i: usize, j: usize| if transposed { t[(j, i)] } else { t[(i, j)] };
    // Effective triangle after transposition.
    let forward = lower != transposed;
    let order: Box<dyn Iterator<Item = usize>> = if forward {
        Box::new(0..n)
    } else {
        Box::new((0..n).rev())
    };
    for i in order {
        let mut s = b[i];
        let range = if forward { 0..i } else { i + 1..n };
        for j in range {
            s = ctx.sub(s, ctx.mul(at(i, j), b[j]));
        }
        b[i] = match diag {
            Diag::Unit => s,
            Diag::NonUnit => {
                let d = at(i, i);
                if d == 0.0 {
                    return Err(Error::SingularPivot { index: i });
                }
                ctx.div(s, d)
            }
        };
    }
    Ok(())
}

/// Solves `T x = b` for a single vector.
pub fn solve_triangular_vec(
    t: &DenseMatrix,
    b: &[f64],
    uplo: Uplo,
    diag: Diag,
    ctx: PrecisionContext,
) -> Result<Vec<f64>> {
    check_square(t)?;
    if b.len() != t.rows() {
        return Err(Error::DimensionMismatch(format!(
            "triangular {}x{} with rhs of length {}",
            t.rows(),
            t.cols(),
            b.len()
        )));
    }
    let mut x = ctx.round_vec(b);
    substitute(t, &mut x, uplo == Uplo::Lower, false, diag, ctx)?;
    Ok(x)
}

/// Triangular solve with a matrix right-hand side, every operation rounded
/// to `ctx`. `T` is used as stored (its values are assumed already in the
/// context format).
pub fn solve_triangular(
    t: &DenseMatrix,
    b: &DenseMatrix,
    side: Side,
    uplo: Uplo,
    diag: Diag,
    ctx: PrecisionContext,
) -> Result<DenseMatrix> {
    check_square(t)?;
    let n = t.rows();
    match side {
        Side::Left => {
            if b.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "left solve with {n}x{n} triangle and {} rhs rows",
                    b.rows()
                )));
            }
            let mut out = DenseMatrix::zeros(n, b.cols());
            for j in 0..b.cols() {
                let mut col = ctx.round_vec(&b.col(j));
                substitute(t, &mut col, uplo == Uplo::Lower, false, diag, ctx)?;
                out.set_col(j, &col);
            }
            Ok(out)
        }
        Side::Right => {
            if b.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "right solve with {n}x{n} triangle and {} rhs cols",
                    b.cols()
                )));
            }
            // x T = b  <=>  T^T x^T = b^T, row by row.
            let mut out = DenseMatrix::zeros(b.rows(), n);
            for i in 0..b.rows() {
                let mut row = ctx.round_vec(b.row(i));
                substitute(t, &mut row, uplo == Uplo::Lower, true, diag, ctx)?;
                out.row_mut(i).copy_from_slice(&row);
            }
            Ok(out)
        }
    }
}

fn check_square(t: &DenseMatrix) -> Result<()> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    Ok(())
}
