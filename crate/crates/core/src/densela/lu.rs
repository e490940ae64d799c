use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::{FloatFormat, PrecisionContext};

/// Packed `PA = LU` factors: unit lower `L` below the diagonal, `U` on and
/// above it. Row `i` of `PA` is row `perm[i]` of `A`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    pub lu: DenseMatrix,
    pub perm: Vec<usize>,
    /// Format the factorization was computed (and its factors stored) in.
    pub format: FloatFormat,
}

/// LU with partial pivoting, every operation rounded to `ctx`.
pub fn lu_factor(a: &DenseMatrix, ctx: PrecisionContext) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut lu = a.map(|x| ctx.round(x));
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::SingularPivot { index: k });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        let pivot_row: Vec<f64> = lu.row(k)[k + 1..].to_vec();
        for i in k + 1..n {
            let lik = lu[(i, k)];
            if lik == 0.0 {
                continue;
            }
            let lik = ctx.div(lik, pivot);
            lu[(i, k)] = lik;
            let row = &mut lu.row_mut(i)[k + 1..];
            if ctx.is_native() {
                for (x, &ukj) in row.iter_mut().zip(&pivot_row) {
                    *x -= lik * ukj;
                }
            } else {
                for (x, &ukj) in row.iter_mut().zip(&pivot_row) {
                    *x = ctx.sub(*x, ctx.mul(lik, ukj));
                }
            }
        }
    }
    Ok(LuFactors {
        lu,
        perm,
        format: ctx.fmt,
    })
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    pub fn l(&self) -> DenseMatrix {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        })
    }

    pub fn u(&self) -> DenseMatrix {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| if j >= i { self.lu[(i, j)] } else { 0.0 })
    }

    /// Nonzeros of `L + U` (the unit diagonal of `L` is not counted twice).
    pub fn nnz(&self) -> usize {
        self.lu.count_nonzeros()
    }

    /// Solves `A x = b` by substitution with the stored factors, arithmetic
    /// in `ctx`.
    pub fn solve(&self, b: &[f64], ctx: PrecisionContext) -> Result<Vec<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU of order {n} with rhs of length {}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| ctx.round(b[p])).collect();
        for i in 0..n {
            let row = &self.lu.row(i)[..i];
            let s = if ctx.is_native() {
                x[i] - row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum::<f64>()
            } else {
                row.iter()
                    .zip(&x[..i])
                    .fold(x[i], |s, (&l, &v)| ctx.sub(s, ctx.mul(l, v)))
            };
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s = ctx.sub(s, ctx.mul(row[j], x[j]));
            }
            let d = row[i];
            if d == 0.0 {
                return Err(Error::SingularPivot { index: i });
            }
            x[i] = ctx.div(s, d);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpemu::{FP16, FP64};
    use crate::random::gaussian_matrix;

    /// `||PA - LU|| / ||A||`.
    fn residual(a: &DenseMatrix, f: &LuFactors) -> f64 {
        a.permute_rows(&f.perm).sub(&f.l().mul(&f.u())).norm_fro() / a.norm_fro()
    }

    #[test]
    fn identity_factors() {
        let f = lu_factor(&DenseMatrix::identity(3), PrecisionContext::fp64()).unwrap();
        assert_eq!(f.l(), DenseMatrix::identity(3));
        assert_eq!(f.u(), DenseMatrix::identity(3));
        assert_eq!(f.perm, vec![0, 1, 2]);
    }

    #[test]
    fn permutation_matrix_swaps() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = lu_factor(&a, PrecisionContext::fp64()).unwrap();
        assert_eq!(f.perm, vec![1, 0]);
        assert_eq!(f.l(), DenseMatrix::identity(2));
        assert_eq!(f.u(), DenseMatrix::identity(2));
    }

    #[test]
    fn singular_pivot() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(
            lu_factor(&a, PrecisionContext::fp64()).unwrap_err(),
            Error::SingularPivot { index: 1 }
        );
    }

    #[test]
    fn random_fp64_residual_within_growth_bound() {
        let n = 8;
        let a = gaussian_matrix(n, n, 3);
        let f = lu_factor(&a, PrecisionContext::new(FP64)).unwrap();
        // Componentwise bound |PA - LU| <= gamma_n |L||U|, measured normwise.
        let growth = f.l().abs().mul(&f.u().abs()).norm_fro() / a.norm_fro();
        let r = residual(&a, &f);
        assert!(r <= 10.0 * n as f64 * FP64.unit_roundoff() * growth, "{r}");
    }

    #[test]
    fn fp64_64x64_residual() {
        let n = 64;
        let a = gaussian_matrix(n, n, 4);
        let f = lu_factor(&a, PrecisionContext::fp64()).unwrap();
        let growth = f.l().abs().mul(&f.u().abs()).norm_fro() / a.norm_fro();
        assert!(residual(&a, &f) <= 10.0 * n as f64 * FP64.unit_roundoff() * growth);
    }

    #[test]
    fn fp16_residual_degrades_gracefully() {
        let n = 32;
        let a = gaussian_matrix(n, n, 5);
        let f = lu_factor(&a, PrecisionContext::new(FP16)).unwrap();
        let growth = f.l().abs().mul(&f.u().abs()).norm_fro() / a.norm_fro();
        let r = residual(&a, &f);
        assert!(r <= 10.0 * n as f64 * FP16.unit_roundoff() * growth, "{r}");
        assert!(r > FP64.unit_roundoff() * 1e3, "fp16 factorization suspiciously exact");
    }

    #[test]
    fn solve_matches_rhs() {
        let a = gaussian_matrix(10, 10, 6);
        let b: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let f = lu_factor(&a, PrecisionContext::fp64()).unwrap();
        let x = f.solve(&b, PrecisionContext::fp64()).unwrap();
        let r = crate::dense::vecops::sub(&a.matvec(&x), &b);
        assert!(crate::dense::vecops::norm_inf(&r) < 1e-12);
    }
}
