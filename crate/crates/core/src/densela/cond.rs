use crate::dense::DenseMatrix;
use crate::densela::lu_factor;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;

/// Largest order for which explicit inverses are formed.
pub const DEFAULT_INVERSE_CAP: usize = 4096;

const POWER_MAX_ITERS: usize = 100;
const POWER_RTOL: f64 = 1e-10;

/// Explicit inverse from an `f64` LU factorization, for diagnostics.
pub fn inverse(a: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let ctx = PrecisionContext::fp64();
    let lu = lu_factor(a, ctx)?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(lu.solve(&e, ctx)?);
    }
    Ok(DenseMatrix::from_columns(&cols))
}

/// `||A||_inf ||A^{-1}||_inf`.
pub fn cond_inf(a: &DenseMatrix) -> Result<f64> {
    let inv = inverse(a, DEFAULT_INVERSE_CAP)?;
    Ok(a.norm_inf() * inv.norm_inf())
}

/// `|| |A^{-1}| |A| ||_2`, invariant under row scaling of `A`.
pub fn cond2_abs(a: &DenseMatrix) -> Result<f64> {
    let inv = inverse(a, DEFAULT_INVERSE_CAP)?;
    let p = inv.abs().mul(&a.abs());
    Ok(norm2_estimate(&p))
}

/// Spectral norm by power iteration on `M^T M` from the all-ones vector.
pub fn norm2_estimate(m: &DenseMatrix) -> f64 {
    let n = m.cols();
    if n == 0 || m.max_abs() == 0.0 {
        return 0.0;
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y = m.matvec(&x);
        let z = m.matvec_t(&y);
        let znorm = crate::dense::vecops::norm2(&z);
        if znorm == 0.0 {
            return 0.0;
        }
        let next = znorm.sqrt();
        x = z.into_iter().map(|v| v / znorm).collect();
        let done = (next - sigma).abs() <= POWER_RTOL * next;
        sigma = next;
        if done {
            break;
        }
    }
    // Rayleigh quotient of the final iterate.
    crate::dense::vecops::norm2(&m.matvec(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::svd;
    use crate::random::gaussian_matrix;

    #[test]
    fn identity_is_perfectly_conditioned() {
        let i = DenseMatrix::identity(5);
        assert_eq!(cond_inf(&i).unwrap(), 1.0);
        assert!((cond2_abs(&i).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_scaling() {
        let d = DenseMatrix::from_diag(&[1.0, 1e-3]);
        assert!((cond_inf(&d).unwrap() - 1e3).abs() < 1e-9);
        assert!((cond2_abs(&d).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_envelope() {
        let a = gaussian_matrix(4, 4, 17);
        let c = cond2_abs(&a).unwrap();
        let s = svd(&a).unwrap();
        let kappa2 = s.s[0] / s.s[3];
        assert!(c >= 1.0 - 1e-12 && c <= kappa2 * 4.0, "{c} vs {kappa2}");
    }

    #[test]
    fn power_iteration_matches_svd() {
        let a = gaussian_matrix(9, 7, 18);
        let s = svd(&a).unwrap().s[0];
        assert!((norm2_estimate(&a) - s).abs() <= 1e-6 * s);
    }

    #[test]
    fn cap_and_singularity() {
        assert!(matches!(
            inverse(&DenseMatrix::identity(3), 2),
            Err(Error::TooLarge { n: 3, cap: 2 })
        ));
        assert!(cond_inf(&DenseMatrix::zeros(2, 2)).is_err());
    }
}
