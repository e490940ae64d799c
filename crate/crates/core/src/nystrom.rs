//! Single-pass randomized Nyström approximation with a low-precision sketch.
//!
//! Only the product `Y = A Ω` (and the storage of `A`) uses the sketch
//! precision `u_p`; the shift, the small Cholesky factorization, the
//! triangular solve and the SVD run in the working precision `u`. The result
//! is `A ≈ U diag(Θ) U^T`.

use crate::dense::DenseMatrix;
use crate::densela::{chol, eig_symmetric, matmul, qr_householder, solve_triangular, svd, Diag, Side, Uplo};
use crate::error::{Error, Result};
use crate::fpemu::{round_matrix, FloatFormat, PrecisionContext};
use crate::random::Gaussian;

/// Number of times the shift may grow tenfold before giving up.
pub const MAX_SHIFT_RETRIES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromConfig {
    pub k: usize,
    /// Precision of `A` and of the product `A Ω`.
    pub u_p: FloatFormat,
    /// Working precision of everything else.
    pub u: FloatFormat,
    pub seed: u64,
    /// Independent sketches averaged by [`mean_error`].
    pub runs: usize,
}

impl NystromConfig {
    pub fn new(k: usize, u_p: FloatFormat, u: FloatFormat, seed: u64) -> Self {
        NystromConfig {
            k,
            u_p,
            u,
            seed,
            runs: 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidArgument(format!(
                "rank k must satisfy 1 <= k <= n = {n}, got {}",
                self.k
            )));
        }
        if self.u.unit_roundoff() > self.u_p.unit_roundoff() {
            return Err(Error::InvalidArgument(format!(
                "working precision {} is coarser than sketch precision {}",
                self.u, self.u_p
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NystromResult {
    /// `n x k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonnegative, nonincreasing.
    pub theta: Vec<f64>,
    /// Shift actually used.
    pub nu: f64,
    /// Tenfold shift increases needed before Cholesky succeeded.
    pub shift_retries: usize,
    /// The orthonormal sketch `Ω`.
    pub omega: DenseMatrix,
}

impl NystromResult {
    /// `U diag(Θ) U^T` in `f64`.
    pub fn approximation(&self) -> DenseMatrix {
        let n = self.u.rows();
        let mut out = DenseMatrix::zeros(n, n);
        for (t, &th) in self.theta.iter().enumerate() {
            if th == 0.0 {
                continue;
            }
            let col = self.u.col(t);
            for i in 0..n {
                let ci = col[i] * th;
                if ci == 0.0 {
                    continue;
                }
                for (o, &cj) in out.row_mut(i).iter_mut().zip(&col) {
                    *o += ci * cj;
                }
            }
        }
        out
    }
}

/// Orthonormal `n x k` sketch: fp64 thin QR of a seeded Gaussian matrix.
pub fn sketch(n: usize, k: usize, seed: u64) -> Result<DenseMatrix> {
    let g = Gaussian::new(seed).matrix(n, k);
    Ok(qr_householder(&g, PrecisionContext::fp64())?.q_thin())
}

/// Runs the single-pass Nyström method on a symmetric PSD `A`.
///
/// `A` is rounded to `u_p` on entry (a no-op when the caller already stores
/// it there). The shift is `ν = sqrt(n) u ||Y||_F`; if Cholesky of the
/// symmetrized `Ω^T Y_ν` fails, `ν` grows tenfold, up to
/// [`MAX_SHIFT_RETRIES`] times.
pub fn nystrom_single_pass(a: &DenseMatrix, cfg: &NystromConfig) -> Result<NystromResult> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    cfg.validate(n)?;
    let k = cfg.k;
    let ctx_p = PrecisionContext::new(cfg.u_p);
    let ctx = PrecisionContext::new(cfg.u);

    let omega = sketch(n, k, cfg.seed)?;
    let (a_p, _) = round_matrix(a, cfg.u_p);
    let y = matmul(&a_p, &omega, ctx_p)?;
    let y_norm = y.norm_fro();
    if y_norm == 0.0 {
        return Ok(NystromResult {
            u: omega.clone(),
            theta: vec![0.0; k],
            nu: 0.0,
            shift_retries: 0,
            omega,
        });
    }
    let mut nu = ctx.round((n as f64).sqrt() * cfg.u.unit_roundoff() * y_norm);
    let omega_t = omega.transpose();
    let mut retries = 0;
    let (y_nu, c) = loop {
        let y_nu = DenseMatrix::from_fn(n, k, |i, j| ctx.add(y[(i, j)], ctx.mul(nu, omega[(i, j)])));
        let b = matmul(&omega_t, &y_nu, ctx)?;
        let bs = DenseMatrix::from_fn(k, k, |i, j| ctx.mul(0.5, ctx.add(b[(i, j)], b[(j, i)])));
        match chol(&bs, ctx) {
            Ok(c) => break (y_nu, c),
            Err(Error::NotPositiveDefinite { .. }) if retries < MAX_SHIFT_RETRIES => {
                retries += 1;
                nu = ctx.round(nu * 10.0);
            }
            Err(Error::NotPositiveDefinite { .. }) => {
                return Err(Error::CholeskyFailure { attempts: retries + 1 })
            }
            Err(e) => return Err(e),
        }
    };
    let f = solve_triangular(&c, &y_nu, Side::Right, Uplo::Upper, Diag::NonUnit, ctx)?;
    let dec = svd(&f)?;
    let u = dec.u.map(|x| ctx.round(x));
    let theta = dec
        .s
        .iter()
        .map(|&s| ctx.sub(ctx.mul(s, s), nu).max(0.0))
        .collect();
    Ok(NystromResult {
        u,
        theta,
        nu,
        shift_retries: retries,
        omega,
    })
}

/// `||A - U diag(Θ) U^T||_F` in `f64`.
pub fn nystrom_error(a: &DenseMatrix, result: &NystromResult) -> f64 {
    a.sub(&result.approximation()).norm_fro()
}

/// Mean of the errors of `cfg.runs` sketches seeded `seed, seed + 1, ...`.
pub fn mean_error(a: &DenseMatrix, cfg: &NystromConfig) -> Result<f64> {
    cfg.validate(a.rows())?;
    let mut total = 0.0;
    for r in 0..cfg.runs {
        let run = NystromConfig {
            seed: cfg.seed.wrapping_add(r as u64),
            ..*cfg
        };
        total += nystrom_error(a, &nystrom_single_pass(a, &run)?);
    }
    Ok(total / cfg.runs as f64)
}

/// Largest `k` with `u <= n^{-1/2} λ_k / λ_1`, or 0 if there is none.
pub fn precision_heuristic(eigenvalues: &[f64], n: usize, fmt: FloatFormat) -> usize {
    let Some(&l1) = eigenvalues.first() else {
        return 0;
    };
    if !(l1 > 0.0) {
        return 0;
    }
    let scale = 1.0 / (n as f64).sqrt();
    let u = fmt.unit_roundoff();
    eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| u <= scale * l / l1)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0)
}

/// Eigenvalues of `A` in `f64`, nonincreasing.
pub fn spectrum(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(eig_symmetric(a)?.values)
}

/// `||Ω||_F / σ_min(W_1^T Ω)`.
pub fn kappa_tilde(omega: &DenseMatrix, w1: &DenseMatrix) -> Result<f64> {
    if omega.rows() != w1.rows() {
        return Err(Error::DimensionMismatch("sketch and eigenvector rows".into()));
    }
    let m = w1.transpose().mul(omega);
    let s = svd(&m)?.s;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    let dim = m.rows().max(m.cols()) as f64;
    if smin <= dim * f64::EPSILON * smax.max(omega.norm_fro()) {
        return Err(Error::RankDeficientSketch { sigma_min: smin });
    }
    Ok(omega.norm_fro() / smin)
}

/// Diagnostic size of the finite-precision error term,
/// `sqrt(k) n u_p κ_2(A_k) κ̃(Ω)^2 ||A||_F`.
pub fn finite_precision_bound(k: usize, n: usize, u_p: FloatFormat, kappa2_ak: f64, kappa_tilde: f64, a_fro: f64) -> f64 {
    (k as f64).sqrt() * n as f64 * u_p.unit_roundoff() * kappa2_ak * kappa_tilde * kappa_tilde * a_fro
}
