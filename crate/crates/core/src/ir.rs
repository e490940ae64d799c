//! Three-precision iterative refinement.
//!
//! The initial solve uses a factorization (or approximate inverse) computed
//! in `u_f`, residuals `b - A x_i` are formed in `u_r`, corrections come from
//! a pluggable solver and the update `x_{i+1} = x_i + d_i` is rounded to `u`.
//! Every step records the forward, normwise and componentwise backward errors
//! against a reference solution; the metrics use compensated residuals so they
//! are not polluted by the arithmetic being measured.

use crate::dense::{vecops, DenseMatrix};
use crate::densela::{cond_inf, lu_factor, LuFactors};
use crate::error::{Error, Result};
use crate::fpemu::{FloatFormat, PrecisionContext, FP64};
use crate::krylov::{gmres, LinearOperator, LuPreconditioner};
use crate::spai::{spai_build, SpaiConfig};
use crate::sparse::{minimum_degree_ordering, CscMatrix};

/// Factorization, working and residual precisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionTriple {
    pub u_f: FloatFormat,
    pub u: FloatFormat,
    pub u_r: FloatFormat,
}

impl PrecisionTriple {
    pub fn new(u_f: FloatFormat, u: FloatFormat, u_r: FloatFormat) -> Result<Self> {
        let t = PrecisionTriple { u_f, u, u_r };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(fmt: FloatFormat) -> Self {
        PrecisionTriple {
            u_f: fmt,
            u: fmt,
            u_r: fmt,
        }
    }

    /// Requires `u_r <= u <= u_f` in unit roundoff.
    pub fn validate(&self) -> Result<()> {
        let (f, w, r) = (
            self.u_f.unit_roundoff(),
            self.u.unit_roundoff(),
            self.u_r.unit_roundoff(),
        );
        if r <= w && w <= f {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "precisions must satisfy u_r <= u <= u_f, got u_f={}, u={}, u_r={}",
                self.u_f, self.u, self.u_r
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionSolver {
    /// Substitution with the `u_f` LU factors.
    LuDirect,
    /// GMRES in `u`, left-preconditioned by the `u_f` LU factors, optionally
    /// of the minimum-degree reordered matrix.
    GmresLu { tol: f64, ordering: bool },
    /// GMRES in `u`, left-preconditioned by a sparse approximate inverse
    /// built in `u_f` (the `u_s` field of `cfg` is replaced by `u_f`).
    GmresSpai { tol: f64, cfg: SpaiConfig },
}

impl CorrectionSolver {
    pub fn name(&self) -> &'static str {
        match self {
            CorrectionSolver::LuDirect => "lu",
            CorrectionSolver::GmresLu { .. } => "gmres-lu",
            CorrectionSolver::GmresSpai { .. } => "gmres-spai",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Refinement steps after the initial solve.
    pub maxit: usize,
    /// GMRES iteration cap per correction; `None` means `n`.
    pub gmres_maxit: Option<usize>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            maxit: 20,
            gmres_maxit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStatus {
    Converged,
    /// Backward error above `n u` and not halving for three steps in a row.
    NoProgress,
    /// The iterate or its residual became non-finite.
    Diverged,
    MaxIterations,
}

/// Metrics of one iterate; step 0 is the initial solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub ferr: f64,
    pub nbe: f64,
    pub cbe: f64,
    /// GMRES iterations spent computing this iterate's correction.
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    pub steps: Vec<StepRecord>,
    pub status: RefineStatus,
    /// Stored entries of the preconditioner or factors.
    pub preconditioner_nnz: usize,
}

impl RefinementTrace {
    pub fn converged(&self) -> bool {
        self.status == RefineStatus::Converged
    }

    /// Refinement steps taken after the initial solve.
    pub fn step_count(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.inner_iterations).sum()
    }

    pub fn last(&self) -> &StepRecord {
        self.steps.last().expect("trace holds the initial solve")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub ferr: f64,
    pub nbe: f64,
    pub cbe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilkinsonCheck {
    pub satisfied: bool,
    /// `3 n u kappa_inf(A)`.
    pub value: f64,
}

/// `3 n u kappa < 1` for given `n` and condition number.
pub fn wilkinson_value(n: usize, u: FloatFormat, kappa_inf: f64) -> WilkinsonCheck {
    let value = 3.0 * n as f64 * u.unit_roundoff() * kappa_inf;
    WilkinsonCheck {
        satisfied: value < 1.0,
        value,
    }
}

pub fn wilkinson_criterion(a: &DenseMatrix, u: FloatFormat) -> Result<WilkinsonCheck> {
    let kappa = cond_inf(a)?;
    Ok(wilkinson_value(a.rows(), u, kappa))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `b - A x` with every row accumulated in compensated (doubled) precision.
pub fn compensated_residual(a: &CscMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut s = b.to_vec();
    let mut c = vec![0.0; n];
    for (i, j, v) in a.triplets() {
        let (p, e) = two_prod(-v, x[j]);
        let (t, q) = two_sum(s[i], p);
        s[i] = t;
        c[i] += q + e;
    }
    s.iter().zip(&c).map(|(s, c)| s + c).collect()
}

/// Forward error against `x_ref` and both backward errors of `x`.
///
/// `ferr` is absolute when `x_ref = 0`; in `cbe`, rows with zero residual and
/// zero denominator contribute 0.
pub fn error_metrics(a: &CscMatrix, b: &[f64], x: &[f64], x_ref: &[f64]) -> ErrorMetrics {
    let r = compensated_residual(a, b, x);
    let xref_norm = vecops::norm_inf(x_ref);
    let diff = vecops::norm_inf(&vecops::sub(x, x_ref));
    let ferr = if xref_norm > 0.0 { diff / xref_norm } else { diff };
    let rnorm = vecops::norm_inf(&r);
    let denom = a.norm_inf() * vecops::norm_inf(x) + vecops::norm_inf(b);
    let nbe = if rnorm == 0.0 { 0.0 } else { rnorm / denom };
    let ax = a.abs_matvec(x);
    let cbe = r
        .iter()
        .zip(ax.iter().zip(b))
        .map(|(ri, (axi, bi))| {
            let d = axi + bi.abs();
            if ri.abs() == 0.0 {
                0.0
            } else {
                ri.abs() / d
            }
        })
        .fold(0.0, f64::max);
    ErrorMetrics { ferr, nbe, cbe }
}

/// Baseline for `ferr`: `f64` LU solve plus three refinement steps with
/// compensated residuals.
pub fn reference_solution(a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_system(a, b)?;
    let ctx = PrecisionContext::fp64();
    let lu = lu_factor(&a.to_dense(), ctx)?;
    let mut x = lu.solve(b, ctx)?;
    for _ in 0..3 {
        let r = compensated_residual(a, b, &x);
        let d = lu.solve(&r, ctx)?;
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += di;
        }
    }
    Ok(x)
}

fn check_system(a: &CscMatrix, b: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of order {} with rhs of length {}",
            a.nrows(),
            b.len()
        )));
    }
    Ok(())
}

enum Correction {
    Direct(LuFactors),
    Krylov {
        precond: Box<dyn LinearOperator>,
        tol: f64,
    },
}

struct MatrixOperator<'a>(&'a CscMatrix);

impl LinearOperator for MatrixOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        self.0.matvec_ctx(x, ctx)
    }
}

/// Runs iterative refinement on `A x = b`.
///
/// `x_ref` defaults to [`reference_solution`]. Stops with `Converged` once
/// `nbe <= n u` and either this is the initial solve, the relative change in
/// `x` is at most `2u`, or the change stopped shrinking by half (the limiting
/// accuracy is reached).
pub fn refine(
    a: &CscMatrix,
    b: &[f64],
    triple: PrecisionTriple,
    solver: &CorrectionSolver,
    opts: RefineOptions,
    x_ref: Option<&[f64]>,
) -> Result<(Vec<f64>, RefinementTrace)> {
    check_system(a, b)?;
    triple.validate()?;
    if opts.maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }
    let n = a.nrows();
    let owned_ref;
    let x_ref = match x_ref {
        Some(x) => x,
        None => {
            owned_ref = reference_solution(a, b)?;
            &owned_ref
        }
    };
    let ctx_f = PrecisionContext::new(triple.u_f);
    let ctx = PrecisionContext::new(triple.u);
    let ctx_r = PrecisionContext::new(triple.u_r);
    let gmres_maxit = opts.gmres_maxit.unwrap_or(n).max(1);

    let (correction, nnz) = match solver {
        CorrectionSolver::LuDirect => {
            let lu = lu_factor(&a.to_dense(), ctx_f)?;
            let nnz = lu.nnz();
            (Correction::Direct(lu), nnz)
        }
        CorrectionSolver::GmresLu { tol, ordering } => {
            let pre = if *ordering {
                let perm = minimum_degree_ordering(a);
                let lu = lu_factor(&a.permute_symmetric(&perm).to_dense(), ctx_f)?;
                LuPreconditioner::with_ordering(lu, perm)
            } else {
                LuPreconditioner::new(lu_factor(&a.to_dense(), ctx_f)?)
            };
            let nnz = pre.nnz();
            (
                Correction::Krylov {
                    precond: Box::new(pre),
                    tol: *tol,
                },
                nnz,
            )
        }
        CorrectionSolver::GmresSpai { tol, cfg } => {
            let cfg = SpaiConfig {
                u_s: triple.u_f,
                ..*cfg
            };
            let m = spai_build(a, cfg)?.m;
            let nnz = m.nnz();
            (
                Correction::Krylov {
                    precond: Box::new(m),
                    tol: *tol,
                },
                nnz,
            )
        }
    };

    // Initial solve with the u_f object.
    let mut x = match &correction {
        Correction::Direct(lu) => lu.solve(b, ctx_f)?,
        Correction::Krylov { precond, .. } => precond.apply(b, ctx_f),
    };
    x = ctx.round_vec(&x);

    let record = |step: usize, x: &[f64], inner: usize| {
        let m = error_metrics(a, b, x, x_ref);
        StepRecord {
            step,
            ferr: m.ferr,
            nbe: m.nbe,
            cbe: m.cbe,
            inner_iterations: inner,
        }
    };
    let u = triple.u.unit_roundoff();
    let nbe_target = n as f64 * u;
    let mut steps = vec![record(0, &x, 0)];
    if !steps[0].nbe.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Ok((x, trace(steps, RefineStatus::Diverged, nnz)));
    }
    if steps[0].nbe <= nbe_target {
        return Ok((x, trace(steps, RefineStatus::Converged, nnz)));
    }

    let op = MatrixOperator(a);
    let mut prev_change = f64::INFINITY;
    let mut stalled = 0usize;
    for i in 1..=opts.maxit {
        let r = residual(a, b, &x, ctx_r);
        let (d, inner) = match &correction {
            Correction::Direct(lu) => {
                let scale = vecops::norm_inf(&r);
                if scale == 0.0 {
                    (vec![0.0; n], 0)
                } else {
                    let rs: Vec<f64> = r.iter().map(|v| v / scale).collect();
                    let d = lu.solve(&rs, ctx_f)?;
                    (d.into_iter().map(|v| v * scale).collect(), 0)
                }
            }
            Correction::Krylov { precond, tol } => {
                if r.iter().all(|&v| v == 0.0) {
                    (vec![0.0; n], 0)
                } else {
                    let (d, rep) = gmres(&op, Some(precond.as_ref()), &r, *tol, gmres_maxit, ctx)?;
                    (d, rep.iterations)
                }
            }
        };
        let xnorm = vecops::norm_inf(&x);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi = ctx.add(*xi, *di);
        }
        let change = if xnorm > 0.0 {
            vecops::norm_inf(&d) / xnorm
        } else {
            vecops::norm_inf(&d)
        };
        let rec = record(i, &x, inner);
        let prev_nbe = steps.last().unwrap().nbe;
        steps.push(rec);
        if !rec.nbe.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Ok((x, trace(steps, RefineStatus::Diverged, nnz)));
        }
        if rec.nbe <= nbe_target && (change <= 2.0 * u || (i >= 2 && change > 0.5 * prev_change)) {
            return Ok((x, trace(steps, RefineStatus::Converged, nnz)));
        }
        if rec.nbe > nbe_target && rec.nbe > 0.5 * prev_nbe {
            stalled += 1;
            if stalled >= 3 {
                return Ok((x, trace(steps, RefineStatus::NoProgress, nnz)));
            }
        } else {
            stalled = 0;
        }
        prev_change = change;
    }
    Ok((x, trace(steps, RefineStatus::MaxIterations, nnz)))
}

fn trace(steps: Vec<StepRecord>, status: RefineStatus, nnz: usize) -> RefinementTrace {
    RefinementTrace {
        steps,
        status,
        preconditioner_nnz: nnz,
    }
}

/// `b - A x` with the products and sums rounded to `ctx`.
fn residual(a: &CscMatrix, b: &[f64], x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
    let ax = a.matvec_ctx(x, ctx);
    if ctx.fmt == FP64 {
        return b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
    b.iter().zip(&ax).map(|(&bi, &ai)| ctx.sub(ctx.round(bi), ai)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpemu::{FP16, FP32};
    use crate::random::Gaussian;

    /// Hilbert matrix scaled by lcm(1..=15) so every entry is an integer and
    /// `A * ones` is exact.
    fn hilbert(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| (360_360 / (i + j + 1)) as f64)
    }

    #[test]
    fn triple_ordering_is_enforced() {
        assert!(PrecisionTriple::new(FP16, FP64, FP64).is_ok());
        assert!(PrecisionTriple::new(FP64, FP32, FP64).is_err());
        assert!(PrecisionTriple::new(FP32, FP32, FP16).is_err());
    }

    #[test]
    fn identity_converges_at_step_zero() {
        let a = CscMatrix::identity(5);
        let b = vec![1.0, -2.0, 0.25, 3.0, 7.0];
        let (x, t) = refine(&a, &b, PrecisionTriple::uniform(FP64), &CorrectionSolver::LuDirect, RefineOptions::default(), None).unwrap();
        assert!(t.converged());
        assert_eq!(t.step_count(), 0);
        assert!(t.last().ferr <= FP64.unit_roundoff());
        assert_eq!(x, b);
    }

    #[test]
    fn wilkinson_formula_cases() {
        let c = wilkinson_criterion(&DenseMatrix::identity(100), FP64).unwrap();
        assert!(c.satisfied);
        assert!((c.value - 300.0 * 2f64.powi(-53)).abs() < 1e-30);

        let d = wilkinson_criterion(&DenseMatrix::from_diag(&[1.0, 1e-9]), FP16).unwrap();
        let expect = 3.0 * 2.0 * 2f64.powi(-11) * 1e9;
        assert!(!d.satisfied);
        assert!((d.value - expect).abs() <= 1e-9 * expect);

        let big = wilkinson_value(10_000, FP16, 1.0);
        assert!(!big.satisfied);
        assert!((big.value - 14.6484375).abs() < 1e-12);
    }

    #[test]
    fn zero_iterate_has_unit_backward_error() {
        let a = CscMatrix::from_dense(&DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, 3.0]]));
        let b = [1.0, -4.0];
        let m = error_metrics(&a, &b, &[0.0, 0.0], &[0.5, 1.0]);
        assert_eq!(m.nbe, 1.0);
        assert_eq!(m.cbe, 1.0);
        assert_eq!(m.ferr, 1.0);
        let exact = error_metrics(&a, &[3.0, 3.0], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!((exact.ferr, exact.nbe, exact.cbe), (0.0, 0.0, 0.0));
    }

    #[test]
    fn componentwise_error_matches_direct_scan() {
        let rows: [[f64; 3]; 3] = [[4.0, -1.0, 0.5], [0.0, 2.0, 0.0], [1.0, 1.0, -3.0]];
        let a = DenseMatrix::from_rows(&[&rows[0], &rows[1], &rows[2]]);
        let x = [1.0 + 1e-6, -2.0, 0.5 - 3e-7];
        let b = [4.0 + 2.0 + 0.25, -4.0, 1.0 - 2.0 - 1.5];
        let got = error_metrics(&CscMatrix::from_dense(&a), &b, &x, &[1.0, -2.0, 0.5]).cbe;
        // Row by row, straight from the definition.
        let mut expect: f64 = 0.0;
        for i in 0..3 {
            let mut r = b[i];
            let mut d = b[i].abs();
            for j in 0..3 {
                r -= rows[i][j] * x[j];
                d += rows[i][j].abs() * x[j].abs();
            }
            if r != 0.0 {
                expect = expect.max(r.abs() / d);
            }
        }
        assert!((got - expect).abs() <= 1e-9 * expect, "{got} vs {expect}");
    }

    #[test]
    fn compensated_residual_cancels_exactly() {
        // 1e16 + 1 - 1e16 in plain f64 loses the 1.
        let a = CscMatrix::from_triplets(1, 3, vec![(0, 0, 1e16), (0, 1, 1.0), (0, 2, -1e16)]).unwrap();
        let r = compensated_residual(&a, &[0.0], &[1.0, 1.0, 1.0]);
        assert_eq!(r, vec![-1.0]);
    }

    #[test]
    fn hilbert_reference_recovers_ones() {
        let h = hilbert(8);
        let b = h.matvec(&[1.0; 8]);
        let x = reference_solution(&CscMatrix::from_dense(&h), &b).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    fn conditioned(n: usize, kappa: f64, seed: u64) -> DenseMatrix {
        // U diag(s) V^T with geometric singular values and random orthogonal factors.
        let mut g = Gaussian::new(seed);
        let qu = crate::densela::qr_householder(&g.matrix(n, n), PrecisionContext::fp64()).unwrap().q_thin();
        let qv = crate::densela::qr_householder(&g.matrix(n, n), PrecisionContext::fp64()).unwrap().q_thin();
        let s: Vec<f64> = (0..n).map(|i| kappa.powf(-(i as f64) / (n - 1) as f64)).collect();
        qu.mul(&DenseMatrix::from_diag(&s)).mul(&qv.transpose())
    }

    #[test]
    fn fp64_refinement_matches_reference() {
        let a = CscMatrix::from_dense(&conditioned(40, 1e3, 3));
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let xr = reference_solution(&a, &b).unwrap();
        let (x, t) = refine(&a, &b, PrecisionTriple::uniform(FP64), &CorrectionSolver::LuDirect, RefineOptions::default(), Some(&xr)).unwrap();
        assert!(t.converged());
        let rel = vecops::norm_inf(&vecops::sub(&x, &xr)) / vecops::norm_inf(&xr);
        let kappa = cond_inf(&a.to_dense()).unwrap();
        assert!(rel <= 2.0 * FP64.unit_roundoff() * kappa.max(1.0), "{rel}");
    }

    #[test]
    fn fp32_factors_refine_to_double_accuracy() {
        let a = CscMatrix::from_dense(&conditioned(60, 1e4, 5));
        let b = a.matvec(&vec![1.0; 60]);
        for solver in [
            CorrectionSolver::LuDirect,
            CorrectionSolver::GmresLu { tol: 1e-6, ordering: false },
            CorrectionSolver::GmresLu { tol: 1e-6, ordering: true },
        ] {
            let (_, t) = refine(&a, &b, PrecisionTriple::new(FP32, FP64, FP64).unwrap(), &solver, RefineOptions::default(), None).unwrap();
            assert!(t.converged(), "{solver:?}: {:?}", t.steps);
            assert!(t.last().nbe <= 1e-14);
            // ferr decreases while the iteration contracts.
            assert!(t.steps[1].ferr < t.steps[0].ferr);
        }
    }

    #[test]
    fn fp16_lu_with_gmres_reaches_double_accuracy() {
        let n = 100;
        let a = CscMatrix::from_dense(&conditioned(n, 1e4, 11));
        let b = a.matvec(&vec![1.0; n]);
        let triple = PrecisionTriple::new(FP16, FP64, FP64).unwrap();
        let (_, t) = refine(&a, &b, triple, &CorrectionSolver::GmresLu { tol: 1e-8, ordering: false }, RefineOptions::default(), None).unwrap();
        assert!(t.converged(), "{:?}", t.steps);
        assert!(t.last().nbe <= 1e-14);
    }

    #[test]
    fn fp16_direct_refinement_on_gaussian_matrix() {
        let n = 100;
        let g = Gaussian::new(2).matrix(n, n);
        let kappa = cond_inf(&g).unwrap();
        assert!((1e3..1e5).contains(&kappa), "{kappa}");
        assert!(!wilkinson_value(n, FP16, kappa).satisfied);
        let a = CscMatrix::from_dense(&g);
        let b = a.matvec(&vec![1.0; n]);
        let triple = PrecisionTriple::new(FP16, FP64, FP64).unwrap();
        let (_, t) = refine(&a, &b, triple, &CorrectionSolver::LuDirect, RefineOptions::default(), None).unwrap();
        assert!(t.converged(), "{:?}", t.status);
        assert!(t.last().nbe <= 1e-14);
    }

    #[test]
    fn spai_preconditioned_refinement() {
        let n = 30;
        let mut trip = vec![];
        for i in 0..n {
            trip.push((i, i, 4.0 + i as f64 * 0.1));
            if i > 0 {
                trip.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                trip.push((i, i + 1, -1.5));
            }
        }
        let a = CscMatrix::from_triplets(n, n, trip).unwrap();
        let b = vec![1.0; n];
        let solver = CorrectionSolver::GmresSpai { tol: 1e-6, cfg: SpaiConfig::default() };
        let (_, t) = refine(&a, &b, PrecisionTriple::new(FP32, FP64, FP64).unwrap(), &solver, RefineOptions::default(), None).unwrap();
        assert!(t.converged());
        assert!(t.last().nbe <= 1e-14 && t.last().cbe <= 1e-12);
        assert!(t.total_inner_iterations() > 0);
    }

    #[test]
    fn metrics_are_nonnegative_and_trace_is_consistent() {
        let a = CscMatrix::from_dense(&conditioned(20, 1e2, 9));
        let b = vec![1.0; 20];
        let (_, t) = refine(&a, &b, PrecisionTriple::new(FP16, FP32, FP64).unwrap(), &CorrectionSolver::LuDirect, RefineOptions::default(), None).unwrap();
        for (k, s) in t.steps.iter().enumerate() {
            assert_eq!(s.step, k);
            assert!(s.ferr >= 0.0 && s.nbe >= 0.0 && s.cbe >= 0.0);
        }
        assert!(t.step_count() <= 20);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CscMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        let r = refine(&a, &[1.0, 1.0], PrecisionTriple::uniform(FP64), &CorrectionSolver::LuDirect, RefineOptions::default(), Some(&[0.0, 0.0]));
        assert!(matches!(r, Err(Error::SingularPivot { .. })));
        let bad = refine(&CscMatrix::identity(2), &[1.0, 1.0], PrecisionTriple::uniform(FP64), &CorrectionSolver::LuDirect, RefineOptions { maxit: 0, gmres_maxit: None }, None);
        assert!(bad.is_err());
    }
}
