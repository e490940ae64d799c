//! Left-preconditioned GMRES without restarts.
//!
//! Arnoldi uses modified Gram–Schmidt and the least-squares problem is kept
//! triangular with Givens rotations. Every vector operation is rounded to the
//! solver's context; operators decide the precision of their own actions
//! through the same context.
//!
//! Convergence is measured on the preconditioned residual,
//! `||M(b - Ax)||_2 / ||Mb||_2 <= tol`, starting from `x0 = 0`.

use crate::dense::DenseMatrix;
use crate::densela::LuFactors;
use crate::error::{Error, Result};
use crate::fpemu::PrecisionContext;
use crate::sparse::CscMatrix;

/// Subdiagonal Arnoldi entries below this count as a happy breakdown.
pub const BREAKDOWN_FLOOR: f64 = 1e-300;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64>;
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        crate::densela::matvec(self, x, ctx).expect("operator dimension")
    }
}

impl LinearOperator for CscMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        self.matvec_ctx(x, ctx)
    }
}

pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        ctx.round_vec(x)
    }
}

/// `x -> U^{-1} L^{-1} P x` from stored LU factors, optionally of a
/// symmetrically permuted matrix `Q A Q^T` (fill-reducing ordering).
pub struct LuPreconditioner {
    factors: LuFactors,
    ordering: Option<Vec<usize>>,
}

impl LuPreconditioner {
    pub fn new(factors: LuFactors) -> Self {
        LuPreconditioner {
            factors,
            ordering: None,
        }
    }

    /// `factors` are of `A[perm, perm]` with `perm[new] = old`.
    pub fn with_ordering(factors: LuFactors, perm: Vec<usize>) -> Self {
        LuPreconditioner {
            factors,
            ordering: Some(perm),
        }
    }

    pub fn factors(&self) -> &LuFactors {
        &self.factors
    }

    pub fn nnz(&self) -> usize {
        self.factors.nnz()
    }

    pub fn solve(&self, r: &[f64], ctx: PrecisionContext) -> Result<Vec<f64>> {
        match &self.ordering {
            None => self.factors.solve(r, ctx),
            Some(perm) => {
                let rp: Vec<f64> = perm.iter().map(|&p| r[p]).collect();
                let yp = self.factors.solve(&rp, ctx)?;
                let mut y = vec![0.0; r.len()];
                for (new, &old) in perm.iter().enumerate() {
                    y[old] = yp[new];
                }
                Ok(y)
            }
        }
    }
}

impl LinearOperator for LuPreconditioner {
    fn dim(&self) -> usize {
        self.factors.n()
    }

    fn apply(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        self.solve(x, ctx).expect("factors were checked nonsingular")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    /// The Krylov space became invariant; the iterate is exact up to rounding.
    HappyBreakdown,
    /// `maxit` iterations without reaching `tol`.
    Stagnation,
}

#[derive(Debug, Clone)]
pub struct GmresReport {
    pub iterations: usize,
    /// `||M r_j|| / ||M b||` after each iteration, starting with 1 at j = 0.
    pub relative_residual_history: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
}

impl GmresReport {
    pub fn final_residual(&self) -> f64 {
        *self.relative_residual_history.last().unwrap_or(&0.0)
    }
}

/// Solves `M A x = M b` by GMRES from a zero initial guess.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
    ctx: PrecisionContext,
) -> Result<(Vec<f64>, GmresReport)> {
    let n = op.dim();
    if n == 0 || rhs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "GMRES on operator of order {n} with rhs of length {}",
            rhs.len()
        )));
    }
    if let Some(m) = precond {
        if m.dim() != n {
            return Err(Error::DimensionMismatch("preconditioner order".into()));
        }
    }
    if !(tol > 0.0) || maxit == 0 {
        return Err(Error::InvalidArgument(format!("tol = {tol}, maxit = {maxit}")));
    }
    let precondition = |v: Vec<f64>| match precond {
        Some(m) => m.apply(&v, ctx),
        None => v,
    };

    let r0 = precondition(ctx.round_vec(rhs));
    let beta = ctx.norm2(&r0);
    let mut history = vec![1.0];
    if beta == 0.0 {
        return Ok((
            vec![0.0; n],
            GmresReport {
                iterations: 0,
                relative_residual_history: vec![0.0],
                converged: true,
                termination: Termination::Converged,
            },
        ));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(maxit + 1);
    let mut v0 = r0;
    ctx.scale(ctx.div(1.0, beta), &mut v0);
    basis.push(v0);
    // Column j of the (rotated) Hessenberg matrix, stored by column.
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(maxit);
    let mut cs: Vec<f64> = Vec::with_capacity(maxit);
    let mut sn: Vec<f64> = Vec::with_capacity(maxit);
    let mut g = vec![beta];
    let mut termination = Termination::Stagnation;

    for j in 0..maxit {
        let mut w = precondition(op.apply(&basis[j], ctx));
        let mut col = vec![0.0; j + 2];
        for (i, vi) in basis.iter().enumerate() {
            let hij = ctx.dot(vi, &w);
            col[i] = hij;
            ctx.axpy(-hij, vi, &mut w);
        }
        let hnext = ctx.norm2(&w);
        col[j + 1] = hnext;

        for i in 0..j {
            let a = col[i];
            let b = col[i + 1];
            col[i] = ctx.add(ctx.mul(cs[i], a), ctx.mul(sn[i], b));
            col[i + 1] = ctx.sub(ctx.mul(cs[i], b), ctx.mul(sn[i], a));
        }
        let (c, s) = givens(col[j], col[j + 1], ctx);
        col[j] = ctx.add(ctx.mul(c, col[j]), ctx.mul(s, col[j + 1]));
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        let gj = g[j];
        g[j] = ctx.mul(c, gj);
        g.push(ctx.mul(-s, gj));
        h.push(col);

        let rel = ctx.div(g[j + 1].abs(), beta);
        history.push(rel);
        if hnext <= BREAKDOWN_FLOOR {
            termination = Termination::HappyBreakdown;
            break;
        }
        if rel <= tol {
            termination = Termination::Converged;
            break;
        }
        let mut next = w;
        ctx.scale(ctx.div(1.0, hnext), &mut next);
        basis.push(next);
    }

    let k = h.len();
    // Back substitution on the k x k triangle.
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for jj in i + 1..k {
            s = ctx.sub(s, ctx.mul(h[jj][i], y[jj]));
        }
        y[i] = ctx.div(s, h[i][i]);
    }
    let mut x = vec![0.0; n];
    for (yi, vi) in y.iter().zip(&basis) {
        ctx.axpy(*yi, vi, &mut x);
    }
    let final_rel = *history.last().unwrap();
    let converged = match termination {
        Termination::Converged => true,
        Termination::HappyBreakdown => final_rel <= tol.max(1e3 * ctx.u()),
        Termination::Stagnation => false,
    };
    Ok((
        x,
        GmresReport {
            iterations: k,
            relative_residual_history: history,
            converged,
            termination,
        },
    ))
}

/// Rotation `(c, s)` with `[c s; -s c] [a; b] = [r; 0]`.
fn givens(a: f64, b: f64, ctx: PrecisionContext) -> (f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0);
    }
    if a == 0.0 {
        return (0.0, 1.0);
    }
    let r = ctx.sqrt(ctx.add(ctx.mul(a, a), ctx.mul(b, b)));
    (ctx.div(a, r), ctx.div(b, r))
}
