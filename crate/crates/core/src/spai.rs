//! Sparse approximate inverse built entirely in a low precision `u_s`.
//!
//! Column `k` of `M ≈ A^{-1}` minimizes `||e_k - A m_k||_2` over a sparsity
//! pattern `J`, starting from the diagonal. While the residual (evaluated in
//! `u_s`) exceeds `tau`, the pattern is enlarged by the Grote–Huckle
//! one-dimensional minimization rule and the small least-squares problem is
//! solved again by Householder QR. Columns are independent of each other.

use crate::dense::{vecops, DenseMatrix};
use crate::densela::{cond2_abs, qr_householder};
use crate::error::{Error, Result};
use crate::fpemu::{round_matrix, FloatFormat, PrecisionContext, FP32};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaiConfig {
    pub tau: f64,
    pub u_s: FloatFormat,
    pub max_pattern_growth_steps: usize,
    pub candidates_per_step: usize,
    pub max_nnz_per_column: usize,
}

impl Default for SpaiConfig {
    fn default() -> Self {
        SpaiConfig {
            tau: 0.1,
            u_s: FP32,
            max_pattern_growth_steps: 10,
            candidates_per_step: 5,
            max_nnz_per_column: 50,
        }
    }
}

impl SpaiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.candidates_per_step == 0 || self.max_nnz_per_column == 0 {
            return Err(Error::InvalidArgument("SPAI caps must be positive".into()));
        }
        Ok(())
    }
}

/// Row indices allowed in each column of `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    columns: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn diagonal(n: usize) -> Self {
        SparsityPattern {
            columns: (0..n).map(|k| vec![k]).collect(),
        }
    }

    /// Sorts and deduplicates every column; fails on out-of-range indices.
    pub fn new(n: usize, mut columns: Vec<Vec<usize>>) -> Result<Self> {
        if columns.len() != n {
            return Err(Error::DimensionMismatch(format!("{} pattern columns for order {n}", columns.len())));
        }
        for col in columns.iter_mut() {
            col.sort_unstable();
            col.dedup();
            if col.last().is_some_and(|&i| i >= n) {
                return Err(Error::InvalidArgument("pattern index out of range".into()));
            }
        }
        Ok(SparsityPattern { columns })
    }

    pub fn column(&self, k: usize) -> &[usize] {
        &self.columns[k]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnFailure {
    /// Caps reached with the residual still above `tau`.
    ToleranceNotReached,
    /// The residual touches no new candidate indices.
    NoCandidates,
    /// The restricted least-squares problem was rank deficient in `u_s`.
    Breakdown,
}

/// Outcome of building one column.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaiColumn {
    pub index: usize,
    /// Sorted pattern `J` and the matching entries of `m_k` (in `u_s`).
    pub rows: Vec<usize>,
    pub values: Vec<f64>,
    /// `||e_k - A m_k||_2` as evaluated in `u_s`.
    pub residual_norm: f64,
    pub success: bool,
    pub growth_steps: usize,
    pub failure: Option<ColumnFailure>,
}

#[derive(Debug, Clone)]
pub struct SpaiResult {
    pub m: CscMatrix,
    pub columns: Vec<SpaiColumn>,
}

impl SpaiResult {
    pub fn residual_norms(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.residual_norm).collect()
    }

    pub fn success_flags(&self) -> Vec<bool> {
        self.columns.iter().map(|c| c.success).collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.columns.iter().all(|c| c.success)
    }

    pub fn nnz(&self) -> usize {
        self.m.nnz()
    }
}

/// Inputs shared by every column build: `A` rounded to `u_s` in both column
/// and row orientation.
pub struct SpaiProblem {
    a: CscMatrix,
    rows: CscMatrix,
    cfg: SpaiConfig,
}

impl SpaiProblem {
    pub fn new(a: &CscMatrix, cfg: SpaiConfig) -> Result<Self> {
        cfg.validate()?;
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        // A is stored in u_s for the whole construction.
        let (a, _) = round_matrix(a, cfg.u_s);
        let rows = a.row_structure();
        Ok(SpaiProblem { a, rows, cfg })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    fn ctx(&self) -> PrecisionContext {
        PrecisionContext::new(self.cfg.u_s)
    }

    /// Builds column `k` from an initial pattern.
    pub fn column(&self, k: usize, initial: &[usize]) -> SpaiColumn {
        let ctx = self.ctx();
        let mut pattern: Vec<usize> = initial.to_vec();
        pattern.sort_unstable();
        pattern.dedup();
        let mut growth_steps = 0;
        loop {
            let solved = self.solve_restricted(k, &pattern);
            let (values, residual) = match solved {
                Some(s) => s,
                None => {
                    return SpaiColumn {
                        index: k,
                        values: vec![0.0; pattern.len()],
                        rows: pattern,
                        residual_norm: 1.0,
                        success: false,
                        growth_steps,
                        failure: Some(ColumnFailure::Breakdown),
                    }
                }
            };
            let rnorm = ctx.norm2(&residual.values);
            let finish = |failure: Option<ColumnFailure>, rows: Vec<usize>| SpaiColumn {
                index: k,
                rows,
                values: values.clone(),
                residual_norm: rnorm,
                success: failure.is_none(),
                growth_steps,
                failure,
            };
            if rnorm <= self.cfg.tau {
                return finish(None, pattern);
            }
            if growth_steps >= self.cfg.max_pattern_growth_steps
                || pattern.len() >= self.cfg.max_nnz_per_column
            {
                return finish(Some(ColumnFailure::ToleranceNotReached), pattern);
            }
            let room = self.cfg.max_nnz_per_column - pattern.len();
            let s = self.cfg.candidates_per_step.min(room);
            match pattern_grow_with(&self.a, &self.rows, &pattern, &residual, s, ctx) {
                Ok(added) => {
                    pattern.extend(added);
                    pattern.sort_unstable();
                    growth_steps += 1;
                }
                Err(_) => return finish(Some(ColumnFailure::NoCandidates), pattern),
            }
        }
    }

    /// Least-squares solve on pattern `J`; returns `m_J` and the residual
    /// `e_k - A(:, J) m_J` on the row set `I`, all in `u_s`.
    fn solve_restricted(&self, k: usize, pattern: &[usize]) -> Option<(Vec<f64>, SparseResidual)> {
        let ctx = self.ctx();
        let mut rows_i: Vec<usize> = pattern.iter().flat_map(|&j| self.a.col(j).0.iter().copied()).collect();
        rows_i.sort_unstable();
        rows_i.dedup();
        if rows_i.len() < pattern.len() {
            return None;
        }
        let pos = |i: usize| rows_i.binary_search(&i).ok();
        let mut sub = DenseMatrix::zeros(rows_i.len(), pattern.len());
        for (c, &j) in pattern.iter().enumerate() {
            let (ri, vals) = self.a.col(j);
            for (&i, &v) in ri.iter().zip(vals) {
                sub[(pos(i).expect("row in I"), c)] = v;
            }
        }
        let mut rhs = vec![0.0; rows_i.len()];
        if let Some(p) = pos(k) {
            rhs[p] = 1.0;
        }
        let qr = qr_householder(&sub, ctx).ok()?;
        let m = qr.solve_least_squares(&rhs).ok()?;
        if m.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let am = crate::densela::matvec(&sub, &m, ctx).ok()?;
        let values: Vec<f64> = rhs.iter().zip(&am).map(|(&e, &v)| ctx.sub(e, v)).collect();
        // When k is outside I the residual also carries e_k itself.
        let (indices, values) = if pos(k).is_none() {
            let mut idx = rows_i.clone();
            let mut vals = values;
            let at = idx.partition_point(|&i| i < k);
            idx.insert(at, k);
            vals.insert(at, 1.0);
            (idx, vals)
        } else {
            (rows_i, values)
        };
        Some((m, SparseResidual { indices, values }))
    }
}

/// Residual vector stored on its row support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseResidual {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseResidual {
    pub fn from_dense(r: &[f64]) -> Self {
        let (indices, values) = r
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        SparseResidual { indices, values }
    }
}

/// Builds `M` column by column in `u_s` from the diagonal pattern.
pub fn spai_build(a: &CscMatrix, cfg: SpaiConfig) -> Result<SpaiResult> {
    let problem = SpaiProblem::new(a, cfg)?;
    let pattern = SparsityPattern::diagonal(problem.n());
    spai_build_with(&problem, &pattern)
}

/// Builds `M` from an explicit initial pattern.
pub fn spai_build_with(problem: &SpaiProblem, initial: &SparsityPattern) -> Result<SpaiResult> {
    let n = problem.n();
    if initial.len() != n {
        return Err(Error::DimensionMismatch("initial pattern order".into()));
    }
    let columns: Vec<SpaiColumn> = (0..n).map(|k| problem.column(k, initial.column(k))).collect();
    Ok(assemble(n, columns))
}

/// Merges independently built columns into CSC storage.
pub fn assemble(n: usize, mut columns: Vec<SpaiColumn>) -> SpaiResult {
    columns.sort_by_key(|c| c.index);
    let trip = columns
        .iter()
        .flat_map(|c| c.rows.iter().zip(&c.values).map(move |(&i, &v)| (i, c.index, v)))
        .filter(|t| t.2 != 0.0);
    let m = CscMatrix::from_triplets(n, n, trip).expect("pattern indices in range");
    SpaiResult { m, columns }
}

/// Grote–Huckle pattern augmentation for column `k`.
///
/// Candidates are the columns of `A` that touch a nonzero residual row and
/// are not yet in the pattern. Each is scored by the residual norm of the
/// one-dimensional update `rho_j^2 = ||r||^2 - (r^T A e_j)^2 / ||A e_j||^2`,
/// and up to `s` of the smallest are returned (ties to the smaller index).
pub fn pattern_grow(
    a: &CscMatrix,
    pattern: &[usize],
    residual: &[f64],
    s: usize,
    fmt: FloatFormat,
) -> Result<Vec<usize>> {
    let (a, _) = round_matrix(a, fmt);
    let rows = a.row_structure();
    pattern_grow_with(&a, &rows, pattern, &SparseResidual::from_dense(residual), s, PrecisionContext::new(fmt))
}

fn pattern_grow_with(
    a: &CscMatrix,
    rows: &CscMatrix,
    pattern: &[usize],
    residual: &SparseResidual,
    s: usize,
    ctx: PrecisionContext,
) -> Result<Vec<usize>> {
    let mut candidates: Vec<usize> = residual
        .indices
        .iter()
        .zip(&residual.values)
        .filter(|(_, &v)| v != 0.0)
        .flat_map(|(&l, _)| rows.col(l).0.iter().copied())
        .filter(|j| pattern.binary_search(j).is_err())
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() || s == 0 {
        return Err(Error::InvalidArgument("no pattern candidates".into()));
    }
    let rnorm2 = ctx.dot(&residual.values, &residual.values);
    let r_at = |i: usize| residual.indices.binary_search(&i).map_or(0.0, |p| residual.values[p]);
    let mut scored: Vec<(f64, usize)> = candidates
        .into_iter()
        .map(|j| {
            let (ri, vals) = a.col(j);
            let mut proj = 0.0;
            let mut norm2 = 0.0;
            for (&i, &v) in ri.iter().zip(vals) {
                proj = ctx.mul_add(proj, r_at(i), v);
                norm2 = ctx.mul_add(norm2, v, v);
            }
            let rho2 = if norm2 > 0.0 {
                ctx.sub(rnorm2, ctx.div(ctx.mul(proj, proj), norm2))
            } else {
                rnorm2
            };
            (rho2, j)
        })
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(scored.into_iter().take(s).map(|(_, j)| j).collect())
}

/// A priori and a posteriori feasibility of building `M` in `u_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    /// `u_s * cond2_abs(A) <= tau`.
    pub heuristic_ok: bool,
    pub cond2_abs: f64,
    pub heuristic_value: f64,
    /// `max_k n^3 u_s || |e_k| + |A| |m_k| ||_2`, available once `M` exists.
    pub rigorous_lhs: Option<f64>,
}

pub fn spai_feasibility(a: &CscMatrix, u_s: FloatFormat, tau: f64, m: Option<&CscMatrix>) -> Result<Feasibility> {
    let c = cond2_abs(&a.to_dense())?;
    let value = u_s.unit_roundoff() * c;
    Ok(Feasibility {
        heuristic_ok: value <= tau,
        cond2_abs: c,
        heuristic_value: value,
        rigorous_lhs: m.map(|m| rigorous_terms(a, m, u_s).into_iter().fold(0.0, f64::max)),
    })
}

/// Per-column `n^3 u_s || |e_k| + |A| |m_k| ||_2` in `f64`.
pub fn rigorous_terms(a: &CscMatrix, m: &CscMatrix, u_s: FloatFormat) -> Vec<f64> {
    let n = a.ncols();
    let scale = (n as f64).powi(3) * u_s.unit_roundoff();
    (0..n)
        .map(|k| {
            let mk = column_dense(m, k);
            let mut v = a.abs_matvec(&mk);
            v[k] += 1.0;
            scale * vecops::norm2(&v)
        })
        .collect()
}

/// `||e_k - A m_k||_2` in `f64` for every column.
pub fn true_residual_norms(a: &CscMatrix, m: &CscMatrix) -> Vec<f64> {
    (0..a.ncols())
        .map(|k| {
            let mut r = a.matvec(&column_dense(m, k));
            for v in r.iter_mut() {
                *v = -*v;
            }
            r[k] += 1.0;
            vecops::norm2(&r)
        })
        .collect()
}

/// Columns that passed the `u_s` test but violate
/// `||e_k - A m_k||_2 <= tau + n^3 u_s || |e_k| + |A||m_k| ||_2` in `f64`.
pub fn a_posteriori_violations(a: &CscMatrix, result: &SpaiResult, tau: f64, u_s: FloatFormat) -> Vec<usize> {
    let res = true_residual_norms(a, &result.m);
    let rig = rigorous_terms(a, &result.m, u_s);
    result
        .columns
        .iter()
        .filter(|c| c.success && res[c.index] > tau + rig[c.index])
        .map(|c| c.index)
        .collect()
}

fn column_dense(m: &CscMatrix, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; m.nrows()];
    let (rows, vals) = m.col(k);
    for (&i, &x) in rows.iter().zip(vals) {
        v[i] = x;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpemu::{round_scalar, FP16, FP64};

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> CscMatrix {
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, d));
            if i > 0 {
                t.push((i, i - 1, lo));
            }
            if i + 1 < n {
                t.push((i, i + 1, up));
            }
        }
        CscMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn identity_gives_identity() {
        let r = spai_build(&CscMatrix::identity(5), SpaiConfig::default()).unwrap();
        assert_eq!(r.m, CscMatrix::identity(5));
        assert!(r.all_succeeded());
        assert!(r.columns.iter().all(|c| c.residual_norm == 0.0 && c.growth_steps == 0));
    }

    #[test]
    fn diagonal_gives_rounded_reciprocals() {
        let d = [3.0, -7.0, 0.1, 1e3];
        let a = CscMatrix::from_triplets(4, 4, d.iter().enumerate().map(|(i, &v)| (i, i, v))).unwrap();
        let cfg = SpaiConfig {
            u_s: FP16,
            ..SpaiConfig::default()
        };
        let r = spai_build(&a, cfg).unwrap();
        for (k, &dk) in d.iter().enumerate() {
            let dk16 = round_scalar(dk, FP16);
            assert_eq!(r.m.get(k, k), round_scalar(1.0 / dk16, FP16));
            assert!(r.columns[k].residual_norm <= FP16.unit_roundoff());
        }
    }

    #[test]
    fn tridiagonal_candidates_are_neighbours() {
        let a = tridiag(6, -1.0, 4.0, -2.0);
        // Residual of the diagonal solution for column 2 lives on rows 1..=3.
        let (a_rows, a_vals) = a.col(2);
        let d = 4.0;
        let mut r = vec![0.0; 6];
        for (&i, &v) in a_rows.iter().zip(a_vals) {
            r[i] = -v / d;
        }
        r[2] += 1.0;
        let mut added = pattern_grow(&a, &[2], &r, 10, FP64).unwrap();
        added.sort();
        assert_eq!(added, vec![0, 1, 3, 4]);
        let first = pattern_grow(&a, &[2], &r, 2, FP64).unwrap();
        assert_eq!(first.len(), 2);
        assert!(first.contains(&1) && first.contains(&3));
    }

    #[test]
    fn single_candidate_matches_exhaustive_scan() {
        let vals = [4.0, -1.0, 0.5, 2.0, 1.0, 3.0, -2.0, 0.25, -0.5, 1.5, 5.0, 1.0, 2.0, -1.0, 0.75, 6.0];
        let dense = DenseMatrix::from_vec(4, 4, vals.to_vec()).unwrap();
        let a = CscMatrix::from_dense(&dense);
        let k = 1;
        let pattern = [1usize];
        // m = argmin over the single column, then r = e_k - a_1 m.
        let a1 = dense.col(1);
        let m = a1[k] / vecops::dot(&a1, &a1);
        let mut r: Vec<f64> = a1.iter().map(|v| -v * m).collect();
        r[k] += 1.0;
        let rr = vecops::dot(&r, &r);
        let brute = (0..4)
            .filter(|j| !pattern.contains(j))
            .map(|j| {
                let aj = dense.col(j);
                (rr - vecops::dot(&r, &aj).powi(2) / vecops::dot(&aj, &aj), j)
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap()
            .1;
        assert_eq!(pattern_grow(&a, &pattern, &r, 1, FP64).unwrap(), vec![brute]);
    }

    #[test]
    fn residual_norm_decreases_with_growth() {
        let a = tridiag(30, -1.5, 4.0, -1.0);
        let cfg = SpaiConfig {
            tau: 1e-6,
            u_s: FP64,
            max_pattern_growth_steps: 6,
            candidates_per_step: 2,
            max_nnz_per_column: 50,
        };
        let problem = SpaiProblem::new(&a, cfg).unwrap();
        let mut last = f64::INFINITY;
        for steps in 0..=6 {
            let c = problem.column(
                12,
                &[12],
            );
            let limited = SpaiProblem::new(
                &a,
                SpaiConfig {
                    max_pattern_growth_steps: steps,
                    ..cfg
                },
            )
            .unwrap()
            .column(12, &[12]);
            assert!(limited.residual_norm <= last + 10.0 * FP64.unit_roundoff());
            last = limited.residual_norm;
            assert!(c.residual_norm <= limited.residual_norm + 1e-15);
        }
    }

    #[test]
    fn column_order_does_not_matter() {
        let a = tridiag(20, -1.0, 3.0, -1.2);
        let cfg = SpaiConfig {
            u_s: FP16,
            tau: 0.05,
            ..SpaiConfig::default()
        };
        let problem = SpaiProblem::new(&a, cfg).unwrap();
        let forward = spai_build(&a, cfg).unwrap();
        let reversed: Vec<SpaiColumn> = (0..20).rev().map(|k| problem.column(k, &[k])).collect();
        let rebuilt = assemble(20, reversed);
        assert_eq!(forward.m, rebuilt.m);
        assert!(forward.all_succeeded());
        assert!(a_posteriori_violations(&a, &forward, cfg.tau, cfg.u_s).is_empty());
    }

    #[test]
    fn failing_columns_are_recorded() {
        // Dense inverse with a tiny pattern budget: tau cannot be reached.
        let a = tridiag(40, -1.0, 2.05, -1.0);
        let cfg = SpaiConfig {
            tau: 1e-3,
            max_pattern_growth_steps: 1,
            candidates_per_step: 1,
            ..SpaiConfig::default()
        };
        let r = spai_build(&a, cfg).unwrap();
        assert!(!r.all_succeeded());
        let c = r.columns.iter().find(|c| !c.success).unwrap();
        assert_eq!(c.failure, Some(ColumnFailure::ToleranceNotReached));
    }

    #[test]
    fn feasibility_cases() {
        let i = CscMatrix::identity(4);
        let f = spai_feasibility(&i, FP16, 0.1, None).unwrap();
        assert!(f.heuristic_ok && (f.cond2_abs - 1.0).abs() < 1e-14);
        let d = CscMatrix::from_triplets(3, 3, vec![(0, 0, 1e-8), (1, 1, 1.0), (2, 2, 1e8)]).unwrap();
        let f = spai_feasibility(&d, FP16, 0.1, None).unwrap();
        assert!(f.heuristic_ok, "diagonal scaling must not matter");
        // Direct evaluation of the heuristic at cond2_abs = 1e6.
        assert!(FP32.unit_roundoff() * 1e6 <= 0.1);
        assert!(FP16.unit_roundoff() * 1e6 > 0.1);
    }

    #[test]
    fn invalid_config() {
        let cfg = SpaiConfig {
            tau: 1.5,
            ..SpaiConfig::default()
        };
        assert!(spai_build(&CscMatrix::identity(2), cfg).is_err());
    }
}
