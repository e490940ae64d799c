//! Compressed sparse column storage and a fill-reducing ordering.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fpemu::{round_slice, FloatFormat, PrecisionContext, Roundable, RoundingEvents};
use std::collections::BTreeSet;

/// CSC matrix with sorted, duplicate-free row indices in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(i, j, _)) = t.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) outside {nrows}x{ncols}"
            )));
        }
        t.sort_by_key(|&(i, j, _)| (j, i));
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowidx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            rowidx.push(i);
            values.push(v);
            colptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Ok(CscMatrix {
            nrows,
            ncols,
            colptr,
            rowidx,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense matrix.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let trip = (0..a.cols()).flat_map(|j| {
            (0..a.rows()).filter_map(move |i| {
                let v = a[(i, j)];
                (v != 0.0).then_some((i, j, v))
            })
        });
        Self::from_triplets(a.rows(), a.cols(), trip).expect("indices in range")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).expect("in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.colptr[j]..self.colptr[j + 1];
        (&self.rowidx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).map_or(0.0, |p| vals[p])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("in range")
    }

    /// `A x` in `f64`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `A x` with products and sums rounded to `ctx`. Each `y_i` accumulates
    /// its terms in increasing column order.
    pub fn matvec_ctx(&self, x: &[f64], ctx: PrecisionContext) -> Vec<f64> {
        if ctx.is_native() {
            return self.matvec(x);
        }
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            let xj = ctx.round(xj);
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] = ctx.mul_add(y[i], ctx.round(v), xj);
            }
        }
        y
    }

    /// `|A| |x|` in `f64`.
    pub fn abs_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v.abs() * xj.abs();
            }
        }
        y
    }

    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.nrows];
        for (i, _, v) in self.triplets() {
            sums[i] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(i, j, _)| self.col(i).0.binary_search(&j).is_ok())
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// `P A P^T` with `(PAP^T)_{ij} = A_{perm[i], perm[j]}`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().map(|(i, j, v)| (inv[i], inv[j], v)),
        )
        .expect("in range")
    }

    /// Row-oriented copy: column `i` of the result lists row `i` of `self`.
    pub fn row_structure(&self) -> CscMatrix {
        self.transpose()
    }
}

impl Roundable for CscMatrix {
    fn rounded(&self, fmt: FloatFormat) -> (Self, RoundingEvents) {
        let mut out = self.clone();
        let events = round_slice(&mut out.values, fmt);
        (out, events)
    }
}

/// Minimum-degree ordering on the pattern of `A + A^T`.
///
/// Greedy elimination on an explicit graph: repeatedly eliminate the vertex
/// of smallest current degree (ties to the smallest index) and connect its
/// neighbours. Returns `perm` with `perm[new] = old`.
pub fn minimum_degree_ordering(a: &CscMatrix) -> Vec<usize> {
    let n = a.nrows().min(a.ncols());
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j && i < n && j < n {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut eliminated = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    let mut by_degree: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    while let Some(&(_, v)) = by_degree.iter().next() {
        by_degree.remove(&(adj[v].len(), v));
        eliminated[v] = true;
        perm.push(v);
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for &x in &nbrs {
            by_degree.remove(&(adj[x].len(), x));
            adj[x].remove(&v);
        }
        for (k, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[k + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        for &x in &nbrs {
            by_degree.insert((adj[x].len(), x));
        }
        adj[v].clear();
    }
    debug_assert!(eliminated.iter().all(|&e| e));
    perm
}
