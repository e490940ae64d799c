//! Hierarchically off-diagonal low-rank (HODLR) matrices with per-level
//! storage precision.
//!
//! The index range is halved recursively `ℓ` times (sizes differ by at most
//! one per split). At level `k` every node's two sibling off-diagonal blocks
//! are replaced by truncated SVD factors `U√Σ`, `V√Σ`, keeping the smallest
//! rank whose discarded energy is at most `ε` times the block's Frobenius
//! norm. The factors of level `k` are stored in the coarsest format of a menu
//! with `u ≤ ε / (2^{k/2} ξ_k)`, where `ξ_k` is the largest sibling block norm
//! at that level relative to `||A||_F`. Diagonal leaves stay in `f64`.

use crate::dense::{vecops, DenseMatrix};
use crate::densela::{svd, Svd};
use crate::error::{Error, Result};
use crate::fpemu::{round_matrix, FloatFormat, PrecisionContext, RoundingEvents, FP64};
use std::ops::Range;

/// Bits per stored leaf entry.
pub const LEAF_BITS: u64 = 64;

/// Halves `r`; the first half gets the smaller share.
fn split(r: &Range<usize>) -> (Range<usize>, Range<usize>) {
    let mid = r.start + (r.end - r.start) / 2;
    (r.start..mid, mid..r.end)
}

/// Index ranges of the `2^k` nodes at every level `k = 0..=levels`.
pub fn partition(n: usize, levels: usize) -> Vec<Vec<Range<usize>>> {
    let mut out = vec![vec![0..n]];
    for _ in 0..levels {
        let next = out
            .last()
            .unwrap()
            .iter()
            .flat_map(|r| {
                let (a, b) = split(r);
                [a, b]
            })
            .collect();
        out.push(next);
    }
    out
}

fn check_levels(n: usize, levels: usize) -> Result<()> {
    if levels == 0 || levels >= usize::BITS as usize || n < (1usize << levels) {
        return Err(Error::InvalidArgument(format!(
            "HODLR depth {levels} needs 1 <= levels and n >= 2^levels, n = {n}"
        )));
    }
    Ok(())
}

/// Deepest admissible level count for order `n`.
pub fn max_levels(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

fn block_fro(a: &DenseMatrix, rows: &Range<usize>, cols: &Range<usize>) -> f64 {
    rows.clone()
        .flat_map(|i| a.row(i)[cols.clone()].iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// `ξ_k` for `k = 1..=levels`: the largest sibling off-diagonal block norm
/// at level `k` over `||A||_F` (0 for a zero matrix).
pub fn xi_levels(a: &DenseMatrix, levels: usize) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    check_levels(a.rows(), levels)?;
    let total = a.norm_fro();
    let parts = partition(a.rows(), levels);
    Ok((1..=levels)
        .map(|k| {
            if total == 0.0 {
                return 0.0;
            }
            parts[k]
                .chunks(2)
                .flat_map(|p| [block_fro(a, &p[0], &p[1]), block_fro(a, &p[1], &p[0])])
                .fold(0.0, f64::max)
                / total
        })
        .collect())
}

/// Menu sorted finest first; must contain `f64`.
fn sorted_menu(menu: &[FloatFormat]) -> Result<Vec<FloatFormat>> {
    if !menu.contains(&FP64) {
        return Err(Error::InvalidArgument("format menu must contain fp64".into()));
    }
    let mut m = menu.to_vec();
    m.sort_by(|a, b| a.unit_roundoff().total_cmp(&b.unit_roundoff()));
    m.dedup();
    Ok(m)
}

/// Coarsest menu format with `u <= ε / (2^{k/2} ξ_k)`; the coarsest overall
/// when `ξ_k = 0`, the finest when nothing qualifies.
pub fn level_format(menu: &[FloatFormat], eps: f64, k: usize, xi: f64) -> Result<FloatFormat> {
    let m = sorted_menu(menu)?;
    if xi == 0.0 {
        return Ok(*m.last().unwrap());
    }
    let threshold = eps / (2f64.powf(k as f64 / 2.0) * xi);
    Ok(m.iter()
        .rev()
        .find(|f| f.unit_roundoff() <= threshold)
        .copied()
        .unwrap_or(m[0]))
}

/// A compressed off-diagonal block `U V^T`.
#[derive(Debug, Clone)]
pub struct LowRankBlock {
    pub level: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    /// `rows.len() x rank`, entries representable in `format`.
    pub u: DenseMatrix,
    /// `cols.len() x rank`, entries representable in `format`.
    pub v: DenseMatrix,
    pub format: FloatFormat,
    /// Whether rounding forced a finer format than the level's.
    pub promoted: bool,
}

impl LowRankBlock {
    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn stored_entries(&self) -> u64 {
        ((self.rows.len() + self.cols.len()) * self.rank()) as u64
    }
}

#[derive(Debug, Clone)]
pub struct HodlrMatrix {
    pub n: usize,
    pub levels: usize,
    pub eps: f64,
    /// `ξ_k`, index `k - 1`.
    pub xi: Vec<f64>,
    /// Format assigned to level `k`, index `k - 1`.
    pub level_formats: Vec<FloatFormat>,
    pub blocks: Vec<LowRankBlock>,
    /// Diagonal leaves in `f64`.
    pub leaves: Vec<(Range<usize>, DenseMatrix)>,
}

impl HodlrMatrix {
    /// Dense `f64` assembly of the stored representation.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n, self.n);
        for (r, d) in &self.leaves {
            for (li, i) in r.clone().enumerate() {
                out.row_mut(i)[r.clone()].copy_from_slice(d.row(li));
            }
        }
        for b in &self.blocks {
            for (li, i) in b.rows.clone().enumerate() {
                let urow = b.u.row(li);
                let row = &mut out.row_mut(i)[b.cols.clone()];
                for (lj, o) in row.iter_mut().enumerate() {
                    *o = urow.iter().zip(b.v.row(lj)).map(|(x, y)| x * y).sum();
                }
            }
        }
        out
    }

    pub fn max_rank(&self, level: usize) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.level == level)
            .map(|b| b.rank())
            .max()
            .unwrap_or(0)
    }

    pub fn promoted_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.promoted).count()
    }

    /// `2√2 (Σ_k 2^k ξ_k² u_k²)^{1/2} + ε` with the level formats.
    pub fn rounding_bound(&self) -> f64 {
        let s: f64 = self
            .xi
            .iter()
            .zip(&self.level_formats)
            .enumerate()
            .map(|(i, (x, f))| 2f64.powi(i as i32 + 1) * (x * f.unit_roundoff()).powi(2))
            .sum();
        2.0 * 2f64.sqrt() * s.sqrt() + self.eps
    }

    /// `(2√2 ℓ + 1) ε`.
    pub fn global_bound(&self) -> f64 {
        (2.0 * 2f64.sqrt() * self.levels as f64 + 1.0) * self.eps
    }
}

/// Truncated SVD of one off-diagonal block, computed on its nonzero rows
/// and columns only.
#[derive(Debug, Clone)]
struct BlockSvd {
    rows: Range<usize>,
    cols: Range<usize>,
    nz_rows: Vec<usize>,
    nz_cols: Vec<usize>,
    svd: Option<Svd>,
    fro: f64,
}

impl BlockSvd {
    fn new(a: &DenseMatrix, rows: Range<usize>, cols: Range<usize>) -> Result<Self> {
        let nz_rows: Vec<usize> = rows
            .clone()
            .filter(|&i| a.row(i)[cols.clone()].iter().any(|&v| v != 0.0))
            .collect();
        let nz_cols: Vec<usize> = cols
            .clone()
            .filter(|&j| nz_rows.iter().any(|&i| a[(i, j)] != 0.0))
            .collect();
        let fro = block_fro(a, &rows, &cols);
        let svd = if nz_rows.is_empty() {
            None
        } else {
            let sub = DenseMatrix::from_fn(nz_rows.len(), nz_cols.len(), |i, j| a[(nz_rows[i], nz_cols[j])]);
            Some(svd(&sub)?)
        };
        Ok(BlockSvd {
            rows,
            cols,
            nz_rows,
            nz_cols,
            svd,
            fro,
        })
    }

    /// Smallest rank whose discarded singular values have energy at most
    /// `(ε ||B||_F)^2`.
    fn rank(&self, eps: f64) -> usize {
        let Some(svd) = &self.svd else { return 0 };
        let limit = (eps * self.fro).powi(2);
        let mut tail = 0.0;
        let mut r = svd.s.len();
        while r > 0 {
            let t = tail + svd.s[r - 1] * svd.s[r - 1];
            if t > limit {
                break;
            }
            tail = t;
            r -= 1;
        }
        r
    }

    /// `(U_r √Σ_r, V_r √Σ_r)` expanded to the full block dimensions.
    fn factors(&self, r: usize) -> (DenseMatrix, DenseMatrix) {
        let mut u = DenseMatrix::zeros(self.rows.len(), r);
        let mut v = DenseMatrix::zeros(self.cols.len(), r);
        if let Some(svd) = &self.svd {
            for t in 0..r {
                let w = svd.s[t].sqrt();
                for (li, &i) in self.nz_rows.iter().enumerate() {
                    u[(i - self.rows.start, t)] = svd.u[(li, t)] * w;
                }
                for (lj, &j) in self.nz_cols.iter().enumerate() {
                    v[(j - self.cols.start, t)] = svd.v[(lj, t)] * w;
                }
            }
        }
        (u, v)
    }
}

fn rounding_is_faithful(x: &DenseMatrix, rx: &DenseMatrix, fmt: FloatFormat) -> bool {
    let err = rx.sub(x).norm_fro();
    err.is_finite() && err <= fmt.unit_roundoff() * x.norm_fro()
}

/// Builds HODLR approximations of one matrix, reusing block SVDs across
/// depths and tolerances.
pub struct HodlrCompressor {
    a: DenseMatrix,
    /// `svds[k - 1]` holds the sibling blocks of level `k`, upper then lower
    /// for each parent.
    svds: Vec<Vec<BlockSvd>>,
}

impl HodlrCompressor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        Ok(HodlrCompressor {
            a: a.clone(),
            svds: vec![],
        })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    fn ensure_levels(&mut self, levels: usize) -> Result<()> {
        let parts = partition(self.n(), levels);
        for k in self.svds.len() + 1..=levels {
            let mut level = Vec::with_capacity(parts[k].len());
            for p in parts[k].chunks(2) {
                level.push(BlockSvd::new(&self.a, p[0].clone(), p[1].clone())?);
                level.push(BlockSvd::new(&self.a, p[1].clone(), p[0].clone())?);
            }
            self.svds.push(level);
        }
        Ok(())
    }

    pub fn build(&mut self, levels: usize, eps: f64, menu: &[FloatFormat]) -> Result<HodlrMatrix> {
        let n = self.n();
        check_levels(n, levels)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        let menu = sorted_menu(menu)?;
        self.ensure_levels(levels)?;
        let total = self.a.norm_fro();
        let mut xi = Vec::with_capacity(levels);
        let mut level_formats = Vec::with_capacity(levels);
        let mut blocks = Vec::new();
        for k in 1..=levels {
            let level = &self.svds[k - 1];
            let x = if total == 0.0 {
                0.0
            } else {
                level.iter().map(|b| b.fro).fold(0.0, f64::max) / total
            };
            let fmt = level_format(&menu, eps, k, x)?;
            xi.push(x);
            level_formats.push(fmt);
            let start = menu.iter().position(|&f| f == fmt).unwrap();
            for b in level {
                let (u, v) = b.factors(b.rank(eps));
                // Promote towards finer formats until rounding is faithful.
                let mut chosen = None;
                for (pos, &f) in menu[..=start].iter().enumerate().rev() {
                    let (ru, _) = round_matrix(&u, f);
                    let (rv, _) = round_matrix(&v, f);
                    if f == FP64 || (rounding_is_faithful(&u, &ru, f) && rounding_is_faithful(&v, &rv, f)) {
                        chosen = Some((ru, rv, f, pos != start));
                        break;
                    }
                }
                let (u, v, format, promoted) = chosen.expect("fp64 is always faithful");
                blocks.push(LowRankBlock {
                    level: k,
                    rows: b.rows.clone(),
                    cols: b.cols.clone(),
                    u,
                    v,
                    format,
                    promoted,
                });
            }
        }
        let leaves = partition(n, levels)[levels]
            .iter()
            .map(|r| (r.clone(), self.a.submatrix(r.start, r.end, r.start, r.end)))
            .collect();
        Ok(HodlrMatrix {
            n,
            levels,
            eps,
            xi,
            level_formats,
            blocks,
            leaves,
        })
    }
}

/// One-shot [`HodlrCompressor::build`].
pub fn hodlr_build(a: &DenseMatrix, levels: usize, eps: f64, menu: &[FloatFormat]) -> Result<HodlrMatrix> {
    HodlrCompressor::new(a)?.build(levels, eps, menu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionError {
    /// `||A - Ĥ||_F / ||A||_F`.
    pub error: f64,
    /// `(2√2 ℓ + 1) ε`.
    pub bound: f64,
}

pub fn hodlr_reconstruct_error(a: &DenseMatrix, h: &HodlrMatrix) -> Result<ReconstructionError> {
    if a.shape() != (h.n, h.n) {
        return Err(Error::DimensionMismatch("HODLR order differs from A".into()));
    }
    let total = a.norm_fro();
    let diff = a.sub(&h.to_dense()).norm_fro();
    Ok(ReconstructionError {
        error: if total == 0.0 { diff } else { diff / total },
        bound: h.global_bound(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatvecResult {
    pub y: Vec<f64>,
    /// `||Ĥx - y||_inf / (||Ĥ||_inf ||x||_inf)` against the `f64` assembly.
    pub backward_error_estimate: f64,
    pub events: RoundingEvents,
}

/// `y = Ĥ x` with the stored factors and every operation rounded to
/// `work_fmt`.
pub fn hodlr_matvec(h: &HodlrMatrix, x: &[f64], work_fmt: FloatFormat) -> Result<MatvecResult> {
    let y = hodlr_apply(h, x, work_fmt)?;
    let dense = h.to_dense();
    let exact = dense.matvec(x);
    let denom = dense.norm_inf() * vecops::norm_inf(x);
    let diff = vecops::norm_inf(&vecops::sub(&exact, &y));
    let backward_error_estimate = if diff == 0.0 { 0.0 } else { diff / denom };
    let mut events = RoundingEvents::default();
    for (e, v) in exact.iter().zip(&y) {
        events.record(*e, *v);
    }
    Ok(MatvecResult {
        y,
        backward_error_estimate,
        events,
    })
}

/// Blockwise product without the oracle comparison.
pub fn hodlr_apply(h: &HodlrMatrix, x: &[f64], work_fmt: FloatFormat) -> Result<Vec<f64>> {
    if x.len() != h.n {
        return Err(Error::DimensionMismatch(format!(
            "HODLR of order {} with vector of length {}",
            h.n,
            x.len()
        )));
    }
    let ctx = PrecisionContext::new(work_fmt);
    let xr = ctx.round_vec(x);
    let mut y = vec![0.0; h.n];
    for (r, d) in &h.leaves {
        for (li, i) in r.clone().enumerate() {
            let s = ctx.dot(d.row(li), &xr[r.clone()]);
            y[i] = ctx.add(y[i], s);
        }
    }
    for b in &h.blocks {
        let xs = &xr[b.cols.clone()];
        let t: Vec<f64> = (0..b.rank())
            .map(|c| {
                xs.iter()
                    .enumerate()
                    .fold(0.0, |acc, (lj, &xj)| ctx.mul_add(acc, b.v[(lj, c)], xj))
            })
            .collect();
        for (li, i) in b.rows.clone().enumerate() {
            let s = ctx.dot(b.u.row(li), &t);
            y[i] = ctx.add(y[i], s);
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub bits_adaptive: u64,
    pub bits_uniform_double: u64,
    /// `1 - bits_adaptive / bits_uniform_double`.
    pub savings_ratio: f64,
    pub level_formats: Vec<FloatFormat>,
}

pub fn storage_report(h: &HodlrMatrix) -> StorageReport {
    let leaf_entries: u64 = h.leaves.iter().map(|(r, _)| (r.len() * r.len()) as u64).sum();
    let leaf_bits = leaf_entries * LEAF_BITS;
    let block_bits: u64 = h
        .blocks
        .iter()
        .map(|b| b.stored_entries() * b.format.storage_bits as u64)
        .sum();
    let block_double: u64 = h.blocks.iter().map(|b| b.stored_entries() * 64).sum();
    let adaptive = leaf_bits + block_bits;
    let uniform = leaf_bits + block_double;
    StorageReport {
        bits_adaptive: adaptive,
        bits_uniform_double: uniform,
        savings_ratio: if uniform == 0 {
            0.0
        } else {
            1.0 - adaptive as f64 / uniform as f64
        },
        level_formats: h.level_formats.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpemu::{builtin_formats, BF16, FP16, FP32, FP8_E4M3};
    use crate::random::gaussian_matrix;

    fn spd(n: usize, seed: u64) -> DenseMatrix {
        let g = gaussian_matrix(n, n, seed);
        g.mul(&g.transpose()).add(&DenseMatrix::identity(n).scaled(n as f64))
    }

    fn kernel(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()))
    }

    fn menu() -> Vec<FloatFormat> {
        vec![FP64, FP32, BF16, FP16, FP8_E4M3]
    }

    #[test]
    fn partition_is_even() {
        let p = partition(11, 2);
        assert_eq!(p[1], vec![0..5, 5..11]);
        assert_eq!(p[2], vec![0..2, 2..5, 5..8, 8..11]);
        assert_eq!(max_levels(1138), 10);
        assert_eq!(max_levels(16), 4);
    }

    #[test]
    fn ones_matrix_xi_closed_form() {
        let n = 32;
        let a = DenseMatrix::from_fn(n, n, |_, _| 1.0);
        let xi = xi_levels(&a, 4).unwrap();
        for (k, x) in xi.iter().enumerate() {
            let block = (n >> (k + 1)) as f64;
            assert!((x - block / n as f64).abs() < 1e-15);
        }
        let id = xi_levels(&DenseMatrix::identity(8), 3).unwrap();
        assert_eq!(id, vec![0.0; 3]);
    }

    #[test]
    fn xi_within_unit_interval() {
        let a = gaussian_matrix(40, 40, 3);
        for x in xi_levels(&a, 5).unwrap() {
            assert!((0.0..=1.0).contains(&x));
        }
        assert!(xi_levels(&a, 6).is_err());
    }

    #[test]
    fn block_diagonal_is_exact_and_coarsest() {
        let mut a = DenseMatrix::zeros(16, 16);
        for i in 0..16 {
            a[(i, i)] = 2.0 + i as f64;
        }
        let h = hodlr_build(&a, 3, 1e-3, &menu()).unwrap();
        assert!(h.xi.iter().all(|&x| x == 0.0));
        assert!(h.level_formats.iter().all(|&f| f == FP8_E4M3));
        assert!(h.blocks.iter().all(|b| b.rank() == 0));
        let e = hodlr_reconstruct_error(&a, &h).unwrap();
        assert_eq!(e.error, 0.0);
    }

    #[test]
    fn rank_one_blocks_reconstruct_exactly() {
        let a = DenseMatrix::from_rows(&[
            &[4.0, 1.0, 1.0, 2.0],
            &[1.0, 5.0, 3.0, 6.0],
            &[2.0, 4.0, 6.0, 1.0],
            &[0.5, 1.0, 1.0, 7.0],
        ]);
        let h = hodlr_build(&a, 1, 1e-8, &[FP64]).unwrap();
        assert!(h.blocks.iter().all(|b| b.rank() == 1));
        let e = hodlr_reconstruct_error(&a, &h).unwrap();
        assert!(e.error <= 1e-15, "{}", e.error);
    }

    #[test]
    fn random_spd_within_bound() {
        let a = spd(64, 11);
        let h = hodlr_build(&a, 3, 1e-4, &menu()).unwrap();
        let e = hodlr_reconstruct_error(&a, &h).unwrap();
        assert!((e.bound - (2.0 * 2f64.sqrt() * 3.0 + 1.0) * 1e-4).abs() < 1e-15);
        assert!(e.error <= e.bound, "{} > {}", e.error, e.bound);
        assert!(e.error <= h.rounding_bound() + 1e-15);

        let plain = hodlr_build(&a, 3, 1e-4, &[FP64]).unwrap();
        let ep = hodlr_reconstruct_error(&a, &plain).unwrap();
        assert!(ep.error <= 3.0 * 1e-4);
        assert_eq!(storage_report(&plain).savings_ratio, 0.0);
    }

    #[test]
    fn bound_holds_across_depths_and_tolerances() {
        let a = kernel(96);
        let mut comp = HodlrCompressor::new(&a).unwrap();
        for levels in 1..=5 {
            for eps in [1e-1, 1e-4, 1e-7] {
                let h = comp.build(levels, eps, &builtin_formats()).unwrap();
                let e = hodlr_reconstruct_error(&a, &h).unwrap();
                assert!(e.error <= e.bound, "l={levels} eps={eps}: {} > {}", e.error, e.bound);
            }
        }
    }

    #[test]
    fn cached_build_matches_fresh_build() {
        let a = kernel(40);
        let mut comp = HodlrCompressor::new(&a).unwrap();
        let _ = comp.build(4, 1e-3, &menu()).unwrap();
        let cached = comp.build(2, 1e-2, &menu()).unwrap();
        let fresh = hodlr_build(&a, 2, 1e-2, &menu()).unwrap();
        assert_eq!(cached.to_dense(), fresh.to_dense());
        assert_eq!(cached.level_formats, fresh.level_formats);
    }

    #[test]
    fn formats_never_coarsen_as_eps_shrinks() {
        let a = kernel(64);
        let mut comp = HodlrCompressor::new(&a).unwrap();
        let mut prev: Option<Vec<FloatFormat>> = None;
        for eps in [1e-1, 1e-2, 1e-4, 1e-7] {
            let h = comp.build(4, eps, &menu()).unwrap();
            if let Some(p) = &prev {
                for (old, new) in p.iter().zip(&h.level_formats) {
                    assert!(new.unit_roundoff() <= old.unit_roundoff());
                }
            }
            prev = Some(h.level_formats.clone());
        }
    }

    #[test]
    fn stored_factors_are_representable() {
        let a = spd(32, 5);
        let h = hodlr_build(&a, 3, 1e-2, &menu()).unwrap();
        for b in &h.blocks {
            let (ru, _) = round_matrix(&b.u, b.format);
            assert_eq!(ru, b.u);
            let (rv, _) = round_matrix(&b.v, b.format);
            assert_eq!(rv, b.v);
        }
    }

    #[test]
    fn sixteen_by_sixteen_bit_count() {
        // Rank-one blocks everywhere; ε = 1e-2 admits fp16 on both levels
        // (ξ_1 = 1/2, ξ_2 = 1/4) but not fp8.
        let a = DenseMatrix::from_fn(16, 16, |_, _| 1.0);
        let h = hodlr_build(&a, 2, 1e-2, &[FP64, FP16]).unwrap();
        assert_eq!(h.level_formats, vec![FP16, FP16]);
        let r = storage_report(&h);
        // Level 1: 2 blocks of (8 + 8) entries; level 2: 4 blocks of (4 + 4);
        // leaves: 4 blocks of 4 x 4.
        let factor_entries = 2 * 16 + 4 * 8;
        let leaf_entries = 4 * 16;
        assert_eq!(r.bits_adaptive, factor_entries * 16 + leaf_entries * 64);
        assert_eq!(r.bits_uniform_double, (factor_entries + leaf_entries) * 64);
        assert_eq!(r.savings_ratio, 1.0 - 5120.0 / 8192.0);
    }

    #[test]
    fn matvec_identity_and_zero() {
        let h = hodlr_build(&DenseMatrix::identity(8), 2, 1e-4, &menu()).unwrap();
        let x: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        let r = hodlr_matvec(&h, &x, FP16).unwrap();
        assert_eq!(r.y, x);
        let z = hodlr_matvec(&h, &[0.0; 8], FP16).unwrap();
        assert_eq!(z.y, vec![0.0; 8]);
        assert_eq!(z.backward_error_estimate, 0.0);
    }

    #[test]
    fn matvec_in_fp64_matches_assembly() {
        let a = spd(64, 2);
        let h = hodlr_build(&a, 3, 1e-4, &menu()).unwrap();
        let x = gaussian_matrix(64, 1, 8).col(0);
        let r = hodlr_matvec(&h, &x, FP64).unwrap();
        assert!(r.backward_error_estimate <= 64.0 * FP64.unit_roundoff());
    }

    #[test]
    fn matvec_guideline_precision() {
        let n = 128;
        let eps = 1e-4;
        let a = spd(n, 4);
        let h = hodlr_build(&a, 3, eps, &menu()).unwrap();
        let work = builtin_formats()
            .into_iter()
            .filter(|f| f.unit_roundoff() <= eps / n as f64)
            .max_by(|a, b| a.unit_roundoff().total_cmp(&b.unit_roundoff()))
            .unwrap();
        assert_eq!(work, FP32);
        for seed in 0..5 {
            let x = gaussian_matrix(n, 1, seed).col(0);
            let r = hodlr_matvec(&h, &x, work).unwrap();
            assert!(r.backward_error_estimate <= 10.0 * eps);
            assert!(r.events.is_clean());
        }
    }

    #[test]
    fn invalid_arguments() {
        let a = DenseMatrix::identity(4);
        assert!(hodlr_build(&a, 3, 1e-2, &menu()).is_err());
        assert!(hodlr_build(&a, 1, 1e-2, &[FP32]).is_err());
        assert!(hodlr_build(&a, 1, 0.0, &menu()).is_err());
        assert!(hodlr_build(&DenseMatrix::zeros(2, 3), 1, 1e-2, &menu()).is_err());
    }
}
