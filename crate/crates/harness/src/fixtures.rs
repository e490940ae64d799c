//! Deterministic test matrices.
//!
//! The SuiteSparse matrices used by the experiments are not redistributed.
//! When `MPBAL_DATA_DIR` holds `<name>.mtx` that file is loaded; otherwise a
//! generated stand-in of the same order and character is used and reported
//! as `fixture:<name>`.

use crate::mm::{dense_cap, load_matrix_market, MatrixHandle, MatrixSource};
use anyhow::{bail, Context, Result};
use mpbal_core::densela::{qr_householder, PrecisionContext};
use mpbal_core::random::{rng, Gaussian};
use mpbal_core::{CscMatrix, DenseMatrix};
use rand::Rng;
use std::path::{Path, PathBuf};

pub const DATA_DIR_ENV: &str = "MPBAL_DATA_DIR";

/// Names with a built-in generator.
pub const FIXTURES: &[&str] = &[
    "steam1", "bcsstm07", "nos7", "saylr3", "1138_bus", "lap2d_8", "convdiff_10", "ring_bus_96",
];

/// Small fixtures also shipped as `.mtx` files under `tests/data`.
pub const BUNDLED: &[&str] = &["lap2d_8", "convdiff_10", "ring_bus_96"];

struct Triplets {
    n: usize,
    t: Vec<(usize, usize, f64)>,
}

impl Triplets {
    fn new(n: usize) -> Self {
        Triplets { n, t: Vec::new() }
    }

    fn push(&mut self, i: usize, j: usize, v: f64) {
        self.t.push((i, j, v));
    }

    fn build(self) -> CscMatrix {
        CscMatrix::from_triplets(self.n, self.n, self.t).expect("generator indices are in range")
    }
}

/// Neighbours on a tensor grid, with the axis and direction of each.
fn grid_neighbours(dims: &[usize], idx: usize) -> Vec<(usize, usize, i32)> {
    let mut coords = Vec::with_capacity(dims.len());
    let mut r = idx;
    for &d in dims {
        coords.push(r % d);
        r /= d;
    }
    let mut out = Vec::new();
    let mut stride = 1;
    for (axis, &d) in dims.iter().enumerate() {
        if coords[axis] + 1 < d {
            out.push((idx + stride, axis, 1));
        }
        if coords[axis] > 0 {
            out.push((idx - stride, axis, -1));
        }
        stride *= d;
    }
    out
}

/// 240 unknowns: three coupled fields on a 10x8 grid with upwinded
/// transport and field scalings spread over four decades.
pub fn steam1_like() -> CscMatrix {
    let dims = [10, 8];
    let cells = 80;
    let n = 3 * cells;
    let mut r = rng(0x5734_0001);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for cell in 0..cells {
        for c in 0..3 {
            let i = 3 * cell + c;
            for c2 in 0..3 {
                if c2 != c {
                    rows[i].push((3 * cell + c2, r.gen_range(-0.6..0.6)));
                }
            }
            for (nb, axis, dir) in grid_neighbours(&dims, cell) {
                let upwind = if axis == 0 { 0.6 * dir as f64 } else { 0.2 * dir as f64 };
                rows[i].push((3 * nb + c, -(1.0 + upwind) * r.gen_range(0.8..1.2)));
                rows[i].push((3 * nb + (c + 1) % 3, r.gen_range(-0.3..0.3)));
            }
        }
    }
    let scale = [1.0, 1e2, 1e4];
    let col_scale: Vec<f64> = (0..n).map(|j| scale[j % 3] * 10f64.powf(r.gen_range(-0.5..0.5))).collect();
    let mut t = Triplets::new(n);
    for (i, row) in rows.iter().enumerate() {
        let off: f64 = row.iter().map(|&(_, v)| v.abs()).sum();
        t.push(i, i, (1.1 * off + 0.1) * col_scale[i]);
        for &(j, v) in row {
            t.push(i, j, v * col_scale[j]);
        }
    }
    t.build()
}

/// Spectrum of the 420-point mass-matrix stand-in: geometric decay from 1
/// to 1e-2 over the first 148 eigenvalues, a fast drop to 1e-6 by index
/// 200, then a slow tail to 5e-7.
pub fn bcsstm07_spectrum() -> Vec<f64> {
    let n = 420;
    (1..=n)
        .map(|k| {
            let k = k as f64;
            if k <= 148.0 {
                1e-2f64.powf((k - 1.0) / 147.0)
            } else if k <= 200.0 {
                1e-2 * 1e-4f64.powf((k - 148.0) / 52.0)
            } else {
                1e-6 * 0.5f64.powf((k - 200.0) / 220.0)
            }
        })
        .collect()
}

/// Dense SPD `Q diag(lambda) Q^T` with a Haar-like orthogonal `Q`, scaled so
/// the largest entry is about 100.
pub fn bcsstm07_like() -> CscMatrix {
    let lambda = bcsstm07_spectrum();
    let n = lambda.len();
    let g = Gaussian::new(0xb755_0007).matrix(n, n);
    let q = qr_householder(&g, PrecisionContext::fp64())
        .expect("square Gaussian QR")
        .q_thin();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let qi = q.row(i);
        for j in 0..=i {
            let qj = q.row(j);
            let s: f64 = (0..n).map(|k| qi[k] * lambda[k] * qj[k]).sum();
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let scale = 100.0 / a.max_abs();
    CscMatrix::from_dense(&a.scaled(scale))
}

fn diffusion(dims: &[usize], kappa: &dyn Fn(usize) -> f64, velocity: &[f64], boundary: f64) -> CscMatrix {
    let n: usize = dims.iter().product();
    let mut t = Triplets::new(n);
    for i in 0..n {
        let nbs = grid_neighbours(dims, i);
        let mut diag = boundary * (2 * dims.len() - nbs.len()) as f64 * kappa(i);
        for (j, axis, dir) in nbs {
            let face = 2.0 * kappa(i) * kappa(j) / (kappa(i) + kappa(j));
            let v = velocity.get(axis).copied().unwrap_or(0.0) * dir as f64;
            // First-order upwinding keeps the operator an M-matrix.
            let conv = v.max(0.0);
            t.push(i, j, -face - conv);
            diag += face + conv;
        }
        t.push(i, i, diag);
    }
    t.build()
}

/// 729 unknowns: 3-D diffusion on a 9^3 grid with layered coefficients
/// spanning eight decades.
pub fn nos7_like() -> CscMatrix {
    let layer = |i: usize| {
        let z = i / 81;
        [1.0, 1e4, 1e-2, 1e6, 1.0, 1e-2, 1e4, 1e2, 1.0][z]
    };
    diffusion(&[9, 9, 9], &layer, &[], 1e-3)
}

/// 1000 unknowns: 3-D convection-diffusion on a 10^3 grid with lognormal
/// permeability.
pub fn saylr3_like() -> CscMatrix {
    let mut r = rng(0x5a71_0003);
    let perm: Vec<f64> = (0..1000).map(|_| 10f64.powf(r.gen_range(-1.5..1.5))).collect();
    let k = |i: usize| perm[i];
    diffusion(&[10, 10, 10], &k, &[0.8, 0.3, 0.1], 1.0)
}

/// Weighted graph Laplacian plus small shunts.
fn bus_network(n: usize, extra_edges: usize, reach: usize, seed: u64) -> CscMatrix {
    let mut r = rng(seed);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 1..n {
        let p = r.gen_range(i.saturating_sub(reach)..i);
        edges.push((i, p, r.gen_range(1.0..10.0)));
    }
    while edges.len() < n - 1 + extra_edges {
        let i = r.gen_range(0..n);
        let j = r.gen_range(i.saturating_sub(reach)..(i + reach).min(n));
        if i != j && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i)) {
            edges.push((i, j, r.gen_range(1.0..10.0)));
        }
    }
    let mut diag: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..0.1)).collect();
    let mut t = Triplets::new(n);
    for (i, j, w) in edges {
        t.push(i, j, -w);
        t.push(j, i, -w);
        diag[i] += w;
        diag[j] += w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        t.push(i, i, d);
    }
    t.build()
}

/// 1138 buses, 1458 lines.
pub fn bus1138_like() -> CscMatrix {
    bus_network(1138, 321, 40, 0x1138)
}

/// 5-point Laplacian on an 8x8 grid.
pub fn lap2d_8() -> CscMatrix {
    diffusion(&[8, 8], &|_| 1.0, &[], 1.0)
}

/// Upwinded convection-diffusion on a 10x10 grid.
pub fn convdiff_10() -> CscMatrix {
    diffusion(&[10, 10], &|_| 1.0, &[2.0, -1.0], 1.0)
}

pub fn ring_bus_96() -> CscMatrix {
    bus_network(96, 24, 6, 96)
}

/// Generator output and whether it is exactly symmetric.
pub fn generate(name: &str) -> Option<(CscMatrix, bool)> {
    let a = match name {
        "steam1" => steam1_like(),
        "bcsstm07" => bcsstm07_like(),
        "nos7" => nos7_like(),
        "saylr3" => saylr3_like(),
        "1138_bus" => bus1138_like(),
        "lap2d_8" => lap2d_8(),
        "convdiff_10" => convdiff_10(),
        "ring_bus_96" => ring_bus_96(),
        _ => return None,
    };
    let sym = a.is_symmetric();
    Some((a, sym))
}

pub fn fixture(name: &str) -> Result<MatrixHandle> {
    let (a, sym) = generate(name).with_context(|| format!("no built-in fixture named {name:?}"))?;
    Ok(MatrixHandle::new(name, MatrixSource::Fixture(name.into()), a, sym, dense_cap()))
}

fn data_dir_file(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(DATA_DIR_ENV)?;
    let p = Path::new(&dir).join(format!("{name}.mtx"));
    p.is_file().then_some(p)
}

/// Resolves a matrix argument:
/// - `fixture:<name>` is always the generator;
/// - a path to an existing file, or anything ending in `.mtx`, is read;
/// - a bare name prefers `$MPBAL_DATA_DIR/<name>.mtx`, then the generator.
pub fn resolve(spec: &str) -> Result<MatrixHandle> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return fixture(name);
    }
    let path = Path::new(spec);
    if path.is_file() || spec.ends_with(".mtx") {
        return load_matrix_market(path).with_context(|| format!("reading {spec}"));
    }
    if let Some(p) = data_dir_file(spec) {
        return load_matrix_market(&p).with_context(|| format!("reading {}", p.display()));
    }
    if generate_known(spec) {
        return fixture(spec);
    }
    bail!(
        "unknown matrix {spec:?}: not a file, not in ${DATA_DIR_ENV}, and no fixture (known: {}); \
         scripts/fetch_suitesparse.sh downloads the originals",
        FIXTURES.join(", ")
    )
}

fn generate_known(name: &str) -> bool {
    FIXTURES.contains(&name)
}

/// Writes the bundled fixtures as Matrix Market files into `dir`.
pub fn write_bundled(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for name in BUNDLED {
        let (a, sym) = generate(name).expect("bundled names have generators");
        let p = dir.join(format!("{name}.mtx"));
        crate::mm::write_matrix_market(&p, &a, sym).with_context(|| format!("writing {}", p.display()))?;
        out.push(p);
    }
    Ok(out)
}
