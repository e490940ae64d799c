//! Matrix Market reading and writing.
//!
//! Supports `matrix coordinate|array real|integer general|symmetric`.
//! Symmetric files store the lower triangle and are expanded on load;
//! duplicate coordinate entries are summed.

use mpbal_core::{CscMatrix, DenseMatrix};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Largest order for which a dense copy is kept unless `MPBAL_DENSE_CAP`
/// says otherwise.
pub const DEFAULT_DENSE_CAP: usize = 4096;
pub const DENSE_CAP_ENV: &str = "MPBAL_DENSE_CAP";

#[derive(Debug, thiserror::Error)]
pub enum MmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market {0}")]
    UnsupportedField(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> MmError {
    MmError::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

/// Parsed matrix with the header's symmetry flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MmMatrix {
    pub matrix: CscMatrix,
    pub symmetric: bool,
}

fn parse_value(tok: &str, line: usize) -> Result<f64, MmError> {
    let v: f64 = if tok.contains(['d', 'D']) {
        tok.replace(['d', 'D'], "e").parse()
    } else {
        tok.parse()
    }
    .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))?;
    Ok(v)
}

fn parse_index(tok: &str, bound: usize, line: usize) -> Result<usize, MmError> {
    let i: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid index {tok:?}")))?;
    if i == 0 || i > bound {
        return Err(parse_err(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

pub fn parse_matrix_market(text: &str) -> Result<MmMatrix, MmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if h[1] != "matrix" {
        return Err(MmError::UnsupportedField(format!("object {:?}", h[1])));
    }
    let layout = match h[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unknown format {other:?}"))),
    };
    match h[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(MmError::UnsupportedField(format!("field {other:?}"))),
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(MmError::UnsupportedField(format!("symmetry {other:?}"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("invalid size {t:?}"))))
        .collect::<Result<_, _>>()?;
    let expected_dims = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(size_line, format!("expected {expected_dims} integers on the size line")));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if symmetric && nrows != ncols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }

    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut last_line = size_line;
    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            trip.reserve(if symmetric { 2 * nnz } else { nnz });
            let mut count = 0;
            for (ln, l) in data {
                last_line = ln;
                let tok: Vec<&str> = l.split_whitespace().collect();
                if tok.len() != 3 {
                    return Err(parse_err(ln, "expected 'row col value'"));
                }
                if count == nnz {
                    return Err(parse_err(ln, format!("more than {nnz} entries")));
                }
                let i = parse_index(tok[0], nrows, ln)?;
                let j = parse_index(tok[1], ncols, ln)?;
                let v = parse_value(tok[2], ln)?;
                if symmetric && i < j {
                    return Err(parse_err(ln, "entry above the diagonal in a symmetric file"));
                }
                trip.push((i, j, v));
                if symmetric && i != j {
                    trip.push((j, i, v));
                }
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(last_line, format!("expected {nnz} entries, found {count}")));
            }
        }
        Layout::Array => {
            // Column-major; symmetric arrays list the lower triangle.
            let positions: Vec<(usize, usize)> = (0..ncols)
                .flat_map(|j| {
                    let start = if symmetric { j } else { 0 };
                    (start..nrows).map(move |i| (i, j))
                })
                .collect();
            let mut k = 0;
            for (ln, l) in data {
                last_line = ln;
                for tok in l.split_whitespace() {
                    if k == positions.len() {
                        return Err(parse_err(ln, format!("more than {} values", positions.len())));
                    }
                    let v = parse_value(tok, ln)?;
                    let (i, j) = positions[k];
                    if v != 0.0 {
                        trip.push((i, j, v));
                        if symmetric && i != j {
                            trip.push((j, i, v));
                        }
                    }
                    k += 1;
                }
            }
            if k != positions.len() {
                return Err(parse_err(last_line, format!("expected {} values, found {k}", positions.len())));
            }
        }
    }
    let matrix = CscMatrix::from_triplets(nrows, ncols, trip).map_err(|e| parse_err(last_line, e.to_string()))?;
    Ok(MmMatrix { matrix, symmetric })
}

pub fn read_matrix_market(path: &Path) -> Result<MmMatrix, MmError> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Coordinate text; with `symmetric` only the lower triangle is written
/// (the caller guarantees symmetry). Values use the shortest decimal that
/// parses back to the same `f64`.
pub fn format_matrix_market(a: &CscMatrix, symmetric: bool) -> String {
    let entries: Vec<(usize, usize, f64)> = a
        .triplets()
        .filter(|&(i, j, _)| !symmetric || i >= j)
        .collect();
    let mut s = String::new();
    let sym = if symmetric { "symmetric" } else { "general" };
    writeln!(s, "%%MatrixMarket matrix coordinate real {sym}").unwrap();
    writeln!(s, "{} {} {}", a.nrows(), a.ncols(), entries.len()).unwrap();
    for (i, j, v) in entries {
        writeln!(s, "{} {} {:e}", i + 1, j + 1, v).unwrap();
    }
    s
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    // Temporary files are created private; results should be readable.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_matrix_market(path: &Path, a: &CscMatrix, symmetric: bool) -> std::io::Result<()> {
    write_atomic(path, format_matrix_market(a, symmetric).as_bytes())
}

/// Where a matrix came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixSource {
    File(PathBuf),
    /// Deterministic built-in generator.
    Fixture(String),
}

impl std::fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixSource::File(p) => write!(f, "{}", p.display()),
            MatrixSource::Fixture(n) => write!(f, "fixture:{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixHandle {
    pub name: String,
    pub source: MatrixSource,
    pub nrows: usize,
    pub ncols: usize,
    pub nnz: usize,
    pub symmetric: bool,
    pub csc: CscMatrix,
    /// Present when the order is within the dense cap.
    pub dense: Option<DenseMatrix>,
}

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

impl MatrixHandle {
    pub fn new(name: impl Into<String>, source: MatrixSource, csc: CscMatrix, symmetric: bool, cap: usize) -> Self {
        let dense = (csc.nrows().max(csc.ncols()) <= cap).then(|| csc.to_dense());
        MatrixHandle {
            name: name.into(),
            source,
            nrows: csc.nrows(),
            ncols: csc.ncols(),
            nnz: csc.nnz(),
            symmetric,
            csc,
            dense,
        }
    }

    /// Dense copy, or an error naming the cap.
    pub fn dense(&self) -> anyhow::Result<&DenseMatrix> {
        self.dense.as_ref().ok_or_else(|| {
            anyhow::anyhow!(
                "{} has order {} above the dense cap; raise {DENSE_CAP_ENV} to allow it",
                self.name,
                self.nrows
            )
        })
    }

    /// Order-independent digest of the entries, for load-stability checks.
    pub fn checksum(&self) -> u64 {
        self.csc.triplets().fold(0xcbf2_9ce4_8422_2325u64, |h, (i, j, v)| {
            let mut h = h;
            for x in [i as u64, j as u64, v.to_bits()] {
                h ^= x;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
            h
        })
    }
}

/// Loads a Matrix Market file; the name is the file stem.
pub fn load_matrix_market(path: &Path) -> Result<MatrixHandle, MmError> {
    let mm = read_matrix_market(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".into());
    Ok(MatrixHandle::new(name, MatrixSource::File(path.to_path_buf()), mm.matrix, mm.symmetric, dense_cap()))
}
