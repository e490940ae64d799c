use mpbal::fixtures::{generate, resolve, BUNDLED};
use mpbal::mm::{format_matrix_market, load_matrix_market, parse_matrix_market, MatrixSource};
use mpbal_core::CscMatrix;
use proptest::prelude::*;
use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(format!("{name}.mtx"))
}

fn mpbal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpbal"))
}

#[test]
fn bundled_files_match_their_generators() {
    for name in BUNDLED {
        let h = load_matrix_market(&data(name)).unwrap();
        let (a, sym) = generate(name).unwrap();
        assert_eq!(h.csc, a, "{name}");
        assert_eq!(h.symmetric, sym, "{name}");
        assert_eq!(h.source, MatrixSource::File(data(name)));
        assert!(h.dense.is_some());
    }
}

#[test]
fn steam1_loads_stably() {
    let a = resolve("steam1").unwrap();
    let b = resolve("steam1").unwrap();
    assert_eq!((a.nrows, a.ncols), (240, 240));
    assert_eq!(a.checksum(), b.checksum());
    assert_eq!(a.nnz, b.nnz);
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite nonzero", |v| v.is_finite() && *v != 0.0), -10.0..10.0f64]
}

/// Distinct positions, so no summation can overflow.
fn dedup(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_by_key(|e| (e.0, e.1));
    t.dedup_by_key(|e| (e.0, e.1));
    t.retain(|e| e.2 != 0.0);
    t
}

fn csc_strategy() -> impl Strategy<Value = CscMatrix> {
    (1usize..12, 1usize..12).prop_flat_map(|(m, n)| {
        prop::collection::vec((0..m, 0..n, value()), 0..40)
            .prop_map(move |t| CscMatrix::from_triplets(m, n, dedup(t)).unwrap())
    })
}

fn symmetric_strategy() -> impl Strategy<Value = CscMatrix> {
    (1usize..12).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, value()), 0..40).prop_map(move |t| {
            let lower = dedup(t.into_iter().map(|(i, j, v)| (i.max(j), i.min(j), v)).collect());
            let upper: Vec<_> = lower.iter().filter(|e| e.0 != e.1).map(|&(i, j, v)| (j, i, v)).collect();
            CscMatrix::from_triplets(n, n, lower.into_iter().chain(upper)).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn write_then_read_is_identity(a in csc_strategy()) {
        let back = parse_matrix_market(&format_matrix_market(&a, false)).unwrap();
        prop_assert_eq!(back.matrix, a);
    }

    #[test]
    fn symmetric_write_then_read_is_identity(s in symmetric_strategy()) {
        prop_assert!(s.is_symmetric());
        let back = parse_matrix_market(&format_matrix_market(&s, true)).unwrap();
        prop_assert!(back.symmetric);
        prop_assert_eq!(back.matrix, s);
    }
}

#[test]
fn formats_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpbal().args(["formats", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fp8-e4m3"));
    assert!(dir.path().join("formats.csv").is_file());
}

#[test]
fn unknown_flag_prints_usage_and_fails() {
    let out = mpbal().args(["exp-ir", "--no-such-flag"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn invalid_config_is_reported() {
    let out = mpbal().args(["exp-ir", "--uf", "fp12", "--out", "/nonexistent-dir-unused"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("known formats"));
    let out = mpbal().args(["exp-ir", "--uf", "fp64", "--u", "fp16"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn dense_cap_is_honoured() {
    let out = mpbal()
        .env("MPBAL_DENSE_CAP", "50")
        .args(["exp-nystrom", "--matrix"])
        .arg(data("lap2d_8"))
        .args(["--kmax", "8", "--kstep", "4", "--runs", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("MPBAL_DENSE_CAP"));
}

fn run_into(dir: &Path, args: &[&str]) -> Vec<(String, Vec<u8>)> {
    let out = mpbal().args(args).arg("--out").arg(dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_and_header_commands_reproduce_csvs() {
    let lap = data("lap2d_8");
    let lap = lap.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["exp-ir", "--matrix", "convdiff_10", "--solvers", "lu,gmres-lu,gmres-spai", "--rhs", "random", "--seed", "3"],
        vec!["exp-nystrom", "--matrix", lap, "--kmax", "16", "--kstep", "8", "--runs", "2", "--seed", "7"],
        vec!["exp-hodlr", "--matrix", "ring_bus_96", "--levels", "3", "--matvec-trials", "2"],
    ];
    for args in cases {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let first = run_into(d1.path(), &args);
        assert!(!first.is_empty());
        assert_eq!(first, run_into(d2.path(), &args), "{args:?}");

        let text = String::from_utf8(first[0].1.clone()).unwrap();
        assert!(text.starts_with("# schema=v1\n"));
        let command = text.lines().find_map(|l| l.strip_prefix("# command=mpbal ")).unwrap();
        let replay: Vec<&str> = command.split(' ').collect();
        let d3 = tempfile::tempdir().unwrap();
        assert_eq!(first, run_into(d3.path(), &replay), "{command}");
    }
}
