//! Experiment drivers: each turns a parsed command into an
//! [`ExperimentReport`].

use crate::cli::{Cli, Command, HodlrArgs, IrArgs, NystromArgs, SpaiArgs};
use crate::fixtures::{resolve, write_bundled};
use crate::mm::MatrixHandle;
use crate::report::{slug, Cell, ExperimentReport, Table};
use anyhow::{bail, ensure, Context, Result};
use mpbal_core::densela::cond_inf;
use mpbal_core::fpemu::{builtin_formats, FloatFormat};
use mpbal_core::hodlr::{hodlr_matvec, hodlr_reconstruct_error, max_levels, storage_report, HodlrCompressor};
use mpbal_core::ir::{refine, reference_solution, CorrectionSolver, PrecisionTriple, RefineOptions};
use mpbal_core::nystrom::{nystrom_error, nystrom_single_pass, precision_heuristic, spectrum, NystromConfig};
use mpbal_core::random::Gaussian;
use mpbal_core::spai::{a_posteriori_violations, rigorous_terms, spai_build, spai_feasibility, true_residual_norms, SpaiConfig};
use std::time::Instant;

/// Builds the canonical command line and config echo from flag/value pairs.
struct Echo {
    command: String,
    config: Vec<(String, String)>,
}

impl Echo {
    fn new(sub: &str, seed: u64, flags: &[(&str, String)]) -> Self {
        let mut command = format!("mpbal {sub}");
        let mut config = Vec::new();
        for (k, v) in flags {
            command.push_str(&format!(" --{k} {v}"));
            config.push((k.to_string(), v.clone()));
        }
        command.push_str(&format!(" --seed {seed}"));
        config.push(("seed".into(), seed.to_string()));
        Echo { command, config }
    }
}

fn format(name: &str, flag: &str) -> Result<FloatFormat> {
    FloatFormat::by_name(name).with_context(|| {
        let known: Vec<&str> = builtin_formats().iter().map(|f| f.name).collect();
        format!("--{flag} {name:?}: known formats are {}", known.join(", "))
    })
}

fn formats(list: &str, flag: &str) -> Result<Vec<FloatFormat>> {
    let v: Vec<FloatFormat> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| format(s.trim(), flag))
        .collect::<Result<_>>()?;
    ensure!(!v.is_empty(), "--{flag} needs at least one format");
    Ok(v)
}

fn source_config(echo: &mut Echo, m: &MatrixHandle) {
    echo.config.push(("source".into(), m.source.to_string()));
    echo.config.push(("n".into(), m.nrows.to_string()));
    echo.config.push(("nnz".into(), m.nnz.to_string()));
}

/// Dispatches a parsed command.
pub fn run(cli: &Cli) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Formats => run_formats(cli.seed),
        Command::ExpIr(a) => run_ir(a, cli.seed),
        Command::ExpSpai(a) => run_spai(a, cli.seed),
        Command::ExpNystrom(a) => run_nystrom(a, cli.seed),
        Command::ExpHodlr(a) => run_hodlr(a, cli.seed),
        Command::Fixtures => run_fixtures(cli),
    }?;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn report(experiment: &str, matrix: Option<String>, echo: Echo, tables: Vec<Table>, notes: Vec<String>) -> ExperimentReport {
    ExperimentReport {
        experiment: experiment.into(),
        matrix,
        command: echo.command,
        config: echo.config,
        tables,
        notes,
        wall_seconds: 0.0,
    }
}

pub fn run_formats(seed: u64) -> Result<ExperimentReport> {
    let mut t = Table::new(
        "formats",
        &[
            "format",
            "storage_bits",
            "exponent_bits",
            "significand_bits",
            "range_decades",
            "u",
            "unit_roundoff",
            "min_normal",
            "max_finite",
            "tflops",
        ],
    );
    for f in builtin_formats() {
        t.push(vec![
            f.name.into(),
            (f.storage_bits as usize).into(),
            (f.exponent_bits as usize).into(),
            (f.significand_bits as usize).into(),
            (f.range_decades() as i64).into(),
            format!("{:.0e}", f.unit_roundoff()).into(),
            f.unit_roundoff().into(),
            f.min_normal().into(),
            f.max_finite().into(),
            (f.tflops as usize).into(),
        ]);
    }
    Ok(report("formats", None, Echo::new("formats", seed, &[]), vec![t], vec![]))
}

fn rhs(kind: &str, n: usize, seed: u64) -> Result<Vec<f64>> {
    match kind {
        "ones" => Ok(vec![1.0; n]),
        "random" => Ok(Gaussian::new(seed).vector(n)),
        other => bail!("--rhs {other:?}: expected 'ones' or 'random'"),
    }
}

pub fn run_ir(args: &IrArgs, seed: u64) -> Result<ExperimentReport> {
    let m = resolve(&args.matrix)?;
    ensure!(m.nrows == m.ncols, "{} is {}x{}; refinement needs a square matrix", m.name, m.nrows, m.ncols);
    let triple = PrecisionTriple::new(format(&args.uf, "uf")?, format(&args.u, "u")?, format(&args.ur, "ur")?)
        .context("precisions must satisfy ur <= u <= uf in unit roundoff")?;
    ensure!(args.tol > 0.0 && args.tol < 1.0, "--tol must lie in (0, 1)");
    let spai_cfg = SpaiConfig {
        tau: args.tau,
        ..SpaiConfig::default()
    };
    spai_cfg.validate().context("--tau")?;
    let solvers: Vec<CorrectionSolver> = args
        .solvers
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim() {
            "lu" => Ok(CorrectionSolver::LuDirect),
            "gmres-lu" => Ok(CorrectionSolver::GmresLu {
                tol: args.tol,
                ordering: !args.natural,
            }),
            "gmres-spai" => Ok(CorrectionSolver::GmresSpai {
                tol: args.tol,
                cfg: spai_cfg,
            }),
            other => bail!("--solvers: unknown solver {other:?} (lu, gmres-lu, gmres-spai)"),
        })
        .collect::<Result<_>>()?;
    ensure!(!solvers.is_empty(), "--solvers needs at least one solver");

    let b = rhs(&args.rhs, m.nrows, seed)?;
    let x_ref = reference_solution(&m.csc, &b).context("fp64 reference solve")?;
    let kappa = match &m.dense {
        Some(d) => cond_inf(d).unwrap_or(f64::INFINITY),
        None => f64::NAN,
    };
    let opts = RefineOptions {
        maxit: args.maxit,
        gmres_maxit: None,
    };

    let stem = slug(&m.name);
    let mut steps = Table::new(format!("ir_{stem}"), &["solver", "step", "ferr", "nbe", "cbe", "gmres_iters"]);
    let mut summary = Table::new(
        format!("ir_{stem}_summary"),
        &["solver", "status", "steps", "gmres_iters_total", "precond_nnz", "ferr", "nbe", "cbe", "kappa_inf"],
    );
    for s in &solvers {
        let (_, trace) = refine(&m.csc, &b, triple, s, opts, Some(&x_ref)).with_context(|| format!("{} refinement", s.name()))?;
        for st in &trace.steps {
            steps.push(vec![
                s.name().into(),
                st.step.into(),
                st.ferr.into(),
                st.nbe.into(),
                st.cbe.into(),
                st.inner_iterations.into(),
            ]);
        }
        let last = trace.last();
        summary.push(vec![
            s.name().into(),
            format!("{:?}", trace.status).to_lowercase().into(),
            trace.step_count().into(),
            trace.total_inner_iterations().into(),
            trace.preconditioner_nnz.into(),
            last.ferr.into(),
            last.nbe.into(),
            last.cbe.into(),
            kappa.into(),
        ]);
    }

    let mut echo = Echo::new(
        "exp-ir",
        seed,
        &[
            ("matrix", args.matrix.clone()),
            ("uf", triple.u_f.name.into()),
            ("u", triple.u.name.into()),
            ("ur", triple.u_r.name.into()),
            ("solvers", solvers.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")),
            ("tol", format!("{:e}", args.tol)),
            ("tau", format!("{:e}", args.tau)),
            ("maxit", args.maxit.to_string()),
            ("rhs", args.rhs.clone()),
        ],
    );
    if args.natural {
        echo.command.insert_str(echo.command.rfind(" --seed").unwrap(), " --natural");
        echo.config.push(("ordering".into(), "natural".into()));
    } else {
        echo.config.push(("ordering".into(), "minimum-degree".into()));
    }
    source_config(&mut echo, &m);
    Ok(report("exp-ir", Some(m.name.clone()), echo, vec![steps, summary], vec![]))
}

pub fn run_spai(args: &SpaiArgs, seed: u64) -> Result<ExperimentReport> {
    let m = resolve(&args.matrix)?;
    ensure!(m.nrows == m.ncols, "{} is not square", m.name);
    let u_s = format(&args.us, "us")?;
    let cfg = SpaiConfig {
        tau: args.tau,
        u_s,
        max_pattern_growth_steps: args.growth_steps,
        candidates_per_step: args.candidates,
        max_nnz_per_column: args.max_nnz,
    };
    cfg.validate().context("SPAI configuration")?;
    let res = spai_build(&m.csc, cfg).context("building the sparse approximate inverse")?;
    let true_res = true_residual_norms(&m.csc, &res.m);
    let rig = rigorous_terms(&m.csc, &res.m, u_s);
    let violations = a_posteriori_violations(&m.csc, &res, args.tau, u_s);
    let feas = spai_feasibility(&m.csc, u_s, args.tau, Some(&res.m)).context("feasibility check")?;

    let stem = slug(&m.name);
    let mut cols = Table::new(
        format!("spai_{stem}"),
        &["column", "nnz", "residual_us", "residual_fp64", "rigorous_term", "success", "growth_steps", "failure", "violation"],
    );
    for c in &res.columns {
        cols.push(vec![
            c.index.into(),
            c.rows.len().into(),
            c.residual_norm.into(),
            true_res[c.index].into(),
            rig[c.index].into(),
            c.success.into(),
            c.growth_steps.into(),
            c.failure.map(|f| format!("{f:?}").to_lowercase()).unwrap_or_default().into(),
            violations.contains(&c.index).into(),
        ]);
    }
    let successes = res.columns.iter().filter(|c| c.success).count();
    let mut summary = Table::new(
        format!("spai_{stem}_summary"),
        &["n", "nnz", "successes", "violations", "cond2_abs", "heuristic_value", "heuristic_ok", "max_rigorous_term"],
    );
    summary.push(vec![
        m.nrows.into(),
        res.nnz().into(),
        successes.into(),
        violations.len().into(),
        feas.cond2_abs.into(),
        feas.heuristic_value.into(),
        feas.heuristic_ok.into(),
        feas.rigorous_lhs.unwrap_or(f64::NAN).into(),
    ]);
    let mut echo = Echo::new(
        "exp-spai",
        seed,
        &[
            ("matrix", args.matrix.clone()),
            ("us", u_s.name.into()),
            ("tau", format!("{:e}", args.tau)),
            ("max-nnz", args.max_nnz.to_string()),
            ("growth-steps", args.growth_steps.to_string()),
            ("candidates", args.candidates.to_string()),
        ],
    );
    source_config(&mut echo, &m);
    Ok(report("exp-spai", Some(m.name.clone()), echo, vec![cols, summary], vec![]))
}

/// Ranks `kmin, kmin + kstep, ...` up to `kmax`.
pub fn rank_grid(kmin: usize, kmax: usize, kstep: usize) -> Vec<usize> {
    (kmin..=kmax).step_by(kstep.max(1)).collect()
}

pub fn run_nystrom(args: &NystromArgs, seed: u64) -> Result<ExperimentReport> {
    let m = resolve(&args.matrix)?;
    let a = m.dense()?;
    ensure!(a.is_symmetric(0.0), "{} is not symmetric; the Nyström method needs a symmetric PSD matrix", m.name);
    let precisions = formats(&args.precisions, "precisions")?;
    let working = format(&args.working, "working")?;
    ensure!(args.kstep > 0, "--kstep must be positive");
    ensure!(args.runs > 0, "--runs must be positive");
    let kmin = args.kmin.unwrap_or(args.kstep);
    ensure!(kmin >= 1 && kmin <= args.kmax, "--kmin must lie in 1..=kmax");
    ensure!(args.kmax <= m.nrows, "--kmax {} exceeds the order {}", args.kmax, m.nrows);
    let grid = rank_grid(kmin, args.kmax, args.kstep);

    let stem = slug(&m.name);
    let mut errors = Table::new(format!("nystrom_{stem}"), &["k", "precision", "mean_error", "relative_error", "max_shift_retries"]);
    let a_fro = a.norm_fro();
    // curve[p][i]: mean error of precision p at grid[i].
    let mut curve = vec![Vec::with_capacity(grid.len()); precisions.len()];
    for &k in &grid {
        for (p, &u_p) in precisions.iter().enumerate() {
            let mut total = 0.0;
            let mut retries = 0;
            for r in 0..args.runs {
                let cfg = NystromConfig::new(k, u_p, working, seed.wrapping_add(r as u64));
                let res = nystrom_single_pass(a, &cfg).with_context(|| format!("k={k}, sketch precision {}", u_p.name))?;
                retries = retries.max(res.shift_retries);
                total += nystrom_error(a, &res);
            }
            let mean = total / args.runs as f64;
            curve[p].push(mean);
            errors.push(vec![k.into(), u_p.name.into(), mean.into(), (mean / a_fro).into(), retries.into()]);
        }
    }

    let eig = spectrum(a).context("fp64 spectrum")?;
    let mut spec = Table::new(format!("nystrom_{stem}_spectrum"), &["index", "eigenvalue"]);
    for (i, &l) in eig.iter().enumerate() {
        spec.push(vec![(i + 1).into(), l.into()]);
    }
    // Departure: first tested k where the error exceeds the working-precision
    // sketch's error tenfold.
    let base = precisions.iter().position(|f| *f == working);
    let mut heur = Table::new(
        format!("nystrom_{stem}_thresholds"),
        &["precision", "unit_roundoff", "heuristic_k", "departure_k", "max_ratio_to_working"],
    );
    let mut notes = Vec::new();
    for (p, &u_p) in precisions.iter().enumerate() {
        let hk = precision_heuristic(&eig, m.nrows, u_p);
        let (dep, max_ratio) = match base {
            Some(b) => {
                let ratios: Vec<f64> = curve[p].iter().zip(&curve[b]).map(|(e, e0)| e / e0).collect();
                let dep = ratios.iter().position(|&r| r > 10.0).map(|i| grid[i]);
                (dep, ratios.into_iter().fold(0.0, f64::max))
            }
            None => (None, f64::NAN),
        };
        heur.push(vec![
            u_p.name.into(),
            u_p.unit_roundoff().into(),
            hk.into(),
            dep.map(Cell::from).unwrap_or(Cell::Text(String::new())),
            max_ratio.into(),
        ]);
        notes.push(format!(
            "{}: heuristic k <= {hk}, departs (>10x) at {}",
            u_p.name,
            dep.map(|d| format!("k = {d}")).unwrap_or_else(|| "no tested k".into())
        ));
    }

    let mut flags = vec![("matrix", args.matrix.clone())];
    if let Some(k) = args.kmin {
        flags.push(("kmin", k.to_string()));
    }
    flags.extend([
        ("kmax", args.kmax.to_string()),
        ("kstep", args.kstep.to_string()),
        ("precisions", precisions.iter().map(|f| f.name).collect::<Vec<_>>().join(",")),
        ("working", working.name.to_string()),
        ("runs", args.runs.to_string()),
    ]);
    let mut echo = Echo::new("exp-nystrom", seed, &flags);
    source_config(&mut echo, &m);
    Ok(report("exp-nystrom", Some(m.name.clone()), echo, vec![errors, heur, spec], notes))
}

/// Coarsest built-in format with `u <= eps / n`.
pub fn matvec_format(eps: f64, n: usize) -> FloatFormat {
    builtin_formats()
        .into_iter()
        .filter(|f| f.unit_roundoff() <= eps / n as f64)
        .max_by(|a, b| a.unit_roundoff().total_cmp(&b.unit_roundoff()))
        .unwrap_or(mpbal_core::fpemu::FP64)
}

fn parse_eps(list: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("--eps: {s:?} is not a number")))
        .collect::<Result<_>>()?;
    ensure!(!v.is_empty(), "--eps needs at least one value");
    ensure!(v.iter().all(|&e| e > 0.0 && e < 1.0), "--eps values must lie in (0, 1)");
    Ok(v)
}

pub fn run_hodlr(args: &HodlrArgs, seed: u64) -> Result<ExperimentReport> {
    let eps = parse_eps(&args.eps)?;
    let menu = formats(&args.menu, "menu")?;
    ensure!(args.levels >= 1, "--levels must be at least 1");
    let names: Vec<&str> = args.matrix.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    ensure!(!names.is_empty(), "--matrix needs at least one matrix");

    let mut storage = Table::new(
        "hodlr",
        &[
            "matrix",
            "n",
            "levels",
            "eps",
            "bits_adaptive",
            "bits_uniform",
            "savings_ratio",
            "error",
            "bound",
            "max_rank",
            "promoted_blocks",
            "level_formats",
        ],
    );
    let mut matvec = Table::new("hodlr_matvec", &["matrix", "eps", "trial", "work_format", "backward_error_estimate"]);
    let mut sources = Vec::new();
    for name in &names {
        let m = resolve(name)?;
        ensure!(m.nrows == m.ncols, "{} is not square", m.name);
        let a = m.dense()?;
        let levels = args.levels.min(max_levels(m.nrows));
        ensure!(levels >= 1, "{} is too small for a HODLR tree", m.name);
        let mut comp = HodlrCompressor::new(a).with_context(|| format!("compressing {}", m.name))?;
        for &e in &eps {
            let h = comp.build(levels, e, &menu).with_context(|| format!("{} at eps={e:e}", m.name))?;
            let s = storage_report(&h);
            let err = hodlr_reconstruct_error(a, &h)?;
            let max_rank = (1..=levels).map(|l| h.max_rank(l)).max().unwrap_or(0);
            storage.push(vec![
                m.name.clone().into(),
                m.nrows.into(),
                levels.into(),
                e.into(),
                s.bits_adaptive.into(),
                s.bits_uniform_double.into(),
                s.savings_ratio.into(),
                err.error.into(),
                err.bound.into(),
                max_rank.into(),
                h.promoted_blocks().into(),
                s.level_formats.iter().map(|f| f.name).collect::<Vec<_>>().join(";").into(),
            ]);
            if args.matvec_trials > 0 && m.nrows <= 512 {
                let wf = matvec_format(e, m.nrows);
                for t in 0..args.matvec_trials {
                    let x = Gaussian::new(seed.wrapping_add(t as u64)).vector(m.nrows);
                    let r = hodlr_matvec(&h, &x, wf)?;
                    matvec.push(vec![m.name.clone().into(), e.into(), t.into(), wf.name.into(), r.backward_error_estimate.into()]);
                }
            }
        }
        sources.push(m.source.to_string());
    }
    let mut echo = Echo::new(
        "exp-hodlr",
        seed,
        &[
            ("matrix", names.join(",")),
            ("levels", args.levels.to_string()),
            ("eps", eps.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>().join(",")),
            ("menu", menu.iter().map(|f| f.name).collect::<Vec<_>>().join(",")),
            ("matvec-trials", args.matvec_trials.to_string()),
        ],
    );
    echo.config.push(("source".into(), sources.join(";")));
    let mut tables = vec![storage];
    if !matvec.rows.is_empty() {
        tables.push(matvec);
    }
    Ok(report("exp-hodlr", Some(names.join(",")), echo, tables, vec![]))
}

fn run_fixtures(cli: &Cli) -> Result<ExperimentReport> {
    let paths = write_bundled(&cli.out)?;
    let notes = paths.iter().map(|p| format!("wrote {}", p.display())).collect();
    Ok(report("fixtures", None, Echo::new("fixtures", cli.seed, &[]), vec![], notes))
}
