//! Argument parsing and command dispatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schur2_core::are_analysis::{are, are_direction_sweep};
use schur2_core::solvers::{critical_value, shift_solution, unit_direction, SolveOptions, TestDesign};
use schur2_core::verify::{
    chain_shift_pairs, check_rotation_monotonicity, check_schur2_monotonicity, empirical_power, membership_test,
    run_counterexample, CounterexampleConfig, EmpiricalDesign, Population, VerifyOptions,
};
use schur2_core::{GaussianShiftQuery, MeasureEngine, Method, RealVector, SetShape, SetSpec};
use serde::Serialize;
use serde_json::Value;

use crate::executor::RayonExecutor;
use crate::figures;
use crate::output::{Output, Table};
use crate::records::*;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for malformed arguments or invalid parameters.
pub const EXIT_USAGE: i32 = 1;
/// Exit status when a result missed its accuracy target or a check failed.
pub const EXIT_FLAGGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "schur2", version, about = "Gaussian measures of shifted sets and efficiencies of p-mean tests")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, env = "SCHUR2_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Write results to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock time in `wall_ms` (otherwise it is null, which keeps
    /// output reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Dimension.
    #[arg(long)]
    pub k: usize,
    /// Mean exponent; accepts `inf` and `-inf`.
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    /// Test size.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Target power.
    #[arg(long, default_value_t = 0.95)]
    pub beta: f64,
    /// Shift direction as a comma list; rescaled to unit 2-mean.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability that a shifted standard Gaussian lands in a set.
    Measure {
        /// Set in textual form, e.g. `pqball:p=2,q=-0.4,eps=1`.
        #[arg(long)]
        set: String,
        /// Dimension; defaults to the length of the shift.
        #[arg(long)]
        k: Option<usize>,
        /// Shift as a comma list.
        #[arg(long, allow_hyphen_values = true)]
        shift: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Relative error target (default 1e-4, or 1e-2 for Monte Carlo).
        #[arg(long)]
        target: Option<f64>,
        /// Force a method: PRODUCT_1D, CHI_SQUARE, SLICE_QUAD, POLAR2D,
        /// MC_PLAIN or MC_IMPORTANCE.
        #[arg(long)]
        method: Option<String>,
    },
    /// Critical value `c` with `P(⟨Z⟩_p > c) = alpha`.
    Critical {
        #[arg(long)]
        k: usize,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Smallest shift along `u` at which the p-mean test reaches power beta.
    Shift(DesignArgs),
    /// Asymptotic relative efficiency of the p-mean test against the 2-mean
    /// test along `u`.
    Are(DesignArgs),
    /// ARE over planar directions at angles in [0, π/4], k = 2.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.95)]
        beta: f64,
        #[arg(long, default_value_t = 11)]
        n_angles: usize,
    },
    /// Numerical checks of the monotonicity results.
    #[command(subcommand)]
    Verify(Verify),
    /// Plot data: 1 set boundaries, 2 shifted-set measures, 3 ARE against p,
    /// 4 ARE sectors over directions.
    Figures {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        figure: u8,
        /// Rays per panel (figure 1), or directions per octant (figure 4).
        #[arg(long)]
        resolution: Option<usize>,
        /// Number of exponents on the ψ grid (figure 3).
        #[arg(long, default_value_t = 41)]
        n_p: usize,
        /// Dimension for figure 3.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Uniform-ball counterexample with the cube `[−1, 1]^k`.
    Counterexample {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.15)]
        eps: f64,
        /// Monte Carlo samples when k ≥ 3.
        #[arg(long, default_value_t = 1 << 22)]
        samples: u64,
    },
    /// Measures along the arc `r(cos t, sin t)`, t in [0, π/4], k = 2.
    Rotation {
        #[arg(long)]
        set: String,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 9)]
        n_t: usize,
        #[arg(long, default_value_t = 1e-8)]
        target: f64,
    },
    /// Measures along a Muirhead chain of squared shifts.
    Schur2 {
        #[arg(long)]
        set: String,
        #[arg(long)]
        k: usize,
        /// Squared shift profile at the spread end of the chain.
        #[arg(long)]
        from: String,
        /// Squared shift profile at the balanced end, majorized by `from`.
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 1e-8)]
        target: f64,
    },
    /// Simulated size and power of the p-mean test at the solved shift.
    Power {
        #[command(flatten)]
        design: DesignArgs,
        /// Sample size.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
        #[arg(long, value_enum, default_value_t = PopulationArg::Gaussian)]
        population: PopulationArg,
    },
    /// Sampled membership closure against the set's classification.
    Membership {
        #[arg(long)]
        set: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Scale of the sampled points.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PopulationArg {
    Gaussian,
    UniformCube,
}

/// Failure modes of a run, each mapped to an exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] schur2_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Every failure to produce a result is reported as a usage error; a
    /// result that exists but misses its target is reported separately.
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad number `{}`: {e}", t.trim()))))
        .collect()
}

fn parse_vector(s: &str) -> CliResult<RealVector> {
    Ok(RealVector::new(parse_list(s)?)?)
}

fn parse_set(s: &str, k: usize) -> CliResult<SetSpec> {
    Ok(SetSpec::new(s.parse::<SetShape>()?, k)?)
}

fn design(a: &DesignArgs) -> CliResult<TestDesign> {
    let u = unit_direction(&parse_vector(&a.u)?)?;
    Ok(TestDesign::new(a.k, a.p, a.alpha, a.beta, u)?)
}

fn record<T: Serialize>(r: &T, table: Table, flagged: bool) -> CliResult<Output> {
    Ok(Output { json: serde_json::to_value(r)?, table, flagged })
}

fn wrapped<T: Serialize>(report: T, passed: bool, seed: u64, table: Table) -> CliResult<Output> {
    record(&Wrapped { report, passed, seed, wall_ms: None }, table, !passed)
}

fn rows(headers: &[&'static str], values: Vec<crate::output::Cell>) -> Table {
    let mut t = Table::new(headers);
    t.push(values);
    t
}

fn figure_output(figure: u8, table: Table, seed: u64) -> Output {
    let json = serde_json::json!({ "figure": figure, "rows": table.to_json(), "seed": seed, "wall_ms": null });
    Output { json, table, flagged: false }
}

/// Runs one parsed command on `engine`.
pub fn execute(cmd: &Command, engine: &MeasureEngine<'_>, seed: u64) -> CliResult<Output> {
    let solve = SolveOptions { seed, ..SolveOptions::default() };
    match cmd {
        Command::Measure { set, k, shift, sigma, target, method } => {
            let shift = parse_vector(shift)?;
            let k = k.unwrap_or(shift.dim());
            let mut q = GaussianShiftQuery::new(parse_set(set, k)?, shift)?.with_sigma(*sigma)?.with_seed(seed);
            if let Some(t) = target {
                q = q.with_target(*t)?;
            }
            if let Some(m) = method {
                q = q.with_method(m.parse::<Method>()?);
            }
            let m = engine.measure(&q)?;
            let r = MeasureRecord {
                value: m.value,
                abs_error: m.abs_error,
                rel_error: m.rel_error,
                method: m.method,
                nodes: m.samples_or_nodes,
                seed,
                wall_ms: None,
            };
            let table = rows(
                &["value", "abs_error", "rel_error", "method", "nodes", "seed"],
                vec![r.value.into(), r.abs_error.into(), r.rel_error.into(), r.method.as_str().into(), r.nodes.into(), seed.into()],
            );
            record(&r, table, m.flagged)
        }
        Command::Critical { k, p, alpha } => {
            let cv = critical_value(engine, *k, *p, *alpha, &solve)?;
            let r = CriticalRecord {
                k: *k,
                p: *p,
                alpha: *alpha,
                c: cv.c,
                achieved_alpha: cv.achieved_alpha,
                error: cv.error,
                method: cv.method,
                seed,
                wall_ms: None,
            };
            let method = cv.method.map_or("CLOSED_FORM", Method::as_str);
            let table = rows(
                &["k", "p", "alpha", "c", "achieved_alpha", "error", "method"],
                vec![(*k).into(), (*p).into(), (*alpha).into(), cv.c.into(), cv.achieved_alpha.into(), cv.error.into(), method.into()],
            );
            record(&r, table, !cv.error.is_finite())
        }
        Command::Shift(a) => {
            let d = design(a)?;
            let s = shift_solution(engine, &d, &solve)?;
            let r = ShiftRecord {
                k: d.k,
                p: d.p,
                alpha: d.alpha,
                beta: d.beta,
                u: d.u.coords().to_vec(),
                exists: s.exists,
                t: s.t,
                norm: s.norm,
                achieved_power: s.achieved_power,
                solver_error: s.solver_error,
                c: s.critical.c,
                method: s.method,
                seed,
                wall_ms: None,
            };
            let table = rows(
                &["k", "p", "alpha", "beta", "exists", "t", "norm", "achieved_power", "solver_error", "c", "method"],
                vec![
                    d.k.into(),
                    d.p.into(),
                    d.alpha.into(),
                    d.beta.into(),
                    s.exists.into(),
                    s.t.into(),
                    s.norm.into(),
                    s.achieved_power.into(),
                    s.solver_error.into(),
                    s.critical.c.into(),
                    s.method.as_str().into(),
                ],
            );
            record(&r, table, s.exists && !s.solver_error.is_finite())
        }
        Command::Are(a) => {
            let d = design(a)?;
            let res = are(engine, &d, &solve)?;
            let r = AreRecord {
                k: d.k,
                p: d.p,
                alpha: d.alpha,
                beta: d.beta,
                u: d.u.coords().to_vec(),
                are: res.are,
                error: res.error,
                exists: res.exists(),
                s2_norm: res.s2_norm,
                sp_norm: res.sp_norm,
                seed,
                wall_ms: None,
            };
            let table = rows(
                &["k", "p", "alpha", "beta", "are", "abs_error", "s2_norm", "sp_norm", "exists_flag"],
                vec![
                    d.k.into(),
                    d.p.into(),
                    d.alpha.into(),
                    d.beta.into(),
                    res.are.into(),
                    res.error.into(),
                    res.s2_norm.into(),
                    res.sp_norm.into(),
                    res.exists().into(),
                ],
            );
            record(&r, table, !res.error.is_finite())
        }
        Command::Sweep { p, alpha, beta, n_angles } => {
            let sweep = are_direction_sweep(engine, *p, *alpha, *beta, *n_angles, &solve)?;
            let mut table = Table::new(&["angle", "are", "abs_error", "s2_norm", "sp_norm", "exists_flag"]);
            let rows: Vec<SweepRow> = sweep
                .iter()
                .map(|pt| SweepRow {
                    angle: pt.angle,
                    are: pt.result.are,
                    abs_error: pt.result.error,
                    s2_norm: pt.result.s2_norm,
                    sp_norm: pt.result.sp_norm,
                    exists: pt.result.exists(),
                })
                .collect();
            for r in &rows {
                table.push(vec![r.angle.into(), r.are.into(), r.abs_error.into(), r.s2_norm.into(), r.sp_norm.into(), r.exists.into()]);
            }
            let flagged = rows.iter().any(|r| !r.abs_error.is_finite());
            record(&SweepRecord { p: *p, alpha: *alpha, beta: *beta, rows, seed, wall_ms: None }, table, flagged)
        }
        Command::Verify(v) => verify(v, engine, seed, &solve),
        Command::Figures { figure, resolution, n_p, k } => {
            let table = match figure {
                1 => figures::figure1(resolution.unwrap_or(720), 3.0)?,
                2 => figures::figure2(engine, &[1.0, 11.0], 1e-6, seed)?,
                3 => figures::figure3(engine, *k, *n_p, 0.05, 0.95, &solve)?,
                _ => figures::figure4(engine, 2.1, 1.9, resolution.unwrap_or(45), 0.05, 0.95, &solve)?,
            };
            Ok(figure_output(*figure, table, seed))
        }
    }
}

fn verify(v: &Verify, engine: &MeasureEngine<'_>, seed: u64, solve: &SolveOptions) -> CliResult<Output> {
    match v {
        Verify::Counterexample { k, eps, samples } => {
            let cfg = CounterexampleConfig::new(*k, *eps)?;
            let r = run_counterexample(&cfg, engine.executor(), *samples, seed)?;
            let table = rows(
                &["k", "eps", "big_r", "r", "p_x0_exact", "p_x0", "p_x0_error", "p_x1", "p_x1_error", "vertex_gap", "exact", "passed"],
                vec![
                    (*k).into(),
                    (*eps).into(),
                    r.big_r.into(),
                    r.r.into(),
                    r.p_x0_exact.into(),
                    r.p_x0.into(),
                    r.p_x0_error.into(),
                    r.p_x1.into(),
                    r.p_x1_error.into(),
                    r.vertex_gap.into(),
                    r.exact.into(),
                    r.passed.into(),
                ],
            );
            let passed = r.passed;
            wrapped(r, passed, seed, table)
        }
        Verify::Rotation { set, r, n_t, target } => {
            let set = parse_set(set, 2)?;
            let n = (*n_t).max(2);
            let grid: Vec<f64> = (0..n).map(|i| std::f64::consts::FRAC_PI_4 * i as f64 / (n - 1) as f64).collect();
            let rep = check_rotation_monotonicity(engine, &set, *r, &grid, &VerifyOptions { target: *target, seed })?;
            let mut table = Table::new(&["t", "value", "abs_error", "method"]);
            for pt in &rep.points {
                table.push(vec![pt.t.into(), pt.estimate.value.into(), pt.estimate.abs_error.into(), pt.estimate.method.as_str().into()]);
            }
            let passed = rep.passed;
            wrapped(rep, passed, seed, table)
        }
        Verify::Schur2 { set, k, from, to, target } => {
            let set = parse_set(set, *k)?;
            let pairs = chain_shift_pairs(&parse_vector(from)?, &parse_vector(to)?)?;
            let rep = check_schur2_monotonicity(engine, &set, &pairs, &VerifyOptions { target: *target, seed })?;
            let mut table = Table::new(&["theta1", "theta2", "m1", "m2", "gap", "error", "ok"]);
            for c in &rep.checks {
                table.push(vec![
                    c.theta1.to_string().into(),
                    c.theta2.to_string().into(),
                    c.m1.value.into(),
                    c.m2.value.into(),
                    c.gap.into(),
                    c.error.into(),
                    c.ok.into(),
                ]);
            }
            let passed = rep.passed;
            wrapped(rep, passed, seed, table)
        }
        Verify::Power { design: a, n, replications, population } => {
            let d = design(a)?;
            let s = shift_solution(engine, &d, solve)?;
            let population = match population {
                PopulationArg::Gaussian => Population::Gaussian,
                PopulationArg::UniformCube => Population::UniformCube,
            };
            let base = EmpiricalDesign {
                n: *n,
                p: d.p,
                c: s.critical.c,
                population,
                theta: RealVector::zeros(d.k)?,
                replications: *replications,
                seed,
            };
            let size = empirical_power(&base, engine.executor())?;
            let power = match s.t {
                Some(t) => Some(empirical_power(
                    &EmpiricalDesign { theta: d.u.scaled(t / (*n as f64).sqrt()), seed: seed.wrapping_add(1), ..base.clone() },
                    engine.executor(),
                )?),
                None => None,
            };
            let size_ok = (size.rate - d.alpha).abs() <= 3.0 * (d.alpha * (1.0 - d.alpha) / size.replications as f64).sqrt();
            let power_ok = power
                .as_ref()
                .is_some_and(|pw| (pw.rate - d.beta).abs() <= 3.0 * (d.beta * (1.0 - d.beta) / pw.replications as f64).sqrt());
            let r = PowerCheckRecord {
                k: d.k,
                p: d.p,
                alpha: d.alpha,
                beta: d.beta,
                n: *n,
                replications: *replications,
                c: s.critical.c,
                t: s.t,
                size: size.rate,
                size_stderr: size.stderr,
                power: power.as_ref().map_or(f64::NAN, |pw| pw.rate),
                power_stderr: power.as_ref().map_or(f64::NAN, |pw| pw.stderr),
                passed: size_ok && power_ok,
                seed,
                wall_ms: None,
            };
            let table = rows(
                &["k", "p", "n", "replications", "c", "t", "size", "size_stderr", "power", "power_stderr", "passed"],
                vec![
                    r.k.into(),
                    r.p.into(),
                    r.n.into(),
                    r.replications.into(),
                    r.c.into(),
                    r.t.into(),
                    r.size.into(),
                    r.size_stderr.into(),
                    r.power.into(),
                    r.power_stderr.into(),
                    r.passed.into(),
                ],
            );
            record(&r, table, !r.passed)
        }
        Verify::Membership { set, k, trials, scale } => {
            let set = parse_set(set, *k)?;
            let rep = membership_test(&set, *trials, *scale, seed);
            let passed = rep.agrees();
            let table = rows(
                &["set", "k", "verdict", "trials", "convex_violations", "concave_violations", "agrees"],
                vec![
                    set.shape.to_string().into(),
                    (*k).into(),
                    format!("{:?}", rep.character.value).into(),
                    rep.trials.into(),
                    rep.convex_violations.into(),
                    rep.concave_violations.into(),
                    passed.into(),
                ],
            );
            wrapped(rep, passed, seed, table)
        }
    }
}

fn emit(out: &Output, format: Format, w: &mut dyn Write) -> CliResult<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &out.json)?;
            writeln!(w)?;
        }
        Format::Csv => out.table.write_csv(&mut *w)?,
    }
    w.flush()?;
    Ok(())
}

/// Parses `args` (including the program name), runs the command and writes
/// its output. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run_cli(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let g = &cli.global;
    let exec = RayonExecutor::new(g.workers).map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let engine = MeasureEngine::new(&exec);
    let start = Instant::now();
    let mut out = execute(&cli.command, &engine, g.seed)?;
    if g.timing {
        if let Value::Object(map) = &mut out.json {
            map.insert("wall_ms".into(), Value::from(start.elapsed().as_secs_f64() * 1e3));
        }
    }
    match &g.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            emit(&out, g.format, &mut f)?;
        }
        None => emit(&out, g.format, stdout)?,
    }
    Ok(if out.flagged { EXIT_FLAGGED } else { EXIT_OK })
}
