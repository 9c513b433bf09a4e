//! `lmmss-bench`: benchmark harness for the LMMSS solver.
//!
//! Subcommands: `run` (solve a built-in problem and emit iterate CSV plus
//! a summary report), `reproduce` (preconfigured reference-table and
//! figure scenarios with embedded comparison data and a `VERDICT:` line),
//! and `probe` (empirical assumption checks).
//!
//! Exit codes for `run`: 0 converged, 2 max-iters, 3 linesearch-failure,
//! 4 configuration error. `reproduce` exits 0 on a pass verdict, 1 on
//! fail. `probe` exits 0 unless evaluation fails (4 on config errors).

mod config;
mod output;
mod probe;
mod reproduce;

use clap::{Args, Parser, Subcommand};
use config::{parse_bool, parse_f64, parse_grid, parse_matrix_rows, parse_usize, parse_vector, pick, ConfigFile};
use lmmss::problem::{builtin_problem, ScalingKind, ScalingSpec};
use lmmss::solver::{solve, Mode, SolverConfig};
use lmmss::{Matrix, Vector};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lmmss-bench", version, about = "Levenberg-Marquardt with singular scaling: benchmark runs, reference reproductions, assumption probes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a built-in problem; writes iterate CSV and a summary report
    Run(RunArgs),
    /// Rebuild a reference table or figure dataset and compare against
    /// embedded reference values (table1|table2|table3|fig1|fig2)
    Reproduce(ReproduceArgs),
    /// Empirically probe the convergence assumptions
    /// (error-bound|lipschitz|linearization|completeness)
    Probe(ProbeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// INI-style config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in problem name: ex1, ex2 or ex3
    #[arg(long)]
    problem: Option<String>,
    /// Iteration mode: pure, globalized or classic-lm
    #[arg(long)]
    mode: Option<String>,
    /// Starting point, comma-separated (default: the problem's first
    /// suggested start)
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Scaling matrix: identity, builtin, or rows like "-1,1" (rows
    /// separated by ';')
    #[arg(long, allow_hyphen_values = true)]
    scaling: Option<String>,
    /// Stationarity tolerance on the gradient norm
    #[arg(long)]
    grad_tol: Option<String>,
    /// Damping exponent r in (0,1]: lambda = ||grad||^r
    #[arg(long)]
    lambda_exponent: Option<String>,
    /// Armijo slope fraction in (0,1)
    #[arg(long)]
    nu: Option<String>,
    /// Backtracking factor in (0,1)
    #[arg(long)]
    zeta: Option<String>,
    /// Full-step gradient-decrease factor in (0,1)
    #[arg(long)]
    vartheta: Option<String>,
    /// Gradient-relatedness angle parameter in (0,1)
    #[arg(long)]
    theta: Option<String>,
    /// Safeguard direction-norm cap M
    #[arg(long)]
    m_cap: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    max_backtracks: Option<String>,
    /// Disable the safeguard substitution step
    #[arg(long)]
    no_safeguard: bool,
    /// Iterate CSV output path
    #[arg(long, default_value = "run.csv")]
    csv: PathBuf,
    /// Summary report output path
    #[arg(long, default_value = "run_report.txt")]
    report: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Target: table1, table2, table3, fig1 or fig2
    target: String,
    /// Directory for the emitted artifacts
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    /// Built-in problem name: ex1, ex2 or ex3
    #[arg(long, default_value = "ex1")]
    problem: String,
    /// Probe: error-bound, lipschitz, linearization or completeness
    #[arg(long)]
    what: String,
    /// Region center, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    /// Region radius
    #[arg(long, default_value = "0.5")]
    radius: f64,
    /// Sample count
    #[arg(long, default_value = "200")]
    samples: usize,
    /// RNG seed (recorded in the report)
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Grid for the completeness scan, lo:hi:step
    #[arg(long, default_value = "-3:3:0.05", allow_hyphen_values = true)]
    grid: String,
    /// Scaling matrix override: identity, builtin, or explicit rows
    #[arg(long, allow_hyphen_values = true)]
    scaling: Option<String>,
    /// Directory for the emitted artifacts
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    // usage errors are configuration errors (exit 4); clap's default of
    // 2 would collide with the max-iters run status
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.cmd {
        Cmd::Run(args) => cmd_run(&args),
        Cmd::Reproduce(args) => cmd_reproduce(&args),
        Cmd::Probe(args) => cmd_probe(&args),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err((c, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(c as u8)
        }
    }
}

fn parse_scaling(raw: &str, n: usize, builtin: &ScalingSpec) -> Result<ScalingSpec, String> {
    match raw {
        "identity" => Ok(ScalingSpec::identity(n)),
        "builtin" => Ok(builtin.clone()),
        rows => {
            let rows = parse_matrix_rows("scaling", rows)?;
            if rows[0].len() != n {
                return Err(format!(
                    "scaling: {} columns, problem has {} variables",
                    rows[0].len(),
                    n
                ));
            }
            let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
            let m = Matrix::from_row_slice(rows.len(), rows[0].len(), &flat);
            ScalingSpec::new(m, ScalingKind::Custom).map_err(|e| e.to_string())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32, (i32, String)> {
    let bad = |msg: String| (4, msg);
    let file = match &args.config {
        Some(path) => ConfigFile::load(path).map_err(bad)?,
        None => ConfigFile::default(),
    };
    let get = |key: &str| file.get(key).map(str::to_string);

    let problem_name =
        pick(&args.problem, get("problem")).unwrap_or_else(|| "ex1".to_string());
    let (problem, builtin_l, starts) =
        builtin_problem(&problem_name).map_err(|e| bad(e.to_string()))?;
    let n = 2;

    let mode = match pick(&args.mode, get("mode")).as_deref().unwrap_or("globalized") {
        "pure" => Mode::Pure,
        "globalized" => Mode::Globalized,
        "classic-lm" => Mode::ClassicLm,
        other => return Err(bad(format!("unknown mode `{other}`"))),
    };

    let x0 = match pick(&args.x0, get("x0")) {
        Some(raw) => {
            let v = parse_vector("x0", &raw).map_err(bad)?;
            if v.len() != n {
                return Err(bad(format!("x0 has {} entries, problem needs {n}", v.len())));
            }
            Vector::from_column_slice(&v)
        }
        None => starts[0].clone(),
    };

    let l = match pick(&args.scaling, get("scaling")) {
        Some(raw) => parse_scaling(&raw, n, &builtin_l).map_err(bad)?,
        None => builtin_l,
    };

    let mut config = SolverConfig { mode, ..Default::default() };
    macro_rules! num_field {
        ($field:ident, $parse:ident) => {
            if let Some(raw) = pick(&args.$field, get(stringify!($field))) {
                config.$field = $parse(stringify!($field), &raw).map_err(bad)?;
            }
        };
    }
    num_field!(grad_tol, parse_f64);
    num_field!(lambda_exponent, parse_f64);
    num_field!(nu, parse_f64);
    num_field!(zeta, parse_f64);
    num_field!(vartheta, parse_f64);
    num_field!(theta, parse_f64);
    num_field!(m_cap, parse_f64);
    num_field!(max_iters, parse_usize);
    num_field!(max_backtracks, parse_usize);
    if args.no_safeguard {
        config.safeguard_enabled = false;
    } else if let Some(raw) = get("safeguard") {
        config.safeguard_enabled = parse_bool("safeguard", &raw).map_err(bad)?;
    }
    config.validate().map_err(|e| bad(e.to_string()))?;

    let trace = solve(&problem, &l, &x0, &config).map_err(|e| (1, e.to_string()))?;

    write_file(&args.csv, &output::trace_csv(&trace))?;
    let report = output::run_report(&trace, &problem);
    write_file(&args.report, &report)?;
    print!("{report}");
    Ok(output::status_exit_code(trace.status))
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<i32, (i32, String)> {
    let target = reproduce::Target::parse(&args.target)
        .ok_or_else(|| (4, format!("unknown reproduce target `{}`", args.target)))?;
    ensure_dir(&args.out_dir)?;
    let (report, pass) =
        reproduce::run_target(target, &args.out_dir).map_err(|e| (1, e))?;
    print!("{report}");
    Ok(if pass { 0 } else { 1 })
}

fn cmd_probe(args: &ProbeArgs) -> Result<i32, (i32, String)> {
    let center = match &args.center {
        Some(raw) => Some(parse_vector("center", raw).map_err(|e| (4, e))?),
        None => None,
    };
    let grid = parse_grid("grid", &args.grid).map_err(|e| (4, e))?;
    let scaling = match args.scaling.as_deref() {
        Some(raw) => {
            let (_, builtin_l, _) =
                builtin_problem(&args.problem).map_err(|e| (4, e.to_string()))?;
            Some(parse_scaling(raw, 2, &builtin_l).map_err(|e| (4, e))?)
        }
        None => None,
    };
    let req = probe::ProbeRequest {
        problem: args.problem.clone(),
        what: args.what.clone(),
        center,
        radius: args.radius,
        samples: args.samples,
        seed: args.seed,
        grid,
        scaling,
    };
    ensure_dir(&args.out_dir)?;
    let report = probe::run_probe(&req, &args.out_dir)?;
    print!("{report}");
    Ok(0)
}

fn write_file(path: &Path, content: &str) -> Result<(), (i32, String)> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| (1, format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, content).map_err(|e| (1, format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), (i32, String)> {
    std::fs::create_dir_all(dir)
        .map_err(|e| (1, format!("cannot create {}: {e}", dir.display())))
}
