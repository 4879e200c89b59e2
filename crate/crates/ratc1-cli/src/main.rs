//! Command-line driver: builds the approximants, measures grid errors,
//! fits convergence rates, and runs the verification suite.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Parser, Subcommand};

use ratc1::acceptance::{run_all, AcceptanceConfig};
use ratc1::bspline::{fit_spline, FitOptions, TensorSpline};
use ratc1::harness::{fit_rate, AbscissaMode, GridSpec, TargetFunction};
use ratc1::newman::{requ, requ_prime, NewmanBasis};
use ratc1::ratnet::{build_spline_net, BuildConfig, RationalNetwork};
use ratc1::symreg::{build_cancellation_net, convergence_scan, BaseActivation, CancellationConfig};

#[derive(Parser)]
#[command(
    name = "ratc1",
    about = "Rational approximation of ReQU spline networks with C1 error measurement",
    version
)]
struct Cli {
    /// Optional key=value config file supplying defaults (threads, grid).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newman approximant error table over a list of degree parameters.
    NewmanTable {
        /// Comma-separated degree parameters, e.g. 4,9,16,25.
        #[arg(long = "n-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Uniform grid size (node points are adjoined automatically).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a tensor-product spline to a registry target.
    SplineFit {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        beta: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a serialized spline on a uniform grid.
    SplineEval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the constructive rational network for a registry target.
    NetBuild {
        #[arg(long)]
        beta: f64,
        #[arg(long = "N")]
        n: usize,
        /// Activation degree parameter; defaults to round(N^epsilon) with
        /// epsilon = 1.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a serialized network against a reference target.
    NetEval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "ref")]
        reference: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a convergence slope to two columns of a CSV file.
    Rates {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Abscissa mode: "loglog" or "sqrt".
        #[arg(long)]
        mode: String,
    },
    /// Cancellation-network convergence scan.
    SymregDemo {
        /// Comma-separated activation names, e.g. exp1,atan2.
        #[arg(long, value_delimiter = ',')]
        activations: Vec<String>,
        #[arg(long = "fn")]
        function: String,
        /// Comma-separated resolution schedule, e.g. 4,8,16,32.
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full verification suite; exits nonzero on any failure.
    Selftest {
        /// Smaller grids, identical tolerances.
        #[arg(long, default_value_t = false)]
        quick: bool,
    },
}

fn read_config(path: &Option<PathBuf>) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                bail!("config line without '=': {line:?}");
            }
        }
    }
    Ok(map)
}

/// Thread cap: RATC1_THREADS wins over the config file's `threads`.
fn setup_threads(config: &HashMap<String, String>) -> Result<()> {
    let from_env = std::env::var("RATC1_THREADS").ok();
    let threads = match from_env.or_else(|| config.get("threads").cloned()) {
        Some(t) => t.parse::<usize>().context("parsing thread cap")?,
        None => return Ok(()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("building thread pool")?;
    Ok(())
}

fn grid_default(
    flag: Option<usize>,
    config: &HashMap<String, String>,
    fallback: usize,
) -> Result<usize> {
    if let Some(g) = flag {
        return Ok(g);
    }
    if let Some(g) = config.get("grid") {
        return Ok(g.parse().context("parsing grid from config")?);
    }
    Ok(fallback)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = read_config(&cli.config)?;
    setup_threads(&config)?;
    match cli.command {
        Command::NewmanTable { n_list, grid, out } => {
            let grid = grid_default(grid, &config, 100_000)?;
            newman_table(&n_list, grid, &out)?;
        }
        Command::SplineFit {
            function,
            beta,
            n,
            d,
            out,
        } => {
            let target = TargetFunction::lookup(&function, d)?;
            let q = beta.floor() as usize;
            let spline = fit_spline(
                &|x: &[f64]| target.value(x),
                q,
                n,
                d,
                target.p,
                &FitOptions::default(),
            )?;
            write_text(&out, &serde_json::to_string_pretty(&spline.to_json())?)?;
            println!("wrote spline (q={q}, N={n}, d={d}) to {}", out.display());
        }
        Command::SplineEval { input, grid, out } => {
            let grid = grid_default(grid, &config, 1_000)?;
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let spline = TensorSpline::from_json(&serde_json::from_str(&text)?)?;
            spline_eval(&spline, grid, &out)?;
        }
        Command::NetBuild {
            beta,
            n,
            m,
            d,
            function,
            oracle,
            out,
        } => {
            let target = TargetFunction::lookup(&function, d)?;
            let q = beta.floor() as usize;
            let spline = fit_spline(
                &|x: &[f64]| target.value(x),
                q,
                n,
                d,
                target.p,
                &FitOptions::default(),
            )?;
            let mut build = BuildConfig::new(beta, n, d, target.p)?;
            if let Some(m) = m {
                build = build.with_activation_degree(m);
            }
            let net = build_spline_net(&build, &spline, oracle)?;
            write_text(&out, &serde_json::to_string_pretty(&net.to_json())?)?;
            let report = net.degree_report();
            println!(
                "wrote network (depth {}, width {}, max degree {}) to {}",
                report.depth,
                report.width,
                report.max_degree_bound,
                out.display()
            );
        }
        Command::NetEval {
            input,
            grid,
            reference,
            out,
        } => {
            let grid = grid_default(grid, &config, 10_000)?;
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let net = RationalNetwork::from_json(&serde_json::from_str(&text)?)?;
            let target = TargetFunction::lookup(&reference, net.input_dim())?;
            net_eval(&net, &target, grid, &out)?;
        }
        Command::Rates { input, x, y, mode } => {
            let mode = match mode.as_str() {
                "loglog" => AbscissaMode::LogLog,
                "sqrt" => AbscissaMode::SqrtAbscissa,
                other => bail!("unknown mode {other:?} (use loglog or sqrt)"),
            };
            let series = read_csv_columns(&input, &x, &y)?;
            let fit = fit_rate(&series, mode)?;
            println!("slope {}", fit.slope);
            println!("intercept {}", fit.intercept);
            println!("r2 {}", fit.r2);
        }
        Command::SymregDemo {
            activations,
            function,
            schedule,
            grid,
            out,
        } => {
            let grid = grid_default(grid, &config, 10_001)?;
            let target = TargetFunction::lookup(&function, 1)?;
            let acts = activations
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| BaseActivation::lookup(s))
                .collect::<Result<Vec<_>, _>>()?;
            symreg_demo(&target, &acts, &schedule, grid, &out)?;
        }
        Command::Selftest { quick } => {
            return selftest(quick);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Columns: n, c0_err_abs, c0_bound, c0_err_requ, c1_err_requ.
fn newman_table(n_list: &[usize], grid: usize, out: &PathBuf) -> Result<()> {
    let mut csv = String::from("n,c0_err_abs,c0_bound,c0_err_requ,c1_err_requ\n");
    for &n in n_list {
        let basis = NewmanBasis::new(n)?;
        let mut c0_abs: f64 = 0.0;
        let mut c0_requ: f64 = 0.0;
        let mut c1_requ: f64 = 0.0;
        for x in basis.certification_grid(grid) {
            let r = basis.eval_r(x)?;
            c0_abs = c0_abs.max((x.abs() - x * r).abs());
            c0_requ = c0_requ.max((requ(x) - basis.eval_requ(x)?).abs());
            c1_requ = c1_requ.max((requ_prime(x) - basis.eval_requ_prime(x)?).abs());
        }
        let bound = 3.0 * (-(n as f64).sqrt()).exp();
        csv.push_str(&format!("{n},{c0_abs},{bound},{c0_requ},{c1_requ}\n"));
    }
    write_text(out, &csv)?;
    println!("wrote {} rows to {}", n_list.len(), out.display());
    Ok(())
}

/// Columns: x1..xd, then one value column per output.
fn spline_eval(spline: &TensorSpline, grid: usize, out: &PathBuf) -> Result<()> {
    let d = spline.dimension();
    let p = spline.output_dimension();
    let spec = GridSpec::unit(d, grid);
    let mut csv = String::new();
    for l in 1..=d {
        csv.push_str(&format!("x{l},"));
    }
    csv.push_str(
        &(1..=p)
            .map(|m| format!("s{m}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    csv.push('\n');
    for flat in 0..spec.total_points() {
        let x = spec.point(flat);
        let v = spline.eval(&x)?;
        for c in &x {
            csv.push_str(&format!("{c},"));
        }
        csv.push_str(
            &v.iter()
                .map(|u| format!("{u}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        csv.push('\n');
    }
    write_text(out, &csv)?;
    println!("wrote {} points to {}", spec.total_points(), out.display());
    Ok(())
}

/// Columns: x, f, net, abs_err, abs_err_deriv (per-point |Δ| and |Δ'|,
/// max-norm over outputs and directions); x spans d columns for d > 1.
fn net_eval(
    net: &RationalNetwork,
    target: &TargetFunction,
    grid: usize,
    out: &PathBuf,
) -> Result<()> {
    let d = net.input_dim();
    let spec = GridSpec::unit(d, grid);
    let mut csv = String::new();
    if d == 1 {
        csv.push_str("x,f,net,abs_err,abs_err_deriv\n");
    } else {
        for l in 1..=d {
            csv.push_str(&format!("x{l},"));
        }
        csv.push_str("f,net,abs_err,abs_err_deriv\n");
    }
    for flat in 0..spec.total_points() {
        let x = spec.point(flat);
        let fv = target.value(&x);
        let fj = target.jacobian(&x);
        let (nv, nj) = net.eval_with_jacobian(&x)?;
        let mut dv: f64 = 0.0;
        let mut dj: f64 = 0.0;
        for m in 0..fv.len() {
            dv = dv.max((fv[m] - nv[m]).abs());
            for l in 0..d {
                dj = dj.max((fj[m][l] - nj[m][l]).abs());
            }
        }
        for c in &x {
            csv.push_str(&format!("{c},"));
        }
        csv.push_str(&format!("{},{},{dv},{dj}\n", fv[0], nv[0]));
    }
    write_text(out, &csv)?;
    println!("wrote {} points to {}", spec.total_points(), out.display());
    Ok(())
}

/// Columns: schedule_entry, c0_err, c1_err, cancel_err_1..L.
fn symreg_demo(
    target: &TargetFunction,
    activations: &[BaseActivation],
    schedule: &[usize],
    grid: usize,
    out: &PathBuf,
) -> Result<()> {
    let cfg = CancellationConfig::default();
    let builder = |n: usize| build_cancellation_net(target, activations, n, &cfg);
    let rows = convergence_scan(&builder, schedule, grid, target)?;
    let mut csv = String::from("schedule_entry,c0_err,c1_err");
    for i in 1..=activations.len() {
        csv.push_str(&format!(",cancel_err_{i}"));
    }
    csv.push('\n');
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{}",
            row.schedule_entry, row.report.c0_error, row.report.c1_error
        ));
        for c in &row.cancel_err {
            csv.push_str(&format!(",{c}"));
        }
        csv.push('\n');
    }
    write_text(out, &csv)?;
    println!("wrote {} schedule entries to {}", rows.len(), out.display());
    Ok(())
}

fn selftest(quick: bool) -> Result<ExitCode> {
    // Registry gradients are validated before anything else runs.
    for t in TargetFunction::all() {
        t.validate_gradient(100, 42)
            .with_context(|| format!("registry gradient validation for {}", t.name))?;
    }
    let outcomes = run_all(&AcceptanceConfig { quick });
    let mut all_ok = true;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        all_ok &= outcome.passed;
    }
    if all_ok {
        println!("selftest: all {} criteria passed", outcomes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("selftest: FAILURES present");
        Ok(ExitCode::from(1))
    }
}

fn read_csv_columns(path: &PathBuf, xcol: &str, ycol: &str) -> Result<Vec<(f64, f64)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let xi = names
        .iter()
        .position(|&n| n == xcol)
        .with_context(|| format!("column {xcol:?} not in header {names:?}"))?;
    let yi = names
        .iter()
        .position(|&n| n == ycol)
        .with_context(|| format!("column {ycol:?} not in header {names:?}"))?;
    let mut series = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let x: f64 = fields
            .get(xi)
            .context("short row")?
            .trim()
            .parse()
            .context("parsing x value")?;
        let y: f64 = fields
            .get(yi)
            .context("short row")?
            .trim()
            .parse()
            .context("parsing y value")?;
        series.push((x, y));
    }
    Ok(series)
}
