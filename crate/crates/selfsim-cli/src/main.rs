//! Batch driver: read series/job files, run order sweeps across methods,
//! emit convergence tables and diagnostics.
//!
//! Exit codes: 0 ok, 1 validation error, 2 all orders failed, 3 internal
//! numeric failure.

mod job;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use job::{
    parse_input, parse_order_range, validate, InputSection, JobFile, Orders, ResummationJob,
    USection,
};
use selfsim::numerics::{Prec, Real};
use selfsim::oracles;

#[derive(Parser)]
#[command(
    name = "selfsim",
    about = "Resummation of truncated power series by self-similar factor approximants and self-similar Borel summation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Job file (TOML); command-line flags override its fields
    #[arg(long)]
    job: Option<PathBuf>,
    /// Inline coefficients as comma-separated decimal strings
    #[arg(long)]
    coeffs: Option<String>,
    /// Named fixture: beta_sym | z_partition | oscillator | kink | bell
    #[arg(long)]
    fixture: Option<String>,
    /// Working precision in decimal digits
    #[arg(long)]
    precision: Option<u32>,
    /// Output format: json | csv | table
    #[arg(long)]
    output: Option<String>,
    /// Orders, e.g. "2..14" or "2,3,5"
    #[arg(long)]
    orders: Option<String>,
    /// Control-parameter grid "min:max:step" (borel)
    #[arg(long = "u-grid")]
    u_grid: Option<String>,
    /// Fixed control parameter u (borel)
    #[arg(long = "u")]
    u_value: Option<String>,
    /// u strategy: fixed | grid | fixed-grid-fallback (borel)
    #[arg(long = "u-strategy")]
    u_strategy: Option<String>,
    /// Evaluation points, comma-separated decimal strings
    #[arg(long)]
    eval: Option<String>,
    /// Number of colors for the beta_sym fixture
    #[arg(long)]
    n_c: Option<u32>,
    /// Equation parameter for kink/bell fixtures
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Direct factor-approximant sweep
    Factor(CommonArgs),
    /// Self-similar Borel summation sweep
    Borel(CommonArgs),
    /// Diff-log exponent extraction sweep
    Difflog(CommonArgs),
    /// Sweep with the method taken from the job file or --method
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        method: Option<String>,
    },
    /// Convergence diagnostics per order (factor route)
    Diagnose(CommonArgs),
    /// List fixtures, dump coefficients, or write the oracle cache
    Fixtures {
        /// Fixture name to dump
        #[arg(long)]
        name: Option<String>,
        /// Expansion order for the dump
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long)]
        precision: Option<u32>,
        /// Recompute oracle regression values and write them to this path
        #[arg(long = "write-cache")]
        write_cache: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Factor(c) => run_method(c, Some("factor")),
        Command::Borel(c) => run_method(c, Some("borel")),
        Command::Difflog(c) => run_method(c, Some("difflog")),
        Command::Sweep { common, method } => run_method(common, method.as_deref()),
        Command::Diagnose(c) => run_method(c, Some("factor")),
        Command::Fixtures {
            name,
            order,
            precision,
            write_cache,
        } => return fixtures_cmd(name, order, precision, write_cache),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run_method(common: CommonArgs, method: Option<&str>) -> Result<ExitCode, String> {
    let job = assemble_job(&common, method)?;
    match run::run_job(&job) {
        Ok(report) => {
            print!("{}", report::emit_report(&report, job.output));
            if report.orders.iter().all(|r| r.status != "ok") {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Err(run::RunError::Input(msg)) => Err(msg),
        Err(run::RunError::Internal(msg)) => {
            eprintln!("internal numeric failure: {msg}");
            Ok(ExitCode::from(3))
        }
    }
}

/// Merge job file and flags into a validated job.
fn assemble_job(common: &CommonArgs, method: Option<&str>) -> Result<ResummationJob, String> {
    let mut file: JobFile = if let Some(path) = &common.job {
        let parsed = parse_input(path).map_err(|e| e.to_string())?;
        parsed.canonical
    } else {
        JobFile {
            method: "factor".into(),
            precision: 60,
            orders: Orders::Range("2..6".into()),
            output: "table".into(),
            eval_points: vec![],
            extrapolate: false,
            input: InputSection::default(),
            u: None,
        }
    };
    if let Some(m) = method {
        file.method = m.to_string();
    }
    if let Some(p) = common.precision {
        file.precision = p;
    }
    if let Some(o) = &common.output {
        file.output = o.clone();
    }
    if let Some(orders) = &common.orders {
        file.orders = Orders::List(parse_order_range(orders).map_err(|e| e.to_string())?);
    }
    if let Some(c) = &common.coeffs {
        file.input.coefficients = Some(c.split(',').map(|s| s.trim().to_string()).collect());
        file.input.fixture = None;
    }
    if let Some(f) = &common.fixture {
        file.input.fixture = Some(f.clone());
        file.input.coefficients = None;
    }
    if let Some(n) = common.n_c {
        file.input.n_c = Some(n);
    }
    if let Some(e) = &common.epsilon {
        file.input.epsilon = Some(e.clone());
    }
    if let Some(e) = &common.eval {
        file.eval_points = e.split(',').map(|s| s.trim().to_string()).collect();
    }
    let mut u = file.u.take().unwrap_or(USection {
        strategy: "fixed-grid-fallback".into(),
        value: None,
        min: None,
        max: None,
        step: None,
        observable: None,
        probe: None,
    });
    if let Some(g) = &common.u_grid {
        let parts: Vec<&str> = g.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("--u-grid expects min:max:step, got {g:?}"));
        }
        u.min = Some(parts[0].parse().map_err(|_| "bad grid min")?);
        u.max = Some(parts[1].parse().map_err(|_| "bad grid max")?);
        u.step = Some(parts[2].parse().map_err(|_| "bad grid step")?);
        if common.u_strategy.is_none() && common.u_value.is_none() {
            u.strategy = "grid".into();
        }
    }
    if let Some(v) = &common.u_value {
        u.value = Some(v.clone());
        if common.u_strategy.is_none() {
            u.strategy = "fixed".into();
        }
    }
    if let Some(s) = &common.u_strategy {
        u.strategy = s.clone();
    }
    file.u = Some(u);
    validate(file).map_err(|e| e.to_string())
}

fn fixtures_cmd(
    name: Option<String>,
    order: usize,
    precision: Option<u32>,
    write_cache: Option<PathBuf>,
) -> ExitCode {
    let p = Prec::new(precision.unwrap_or(60));
    if let Some(path) = write_cache {
        return match write_oracle_cache(&path, p) {
            Ok(()) => {
                println!("oracle cache written to {}", path.display());
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("internal numeric failure: {msg}");
                ExitCode::from(3)
            }
        };
    }
    match name.as_deref() {
        None => {
            println!("available fixtures:");
            println!("  beta_sym     reduced-variable Yang-Mills beta series (all ones); --n-c");
            println!("  z_partition  partition-function expansion coefficients");
            println!("  oscillator   quartic-oscillator ground-energy expansion (order <= 40)");
            println!("  kink         soliton z-series of the kink equation; --epsilon");
            println!("  bell         soliton z-series of the bell equation; --epsilon");
            ExitCode::SUCCESS
        }
        Some(n) => {
            let file = JobFile {
                method: "factor".into(),
                precision: p.digits(),
                orders: Orders::List(vec![2]),
                output: "table".into(),
                eval_points: vec![],
                extrapolate: false,
                input: InputSection {
                    fixture: Some(n.to_string()),
                    ..InputSection::default()
                },
                u: None,
            };
            let job = match validate(file) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match job::realize_series(&job, order) {
                Ok(series) => {
                    println!("# fixture {n}, order {order}, precision {} digits", p.digits());
                    for i in 0..=series.order() {
                        println!("a_{i} = {}", series.coeff(i).to_decimal_string(p.digits()));
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn write_oracle_cache(path: &std::path::Path, p: Prec) -> Result<(), String> {
    let mut values = Vec::new();
    for g in ["0.1", "1", "10"] {
        let gv = Real::parse(g, p).unwrap();
        values.push(oracles::z_value(&gv, p, -20).map_err(|e| e.to_string())?);
    }
    for g in [0.1f64, 1.0, 2.0] {
        values.push(oracles::oscillator_energy(g, 1e-10, 2048).map_err(|e| e.to_string())?);
    }
    let text = oracles::render_fixture_cache(&values);
    std::fs::write(path, text).map_err(|e| e.to_string())
}
