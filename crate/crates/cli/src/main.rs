use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tspq_core::experiment::{load_results, run_experiment, Experiment};
use tspq_core::hybrid::{append_archive, load_archive, solve, Encoding, Method, SolveConfig};
use tspq_core::instance::{
    european_cities, load_city_pool, select_subinstance, City, DEFAULT_MAX_CITIES,
};
use tspq_core::metrics::{aggregate, appendix_table, emit_report, ReportFormat};
use tspq_core::qsim::NoiseModel;
use tspq_core::Error;

const RESULTS_ENV: &str = "TSPQ_RESULTS_DIR";

#[derive(Parser)]
#[command(
    name = "tspq",
    version,
    about = "Quantum, hybrid and classical solvers for small fixed-endpoint TSP instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its record as JSON.
    Solve(SolveArgs),
    /// Run seeded solves over a range of city counts and methods.
    Experiment(ExperimentArgs),
    /// Rebuild statistics and tables from stored records.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON file with solver settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    encoding: Option<Encoding>,
    /// Enable the default gate and readout noise model.
    #[arg(long)]
    noise: bool,
    #[arg(long)]
    shots: Option<usize>,
    /// JSON array of {name, lon, lat}; defaults to the built-in ten cities.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_CITIES)]
    max_cities: usize,
    /// Parameter archive used for warm starts.
    #[arg(long)]
    archive: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    cities: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the record to this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 4)]
    min: usize,
    #[arg(long, default_value_t = 8)]
    max: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Comma-separated methods; defaults to all five.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) => 3,
            Error::Io { .. } => 4,
            Error::Csv(c) if c.is_io_error() => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn solve_config(common: &Common, method: Method) -> Result<SolveConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => SolveConfig::from_json_file(p)?,
        None => SolveConfig::default(),
    };
    cfg.method = method;
    if let Some(e) = common.encoding {
        cfg.encoding = Some(e);
    }
    if common.noise && cfg.noise.is_none() {
        cfg.noise = Some(NoiseModel::default());
    }
    if let Some(s) = common.shots {
        cfg.shots = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn city_pool(common: &Common) -> Result<Vec<City>, Failure> {
    Ok(match &common.pool {
        Some(p) => load_city_pool(p)?,
        None => european_cities(),
    })
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure {
        code: 4,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let cfg = SolveConfig {
        seed: args.seed,
        ..solve_config(&args.common, args.method)?
    };
    let pool = city_pool(&args.common)?;
    let instance =
        select_subinstance::<f64>(&pool, args.cities, args.seed, args.common.max_cities)?;
    let archive_path = args.common.archive.clone().or_else(|| {
        args.out
            .as_ref()
            .map(|d| d.join(tspq_core::experiment::ARCHIVE_FILE))
    });
    let archive = match &archive_path {
        Some(p) => load_archive(p)?,
        None => Vec::new(),
    };
    let outcome = solve(&instance, &cfg, &archive)?;
    let json = serde_json::to_string_pretty(&outcome.record).map_err(Error::from)?;
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let p = dir.join("record.json");
        std::fs::write(&p, format!("{json}\n")).map_err(|e| Error::Io { path: p, source: e })?;
    }
    if let Some(p) = &archive_path {
        append_archive(p, &outcome.archive)?;
    }
    let _ = writeln!(std::io::stdout().lock(), "{json}");
    Ok(())
}

fn default_out() -> PathBuf {
    let root = std::env::var_os(RESULTS_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(chrono::Local::now().format("%Y%m%dT%H%M%S").to_string())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let cfg = solve_config(&args.common, Method::Quantum)?;
    let out = args.out.unwrap_or_else(default_out);
    create_dir(&out)?;
    let exp = Experiment {
        min_n: args.min,
        max_n: args.max,
        runs: args.runs,
        methods: args.methods.unwrap_or_else(|| Method::ALL.to_vec()),
        seed_base: args.seed_base,
        config: cfg,
        pool: city_pool(&args.common)?,
        max_cities: args.common.max_cities,
        out: out.clone(),
        jobs: args.jobs,
        archive: args.common.archive,
    };
    let summary = run_experiment(&exp)?;
    for f in &summary.failures {
        eprintln!(
            "failed: {} n = {} seed = {}: {}",
            f.method, f.n, f.seed, f.error
        );
    }
    eprintln!(
        "{} records, {} failures",
        summary.records.len(),
        summary.failures.len()
    );
    let _ = writeln!(std::io::stdout().lock(), "{}", out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    if !args.input.is_dir() {
        return Err(usage(format!(
            "{} is not a directory",
            args.input.display()
        )));
    }
    let records = load_results(&args.input)?;
    if records.is_empty() {
        return Err(usage(format!("no records in {}", args.input.display())));
    }
    let out = args.out.unwrap_or(args.input);
    for p in emit_report(&records, args.format, &out)? {
        eprintln!("wrote {}", p.display());
    }
    if args.format == ReportFormat::Table {
        let _ = write!(
            std::io::stdout().lock(),
            "{}",
            appendix_table(&aggregate(&records))
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
