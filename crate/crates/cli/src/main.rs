use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxcusum_sim::{ExperimentPlan, Metric};

mod detect;
mod error;
mod input;

use detect::{Boundary, DetectRequest, DEFAULT_BOUNDARY_FRACTION};
use error::CliError;
use input::CsvOptions;

/// High-dimensional mean change-point detection with a bootstrap sup-norm CUSUM test.
#[derive(Debug, Parser)]
#[command(name = "maxcusum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a CSV panel (rows = time points, columns = series) for a mean change.
    Detect(DetectArgs),
    /// Run a Monte Carlo experiment described by a TOML plan.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,
    /// The first line holds column names.
    #[arg(long)]
    header: bool,
    /// The first column holds time labels (dates) rather than data.
    #[arg(long)]
    time_column: bool,
    /// Apply the natural logarithm to every value before testing.
    #[arg(long)]
    log: bool,
    /// Boundary removal as a fraction of n (floor, at least 1).
    #[arg(long, conflicts_with = "boundary", default_value_t = DEFAULT_BOUNDARY_FRACTION)]
    boundary_frac: f64,
    /// Boundary removal as an absolute number of time points.
    #[arg(long)]
    boundary: Option<usize>,
    /// Block sizes M of the multiplier bootstrap.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    blocks: Vec<usize>,
    /// Bootstrap draws B.
    #[arg(long, default_value_t = maxcusum::bootstrap::DEFAULT_DRAWS)]
    draws: usize,
    /// Significance levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.01")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Size,
    Power,
    Rmse,
}

impl From<Kind> for Metric {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Size => Metric::Size,
            Kind::Power => Metric::Power,
            Kind::Rmse => Metric::Rmse,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    kind: Kind,
    /// TOML plan file.
    #[arg(long)]
    plan: PathBuf,
    /// Output path stem; `<out>.csv` and `<out>.json` are written.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides the plan).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(args) => detect(args),
        Command::Simulate(args) => simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maxcusum: {e}");
            e.exit_code()
        }
    }
}

fn detect(args: DetectArgs) -> Result<(), CliError> {
    let file = File::open(&args.input)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", args.input.display())))?;
    let opts = CsvOptions {
        header: args.header,
        time_column: args.time_column,
        log: args.log,
    };
    let data = input::read_csv(file, opts)?;
    let req = DetectRequest {
        boundary: match args.boundary {
            Some(b) => Boundary::Absolute(b),
            None => Boundary::Fraction(args.boundary_frac),
        },
        blocks: args.blocks,
        draws: args.draws,
        alphas: args.alpha,
        seed: args.seed,
    };
    let mut report = detect::run(&data.sample, &req)?;
    report.series = data.columns;
    if args.json {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
        println!("{text}");
    } else {
        print!("{}", detect::render_text(&report));
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.plan)
        .map_err(|e| CliError::Config(format!("cannot read plan {}: {e}", args.plan.display())))?;
    let mut plan = ExperimentPlan::from_toml_str(&text, Some(args.kind.into()))?;
    if args.workers.is_some() {
        plan.workers = args.workers;
        plan.validate()?;
    }
    let report = maxcusum_sim::run(&plan)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    let (csv, json) = report.write_files(&args.out)?;
    println!(
        "{} experiment: {} rows, {} cells, {:.1}s; wrote {} and {}",
        plan.metric,
        report.rows.len(),
        report.cells.len(),
        report.wall_time_seconds,
        csv.display(),
        json.display()
    );
    Ok(())
}
