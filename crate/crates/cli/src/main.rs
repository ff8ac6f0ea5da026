mod exit;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reachstl::constrain::Representation;
use reachstl::reach::estimate_lipschitz_and_radius;
use reachstl::scenarios::{
    audit, generate_dataset, load_report, run_scenario, total_violations, write_report, ScenarioConfig, ScenarioError,
};
use reachstl::setalg::VolumeMethod;

/// Reachable sets from noisy data, tightened by temporal-logic side information.
#[derive(Debug, Parser)]
#[command(name = "reachstl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate historical trajectories and write them as CSV.
    GenData(GenDataArgs),
    /// Run a scenario end to end and write the report directory.
    Analyze(AnalyzeArgs),
    /// Re-run the inclusion audit against an existing report.
    Check(CheckArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, clap::Args)]
struct GenDataArgs {
    /// Number of data points (transitions).
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario config whose system is simulated (path or `parking` / `roundabout`).
    #[arg(long, default_value = "parking")]
    config: String,
    /// Output CSV path.
    #[arg(long, short, default_value = "trajectories.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RepresentationArg {
    Zonotope,
    Constrained,
    Both,
}

impl From<RepresentationArg> for Representation {
    fn from(r: RepresentationArg) -> Self {
        match r {
            RepresentationArg::Zonotope => Representation::Zonotope,
            RepresentationArg::Constrained => Representation::Constrained,
            RepresentationArg::Both => Representation::Both,
        }
    }
}

#[derive(Debug, clap::Args)]
struct AnalyzeArgs {
    /// Scenario config path, or `parking` / `roundabout` for the built-in analogs.
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    representation: Option<RepresentationArg>,
    /// `exact2d` or `mc:<samples>`.
    #[arg(long, value_parser = parse_volume)]
    volume: Option<VolumeSpec>,
    /// Assume every eventually holds at its deadline when no instantiation is given.
    #[arg(long)]
    assume_f_at_deadline: bool,
    /// Open-loop mode: propagate unconstrained sets instead of constrained ones.
    #[arg(long)]
    no_feedback: bool,
    /// Audit samples per step and formula.
    #[arg(long, value_parser = positive)]
    samples: Option<usize>,
    /// Report directory (default: the config's output dir, else `out/<name>`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Skip the per-step SVG plots.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Debug, clap::Args)]
struct CheckArgs {
    /// Report directory or its sets.json.
    report: PathBuf,
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    samples: usize,
    /// Audit seed (default: the report seed + 2, as used by `analyze`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
enum VolumeSpec {
    Exact2d,
    MonteCarlo(usize),
}

fn parse_volume(s: &str) -> Result<VolumeSpec, String> {
    if s == "exact2d" {
        return Ok(VolumeSpec::Exact2d);
    }
    let samples = s
        .strip_prefix("mc:")
        .ok_or_else(|| format!("expected `exact2d` or `mc:<samples>`, found `{s}`"))?;
    match samples.parse::<usize>() {
        Ok(n) if n > 0 => Ok(VolumeSpec::MonteCarlo(n)),
        _ => Err(format!(
            "monte carlo sample count must be a positive integer, found `{samples}`"
        )),
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn load_config(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let path = Path::new(name);
    match name {
        "parking" if !path.exists() => Ok(ScenarioConfig::parking()),
        "roundabout" if !path.exists() => Ok(ScenarioConfig::roundabout()),
        _ => ScenarioConfig::from_path(path),
    }
}

fn fail(e: &ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit::code(e))
}

fn gen_data(args: GenDataArgs) -> Result<ExitCode, ScenarioError> {
    let cfg = load_config(&args.config)?;
    let sys = cfg.system.to_system()?;
    let data = generate_dataset(&sys, args.points, args.seed)?;
    let file = File::create(&args.out).map_err(|e| io_error(&args.out, e))?;
    data.write_csv(BufWriter::new(file))?;
    let (lipschitz, delta) = estimate_lipschitz_and_radius(&data)?;
    println!("wrote {}", args.out.display());
    println!("points T = {}", data.num_points());
    println!("trajectories K = {}", data.trajectories().len());
    println!("estimated L* = {lipschitz:.6}");
    println!("estimated delta = {delta:.6}");
    Ok(ExitCode::SUCCESS)
}

fn io_error(path: &Path, source: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, ScenarioError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(h) = args.horizon {
        cfg.run.horizon = h;
    }
    if let Some(r) = args.representation {
        cfg.output.representation = r.into();
    }
    if let Some(v) = args.volume {
        cfg.output.volume = match v {
            VolumeSpec::Exact2d => VolumeMethod::Exact2d,
            VolumeSpec::MonteCarlo(samples) => VolumeMethod::MonteCarlo {
                samples,
                seed: cfg.seed,
            },
        };
    }
    if args.assume_f_at_deadline {
        cfg.output.assume_f_at_deadline = true;
    }
    if args.no_feedback {
        cfg.reach.feedback = false;
    }
    if let Some(n) = args.samples {
        cfg.output.audit_samples = n;
    }
    if args.no_svg {
        cfg.output.svg = false;
    }
    cfg.validate()?;

    let dir = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let report = run_scenario(&cfg)?;
    write_report(&report, &dir, cfg.output.svg)?;

    println!("report written to {}", dir.display());
    println!("{:<22} {:<12} {:>12}", "representation", "constrained", "avg volume");
    for ((rep, by), v) in report.averages() {
        println!("{rep:<22} {by:<12} {v:>12.6}");
    }
    let violations = total_violations(&report.audit);
    println!("inclusion audit: {violations} violations");
    Ok(if violations > 0 {
        ExitCode::from(exit::AUDIT_VIOLATION)
    } else {
        ExitCode::SUCCESS
    })
}

fn check(args: CheckArgs) -> Result<ExitCode, ScenarioError> {
    let report = load_report(&args.report)?;
    let seed = args.seed.unwrap_or_else(|| report.metadata.seed.wrapping_add(2));
    let rows = audit(&report, args.samples, seed)?;
    for row in rows.iter().filter(|r| r.violations > 0) {
        println!(
            "step {} {} / {}: {} of {} samples outside",
            row.step, row.representation, row.constrained_by, row.violations, row.samples
        );
    }
    let violations = total_violations(&rows);
    println!("violations: {violations}");
    Ok(if violations > 0 {
        ExitCode::from(exit::AUDIT_VIOLATION)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Analyze(a) => analyze(a),
        Command::Check(a) => check(a),
        Command::Version => {
            println!("reachstl {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| fail(&e))
}
