use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use udn_core::association::analytical_active_density;
use udn_core::output::format_real;
use udn_core::{emit_csv, run_sweep, EngineOptions, RunManifest, ScenarioConfig, SimError, SweepGrid};

#[derive(Parser)]
#[command(name = "udn-sim", version, about = "Uplink IoT ultra-dense network Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write CSV results plus a manifest.
    Run(RunArgs),
    /// Check a configuration file and print the effective configuration.
    Validate(ConfigArgs),
    /// Print the analytical active BS density over the configured BS densities.
    ActiveDensity(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// CSV output path; the manifest goes next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `stopping.max_drops`.
    #[arg(long)]
    max_drops: Option<u64>,
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig, SimError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), SimError> {
    let cfg = load(&args.common)?;
    let mut opts = EngineOptions::default();
    if let Some(w) = args.workers {
        opts.workers = w;
    }
    opts.max_drops = args.max_drops;

    let grid = SweepGrid::from_config(&cfg);
    log::info!("{} sweep points on {} workers", grid.points().len(), opts.workers);
    let start = Instant::now();
    let results = run_sweep(&cfg, &grid, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();

    emit_csv(&results, &args.out)?;
    let manifest_path = RunManifest::path_for(&args.out);
    RunManifest::new(&cfg, args.max_drops, &results, elapsed).write(&manifest_path)?;
    let exhausted = results.iter().filter(|r| r.budget_exhausted).count();
    if exhausted > 0 {
        log::warn!("{exhausted} point(s) hit the drop budget before the CI target");
    }
    eprintln!(
        "wrote {} and {} in {:.1} s",
        args.out.display(),
        manifest_path.display(),
        elapsed
    );
    Ok(())
}

fn validate(args: &ConfigArgs) -> Result<(), SimError> {
    let cfg = load(args)?;
    let n = SweepGrid::from_config(&cfg).points().len();
    let source = args.config.as_deref().unwrap_or(Path::new("<defaults>"));
    eprintln!("{}: ok, {n} sweep point(s)", source.display());
    print!("{}", cfg.to_toml_string());
    Ok(())
}

fn active_density(args: &ConfigArgs) -> Result<(), SimError> {
    let cfg = load(args)?;
    println!("lambda_bs_per_km2,active_density_eq5");
    for lambda in cfg.bs_density_grid() {
        let a = analytical_active_density(lambda, cfg.ue_density, cfg.idle_mode_q);
        println!("{},{}", format_real(lambda), format_real(a));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
        Command::ActiveDensity(a) => active_density(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
