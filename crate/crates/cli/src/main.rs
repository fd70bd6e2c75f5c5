//! certisens: certified sensitivity indices through a reduced-basis surrogate.

mod config;
mod error;
mod estimate;
mod output;
mod setup;
mod tune;
mod validate;

use clap::{Parser, Subcommand};
use config::{resolve_seed, RunConfig, SeedSource, SEED_ENV};
use error::CliError;
use output::{out_path, write_csv, write_json, ReducedModelFile, Seeds, Sidecar, REDUCED_FORMAT, REDUCED_VERSION};
use setup::Setup;
use std::path::PathBuf;
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "certisens", version, about = "Certified Sobol index estimation with reduced-basis surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config and in CERTISENS_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Snapshots, POD basis and offline reduction; writes reduced_model.json.
    Offline(Common),
    /// Index estimates with bound pairs and combined intervals; writes estimate.csv and estimate.json.
    Estimate(Common),
    /// Optimal (basis size, sample size) table; writes tune.csv and tune.json.
    Tune(Common),
    /// Property suites; writes validate.json.
    Validate(Common),
}

struct Run {
    cfg: RunConfig,
    seeds: Seeds,
    out: Option<PathBuf>,
}

fn prepare(c: &Common) -> Result<Run, CliError> {
    let mut cfg = RunConfig::load(&c.config)?;
    let env = std::env::var(SEED_ENV).ok();
    let (seed, source): (u64, SeedSource) = resolve_seed(c.seed, cfg.seed, env.as_deref())?;
    cfg.seed = Some(seed);
    rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    Ok(Run { cfg, seeds: Seeds::new(seed, source), out: c.out.clone() })
}

fn offline(run: Run) -> Result<(), CliError> {
    let setup = Setup::build(&run.cfg.model)?;
    let seed = run.seeds.run;
    let reduced = setup.reduce(run.cfg.offline.snapshots, run.cfg.offline.basis_size, seed)?;
    let seeds = Seeds { snapshots: Some(seed), ..run.seeds };
    let file = ReducedModelFile {
        format: REDUCED_FORMAT.into(),
        version: REDUCED_VERSION,
        config: serde_json::to_value(&run.cfg).map_err(anyhow::Error::from)?,
        seeds,
        reduced_model: reduced,
    };
    let path = out_path(&run.out, "reduced_model.json");
    write_json(&path, &file)?;
    println!("wrote {} (basis size {})", path.display(), file.reduced_model.size());
    Ok(())
}

fn estimate(run: Run) -> Result<(), CliError> {
    let setup = Setup::build(&run.cfg.model)?;
    let seed = run.seeds.run;
    let surrogate = setup.surrogate(&run.cfg.offline, seed)?;
    let est = &run.cfg.estimate;
    let rows = estimate::estimate_indices(surrogate.get(), setup.domain(), est, est.samples, seed)?;
    let mut seeds = run.seeds.clone();
    seeds.design = Some(seed);
    seeds.bootstrap = rows.iter().map(|r| output::bootstrap_seed(seed, r.index)).collect();
    if surrogate.reduced().is_some() && run.cfg.offline.reduced_model.is_none() {
        seeds.snapshots = Some(seed);
    }
    let csv_path = out_path(&run.out, "estimate.csv");
    write_csv(&csv_path, &estimate::HEADER, &rows.iter().map(estimate::IndexRow::csv).collect::<Vec<_>>())?;
    let sidecar = Sidecar { command: "estimate", version: VERSION, config: &run.cfg, seeds: &seeds, results: &rows };
    write_json(&out_path(&run.out, "estimate.json"), &sidecar)?;
    println!("wrote {} ({} rows)", csv_path.display(), rows.len());
    match estimate::flagged(&rows) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn tune(run: Run) -> Result<(), CliError> {
    let tcfg = run.cfg.tune.clone().ok_or_else(|| anyhow::anyhow!("config has no tune section"))?;
    let setup = match tcfg.source {
        config::TuneSource::PreRuns { .. } => Some(Setup::build(&run.cfg.model)?),
        _ => None,
    };
    let seed = run.seeds.run;
    let results = tune::run(setup.as_ref(), &run.cfg.offline, &run.cfg.estimate, &tcfg, seed)?;
    let mut seeds = run.seeds.clone();
    if !results.pre_runs.is_empty() {
        seeds.snapshots = Some(seed);
        seeds.design = Some(seed);
        seeds.bootstrap =
            results.pre_runs[0].rows.iter().map(|r| output::bootstrap_seed(seed, r.index)).collect();
    }
    let csv_path = out_path(&run.out, "tune.csv");
    write_csv(&csv_path, &tune::HEADER, &results.table.iter().map(tune::Row::csv).collect::<Vec<_>>())?;
    let sidecar = Sidecar { command: "tune", version: VERSION, config: &run.cfg, seeds: &seeds, results: &results };
    write_json(&out_path(&run.out, "tune.json"), &sidecar)?;
    println!(
        "wrote {} ({} rows; Z = {}, C = {}, a = {})",
        csv_path.display(),
        results.table.len(),
        results.z,
        results.c,
        results.a
    );
    Ok(())
}

fn validate(run: Run) -> Result<(), CliError> {
    let setup = Setup::build(&run.cfg.model)?;
    let seed = run.seeds.run;
    let surrogate = setup.surrogate(&run.cfg.offline, seed)?;
    let props = validate::run(&setup, surrogate.get(), &run.cfg.validate, &run.cfg.estimate, seed)?;
    let mut seeds = run.seeds.clone();
    seeds.design = Some(seed);
    let path = out_path(&run.out, "validate.json");
    let sidecar = Sidecar { command: "validate", version: VERSION, config: &run.cfg, seeds: &seeds, results: &props };
    write_json(&path, &sidecar)?;
    println!("seed {seed}");
    for p in &props {
        println!("{}", p.line());
    }
    let failed = props.iter().filter(|p| p.pass == Some(false)).count();
    if failed > 0 {
        return Err(CliError::Validation { failed, total: props.len() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Offline(c) => prepare(c).and_then(offline),
        Command::Estimate(c) => prepare(c).and_then(estimate),
        Command::Tune(c) => prepare(c).and_then(tune),
        Command::Validate(c) => prepare(c).and_then(validate),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
