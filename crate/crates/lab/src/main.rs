use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ldg_lab::{run, ExperimentConfig, ExperimentId};

/// Runs one Landau-de Gennes disk experiment and writes its result table,
/// artifacts and manifest.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment id, overriding the one in the config file.
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for seeded starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let override_id = cli.experiment.as_deref().map(str::parse::<ExperimentId>).transpose()?;
    let mut cfg = match (&cli.config, override_id) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(id)) => ExperimentConfig::new(id),
        (None, None) => anyhow::bail!("either --config or --experiment is required"),
    };
    if let Some(id) = override_id {
        if id != cfg.experiment {
            // Experiment-specific defaults must follow the new id.
            let mut fresh = ExperimentConfig::new(id);
            fresh.params = cfg.params;
            fresh.seed = cfg.seed;
            fresh.threads = cfg.threads;
            fresh.output_dir = cfg.output_dir.take();
            cfg = fresh;
        }
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if cli.dump_config {
        println!("{}", cfg.to_canonical_json());
        return ExitCode::SUCCESS;
    }
    match run(&cfg) {
        Ok(out) => {
            for row in out.table.failures() {
                eprintln!("FAIL {} k={} R={:?} {} = {} ({})", row.experiment, row.k, row.radius, row.quantity, row.value, row.note);
            }
            println!("{} rows, {} failed, outputs in {}", out.table.rows.len(), out.manifest.failed_rows, out.out_dir.display());
            for w in &out.manifest.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
