//! Experiment runner for `ldg-core`: JSON configuration, result tables,
//! binary field containers, plot data and run manifests.
//!
//! A run writes, below its output directory,
//! `config.resolved.json`, `results.csv`, `results.json`, the experiment's
//! artifacts, optional `plot/` series and finally `manifest.json`. Apart from
//! the wall time in the manifest, every file is a deterministic function of
//! the configuration.

pub mod config;
pub mod experiments;
pub mod formats;
pub mod manifest;
pub mod plotdata;
pub mod results;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;

pub use config::{ExperimentConfig, ExperimentId};
pub use manifest::Manifest;
pub use results::{ResultTable, Row};

#[derive(Debug)]
pub struct RunOutput {
    pub table: ResultTable,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

impl RunOutput {
    /// Process exit code: 0 iff no row failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.table.all_passed())
    }
}

pub fn default_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| Path::new("out").join(cfg.experiment.as_str()))
}

/// Runs one experiment and writes all of its outputs.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let started = Instant::now();
    let out = default_output_dir(&cfg);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let params = cfg.material()?;
    let config_json = cfg.to_canonical_json();
    std::fs::write(out.join("config.resolved.json"), format!("{config_json}\n"))?;

    let ctx = experiments::Ctx::new(&cfg, params, &out);
    let rows = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?.install(|| experiments::dispatch(&ctx))
    } else {
        experiments::dispatch(&ctx)
    };
    let table = ResultTable { rows };
    table.write_csv(&out.join("results.csv"))?;
    table.write_json(&out.join("results.json"))?;

    let mut manifest = Manifest {
        code_version: manifest::code_version(),
        experiment: cfg.experiment.to_string(),
        config_sha256: manifest::sha256_hex(config_json.as_bytes()),
        rows: table.rows.len(),
        failed_rows: table.failures().count(),
        ..Manifest::default()
    };
    if let Some(kind) = plotdata::PlotKind::for_experiment(cfg.experiment.as_str()) {
        let dir = out.join("plot");
        std::fs::create_dir_all(&dir)?;
        let p = plotdata::emit_plotdata(&table, kind, &dir)?;
        for f in [&p.data, &p.descriptor] {
            let rel = f.strip_prefix(&out).expect("below out").to_string_lossy().into_owned();
            manifest.record(&out, &rel)?;
        }
        if let Some(w) = p.warning {
            manifest.warn(w);
        }
    }
    let (artifacts, warnings) = ctx.into_parts();
    for rel in artifacts.iter().map(String::as_str).chain(["config.resolved.json", "results.csv", "results.json"]) {
        manifest.record(&out, rel)?;
    }
    manifest.warnings.extend(warnings);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    formats::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunOutput { table, manifest, out_dir: out })
}
