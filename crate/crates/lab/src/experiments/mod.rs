//! The experiment runners. Each turns a resolved configuration into result
//! rows and writes its artifacts below the output directory. Solver errors
//! become failed rows; nothing here aborts a run.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::sync::Mutex;

use ldg_core::radial::RadialProfile;
use ldg_core::MaterialParams;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::formats;
use crate::results::Row;

mod alpha;
mod decomposition;
mod mountain;
mod oddk;
mod spectra;
mod table1;
mod two_minimizers;

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub params: MaterialParams,
    pub out: &'a Path,
    artifacts: Mutex<BTreeSet<String>>,
    warnings: Mutex<Vec<String>>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig, params: MaterialParams, out: &'a Path) -> Self {
        Ctx { cfg, params, out, artifacts: Mutex::default(), warnings: Mutex::default() }
    }

    fn name(&self) -> &'static str {
        self.cfg.experiment.as_str()
    }

    fn k(&self) -> i32 {
        self.cfg.k()
    }

    /// Row skeleton for this experiment.
    fn row(&self, k: i32, radius: Option<f64>, quantity: &str, value: f64) -> Row {
        Row::info(self.name(), k, radius, quantity, value)
    }

    fn fail(&self, k: i32, radius: Option<f64>, quantity: &str, err: impl Display) -> Row {
        Row::failure(self.name(), k, radius, quantity, err.to_string())
    }

    /// Unwraps a result or records a failed row.
    fn attempt<T, E: Display>(&self, rows: &mut Vec<Row>, k: i32, radius: Option<f64>, what: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                rows.push(self.fail(k, radius, what, e));
                None
            }
        }
    }

    pub fn warn(&self, w: impl Into<String>) {
        self.warnings.lock().expect("warnings lock").push(w.into());
    }

    /// Records a file already written below the output directory.
    fn record(&self, rel: String) {
        self.artifacts.lock().expect("artifact lock").insert(rel);
    }

    /// Runs `write` on `out/rel` and records it; a failed write is a warning.
    fn artifact(&self, rel: &str, write: impl FnOnce(&Path) -> anyhow::Result<()>) {
        let path = self.out.join(rel);
        let res = path.parent().map_or(Ok(()), std::fs::create_dir_all).map_err(anyhow::Error::from).and_then(|_| write(&path));
        match res {
            Ok(()) => self.record(rel.to_string()),
            Err(e) => self.warn(format!("artifact {rel}: {e:#}")),
        }
    }

    fn profile_artifacts(&self, stem: &str, p: &RadialProfile) {
        self.artifact(&format!("{stem}.csv"), |f| formats::write_profile_csv(f, p));
        self.artifact(&format!("{stem}.ldg2"), |f| formats::write_ldg2(f, &formats::encode_radial(p)));
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<String>) {
        let arts = self.artifacts.into_inner().expect("artifact lock").into_iter().collect();
        (arts, self.warnings.into_inner().expect("warnings lock"))
    }
}

pub fn dispatch(ctx: &Ctx) -> Vec<Row> {
    match ctx.cfg.experiment {
        ExperimentId::TwoMinimizers => two_minimizers::run(ctx),
        ExperimentId::Table1 => table1::run(ctx),
        ExperimentId::AlphaScaling => alpha::run(ctx),
        ExperimentId::OddKScaling => oddk::run(ctx),
        ExperimentId::MountainPass => mountain::run(ctx),
        ExperimentId::Spectra => spectra::run(ctx),
        ExperimentId::DecompositionDiag => decomposition::run(ctx),
    }
}

/// Radius formatted for file names.
fn tag(r: f64) -> String {
    format!("R{r}").replace('.', "p")
}

/// Cell count for spacing `h` on a disk of radius `r`.
fn cells_for(r: f64, h: f64) -> usize {
    ((r / h).ceil() as usize).max(8)
}

/// The log-divergence coefficient pi s_plus^2 k^2 / 2.
fn log_coefficient(params: &MaterialParams, k: i32) -> f64 {
    std::f64::consts::PI * params.s_plus().powi(2) * (k * k) as f64 / 2.0
}

fn is_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}
