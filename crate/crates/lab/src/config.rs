//! Run configuration. Files are JSON with a closed schema: unknown keys are
//! rejected, omitted keys take the per-experiment defaults below, and the
//! fully resolved configuration is written next to the results.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ldg_core::MaterialParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    TwoMinimizers,
    Table1,
    AlphaScaling,
    OddKScaling,
    MountainPass,
    Spectra,
    DecompositionDiag,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::TwoMinimizers,
        ExperimentId::Table1,
        ExperimentId::AlphaScaling,
        ExperimentId::OddKScaling,
        ExperimentId::MountainPass,
        ExperimentId::Spectra,
        ExperimentId::DecompositionDiag,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::TwoMinimizers => "two_minimizers",
            ExperimentId::Table1 => "table1",
            ExperimentId::AlphaScaling => "alpha_scaling",
            ExperimentId::OddKScaling => "odd_k_scaling",
            ExperimentId::MountainPass => "mountain_pass",
            ExperimentId::Spectra => "spectra",
            ExperimentId::DecompositionDiag => "decomposition_diag",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown experiment id {0:?} (expected one of {1})")]
    UnknownExperiment(String, String),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl FromStr for ExperimentId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentId::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
            ConfigError::UnknownExperiment(s.to_string(), known.join(", "))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { a2: 1.0, b2: 1.0, c2: 1.0 }
    }
}

/// Settings of the explicit path and the string relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSettings {
    pub r0: f64,
    /// Images of the relaxed string, endpoints included.
    pub images: usize,
    /// Parameter samples used to locate the explicit-path maximum.
    pub samples: usize,
    /// Radius ratio of the minimiser continuation.
    pub continuation_ratio: f64,
    /// Run the string relaxation at every radius.
    pub relax: bool,
    pub max_sweeps: usize,
}

impl Default for PathSettings {
    fn default() -> Self {
        PathSettings { r0: 5.0, images: 32, samples: 161, continuation_ratio: 0.85, relax: true, max_sweeps: 20_000 }
    }
}

/// A run configuration. Every `Option` is filled by [`ExperimentConfig::resolved`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub k: Option<i32>,
    /// Even-k control of the odd-k scan.
    #[serde(default)]
    pub control_k: Option<i32>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Radial cells for experiments on a fixed cell count.
    #[serde(default)]
    pub radial_cells: Option<usize>,
    /// Radial spacing for experiments whose cell count grows with R.
    #[serde(default)]
    pub grid_spacing: Option<f64>,
    /// Disk grid (n_r, n_phi).
    #[serde(default)]
    pub disk_grid: Option<[usize; 2]>,
    /// Radial cell counts of the spectra refinement study.
    #[serde(default)]
    pub refinements: Option<Vec<usize>>,
    /// Radial cell counts of the Hessian probes.
    #[serde(default)]
    pub probe_cells: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    /// Number of seeded starts; start i uses seed + i.
    #[serde(default)]
    pub starts: Option<usize>,
    /// Perturbation amplitude in units of s_plus.
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub path: PathSettings,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[serde(default)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// The configuration with every default written out.
    pub fn new(experiment: ExperimentId) -> Self {
        ExperimentConfig {
            experiment,
            params: ParamsConfig::default(),
            k: None,
            control_k: None,
            radii: None,
            radial_cells: None,
            grid_spacing: None,
            disk_grid: None,
            refinements: None,
            probe_cells: None,
            seed: 0,
            starts: None,
            perturbation: None,
            path: PathSettings::default(),
            output_dir: None,
            threads: 0,
        }
        .resolved()
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        // Unknown experiment ids get a dedicated error instead of serde's enum message.
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if let Some(id) = raw.get("experiment").and_then(|v| v.as_str()) {
            id.parse::<ExperimentId>()?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(raw)?;
        let cfg = cfg.resolved();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn resolved(mut self) -> Self {
        use ExperimentId::*;
        let e = self.experiment;
        let k = match e {
            OddKScaling => 1,
            _ => 2,
        };
        self.k.get_or_insert(k);
        if e == OddKScaling {
            self.control_k.get_or_insert(2);
        }
        let radii: Vec<f64> = match e {
            TwoMinimizers | DecompositionDiag => vec![30.0],
            Table1 | MountainPass => vec![25.0, 50.0, 100.0],
            AlphaScaling | OddKScaling => vec![1e2, 1e3, 1e4],
            Spectra => vec![50.0],
        };
        self.radii.get_or_insert(radii);
        match e {
            Table1 => {
                self.radial_cells.get_or_insert(4096);
            }
            AlphaScaling | OddKScaling => {
                self.grid_spacing.get_or_insert(0.05);
            }
            MountainPass => {
                self.grid_spacing.get_or_insert(25.0 / 1024.0);
            }
            TwoMinimizers => {
                self.disk_grid.get_or_insert([128, 128]);
                self.starts.get_or_insert(20);
                self.perturbation.get_or_insert(0.3);
            }
            DecompositionDiag => {
                self.disk_grid.get_or_insert([128, 64]);
                self.starts.get_or_insert(8);
                self.perturbation.get_or_insert(1e-3);
            }
            Spectra => {
                self.refinements.get_or_insert(vec![400, 800, 1600, 3200]);
                self.probe_cells.get_or_insert(vec![2048, 4096]);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Err(e) = self.material() {
            return bad(e.to_string());
        }
        if let Some(r) = &self.radii {
            if let Some(x) = r.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return bad(format!("radius {x} must be positive and finite"));
            }
        }
        if let Some(h) = self.grid_spacing {
            if !(h.is_finite() && h > 0.0) {
                return bad(format!("grid_spacing {h} must be positive"));
            }
        }
        if self.k == Some(0) {
            return bad("k must be nonzero".into());
        }
        if matches!(
            self.experiment,
            ExperimentId::TwoMinimizers | ExperimentId::MountainPass | ExperimentId::Table1 | ExperimentId::Spectra | ExperimentId::DecompositionDiag
        ) && self.k.is_some_and(|k| k % 2 != 0)
        {
            return bad(format!("{} needs an even k", self.experiment));
        }
        if self.experiment == ExperimentId::OddKScaling && self.control_k.is_some_and(|k| k % 2 != 0) {
            return bad("control_k must be even".into());
        }
        if let Some([nr, np]) = self.disk_grid {
            if nr < 4 || np < 8 {
                return bad(format!("disk_grid [{nr}, {np}] is too small"));
            }
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialParams, ldg_core::Error> {
        MaterialParams::new(self.params.a2, self.params.b2, self.params.c2)
    }

    pub fn k(&self) -> i32 {
        self.k.unwrap_or(2)
    }

    pub fn radii(&self) -> &[f64] {
        self.radii.as_deref().unwrap_or(&[])
    }

    /// Canonical JSON of the resolved configuration; the manifest hashes this.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_and_round_trip() {
        for id in ExperimentId::ALL {
            let cfg = ExperimentConfig::new(id);
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_canonical_json()).unwrap();
            assert_eq!(back, cfg, "{id}");
        }
    }

    #[test]
    fn minimal_file_resolves() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "table1"}"#).unwrap();
        assert_eq!(cfg.radii(), &[25.0, 50.0, 100.0]);
        assert_eq!(cfg.radial_cells, Some(4096));
        assert_eq!(cfg.k(), 2);
    }

    #[test]
    fn unknown_experiment_and_keys_are_rejected() {
        let e = ExperimentConfig::from_json(r#"{"experiment": "table2"}"#).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownExperiment(..)), "{e}");
        let e = ExperimentConfig::from_json(r#"{"experiment": "table1", "radius": 3}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Schema(..)), "{e}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment": "table1", "k": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "alpha_scaling", "radii": [10, -1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "spectra", "params": {"a2": -1, "b2": 1, "c2": 1}}"#).is_err());
    }

    #[test]
    fn empty_radius_list_is_kept() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "table1", "radii": []}"#).unwrap();
        assert!(cfg.radii().is_empty());
    }
}
