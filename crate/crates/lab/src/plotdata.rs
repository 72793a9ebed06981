//! Two-column series for external plotting, with a JSON axis descriptor.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::results::{ResultTable, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// (ln R, alpha_R).
    AlphaScaling,
    /// (ln R, minimal energy) for k = 1.
    OddKScaling,
    /// (radial cells, scalar lambda_1).
    Spectra,
}

impl PlotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::AlphaScaling => "alpha_scaling",
            PlotKind::OddKScaling => "odd_k_scaling",
            PlotKind::Spectra => "spectra",
        }
    }

    fn axes(&self) -> (&'static str, &'static str) {
        match self {
            PlotKind::AlphaScaling => ("ln R", "alpha_R"),
            PlotKind::OddKScaling => ("ln R", "E_min (k = 1)"),
            PlotKind::Spectra => ("radial cells", "lambda_1 (scalar L_par)"),
        }
    }

    fn point(&self, r: &Row) -> Option<(f64, f64)> {
        match self {
            PlotKind::AlphaScaling if r.experiment == "alpha_scaling" && r.quantity == "alpha_R" => Some((r.radius?.ln(), r.value)),
            PlotKind::OddKScaling if r.experiment == "odd_k_scaling" && r.k == 1 && r.quantity == "E_min" => Some((r.radius?.ln(), r.value)),
            PlotKind::Spectra if r.experiment == "spectra" && r.quantity == "lambda1_scalar" => Some((r.cells? as f64, r.value)),
            _ => None,
        }
    }

    /// The plot kind an experiment produces, if any.
    pub fn for_experiment(id: &str) -> Option<PlotKind> {
        [PlotKind::AlphaScaling, PlotKind::OddKScaling, PlotKind::Spectra].into_iter().find(|k| k.name() == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisDescriptor {
    pub kind: String,
    pub data: String,
    pub x: String,
    pub y: String,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotOutput {
    pub data: PathBuf,
    pub descriptor: PathBuf,
    pub points: usize,
    /// Set when the table held no rows of this kind; the data file is empty.
    pub warning: Option<String>,
}

pub fn emit_plotdata(table: &ResultTable, kind: PlotKind, dir: &Path) -> anyhow::Result<PlotOutput> {
    let pts: Vec<(f64, f64)> = table.rows.iter().filter(|r| r.value.is_finite()).filter_map(|r| kind.point(r)).collect();
    let data = dir.join(format!("{}.dat", kind.name()));
    let descriptor = dir.join(format!("{}.axes.json", kind.name()));
    let mut text = String::new();
    for (x, y) in &pts {
        writeln!(text, "{x} {y}").expect("writing to a String");
    }
    std::fs::write(&data, text)?;
    let (x, y) = kind.axes();
    let desc = AxisDescriptor {
        kind: kind.name().into(),
        data: data.file_name().expect("file").to_string_lossy().into_owned(),
        x: x.into(),
        y: y.into(),
        points: pts.len(),
    };
    crate::formats::write_json(&descriptor, &desc)?;
    let warning = pts.is_empty().then(|| format!("plot data {}: no rows of this kind, wrote an empty file", kind.name()));
    Ok(PlotOutput { data, descriptor, points: pts.len(), warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_series_uses_log_radius() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::default();
        t.push(Row::info("alpha_scaling", 2, Some(100.0), "alpha_R", 40.0));
        t.push(Row::info("alpha_scaling", 2, Some(1000.0), "alpha_R", 55.0));
        t.push(Row::info("alpha_scaling", 2, Some(1000.0), "alpha_over_lnR", 8.0));
        let out = emit_plotdata(&t, PlotKind::AlphaScaling, dir.path()).unwrap();
        assert_eq!(out.points, 2);
        assert!(out.warning.is_none());
        let text = std::fs::read_to_string(&out.data).unwrap();
        let first: Vec<f64> = text.lines().next().unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, vec![100f64.ln(), 40.0]);
    }

    #[test]
    fn missing_rows_give_empty_file_and_warning() {
        let dir = tempfile::tempdir().unwrap();
        let out = emit_plotdata(&ResultTable::default(), PlotKind::Spectra, dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(&out.data).unwrap(), "");
        assert!(out.warning.is_some());
    }
}
