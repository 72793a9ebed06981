//! Result rows and their CSV / JSON serialisations.

use std::io::Write;
use std::path::Path;

use ldg_core::tol;
use serde::{Deserialize, Serialize};

/// One measured quantity. Rows with `pass == None` are informational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub k: i32,
    /// Disk radius, absent for rows that summarise several radii.
    pub radius: Option<f64>,
    /// Radial cell count where the quantity depends on a grid study.
    pub cells: Option<usize>,
    pub quantity: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    /// Name of the constant in `ldg_core::tol` that `tolerance` comes from.
    pub tolerance_id: Option<String>,
    /// The mathematical statement the value is checked against.
    pub target: String,
    pub pass: Option<bool>,
    pub note: String,
}

impl Row {
    pub fn info(experiment: &str, k: i32, radius: Option<f64>, quantity: &str, value: f64) -> Self {
        Row {
            experiment: experiment.to_string(),
            k,
            radius,
            cells: None,
            quantity: quantity.to_string(),
            value,
            tolerance: None,
            tolerance_id: None,
            target: String::new(),
            pass: None,
            note: String::new(),
        }
    }

    pub fn cells(mut self, n: usize) -> Self {
        self.cells = Some(n);
        self
    }

    pub fn target(mut self, t: &str) -> Self {
        self.target = t.to_string();
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = n.into();
        self
    }

    /// Attaches a pass/fail verdict computed against the named tolerance.
    pub fn check(mut self, tolerance_id: &str, pass: bool) -> Self {
        let t = tolerance(tolerance_id).unwrap_or_else(|| panic!("{tolerance_id} is not in the tolerance table"));
        self.tolerance = Some(t);
        self.tolerance_id = Some(tolerance_id.to_string());
        self.pass = Some(pass && self.value.is_finite());
        self
    }

    /// A verdict without a numeric tolerance (orderings, sign tests).
    pub fn verdict(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }

    pub fn failure(experiment: &str, k: i32, radius: Option<f64>, quantity: &str, message: impl Into<String>) -> Self {
        Row::info(experiment, k, radius, quantity, f64::NAN).verdict(false).note(message)
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Looks up a threshold of `ldg_core::tol` by its constant name.
pub fn tolerance(id: &str) -> Option<f64> {
    macro_rules! table {
        ($($name:ident),* $(,)?) => {
            match id {
                $(stringify!($name) => Some(tol::$name),)*
                _ => None,
            }
        };
    }
    table!(
        FRAME_ORTHONORMAL,
        FRAME_DERIVATIVE_FD,
        PARAM_IDENTITY_REL,
        W_ROUND_TRIP,
        BULK_NONNEG,
        EXACT,
        RADIAL_GRADIENT,
        ODE_RESIDUAL_REL,
        RADIAL_GRADIENT_FD_REL,
        MAX_PRINCIPLE_SLACK,
        Z2_PAIRING_REL,
        DISK_GRADIENT,
        DISK_GRADIENT_FD_REL,
        DISK_REDUCTION_REL,
        MULTISTART_NODEWISE_REL,
        SO2_DEFECT_REL,
        ESCAPE_DEFECT_REL,
        DECOMPOSITION_RECONSTRUCT,
        DECOMPOSITION_ROUND_TRIP,
        NORMALITY,
        NEIGHBOURHOOD_RADIUS_REL,
        L_PAR_ZERO,
        L_PAR_CORRELATION,
        L_PAR_CONSTRAINED_MIN,
        EIGEN_RESIDUAL_REL,
        HESSIAN_NONNEG,
        RAYLEIGH_MATCH_REL,
        PATH_ENDPOINT,
        CONFORMAL_REL,
        PATH_MAX_VARIATION_REL,
        ALPHA_GROWTH,
        SADDLE_GRADIENT,
        ALPHA_RATIO_FRACTION,
        ODD_K_SLOPE_REL,
        EVEN_K_RANGE_REL,
        SLOPE_MATCH_REL,
    )
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.failed())
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn find(&self, quantity: &str, radius: Option<f64>) -> Option<&Row> {
        self.rows.iter().find(|r| r.quantity == quantity && r.radius == radius)
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if self.rows.is_empty() {
            // Keep the header so downstream tools can still read the file.
            w.write_record(["experiment", "k", "radius", "cells", "quantity", "value", "tolerance", "tolerance_id", "target", "pass", "note"])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<Result<Vec<Row>, _>>()?;
        Ok(ResultTable { rows })
    }

    pub fn write_json(&self, path: &Path) -> anyhow::Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_tolerance_resolves() {
        assert_eq!(tolerance("HESSIAN_NONNEG"), Some(tol::HESSIAN_NONNEG));
        assert_eq!(tolerance("NOPE"), None);
    }

    #[test]
    fn nan_values_never_pass() {
        let r = Row::info("x", 2, None, "q", f64::NAN).check("EXACT", true);
        assert!(r.failed());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::default();
        t.push(Row::info("table1", 2, Some(25.0), "E_plus", 28.02).check("EXACT", true).target("E <= 4 pi |k| s_plus^2"));
        t.push(Row::info("spectra", 2, None, "lambda1", -3.2e-7).cells(3200));
        let p = dir.path().join("t.csv");
        t.write_csv(&p).unwrap();
        assert_eq!(ResultTable::read_csv(&p).unwrap(), t);
    }
}
