//! Minimal energies against ln R for an odd winding and an even control.

use std::f64::consts::PI;

use ldg_core::disk::{disk_energy_gradient, scaled_gradient_max, DiskField};
use ldg_core::path::{odd_k_energy_scan, EnergyScan};
use ldg_core::radial::{alpha_r, RadialOptions};
use ldg_core::tol;
use rayon::prelude::*;

use super::{cells_for, log_coefficient, Ctx};
use crate::results::Row;

/// Angular nodes of the 2D spot check.
const SPOT_N_PHI: usize = 32;

fn scan_rows(ctx: &Ctx, scan: &EnergyScan, h: f64) -> Vec<Row> {
    let k = scan.k;
    let mut rows: Vec<Row> = scan.rows.iter().map(|r| ctx.row(k, Some(r.radius), "E_min", r.energy).cells(cells_for(r.radius, h))).collect();
    rows.push(ctx.row(k, None, "slope", scan.slope));
    rows.push(ctx.row(k, None, "intercept", scan.intercept));
    rows
}

/// Lifts the odd-k minimiser at the smallest radius to the disk and compares.
fn spot_check(ctx: &Ctx, k: i32, radius: f64, h: f64) -> Vec<Row> {
    let mut rows = Vec::new();
    let r = Some(radius);
    let Some(a) = ctx.attempt(&mut rows, k, r, "spot_check", alpha_r(&ctx.params, k, radius, cells_for(radius, h), &RadialOptions::default())) else {
        return rows;
    };
    let Some(field) = ctx.attempt(&mut rows, k, r, "spot_check", DiskField::lift(&a.profile, SPOT_N_PHI)) else { return rows };
    let Some((e, g)) = ctx.attempt(&mut rows, k, r, "spot_check", disk_energy_gradient(&field)) else { return rows };
    let rel = (e - a.value).abs() / a.value.abs();
    rows.push(
        ctx.row(k, r, "disk_vs_radial_energy", rel).target("2D energy of the lift = radial energy").check("DISK_REDUCTION_REL", rel <= tol::DISK_REDUCTION_REL),
    );
    rows.push(ctx.row(k, r, "lifted_scaled_gradient", scaled_gradient_max(&field, &g)).note("2D gradient of the lifted radial minimiser"));
    rows
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    let p = ctx.params;
    let k = ctx.k();
    let control = ctx.cfg.control_k.unwrap_or(2);
    let h = ctx.cfg.grid_spacing.unwrap_or(0.05);
    let radii = ctx.cfg.radii();
    if radii.is_empty() {
        return Vec::new();
    }
    let opts = RadialOptions::default();
    let scans: Vec<_> = [k, control].par_iter().map(|&kk| odd_k_energy_scan(&p, kk, radii, h, &opts)).collect();
    let mut rows = Vec::new();
    let s2 = p.s_plus().powi(2);
    let mut it = scans.into_iter();

    if let Some(scan) = ctx.attempt(&mut rows, k, None, "slope", it.next().expect("two scans")) {
        rows.extend(scan_rows(ctx, &scan, h));
        if radii.len() >= 2 {
            if k.abs() == 1 {
                let target = PI / 2.0 * s2;
                let rel = (scan.slope - target).abs() / target;
                rows.push(ctx.row(k, None, "slope_vs_half_pi_s2", rel).target("slope = (pi/2) s_plus^2").check("ODD_K_SLOPE_REL", rel <= tol::ODD_K_SLOPE_REL));
            }
            let target = log_coefficient(&p, k);
            let rel = (scan.slope - target).abs() / target;
            rows.push(
                ctx.row(k, None, "slope_vs_alpha_slope", rel).target("slope = pi s_plus^2 k^2 / 2").check("SLOPE_MATCH_REL", rel <= tol::SLOPE_MATCH_REL),
            );
        }
    }
    if let Some(scan) = ctx.attempt(&mut rows, control, None, "relative_range", it.next().expect("two scans")) {
        rows.extend(scan_rows(ctx, &scan, h));
        let range = scan.relative_range();
        rows.push(
            ctx.row(control, None, "relative_range", range)
                .target("(max - min) / mean of E_min < 0.05")
                .check("EVEN_K_RANGE_REL", range < tol::EVEN_K_RANGE_REL),
        );
    }
    rows.extend(spot_check(ctx, k, radii[0], h));
    rows
}
