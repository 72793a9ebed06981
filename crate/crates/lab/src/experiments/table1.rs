//! Energies of the escaped minimisers, the Z2 x O(2) minimiser and the
//! explicit-path maximum at each radius.

use std::f64::consts::PI;

use ldg_core::path::{explicit_path, path_energy_profile, MinimizerCache};
use ldg_core::radial::{alpha_r, escaped_minimizer, RadialOptions, RadialProfile};
use ldg_core::tol;
use rayon::prelude::*;

use super::{is_increasing, log_coefficient, tag, Ctx};
use crate::results::Row;

fn max_principle(ctx: &Ctx, radius: f64, name: &str, p: &RadialProfile) -> Row {
    let bound = 2.0 / 3.0 * ctx.params.s_plus().powi(2);
    let v = p.max_norm2();
    ctx.row(ctx.k(), Some(radius), &format!("{name}_max_norm2"), v)
        .target("max |w|^2 <= (2/3) s_plus^2")
        .check("MAX_PRINCIPLE_SLACK", v <= bound + tol::MAX_PRINCIPLE_SLACK)
}

fn at_radius(ctx: &Ctx, radius: f64) -> (Vec<Row>, Option<f64>) {
    let (k, p) = (ctx.k(), &ctx.params);
    let cells = ctx.cfg.radial_cells.unwrap_or(4096);
    let opts = RadialOptions::default();
    let s = p.s_plus();
    let bound = 4.0 * PI * k.abs() as f64 * s * s;
    let mut rows = Vec::new();
    let r = Some(radius);

    let plus = ctx.attempt(&mut rows, k, r, "E_plus", escaped_minimizer(p, k, radius, cells, true, &opts));
    let minus = ctx.attempt(&mut rows, k, r, "E_minus", escaped_minimizer(p, k, radius, cells, false, &opts));
    let mut e_plus = None;
    if let Some(sol) = &plus {
        e_plus = Some(sol.energy);
        rows.push(ctx.row(k, r, "E_plus", sol.energy).cells(cells).target("E(Q_R^+) <= 4 pi |k| s_plus^2").verdict(sol.energy <= bound));
        rows.push(ctx.row(k, r, "gap_to_bound", bound - sol.energy).cells(cells));
        let w = sol.profile.values()[0];
        rows.push(ctx.row(k, r, "w0_core_plus", w[0]).note("sign reported, not asserted"));
        rows.push(ctx.row(k, r, "w1_core_plus", w[1]).note("sign reported, not asserted"));
        rows.push(ctx.row(k, r, "w3_core_plus", w[3]));
        rows.push(max_principle(ctx, radius, "plus", &sol.profile));
        ctx.profile_artifacts(&format!("profiles/plus_{}", tag(radius)), &sol.profile);
    }
    if let Some(sol) = &minus {
        rows.push(ctx.row(k, r, "E_minus", sol.energy).cells(cells).target("E(Q_R^-) <= 4 pi |k| s_plus^2").verdict(sol.energy <= bound));
        rows.push(max_principle(ctx, radius, "minus", &sol.profile));
    }
    if let (Some(a), Some(b)) = (&plus, &minus) {
        let d =
            a.profile.z2_image().values().iter().zip(b.profile.values()).flat_map(|(x, y)| (0..5).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max) / s;
        rows.push(ctx.row(k, r, "z2_pair_distance", d).target("Q_R^- = J Q_R^+ J node-wise").check("Z2_PAIRING_REL", d <= tol::Z2_PAIRING_REL));
    }

    if let Some(a) = ctx.attempt(&mut rows, k, r, "E_str", alpha_r(p, k, radius, cells, &opts)) {
        rows.push(ctx.row(k, r, "E_str", a.value).cells(cells).target("E(Q_R^str) ~ (pi k^2 s_plus^2 / 2) ln R"));
        rows.push(ctx.row(k, r, "E_str_log_fraction", a.value / radius.ln() / log_coefficient(p, k)).note("E_str / (ln R pi s_plus^2 k^2 / 2)"));
        rows.push(max_principle(ctx, radius, "str", &a.profile));
        if let Some(e) = e_plus {
            rows.push(ctx.row(k, r, "str_minus_plus", a.value - e).target("E(Q_R^str) > E(Q_R^+)").verdict(a.value > e));
        }
        ctx.profile_artifacts(&format!("profiles/str_{}", tag(radius)), &a.profile);
    }

    let r0 = ctx.cfg.path.r0;
    if r0 < radius {
        let cache = MinimizerCache::build(p, k, radius, cells, r0, ctx.cfg.path.continuation_ratio, &opts);
        if let Some(cache) = ctx.attempt(&mut rows, k, r, "path_max", cache) {
            if let Some(path) = ctx.attempt(&mut rows, k, r, "path_max", explicit_path(&cache, r0, ctx.cfg.path.samples)) {
                let prof = path_energy_profile(&path);
                rows.push(ctx.row(k, r, "path_max", prof.max).cells(cells).target("bounded in R").note(format!("argmax t = {}", path.t[prof.argmax])));
            }
        }
    } else {
        ctx.warn(format!("path maximum skipped at R = {radius}: R0 = {r0} is not below R"));
    }
    (rows, e_plus)
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    let radii = ctx.cfg.radii();
    let per: Vec<(Vec<Row>, Option<f64>)> = radii.par_iter().map(|&r| at_radius(ctx, r)).collect();
    let mut rows: Vec<Row> = per.iter().flat_map(|p| p.0.clone()).collect();
    let energies: Vec<f64> = per.iter().filter_map(|p| p.1).collect();
    if radii.len() >= 2 && energies.len() == radii.len() {
        let k = ctx.k();
        let s = ctx.params.s_plus();
        let bound = 4.0 * PI * k.abs() as f64 * s * s;
        let gaps: Vec<f64> = energies.iter().map(|e| bound - e).collect();
        rows.push(
            ctx.row(k, None, "E_plus_increasing", energies[energies.len() - 1] - energies[0])
                .target("E(Q_R^+) increasing in R")
                .verdict(is_increasing(&energies)),
        );
        let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
        rows.push(ctx.row(k, None, "gap_shrinking", gaps[gaps.len() - 1]).target("4 pi |k| s_plus^2 - E(Q_R^+) decreasing in R").verdict(shrinking));
    }
    rows
}
