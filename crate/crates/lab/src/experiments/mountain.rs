//! Explicit mountain-pass path, its maximum against alpha_R, and the
//! string-relaxed saddle.

use ldg_core::disk::{symmetry_diagnostics, DiskField};
use ldg_core::limit::{decompose_disk, HarmonicLimit};
use ldg_core::path::{conformal_check, explicit_path, path_energy_profile, string_relax, MinimizerCache, PathConfig, RelaxedPath};
use ldg_core::radial::{alpha_r, RadialOptions, RadialProfile};
use ldg_core::tol;
use rayon::prelude::*;

use super::{cells_for, tag, Ctx};
use crate::formats;
use crate::results::Row;

/// Angular nodes used when lifting path images to the disk.
const LIFT_N_PHI: usize = 32;
/// Path parameter of the conformal-invariance check.
const CONFORMAL_T: f64 = 1.5;

struct RadiusResult {
    rows: Vec<Row>,
    path_max: Option<f64>,
    alpha: Option<f64>,
}

/// L2 norm of the normal part P relative to the closer of the two limits.
fn normal_norm(field: &DiskField, params: &ldg_core::MaterialParams) -> Result<f64, String> {
    let s = params.s_plus();
    let g = field.grid();
    let mut errors = Vec::new();
    let mut best: Option<f64> = None;
    for positive in [true, false] {
        let limit = HarmonicLimit::new(positive, field.k(), *params).map_err(|e| e.to_string())?;
        match decompose_disk(&limit, field, tol::NEIGHBOURHOOD_RADIUS_REL * s) {
            Ok(d) => {
                let sum: f64 = d.p.iter().enumerate().map(|(n, p)| g.volume(n / g.n_phi()) * p.norm().powi(2)).sum();
                let v = sum.sqrt();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
            Err(e) => errors.push(format!("{} limit: {e}", if positive { "+" } else { "-" })),
        }
    }
    best.ok_or_else(|| errors.join("; "))
}

fn saddle_rows(ctx: &Ctx, radius: f64, relaxed: &RelaxedPath, init_max: f64, minus: &RadialProfile, plus: &RadialProfile) -> Vec<Row> {
    let (k, r) = (ctx.k(), Some(radius));
    let mut rows = vec![
        ctx.row(k, r, "saddle_energy", relaxed.saddle_energy),
        ctx.row(k, r, "saddle_index", relaxed.saddle_index as f64).note("negative eigenvalues of the O(2)-class Hessian"),
        ctx.row(k, r, "string_sweeps", relaxed.sweeps as f64),
        ctx.row(k, r, "saddle_gradient", relaxed.saddle_gradient)
            .target("scaled gradient of the climbing image below tolerance")
            .check("SADDLE_GRADIENT", relaxed.saddle_gradient <= tol::SADDLE_GRADIENT),
    ];
    let ends = relaxed.path.energies[0].max(relaxed.path.energies[relaxed.path.len() - 1]);
    let descent = relaxed.saddle_energy <= init_max && relaxed.saddle_energy >= ends;
    rows.push(
        ctx.row(k, r, "saddle_minus_initial_max", relaxed.saddle_energy - init_max)
            .target("max(E(Q^-), E(Q^+)) <= saddle energy <= initial path max")
            .verdict(descent),
    );
    let mirrored = relaxed.path.act_z2();
    let same = mirrored.energies.iter().zip(&relaxed.path.energies).all(|(a, b)| a.to_bits() == b.to_bits());
    rows.push(ctx.row(k, r, "z2_image_energy_identity", same as u8 as f64).target("Z2 image of the path has the identical energy profile").verdict(same));

    match DiskField::lift(&relaxed.saddle, LIFT_N_PHI) {
        Ok(field) => {
            let sym = symmetry_diagnostics(&field);
            let w3 = sym.z2_defect / sym.field_norm;
            let so2 = sym.so2_defect / sym.field_norm;
            rows.push(ctx.row(k, r, "saddle_w3_rel", w3).target("w3 of the saddle not identically 0").check("ESCAPE_DEFECT_REL", w3 >= tol::ESCAPE_DEFECT_REL));
            rows.push(ctx.row(k, r, "saddle_so2_defect_rel", so2).target("so2_defect <= 1e-6 |Q|").check("SO2_DEFECT_REL", so2 <= tol::SO2_DEFECT_REL));
            let norms: Vec<Result<f64, String>> = [&field]
                .into_iter()
                .map(|f| normal_norm(f, &ctx.params))
                .chain([minus, plus].into_iter().map(|p| DiskField::lift(p, LIFT_N_PHI).map_err(|e| e.to_string()).and_then(|f| normal_norm(&f, &ctx.params))))
                .collect();
            match (&norms[0], &norms[1], &norms[2]) {
                (Ok(saddle), Ok(m), Ok(p)) => {
                    let ends = m.max(*p);
                    rows.push(ctx.row(k, r, "P_norm_saddle", *saddle));
                    rows.push(ctx.row(k, r, "P_norm_endpoints", ends));
                    rows.push(ctx.row(k, r, "P_norm_excess", saddle - ends).target("|P_saddle|_L2 > max |P_+-|_L2").verdict(*saddle > ends));
                }
                _ => {
                    let msg: Vec<String> =
                        norms.iter().zip(["saddle", "Q^-", "Q^+"]).filter_map(|(n, w)| n.as_ref().err().map(|e| format!("{w}: {e}"))).collect();
                    rows.push(ctx.fail(k, r, "P_norm_excess", msg.join(" | ")));
                }
            }
        }
        Err(e) => rows.push(ctx.fail(k, r, "saddle_w3_rel", e)),
    }
    rows
}

fn at_radius(ctx: &Ctx, radius: f64) -> RadiusResult {
    let (k, p) = (ctx.k(), &ctx.params);
    let h = ctx.cfg.grid_spacing.unwrap_or(25.0 / 1024.0);
    let cells = cells_for(radius, h);
    let settings = ctx.cfg.path;
    let opts = RadialOptions::default();
    let r = Some(radius);
    let mut out = RadiusResult { rows: Vec::new(), path_max: None, alpha: None };
    let rows = &mut out.rows;

    if let Some(a) = ctx.attempt(rows, k, r, "alpha_R", alpha_r(p, k, radius, cells, &opts)) {
        rows.push(ctx.row(k, r, "alpha_R", a.value).cells(cells));
        out.alpha = Some(a.value);
    }
    let cfg = PathConfig { r0: settings.r0, images: settings.images, max_sweeps: settings.max_sweeps, ..PathConfig::default() };
    if let Err(e) = cfg.validate(radius) {
        rows.push(ctx.fail(k, r, "path_max", e));
        return out;
    }
    let Some(cache) = ctx.attempt(rows, k, r, "path_max", MinimizerCache::build(p, k, radius, cells, settings.r0, settings.continuation_ratio, &opts)) else {
        return out;
    };
    let plus = cache.outer().clone();
    let minus = plus.z2_image();
    if let Some(path) = ctx.attempt(rows, k, r, "path_max", explicit_path(&cache, settings.r0, settings.samples)) {
        let prof = path_energy_profile(&path);
        out.path_max = Some(prof.max);
        rows.push(ctx.row(k, r, "path_max", prof.max).cells(cells).note(format!("argmax t = {}", path.t[prof.argmax])));
        rows.push(ctx.row(k, r, "path_barrier", prof.barrier));
        let err = path.endpoint_error(&minus, &plus);
        rows.push(ctx.row(k, r, "endpoint_error", err).target("path ends at Q_R^- and Q_R^+").check("PATH_ENDPOINT", err <= tol::PATH_ENDPOINT));
    }
    if let Some((annulus, preimage)) = ctx.attempt(rows, k, r, "conformal_mismatch", conformal_check(CONFORMAL_T, &cache, settings.r0)) {
        let rel = (annulus - preimage).abs() / preimage.abs();
        rows.push(
            ctx.row(k, r, "conformal_mismatch", rel)
                .target("Dirichlet energy of the inverted annulus = that of its pre-image")
                .check("CONFORMAL_REL", rel <= tol::CONFORMAL_REL),
        );
    }
    if !settings.relax {
        return out;
    }
    let Some(init) = ctx.attempt(rows, k, r, "saddle_energy", explicit_path(&cache, settings.r0, settings.images)) else { return out };
    let init_max = path_energy_profile(&init).max;
    let relaxed = match string_relax(&init, &cfg) {
        Ok(rel) => rel,
        Err(nc) => {
            rows.push(ctx.fail(k, r, "string_relax", &nc));
            nc.last
        }
    };
    rows.extend(saddle_rows(ctx, radius, &relaxed, init_max, &minus, &plus));
    let dir = format!("paths/relaxed_{}", tag(radius));
    let meta = serde_json::json!({ "radius": radius, "cells": cells, "r0": settings.r0, "images": settings.images, "sweeps": relaxed.sweeps });
    match formats::write_path_dir(&ctx.out.join(&dir), &relaxed.path, meta) {
        Ok(files) => files.into_iter().for_each(|f| ctx.record(format!("{dir}/{f}"))),
        Err(e) => ctx.warn(format!("artifact {dir}: {e:#}")),
    }
    ctx.profile_artifacts(&format!("profiles/saddle_{}", tag(radius)), &relaxed.saddle);
    out
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    let k = ctx.k();
    let radii = ctx.cfg.radii();
    let per: Vec<RadiusResult> = radii.par_iter().map(|&r| at_radius(ctx, r)).collect();
    let mut rows: Vec<Row> = per.iter().flat_map(|p| p.rows.clone()).collect();
    let maxima: Option<Vec<f64>> = per.iter().map(|p| p.path_max).collect();
    let alphas: Option<Vec<f64>> = per.iter().map(|p| p.alpha).collect();
    if let (Some(m), Some(a)) = (maxima, alphas) {
        if m.len() >= 2 {
            let (lo, hi) = (m.iter().copied().fold(f64::INFINITY, f64::min), m.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let variation = (hi - lo) / lo;
            rows.push(
                ctx.row(k, None, "path_max_variation", variation)
                    .target("explicit-path maximum varies by at most 10% across R")
                    .check("PATH_MAX_VARIATION_REL", variation <= tol::PATH_MAX_VARIATION_REL),
            );
            let growth = a[a.len() - 1] / a[0];
            rows.push(
                ctx.row(k, None, "alpha_growth", growth).target("alpha_R grows by at least 2x across R").check("ALPHA_GROWTH", growth >= tol::ALPHA_GROWTH),
            );
        }
        if let (Some(&ml), Some(&al)) = (m.last(), a.last()) {
            rows.push(
                ctx.row(k, radii.last().copied(), "alpha_minus_path_max", al - ml).target("explicit-path maximum < alpha_R at the largest R").verdict(ml < al),
            );
        }
    }
    rows
}
