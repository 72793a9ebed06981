//! Tubular decomposition Q = Q_sharp(psi) + eps^2 P of minimisers and
//! perturbed fields around the harmonic limit.

use ldg_core::disk::{perturb, DiskField};
use ldg_core::limit::{decompose, decompose_disk, disk_samples, eps_norm, Decomposition, HarmonicLimit};
use ldg_core::radial::{escaped_minimizer, RadialGrid, RadialOptions};
use ldg_core::tol;
use ldg_core::QTensor;
use rayon::prelude::*;

use super::Ctx;
use crate::results::Row;

fn reconstruct_error(d: &Decomposition, limit: &HarmonicLimit, q: &[QTensor]) -> f64 {
    d.reconstruct(limit).iter().zip(q).map(|(a, b)| a.sub(b).norm()).fold(0.0, f64::max)
}

fn p_l2(field: &DiskField, d: &Decomposition) -> f64 {
    let g = field.grid();
    d.p.iter().enumerate().map(|(n, p)| g.volume(n / g.n_phi()) * p.norm().powi(2)).sum::<f64>().sqrt()
}

fn at_radius(ctx: &Ctx, radius: f64) -> Vec<Row> {
    let (k, p) = (ctx.k(), ctx.params);
    let r = Some(radius);
    let [n_r, n_phi] = ctx.cfg.disk_grid.unwrap_or([128, 64]);
    let nb = tol::NEIGHBOURHOOD_RADIUS_REL * p.s_plus();
    let mut rows = Vec::new();
    let Some(limit) = ctx.attempt(&mut rows, k, r, "limit", HarmonicLimit::new(true, k, p)) else { return rows };
    let Some(grid) = ctx.attempt(&mut rows, k, r, "limit", RadialGrid::new(radius, n_r)) else { return rows };

    // The limit itself: psi and P vanish.
    if let Some(exact) = ctx.attempt(&mut rows, k, r, "limit_psi_max", DiskField::lift(&limit.radial_profile(grid), n_phi)) {
        if let Some(d) = ctx.attempt(&mut rows, k, r, "limit_psi_max", decompose_disk(&limit, &exact, nb)) {
            let psi = d.psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let pe = d.p.iter().map(|q| q.norm()).fold(0.0, f64::max) * d.eps * d.eps;
            rows.push(
                ctx.row(k, r, "limit_psi_max", psi).target("psi = 0 for Q = Q_*").check("DECOMPOSITION_RECONSTRUCT", psi <= tol::DECOMPOSITION_RECONSTRUCT),
            );
            rows.push(
                ctx.row(k, r, "limit_eps2_p_max", pe).target("P = 0 for Q = Q_*").check("DECOMPOSITION_RECONSTRUCT", pe <= tol::DECOMPOSITION_RECONSTRUCT),
            );
        }
    }

    let Some(sol) = ctx.attempt(&mut rows, k, r, "minimiser", escaped_minimizer(&p, k, radius, n_r, true, &RadialOptions::default())) else { return rows };
    let Some(field) = ctx.attempt(&mut rows, k, r, "minimiser", DiskField::lift(&sol.profile, n_phi)) else { return rows };
    let (pts, qs) = disk_samples(&field);
    let Some(d) = ctx.attempt(&mut rows, k, r, "reconstruct_error", decompose(&limit, &pts, &qs, 1.0 / radius, nb)) else { return rows };
    let rec = reconstruct_error(&d, &limit, &qs);
    rows.push(
        ctx.row(k, r, "reconstruct_error", rec).target("Q_sharp(psi) + eps^2 P = Q").check("DECOMPOSITION_RECONSTRUCT", rec <= tol::DECOMPOSITION_RECONSTRUCT),
    );
    let comm = d.max_commutator(&limit);
    rows.push(ctx.row(k, r, "max_commutator", comm).target("[P, Q_*] = 0").check("NORMALITY", comm <= tol::NORMALITY));
    rows.push(ctx.row(k, r, "psi_max", d.psi.iter().map(|v| v.norm()).fold(0.0, f64::max)));
    rows.push(ctx.row(k, r, "P_L2", p_l2(&field, &d)));
    rows.push(ctx.row(k, r, "P_eps_norm", eps_norm(field.grid(), &d.p, d.eps)));

    // Round trip: rebuild Q from (psi, P) and split it again.
    let rebuilt = d.reconstruct(&limit);
    if let Some(d2) = ctx.attempt(&mut rows, k, r, "round_trip", decompose(&limit, &pts, &rebuilt, d.eps, nb)) {
        let dpsi = d.psi.iter().zip(&d2.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let dp = d.p.iter().zip(&d2.p).map(|(a, b)| a.sub(b).norm()).fold(0.0, f64::max);
        let err = dpsi.max(dp);
        rows.push(
            ctx.row(k, r, "round_trip", err)
                .target("decompose(reconstruct(psi, P)) = (psi, P)")
                .check("DECOMPOSITION_ROUND_TRIP", err <= tol::DECOMPOSITION_ROUND_TRIP),
        );
    }

    let amp = ctx.cfg.perturbation.unwrap_or(1e-3);
    let n = ctx.cfg.starts.unwrap_or(8) as u64;
    let trials: Vec<Result<f64, String>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let f = perturb(&field, amp, ctx.cfg.seed.wrapping_add(i));
            let (pts, qs) = disk_samples(&f);
            decompose(&limit, &pts, &qs, 1.0 / radius, nb).map(|d| reconstruct_error(&d, &limit, &qs)).map_err(|e| e.to_string())
        })
        .collect();
    let outside = trials.iter().filter(|t| t.is_err()).count();
    let worst = trials.iter().filter_map(|t| t.as_ref().ok()).copied().fold(0.0, f64::max);
    if n > 0 {
        rows.push(ctx.row(k, r, "perturbed_outside_neighbourhood", outside as f64));
        if outside < trials.len() {
            rows.push(
                ctx.row(k, r, "perturbed_reconstruct_error", worst)
                    .target("Q_sharp(psi) + eps^2 P = Q for perturbed fields")
                    .check("DECOMPOSITION_RECONSTRUCT", worst <= tol::DECOMPOSITION_RECONSTRUCT),
            );
        }
    }
    rows
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    ctx.cfg.radii().iter().flat_map(|&r| at_radius(ctx, r)).collect()
}
