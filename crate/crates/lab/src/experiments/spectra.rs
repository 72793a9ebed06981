//! L_par spectra under refinement, L_perp at sample points, and Hessian
//! probes of the symmetric critical points.

use ldg_core::limit::HarmonicLimit;
use ldg_core::radial::{alpha_r, escaped_minimizer, RadialOptions};
use ldg_core::spectra::{hessian_smallest_radial, l_parallel_spectrum, l_perp_point_eigs, n3_profile, Constraint, ProbeOptions, Subspace};
use ldg_core::tol;
use nalgebra::Vector2;
use rayon::prelude::*;

use super::{is_increasing, Ctx};
use crate::formats::{self, SpectralReportJson};
use crate::results::Row;

/// Sample points of the L_perp check: a polar lattice inside the unit disk.
fn perp_points() -> Vec<Vector2<f64>> {
    (0..10)
        .flat_map(|i| (0..12).map(move |j| (0.1 * i as f64 + 0.03, j as f64 * std::f64::consts::PI / 6.0 + 0.1)))
        .map(|(r, t)| Vector2::new(r * t.cos(), r * t.sin()))
        .collect()
}

fn refinement_rows(ctx: &Ctx) -> Vec<Row> {
    let k = ctx.k();
    let cells = ctx.cfg.refinements.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let mut scalar = Vec::new();
    let mut tangent = Vec::new();
    let reports: Vec<_> =
        cells.par_iter().map(|&n| (n, l_parallel_spectrum(k, Constraint::None, n, 3), l_parallel_spectrum(k, Constraint::Tangent, n, 3))).collect();
    for (n, sc, tg) in reports {
        if let Some(s) = ctx.attempt(&mut rows, k, None, "lambda1_scalar", sc) {
            let corr = s.correlation_with(|r| n3_profile(k, r));
            rows.push(ctx.row(k, None, "lambda1_scalar", s.lambda1()).cells(n));
            rows.push(ctx.row(k, None, "correlation_n3", corr).cells(n));
            rows.push(ctx.row(k, None, "max_residual_scalar", s.residuals.iter().copied().fold(0.0, f64::max)).cells(n));
            ctx.artifact(&format!("spectra/scalar_N{n}.json"), |f| formats::write_json(f, &SpectralReportJson::from(&s)));
            scalar.push((n, s.lambda1(), corr));
        }
        if let Some(t) = ctx.attempt(&mut rows, k, None, "lambda1_tangent", tg) {
            rows.push(ctx.row(k, None, "lambda1_tangent", t.lambda1()).cells(n).note(format!("mode m = {}", t.modes[0])));
            ctx.artifact(&format!("spectra/tangent_N{n}.json"), |f| formats::write_json(f, &SpectralReportJson::from(&t)));
            tangent.push((n, t.lambda1()));
        }
    }
    if let Some(&(n, l1, corr)) = scalar.last() {
        rows.push(
            ctx.row(k, None, "scalar_ground_state_abs", l1.abs())
                .cells(n)
                .target("|lambda_1| of the scalar L_par <= 5e-3")
                .check("L_PAR_ZERO", l1.abs() <= tol::L_PAR_ZERO),
        );
        rows.push(
            ctx.row(k, None, "scalar_ground_state_correlation", corr)
                .cells(n)
                .target("ground state correlates with (1 - r^k)/(1 + r^k)")
                .check("L_PAR_CORRELATION", corr >= tol::L_PAR_CORRELATION),
        );
    }
    if let Some(&(n, l1)) = tangent.last() {
        rows.push(
            ctx.row(k, None, "tangent_ground_state", l1)
                .cells(n)
                .target("constrained lambda_1 >= 0.05")
                .check("L_PAR_CONSTRAINED_MIN", l1 >= tol::L_PAR_CONSTRAINED_MIN),
        );
        let vals: Vec<f64> = tangent.iter().map(|t| t.1).collect();
        if vals.len() >= 2 {
            rows.push(
                ctx.row(k, None, "tangent_increasing", vals[vals.len() - 1] - vals[0])
                    .target("constrained lambda_1 increasing under refinement")
                    .verdict(is_increasing(&vals)),
            );
        }
    }
    rows
}

fn perp_rows(ctx: &Ctx) -> Vec<Row> {
    let k = ctx.k();
    let p = ctx.params;
    let mut rows = Vec::new();
    let Some(limit) = ctx.attempt(&mut rows, k, None, "l_perp_max_error", HarmonicLimit::new(true, k, p)) else { return rows };
    let s = p.s_plus();
    let mut want = [p.b2() * s, p.b2() * s, 2.0 * p.a2() + p.b2() * s / 3.0];
    want.sort_by(f64::total_cmp);
    let err = perp_points().iter().map(|x| l_perp_point_eigs(&limit, x).iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
    rows.push(
        ctx.row(k, None, "l_perp_max_error", err)
            .target("L_perp eigenvalues {2 a2 + b2 s_plus / 3, b2 s_plus, b2 s_plus} at every point")
            .check("EXACT", err <= tol::EXACT),
    );
    rows
}

fn probe_rows(ctx: &Ctx, radius: f64) -> Vec<Row> {
    let (k, p) = (ctx.k(), &ctx.params);
    let r = Some(radius);
    let cells = ctx.cfg.probe_cells.clone().unwrap_or_default();
    let opts = RadialOptions::default();
    let probe = ProbeOptions::default();
    let per: Vec<Vec<Row>> = cells
        .par_iter()
        .map(|&n| {
            let mut rows = Vec::new();
            if let Some(a) = ctx.attempt(&mut rows, k, r, "lambda_min_str_w3", alpha_r(p, k, radius, n, &opts)) {
                if let Some(h) = ctx.attempt(&mut rows, k, r, "lambda_min_str_w3", hessian_smallest_radial(&a.profile, Subspace::W3, 2, &probe)) {
                    rows.push(
                        ctx.row(k, r, "lambda_min_str_w3", h.lambda_min())
                            .cells(n)
                            .target("lambda_min < 0 for Q_R^str in the w3 direction")
                            .verdict(h.lambda_min() < 0.0),
                    );
                    rows.extend(probe_details(ctx, radius, n, "str_w3", &h));
                }
            }
            if let Some(sol) = ctx.attempt(&mut rows, k, r, "lambda_min_plus_o2", escaped_minimizer(p, k, radius, n, true, &opts)) {
                if let Some(h) = ctx.attempt(&mut rows, k, r, "lambda_min_plus_o2", hessian_smallest_radial(&sol.profile, Subspace::O2, 2, &probe)) {
                    rows.push(
                        ctx.row(k, r, "lambda_min_plus_o2", h.lambda_min())
                            .cells(n)
                            .target("lambda_min >= -1e-6 for Q_R^+ in the O(2) class")
                            .check("HESSIAN_NONNEG", h.lambda_min() >= -tol::HESSIAN_NONNEG),
                    );
                    rows.extend(probe_details(ctx, radius, n, "plus_o2", &h));
                }
            }
            rows
        })
        .collect();
    let mut rows: Vec<Row> = per.concat();
    let str_vals: Vec<f64> = rows.iter().filter(|r| r.quantity == "lambda_min_str_w3" && r.value.is_finite()).map(|r| r.value).collect();
    if str_vals.len() >= 2 && str_vals.len() == cells.len() {
        let stable = str_vals.iter().all(|v| *v < 0.0);
        rows.push(ctx.row(k, r, "str_sign_stable", stable as u8 as f64).target("sign of lambda_min(Q_R^str) unchanged under refinement").verdict(stable));
    }
    rows
}

fn probe_details(ctx: &Ctx, radius: f64, n: usize, name: &str, h: &ldg_core::spectra::HessianProbe) -> Vec<Row> {
    let (k, r) = (ctx.k(), Some(radius));
    let mut rows = vec![
        ctx.row(k, r, &format!("{name}_second"), h.eigenvalues.get(1).copied().unwrap_or(f64::NAN)).cells(n),
        ctx.row(k, r, &format!("{name}_rayleigh_mismatch"), h.rayleigh_mismatch())
            .cells(n)
            .target("witness Rayleigh quotient matches the reported eigenvalue")
            .check("RAYLEIGH_MATCH_REL", h.rayleigh_mismatch() <= tol::RAYLEIGH_MATCH_REL),
    ];
    if let Some(ex) = &h.exact {
        rows.push(
            ctx.row(k, r, &format!("{name}_exact_difference"), (ex[0] - h.lambda_min()).abs()).cells(n).note("against bisection on the assembled Hessian"),
        );
    }
    rows
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    let mut rows = refinement_rows(ctx);
    rows.extend(perp_rows(ctx));
    for &r in ctx.cfg.radii() {
        rows.extend(probe_rows(ctx, r));
    }
    rows
}
