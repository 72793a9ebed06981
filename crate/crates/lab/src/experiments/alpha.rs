//! Growth of the Z2 x O(2) minimal energy alpha_R with ln R.

use ldg_core::radial::{alpha_r, RadialOptions};
use ldg_core::tol;
use rayon::prelude::*;

use super::{cells_for, is_increasing, log_coefficient, tag, Ctx};
use crate::formats;
use crate::results::Row;

pub fn run(ctx: &Ctx) -> Vec<Row> {
    let (k, p) = (ctx.k(), &ctx.params);
    let h = ctx.cfg.grid_spacing.unwrap_or(0.05);
    let lim = log_coefficient(p, k);
    let radii = ctx.cfg.radii();
    let opts = RadialOptions::default();
    let solved: Vec<_> = radii
        .par_iter()
        .map(|&r| {
            let res = alpha_r(p, k, r, cells_for(r, h), &opts);
            if let Ok(a) = &res {
                ctx.artifact(&format!("profiles/alpha_{}.ldg2", tag(r)), |f| formats::write_ldg2(f, &formats::encode_radial(&a.profile)));
            }
            (r, res)
        })
        .collect();

    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for (r, res) in solved {
        let Some(a) = ctx.attempt(&mut rows, k, Some(r), "alpha_R", res) else { continue };
        let n = cells_for(r, h);
        rows.push(ctx.row(k, Some(r), "alpha_R", a.value).cells(n));
        rows.push(ctx.row(k, Some(r), "alpha_over_lnR", a.value / r.ln()).cells(n));
        rows.push(ctx.row(k, Some(r), "fraction_of_limit", a.value / r.ln() / lim).cells(n).note("alpha_R / (ln R pi s_plus^2 k^2 / 2)"));
        for (j, e) in a.starts.iter().enumerate() {
            rows.push(ctx.row(k, Some(r), &format!("start_{j}_energy"), *e));
        }
        pts.push((r, a.value));
    }
    if pts.len() != radii.len() || pts.is_empty() {
        return rows;
    }

    let ratios: Vec<f64> = pts.iter().map(|(r, a)| a / r.ln()).collect();
    let (r_last, a_last) = pts[pts.len() - 1];
    let frac = a_last / r_last.ln() / lim;
    if pts.len() >= 2 {
        rows.push(
            ctx.row(k, None, "ratio_increasing", ratios[ratios.len() - 1] - ratios[0]).target("alpha_R / ln R increasing in R").verdict(is_increasing(&ratios)),
        );
    }
    rows.push(
        ctx.row(k, Some(r_last), "fraction_at_largest_R", frac)
            .target("alpha_R / ln R >= 0.65 pi s_plus^2 k^2 / 2")
            .check("ALPHA_RATIO_FRACTION", frac >= tol::ALPHA_RATIO_FRACTION),
    );
    // Calibrate C at the smallest radius, then test the bound at the others.
    let (r0, a0) = pts[0];
    let c = (a0 - lim * r0.ln()) / (k * k) as f64;
    rows.push(ctx.row(k, Some(r0), "C_calibrated", c));
    for &(r, a) in &pts[1..] {
        let bound = lim * r.ln() + c * (k * k) as f64;
        let margin = bound - a;
        rows.push(
            ctx.row(k, Some(r), "upper_bound_margin", margin)
                .target("alpha_R <= (pi s_plus^2 k^2 / 2) ln R + C k^2")
                .check("EXACT", margin >= -tol::EXACT * a.abs()),
        );
    }
    rows
}
