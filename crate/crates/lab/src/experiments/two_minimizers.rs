//! Seeded multistarts of the 2D minimiser from random perturbations of the
//! lifted Z2 x O(2) minimiser, compared with the O(2)-class radial minimisers.

use ldg_core::disk::{minimize_disk, perturb, symmetry_diagnostics, DiskField, DiskOptions};
use ldg_core::radial::{alpha_r, escaped_minimizer, RadialOptions, RadialSolution};
use ldg_core::tol;
use rayon::prelude::*;

use super::{tag, Ctx};
use crate::formats;
use crate::results::Row;

struct Start {
    seed: u64,
    converged: bool,
    energy: f64,
    gradient: f64,
    /// Node-wise distance to the nearer of Q_R^+ and Q_R^-, units of s_plus.
    distance: f64,
    so2_rel: f64,
    z2_rel: f64,
    w3_single_sign: bool,
    field: DiskField,
}

fn w3_single_sign(f: &DiskField) -> bool {
    let g = f.grid();
    let (mut pos, mut neg) = (false, false);
    for i in 0..g.n_r() {
        for j in 0..g.n_phi() {
            let w3 = f.at(i, j)[3];
            pos |= w3 > 0.0;
            neg |= w3 < 0.0;
        }
    }
    pos != neg
}

fn run_start(ctx: &Ctx, lifted: &DiskField, plus: &RadialSolution, minus: &RadialSolution, seed: u64) -> Start {
    let amp = ctx.cfg.perturbation.unwrap_or(0.3);
    let start = perturb(lifted, amp, seed);
    let (field, converged, energy, gradient) = match minimize_disk(&start, &DiskOptions::default()) {
        Ok(sol) => (sol.field, true, sol.energy, sol.gradient),
        Err(nc) => {
            let e = ldg_core::disk::disk_energy(&nc.last).unwrap_or(f64::NAN);
            (nc.last, false, e, nc.gradient)
        }
    };
    let s = ctx.params.s_plus();
    let distance = field.max_distance_to(&plus.profile).min(field.max_distance_to(&minus.profile)) / s;
    let sym = symmetry_diagnostics(&field);
    Start {
        seed,
        converged,
        energy,
        gradient,
        distance,
        so2_rel: sym.so2_defect / sym.field_norm,
        z2_rel: sym.z2_defect / sym.field_norm,
        w3_single_sign: w3_single_sign(&field),
        field,
    }
}

fn at_radius(ctx: &Ctx, radius: f64) -> Vec<Row> {
    let (k, p) = (ctx.k(), &ctx.params);
    let [n_r, n_phi] = ctx.cfg.disk_grid.unwrap_or([128, 128]);
    let opts = RadialOptions::default();
    let r = Some(radius);
    let mut rows = Vec::new();
    let Some(plus) = ctx.attempt(&mut rows, k, r, "E_O2_plus", escaped_minimizer(p, k, radius, n_r, true, &opts)) else { return rows };
    let Some(minus) = ctx.attempt(&mut rows, k, r, "E_O2_minus", escaped_minimizer(p, k, radius, n_r, false, &opts)) else { return rows };
    rows.push(ctx.row(k, r, "E_O2_plus", plus.energy).cells(n_r));
    let Some(base) = ctx.attempt(&mut rows, k, r, "E_str", alpha_r(p, k, radius, n_r, &opts)) else { return rows };
    rows.push(ctx.row(k, r, "E_str", base.value).cells(n_r));
    let Some(lifted) = ctx.attempt(&mut rows, k, r, "E_str", DiskField::lift(&base.profile, n_phi)) else { return rows };
    let s = p.s_plus();
    let pair =
        plus.profile.z2_image().values().iter().zip(minus.profile.values()).flat_map(|(x, y)| (0..5).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max) / s;
    rows.push(ctx.row(k, r, "z2_pair_distance", pair).target("Q_R^- = J Q_R^+ J node-wise").check("Z2_PAIRING_REL", pair <= tol::Z2_PAIRING_REL));

    let n = ctx.cfg.starts.unwrap_or(20) as u64;
    let starts: Vec<Start> = (0..n).into_par_iter().map(|i| run_start(ctx, &lifted, &plus, &minus, ctx.cfg.seed.wrapping_add(i))).collect();
    if starts.is_empty() {
        return rows;
    }
    for st in &starts {
        let q = |name: &str| format!("start_{}_{name}", st.seed);
        rows.push(ctx.row(k, r, &q("energy"), st.energy).note(if st.converged { "converged" } else { "not converged" }));
        rows.push(ctx.row(k, r, &q("distance"), st.distance));
    }
    let fold = |f: fn(&Start) -> f64, init: f64, op: fn(f64, f64) -> f64| starts.iter().map(f).fold(init, op);
    let worst_distance = fold(|s| s.distance, 0.0, f64::max);
    let worst_so2 = fold(|s| s.so2_rel, 0.0, f64::max);
    let least_z2 = fold(|s| s.z2_rel, f64::INFINITY, f64::min);
    let worst_gradient = fold(|s| s.gradient, 0.0, f64::max);
    let converged = starts.iter().filter(|s| s.converged).count();
    let mixed = starts.iter().filter(|s| !s.w3_single_sign).count();
    let (e_lo, e_hi) = (fold(|s| s.energy, f64::INFINITY, f64::min), fold(|s| s.energy, f64::NEG_INFINITY, f64::max));

    rows.push(ctx.row(k, r, "converged_starts", converged as f64).target("every start converges").verdict(converged == starts.len()));
    rows.push(ctx.row(k, r, "worst_scaled_gradient", worst_gradient));
    rows.push(
        ctx.row(k, r, "multistart_max_distance", worst_distance)
            .target("every start within 1e-4 s_plus node-wise of Q_R^+ or Q_R^-")
            .check("MULTISTART_NODEWISE_REL", worst_distance <= tol::MULTISTART_NODEWISE_REL),
    );
    rows.push(ctx.row(k, r, "so2_defect_rel", worst_so2).target("so2_defect <= 1e-6 |Q|").check("SO2_DEFECT_REL", worst_so2 <= tol::SO2_DEFECT_REL));
    rows.push(ctx.row(k, r, "escape_defect_rel", least_z2).target("z2_defect >= 1e-2 |Q|").check("ESCAPE_DEFECT_REL", least_z2 >= tol::ESCAPE_DEFECT_REL));
    rows.push(ctx.row(k, r, "w3_mixed_sign_starts", mixed as f64).target("w3 of one sign at every node").verdict(mixed == 0));
    rows.push(ctx.row(k, r, "E_disk_min", e_lo));
    rows.push(ctx.row(k, r, "E_disk_max", e_hi));
    rows.push(ctx.row(k, r, "E_disk_min_minus_O2", e_lo - plus.energy).note("negative means a lower non-radial state was found"));

    if let Some(best) = starts.iter().filter(|s| s.energy.is_finite()).min_by(|a, b| a.energy.total_cmp(&b.energy)) {
        ctx.artifact(&format!("fields/best_{}.ldg2", tag(radius)), |f| formats::write_ldg2(f, &formats::encode_disk(&best.field)));
    }
    ctx.profile_artifacts(&format!("profiles/o2_plus_{}", tag(radius)), &plus.profile);
    rows
}

pub fn run(ctx: &Ctx) -> Vec<Row> {
    ctx.cfg.radii().iter().flat_map(|&r| at_radius(ctx, r)).collect()
}
