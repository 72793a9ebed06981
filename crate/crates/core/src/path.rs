//! Paths between the two escaped minimisers: the explicit shrink, invert
//! and flip construction, a climbing-image string relaxation towards the
//! saddle, and the odd-k energy scan.
//!
//! All images are k-fold O(2)-symmetric, so they are stored as radial
//! profiles on one grid and lifted to [`DiskField`]s on demand; the lift
//! reproduces the radial energy exactly.

use std::f64::consts::PI;

use crate::banded::BlockLdl;
use crate::disk::DiskField;
use crate::error::{Error, NotConverged};
use crate::qtensor::{MaterialParams, WVector};
use crate::radial::{self, Ansatz, RadialGrid, RadialOptions, RadialProfile};
use crate::tol;

#[derive(Clone, Copy, Debug)]
pub struct PathConfig {
    /// Radius of the inner disk on which the core is flipped.
    pub r0: f64,
    /// Number of images, endpoints included.
    pub images: usize,
    /// Preconditioned descent step of the string images.
    pub step: f64,
    /// Sweeps between arclength reparameterisations.
    pub reparam_every: usize,
    /// Scaled-gradient tolerance of the climbing image.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Mass shift of the preconditioner.
    pub sigma: f64,
    /// Window over which the barrier has to settle before the run is
    /// declared stagnant.
    pub stagnation_window: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { r0: 5.0, images: 32, step: 0.5, reparam_every: 1, tol: tol::SADDLE_GRADIENT, max_sweeps: 20_000, sigma: 1.0, stagnation_window: 500 }
    }
}

impl PathConfig {
    pub fn validate(&self, radius: f64) -> Result<(), Error> {
        if !(self.r0 > 0.0 && self.r0 < radius) {
            return Err(Error::InvalidGrid(format!("need 0 < R0 = {} < R = {radius}", self.r0)));
        }
        if self.images < 8 {
            return Err(Error::InvalidGrid(format!("at least 8 images are needed, got {}", self.images)));
        }
        Ok(())
    }
}

/// The "+" escaped minimisers Q_r^+ for r between R0 and R, built by
/// continuation from R downwards. Q_r^- is the Z2 image.
#[derive(Clone, Debug)]
pub struct MinimizerCache {
    /// Ascending radii with their minimisers, all on the same spacing.
    entries: Vec<(f64, RadialProfile)>,
    /// Q_R^+ on the path grid.
    outer: RadialProfile,
}

impl MinimizerCache {
    /// Solves at `radius` with `cells` cells, then at radii shrinking by
    /// `ratio` until `r0`, each start being the previous solution rescaled.
    pub fn build(params: &MaterialParams, k: i32, radius: f64, cells: usize, r0: f64, ratio: f64, opts: &RadialOptions) -> Result<Self, Error> {
        if !(ratio > 0.0 && ratio < 1.0) || !(r0 > 0.0 && r0 <= radius) {
            return Err(Error::InvalidGrid(format!("continuation needs 0 < ratio < 1 and 0 < R0 <= R (ratio {ratio}, R0 {r0})")));
        }
        let h = radius / cells as f64;
        let outer = radial::escaped_minimizer(params, k, radius, cells, true, opts)?.profile;
        let mut entries = vec![(radius, outer.clone())];
        let mut r = radius;
        while r > r0 {
            r = (r * ratio).max(r0);
            if r - r0 < 1e-9 * radius {
                r = r0;
            }
            let n = ((r / h).ceil() as usize).max(32);
            let init = entries.last().expect("nonempty").1.resample(RadialGrid::new(r, n)?, true);
            let sol = radial::minimize_radial(&init, opts).map_err(|e| Error::Solver(format!("continuation at r = {r}: {e}")))?;
            entries.push((r, sol.profile));
        }
        entries.reverse();
        Ok(MinimizerCache { entries, outer })
    }

    pub fn lo(&self) -> f64 {
        self.entries[0].0
    }

    pub fn hi(&self) -> f64 {
        self.entries[self.entries.len() - 1].0
    }

    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn outer(&self) -> &RadialProfile {
        &self.outer
    }

    /// Q_r^± at distance `rho <= r` from the centre, interpolated in ln r
    /// between cached radii in the scaled variable rho / r.
    pub fn sample(&self, r: f64, positive: bool, rho: f64) -> Result<WVector, Error> {
        let (lo, hi) = (self.lo(), self.hi());
        let slack = 1e-12 * hi;
        if r < lo - slack || r > hi + slack {
            return Err(Error::CacheMiss { r, lo, hi });
        }
        let r = r.clamp(lo, hi);
        let j = self.entries.partition_point(|e| e.0 < r);
        let mut w = if j < self.entries.len() && (self.entries[j].0 - r).abs() <= slack {
            let (rj, p) = &self.entries[j];
            p.sample(rho * rj / r)
        } else {
            let (ra, pa) = &self.entries[j - 1];
            let (rb, pb) = &self.entries[j];
            let theta = (r / ra).ln() / (rb / ra).ln();
            let a = pa.sample(rho * ra / r);
            let b = pb.sample(rho * rb / r);
            WVector(std::array::from_fn(|c| (1.0 - theta) * a[c] + theta * b[c]))
        };
        if !positive {
            w[3] = -w[3];
            w[4] = -w[4];
        }
        Ok(w)
    }
}

/// r1(t) and r2(t) of the construction for 1 <= |t| <= 2.
pub fn gamma_radii(t: f64, r0: f64, radius: f64) -> (f64, f64) {
    let r1 = if t.abs() <= 1.0 { r0 } else { (radius - r0) * t.abs() + 2.0 * r0 - radius };
    (r1, (r1 * radius).sqrt())
}

/// The explicit path at parameter t in [-2, 2] as a profile on the grid of
/// Q_R^+. For |t| >= 1 the inner disk holds Q_{r1}^±, the annulus
/// r1 < |x| < r2 the inverted copy Q_R^+(r2² x / |x|²), and the rest Q_R^+;
/// for |t| < 1 the path interpolates linearly between t = -1 and t = 1.
pub fn explicit_gamma_profile(t: f64, cache: &MinimizerCache, r0: f64) -> Result<RadialProfile, Error> {
    if t.is_nan() || t.abs() > 2.0 {
        return Err(Error::Solver(format!("path parameter t = {t} outside [-2, 2]")));
    }
    let outer = cache.outer();
    if t.abs() < 1.0 {
        let plus = explicit_gamma_profile(1.0, cache, r0)?;
        let minus = explicit_gamma_profile(-1.0, cache, r0)?;
        let (a, b) = (0.5 * (t + 1.0), -0.5 * (t - 1.0));
        let w = plus.values().iter().zip(minus.values()).map(|(p, m)| WVector(std::array::from_fn(|c| a * p[c] + b * m[c]))).collect();
        return RadialProfile::from_values(*outer.grid(), Ansatz::O2, outer.k(), *outer.params(), w);
    }
    let radius = outer.grid().radius();
    let (r1, r2) = gamma_radii(t, r0, radius);
    let positive = t > 0.0;
    let mut w = Vec::with_capacity(outer.grid().cells());
    for (i, rho) in outer.grid().nodes().into_iter().enumerate() {
        let v = if rho <= r1 {
            cache.sample(r1, positive, rho)?
        } else if rho < r2 {
            outer.sample(r2 * r2 / rho)
        } else {
            outer.values()[i]
        };
        w.push(v);
    }
    RadialProfile::from_values(*outer.grid(), Ansatz::O2, outer.k(), *outer.params(), w)
}

/// [`explicit_gamma_profile`] lifted to a disk field with `n_phi` angles.
pub fn explicit_gamma(t: f64, cache: &MinimizerCache, r0: f64, n_phi: usize) -> Result<DiskField, Error> {
    DiskField::lift(&explicit_gamma_profile(t, cache, r0)?, n_phi)
}

/// Discrete Dirichlet energy of the part of a profile in lo <= r <= hi:
/// radial differences across faces with both neighbours inside, angular
/// terms of the nodes inside, and the boundary face when hi reaches R.
pub fn dirichlet_between(p: &RadialProfile, lo: f64, hi: f64) -> f64 {
    let g = p.grid();
    let (n, h) = (g.cells(), g.h());
    let k2 = (p.k() as f64).powi(2);
    let inside = |i: usize| g.node(i) >= lo && g.node(i) <= hi;
    let w = p.values();
    let mut e = 0.0;
    for i in 0..n {
        if !inside(i) {
            continue;
        }
        let r = g.node(i);
        let ang: f64 = (0..5).map(|c| radial::MU[c] * w[i][c] * w[i][c]).sum();
        e += PI * h * k2 * ang / r;
        if i + 1 < n && inside(i + 1) {
            let d: f64 = (0..5).map(|c| (w[i + 1][c] - w[i][c]).powi(2)).sum();
            e += PI * g.face(i + 1) * d / h;
        }
    }
    if hi >= g.radius() && inside(n - 1) {
        let wb = p.boundary();
        let d: f64 = (0..5).map(|c| (wb[c] - w[n - 1][c]).powi(2)).sum();
        e += PI * 2.0 * g.radius() * d / h;
    }
    e
}

/// Dirichlet energy of the inverted annulus at parameter t and of Q_R^+ on
/// its pre-image annulus r2 < |y| < R. Conformal invariance makes them
/// equal up to discretisation error.
pub fn conformal_check(t: f64, cache: &MinimizerCache, r0: f64) -> Result<(f64, f64), Error> {
    if t.abs() < 1.0 {
        return Err(Error::Solver("the inverted annulus exists only for |t| >= 1".into()));
    }
    let radius = cache.outer().grid().radius();
    let (r1, r2) = gamma_radii(t, r0, radius);
    let gamma = explicit_gamma_profile(t, cache, r0)?;
    Ok((dirichlet_between(&gamma, r1, r2), dirichlet_between(cache.outer(), r2, radius)))
}

/// Images of one path with their parameters and energies.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub t: Vec<f64>,
    pub images: Vec<RadialProfile>,
    pub energies: Vec<f64>,
}

impl PathEnsemble {
    pub fn from_images(t: Vec<f64>, images: Vec<RadialProfile>) -> Result<Self, Error> {
        if t.len() != images.len() || images.len() < 2 {
            return Err(Error::InvalidGrid(format!("{} parameters for {} images", t.len(), images.len())));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("path parameters must increase".into()));
        }
        let energies: Vec<f64> = images.iter().map(radial::radial_energy).collect();
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Solver("non-finite image energy".into()));
        }
        Ok(PathEnsemble { t, images, energies })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn disk_image(&self, i: usize, n_phi: usize) -> Result<DiskField, Error> {
        DiskField::lift(&self.images[i], n_phi)
    }

    /// Largest node-wise distance of the endpoints from the given minimisers.
    pub fn endpoint_error(&self, minus: &RadialProfile, plus: &RadialProfile) -> f64 {
        let d = |a: &RadialProfile, b: &RadialProfile| {
            a.values().iter().zip(b.values()).flat_map(|(x, y)| (0..5).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max)
        };
        d(&self.images[0], minus).max(d(&self.images[self.len() - 1], plus))
    }

    /// The path with every image replaced by its Z2 image.
    pub fn act_z2(&self) -> Self {
        let images: Vec<RadialProfile> = self.images.iter().map(|p| p.z2_image()).collect();
        let energies = images.iter().map(radial::radial_energy).collect();
        PathEnsemble { t: self.t.clone(), images, energies }
    }
}

/// The explicit path at `m` equally spaced parameters in [-2, 2].
pub fn explicit_path(cache: &MinimizerCache, r0: f64, m: usize) -> Result<PathEnsemble, Error> {
    if m < 2 {
        return Err(Error::InvalidGrid("a path needs two images".into()));
    }
    let t: Vec<f64> = (0..m).map(|j| -2.0 + 4.0 * j as f64 / (m - 1) as f64).collect();
    let images = t.iter().map(|&s| explicit_gamma_profile(s, cache, r0)).collect::<Result<Vec<_>, _>>()?;
    PathEnsemble::from_images(t, images)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyProfile {
    pub energies: Vec<f64>,
    pub max: f64,
    pub argmax: usize,
    /// max minus the larger endpoint energy.
    pub barrier: f64,
}

pub fn path_energy_profile(p: &PathEnsemble) -> EnergyProfile {
    let (argmax, max) = p.energies.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, e)| if e > b.1 { (i, e) } else { b });
    let ends = p.energies[0].max(p.energies[p.len() - 1]);
    EnergyProfile { energies: p.energies.clone(), max, argmax, barrier: max - ends }
}

fn wdot(a: &[f64], b: &[f64], m: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum()
}

/// Redistributes the images between `from` and `to` (inclusive, both kept)
/// to equal arclength in the mass metric along the piecewise-linear string.
fn equidistribute(x: &mut [Vec<f64>], from: usize, to: usize, mass: &[f64]) {
    if to <= from + 1 {
        return;
    }
    let seg: Vec<f64> = (from..to)
        .map(|j| {
            let d: Vec<f64> = x[j + 1].iter().zip(&x[j]).map(|(a, b)| a - b).collect();
            wdot(&d, &d, mass).sqrt()
        })
        .collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        return;
    }
    let old: Vec<Vec<f64>> = x[from..=to].to_vec();
    let mut cum = vec![0.0];
    for s in &seg {
        cum.push(cum.last().unwrap() + s);
    }
    let count = to - from;
    for j in 1..count {
        let target = total * j as f64 / count as f64;
        let s = cum.partition_point(|&c| c <= target).clamp(1, count) - 1;
        let theta = if seg[s] > 0.0 { (target - cum[s]) / seg[s] } else { 0.0 };
        x[from + j] = old[s].iter().zip(&old[s + 1]).map(|(a, b)| a + theta * (b - a)).collect();
    }
}

#[derive(Clone, Debug)]
pub struct RelaxedPath {
    /// Parameters in [0, 1] proportional to arclength.
    pub path: PathEnsemble,
    pub climbing: usize,
    pub saddle: RadialProfile,
    pub saddle_energy: f64,
    pub saddle_gradient: f64,
    /// Negative eigenvalues of the exact O(2)-class Hessian at the saddle.
    pub saddle_index: usize,
    pub sweeps: usize,
    /// Barrier after every sweep.
    pub barrier_history: Vec<f64>,
}

/// Climbing-image string method in the O(2) class. Interior images follow
/// the preconditioned negative gradient and are redistributed by arclength;
/// once the string has settled, the highest image climbs along the path
/// tangent, and near the saddle it is finished with Newton steps on the
/// exact Hessian.
pub fn string_relax(init: &PathEnsemble, cfg: &PathConfig) -> Result<RelaxedPath, NotConverged<RelaxedPath>> {
    let template = init.images[0].clone();
    let fail = |reason: &'static str, last: RelaxedPath| Err(NotConverged { iterations: last.sweeps, gradient: last.saddle_gradient, reason, last });
    let act = Ansatz::O2.active();
    let grid = *template.grid();
    let to_profile =
        |x: &[f64]| RadialProfile::from_values(grid, Ansatz::O2, template.k(), *template.params(), radial::unpack(&act, x)).expect("template grid");
    let o2 = |p: &RadialProfile| p.with_ansatz(Ansatz::O2).expect("even k");
    let mass = radial::mass_vector(&template, &act);
    let pre: BlockLdl = radial::linear_operator(&o2(&template), &act).factor(-cfg.sigma, Some(&mass)).expect("shifted operator is positive definite");
    let m = cfg.images;
    // Resample the initial path onto m images equally spaced in arclength.
    let src: Vec<Vec<f64>> = init.images.iter().map(|p| radial::pack(&act, o2(p).values())).collect();
    let mut x: Vec<Vec<f64>> = {
        let mut all = src.clone();
        let n_src = all.len();
        equidistribute(&mut all, 0, n_src - 1, &mass);
        (0..m)
            .map(|j| {
                let s = j as f64 * (n_src - 1) as f64 / (m - 1) as f64;
                let a = (s.floor() as usize).min(n_src - 2);
                let th = s - a as f64;
                all[a].iter().zip(&all[a + 1]).map(|(p, q)| p + th * (q - p)).collect()
            })
            .collect()
    };
    let ends = (radial::radial_energy(&to_profile(&x[0])), radial::radial_energy(&to_profile(&x[m - 1])));
    let mut energies = vec![0.0; m];
    let mut grads: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut barrier_history = Vec::new();
    let mut climbing: Option<usize> = None;
    let mut sweeps = 0;
    let snapshot = |x: &[Vec<f64>], energies: &[f64], climb: usize, sweeps: usize, hist: &[f64], g: f64| {
        let images: Vec<RadialProfile> = x.iter().map(|v| to_profile(v)).collect();
        let t = (0..x.len()).map(|j| j as f64 / (x.len() - 1) as f64).collect();
        let saddle = images[climb].clone();
        let index = radial::radial_hessian(&saddle).factor(0.0, None).map_or(usize::MAX, |f| f.negatives());
        RelaxedPath {
            path: PathEnsemble { t, images, energies: energies.to_vec() },
            climbing: climb,
            saddle_energy: energies[climb],
            saddle,
            saddle_gradient: g,
            saddle_index: index,
            sweeps,
            barrier_history: hist.to_vec(),
        }
    };
    energies[0] = ends.0;
    energies[m - 1] = ends.1;
    loop {
        for j in 1..m - 1 {
            let (e, g) = radial::energy_and_gradient(&to_profile(&x[j]), true);
            energies[j] = e;
            grads[j] = radial::pack(&act, &g);
        }
        let (top, emax) = (1..m - 1).map(|j| (j, energies[j])).fold((1, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        barrier_history.push(emax - ends.0.max(ends.1));
        let gtop = radial::scaled_gradient_max(&to_profile(&x[top]), &radial::unpack(&act, &grads[top]));
        if let Some(c) = climbing {
            if c == top && gtop <= cfg.tol {
                return Ok(snapshot(&x, &energies, c, sweeps, &barrier_history, gtop));
            }
            // Newton finish once the climbing image is close to a saddle of
            // Morse index one.
            if c == top && gtop <= 1e-3 {
                if let Some((xs, es, gs)) = newton_saddle(&to_profile(&x[c]), cfg.tol, &act) {
                    x[c] = xs;
                    energies[c] = es;
                    return Ok(snapshot(&x, &energies, c, sweeps, &barrier_history, gs));
                }
            }
        }
        if sweeps >= cfg.max_sweeps {
            let c = climbing.unwrap_or(top);
            return fail("sweep cap", snapshot(&x, &energies, c, sweeps, &barrier_history, gtop));
        }
        let w = cfg.stagnation_window;
        if sweeps > 4 * w {
            let recent = &barrier_history[barrier_history.len() - w..];
            let span = recent.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - recent.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let earlier = &barrier_history[barrier_history.len() - 2 * w..barrier_history.len() - w];
            let drift = (recent.iter().sum::<f64>() - earlier.iter().sum::<f64>()).abs() / w as f64;
            if span > 10.0 * drift.max(1e-12) && span > 1e-6 * (1.0 + emax.abs()) {
                let c = climbing.unwrap_or(top);
                return fail("barrier oscillation", snapshot(&x, &energies, c, sweeps, &barrier_history, gtop));
            }
        }
        // Switch the climbing image on once the barrier has settled.
        if climbing.is_none() && sweeps >= 50 {
            let n = barrier_history.len();
            if (barrier_history[n - 1] - barrier_history[n - 50]).abs() <= 1e-3 * (1.0 + emax.abs()) {
                climbing = Some(top);
            }
        } else if climbing.is_some() {
            climbing = Some(top);
        }
        for j in 1..m - 1 {
            let mut d = vec![0.0; x[j].len()];
            pre.solve(&grads[j], &mut d);
            if Some(j) == climbing {
                // Reverse the tangential part of the step, measured in the
                // mass metric.
                let tau: Vec<f64> = x[j + 1].iter().zip(&x[j - 1]).map(|(a, b)| a - b).collect();
                let tt = wdot(&tau, &tau, &mass);
                if tt > 0.0 {
                    let gt = wdot(&d, &tau, &mass) / tt;
                    d.iter_mut().zip(&tau).for_each(|(v, tv)| *v -= 2.0 * gt * tv);
                }
            }
            x[j].iter_mut().zip(&d).for_each(|(v, dv)| *v -= cfg.step * dv);
        }
        sweeps += 1;
        if sweeps % cfg.reparam_every.max(1) == 0 {
            match climbing {
                Some(c) => {
                    equidistribute(&mut x, 0, c, &mass);
                    equidistribute(&mut x, c, m - 1, &mass);
                }
                None => equidistribute(&mut x, 0, m - 1, &mass),
            }
        }
    }
}

/// Newton iteration on the exact Hessian from `start`; succeeds when the
/// scaled gradient drops below `tol` at a point of Morse index one.
fn newton_saddle(start: &RadialProfile, tol: f64, act: &[usize]) -> Option<(Vec<f64>, f64, f64)> {
    let mut p = start.clone();
    for _ in 0..30 {
        let (e, g) = radial::energy_and_gradient(&p, true);
        let gn = radial::scaled_gradient_max(&p, &g);
        let fac = radial::radial_hessian(&p).factor(0.0, None)?;
        if fac.negatives() != 1 {
            return None;
        }
        if gn <= tol {
            return Some((radial::pack(act, p.values()), e, gn));
        }
        let gf = radial::pack(act, &g);
        let mut d = vec![0.0; gf.len()];
        fac.solve(&gf, &mut d);
        let x: Vec<f64> = radial::pack(act, p.values()).iter().zip(&d).map(|(a, b)| a - b).collect();
        p = RadialProfile::from_values(*p.grid(), p.ansatz(), p.k(), *p.params(), radial::unpack(act, &x)).ok()?;
    }
    None
}

/// One row of the odd-k scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub radius: f64,
    pub ln_radius: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct EnergyScan {
    pub k: i32,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of energy against ln R.
    pub slope: f64,
    pub intercept: f64,
}

impl EnergyScan {
    /// (max - min) / mean of the energies.
    pub fn relative_range(&self) -> f64 {
        let e: Vec<f64> = self.rows.iter().map(|r| r.energy).collect();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        (e.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - e.iter().fold(f64::INFINITY, |a, &b| a.min(b))) / mean
    }
}

/// Minimal radially reduced energy against ln R on grids of spacing `h`.
/// Odd k uses the (w0, w1) class, even k the Z2 x O(2) class and the
/// escaped minimiser, keeping the lower energy.
pub fn odd_k_energy_scan(params: &MaterialParams, k: i32, radii: &[f64], h: f64, opts: &RadialOptions) -> Result<EnergyScan, Error> {
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        let cells = (radius / h).ceil() as usize;
        let mut energy = radial::alpha_r(params, k, radius, cells, opts)?.value;
        if k % 2 == 0 {
            energy = energy.min(radial::escaped_minimizer(params, k, radius, cells, true, opts)?.energy);
        }
        rows.push(ScanRow { radius, ln_radius: radius.ln(), energy });
    }
    let (slope, intercept) = fit_line(&rows.iter().map(|r| (r.ln_radius, r.energy)).collect::<Vec<_>>());
    Ok(EnergyScan { k, rows, slope, intercept })
}

/// Least-squares line through the points; NaN slope for fewer than two.
pub fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, pts.first().map_or(f64::NAN, |p| p.1));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::{disk_energy, disk_energy_gradient, scaled_gradient_max, symmetry_diagnostics};

    fn cache(radius: f64, cells: usize) -> MinimizerCache {
        MinimizerCache::build(&MaterialParams::default(), 2, radius, cells, 5.0, 0.85, &RadialOptions::default()).unwrap()
    }

    #[test]
    fn config_rules() {
        assert!(PathConfig::default().validate(20.0).is_ok());
        assert!(PathConfig { r0: 25.0, ..Default::default() }.validate(20.0).is_err());
        assert!(PathConfig { images: 7, ..Default::default() }.validate(20.0).is_err());
    }

    #[test]
    fn cache_covers_the_range_and_misses_outside() {
        let c = cache(20.0, 400);
        assert_eq!(c.lo(), 5.0);
        assert_eq!(c.hi(), 20.0);
        assert!(c.radii().windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(c.sample(4.0, true, 1.0), Err(Error::CacheMiss { .. })));
        // At a cached radius the sample is the stored profile.
        let w = c.sample(20.0, true, c.outer().grid().node(7)).unwrap();
        let want = c.outer().values()[7];
        assert!((0..5).all(|i| (w[i] - want[i]).abs() < 1e-12));
        let m = c.sample(20.0, false, c.outer().grid().node(7)).unwrap();
        assert_eq!(m[3], -w[3]);
    }

    #[test]
    fn gamma_endpoints_and_inner_disk() {
        let c = cache(20.0, 400);
        let plus = c.outer().clone();
        let minus = plus.z2_image();
        let path = explicit_path(&c, 5.0, 9).unwrap();
        assert!(path.endpoint_error(&minus, &plus) <= tol::PATH_ENDPOINT);
        let g1 = explicit_gamma_profile(1.0, &c, 5.0).unwrap();
        for (i, r) in g1.grid().nodes().into_iter().enumerate() {
            if r <= 5.0 {
                let want = c.sample(5.0, true, r).unwrap();
                assert!((0..5).all(|q| (g1.values()[i][q] - want[q]).abs() < 1e-12));
            }
        }
        assert!(explicit_gamma_profile(2.5, &c, 5.0).is_err());
    }

    #[test]
    fn traces_match_at_the_inner_ring() {
        let c = cache(20.0, 800);
        let wb = c.outer().boundary();
        for t in [1.0, 1.3, -1.6, 1.9] {
            let (r1, r2) = gamma_radii(t, 5.0, 20.0);
            let inner = c.sample(r1, t > 0.0, r1).unwrap();
            let annulus = c.outer().sample(r2 * r2 / r1);
            for q in 0..5 {
                assert!((inner[q] - wb[q]).abs() < 1e-12);
                assert!((annulus[q] - wb[q]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverted_annulus_is_conformal() {
        let c = cache(25.0, 2048);
        for t in [1.25, 1.5, -1.75] {
            let (a, b) = conformal_check(t, &c, 5.0).unwrap();
            assert!(((a - b) / b).abs() <= tol::CONFORMAL_REL, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn lifted_image_energy_matches() {
        let c = cache(20.0, 200);
        let g = explicit_gamma(0.3, &c, 5.0, 16).unwrap();
        let p = explicit_gamma_profile(0.3, &c, 5.0).unwrap();
        let (a, b) = (disk_energy(&g).unwrap(), radial::radial_energy(&p));
        assert!(((a - b) / b).abs() <= tol::DISK_REDUCTION_REL);
    }

    #[test]
    fn string_relaxation_finds_an_escaped_saddle() {
        let c = cache(20.0, 400);
        let init = explicit_path(&c, 5.0, 41).unwrap();
        let explicit = path_energy_profile(&init);
        let cfg = PathConfig { images: 16, ..Default::default() };
        let out = string_relax(&init, &cfg).unwrap();
        let relaxed = path_energy_profile(&out.path);
        assert!(out.saddle_gradient <= cfg.tol);
        assert_eq!(out.saddle_index, 1);
        assert!(relaxed.barrier <= explicit.barrier + 1e-9);
        assert!(out.saddle_energy <= explicit.max);
        assert!(out.saddle_energy >= out.path.energies[0] && out.saddle_energy >= out.path.energies[cfg.images - 1]);
        // Endpoints never move.
        let plus = c.outer().clone();
        assert!(out.path.endpoint_error(&plus.z2_image(), &plus) <= tol::PATH_ENDPOINT);
        // Z2 image: same energies bit for bit.
        let mirrored = out.path.act_z2();
        assert_eq!(mirrored.energies, out.path.energies);
        // The saddle is a critical point of the unrestricted disk energy.
        let field = DiskField::lift(&out.saddle, 16).unwrap();
        let (_, g) = disk_energy_gradient(&field).unwrap();
        assert!(scaled_gradient_max(&field, &g) <= 1e-6);
        let sym = symmetry_diagnostics(&field);
        assert!(sym.so2_defect <= tol::SO2_DEFECT_REL * sym.field_norm);
        eprintln!("saddle E {} w3 norm {} barrier {} vs {}", out.saddle_energy, field.component_norm(&[3]), relaxed.barrier, explicit.barrier);
    }

    #[test]
    fn odd_k_slope() {
        let p = MaterialParams::default();
        let scan = odd_k_energy_scan(&p, 1, &[100.0, 1000.0], 0.1, &RadialOptions::default()).unwrap();
        let want = 0.5 * PI * p.s_plus().powi(2);
        assert!(((scan.slope - want) / want).abs() <= tol::ODD_K_SLOPE_REL, "{} vs {want}", scan.slope);
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let (s, c) = fit_line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        assert!(fit_line(&[(1.0, 1.0)]).0.is_nan());
    }
}
