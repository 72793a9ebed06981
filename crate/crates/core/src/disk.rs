//! Unrestricted five-component fields on a polar grid.
//!
//! Radial differences use the same finite-volume faces as [`crate::radial`].
//! Angular differences act on the complex pairs u = w1 + i w2 and
//! v = w3 + i w4 through the links |e^{i theta} u_{j+1} - u_j|^2 with
//! theta = k dphi (resp. k dphi / 2), rescaled by (theta / (2 sin(theta/2)))^2.
//! A constant real u then contributes exactly k^2 u^2, so lifted radial
//! profiles have identical discrete energies, and discrete rotations of the
//! arrays leave the energy unchanged.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, NotConverged};
use crate::qtensor::{MaterialParams, WVector};
use crate::radial::{RadialGrid, RadialProfile};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarGrid {
    radius: f64,
    n_r: usize,
    n_phi: usize,
}

impl PolarGrid {
    pub fn new(radius: f64, n_r: usize, n_phi: usize, k: i32) -> Result<Self, Error> {
        RadialGrid::new(radius, n_r)?;
        if n_phi % 4 != 0 || n_phi < 8 * k.unsigned_abs() as usize || n_phi < 8 {
            return Err(Error::InvalidGrid(format!("N_phi = {n_phi} must be a multiple of 4 and at least 8|k| = {}", 8 * k.abs())));
        }
        Ok(PolarGrid { radius, n_r, n_phi })
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    pub fn radial(&self) -> RadialGrid {
        RadialGrid::new(self.radius, self.n_r).expect("validated on construction")
    }
    pub fn h(&self) -> f64 {
        self.radius / self.n_r as f64
    }
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }
    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.dphi()
    }
    /// Quadrature weight of node (i, .).
    pub fn volume(&self, i: usize) -> f64 {
        self.h() * self.r(i) * self.dphi()
    }
    pub fn len(&self) -> usize {
        self.n_r * self.n_phi * 5
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    #[inline]
    pub fn idx(&self, i: usize, j: usize, c: usize) -> usize {
        (i * self.n_phi + j) * 5 + c
    }
}

/// Node values w(r_i, phi_j) in the winding-k frame, row-major (i, j, c).
#[derive(Clone, Debug, PartialEq)]
pub struct DiskField {
    grid: PolarGrid,
    k: i32,
    params: MaterialParams,
    w: Vec<f64>,
}

impl DiskField {
    pub fn from_values(grid: PolarGrid, k: i32, params: MaterialParams, w: Vec<f64>) -> Result<Self, Error> {
        if k == 0 {
            return Err(Error::InvalidGrid("winding k must be nonzero".into()));
        }
        PolarGrid::new(grid.radius, grid.n_r, grid.n_phi, k)?;
        if w.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} values for a grid of {}", w.len(), grid.len())));
        }
        let f = DiskField { grid, k, params, w };
        f.check_representable()?;
        Ok(f)
    }

    pub fn from_fn<F: Fn(f64, f64) -> WVector>(grid: PolarGrid, k: i32, params: MaterialParams, f: F) -> Result<Self, Error> {
        let mut w = vec![0.0; grid.len()];
        for i in 0..grid.n_r {
            for j in 0..grid.n_phi {
                let v = f(grid.r(i), grid.phi(j));
                w[grid.idx(i, j, 0)..grid.idx(i, j, 0) + 5].copy_from_slice(&v.0);
            }
        }
        Self::from_values(grid, k, params, w)
    }

    /// phi-independent field with the profile's node values; the radial
    /// grids must agree.
    pub fn lift(profile: &RadialProfile, n_phi: usize) -> Result<Self, Error> {
        let rg = profile.grid();
        let grid = PolarGrid::new(rg.radius(), rg.cells(), n_phi, profile.k())?;
        let vals = profile.values();
        Self::from_fn(grid, profile.k(), *profile.params(), |r, _| vals[((r / rg.h()) - 0.5).round() as usize])
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }
    pub fn k(&self) -> i32 {
        self.k
    }
    pub fn params(&self) -> &MaterialParams {
        &self.params
    }
    pub fn values(&self) -> &[f64] {
        &self.w
    }
    pub fn at(&self, i: usize, j: usize) -> WVector {
        let s = self.grid.idx(i, j, 0);
        WVector(self.w[s..s + 5].try_into().expect("five components"))
    }

    fn check_representable(&self) -> Result<(), Error> {
        if self.k % 2 == 0 {
            return Ok(());
        }
        let bad = self.w.chunks(5).position(|v| v[3] != 0.0 || v[4] != 0.0);
        match bad {
            None => Ok(()),
            Some(n) => Err(Error::Representation { k: self.k, detail: format!("node {n} has nonzero (w3, w4)") }),
        }
    }

    /// Z2 image: (w3, w4) negated at every node.
    pub fn act_z2(&self) -> Self {
        let mut out = self.clone();
        for v in out.w.chunks_mut(5) {
            v[3] = -v[3];
            v[4] = -v[4];
        }
        out
    }

    /// The O(2) action for a grid-aligned rotation by `steps` dphi, preceded
    /// by the reflection phi -> -phi when `reflect` is set. In frame
    /// coordinates this is w'(phi) = S w(+-phi + psi) with S flipping the
    /// signs of w2 and w4 under reflection.
    pub fn act_o2(&self, reflect: bool, steps: isize) -> Result<Self, Error> {
        self.check_representable()?;
        let n = self.grid.n_phi as isize;
        let mut out = self.clone();
        let sign = [1.0, 1.0, -1.0, 1.0, -1.0];
        for i in 0..self.grid.n_r {
            for j in 0..self.grid.n_phi {
                let jj = if reflect { -(j as isize) } else { j as isize };
                let src = (jj + steps).rem_euclid(n) as usize;
                for c in 0..5 {
                    let v = self.w[self.grid.idx(i, src, c)];
                    out.w[self.grid.idx(i, j, c)] = if reflect { sign[c] * v } else { v };
                }
            }
        }
        Ok(out)
    }

    /// L2 norm of the whole w field with the disk quadrature weights.
    pub fn l2_norm(&self) -> f64 {
        self.component_norm(&[0, 1, 2, 3, 4])
    }

    pub fn component_norm(&self, comps: &[usize]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.grid.n_r {
            let vol = self.grid.volume(i);
            for j in 0..self.grid.n_phi {
                for &c in comps {
                    s += vol * self.w[self.grid.idx(i, j, c)].powi(2);
                }
            }
        }
        s.sqrt()
    }

    /// Largest node-wise distance to the lift of a radial profile on the same
    /// radial grid.
    pub fn max_distance_to(&self, profile: &RadialProfile) -> f64 {
        let vals = profile.values();
        let mut m = 0.0f64;
        for i in 0..self.grid.n_r {
            for j in 0..self.grid.n_phi {
                for c in 0..5 {
                    m = m.max((self.w[self.grid.idx(i, j, c)] - vals[i][c]).abs());
                }
            }
        }
        m
    }
}

/// Rescaled link coefficients (cos theta, sin theta, (theta/(2 sin(theta/2)))^2).
fn link(theta: f64) -> (f64, f64, f64) {
    let scale = if theta.abs() < 1e-300 { 1.0 } else { (theta / (2.0 * (0.5 * theta).sin())).powi(2) };
    (theta.cos(), theta.sin(), scale)
}

struct Links {
    pair12: (f64, f64, f64),
    pair34: (f64, f64, f64),
}

impl Links {
    fn new(k: i32, dphi: f64) -> Self {
        Links { pair12: link(k as f64 * dphi), pair34: link(0.5 * k as f64 * dphi) }
    }
}

/// Dirichlet (gradient plus angular) and bulk parts of the discrete energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub dirichlet: f64,
    pub bulk: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.dirichlet + self.bulk
    }
}

pub fn disk_energy(f: &DiskField) -> Result<f64, Error> {
    Ok(disk_energy_parts(f)?.total())
}

pub fn disk_energy_parts(f: &DiskField) -> Result<EnergyParts, Error> {
    f.check_representable()?;
    let links = Links::new(f.k, f.grid.dphi());
    Ok(EnergyParts { dirichlet: dirichlet(&f.grid, &links, &f.w, &f.params.boundary_w().0, None), bulk: bulk(f, None) })
}

/// Energy and gradient with respect to every node value.
pub fn disk_energy_gradient(f: &DiskField) -> Result<(f64, Vec<f64>), Error> {
    f.check_representable()?;
    let links = Links::new(f.k, f.grid.dphi());
    let mut g = vec![0.0; f.w.len()];
    let e = dirichlet(&f.grid, &links, &f.w, &f.params.boundary_w().0, Some(&mut g)) + bulk(f, Some(&mut g));
    Ok((e, g))
}

/// Exact Hessian of the discrete energy at a fixed field, applied to
/// direction vectors. The Dirichlet part is the quadratic form itself and
/// the bulk part is block diagonal, one 5x5 block per node.
pub struct DiskHessian {
    grid: PolarGrid,
    links: Links,
    blocks: Vec<[[f64; 5]; 5]>,
}

impl DiskHessian {
    pub fn new(f: &DiskField) -> Self {
        let g = &f.grid;
        let mut blocks = Vec::with_capacity(g.n_r * g.n_phi);
        for i in 0..g.n_r {
            let vol = g.volume(i);
            for j in 0..g.n_phi {
                let mut b = f.params.bulk_hess_w(&f.at(i, j));
                b.iter_mut().flatten().for_each(|x| *x *= vol);
                blocks.push(b);
            }
        }
        DiskHessian { grid: f.grid, links: Links::new(f.k, g.dphi()), blocks }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        dirichlet(&self.grid, &self.links, v, &[0.0; 5], Some(out));
        for (n, b) in self.blocks.iter().enumerate() {
            let x = &v[5 * n..5 * n + 5];
            let y = &mut out[5 * n..5 * n + 5];
            for (yc, row) in y.iter_mut().zip(b) {
                *yc += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
}

fn bulk(f: &DiskField, grad: Option<&mut [f64]>) -> f64 {
    let g = &f.grid;
    let mut e = 0.0;
    let mut grad = grad;
    for i in 0..g.n_r {
        let vol = g.volume(i);
        for j in 0..g.n_phi {
            let wv = f.at(i, j);
            e += vol * f.params.bulk_w(&wv);
            if let Some(gr) = grad.as_deref_mut() {
                let base = g.idx(i, j, 0);
                for (c, d) in f.params.bulk_grad_w(&wv).iter().enumerate() {
                    gr[base + c] += vol * d;
                }
            }
        }
    }
    e
}

/// Radial faces plus angular links, with `wb` on the outer boundary. The
/// gradient, if requested, is accumulated into `grad`.
fn dirichlet(g: &PolarGrid, links: &Links, w: &[f64], wb: &[f64; 5], mut grad: Option<&mut [f64]>) -> f64 {
    let (nr, np) = (g.n_r, g.n_phi);
    let (h, dphi) = (g.h(), g.dphi());
    let mut dir = 0.0;
    for i in 0..nr {
        let ang = 0.5 * h / (g.r(i) * dphi);
        let outer = i + 1 == nr;
        // Face above ring i, scaled by r_face / h and dphi.
        let weight = if outer { 2.0 * g.radius / h * dphi } else { (i + 1) as f64 * dphi };
        for j in 0..np {
            let base = g.idx(i, j, 0);
            let nb = g.idx(i, if j + 1 == np { 0 } else { j + 1 }, 0);
            let pv = g.idx(i, if j == 0 { np - 1 } else { j - 1 }, 0);
            let v = &w[base..base + 5];
            let up = if outer { &wb[..] } else { &w[base + 5 * np..base + 5 * np + 5] };
            let mut face = 0.0;
            for c in 0..5 {
                face += (up[c] - v[c]) * (up[c] - v[c]);
            }
            let l0 = (w[nb] - v[0]) * (w[nb] - v[0]);
            let l12 = pair_link(&links.pair12, v[1], v[2], w[nb + 1], w[nb + 2]);
            let l34 = pair_link(&links.pair34, v[3], v[4], w[nb + 3], w[nb + 4]);
            dir += 0.5 * weight * face + ang * (l0 + links.pair12.2 * l12 + links.pair34.2 * l34);
            if let Some(gr) = grad.as_deref_mut() {
                for c in 0..5 {
                    let flux = weight * (up[c] - v[c]);
                    gr[base + c] -= flux;
                    if !outer {
                        gr[base + 5 * np + c] += flux;
                    }
                }
                gr[base] += ang * (4.0 * v[0] - 2.0 * (w[nb] + w[pv]));
                for (&(cs, sn, sc), ia) in [(&links.pair12, 1), (&links.pair34, 3)] {
                    let ib = ia + 1;
                    let ga = 4.0 * v[ia] - 2.0 * cs * (w[nb + ia] + w[pv + ia]) + 2.0 * sn * (w[nb + ib] - w[pv + ib]);
                    let gb = 4.0 * v[ib] - 2.0 * cs * (w[nb + ib] + w[pv + ib]) - 2.0 * sn * (w[nb + ia] - w[pv + ia]);
                    gr[base + ia] += ang * sc * ga;
                    gr[base + ib] += ang * sc * gb;
                }
            }
        }
    }
    dir
}

/// |e^{i theta} u' - u|^2 for u = a + ib, u' = a' + ib'.
#[inline]
fn pair_link(l: &(f64, f64, f64), a: f64, b: f64, ap: f64, bp: f64) -> f64 {
    let (c, s, _) = *l;
    let re = c * ap - s * bp - a;
    let im = s * ap + c * bp - b;
    re * re + im * im
}

/// Largest |gradient| / node volume: the pointwise residual of the discrete
/// Euler-Lagrange system.
pub fn scaled_gradient_max(f: &DiskField, grad: &[f64]) -> f64 {
    let g = &f.grid;
    let mut m = 0.0f64;
    for i in 0..g.n_r {
        let vol = g.volume(i);
        for v in &grad[g.idx(i, 0, 0)..g.idx(i, g.n_phi - 1, 4) + 1] {
            m = m.max(v.abs() / vol);
        }
    }
    m
}

/// Inverse of the quadratic part of the energy plus sigma times the node
/// volumes. Diagonalised in phi by an FFT of each ring, then one real
/// tridiagonal solve in r per Fourier mode and complex pair.
pub struct Preconditioner {
    grid: PolarGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Thomas coefficients per (pair, mode): modified diagonal inverse and
    /// upper coefficient, each of length n_r.
    factors: Vec<(Vec<f64>, Vec<f64>)>,
    off: Vec<f64>,
}

impl Preconditioner {
    pub fn new(grid: &PolarGrid, k: i32, sigma: f64) -> Self {
        let (nr, np) = (grid.n_r, grid.n_phi);
        let (h, dphi) = (grid.h(), grid.dphi());
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(np);
        let inv = planner.plan_fft_inverse(np);
        let off: Vec<f64> = (0..nr.saturating_sub(1)).map(|i| -((i + 1) as f64) * dphi).collect();
        let thetas = [0.0, k as f64 * dphi, 0.5 * k as f64 * dphi];
        let mut factors = Vec::with_capacity(3 * np);
        for &theta in &thetas {
            let (_, _, sc) = link(theta);
            for m in 0..np {
                let sym = 4.0 * (0.5 * (theta + m as f64 * dphi)).sin().powi(2);
                let mut dinv = vec![0.0; nr];
                let mut upper = vec![0.0; nr];
                let mut prev_c = 0.0;
                for i in 0..nr {
                    let r = grid.r(i);
                    let left = i as f64 * dphi;
                    let right = if i + 1 < nr { (i + 1) as f64 * dphi } else { 2.0 * grid.radius / h * dphi };
                    let ang = 2.0 * (0.5 * h / (r * dphi)) * sc * sym;
                    let diag = left + right + ang + sigma * grid.volume(i);
                    let lower = if i > 0 { off[i - 1] } else { 0.0 };
                    let d = diag - lower * prev_c;
                    dinv[i] = 1.0 / d;
                    let up = if i + 1 < nr { off[i] } else { 0.0 };
                    prev_c = up * dinv[i];
                    upper[i] = prev_c;
                }
                factors.push((dinv, upper));
            }
        }
        Preconditioner { grid: *grid, fwd, inv, factors, off }
    }

    /// Solves P x = g.
    pub fn apply(&self, g: &[f64], x: &mut [f64]) {
        let (nr, np) = (self.grid.n_r, self.grid.n_phi);
        let mut spec = vec![Complex64::new(0.0, 0.0); nr * np];
        for (pair, (ia, ib)) in [(0usize, (0usize, None)), (1, (1, Some(2usize))), (2, (3, Some(4)))] {
            for i in 0..nr {
                let row = &mut spec[i * np..(i + 1) * np];
                for j in 0..np {
                    let re = g[self.grid.idx(i, j, ia)];
                    let im = ib.map_or(0.0, |c| g[self.grid.idx(i, j, c)]);
                    row[j] = Complex64::new(re, im);
                }
                self.fwd.process(row);
            }
            for m in 0..np {
                let (dinv, upper) = &self.factors[pair * np + m];
                // Forward sweep then back substitution down the column m.
                let mut prev = Complex64::new(0.0, 0.0);
                for i in 0..nr {
                    let lower = if i > 0 { self.off[i - 1] } else { 0.0 };
                    let v = (spec[i * np + m] - prev * lower) * dinv[i];
                    spec[i * np + m] = v;
                    prev = v;
                }
                for i in (0..nr.saturating_sub(1)).rev() {
                    let next = spec[(i + 1) * np + m];
                    spec[i * np + m] -= next * upper[i];
                }
            }
            let scale = 1.0 / np as f64;
            for i in 0..nr {
                let row = &mut spec[i * np..(i + 1) * np];
                self.inv.process(row);
                for j in 0..np {
                    x[self.grid.idx(i, j, ia)] = row[j].re * scale;
                    if let Some(c) = ib {
                        x[self.grid.idx(i, j, c)] = row[j].im * scale;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DiskOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub sigma: f64,
    /// L-BFGS memory.
    pub memory: usize,
    /// Scaled-gradient level below which truncated Newton steps are tried.
    pub newton_below: f64,
    /// Conjugate-gradient iterations per Newton step.
    pub cg_max: usize,
}

impl Default for DiskOptions {
    fn default() -> Self {
        DiskOptions { tol: tol::DISK_GRADIENT, max_iter: 20_000, sigma: 0.1, memory: 8, newton_below: 1e-3, cg_max: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct DiskSolution {
    pub field: DiskField,
    pub energy: f64,
    pub iterations: usize,
    pub gradient: f64,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients on H d = -g, truncated at relative
/// residual `eta` in the preconditioner norm. Returns None when the very
/// first direction already has nonpositive curvature.
fn newton_direction(hess: &DiskHessian, pre: &Preconditioner, grad: &[f64], eta: f64, cg_max: usize) -> Option<Vec<f64>> {
    let n = grad.len();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = grad.iter().map(|v| -v).collect();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut hp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let rz0 = rz;
    for it in 0..cg_max {
        hess.apply(&p, &mut hp);
        let curv = dot(&p, &hp);
        if curv <= 0.0 {
            return if it == 0 { None } else { Some(x) };
        }
        let alpha = rz / curv;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&hp).for_each(|(ri, hi)| *ri -= alpha * hi);
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        if rz_new <= eta * eta * rz0 {
            break;
        }
        let beta = rz_new / rz;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        rz = rz_new;
    }
    Some(x)
}

/// Preconditioned L-BFGS far from a minimum, truncated Newton (exact
/// Hessian, preconditioned CG) once the scaled gradient drops below
/// `opts.newton_below`. Every step passes an Armijo test, so the energy
/// never increases beyond rounding. The boundary ring is not an unknown.
pub fn minimize_disk(init: &DiskField, opts: &DiskOptions) -> Result<DiskSolution, NotConverged<DiskField>> {
    let fail = |f: &DiskField, it: usize, g: f64, reason| NotConverged { last: f.clone(), iterations: it, gradient: g, reason };
    let mut f = init.clone();
    let (mut e, mut grad) = disk_energy_gradient(&f).map_err(|_| fail(init, 0, f64::NAN, "unrepresentable field"))?;
    let pre = Preconditioner::new(&f.grid, f.k, opts.sigma);
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut hist_y: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![e];
    let mut gnorm = scaled_gradient_max(&f, &grad);
    let n = grad.len();
    let mut q = vec![0.0; n];
    let mut newton_failed = false;
    for iter in 0..opts.max_iter {
        if gnorm <= opts.tol {
            return Ok(DiskSolution { field: f, energy: e, iterations: iter, gradient: gnorm, history });
        }
        let mut d = None;
        if gnorm < opts.newton_below && !newton_failed {
            let hess = DiskHessian::new(&f);
            let eta = (gnorm.sqrt()).min(0.1);
            d = newton_direction(&hess, &pre, &grad, eta, opts.cg_max);
        }
        let is_newton = d.is_some();
        let mut d = d.unwrap_or_else(|| {
            // Two-loop recursion with the preconditioner as initial inverse Hessian.
            let mut d = vec![0.0; n];
            q.copy_from_slice(&grad);
            let mut alphas = Vec::with_capacity(hist_s.len());
            for (s, y) in hist_s.iter().zip(&hist_y).rev() {
                let rho = 1.0 / dot(y, s);
                let a = rho * dot(s, &q);
                q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
                alphas.push((a, rho));
            }
            pre.apply(&q, &mut d);
            for ((s, y), (a, rho)) in hist_s.iter().zip(&hist_y).zip(alphas.into_iter().rev()) {
                let b = rho * dot(y, &d);
                d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
            }
            d.iter_mut().for_each(|v| *v = -*v);
            d
        });
        let mut slope = dot(&grad, &d);
        if slope >= 0.0 {
            hist_s.clear();
            hist_y.clear();
            pre.apply(&grad, &mut d);
            d.iter_mut().for_each(|v| *v = -*v);
            slope = dot(&grad, &d);
        }
        let slack = 1e-13 * (1.0 + e.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = f.clone();
            trial.w.iter_mut().zip(&d).for_each(|(x, di)| *x += alpha * di);
            let (et, gt) = disk_energy_gradient(&trial).expect("representable");
            if et.is_finite() && et <= e + 1e-4 * alpha * slope + slack {
                accepted = Some((trial, et, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, et, gt)) = accepted else {
            if is_newton {
                newton_failed = true;
                continue;
            }
            return Err(fail(&f, iter, gnorm, "line search failed"));
        };
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = gt.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-300 {
            hist_s.push(s);
            hist_y.push(y);
            if hist_s.len() > opts.memory {
                hist_s.remove(0);
                hist_y.remove(0);
            }
        }
        // A rejected Newton phase gets another chance once L-BFGS has moved.
        newton_failed = newton_failed && !is_newton && iter % 50 != 0;
        f = trial;
        e = et;
        grad = gt;
        history.push(e);
        gnorm = scaled_gradient_max(&f, &grad);
    }
    if gnorm <= opts.tol {
        return Ok(DiskSolution { field: f, energy: e, iterations: opts.max_iter, gradient: gnorm, history });
    }
    Err(fail(&f, opts.max_iter, gnorm, "iteration cap"))
}

/// Adds a smooth random perturbation of size `amplitude` s_plus to every
/// representable component: low Fourier modes in phi times sine modes in r
/// that vanish at the boundary.
pub fn perturb(f: &DiskField, amplitude: f64, seed: u64) -> DiskField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = f.grid;
    let comps: &[usize] = if f.k % 2 == 0 { &[0, 1, 2, 3, 4] } else { &[0, 1, 2] };
    let mut out = f.clone();
    for &c in comps {
        let coeffs: Vec<(usize, usize, f64, f64)> =
            (0..4).flat_map(|m| (1..4).map(move |l| (m, l))).map(|(m, l)| (m, l, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let shape = |r: f64, phi: f64| {
            coeffs.iter().map(|&(m, l, a, b)| (l as f64 * PI * r / g.radius).sin() * (a * (m as f64 * phi).cos() + b * (m as f64 * phi).sin())).sum::<f64>()
        };
        let mut peak = 0.0f64;
        for i in 0..g.n_r {
            for j in 0..g.n_phi {
                peak = peak.max(shape(g.r(i), g.phi(j)).abs());
            }
        }
        let scale = amplitude * f.params.s_plus() / peak.max(1e-300);
        for i in 0..g.n_r {
            for j in 0..g.n_phi {
                out.w[g.idx(i, j, c)] += scale * shape(g.r(i), g.phi(j));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    /// Mean over rings of the variance in phi, per component.
    pub angular_variance: [f64; 5],
    /// L2 norm of (w3, w4).
    pub z2_defect: f64,
    /// L2 norm of (w2, w4).
    pub so2_defect: f64,
    /// Largest node-wise change under a set of grid rotations.
    pub equivariance_error: f64,
    /// L2 norm of the whole field, for relative thresholds.
    pub field_norm: f64,
}

pub fn symmetry_diagnostics(f: &DiskField) -> SymmetryReport {
    let g = &f.grid;
    let (nr, np) = (g.n_r, g.n_phi);
    let mut var = [0.0; 5];
    for i in 0..nr {
        for c in 0..5 {
            let mean = (0..np).map(|j| f.w[g.idx(i, j, c)]).sum::<f64>() / np as f64;
            var[c] += (0..np).map(|j| (f.w[g.idx(i, j, c)] - mean).powi(2)).sum::<f64>() / np as f64;
        }
    }
    var.iter_mut().for_each(|v| *v /= nr as f64);
    let mut eq = 0.0f64;
    for steps in [1, 2, np / 8, np / 4, np / 2] {
        for i in 0..nr {
            for j in 0..np {
                let src = (j + steps) % np;
                for c in 0..5 {
                    eq = eq.max((f.w[g.idx(i, src, c)] - f.w[g.idx(i, j, c)]).abs());
                }
            }
        }
    }
    SymmetryReport {
        angular_variance: var,
        z2_defect: f.component_norm(&[3, 4]),
        so2_defect: f.component_norm(&[2, 4]),
        equivariance_error: eq,
        field_norm: f.l2_norm(),
    }
}
