//! Symmetry-reduced radial problems on a cell-centred grid of [0, R].
//!
//! The discrete energy is a finite-volume sum. Radial differences live on
//! the faces r_{i+1/2} = (i + 1) h and are weighted by the face radius, so
//! the face at the origin carries weight zero and the origin regularity of
//! the odd components never enters as an explicit ghost value. The face at
//! r = R is a half cell wide and sees the boundary value w_b. Dividing the
//! gradient by the cell volume 2 pi r_i h gives exactly the negated
//! central-difference residual of the radial Euler-Lagrange system.

use std::f64::consts::PI;
use std::fmt;

use crate::banded::BlockTridiag;
use crate::error::{Error, NotConverged};
use crate::qtensor::{MaterialParams, WVector, SQRT2, SQRT6};
use crate::tol;

/// Angular stiffness multiplier of each component: w1, w2 wind with k, w3,
/// w4 with k/2, w0 not at all.
pub const MU: [f64; 5] = [0.0, 1.0, 1.0, 0.25, 0.25];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ansatz {
    /// All five components.
    Full5,
    /// (w0, w1, w3): the O(2)-symmetric class.
    O2,
    /// (w0, w1): the Z2 x O(2)-symmetric class, even k.
    Z2O2,
    /// (w0, w1) for odd k, where w3 cannot be represented.
    OddK,
}

impl Ansatz {
    pub fn mask(&self) -> [bool; 5] {
        match self {
            Ansatz::Full5 => [true; 5],
            Ansatz::O2 => [true, true, false, true, false],
            Ansatz::Z2O2 | Ansatz::OddK => [true, true, false, false, false],
        }
    }

    pub fn active(&self) -> Vec<usize> {
        (0..5).filter(|&c| self.mask()[c]).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Ansatz::Full5 => "FULL5",
            Ansatz::O2 => "O2",
            Ansatz::Z2O2 => "Z2O2",
            Ansatz::OddK => "ODDK",
        }
    }

    pub fn parse(s: &str) -> Option<Ansatz> {
        match s {
            "FULL5" => Some(Ansatz::Full5),
            "O2" => Some(Ansatz::O2),
            "Z2O2" => Some(Ansatz::Z2O2),
            "ODDK" => Some(Ansatz::OddK),
            _ => None,
        }
    }

    /// Odd k forces w3 = w4 = 0, which only the ODDK mask encodes.
    pub fn check(&self, k: i32) -> Result<(), Error> {
        let ok = k != 0 && (k % 2 == 0) != (*self == Ansatz::OddK);
        if ok {
            Ok(())
        } else {
            Err(Error::AnsatzParity { ansatz: self.name(), k })
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cell-centred grid with nodes r_i = (i + 1/2) R / N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self, Error> {
        if !(radius > 0.0 && radius.is_finite()) || cells < 2 {
            return Err(Error::InvalidGrid(format!("R = {radius}, N = {cells}")));
        }
        Ok(RadialGrid { radius, cells })
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn cells(&self) -> usize {
        self.cells
    }
    pub fn h(&self) -> f64 {
        self.radius / self.cells as f64
    }
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }
    /// Radius of the face between cells i - 1 and i.
    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.node(i)).collect()
    }
}

/// Node values of a radial field under a symmetry ansatz. Masked components
/// are stored as exact zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    ansatz: Ansatz,
    k: i32,
    params: MaterialParams,
    w: Vec<WVector>,
}

impl RadialProfile {
    pub fn from_fn<F: Fn(f64) -> WVector>(grid: RadialGrid, ansatz: Ansatz, k: i32, params: MaterialParams, f: F) -> Result<Self, Error> {
        let w = grid.nodes().into_iter().map(f).collect();
        Self::from_values(grid, ansatz, k, params, w)
    }

    pub fn from_values(grid: RadialGrid, ansatz: Ansatz, k: i32, params: MaterialParams, mut w: Vec<WVector>) -> Result<Self, Error> {
        ansatz.check(k)?;
        if w.len() != grid.cells() {
            return Err(Error::InvalidGrid(format!("{} values for {} cells", w.len(), grid.cells())));
        }
        let mask = ansatz.mask();
        for v in &mut w {
            for c in 0..5 {
                if !mask[c] {
                    v[c] = 0.0;
                }
            }
        }
        Ok(RadialProfile { grid, ansatz, k, params, w })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }
    pub fn ansatz(&self) -> Ansatz {
        self.ansatz
    }
    pub fn k(&self) -> i32 {
        self.k
    }
    pub fn params(&self) -> &MaterialParams {
        &self.params
    }
    pub fn values(&self) -> &[WVector] {
        &self.w
    }
    pub fn boundary(&self) -> WVector {
        self.params.boundary_w()
    }

    /// Same node values, reinterpreted under a wider ansatz.
    pub fn with_ansatz(&self, ansatz: Ansatz) -> Result<Self, Error> {
        Self::from_values(self.grid, ansatz, self.k, self.params, self.w.clone())
    }

    /// The Z2 image (w0, w1, w2, -w3, -w4).
    pub fn z2_image(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.w {
            v[3] = -v[3];
            v[4] = -v[4];
        }
        out
    }

    /// Piecewise-linear interpolation using the origin parity (odd
    /// components vanish at r = 0, w0 is flat) and the boundary value at R.
    pub fn sample(&self, r: f64) -> WVector {
        let h = self.grid.h();
        let n = self.grid.cells();
        let wb = self.boundary();
        let at_origin = {
            let mut v = WVector::ZERO;
            v[0] = self.w[0][0];
            v
        };
        let lerp = |a: &WVector, b: &WVector, t: f64| WVector(std::array::from_fn(|c| a[c] + t * (b[c] - a[c])));
        if r <= 0.5 * h {
            return lerp(&at_origin, &self.w[0], (r / (0.5 * h)).max(0.0));
        }
        if r >= self.grid.node(n - 1) {
            let t = ((r - self.grid.node(n - 1)) / (0.5 * h)).min(1.0);
            return lerp(&self.w[n - 1], &wb, t);
        }
        let x = r / h - 0.5;
        let i = (x.floor() as usize).min(n - 2);
        lerp(&self.w[i], &self.w[i + 1], x - i as f64)
    }

    /// Interpolates onto another grid. With `scaled`, the profile is first
    /// stretched from its own radius to the new one.
    pub fn resample(&self, grid: RadialGrid, scaled: bool) -> Self {
        let ratio = if scaled { self.grid.radius() / grid.radius() } else { 1.0 };
        let w = grid.nodes().into_iter().map(|r| self.sample(r * ratio)).collect();
        RadialProfile { grid, w, ..self.clone() }
    }

    pub fn max_norm2(&self) -> f64 {
        self.w.iter().map(|v| v.norm2()).fold(0.0, f64::max)
    }

    fn cell_volume(&self, i: usize) -> f64 {
        2.0 * PI * self.grid.h() * self.grid.node(i)
    }
}

fn potential(p: &RadialProfile, i: usize, v: &WVector) -> f64 {
    let r = p.grid.node(i);
    let k2 = (p.k as f64).powi(2);
    let ang: f64 = (0..5).map(|c| MU[c] * v[c] * v[c]).sum::<f64>() * 0.5 * k2 / (r * r);
    ang + p.params.bulk_w(v)
}

fn face_term(a: &WVector, b: &WVector) -> f64 {
    (0..5).map(|c| (b[c] - a[c]).powi(2)).sum::<f64>()
}

/// Energy contribution of each cell; faces are split evenly between their
/// two cells and the boundary half-face goes to the last cell.
pub fn radial_energy_cells(p: &RadialProfile) -> Vec<f64> {
    let g = &p.grid;
    let (n, h) = (g.cells(), g.h());
    let wb = p.boundary();
    let mut out: Vec<f64> = (0..n).map(|i| h * g.node(i) * potential(p, i, &p.w[i])).collect();
    for i in 0..n - 1 {
        let f = 0.5 * face_term(&p.w[i], &p.w[i + 1]) / h * g.face(i + 1);
        out[i] += 0.5 * f;
        out[i + 1] += 0.5 * f;
    }
    out[n - 1] += 0.5 * face_term(&p.w[n - 1], &wb) / (0.5 * h) * g.radius();
    out.iter_mut().for_each(|e| *e *= 2.0 * PI);
    out
}

/// Total discrete energy of the profile.
pub fn radial_energy(p: &RadialProfile) -> f64 {
    energy_and_gradient(p, false).0
}

/// Energy and its gradient with respect to the node values (masked
/// components have zero gradient).
pub fn energy_and_gradient(p: &RadialProfile, want_grad: bool) -> (f64, Vec<WVector>) {
    let g = &p.grid;
    let (n, h) = (g.cells(), g.h());
    let wb = p.boundary();
    let mask = p.ansatz.mask();
    let k2 = (p.k as f64).powi(2);
    let mut e = 0.0;
    let mut grad = if want_grad { vec![WVector::ZERO; n] } else { Vec::new() };
    for i in 0..n {
        let r = g.node(i);
        let v = &p.w[i];
        e += h * r * potential(p, i, v);
        if want_grad {
            let db = p.params.bulk_grad_w(v);
            for c in 0..5 {
                if mask[c] {
                    grad[i][c] += h * r * (MU[c] * k2 * v[c] / (r * r) + db[c]);
                }
            }
        }
    }
    for i in 0..n {
        let (a, b, weight) = if i + 1 < n { (&p.w[i], &p.w[i + 1], g.face(i + 1) / h) } else { (&p.w[i], &wb, 2.0 * g.radius() / h) };
        e += 0.5 * face_term(a, b) * weight;
        if want_grad {
            for c in 0..5 {
                if mask[c] {
                    let d = (b[c] - a[c]) * weight;
                    grad[i][c] -= d;
                    if i + 1 < n {
                        grad[i + 1][c] += d;
                    }
                }
            }
        }
    }
    for v in &mut grad {
        for c in 0..5 {
            v[c] *= 2.0 * PI;
        }
    }
    (2.0 * PI * e, grad)
}

/// Gradient divided by the cell volume: a pointwise residual.
pub fn scaled_gradient_max(p: &RadialProfile, grad: &[WVector]) -> f64 {
    let mut m = 0.0f64;
    for (i, gv) in grad.iter().enumerate() {
        let vol = p.cell_volume(i);
        for c in 0..5 {
            m = m.max(gv[c].abs() / vol);
        }
    }
    m
}

/// Central-difference residual of the radial Euler-Lagrange system,
/// w'' + w'/r - mu k^2 w / r^2 - RHS(w), with odd ghosts for w1..w4, an even
/// ghost for w0 at the origin and w_N = 2 w_b - w_{N-1} at r = R. Masked
/// components report zero.
pub fn ode_residual(p: &RadialProfile) -> Vec<WVector> {
    let g = &p.grid;
    let (n, h) = (g.cells(), g.h());
    let wb = p.boundary();
    let mask = p.ansatz.mask();
    let k2 = (p.k as f64).powi(2);
    let (a2, b2, c2) = (p.params.a2(), p.params.b2(), p.params.c2());
    let mut out = vec![WVector::ZERO; n];
    for i in 0..n {
        let r = g.node(i);
        let v = &p.w[i];
        let left = |c: usize| {
            if i > 0 {
                p.w[i - 1][c]
            } else if c == 0 {
                v[c]
            } else {
                -v[c]
            }
        };
        let right = |c: usize| if i + 1 < n { p.w[i + 1][c] } else { 2.0 * wb[c] - v[c] };
        let [w0, w1, w2, w3, w4] = v.0;
        let q = -a2 + c2 * v.norm2();
        let rhs = [
            w0 * (q - b2 * w0 / SQRT6) + b2 / SQRT6 * (w1 * w1 + w2 * w2) - b2 / (2.0 * SQRT6) * (w3 * w3 + w4 * w4),
            w1 * (q + 2.0 * b2 * w0 / SQRT6) - b2 / (2.0 * SQRT2) * (w3 * w3 - w4 * w4),
            w2 * (q + 2.0 * b2 * w0 / SQRT6) - b2 / SQRT2 * w3 * w4,
            w3 * (q - b2 * w0 / SQRT6 - b2 * w1 / SQRT2) - b2 / SQRT2 * w2 * w4,
            w4 * (q - b2 * w0 / SQRT6 + b2 * w1 / SQRT2) - b2 / SQRT2 * w2 * w3,
        ];
        for c in 0..5 {
            if !mask[c] {
                continue;
            }
            let (l, m, rr) = (left(c), v[c], right(c));
            let lap = (rr - 2.0 * m + l) / (h * h) + (rr - l) / (2.0 * h * r);
            out[i][c] = lap - MU[c] * k2 * m / (r * r) - rhs[c];
        }
    }
    out
}

pub fn max_abs(v: &[WVector]) -> f64 {
    v.iter().flat_map(|x| x.0.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Exact Hessian of the discrete energy restricted to the active
/// components, as a block-tridiagonal matrix with the active components of
/// each cell as one block.
pub fn radial_hessian(p: &RadialProfile) -> BlockTridiag {
    radial_hessian_on(p, &p.ansatz.active())
}

/// Exact Hessian restricted to the components `act`, which need not match
/// the profile's ansatz.
pub fn radial_hessian_on(p: &RadialProfile, act: &[usize]) -> BlockTridiag {
    let mut h = linear_operator(p, act);
    let g = &p.grid;
    let m = act.len();
    for i in 0..g.cells() {
        let hb = p.params.bulk_hess_w(&p.w[i]);
        let scale = 2.0 * PI * g.h() * g.node(i);
        let blk = h.diag_block_mut(i);
        for (a, &ca) in act.iter().enumerate() {
            for (b, &cb) in act.iter().enumerate() {
                blk[a * m + b] += scale * hb[ca][cb];
            }
        }
    }
    h
}

/// Quadratic (gradient plus angular) part of the energy on the components
/// `act`.
pub fn linear_operator(p: &RadialProfile, act: &[usize]) -> BlockTridiag {
    let g = &p.grid;
    let (n, h) = (g.cells(), g.h());
    let m = act.len();
    let k2 = (p.k as f64).powi(2);
    let mut op = BlockTridiag::zeros(n, m);
    for i in 0..n {
        let r = g.node(i);
        let left = if i > 0 { g.face(i) / h } else { 0.0 };
        let right = if i + 1 < n { g.face(i + 1) / h } else { 2.0 * g.radius() / h };
        let blk = op.diag_block_mut(i);
        for (a, &c) in act.iter().enumerate() {
            blk[a * m + a] = 2.0 * PI * (left + right + h * MU[c] * k2 / r);
        }
        if i + 1 < n {
            let w = -2.0 * PI * g.face(i + 1) / h;
            op.off_mut(i).iter_mut().for_each(|v| *v = w);
        }
    }
    op
}

/// Cell volumes repeated for each active component.
pub fn mass_vector(p: &RadialProfile, act: &[usize]) -> Vec<f64> {
    (0..p.grid.cells()).flat_map(|i| std::iter::repeat_n(p.cell_volume(i), act.len())).collect()
}

pub fn pack(act: &[usize], field: &[WVector]) -> Vec<f64> {
    field.iter().flat_map(|v| act.iter().map(move |&c| v[c])).collect()
}

pub fn unpack(act: &[usize], flat: &[f64]) -> Vec<WVector> {
    flat.chunks(act.len())
        .map(|ch| {
            let mut v = WVector::ZERO;
            for (a, &c) in act.iter().enumerate() {
                v[c] = ch[a];
            }
            v
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct RadialOptions {
    /// Stop when the scaled gradient max-norm drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Mass shift of the linear preconditioner.
    pub sigma: f64,
    /// Take Newton steps whenever the Hessian is positive definite.
    pub newton: bool,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions { tol: tol::RADIAL_GRADIENT, max_iter: 20_000, sigma: 1.0, newton: true }
    }
}

#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub profile: RadialProfile,
    pub energy: f64,
    pub iterations: usize,
    pub gradient: f64,
    /// Energy after every accepted step, starting with the initial energy.
    pub history: Vec<f64>,
}

/// Preconditioned descent on the discrete energy. Directions come from the
/// exact block Hessian while it is positive definite and from the shifted
/// linear operator with Barzilai-Borwein step lengths otherwise; every step
/// passes an Armijo test, so the energy never increases beyond round-off.
pub fn minimize_radial(init: &RadialProfile, opts: &RadialOptions) -> Result<RadialSolution, NotConverged<RadialProfile>> {
    let act = init.ansatz.active();
    let mut p = init.clone();
    let (mut e, mut grad) = energy_and_gradient(&p, true);
    let mut history = vec![e];
    let pre = {
        let mass = mass_vector(&p, &act);
        let lin = linear_operator(&p, &act);
        let mut shifted = lin.clone();
        for i in 0..shifted.blocks() {
            let m = act.len();
            let blk = shifted.diag_block_mut(i);
            for a in 0..m {
                blk[a * m + a] += opts.sigma * mass[i * m + a];
            }
        }
        shifted.factor(0.0, None).expect("shifted linear operator is positive definite")
    };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut gnorm = scaled_gradient_max(&p, &grad);
    for iter in 0..opts.max_iter {
        if gnorm <= opts.tol {
            return Ok(RadialSolution { profile: p, energy: e, iterations: iter, gradient: gnorm, history });
        }
        let x = pack(&act, &p.w);
        let gflat = pack(&act, &grad);
        let mut d = vec![0.0; x.len()];
        let newton = if opts.newton { radial_hessian(&p).factor(0.0, None).filter(|f| f.is_positive_definite()) } else { None };
        let mut alpha = 1.0;
        match &newton {
            Some(f) => f.solve(&gflat, &mut d),
            None => {
                pre.solve(&gflat, &mut d);
                if let Some((s, y)) = &prev {
                    // Preconditioned BB2 step: s.y / y.P^{-1}y.
                    let mut pz = vec![0.0; s.len()];
                    pre.solve(y, &mut pz);
                    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
                    let yy: f64 = y.iter().zip(&pz).map(|(a, b)| a * b).sum();
                    if sy > 0.0 && yy > 0.0 {
                        alpha = (sy / yy).clamp(1e-6, 1e6);
                    }
                }
            }
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let slope: f64 = gflat.iter().zip(&d).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            return Err(NotConverged { last: p, iterations: iter, gradient: gnorm, reason: "non-descent direction" });
        }
        let slack = 1e-13 * (1.0 + e.abs());
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let mut q = p.clone();
            q.w = unpack(&act, &trial);
            let (et, gt) = energy_and_gradient(&q, true);
            if et.is_finite() && et <= e + 1e-4 * alpha * slope + slack {
                accepted = Some((q, et, gt, trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((q, et, gt, trial)) = accepted else {
            return Err(NotConverged { last: p, iterations: iter, gradient: gnorm, reason: "line search failed" });
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let gnew = pack(&act, &gt);
        let y: Vec<f64> = gnew.iter().zip(&gflat).map(|(a, b)| a - b).collect();
        prev = Some((s, y));
        p = q;
        e = et;
        grad = gt;
        history.push(e);
        gnorm = scaled_gradient_max(&p, &grad);
    }
    if gnorm <= opts.tol {
        let iterations = opts.max_iter;
        return Ok(RadialSolution { profile: p, energy: e, iterations, gradient: gnorm, history });
    }
    Err(NotConverged { last: p, iterations: opts.max_iter, gradient: gnorm, reason: "iteration cap" })
}

/// The competitor of the logarithmic bound: w0 = -s/sqrt6, w1 = (s/sqrt2) min(r, 1).
pub fn log_test_function(params: &MaterialParams) -> impl Fn(f64) -> WVector {
    let s = params.s_plus();
    move |r: f64| WVector([-s / SQRT6, s / SQRT2 * r.min(1.0), 0.0, 0.0, 0.0])
}

#[derive(Clone, Debug)]
pub struct AlphaR {
    pub value: f64,
    /// Energies reached from the three initialisations, in the order test
    /// function, constant extension, biaxial escape.
    pub starts: [f64; 3],
    pub profile: RadialProfile,
}

/// Minimal Z2 x O(2) energy over three initialisations on a grid with
/// `cells` cells. Odd k uses the ODDK mask, which has the same components.
pub fn alpha_r(params: &MaterialParams, k: i32, radius: f64, cells: usize, opts: &RadialOptions) -> Result<AlphaR, Error> {
    let grid = RadialGrid::new(radius, cells)?;
    let ansatz = if k % 2 == 0 { Ansatz::Z2O2 } else { Ansatz::OddK };
    let s = params.s_plus();
    let wb = params.boundary_w();
    let escape = WVector([2.0 * s / SQRT6, 0.0, 0.0, 0.0, 0.0]);
    let test = log_test_function(params);
    let inits: [Box<dyn Fn(f64) -> WVector>; 3] = [
        Box::new(test),
        Box::new(move |_r| wb),
        Box::new(move |r: f64| {
            let chi = 1.0 / (1.0 + (r / 2.0).powi(4));
            WVector(std::array::from_fn(|c| chi * escape[c] + (1.0 - chi) * wb[c]))
        }),
    ];
    let mut best: Option<RadialSolution> = None;
    let mut starts = [0.0; 3];
    for (j, f) in inits.iter().enumerate() {
        let init = RadialProfile::from_fn(grid, ansatz, k, *params, f)?;
        let sol = minimize_radial(&init, opts).map_err(|e| Error::Solver(format!("alpha_R start {j}: {e}")))?;
        starts[j] = sol.energy;
        if best.as_ref().is_none_or(|b| sol.energy < b.energy) {
            best = Some(sol);
        }
    }
    let best = best.expect("three starts");
    Ok(AlphaR { value: best.energy, starts, profile: best.profile })
}

/// O(2)-class minimiser started from the rescaled harmonic limit whose core
/// points along +e3 (`positive`) or -e3. Even k only.
pub fn escaped_minimizer(params: &MaterialParams, k: i32, radius: f64, cells: usize, positive: bool, opts: &RadialOptions) -> Result<RadialSolution, Error> {
    let grid = RadialGrid::new(radius, cells)?;
    let init = crate::limit::HarmonicLimit::new(positive, k, *params)?.radial_profile(grid);
    minimize_radial(&init, opts).map_err(|e| Error::Solver(format!("escaped minimiser at R = {radius}: {e}")))
}
