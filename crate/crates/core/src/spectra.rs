//! Linearised operators at the escaped harmonic limit and second-variation
//! probes of the discrete energies.
//!
//! The harmonic-map operator `-Δζ - |∇n_*|² ζ` on the unit disk is radially
//! symmetric, so both variants reduce to one radial problem per Fourier
//! mode. For the scalar (unconstrained) problem mode `m >= 0` carries the
//! potential `m²/r² - V`. For tangent fields `ζ = a e_θ + b e_ψ` written in
//! the spherical frame of `n_*`, the complex amplitude `u = a + i b` of
//! `e^{imφ}` sees `(m + (k/2) n_3)²/r² - V/2` for every integer `m`, with
//! `V = |∇n_*|² = 2k² r^{k-2} / (1 + r^k)²`. Constrained trial fields are
//! therefore tangent by construction.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::{BlockLdl, BlockTridiag};
use crate::disk::{disk_energy_gradient, DiskField, Preconditioner};
use crate::error::Error;
use crate::lanczos::{self, LanczosOptions, Pencil};
use crate::limit::HarmonicLimit;
use crate::qtensor::{MaterialParams, QTensor, SQRT2};
use crate::radial::{self, Ansatz, RadialGrid, RadialProfile};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Scalar fields, no pointwise constraint.
    None,
    /// Vector fields with ζ . n_* = 0.
    Tangent,
}

impl Constraint {
    pub fn id(&self) -> &'static str {
        match self {
            Constraint::None => "none",
            Constraint::Tangent => "tangent",
        }
    }
}

/// Smallest eigenvalues of one discretised operator. Each entry is one
/// radial eigenvalue of one Fourier mode; the angular multiplicity (two for
/// the real fields `cos mφ, sin mφ` or the complex phase) is not repeated.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub operator: String,
    pub constraint: Constraint,
    pub k: i32,
    /// Radial cells on the unit disk.
    pub cells: usize,
    pub eigenvalues: Vec<f64>,
    /// Fourier index of each eigenvalue.
    pub modes: Vec<i32>,
    /// |A v - λ M v| in the M^{-1} norm for the M-normalised eigenvector.
    pub residuals: Vec<f64>,
    /// Largest Gershgorin bound of M^{-1} A over the modes searched.
    pub norm_estimate: f64,
    /// Cell centres.
    pub nodes: Vec<f64>,
    /// Radial factor of the ground state, M-normalised with positive mean.
    pub eigenfunction: Vec<f64>,
}

impl SpectralReport {
    /// |<u, f>_M| / (|u|_M |f|_M) between the ground state and `f(r)`.
    pub fn correlation_with<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let h = 1.0 / self.cells as f64;
        let (mut uf, mut ff, mut uu) = (0.0, 0.0, 0.0);
        for (&r, &u) in self.nodes.iter().zip(&self.eigenfunction) {
            let (w, v) = (h * r, f(r));
            uf += w * u * v;
            ff += w * v * v;
            uu += w * u * u;
        }
        uf.abs() / (ff * uu).sqrt()
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// |∇n_*|² of the escaped limit with winding |k|.
pub fn harmonic_density(k: i32, r: f64) -> f64 {
    let kk = k.unsigned_abs() as f64;
    let t = r.powf(kk);
    2.0 * kk * kk * r.powf(kk - 2.0) / (1.0 + t).powi(2)
}

/// n_3 = (1 - r^k) / (1 + r^k), the ground state of the scalar problem.
pub fn n3_profile(k: i32, r: f64) -> f64 {
    let t = r.powf(k.unsigned_abs() as f64);
    (1.0 - t) / (1.0 + t)
}

/// Radial potential of Fourier mode `m`.
pub fn mode_potential(k: i32, constraint: Constraint, m: i32, r: f64) -> f64 {
    let v = harmonic_density(k, r);
    match constraint {
        Constraint::None => (m * m) as f64 / (r * r) - v,
        Constraint::Tangent => {
            let a = m as f64 + 0.5 * k.unsigned_abs() as f64 * n3_profile(k, r);
            a * a / (r * r) - 0.5 * v
        }
    }
}

/// Stiffness matrix and mass of Fourier mode `m` on the unit disk with
/// `cells` cells, Dirichlet data at r = 1. The common factor 2π is dropped.
pub fn l_parallel_mode(k: i32, constraint: Constraint, m: i32, cells: usize) -> Result<(BlockTridiag, Vec<f64>), Error> {
    let grid = RadialGrid::new(1.0, cells)?;
    let (n, h) = (cells, grid.h());
    let mut a = BlockTridiag::zeros(n, 1);
    let mut mass = vec![0.0; n];
    for i in 0..n {
        let r = grid.node(i);
        let left = if i > 0 { grid.face(i) / h } else { 0.0 };
        let right = if i + 1 < n { grid.face(i + 1) / h } else { 2.0 / h };
        a.diag_block_mut(i)[0] = left + right + h * r * mode_potential(k, constraint, m, r);
        if i + 1 < n {
            a.off_mut(i)[0] = -grid.face(i + 1) / h;
        }
        mass[i] = h * r;
    }
    Ok((a, mass))
}

/// The discrete operator M^{-1} A of mode `m` applied to nodal values.
pub fn apply_l_parallel(k: i32, constraint: Constraint, m: i32, u: &[f64]) -> Result<Vec<f64>, Error> {
    let (a, mass) = l_parallel_mode(k, constraint, m, u.len())?;
    let mut out = vec![0.0; u.len()];
    a.matvec(u, &mut out);
    out.iter_mut().zip(&mass).for_each(|(o, w)| *o /= w);
    Ok(out)
}

fn check_even(k: i32) -> Result<(), Error> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::Representation { k, detail: "the escaped harmonic limit needs an even nonzero winding".into() });
    }
    Ok(())
}

/// The `count` smallest eigenvalues of the linearised harmonic-map operator
/// at n_*, searched over Fourier modes |m| <= 2|k| + 4 (m >= 0 when
/// unconstrained).
pub fn l_parallel_spectrum(k: i32, constraint: Constraint, cells: usize, count: usize) -> Result<SpectralReport, Error> {
    check_even(k)?;
    if count == 0 {
        return Err(Error::Eigen("count must be positive".into()));
    }
    let m_max = 2 * k.abs() + 4;
    let m_min = if constraint == Constraint::None { 0 } else { -m_max };
    let per_mode = count.min(cells);
    let mut found: Vec<(f64, i32, f64, Vec<f64>)> = Vec::new();
    let mut norm = 0.0f64;
    for m in m_min..=m_max {
        let (a, mass) = l_parallel_mode(k, constraint, m, cells)?;
        let (lo, hi) = a.gershgorin(&mass);
        norm = norm.max(lo.abs()).max(hi.abs());
        for (lambda, v) in a.smallest_eigenpairs(&mass, per_mode)? {
            let res = a.eigen_residual(lambda, &v, &mass);
            found.push((lambda, m, res, v));
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    found.truncate(count);
    if let Some(bad) = found.iter().find(|f| f.2 > tol::EIGEN_RESIDUAL_REL * norm) {
        return Err(Error::Eigen(format!("mode {} eigenvalue {:.6e} has residual {:.3e}", bad.1, bad.0, bad.2)));
    }
    let grid = RadialGrid::new(1.0, cells)?;
    let mut eigenfunction = found[0].3.clone();
    if eigenfunction.iter().sum::<f64>() < 0.0 {
        eigenfunction.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(SpectralReport {
        operator: "l_parallel".into(),
        constraint,
        k,
        cells,
        eigenvalues: found.iter().map(|f| f.0).collect(),
        modes: found.iter().map(|f| f.1).collect(),
        residuals: found.iter().map(|f| f.2).collect(),
        norm_estimate: norm,
        nodes: grid.nodes(),
        eigenfunction,
    })
}

fn outer(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    a * b.transpose()
}

/// Orthonormal basis of the normal space at the uniaxial tensor with
/// director `n`: Q/|Q| and the two biaxial directions in the plane ⊥ n.
pub fn normal_basis(n: &Vector3<f64>) -> [QTensor; 3] {
    let n = n.normalize();
    let seed = if n.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let t1 = seed.cross(&n).normalize();
    let t2 = n.cross(&t1);
    let e0 = QTensor::project(&(outer(&n, &n) - Matrix3::identity() / 3.0));
    [
        e0.scale(1.0 / e0.norm()),
        QTensor::project(&((outer(&t1, &t1) - outer(&t2, &t2)) / SQRT2)),
        QTensor::project(&((outer(&t1, &t2) + outer(&t2, &t1)) / SQRT2)),
    ]
}

/// The zeroth-order transversal map P -> b² s P + 2 (c² s - b²)(n.P n) Q_*.
pub fn l_perp_map(params: &MaterialParams, n: &Vector3<f64>, p: &QTensor) -> QTensor {
    let s = params.s_plus();
    let n = n.normalize();
    let q = QTensor::uniaxial(s, &n);
    let pnn = n.dot(&(p.matrix() * n));
    p.scale(params.b2() * s).add(&q.scale(2.0 * (params.c2() * s - params.b2()) * pnn))
}

/// Eigenvalues (ascending) of the transversal map on the normal space at
/// Q_*(x).
pub fn l_perp_point_eigs(limit: &HarmonicLimit, x: &Vector2<f64>) -> [f64; 3] {
    let n = limit.n_star(x);
    let basis = normal_basis(&n);
    let mut a = Matrix3::zeros();
    for j in 0..3 {
        let img = l_perp_map(limit.params(), &n, &basis[j]);
        for i in 0..3 {
            a[(i, j)] = basis[i].dot(&img);
        }
    }
    let sym = 0.5 * (a + a.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[1], ev[2]]
}

/// Perturbation spaces of a Hessian probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// w3 alone.
    W3,
    /// (w0, w1, w3).
    O2,
    /// All five components.
    Full5,
}

impl Subspace {
    pub fn tag(&self) -> &'static str {
        match self {
            Subspace::W3 => "w3-direction",
            Subspace::O2 => "full O2",
            Subspace::Full5 => "full 5",
        }
    }

    pub fn components(&self) -> &'static [usize] {
        match self {
            Subspace::W3 => &[3],
            Subspace::O2 => &[0, 1, 3],
            Subspace::Full5 => &[0, 1, 2, 3, 4],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    /// Mass shift of the preconditioner L + sigma M. It has to sit well
    /// above the wanted eigenvalues.
    pub sigma: f64,
    pub lanczos: LanczosOptions,
    /// Radial bases only: also compute the eigenvalues of the assembled
    /// Hessian by bisection.
    pub exact: bool,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { sigma: 10.0, lanczos: LanczosOptions::default(), exact: true }
    }
}

#[derive(Clone, Debug)]
pub struct HessianProbe {
    /// Description of the base state.
    pub base: String,
    pub subspace: Subspace,
    /// Smallest Ritz values, ascending.
    pub eigenvalues: Vec<f64>,
    /// M-normalised Ritz vectors over the subspace components, node-major.
    pub witnesses: Vec<Vec<f64>>,
    /// Rayleigh quotients of the witnesses, recomputed from fresh
    /// Hessian-vector products.
    pub rayleigh: Vec<f64>,
    /// Preconditioned residuals from the eigensolver.
    pub residuals: Vec<f64>,
    pub norm_estimate: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Eigenvalues of the assembled Hessian, when requested.
    pub exact: Option<Vec<f64>>,
}

impl HessianProbe {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Largest |rayleigh - value| / max(|value|, norm * EIGEN_RESIDUAL_REL).
    pub fn rayleigh_mismatch(&self) -> f64 {
        let floor = self.norm_estimate * tol::EIGEN_RESIDUAL_REL;
        self.eigenvalues.iter().zip(&self.rayleigh).map(|(v, r)| (r - v).abs() / v.abs().max(floor)).fold(0.0, f64::max)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference Hessian-vector products of the radial energy on a
/// subset of components, with the shifted quadratic part as preconditioner.
pub struct RadialFdHessian {
    base: RadialProfile,
    act: Vec<usize>,
    mass: Vec<f64>,
    step: f64,
    pre: BlockLdl,
}

impl RadialFdHessian {
    pub fn new(base: &RadialProfile, subspace: Subspace, sigma: f64) -> Result<Self, Error> {
        let base = base.with_ansatz(Ansatz::Full5)?;
        let act = subspace.components().to_vec();
        let mass = radial::mass_vector(&base, &act);
        let pre = radial::linear_operator(&base, &act)
            .factor(-sigma, Some(&mass))
            .filter(|f| f.is_positive_definite())
            .ok_or_else(|| Error::Eigen("shifted preconditioner is not positive definite".into()))?;
        let step = tol::FD_HESSIAN_STEP * (1.0 + radial::max_abs(base.values()));
        Ok(RadialFdHessian { base, act, mass, step, pre })
    }

    fn gradient_at(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut w = self.base.values().to_vec();
        let m = self.act.len();
        for (i, v) in w.iter_mut().enumerate() {
            for (a, &c) in self.act.iter().enumerate() {
                v[c] += t * x[i * m + a];
            }
        }
        let p = RadialProfile::from_values(*self.base.grid(), Ansatz::Full5, self.base.k(), *self.base.params(), w).expect("same grid and ansatz as the base");
        let (_, g) = radial::energy_and_gradient(&p, true);
        radial::pack(&self.act, &g)
    }

    /// The Hessian restricted to the subspace, assembled exactly.
    pub fn assembled(&self) -> BlockTridiag {
        radial::radial_hessian_on(&self.base, &self.act)
    }
}

/// Disk analogue of [`RadialFdHessian`]; the subspace is a component mask
/// applied at every node.
pub struct DiskFdHessian {
    base: DiskField,
    act: Vec<usize>,
    mass: Vec<f64>,
    step: f64,
    pre: Preconditioner,
}

impl DiskFdHessian {
    pub fn new(base: &DiskField, subspace: Subspace, sigma: f64) -> Result<Self, Error> {
        let act = subspace.components().to_vec();
        if base.k() % 2 != 0 && act.iter().any(|&c| c >= 3) {
            return Err(Error::Representation { k: base.k(), detail: "w3/w4 perturbations are not representable".into() });
        }
        let g = base.grid();
        let mass = (0..g.n_r()).flat_map(|i| std::iter::repeat_n(g.volume(i), g.n_phi() * act.len())).collect();
        let step = tol::FD_HESSIAN_STEP * (1.0 + inf_norm(base.values()));
        let pre = Preconditioner::new(g, base.k(), sigma);
        Ok(DiskFdHessian { base: base.clone(), act, mass, step, pre })
    }

    fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let m = self.act.len();
        let mut full = vec![0.0; self.base.values().len()];
        for (node, chunk) in x.chunks(m).enumerate() {
            for (a, &c) in self.act.iter().enumerate() {
                full[node * 5 + c] = chunk[a];
            }
        }
        full
    }

    fn gather(&self, full: &[f64]) -> Vec<f64> {
        full.chunks(5).flat_map(|v| self.act.iter().map(move |&c| v[c])).collect()
    }

    fn gradient_at(&self, x: &[f64], t: f64) -> Vec<f64> {
        let dx = self.scatter(x);
        let w: Vec<f64> = self.base.values().iter().zip(&dx).map(|(a, b)| a + t * b).collect();
        let f = DiskField::from_values(*self.base.grid(), self.base.k(), *self.base.params(), w).expect("mask keeps the field representable");
        let (_, g) = disk_energy_gradient(&f).expect("representable field");
        self.gather(&g)
    }
}

/// Matrix-free Hessian of a discrete energy on a subspace.
pub trait FdHessian: Pencil {
    fn step(&self) -> f64;
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64>;

    /// Central difference of the gradient along `v`, step
    /// FD_HESSIAN_STEP (1 + |base|_inf) in the sup norm of the perturbation.
    fn hessian_vector(&self, v: &[f64]) -> Vec<f64> {
        let vn = inf_norm(v);
        if vn == 0.0 {
            return vec![0.0; v.len()];
        }
        let t = self.step() / vn;
        let gp = self.gradient(v, t);
        let gm = self.gradient(v, -t);
        gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * t)).collect()
    }

    fn rayleigh(&self, v: &[f64]) -> f64 {
        let hv = self.hessian_vector(v);
        let mv: f64 = v.iter().zip(self.mass()).map(|(x, m)| x * x * m).sum();
        dot(v, &hv) / mv
    }
}

impl FdHessian for RadialFdHessian {
    fn step(&self) -> f64 {
        self.step
    }
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.gradient_at(x, t)
    }
}

impl Pencil for RadialFdHessian {
    fn dim(&self) -> usize {
        self.mass.len()
    }
    fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.hessian_vector(x));
    }
    fn solve_k(&self, b: &[f64], out: &mut [f64]) {
        self.pre.solve(b, out);
    }
    fn mass(&self) -> &[f64] {
        &self.mass
    }
}

impl FdHessian for DiskFdHessian {
    fn step(&self) -> f64 {
        self.step
    }
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.gradient_at(x, t)
    }
}

impl Pencil for DiskFdHessian {
    fn dim(&self) -> usize {
        self.mass.len()
    }
    fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.hessian_vector(x));
    }
    fn solve_k(&self, b: &[f64], out: &mut [f64]) {
        let full = self.scatter(b);
        let mut sol = vec![0.0; full.len()];
        self.pre.apply(&full, &mut sol);
        out.copy_from_slice(&self.gather(&sol));
    }
    fn mass(&self) -> &[f64] {
        &self.mass
    }
}

fn probe<H: FdHessian>(op: &H, base: String, subspace: Subspace, count: usize, opts: &ProbeOptions) -> Result<HessianProbe, Error> {
    let res = lanczos::smallest_eigenpairs(op, count, &opts.lanczos)?;
    let rayleigh = res.pairs.iter().map(|p| op.rayleigh(&p.vector)).collect();
    Ok(HessianProbe {
        base,
        subspace,
        eigenvalues: res.pairs.iter().map(|p| p.value).collect(),
        witnesses: res.pairs.iter().map(|p| p.vector.clone()).collect(),
        rayleigh,
        residuals: res.pairs.iter().map(|p| p.residual).collect(),
        norm_estimate: res.norm_estimate,
        iterations: res.iterations,
        restarts: res.restarts,
        exact: None,
    })
}

/// Smallest `count` eigenvalues of the second variation of the radial
/// energy at `base`, perturbing only the subspace components.
pub fn hessian_smallest_radial(base: &RadialProfile, subspace: Subspace, count: usize, opts: &ProbeOptions) -> Result<HessianProbe, Error> {
    let op = RadialFdHessian::new(base, subspace, opts.sigma)?;
    let desc = format!("radial {} k={} R={} N={}", base.ansatz(), base.k(), base.grid().radius(), base.grid().cells());
    let mut out = probe(&op, desc, subspace, count, opts)?;
    if opts.exact {
        let pairs = op.assembled().smallest_eigenpairs(&op.mass, count)?;
        out.exact = Some(pairs.into_iter().map(|(l, _)| l).collect());
    }
    Ok(out)
}

/// Same probe for an unrestricted disk field.
pub fn hessian_smallest_disk(base: &DiskField, subspace: Subspace, count: usize, opts: &ProbeOptions) -> Result<HessianProbe, Error> {
    let op = DiskFdHessian::new(base, subspace, opts.sigma)?;
    let g = base.grid();
    let desc = format!("disk k={} R={} {}x{}", base.k(), g.radius(), g.n_r(), g.n_phi());
    probe(&op, desc, subspace, count, opts)
}

/// Random smooth test vectors for the property checks: low-order sine modes
/// in the node index, one independent set per component slot.
pub fn smooth_random_vector(len: usize, slots: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = len / slots;
    let coef: Vec<[f64; 4]> = (0..slots).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
    (0..len)
        .map(|idx| {
            let (i, a) = (idx / slots, idx % slots);
            let x = (i as f64 + 0.5) / n as f64;
            coef[a].iter().enumerate().map(|(l, c)| c * ((l + 1) as f64 * PI * x).sin()).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtensor::derive_params;
    use crate::radial::{escaped_minimizer, RadialOptions};

    #[test]
    fn l_perp_eigenvalues_for_unit_params() {
        let limit = HarmonicLimit::new(true, 2, MaterialParams::default()).unwrap();
        for x in [Vector2::new(0.0, 0.0), Vector2::new(0.3, -0.4), Vector2::new(-0.7, 0.65)] {
            let ev = l_perp_point_eigs(&limit, &x);
            assert!((ev[0] - 1.5).abs() < tol::EXACT && (ev[1] - 1.5).abs() < tol::EXACT, "{ev:?}");
            assert!((ev[2] - 2.5).abs() < tol::EXACT, "{ev:?}");
        }
    }

    #[test]
    fn l_perp_bound_over_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = derive_params(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)).unwrap();
            let s = p.s_plus();
            let (par, perp) = (2.0 * p.a2() + p.b2() * s / 3.0, p.b2() * s);
            let limit = HarmonicLimit::new(rng.random_bool(0.5), 4, p).unwrap();
            let x = Vector2::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7));
            let ev = l_perp_point_eigs(&limit, &x);
            let lo = par.min(perp);
            assert!(ev[0] >= lo - 1e-10 * (1.0 + lo.abs()), "{ev:?} vs {lo}");
            let mut want = [par, perp, perp];
            want.sort_by(f64::total_cmp);
            for i in 0..3 {
                assert!((ev[i] - want[i]).abs() <= 1e-10 * (1.0 + want[i].abs()));
            }
            // The quadratic form attains the bound in the predicted direction.
            let n = limit.n_star(&x);
            let basis = normal_basis(&n);
            let dir = if par <= perp { &basis[0] } else { &basis[1] };
            let form = dir.dot(&l_perp_map(&p, &n, dir));
            assert!((form - lo).abs() <= 1e-10 * (1.0 + lo.abs()));
        }
    }

    #[test]
    fn normal_basis_is_orthonormal_and_normal() {
        let n = Vector3::new(0.3, -0.5, 0.8).normalize();
        let b = normal_basis(&n);
        let q = QTensor::uniaxial(1.5, &n);
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].dot(&b[j]) - d).abs() < 1e-14);
            }
            let c = b[i].matrix() * q.matrix() - q.matrix() * b[i].matrix();
            assert!(c.norm() < 1e-14);
        }
    }

    #[test]
    fn scalar_ground_state_is_n3() {
        for k in [2, 4] {
            let rep = l_parallel_spectrum(k, Constraint::None, 800, 3).unwrap();
            assert!(rep.lambda1().abs() <= tol::L_PAR_ZERO, "k={k}: {}", rep.lambda1());
            assert_eq!(rep.modes[0], 0);
            let corr = rep.correlation_with(|r| n3_profile(k, r));
            assert!(corr >= tol::L_PAR_CORRELATION, "k={k}: {corr}");
            assert!(rep.eigenvalues[1] > 1.0);
            for r in &rep.residuals {
                assert!(*r <= tol::EIGEN_RESIDUAL_REL * rep.norm_estimate);
            }
        }
    }

    #[test]
    fn tangent_spectrum_is_positive_and_grows_under_refinement() {
        let mut prev = f64::NEG_INFINITY;
        for cells in [200, 400, 800] {
            let rep = l_parallel_spectrum(2, Constraint::Tangent, cells, 4).unwrap();
            let l1 = rep.lambda1();
            assert!(l1 >= tol::L_PAR_CONSTRAINED_MIN, "{cells}: {l1}");
            assert!(l1 > prev, "{cells}: {l1} after {prev}");
            prev = l1;
        }
    }

    #[test]
    fn discrete_operator_annihilates_n3_to_second_order() {
        // The last cell sees the Dirichlet value half a cell away, so its
        // local truncation error does not shrink; every other cell is second
        // order, and so is the ground-state eigenvalue.
        let residual = |cells: usize| {
            let nodes = RadialGrid::new(1.0, cells).unwrap().nodes();
            let u: Vec<f64> = nodes.iter().map(|&r| n3_profile(2, r)).collect();
            let lu = apply_l_parallel(2, Constraint::None, 0, &u).unwrap();
            inf_norm(&lu[..cells - 1])
        };
        let (a, b) = (residual(200), residual(400));
        assert!(a < 1e-3, "{a}");
        assert!((a / b).log2() >= tol::REFINEMENT_ORDER, "{a} {b}");
        let l1 = |cells| l_parallel_spectrum(2, Constraint::None, cells, 1).unwrap().lambda1().abs();
        let (a, b) = (l1(200), l1(400));
        assert!((a / b).log2() >= tol::REFINEMENT_ORDER, "{a} {b}");
    }

    #[test]
    fn substitution_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 0..4 {
            let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let xi = |r: f64| r.powi(m) * (1.0 - r * r) * (c[0] + c[1] * r * r + c[2] * r.powi(4));
            let dxi = |r: f64| {
                let poly = c[0] + c[1] * r * r + c[2] * r.powi(4);
                let dpoly = 2.0 * c[1] * r + 4.0 * c[2] * r.powi(3);
                let mf = m as f64;
                let lead = if m == 0 { 0.0 } else { mf * r.powi(m - 1) };
                lead * (1.0 - r * r) * poly + r.powi(m) * (-2.0 * r * poly + (1.0 - r * r) * dpoly)
            };
            let gap = |cells: usize| {
                let (a, mass) = l_parallel_mode(2, Constraint::None, m, cells).unwrap();
                let nodes = RadialGrid::new(1.0, cells).unwrap().nodes();
                let zeta: Vec<f64> = nodes.iter().map(|&r| n3_profile(2, r) * xi(r)).collect();
                let mut az = vec![0.0; cells];
                a.matvec(&zeta, &mut az);
                let lhs = dot(&zeta, &az);
                let rhs: f64 =
                    nodes.iter().zip(&mass).map(|(&r, w)| w * n3_profile(2, r).powi(2) * (dxi(r).powi(2) + (m * m) as f64 * (xi(r) / r).powi(2))).sum();
                ((lhs - rhs) / rhs.abs().max(1e-12)).abs()
            };
            let (g1, g2) = (gap(200), gap(400));
            assert!(g1 < 1e-3, "m={m}: {g1}");
            assert!(g1 / g2 > 3.0, "m={m}: {g1} {g2}");
        }
    }

    #[test]
    fn odd_winding_is_rejected() {
        assert!(l_parallel_spectrum(3, Constraint::None, 50, 1).is_err());
    }

    fn bases(radius: f64, cells: usize) -> (RadialProfile, RadialProfile) {
        let params = MaterialParams::default();
        let opts = RadialOptions::default();
        let str_ = radial::alpha_r(&params, 2, radius, cells, &opts).unwrap().profile;
        let plus = escaped_minimizer(&params, 2, radius, cells, true, &opts).unwrap().profile;
        (str_, plus)
    }

    #[test]
    fn fd_hessian_is_linear_and_symmetric() {
        let (_, plus) = bases(20.0, 400);
        let op = RadialFdHessian::new(&plus, Subspace::O2, 10.0).unwrap();
        let n = op.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for pair in 0..20u64 {
            let u = smooth_random_vector(n, 3, 2 * pair);
            let v = smooth_random_vector(n, 3, 2 * pair + 1);
            let (hu, hv) = (op.hessian_vector(&u), op.hessian_vector(&v));
            let norms = dot(&u, &u).sqrt() * dot(&v, &v).sqrt();
            let asym = (dot(&hu, &v) - dot(&u, &hv)).abs();
            assert!(asym <= tol::FD_HESSIAN_SYMMETRY * norms, "{asym} vs {norms}");
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let scaled: Vec<f64> = u.iter().map(|x| alpha * x).collect();
            let hs = op.hessian_vector(&scaled);
            let err = hs.iter().zip(&hu).map(|(a, b)| (a - alpha * b).abs()).fold(0.0, f64::max);
            assert!(err <= tol::FD_HESSIAN_LINEARITY * (1.0 + inf_norm(&hu) * alpha.abs()), "{err}");
        }
    }

    #[test]
    fn stability_hierarchy_at_moderate_radius() {
        let (str_, plus) = bases(50.0, 1024);
        let opts = ProbeOptions::default();
        let w3 = hessian_smallest_radial(&str_, Subspace::W3, 2, &opts).unwrap();
        let o2 = hessian_smallest_radial(&plus, Subspace::O2, 2, &opts).unwrap();
        assert!(w3.lambda_min() < 0.0, "{:?}", w3.eigenvalues);
        assert!(o2.lambda_min() >= -tol::HESSIAN_NONNEG, "{:?}", o2.eigenvalues);
        for p in [&w3, &o2] {
            assert!(p.rayleigh_mismatch() <= tol::RAYLEIGH_MATCH_REL, "{:?} {:?}", p.eigenvalues, p.rayleigh);
            let exact = p.exact.as_ref().unwrap();
            for (a, b) in p.eigenvalues.iter().zip(exact) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs exact {b}");
            }
        }
    }

    #[test]
    fn disk_probe_sees_the_radial_instability() {
        let (str_, _) = bases(50.0, 48);
        let radial = hessian_smallest_radial(&str_, Subspace::W3, 1, &ProbeOptions::default()).unwrap();
        let field = DiskField::lift(&str_, 16).unwrap();
        let disk = hessian_smallest_disk(&field, Subspace::W3, 1, &ProbeOptions::default()).unwrap();
        assert!(disk.lambda_min() <= radial.lambda_min() + 1e-6, "{} vs {}", disk.lambda_min(), radial.lambda_min());
        assert!(disk.rayleigh_mismatch() <= tol::RAYLEIGH_MATCH_REL);
    }
}
