//! Smallest eigenpairs of a matrix-free symmetric pencil (H, M), M a
//! positive diagonal.
//!
//! The search space is the Krylov space of K^{-1} H for a user-supplied
//! symmetric positive definite K (typically the quadratic part of the
//! energy plus a mass shift), generated Lanczos-style one vector at a time
//! with full reorthogonalisation in the M inner product. Ritz pairs come
//! from Rayleigh-Ritz for (H, M) on that space, so the reported values are
//! upper bounds for the eigenvalues of the physical pencil and the Rayleigh
//! quotient of each witness equals its Ritz value.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;

/// The operators of one eigenproblem. All vectors have length `dim()`.
pub trait Pencil {
    fn dim(&self) -> usize;
    fn apply_h(&self, x: &[f64], out: &mut [f64]);
    fn solve_k(&self, b: &[f64], out: &mut [f64]);
    fn mass(&self) -> &[f64];
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Largest Krylov dimension before a restart from the best Ritz vector.
    pub max_dim: usize,
    /// Tolerance on the residual |H x - value M x|_{M^{-1}}, relative to
    /// max(norm estimate, |value|).
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_dim: 160, tol: crate::tol::EIGEN_RESIDUAL_REL, seed: 0x5eed, max_restarts: 5 }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    /// M-normalised witness.
    pub vector: Vec<f64>,
    /// |H x - value M x| in the M^{-1} norm.
    pub residual: f64,
    /// The same residual in the K^{-1} norm.
    pub preconditioned_residual: f64,
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub pairs: Vec<RitzPair>,
    pub norm_estimate: f64,
    pub iterations: usize,
    pub restarts: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power-iteration estimate of the spectral radius of M^{-1} H.
pub fn norm_estimate<P: Pencil>(p: &P, seed: u64) -> f64 {
    let n = p.dim();
    let m = p.mass();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut hx = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..40 {
        let nrm = x.iter().zip(m).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
        p.apply_h(&x, &mut hx);
        x.iter_mut().zip(&hx).zip(m).for_each(|((xi, h), w)| *xi = h / w);
        est = x.iter().zip(m).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
    }
    est
}

struct Basis {
    v: Vec<Vec<f64>>,
    hv: Vec<Vec<f64>>,
}

impl Basis {
    /// M-orthonormalises `w` against the basis (twice) and appends it;
    /// returns false when nothing independent is left.
    fn push<P: Pencil>(&mut self, p: &P, mut w: Vec<f64>) -> bool {
        let m = p.mass();
        let mdot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(m).map(|((x, y), z)| x * y * z).sum::<f64>();
        let before = mdot(&w, &w).sqrt();
        for _ in 0..2 {
            for v in &self.v {
                let c = mdot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = mdot(&w, &w).sqrt();
        if !nrm.is_finite() || nrm <= 1e-10 * before {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= nrm);
        let mut hw = vec![0.0; w.len()];
        p.apply_h(&w, &mut hw);
        self.v.push(w);
        self.hv.push(hw);
        true
    }

    /// Rayleigh-Ritz for (H, M) on the span, smallest `count` pairs. The
    /// basis is M-orthonormal, so the projected pencil is standard.
    fn ritz<P: Pencil>(&self, p: &P, count: usize) -> Result<Vec<RitzPair>, Error> {
        let j = self.v.len();
        let m = p.mass();
        let mut g = DMatrix::zeros(j, j);
        for a in 0..j {
            for c in 0..=a {
                let hac = 0.5 * (dot(&self.v[a], &self.hv[c]) + dot(&self.v[c], &self.hv[a]));
                g[(a, c)] = hac;
                g[(c, a)] = hac;
            }
        }
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let n = p.dim();
        let mut out = Vec::with_capacity(count);
        for &idx in order.iter().take(count) {
            let y = eig.eigenvectors.column(idx);
            let theta = eig.eigenvalues[idx];
            let mut x = vec![0.0; n];
            let mut hx = vec![0.0; n];
            for (a, ya) in y.iter().enumerate() {
                x.iter_mut().zip(&self.v[a]).for_each(|(s, v)| *s += ya * v);
                hx.iter_mut().zip(&self.hv[a]).for_each(|(s, v)| *s += ya * v);
            }
            let r: Vec<f64> = hx.iter().zip(&x).zip(m).map(|((h, xi), w)| h - theta * w * xi).collect();
            let mut kr = vec![0.0; n];
            p.solve_k(&r, &mut kr);
            let preconditioned_residual = dot(&r, &kr).max(0.0).sqrt();
            let residual = r.iter().zip(m).map(|(a, w)| a * a / w).sum::<f64>().sqrt();
            out.push(RitzPair { value: theta, vector: x, residual, preconditioned_residual });
        }
        Ok(out)
    }
}

/// The `count` smallest eigenpairs of (H, M).
pub fn smallest_eigenpairs<P: Pencil>(p: &P, count: usize, opts: &LanczosOptions) -> Result<LanczosResult, Error> {
    let n = p.dim();
    if count == 0 || count > n {
        return Err(Error::Eigen(format!("cannot extract {count} eigenpairs in dimension {n}")));
    }
    let norm = norm_estimate(p, opts.seed);
    let ok = |q: &RitzPair| q.residual <= opts.tol * q.value.abs().max(norm);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut restarts = 0;
    let mut iterations = 0;
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut carry: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut basis = Basis { v: Vec::new(), hv: Vec::new() };
        for c in carry.drain(..) {
            basis.push(p, c);
        }
        if !basis.push(p, start.clone()) && basis.v.is_empty() {
            return Err(Error::Eigen("zero starting vector".into()));
        }
        let mut best = None;
        while basis.v.len() < opts.max_dim.min(n) {
            // Next Krylov direction: K^{-1} H applied to the newest vector.
            let last = basis.hv.last().expect("nonempty basis").clone();
            let mut w = vec![0.0; n];
            p.solve_k(&last, &mut w);
            iterations += 1;
            if !basis.push(p, w) {
                // Invariant subspace: add a fresh random direction.
                if restarts >= opts.max_restarts {
                    break;
                }
                restarts += 1;
                let fresh: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                if !basis.push(p, fresh) {
                    break;
                }
            }
            let j = basis.v.len();
            if j >= count && (j % 4 == 0 || j == n) {
                let pairs = basis.ritz(p, count)?;
                let done = pairs.iter().all(ok);
                best = Some(pairs);
                if done {
                    return Ok(LanczosResult { pairs: best.unwrap(), norm_estimate: norm, iterations, restarts });
                }
            }
        }
        let pairs = match best {
            Some(p) => p,
            None => basis.ritz(p, count.min(basis.v.len()))?,
        };
        if pairs.len() == count && pairs.iter().all(ok) {
            return Ok(LanczosResult { pairs, norm_estimate: norm, iterations, restarts });
        }
        if restarts >= opts.max_restarts || basis.v.len() >= n {
            let worst = pairs.iter().map(|q| q.residual).fold(0.0, f64::max);
            return Err(Error::Eigen(format!(
                "Lanczos stopped after {iterations} steps and {restarts} restarts with residual {worst:.3e} (operator norm {norm:.3e})"
            )));
        }
        // Thick restart: keep a quarter of the space as Ritz vectors and
        // continue from the preconditioned residual of the worst wanted pair.
        restarts += 1;
        let keep = (opts.max_dim / 4).max(count).min(basis.v.len());
        let kept = basis.ritz(p, keep)?;
        let worst = (0..count.min(kept.len())).max_by(|&a, &b| kept[a].residual.total_cmp(&kept[b].residual)).unwrap_or(0);
        let x = &kept[worst];
        let mut hx = vec![0.0; n];
        p.apply_h(&x.vector, &mut hx);
        let r: Vec<f64> = hx.iter().zip(&x.vector).zip(p.mass()).map(|((h, v), w)| h - x.value * w * v).collect();
        start = vec![0.0; n];
        p.solve_k(&r, &mut start);
        carry = kept.into_iter().map(|q| q.vector).collect();
    }
}
