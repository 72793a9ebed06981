//! Symmetric block-tridiagonal matrices whose off-diagonal blocks are
//! diagonal. This is the shape of every radial operator in the crate: the
//! m unknowns per cell couple through the pointwise bulk Hessian and to the
//! neighbouring cells only through the same component.

use crate::error::Error;

#[derive(Clone, Debug)]
pub struct BlockTridiag {
    n: usize,
    m: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl BlockTridiag {
    pub fn zeros(n: usize, m: usize) -> Self {
        BlockTridiag { n, m, diag: vec![0.0; n * m * m], off: vec![0.0; n.saturating_sub(1) * m] }
    }

    pub fn blocks(&self) -> usize {
        self.n
    }
    pub fn block_size(&self) -> usize {
        self.m
    }
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    /// Row-major m x m diagonal block of cell `i`.
    pub fn diag_block_mut(&mut self, i: usize) -> &mut [f64] {
        let mm = self.m * self.m;
        &mut self.diag[i * mm..(i + 1) * mm]
    }
    pub fn diag_block(&self, i: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.diag[i * mm..(i + 1) * mm]
    }

    /// Diagonal of the block coupling cells `i` and `i + 1`.
    pub fn off_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.off[i * self.m..(i + 1) * self.m]
    }
    pub fn off(&self, i: usize) -> &[f64] {
        &self.off[i * self.m..(i + 1) * self.m]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        for i in 0..self.n {
            let d = self.diag_block(i);
            for a in 0..m {
                let mut s = 0.0;
                for b in 0..m {
                    s += d[a * m + b] * x[i * m + b];
                }
                if i > 0 {
                    s += self.off(i - 1)[a] * x[(i - 1) * m + a];
                }
                if i + 1 < self.n {
                    s += self.off(i)[a] * x[(i + 1) * m + a];
                }
                y[i * m + a] = s;
            }
        }
    }

    /// Row sums of absolute values of the scaled matrix M^{-1/2} A M^{-1/2},
    /// giving Gershgorin bounds for the pencil (A, diag(mass)).
    pub fn gershgorin(&self, mass: &[f64]) -> (f64, f64) {
        let m = self.m;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.n {
            let d = self.diag_block(i);
            for a in 0..m {
                let r = i * m + a;
                let centre = d[a * m + a] / mass[r];
                let mut rad = 0.0;
                for b in 0..m {
                    if b != a {
                        rad += d[a * m + b].abs() / (mass[r] * mass[i * m + b]).sqrt();
                    }
                }
                if i > 0 {
                    rad += self.off(i - 1)[a].abs() / (mass[r] * mass[r - m]).sqrt();
                }
                if i + 1 < self.n {
                    rad += self.off(i)[a].abs() / (mass[r] * mass[r + m]).sqrt();
                }
                lo = lo.min(centre - rad);
                hi = hi.max(centre + rad);
            }
        }
        (lo, hi)
    }

    /// Block elimination of A - shift diag(mass). Returns `None` when a
    /// pivot block is numerically singular.
    pub fn factor(&self, shift: f64, mass: Option<&[f64]>) -> Option<BlockLdl> {
        let (n, m) = (self.n, self.m);
        let mut dinv = vec![0.0; n * m * m];
        let mut negatives = 0;
        let mut work = vec![0.0; m * m];
        for i in 0..n {
            work.copy_from_slice(self.diag_block(i));
            for a in 0..m {
                work[a * m + a] -= shift * mass.map_or(1.0, |ms| ms[i * m + a]);
            }
            if i > 0 {
                let prev = &dinv[(i - 1) * m * m..i * m * m];
                let c = self.off(i - 1);
                for a in 0..m {
                    for b in 0..m {
                        work[a * m + b] -= c[a] * prev[a * m + b] * c[b];
                    }
                }
            }
            negatives += invert_symmetric(&work, &mut dinv[i * m * m..(i + 1) * m * m], m)?;
        }
        Some(BlockLdl { n, m, dinv, off: self.off.clone(), negatives })
    }

    /// Number of eigenvalues of the pencil (A, diag(mass)) below `lambda`.
    pub fn count_below(&self, lambda: f64, mass: &[f64]) -> Option<usize> {
        self.factor(lambda, Some(mass)).map(|f| f.negatives)
    }

    /// The `count` smallest eigenpairs of A v = lambda diag(mass) v by
    /// inertia bisection followed by inverse iteration. Eigenvectors are
    /// normalised in the mass inner product.
    pub fn smallest_eigenpairs(&self, mass: &[f64], count: usize) -> Result<Vec<(f64, Vec<f64>)>, Error> {
        let dim = self.dim();
        if count == 0 || count > dim {
            return Err(Error::Eigen(format!("cannot extract {count} eigenpairs of a {dim}-dimensional pencil")));
        }
        let (glo, ghi) = self.gershgorin(mass);
        let scale = glo.abs().max(ghi.abs()).max(1e-300);
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
        for j in 0..count {
            let (mut lo, mut hi) = (glo - 1e-12 * scale, ghi + 1e-12 * scale);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 4.0 * f64::EPSILON * scale {
                    break;
                }
                match self.count_below(mid, mass) {
                    Some(c) if c > j => hi = mid,
                    Some(_) => lo = mid,
                    // An exactly singular pivot: the shift is an eigenvalue
                    // of a leading block; nudge and retry.
                    None => lo = mid + 8.0 * f64::EPSILON * scale,
                }
            }
            let lambda = 0.5 * (lo + hi);
            let vec = self.inverse_iteration(lambda, mass, &out, scale)?;
            out.push((lambda, vec));
        }
        Ok(out)
    }

    fn inverse_iteration(&self, lambda: f64, mass: &[f64], previous: &[(f64, Vec<f64>)], scale: f64) -> Result<Vec<f64>, Error> {
        let dim = self.dim();
        let mut shift = lambda - 1e-11 * scale;
        let fac = loop {
            if let Some(f) = self.factor(shift, Some(mass)) {
                break f;
            }
            shift -= 1e-10 * scale;
        };
        let mut x: Vec<f64> = (0..dim).map(|i| 1.0 + 0.37 * ((i * 7919 % 101) as f64 / 101.0)).collect();
        let mut rhs = vec![0.0; dim];
        for _ in 0..8 {
            for (prev_lambda, v) in previous {
                if (prev_lambda - lambda).abs() <= 1e-6 * scale {
                    let c: f64 = (0..dim).map(|i| x[i] * mass[i] * v[i]).sum();
                    for i in 0..dim {
                        x[i] -= c * v[i];
                    }
                }
            }
            for i in 0..dim {
                rhs[i] = mass[i] * x[i];
            }
            fac.solve(&rhs, &mut x);
            let nrm = (0..dim).map(|i| x[i] * x[i] * mass[i]).sum::<f64>().sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(Error::Eigen("inverse iteration produced a degenerate vector".into()));
            }
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        Ok(x)
    }

    /// |A v - lambda M v| measured in the M^{-1} norm, i.e. the residual of
    /// the symmetric scaled operator for the M-normalised vector v.
    pub fn eigen_residual(&self, lambda: f64, v: &[f64], mass: &[f64]) -> f64 {
        let mut av = vec![0.0; v.len()];
        self.matvec(v, &mut av);
        av.iter().zip(v).zip(mass).map(|((a, x), m)| (a - lambda * m * x).powi(2) / m).sum::<f64>().sqrt()
    }
}

/// Result of [`BlockTridiag::factor`].
#[derive(Clone, Debug)]
pub struct BlockLdl {
    n: usize,
    m: usize,
    dinv: Vec<f64>,
    off: Vec<f64>,
    negatives: usize,
}

impl BlockLdl {
    pub fn negatives(&self) -> usize {
        self.negatives
    }
    pub fn is_positive_definite(&self) -> bool {
        self.negatives == 0
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let mm = m * m;
        let mut z = b.to_vec();
        let mut tmp = vec![0.0; m];
        for i in 1..n {
            let prev = &self.dinv[(i - 1) * mm..i * mm];
            let c = &self.off[(i - 1) * m..i * m];
            for a in 0..m {
                let mut s = 0.0;
                for bb in 0..m {
                    s += prev[a * m + bb] * z[(i - 1) * m + bb];
                }
                tmp[a] = c[a] * s;
            }
            for a in 0..m {
                z[i * m + a] -= tmp[a];
            }
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                let c = &self.off[i * m..(i + 1) * m];
                for a in 0..m {
                    z[i * m + a] -= c[a] * x[(i + 1) * m + a];
                }
            }
            let d = &self.dinv[i * mm..(i + 1) * mm];
            for a in 0..m {
                let mut s = 0.0;
                for bb in 0..m {
                    s += d[a * m + bb] * z[i * m + bb];
                }
                x[i * m + a] = s;
            }
        }
    }
}

/// Inverts a small symmetric matrix through an unpivoted LDL^T and returns
/// the number of negative pivots.
fn invert_symmetric(a: &[f64], inv: &mut [f64], m: usize) -> Option<usize> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; m * m];
    let mut d = vec![0.0; m];
    let mut neg = 0;
    for j in 0..m {
        let mut dj = a[j * m + j];
        for p in 0..j {
            dj -= l[j * m + p] * l[j * m + p] * d[p];
        }
        if dj.abs() <= 1e-300 || dj.abs() <= 1e-15 * scale || !dj.is_finite() {
            return None;
        }
        d[j] = dj;
        if dj < 0.0 {
            neg += 1;
        }
        l[j * m + j] = 1.0;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for p in 0..j {
                s -= l[i * m + p] * l[j * m + p] * d[p];
            }
            l[i * m + j] = s / dj;
        }
    }
    // Columns of the inverse from L D L^T x = e_c.
    for c in 0..m {
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for p in 0..i {
                s -= l[i * m + p] * y[p];
            }
            y[i] = s;
        }
        for i in 0..m {
            y[i] /= d[i];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for p in i + 1..m {
                s -= l[p * m + i] * inv[p * m + c];
            }
            inv[i * m + c] = s;
        }
    }
    Some(neg)
}
