//! Closed-form harmonic limits, the tangent projection at the limit map and
//! the splitting of nearby tensors into a rotated uniaxial part plus a
//! normal remainder.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::disk::{DiskField, PolarGrid};
use crate::error::Error;
use crate::qtensor::{q_from_w, Frame, MaterialParams, QTensor, WVector, SQRT2, SQRT6};
use crate::radial::{Ansatz, RadialGrid, RadialProfile};
use crate::tol;

/// The two escaped harmonic maps of the unit disk with winding k boundary
/// data, n(0) = sign e3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicLimit {
    sign: f64,
    k: i32,
    params: MaterialParams,
}

impl HarmonicLimit {
    pub fn new(positive: bool, k: i32, params: MaterialParams) -> Result<Self, Error> {
        if k == 0 || k % 2 != 0 {
            return Err(Error::Representation { k, detail: "harmonic limits need an even nonzero winding".into() });
        }
        Ok(HarmonicLimit { sign: if positive { 1.0 } else { -1.0 }, k, params })
    }

    pub fn k(&self) -> i32 {
        self.k
    }
    pub fn is_positive(&self) -> bool {
        self.sign > 0.0
    }
    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    /// Director at a point of the unit disk.
    pub fn n_star(&self, x: &Vector2<f64>) -> Vector3<f64> {
        let r = x.norm();
        let phi = x.y.atan2(x.x);
        let half = 0.5 * self.k as f64;
        let t = r.powf(self.k as f64);
        let rho = 2.0 * r.powf(half) / (1.0 + t);
        Vector3::new(rho * (half * phi).cos(), rho * (half * phi).sin(), self.sign * (1.0 - t) / (1.0 + t))
    }

    pub fn q_star(&self, x: &Vector2<f64>) -> QTensor {
        QTensor::uniaxial(self.params.s_plus(), &self.n_star(x))
    }

    /// Frame coordinates (w0, w1, 0, w3, 0) at radius r of the unit disk.
    pub fn w_profile(&self, r: f64) -> WVector {
        let s = self.params.s_plus();
        let t = r.powf(self.k as f64);
        let d = (1.0 + t).powi(2);
        WVector([
            s * (2.0 * (1.0 - t).powi(2) - 4.0 * t) / (SQRT6 * d),
            4.0 * s * t / (SQRT2 * d),
            0.0,
            self.sign * 4.0 * s * r.powf(0.5 * self.k as f64) * (1.0 - t) / (SQRT2 * d),
            0.0,
        ])
    }

    /// The limit rescaled to the disk of radius `grid.radius()`.
    pub fn radial_profile(&self, grid: RadialGrid) -> RadialProfile {
        let radius = grid.radius();
        RadialProfile::from_fn(grid, Ansatz::O2, self.k, self.params, |r| self.w_profile(r / radius)).expect("even k fits the O2 ansatz")
    }

    /// Tangent projection at Q_*(x).
    pub fn pi_tangent(&self, a: &QTensor, x: &Vector2<f64>) -> QTensor {
        pi_tangent(a, &self.q_star(x), self.params.s_plus())
    }
}

/// Orthogonal projection of a traceless symmetric matrix onto the tangent
/// space of the uniaxial manifold at `q_star`:
/// A + (2/s^2)((s/3)A - A Q - Q A)(Q - (s/6) I).
pub fn pi_tangent(a: &QTensor, q_star: &QTensor, s_plus: f64) -> QTensor {
    let am = a.matrix();
    let qm = q_star.matrix();
    let inner = am * (s_plus / 3.0) - am * qm - qm * am;
    let out = am + (inner * (qm - Matrix3::identity() * (s_plus / 6.0))) * (2.0 / (s_plus * s_plus));
    QTensor::project(&out)
}

/// Splitting Q = s_plus (v v - I/3) + eps^2 P at each sample, with
/// v = (n_* + psi)/|n_* + psi|, psi orthogonal to n_* and P commuting with
/// Q_*.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub eps: f64,
    pub points: Vec<Vector2<f64>>,
    pub psi: Vec<Vector3<f64>>,
    pub p: Vec<QTensor>,
}

impl Decomposition {
    pub fn reconstruct(&self, limit: &HarmonicLimit) -> Vec<QTensor> {
        let s = limit.params.s_plus();
        self.points
            .iter()
            .zip(&self.psi)
            .zip(&self.p)
            .map(|((x, psi), p)| {
                let v = (limit.n_star(x) + psi).normalize();
                QTensor::uniaxial(s, &v).add(&p.scale(self.eps * self.eps))
            })
            .collect()
    }

    /// Largest |[P, Q_*]| over the samples.
    pub fn max_commutator(&self, limit: &HarmonicLimit) -> f64 {
        self.points
            .iter()
            .zip(&self.p)
            .map(|(x, p)| {
                let q = limit.q_star(x);
                (p.matrix() * q.matrix() - q.matrix() * p.matrix()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis (t1, t2) of the plane orthogonal to a unit vector.
fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let t1 = (helper - n * n.dot(&helper)).normalize();
    (t1, n.cross(&t1))
}

fn sym_outer(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    a * b.transpose() + b * a.transpose()
}

/// Per-sample splitting by Newton's method on the two tangential
/// components of Q - Q_sharp. `radius` bounds |Q - Q_*| (Frobenius) at every
/// sample.
pub fn decompose(limit: &HarmonicLimit, points: &[Vector2<f64>], q: &[QTensor], eps: f64, radius: f64) -> Result<Decomposition, Error> {
    let s = limit.params.s_plus();
    let mut psi = Vec::with_capacity(points.len());
    let mut p = Vec::with_capacity(points.len());
    for (index, (x, qx)) in points.iter().zip(q).enumerate() {
        let n = limit.n_star(x);
        let dist = qx.sub(&QTensor::uniaxial(s, &n)).norm();
        if dist > radius {
            return Err(Error::OutOfNeighbourhood { index, detail: format!("|Q - Q_*| = {dist:.3e} exceeds {radius:.3e}") });
        }
        let (t1, t2) = tangent_basis(&n);
        let (s1, s2) = (sym_outer(&n, &t1), sym_outer(&n, &t2));
        let mut c: Vector2<f64> = Vector2::zeros();
        let mut converged = false;
        for _ in 0..50 {
            let u = n + t1 * c.x + t2 * c.y;
            let norm = u.norm();
            let v = u / norm;
            let diff = qx.matrix() - QTensor::uniaxial(s, &v).matrix();
            let f = Vector2::new(diff.dot(&s1), diff.dot(&s2));
            let dv1 = (t1 - v * v.dot(&t1)) / norm;
            let dv2 = (t2 - v * v.dot(&t2)) / norm;
            let (dq1, dq2) = (sym_outer(&dv1, &v) * s, sym_outer(&dv2, &v) * s);
            let jac = -Matrix2::new(dq1.dot(&s1), dq2.dot(&s1), dq1.dot(&s2), dq2.dot(&s2));
            let Some(step) = jac.lu().solve(&(-f)) else { break };
            c += step;
            if step.norm() <= 1e-15 * (1.0 + c.norm()) || f.norm() <= 1e-15 * s {
                converged = true;
                break;
            }
        }
        let u = n + t1 * c.x + t2 * c.y;
        let v = u.normalize();
        if !converged || !c.iter().all(|z| z.is_finite()) {
            return Err(Error::OutOfNeighbourhood { index, detail: "Newton iteration did not converge".into() });
        }
        if v.dot(&n) < tol::MIN_ALIGNMENT {
            return Err(Error::OutOfNeighbourhood { index, detail: format!("v . n_* = {:.3} below {}", v.dot(&n), tol::MIN_ALIGNMENT) });
        }
        psi.push(v / v.dot(&n) - n);
        p.push(qx.sub(&QTensor::uniaxial(s, &v)).scale(1.0 / (eps * eps)));
    }
    Ok(Decomposition { eps, points: points.to_vec(), psi, p })
}

/// Samples of a disk field in lab-frame tensors, with positions scaled to
/// the unit disk.
pub fn disk_samples(field: &DiskField) -> (Vec<Vector2<f64>>, Vec<QTensor>) {
    let g = field.grid();
    let mut pts = Vec::with_capacity(g.n_r() * g.n_phi());
    let mut qs = Vec::with_capacity(pts.capacity());
    for i in 0..g.n_r() {
        for j in 0..g.n_phi() {
            let (r, phi) = (g.r(i), g.phi(j));
            pts.push(Vector2::new(phi.cos(), phi.sin()) * (r / g.radius()));
            qs.push(q_from_w(&field.at(i, j), &Frame::new(field.k(), phi)));
        }
    }
    (pts, qs)
}

/// Decomposition of a disk field on a disk of radius R, with eps = 1/R.
pub fn decompose_disk(limit: &HarmonicLimit, field: &DiskField, radius: f64) -> Result<Decomposition, Error> {
    let (pts, qs) = disk_samples(field);
    decompose(limit, &pts, &qs, 1.0 / field.grid().radius(), radius)
}

/// ||P||_{L2} + eps ||grad P||_{L2} + eps^2 ||grad^2 P||_{L2} for a tensor
/// field sampled at the nodes of `grid` (row-major in (r, phi)).
/// Derivatives are central differences in polar coordinates, one-sided at
/// the first and last ring.
pub fn eps_norm(grid: &PolarGrid, p: &[QTensor], eps: f64) -> f64 {
    let (nr, np) = (grid.n_r(), grid.n_phi());
    assert_eq!(p.len(), nr * np, "one tensor per node");
    let (h, dphi) = (grid.h(), grid.dphi());
    let lab = Frame::new(0, 0.0);
    let basis: Vec<QTensor> = (0..5).map(|c| lab.e(c)).collect();
    let comp = |i: usize, j: usize, c: usize| p[i * np + (j % np)].dot(&basis[c]);
    let (mut l2, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for i in 0..nr {
        let r = grid.r(i);
        let vol = grid.volume(i);
        // Radial stencil (im, i0, ip) and its spacing, shifted inward at the ends.
        let centre = i.clamp(1, nr.saturating_sub(2).max(1));
        for j in 0..np {
            let (jp, jm) = (j + 1, j + np - 1);
            for c in 0..5 {
                let f = comp(i, j, c);
                l2 += vol * f * f;
                if nr < 3 {
                    continue;
                }
                let (fm, f0, fp) = (comp(centre - 1, j, c), comp(centre, j, c), comp(centre + 1, j, c));
                let offset = (i as f64 - centre as f64) * h;
                let f_rr = (fp - 2.0 * f0 + fm) / (h * h);
                let f_r = (fp - fm) / (2.0 * h) + offset * f_rr;
                let f_p = (comp(i, jp, c) - comp(i, jm, c)) / (2.0 * dphi);
                let f_pp = (comp(i, jp, c) - 2.0 * f + comp(i, jm, c)) / (dphi * dphi);
                let rp = |ii: usize| (comp(ii, jp, c) - comp(ii, jm, c)) / (2.0 * dphi);
                let f_rp = (rp(centre + 1) - rp(centre - 1)) / (2.0 * h);
                d1 += vol * (f_r * f_r + f_p * f_p / (r * r));
                let mixed = f_rp / r - f_p / (r * r);
                let angular = f_r / r + f_pp / (r * r);
                d2 += vol * (f_rr * f_rr + 2.0 * mixed * mixed + angular * angular);
            }
        }
    }
    l2.sqrt() + eps * d1.sqrt() + eps * eps * d2.sqrt()
}

/// Dirichlet integral of the limit director over the unit disk, by midpoint
/// quadrature with centred differences of the closed form.
pub fn director_dirichlet(limit: &HarmonicLimit, n_r: usize, n_phi: usize) -> f64 {
    let h = 1.0 / n_r as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let d = 1e-6;
    let mut total = 0.0;
    for i in 0..n_r {
        let r = (i as f64 + 0.5) * h;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let x = Vector2::new(r * phi.cos(), r * phi.sin());
            let dx = (limit.n_star(&(x + Vector2::new(d, 0.0))) - limit.n_star(&(x - Vector2::new(d, 0.0)))) / (2.0 * d);
            let dy = (limit.n_star(&(x + Vector2::new(0.0, d))) - limit.n_star(&(x - Vector2::new(0.0, d)))) / (2.0 * d);
            total += (dx.norm_squared() + dy.norm_squared()) * r * h * dphi;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::{disk_energy_parts, DiskField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn limit(positive: bool, k: i32) -> HarmonicLimit {
        HarmonicLimit::new(positive, k, MaterialParams::default()).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Vector2<f64> {
        let (r, phi) = (rng.random_range(0.0f64..0.999).sqrt(), rng.random_range(0.0..2.0 * PI));
        Vector2::new(r * phi.cos(), r * phi.sin())
    }

    fn random_tensor(rng: &mut ChaCha8Rng) -> QTensor {
        let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        QTensor::project(&(m + m.transpose()))
    }

    /// A random matrix in the normal space at n: block diagonal in (n, n^perp).
    fn random_normal(rng: &mut ChaCha8Rng, n: &Vector3<f64>) -> QTensor {
        let (t1, t2) = tangent_basis(n);
        let (a, b, c, d) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let m = n * n.transpose() * a + t1 * t1.transpose() * b + t2 * t2.transpose() * c + sym_outer(&t1, &t2) * d;
        QTensor::project(&m)
    }

    #[test]
    fn rejects_odd_winding() {
        assert!(HarmonicLimit::new(true, 1, MaterialParams::default()).is_err());
        assert!(HarmonicLimit::new(true, 0, MaterialParams::default()).is_err());
    }

    #[test]
    fn director_is_unit_with_correct_ends() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [2, 4] {
            for positive in [true, false] {
                let l = limit(positive, k);
                let sign = if positive { 1.0 } else { -1.0 };
                assert!((l.n_star(&Vector2::zeros()) - Vector3::z() * sign).norm() < tol::EXACT);
                for _ in 0..200 {
                    assert!((l.n_star(&random_point(&mut rng)).norm() - 1.0).abs() < tol::EXACT);
                }
                for j in 0..16 {
                    let phi = 2.0 * PI * j as f64 / 16.0;
                    let f = Frame::new(k, phi);
                    assert!((l.n_star(&Vector2::new(phi.cos(), phi.sin())) - f.n()).norm() < tol::EXACT);
                }
            }
        }
    }

    #[test]
    fn profiles_match_tensor_and_lie_on_the_sphere() {
        let l = limit(true, 2);
        let s = l.params().s_plus();
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            let w = l.w_profile(r);
            assert!((w.norm2() - 2.0 / 3.0 * s * s).abs() <= tol::SPHERE_NORM);
            let phi = 0.7;
            let q = q_from_w(&w, &Frame::new(2, phi));
            assert!(q.sub(&l.q_star(&Vector2::new(r * phi.cos(), r * phi.sin()))).norm() < tol::EXACT);
        }
    }

    #[test]
    fn director_dirichlet_integral_is_two_pi_k() {
        for k in [2, 4] {
            let e = director_dirichlet(&limit(true, k), 400, 256);
            let target = 2.0 * PI * k as f64;
            assert!((e - target).abs() <= tol::HARMONIC_ENERGY_REL * target, "k={k}: {e}");
        }
    }

    #[test]
    fn rescaled_limit_in_the_disk_solver() {
        let l = limit(true, 2);
        let s = l.params().s_plus();
        let prof = l.radial_profile(RadialGrid::new(20.0, 800).unwrap());
        let parts = disk_energy_parts(&DiskField::lift(&prof, 16).unwrap()).unwrap();
        let target = 2.0 * PI * 2.0 * s * s;
        assert!((parts.dirichlet - target).abs() <= tol::HARMONIC_ENERGY_REL * target, "{}", parts.dirichlet);
        assert!(parts.bulk.abs() < 1e-10);
    }

    #[test]
    fn projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = limit(true, 2);
        let s = l.params().s_plus();
        for _ in 0..100 {
            let x = random_point(&mut rng);
            let q = l.q_star(&x);
            assert!(l.pi_tangent(&q, &x).norm() <= tol::EXACT);
            let a = random_tensor(&mut rng);
            let pa = l.pi_tangent(&a, &x);
            assert!(l.pi_tangent(&pa, &x).sub(&pa).norm() <= tol::EXACT);
            // The complement commutes with Q_*.
            let rest = a.sub(&pa);
            assert!((rest.matrix() * q.matrix() - q.matrix() * rest.matrix()).norm() <= 1e-12);
            assert!(l.pi_tangent(&random_normal(&mut rng, &l.n_star(&x)), &x).norm() <= tol::EXACT);
            // A tangent vector built by differencing a rotated director.
            let n = l.n_star(&x);
            let (t1, _) = tangent_basis(&n);
            let axis = n.cross(&t1);
            let dt = 1e-6;
            let curve = |t: f64| QTensor::uniaxial(s, &nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), t).transform_vector(&n));
            let tangent = curve(dt).sub(&curve(-dt)).scale(0.5 / dt);
            assert!(l.pi_tangent(&tangent, &x).sub(&tangent).norm() <= tol::TANGENT_FD);
        }
    }

    #[test]
    fn decomposition_of_exact_and_normal_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = limit(false, 2);
        let pts: Vec<_> = (0..200).map(|_| random_point(&mut rng)).collect();
        let exact: Vec<_> = pts.iter().map(|x| l.q_star(x)).collect();
        let d = decompose(&l, &pts, &exact, 0.1, 0.75).unwrap();
        assert!(d.psi.iter().all(|p| p.norm() <= tol::DECOMPOSITION_RECONSTRUCT));
        assert!(d.p.iter().all(|p| p.norm() <= tol::DECOMPOSITION_RECONSTRUCT));
        let eps = 0.05;
        let normals: Vec<_> = pts.iter().map(|x| random_normal(&mut rng, &l.n_star(x)).scale(0.3)).collect();
        let shifted: Vec<_> = pts.iter().zip(&normals).map(|(x, nn)| l.q_star(x).add(&nn.scale(eps * eps))).collect();
        let d = decompose(&l, &pts, &shifted, eps, 0.75).unwrap();
        for (got, want) in d.p.iter().zip(&normals) {
            assert!(got.sub(want).norm() <= tol::DECOMPOSITION_RECONSTRUCT);
        }
        assert!(d.psi.iter().all(|p| p.norm() <= tol::DECOMPOSITION_RECONSTRUCT));
    }

    #[test]
    fn decomposition_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = limit(true, 2);
        let s = l.params().s_plus();
        let eps = 0.1;
        for _ in 0..100 {
            let x = random_point(&mut rng);
            let n = l.n_star(&x);
            let (t1, t2) = tangent_basis(&n);
            let psi = t1 * rng.random_range(-0.2..0.2) + t2 * rng.random_range(-0.2..0.2);
            let p = random_normal(&mut rng, &n);
            let v = (n + psi).normalize();
            let q = QTensor::uniaxial(s, &v).add(&p.scale(eps * eps));
            let d = decompose(&l, &[x], &[q], eps, tol::NEIGHBOURHOOD_RADIUS_REL * s).unwrap();
            assert!((d.psi[0] - psi).norm() <= tol::DECOMPOSITION_ROUND_TRIP);
            assert!(d.p[0].sub(&p).norm() <= tol::DECOMPOSITION_ROUND_TRIP);
            assert!(d.reconstruct(&l)[0].sub(&q).norm() <= tol::DECOMPOSITION_RECONSTRUCT);
            assert!(d.max_commutator(&l) <= tol::NORMALITY);
            assert!(l.pi_tangent(&d.p[0], &x).norm() <= tol::NORMALITY);
        }
    }

    #[test]
    fn far_samples_are_rejected_by_index() {
        let l = limit(true, 2);
        let pts = [Vector2::new(0.1, 0.0), Vector2::new(0.2, 0.0)];
        let qs = [l.q_star(&pts[0]), l.q_star(&pts[1]).scale(-1.0)];
        match decompose(&l, &pts, &qs, 0.1, 0.75) {
            Err(Error::OutOfNeighbourhood { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eps_norm_basics() {
        let grid = PolarGrid::new(1.0, 40, 32, 2).unwrap();
        let n = grid.n_r() * grid.n_phi();
        assert_eq!(eps_norm(&grid, &vec![QTensor::zero(); n], 0.3), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_tensor(&mut rng);
        for eps in [0.0, 0.1, 1.0] {
            let v = eps_norm(&grid, &vec![c; n], eps);
            assert!((v - c.norm() * PI.sqrt() * grid.radius()).abs() < 1e-10, "{v}");
        }
        let smooth: Vec<QTensor> = (0..grid.n_r())
            .flat_map(|i| (0..grid.n_phi()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (r, phi) = (grid.r(i), grid.phi(j));
                let (x, y) = (r * phi.cos(), r * phi.sin());
                QTensor::project(&Matrix3::new(x * x, x * y, 0.0, x * y, y, 0.0, 0.0, 0.0, x))
            })
            .collect();
        let vals: Vec<f64> = [0.0, 0.05, 0.1, 0.5, 1.0].iter().map(|&e| eps_norm(&grid, &smooth, e)).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }
}
