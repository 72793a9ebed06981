//! Q-tensor algebra: material parameters, the bulk potential, the moving
//! frame E0..E4, the w-coordinates, the symmetry actions and the two scalar
//! auxiliary functions `g_cubic` and `h_bulk2`.

use nalgebra::{Matrix3, Vector2, Vector3};
use std::ops::{Index, IndexMut};

use crate::error::Error;
use crate::tol;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
pub const SQRT3: f64 = 1.732_050_807_568_877_2;
pub const SQRT6: f64 = 2.449_489_742_783_178;

/// Coefficients of the bulk potential and the derived uniaxial order s_plus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    a2: f64,
    b2: f64,
    c2: f64,
    s_plus: f64,
    f_star: f64,
}

pub fn derive_params(a2: f64, b2: f64, c2: f64) -> Result<MaterialParams, Error> {
    if !(a2.is_finite() && b2.is_finite() && c2.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite ({a2}, {b2}, {c2})")));
    }
    if a2 < 0.0 {
        return Err(Error::InvalidParams(format!("a2 = {a2} < 0")));
    }
    if b2 <= 0.0 || c2 <= 0.0 {
        return Err(Error::InvalidParams(format!("b2 = {b2}, c2 = {c2} must be positive")));
    }
    let s = (b2 + (b2 * b2 + 24.0 * a2 * c2).sqrt()) / (4.0 * c2);
    let f_star = -(a2 / 3.0) * s * s - (2.0 * b2 / 27.0) * s.powi(3) + (c2 / 9.0) * s.powi(4);
    Ok(MaterialParams { a2, b2, c2, s_plus: s, f_star })
}

impl Default for MaterialParams {
    fn default() -> Self {
        derive_params(1.0, 1.0, 1.0).expect("unit parameters are valid")
    }
}

impl MaterialParams {
    pub fn new(a2: f64, b2: f64, c2: f64) -> Result<Self, Error> {
        derive_params(a2, b2, c2)
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn b2(&self) -> f64 {
        self.b2
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }
    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// Residual of -a2 - (b2/3) s + (2 c2/3) s^2 relative to its largest term.
    pub fn identity_residual(&self) -> f64 {
        let s = self.s_plus;
        let terms = [-self.a2, -(self.b2 / 3.0) * s, (2.0 * self.c2 / 3.0) * s * s];
        let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
        terms.iter().sum::<f64>().abs() / scale
    }

    /// Boundary value of the w-coordinates, the planar uniaxial state n (x) n.
    pub fn boundary_w(&self) -> WVector {
        let s = self.s_plus;
        WVector([-s / SQRT6, s / SQRT2, 0.0, 0.0, 0.0])
    }

    /// Bulk potential as a function of the w-coordinates.
    pub fn bulk_w(&self, w: &WVector) -> f64 {
        let n2 = w.norm2();
        (-0.5 * self.a2 + 0.25 * self.c2 * n2) * n2 - self.cubic_coeff() * cubic_poly(w) - self.f_star
    }

    /// Gradient of [`Self::bulk_w`] with respect to w.
    pub fn bulk_grad_w(&self, w: &WVector) -> [f64; 5] {
        let lin = -self.a2 + self.c2 * w.norm2();
        let dp = cubic_poly_grad(w);
        let beta = self.cubic_coeff();
        std::array::from_fn(|i| lin * w[i] - beta * dp[i])
    }

    /// Hessian of [`Self::bulk_w`] with respect to w.
    pub fn bulk_hess_w(&self, w: &WVector) -> [[f64; 5]; 5] {
        let lin = -self.a2 + self.c2 * w.norm2();
        let hp = cubic_poly_hess(w);
        let beta = self.cubic_coeff();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let d = if i == j { lin } else { 0.0 };
                d + 2.0 * self.c2 * w[i] * w[j] - beta * hp[i][j]
            })
        })
    }

    /// Coefficient b2 sqrt(6)/36 in front of the cubic polynomial, since
    /// tr Q^3 = (sqrt 6 / 12) P(w).
    fn cubic_coeff(&self) -> f64 {
        self.b2 * SQRT6 / 36.0
    }
}

/// The polynomial P(w) with tr(Q^3) = (sqrt 6/12) P(w).
pub fn cubic_poly(w: &WVector) -> f64 {
    let [w0, w1, w2, w3, w4] = w.0;
    2.0 * w0.powi(3) - 6.0 * w0 * (w1 * w1 + w2 * w2) + 3.0 * w0 * (w3 * w3 + w4 * w4) + 3.0 * SQRT3 * w1 * (w3 * w3 - w4 * w4) + 6.0 * SQRT3 * w2 * w3 * w4
}

fn cubic_poly_grad(w: &WVector) -> [f64; 5] {
    let [w0, w1, w2, w3, w4] = w.0;
    let r3 = SQRT3;
    [
        6.0 * w0 * w0 - 6.0 * (w1 * w1 + w2 * w2) + 3.0 * (w3 * w3 + w4 * w4),
        -12.0 * w0 * w1 + 3.0 * r3 * (w3 * w3 - w4 * w4),
        -12.0 * w0 * w2 + 6.0 * r3 * w3 * w4,
        6.0 * w0 * w3 + 6.0 * r3 * w1 * w3 + 6.0 * r3 * w2 * w4,
        6.0 * w0 * w4 - 6.0 * r3 * w1 * w4 + 6.0 * r3 * w2 * w3,
    ]
}

fn cubic_poly_hess(w: &WVector) -> [[f64; 5]; 5] {
    let [w0, w1, w2, w3, w4] = w.0;
    let r = 6.0 * SQRT3;
    [
        [12.0 * w0, -12.0 * w1, -12.0 * w2, 6.0 * w3, 6.0 * w4],
        [-12.0 * w1, -12.0 * w0, 0.0, r * w3, -r * w4],
        [-12.0 * w2, 0.0, -12.0 * w0, r * w4, r * w3],
        [6.0 * w3, r * w3, r * w4, 6.0 * w0 + r * w1, r * w2],
        [6.0 * w4, -r * w4, r * w3, r * w2, 6.0 * w0 - r * w1],
    ]
}

/// A symmetric traceless 3x3 tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QTensor(Matrix3<f64>);

impl QTensor {
    pub fn zero() -> Self {
        QTensor(Matrix3::zeros())
    }

    /// Accepts `m` only if it is exactly symmetric and traceless to tolerance.
    pub fn from_matrix(m: Matrix3<f64>) -> Option<Self> {
        let sym = m == m.transpose();
        let traceless = m.trace().abs() <= tol::TRACELESS_REL * m.norm().max(f64::MIN_POSITIVE);
        (sym && (traceless || m.trace() == 0.0)).then_some(QTensor(m))
    }

    /// Symmetrises and removes the trace.
    pub fn project(m: &Matrix3<f64>) -> Self {
        let s = 0.5 * (m + m.transpose());
        QTensor(s - Matrix3::identity() * (s.trace() / 3.0))
    }

    /// s (v (x) v - I/3) for a unit vector v.
    pub fn uniaxial(s: f64, v: &Vector3<f64>) -> Self {
        let v = v.normalize();
        QTensor(s * (v * v.transpose() - Matrix3::identity() / 3.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
    pub fn dot(&self, other: &QTensor) -> f64 {
        self.0.dot(&other.0)
    }
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
    pub fn tr2(&self) -> f64 {
        self.0.dot(&self.0)
    }
    pub fn tr3(&self) -> f64 {
        (self.0 * self.0 * self.0).trace()
    }
    pub fn scale(&self, a: f64) -> Self {
        QTensor(self.0 * a)
    }
    pub fn add(&self, other: &QTensor) -> Self {
        QTensor(self.0 + other.0)
    }
    pub fn sub(&self, other: &QTensor) -> Self {
        QTensor(self.0 - other.0)
    }
    /// A^T Q A for an orthogonal A.
    pub fn conjugate(&self, a: &Matrix3<f64>) -> Self {
        QTensor(a.transpose() * self.0 * a)
    }
}

/// f_bulk(Q) = -(a2/2) tr Q^2 - (b2/3) tr Q^3 + (c2/4) (tr Q^2)^2 - f_star.
pub fn f_bulk(q: &QTensor, p: &MaterialParams) -> f64 {
    let t2 = q.tr2();
    -0.5 * p.a2 * t2 - p.b2 / 3.0 * q.tr3() + 0.25 * p.c2 * t2 * t2 - p.f_star
}

/// The five coordinates of a tensor in the moving frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WVector(pub [f64; 5]);

impl WVector {
    pub const ZERO: WVector = WVector([0.0; 5]);

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

impl Index<usize> for WVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for WVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Moving orthonormal basis of the traceless symmetric tensors at angle phi.
#[derive(Clone, Debug)]
pub struct Frame {
    k: i32,
    phi: f64,
    n: Vector3<f64>,
    m: Vector3<f64>,
    basis: [Matrix3<f64>; 5],
}

impl Frame {
    pub fn new(k: i32, phi: f64) -> Self {
        let half = 0.5 * k as f64 * phi;
        let (s, c) = half.sin_cos();
        let n = Vector3::new(c, s, 0.0);
        let m = Vector3::new(-s, c, 0.0);
        let e3 = Vector3::z();
        let sym = |a: &Vector3<f64>, b: &Vector3<f64>| (a * b.transpose() + b * a.transpose()) / SQRT2;
        let e0 = (e3 * e3.transpose() - Matrix3::identity() / 3.0) * (1.5f64).sqrt();
        let e1 = (n * n.transpose() - m * m.transpose()) / SQRT2;
        let basis = [e0, e1, sym(&n, &m), sym(&n, &e3), sym(&m, &e3)];
        Frame { k, phi, n, m, basis }
    }

    pub fn k(&self) -> i32 {
        self.k
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn n(&self) -> &Vector3<f64> {
        &self.n
    }
    pub fn m(&self) -> &Vector3<f64> {
        &self.m
    }
    pub fn e(&self, i: usize) -> QTensor {
        QTensor(self.basis[i])
    }
}

pub fn w_from_q(q: &QTensor, frame: &Frame) -> WVector {
    WVector(std::array::from_fn(|i| q.0.dot(&frame.basis[i])))
}

pub fn q_from_w(w: &WVector, frame: &Frame) -> QTensor {
    let mut m = Matrix3::zeros();
    for i in 0..5 {
        m += frame.basis[i] * w[i];
    }
    QTensor(m)
}

/// Reflection J = diag(1, 1, -1).
pub fn j_matrix() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
}

/// Z2 action Q -> J Q J.
pub fn act_z2(q: &QTensor) -> QTensor {
    q.conjugate(&j_matrix())
}

/// Z2 action in frame coordinates: negates (w3, w4).
pub fn act_z2_w(w: &WVector) -> WVector {
    WVector([w[0], w[1], w[2], -w[3], -w[4]])
}

/// An element of O(2): optional reflection about the x-axis followed by a
/// rotation by `angle`. It acts on fields by Q_g(x) = A^T Q(T x) A with
/// domain map T = R(angle) L^reflect and target map A = R_k(angle) L^reflect,
/// where R_k rotates about e3 by k angle / 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct O2Element {
    pub reflect: bool,
    pub angle: f64,
}

impl O2Element {
    pub const IDENTITY: O2Element = O2Element { reflect: false, angle: 0.0 };

    pub fn new(reflect: bool, angle: f64) -> Self {
        O2Element { reflect, angle }
    }

    /// Product with the convention act(act(Q, g), h) = act(Q, g.then(h)).
    pub fn then(&self, h: &O2Element) -> O2Element {
        let sign = if self.reflect { -1.0 } else { 1.0 };
        O2Element { reflect: self.reflect ^ h.reflect, angle: self.angle + sign * h.angle }
    }

    pub fn domain_map(&self, x: &Vector2<f64>) -> Vector2<f64> {
        let y = if self.reflect { Vector2::new(x.x, -x.y) } else { *x };
        let (s, c) = self.angle.sin_cos();
        Vector2::new(c * y.x - s * y.y, s * y.x + c * y.y)
    }

    pub fn target(&self, k: i32) -> Matrix3<f64> {
        let (s, c) = (0.5 * k as f64 * self.angle).sin_cos();
        let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        if self.reflect {
            rot * Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0))
        } else {
            rot
        }
    }
}

/// Value at `x` of the field `q` acted on by `g`.
pub fn act_o2<F>(q: F, g: &O2Element, k: i32, x: &Vector2<f64>) -> QTensor
where
    F: Fn(&Vector2<f64>) -> QTensor,
{
    q(&g.domain_map(x)).conjugate(&g.target(k))
}

/// g(x, y, z) = 2x^3 - 6xy^2 + 3xz^2 + 3 sqrt(3) y z^2, the cubic of the
/// bulk potential restricted to (w0, w1, w3).
pub fn g_cubic(x: f64, y: f64, z: f64) -> f64 {
    2.0 * x.powi(3) - 6.0 * x * y * y + 3.0 * x * z * z + 3.0 * SQRT3 * y * z * z
}

/// Bulk potential restricted to w1 = x, w0 = y, other components zero.
pub fn h_bulk2(x: f64, y: f64, p: &MaterialParams) -> f64 {
    let n2 = x * x + y * y;
    (-0.5 * p.a2 + 0.25 * p.c2 * n2) * n2 - p.b2 * SQRT6 / 18.0 * y * (y * y - 3.0 * x * x) - p.f_star
}
