//! Metric, orthonormal frame, connection and curvature of the manifold
//! `M = {(x, u, u1) : u1 != 0}` attached to `u'' = phi(u, u')`.
//!
//! Coordinates are ordered `(x, u, u1)`. Frame and coframe indices are
//! zero-based: `e[0]` is the vector field of the equation, `e[2]` is
//! `d/du1`, and `w[1]` is the contact form.
//!
//! The metric is
//!
//! ```text
//! g = (1 + u1^2) dx^2 - 2 u1 dx du + (1 + phi^2/u1^2) du^2 - 2 (phi/u1) du du1 + du1^2
//! ```
//!
//! which makes `(e1, e2, e3) = (d_x + u1 d_u + phi d_u1, d_u + (phi/u1) d_u1, d_u1)`
//! orthonormal.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Params};
use crate::field::{BoundExpr, Field};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const DEFAULT_EPS_U1: f64 = 1e-9;

/// Default central-difference step for derivatives of form coefficients.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetPoint {
    pub x: f64,
    pub u: f64,
    pub u1: f64,
}

impl JetPoint {
    pub const fn new(x: f64, u: f64, u1: f64) -> Self {
        JetPoint { x, u, u1 }
    }

    pub fn coords(&self) -> Vec3 {
        [self.x, self.u, self.u1]
    }

    pub fn from_coords(c: Vec3) -> Self {
        JetPoint::new(c[0], c[1], c[2])
    }

    fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut c = self.coords();
        c[axis] += h;
        JetPoint::from_coords(c)
    }
}

impl fmt::Display for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.u, self.u1)
    }
}

/// `phi` and the partials the geometry needs, at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiJet {
    pub value: f64,
    pub u: f64,
    pub u1: f64,
    pub uu: f64,
    pub uu1: f64,
    pub u1u1: f64,
}

impl PhiJet {
    /// `e1(phi) = u1 phi_u + phi phi_u1`.
    pub fn e1(&self, u1: f64) -> f64 {
        u1 * self.u + self.value * self.u1
    }

    /// `(phi/u1)_{u1} = (u1 phi_u1 - phi) / u1^2`.
    pub fn ratio_u1(&self, u1: f64) -> f64 {
        (u1 * self.u1 - self.value) / (u1 * u1)
    }
}

type DomainPredicate = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// Right-hand side `phi(u, u1)` of an autonomous second-order equation.
#[derive(Clone)]
pub struct OdeRhs {
    phi: Field,
    eps_u1: f64,
    domain: Option<DomainPredicate>,
}

impl fmt::Debug for OdeRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeRhs")
            .field("phi", &self.phi.describe())
            .field("eps_u1", &self.eps_u1)
            .finish()
    }
}

impl OdeRhs {
    pub fn new(phi: Field) -> Self {
        OdeRhs {
            phi,
            eps_u1: DEFAULT_EPS_U1,
            domain: None,
        }
    }

    pub fn from_expr(expr: Expr, params: Params) -> Self {
        Self::new(BoundExpr::new(expr, params).into_field())
    }

    pub fn with_eps_u1(mut self, eps: f64) -> Self {
        self.eps_u1 = eps;
        self
    }

    /// Restricts the equation to the open set where `pred(u, u1)` holds.
    pub fn with_domain(mut self, pred: impl Fn(f64, f64) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(pred));
        self
    }

    pub fn eps_u1(&self) -> f64 {
        self.eps_u1
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn describe(&self) -> String {
        self.phi.describe()
    }

    pub fn in_domain(&self, u: f64, u1: f64) -> bool {
        self.domain.as_ref().is_none_or(|d| d(u, u1))
    }

    /// Rejects points with `|u1| <= eps_u1` or outside the declared domain.
    pub fn check(&self, p: &JetPoint) -> Result<()> {
        if !(p.u1.abs() > self.eps_u1) {
            return Err(Error::SingularPoint {
                u1: p.u1,
                eps: self.eps_u1,
            });
        }
        if !self.in_domain(p.u, p.u1) {
            return Err(Error::OutsideDomain { u: p.u, u1: p.u1 });
        }
        Ok(())
    }

    /// `phi` and its partials, without the `u1 != 0` check.
    pub fn jet(&self, u: f64, u1: f64) -> Result<PhiJet> {
        if !self.in_domain(u, u1) {
            return Err(Error::OutsideDomain { u, u1 });
        }
        let h = self.phi.jet(u, u1)?;
        Ok(PhiJet {
            value: h.val,
            u: h.d_u,
            u1: h.d_v,
            uu: h.d_uu,
            uu1: h.d_uv,
            u1u1: h.d_vv,
        })
    }

    pub fn jet_at(&self, p: &JetPoint) -> Result<PhiJet> {
        self.check(p)?;
        self.jet(p.u, p.u1)
    }

    pub fn value(&self, u: f64, u1: f64) -> Result<f64> {
        if !self.in_domain(u, u1) {
            return Err(Error::OutsideDomain { u, u1 });
        }
        self.phi.value(u, u1)
    }
}

pub fn metric_at(ode: &OdeRhs, p: &JetPoint) -> Result<Mat3> {
    ode.check(p)?;
    let phi = ode.value(p.u, p.u1)?;
    let r = phi / p.u1;
    Ok([
        [1.0 + p.u1 * p.u1, -p.u1, 0.0],
        [-p.u1, 1.0 + r * r, -r],
        [0.0, -r, 1.0],
    ])
}

/// Lower Cholesky factor, or `None` if the matrix is not positive definite.
pub fn cholesky3(m: &Mat3) -> Option<Mat3> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inverse3(m: &Mat3) -> Option<Mat3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            // cofactor of (j, i)
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *out = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
        }
    }
    Some(inv)
}

/// `g(a, b)` for coordinate vectors.
pub fn inner(g: &Mat3, a: &Vec3, b: &Vec3) -> f64 {
    (0..3)
        .map(|i| (0..3).map(|j| a[i] * g[i][j] * b[j]).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameData {
    /// `e[i]` in the coordinate basis `(d_x, d_u, d_u1)`.
    pub e: [Vec3; 3],
    /// `w[i]` in the coordinate basis `(dx, du, du1)`.
    pub w: [Vec3; 3],
}

impl FrameData {
    fn build(u1: f64, phi: f64) -> Self {
        let r = phi / u1;
        FrameData {
            e: [[1.0, u1, phi], [0.0, 1.0, r], [0.0, 0.0, 1.0]],
            w: [[1.0, 0.0, 0.0], [-u1, 1.0, 0.0], [0.0, -r, 1.0]],
        }
    }

    /// `w[i](e[j])`.
    pub fn pairing(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = dot(&self.w[i], &self.e[j]);
            }
        }
        m
    }

    /// Frame components `w[i](v)` of a coordinate vector.
    pub fn to_frame(&self, v: &Vec3) -> Vec3 {
        [dot(&self.w[0], v), dot(&self.w[1], v), dot(&self.w[2], v)]
    }

    /// Coordinate components of `sum a[i] e[i]`.
    pub fn to_coords(&self, a: &Vec3) -> Vec3 {
        let mut v = [0.0; 3];
        for (ai, ei) in a.iter().zip(&self.e) {
            for (vk, ek) in v.iter_mut().zip(ei) {
                *vk += ai * ek;
            }
        }
        v
    }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn frame_at(ode: &OdeRhs, p: &JetPoint) -> Result<FrameData> {
    ode.check(p)?;
    Ok(FrameData::build(p.u1, ode.value(p.u, p.u1)?))
}

/// Levi-Civita connection forms in the orthonormal coframe.
///
/// `theta[i][j][k]` is the `w[k]` coefficient of `Theta^i_j`, so it is also
/// the interior product `e_k ⌟ Theta^i_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnForms {
    pub theta: [[Vec3; 3]; 3],
}

impl ConnForms {
    fn build(u1: f64, jet: &PhiJet) -> Self {
        let r = jet.value / u1;
        let t12 = [0.0, -r, -0.5];
        let t13 = [0.0, -0.5, -(jet.u1 - r)];
        let t23 = [-0.5, 0.0, -jet.ratio_u1(u1)];
        let neg = |v: Vec3| [-v[0], -v[1], -v[2]];
        let z = [0.0; 3];
        ConnForms {
            theta: [[z, t12, t13], [neg(t12), z, t23], [neg(t13), neg(t23), z]],
        }
    }

    /// `e_a ⌟ Theta^i_j`.
    pub fn interior(&self, i: usize, j: usize, a: usize) -> f64 {
        self.theta[i][j][a]
    }

    /// Frame Christoffel symbols: `nabla_{e_i} e_j = sum_k gamma(k, i, j) e_k`.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.theta[k][j][i]
    }

    /// `sum_ij a^i b^j nabla_{e_i} e_j` in frame components.
    pub fn contract(&self, a: &Vec3, b: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *o += a[i] * b[j] * self.gamma(k, i, j);
                }
            }
        }
        out
    }
}

pub fn connection_forms_at(ode: &OdeRhs, p: &JetPoint) -> Result<ConnForms> {
    let jet = ode.jet_at(p)?;
    Ok(ConnForms::build(p.u1, &jet))
}

/// Frame components of `nabla_{e_i} e_j` (zero-based indices).
pub fn covariant_derivative_frame(ode: &OdeRhs, p: &JetPoint, i: usize, j: usize) -> Result<Vec3> {
    if i > 2 || j > 2 {
        return Err(Error::InvalidArgument(format!(
            "frame index ({i}, {j}) out of range"
        )));
    }
    let c = connection_forms_at(ode, p)?;
    Ok([c.gamma(0, i, j), c.gamma(1, i, j), c.gamma(2, i, j)])
}

/// Sectional curvatures along the frame planes `{e1,e2}`, `{e1,e3}`, `{e2,e3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvTriple {
    pub r1212: f64,
    pub r1313: f64,
    pub r2323: f64,
}

impl CurvTriple {
    pub fn as_array(&self) -> Vec3 {
        [self.r1212, self.r1313, self.r2323]
    }

    pub fn max_abs_diff(&self, other: &CurvTriple) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn curvatures_from_jet(u1: f64, j: &PhiJet) -> CurvTriple {
    let (phi, pu, pv, puv, pvv) = (j.value, j.u, j.u1, j.uu1, j.u1u1);
    let v2 = u1 * u1;
    CurvTriple {
        r1212: 0.25 - j.e1(u1) / u1,
        r1313: -0.75 + pu - pv * pv - phi * pvv - puv * u1 + 3.0 * phi * pv / u1
            - 2.0 * phi * phi / v2,
        r2323: 0.25 - (phi * pv + puv) / u1 - (phi * pvv - phi * phi - pu + pv * pv) / v2
            + 4.0 * phi * pv / (v2 * u1)
            - 3.0 * phi * phi / (v2 * v2),
    }
}

pub fn sectional_curvatures(ode: &OdeRhs, p: &JetPoint) -> Result<CurvTriple> {
    let jet = ode.jet_at(p)?;
    Ok(curvatures_from_jet(p.u1, &jet))
}

/// Second fundamental form data of the energy leaf through a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafGeom {
    pub mean_curvature: f64,
    pub k_ext: f64,
    pub k_int: f64,
    /// `s[i][j] = e_j ⌟ Theta^3_i` restricted to the leaf.
    pub s: [[f64; 2]; 2],
    /// `|k_int - (r1212 + k_ext)|`, the Gauss-equation defect.
    pub gauss_residual: f64,
}

pub fn leaf_geometry(ode: &OdeRhs, p: &JetPoint) -> Result<LeafGeom> {
    let jet = ode.jet_at(p)?;
    let conn = ConnForms::build(p.u1, &jet);
    let mut s = [[0.0; 2]; 2];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            *out = conn.interior(2, i, j);
        }
    }
    let k_ext = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let mean_curvature = 0.5 * (s[0][0] + s[1][1]);
    let k_int = -jet.e1(p.u1) / p.u1;
    let r1212 = curvatures_from_jet(p.u1, &jet).r1212;
    Ok(LeafGeom {
        mean_curvature,
        k_ext,
        k_int,
        s,
        gauss_residual: (k_int - (r1212 + k_ext)).abs(),
    })
}

/// Whether `(phi/u1)_{u1}` stays away from zero on a set of points, which
/// is what makes every geodesic prolongation a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConverseCertificate {
    pub min_abs_ratio_u1: f64,
    pub max_abs_ratio_u1: f64,
    pub certified: bool,
}

pub const CONVERSE_THRESHOLD: f64 = 1e-10;

pub fn converse_certificate(ode: &OdeRhs, points: &[JetPoint]) -> Result<ConverseCertificate> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for p in points {
        let d = ode.jet_at(p)?.ratio_u1(p.u1).abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(ConverseCertificate {
        min_abs_ratio_u1: lo,
        max_abs_ratio_u1: hi,
        certified: lo > CONVERSE_THRESHOLD,
    })
}

/// Finite-difference checks of both structure equations at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CartanReport {
    /// `d w^i (e_a, e_b)` by differences vs the closed-form exterior derivatives.
    pub first_structure: f64,
    /// `d w^i` vs `sum_k w^k ^ Theta^i_k` built from the connection forms.
    pub torsion: f64,
    /// Curvature 2-forms `dTheta + Theta ^ Theta` evaluated on frame pairs.
    pub curvature_fd: CurvTriple,
    /// Largest deviation of `curvature_fd` from [`sectional_curvatures`],
    /// each divided by `max(1, |closed form|)`. Near `u1 = 0` the curvatures
    /// grow like `u1^-4`, and differences lose digits in proportion.
    pub curvature: f64,
}

fn coframe_coords(ode: &OdeRhs, q: &JetPoint) -> Result<[Vec3; 3]> {
    ode.check(q)?;
    Ok(FrameData::build(q.u1, ode.value(q.u, q.u1)?).w)
}

fn theta_coords(ode: &OdeRhs, q: &JetPoint) -> Result<[Vec3; 9]> {
    let jet = ode.jet_at(q)?;
    let conn = ConnForms::build(q.u1, &jet);
    let w = FrameData::build(q.u1, jet.value).w;
    let mut out = [[0.0; 3]; 9];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for mu in 0..3 {
                    out[3 * i + j][mu] += conn.theta[i][j][k] * w[k][mu];
                }
            }
        }
    }
    Ok(out)
}

/// Coordinate exterior derivatives `(d alpha)_{mu nu}` of `N` one-forms.
fn exterior_fd<const N: usize>(
    forms: impl Fn(&JetPoint) -> Result<[Vec3; N]>,
    p: &JetPoint,
    h: f64,
) -> Result<[Mat3; N]> {
    // partial[n][mu][nu] = d_mu alpha_n,nu
    let mut partial = [[[0.0; 3]; 3]; N];
    for mu in 0..3 {
        let plus = forms(&p.shifted(mu, h)).map_err(|_| Error::StepTooLarge { radius: h })?;
        let minus = forms(&p.shifted(mu, -h)).map_err(|_| Error::StepTooLarge { radius: h })?;
        for n in 0..N {
            for nu in 0..3 {
                partial[n][mu][nu] = (plus[n][nu] - minus[n][nu]) / (2.0 * h);
            }
        }
    }
    let mut d = [[[0.0; 3]; 3]; N];
    for n in 0..N {
        for mu in 0..3 {
            for nu in 0..3 {
                d[n][mu][nu] = partial[n][mu][nu] - partial[n][nu][mu];
            }
        }
    }
    Ok(d)
}

fn two_form_on(d: &Mat3, x: &Vec3, y: &Vec3) -> f64 {
    let mut s = 0.0;
    for mu in 0..3 {
        for nu in 0..3 {
            s += x[mu] * y[nu] * d[mu][nu];
        }
    }
    s
}

pub fn cartan_residuals(ode: &OdeRhs, p: &JetPoint, h: f64) -> Result<CartanReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h} must be positive"
        )));
    }
    let jet = ode.jet_at(p)?;
    if p.u1.abs() - h <= ode.eps_u1() {
        return Err(Error::StepTooLarge { radius: h });
    }
    let frame = FrameData::build(p.u1, jet.value);
    let conn = ConnForms::build(p.u1, &jet);
    let e = &frame.e;

    // first structure equation
    let dw = exterior_fd(|q| coframe_coords(ode, q), p, h)?;
    let r = jet.value / p.u1;
    // closed-form coefficients of d w^i on w^a ^ w^b, a < b
    let closed = |i: usize, a: usize, b: usize| -> f64 {
        match (i, a, b) {
            (1, 0, 1) => r,
            (1, 0, 2) => 1.0,
            (2, 0, 2) => jet.u1 - r,
            (2, 1, 2) => jet.ratio_u1(p.u1),
            _ => 0.0,
        }
    };
    let mut first: f64 = 0.0;
    let mut torsion: f64 = 0.0;
    for i in 0..3 {
        for a in 0..3 {
            for b in (a + 1)..3 {
                let fd = two_form_on(&dw[i], &e[a], &e[b]);
                first = first.max((fd - closed(i, a, b)).abs());
                // (sum_k w^k ^ Theta^i_k)(e_a, e_b) = Theta^i_a(e_b) - Theta^i_b(e_a)
                let structural = conn.interior(i, a, b) - conn.interior(i, b, a);
                torsion = torsion.max((fd - structural).abs());
            }
        }
    }

    // second structure equation on the three frame planes
    let dtheta = exterior_fd(|q| theta_coords(ode, q), p, h)?;
    let omega = |i: usize, j: usize, a: usize, b: usize| -> f64 {
        let mut v = two_form_on(&dtheta[3 * i + j], &e[a], &e[b]);
        for k in 0..3 {
            v += conn.interior(i, k, a) * conn.interior(k, j, b)
                - conn.interior(i, k, b) * conn.interior(k, j, a);
        }
        v
    };
    let curvature_fd = CurvTriple {
        r1212: omega(0, 1, 0, 1),
        r1313: omega(0, 2, 0, 2),
        r2323: omega(1, 2, 1, 2),
    };
    let closed_curv = curvatures_from_jet(p.u1, &jet);
    Ok(CartanReport {
        first_structure: first,
        torsion,
        curvature_fd,
        curvature: curvature_fd
            .as_array()
            .iter()
            .zip(closed_curv.as_array())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max),
    })
}

/// Coordinate Christoffel symbols `gamma[mu][nu][rho]` of the metric, from
/// central differences of [`metric_at`]. Independent of the connection forms.
pub fn christoffel_fd(ode: &OdeRhs, p: &JetPoint, h: f64) -> Result<[Mat3; 3]> {
    let g = metric_at(ode, p)?;
    let ginv = inverse3(&g).ok_or(Error::SingularPoint {
        u1: p.u1,
        eps: ode.eps_u1(),
    })?;
    // dg[sigma][a][b] = d_sigma g_ab
    let mut dg = [[[0.0; 3]; 3]; 3];
    for (sigma, slot) in dg.iter_mut().enumerate() {
        let plus =
            metric_at(ode, &p.shifted(sigma, h)).map_err(|_| Error::StepTooLarge { radius: h })?;
        let minus =
            metric_at(ode, &p.shifted(sigma, -h)).map_err(|_| Error::StepTooLarge { radius: h })?;
        for a in 0..3 {
            for b in 0..3 {
                slot[a][b] = (plus[a][b] - minus[a][b]) / (2.0 * h);
            }
        }
    }
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for (mu, gm) in gamma.iter_mut().enumerate() {
        for nu in 0..3 {
            for rho in 0..3 {
                let mut s = 0.0;
                for sigma in 0..3 {
                    s += ginv[mu][sigma]
                        * (dg[nu][sigma][rho] + dg[rho][sigma][nu] - dg[sigma][nu][rho]);
                }
                gm[nu][rho] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}
