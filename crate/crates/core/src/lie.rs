//! so(3) algebra through the vector-product isomorphism, closed-form
//! exponentials and the adjoint-conjugation identities.
//!
//! Every algebra element is stored as its image under the isomorphism
//! `phi_L: so(3) -> R^3`, so the Lie bracket is the cross product and the
//! inner product is the Euclidean one (the opposite of the Killing form up
//! to normalization). Rotations are explicit 3x3 matrices.
//!
//! Conventions fixed here and inherited by every other module:
//!
//! * flows act on the right upstairs: `x exp(t hat(z))`;
//! * the frame vectors are `f = (0,0,-cos a)`, `g = (-sin a,0,0)`,
//!   `h = (0, sin a cos a, 0)`, matching the concrete matrices of the
//!   transposed column-vector system downstairs (the projected fields act
//!   as `(-z) x y` on column vectors, see [`crate::sphere`]);
//! * angles are radians, time is dimensionless (unit angular speed for the
//!   bang generators `X_+`, `X_-`).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard subtracted from pi/4 when validating the cone angle.
pub const ALPHA_GUARD: f64 = 1e-3;

/// Entry-wise tolerance for orthogonality of rotation matrices.
pub const ROTATION_TOL: f64 = 1e-10;

/// Orthogonality defect above which a rotation is re-orthonormalized.
pub const REORTHONORMALIZE_AT: f64 = 1e-12;

/// The cone half-angle `alpha in (0, pi/4 - guard)` with cached cosine and sine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    value: f64,
    cos: f64,
    sin: f64,
}

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        let max = std::f64::consts::FRAC_PI_4 - ALPHA_GUARD;
        if !(value > 0.0 && value < max) {
            return Err(Error::AlphaOutOfRange { value, max });
        }
        Ok(Alpha {
            value,
            cos: value.cos(),
            sin: value.sin(),
        })
    }

    pub fn rad(&self) -> f64 {
        self.value
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    pub fn cos_sq(&self) -> f64 {
        self.cos * self.cos
    }

    pub fn sin_sq(&self) -> f64 {
        self.sin * self.sin
    }

    pub fn tan(&self) -> f64 {
        self.sin / self.cos
    }

    /// cot^2(alpha), the constant in the interior-duration formula.
    pub fn cot_sq(&self) -> f64 {
        (self.cos / self.sin).powi(2)
    }
}

/// Bang control sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(&self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(&self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Sign after `n` alternations starting from `self`.
    pub fn after(&self, n: usize) -> Sign {
        if n % 2 == 0 {
            *self
        } else {
            self.flip()
        }
    }

    pub fn from_f64(u: f64) -> Option<Sign> {
        if u > 0.0 {
            Some(Sign::Plus)
        } else if u < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Element of so(3) stored as its `phi_L` image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement {
    v: Vector3<f64>,
}

impl AlgebraElement {
    pub fn new(v: Vector3<f64>) -> Self {
        AlgebraElement { v }
    }

    pub fn from_components(a: f64, b: f64, c: f64) -> Self {
        AlgebraElement {
            v: Vector3::new(a, b, c),
        }
    }

    pub fn vec(&self) -> Vector3<f64> {
        self.v
    }

    /// The antisymmetric matrix `hat(v)` with `hat(v) w = v x w`.
    pub fn hat(&self) -> Matrix3<f64> {
        hat(&self.v)
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    pub fn scale(&self, k: f64) -> AlgebraElement {
        AlgebraElement { v: self.v * k }
    }
}

impl std::ops::Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        AlgebraElement { v: self.v + rhs.v }
    }
}

impl std::ops::Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        AlgebraElement { v: self.v - rhs.v }
    }
}

impl std::ops::Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement { v: -self.v }
    }
}

/// `hat(v) w = v x w` for all `w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]; exact on antisymmetric matrices.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Inner product `<z1, z2> = <phi_L z1, phi_L z2> = -1/2 Tr(z1 z2)`.
pub fn inner(z1: &AlgebraElement, z2: &AlgebraElement) -> f64 {
    z1.v.dot(&z2.v)
}

/// `[z1, z2] = z1 z2 - z2 z1`, i.e. the cross product downstairs.
pub fn lie_bracket(z1: &AlgebraElement, z2: &AlgebraElement) -> AlgebraElement {
    AlgebraElement {
        v: z1.v.cross(&z2.v),
    }
}

/// Rotation matrix in SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            m: Matrix3::identity(),
        }
    }

    /// Wraps a matrix after verifying orthogonality and determinant.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let defect = orthogonality_defect(&m);
        let det = m.determinant();
        if defect > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotARotation { defect, det });
        }
        let mut r = Rotation { m };
        if defect > REORTHONORMALIZE_AT {
            r.reorthonormalize();
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Rotation {
        Rotation { m: self.m.transpose() }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// Right multiplication `self * other`, re-orthonormalizing on drift.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut r = Rotation { m: self.m * other.m };
        if orthogonality_defect(&r.m) > REORTHONORMALIZE_AT {
            r.reorthonormalize();
        }
        r
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.m)
    }

    /// One step of the Newton iteration toward the polar orthogonal factor.
    pub fn reorthonormalize(&mut self) {
        for _ in 0..3 {
            let correction = Matrix3::identity() * 1.5 - 0.5 * (self.m.transpose() * self.m);
            self.m *= correction;
            if orthogonality_defect(&self.m) <= REORTHONORMALIZE_AT {
                break;
            }
        }
    }

    /// Geodesic distance on SO(3): the rotation angle of `self^T other`.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let rel = self.m.transpose() * other.m;
        let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

fn orthogonality_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Rodrigues closed form for a unit generator: `Id + sin(t) X + (1-cos(t)) X^2`.
pub fn exp_unit(x: &AlgebraElement, t: f64) -> Result<Rotation> {
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitNorm { norm });
    }
    Ok(exp_rodrigues(&x.v, t))
}

/// Exponential for any generator, reducing to the unit case by rescaling.
pub fn exp_general(x: &AlgebraElement, t: f64) -> Rotation {
    let norm = x.norm();
    if norm == 0.0 {
        return Rotation::identity();
    }
    exp_rodrigues(&(x.v / norm), norm * t)
}

fn exp_rodrigues(axis: &Vector3<f64>, angle: f64) -> Rotation {
    let k = hat(axis);
    let m = Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
    Rotation { m }
}

/// Rotates a point about a unit axis by the given angle (Rodrigues on vectors).
pub fn rotate_about(axis: &Vector3<f64>, angle: f64, y: &Vector3<f64>) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    y * c + axis.cross(y) * s + axis * (axis.dot(y) * (1.0 - c))
}

/// The frame `(f, g, h)` attached to a cone angle.
///
/// `|f| = cos a`, `|g| = sin a`, `<f,g> = 0`, and the bracket relations
/// `[f,g] = h`, `[g,h] = sin^2(a) f`, `[h,f] = cos^2(a) g` hold exactly.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub alpha: Alpha,
    pub f: AlgebraElement,
    pub g: AlgebraElement,
    pub h: AlgebraElement,
}

impl Frame {
    pub fn new(alpha: Alpha) -> Self {
        let (ca, sa) = (alpha.cos(), alpha.sin());
        Frame {
            alpha,
            f: AlgebraElement::from_components(0.0, 0.0, -ca),
            g: AlgebraElement::from_components(-sa, 0.0, 0.0),
            h: AlgebraElement::from_components(0.0, sa * ca, 0.0),
        }
    }

    pub fn from_angle(alpha: f64) -> Result<Self> {
        Ok(Frame::new(Alpha::new(alpha)?))
    }

    /// `X_+ = f + g` or `X_- = f - g`; both have unit norm.
    pub fn bang(&self, sign: Sign) -> AlgebraElement {
        match sign {
            Sign::Plus => self.f + self.g,
            Sign::Minus => self.f - self.g,
        }
    }

    pub fn x_plus(&self) -> AlgebraElement {
        self.bang(Sign::Plus)
    }

    pub fn x_minus(&self) -> AlgebraElement {
        self.bang(Sign::Minus)
    }

    /// Components of `w` on the orthogonal basis `(f, g, h)`.
    pub fn components(&self, w: &AlgebraElement) -> (f64, f64, f64) {
        let ca2 = self.alpha.cos_sq();
        let sa2 = self.alpha.sin_sq();
        (
            inner(w, &self.f) / ca2,
            inner(w, &self.g) / sa2,
            inner(w, &self.h) / (sa2 * ca2),
        )
    }

    /// `a f + b g + c h`.
    pub fn combine(&self, a: f64, b: f64, c: f64) -> AlgebraElement {
        AlgebraElement::new(a * self.f.vec() + b * self.g.vec() + c * self.h.vec())
    }
}

/// Generators admitting closed-form conjugation identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedFormBase {
    XPlus,
    XMinus,
    Drift,
}

/// Generic conjugation `e^{t ad_x}(w) = e^{t x} w e^{-t x}`.
///
/// In vector form this is the rotation of `phi_L(w)` about `phi_L(x)`.
pub fn ad_conjugate(x: &AlgebraElement, t: f64, w: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::new(exp_general(x, t).apply(&w.vec()))
}

/// Closed-form conjugation for the bases `X_+`, `X_-` and the drift `f`.
///
/// Reproduces the six classical identities for the frame relations; agrees
/// with [`ad_conjugate`] to rounding.
pub fn ad_conjugate_closed(
    frame: &Frame,
    base: ClosedFormBase,
    t: f64,
    w: &AlgebraElement,
) -> AlgebraElement {
    let (a, b, c) = frame.components(w);
    let ca2 = frame.alpha.cos_sq();
    let sa2 = frame.alpha.sin_sq();
    let (st, ct) = t.sin_cos();
    match base {
        ClosedFormBase::XPlus | ClosedFormBase::XMinus => {
            let eps = if base == ClosedFormBase::XPlus { 1.0 } else { -1.0 };
            // Images of the basis vectors under e^{t ad_{X_eps}}.
            let f_img = (ca2 + sa2 * ct, eps * ca2 * (1.0 - ct), -eps * st);
            let g_img = (eps * sa2 * (1.0 - ct), sa2 + ca2 * ct, st);
            let h_img = (eps * sa2 * st, -ca2 * st, ct);
            frame.combine(
                a * f_img.0 + b * g_img.0 + c * h_img.0,
                a * f_img.1 + b * g_img.1 + c * h_img.1,
                a * f_img.2 + b * g_img.2 + c * h_img.2,
            )
        }
        ClosedFormBase::Drift => {
            let ca = frame.alpha.cos();
            let (sct, cct) = (t * ca).sin_cos();
            // e^{t ad_f} fixes f and rotates the (g, h) plane at rate cos(alpha).
            frame.combine(a, b * cct - c * ca * sct, b * sct / ca + c * cct)
        }
    }
}

/// Closed form of `e^{t ad_{X_eps}}(X_{-eps})`, kept as a named identity.
pub fn ad_conjugate_opposite_bang(frame: &Frame, sign: Sign, t: f64) -> AlgebraElement {
    let eps = sign.value();
    let c2a = frame.alpha.cos_sq() - frame.alpha.sin_sq();
    let sa2 = frame.alpha.sin_sq();
    let ca2 = frame.alpha.cos_sq();
    let (st, ct) = t.sin_cos();
    frame.combine(
        c2a + 2.0 * sa2 * ct,
        eps * (c2a - 2.0 * ca2 * ct),
        -2.0 * eps * st,
    )
}
