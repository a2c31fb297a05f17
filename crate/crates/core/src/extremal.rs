//! Extremals of the problem upstairs: switching functions, the adjoint
//! flow, conserved quantities and closed-form bang propagation.
//!
//! The covector is reduced to a single vector `p` with the property that
//! the pairing `<p, z>` evaluates the Hamiltonian function of the
//! left-invariant field `z` along the trajectory. The switching functions
//! are then `phi_1 = <p, f>`, `phi_2 = <p, g>`, `phi_3 = <p, h>`, and a
//! bang arc of sign `eps` and duration `t` transports `p` by the inverse
//! flow `exp(-t hat(X_eps))`. ODE integration appears only in test oracles.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{exp_general, exp_unit, rotate_about, Frame, Rotation, Sign};

/// Tolerance for the conserved quantity `I_1` along admissible extremals.
pub const I1_TOL: f64 = 1e-9;

/// Pattern tolerance used by [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Reduced covector of an extremal pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covector {
    /// Dual vector: `<p, z>` is the Hamiltonian of the field `z`.
    pub p: Vector3<f64>,
    /// PMP multiplier, `0` (abnormal) or `1` (normal).
    pub lambda0: f64,
}

impl Covector {
    /// Builds the covector with prescribed switching-function values
    /// `(phi_1, phi_2, phi_3)` in the `(f, g, h)` dual basis.
    pub fn from_phi(frame: &Frame, phi: (f64, f64, f64), lambda0: f64) -> Result<Self> {
        let (p1, p2, p3) = phi;
        if p1 == 0.0 && p2 == 0.0 && p3 == 0.0 {
            return Err(Error::ZeroCovector);
        }
        let ca2 = frame.alpha.cos_sq();
        let sa2 = frame.alpha.sin_sq();
        let p = frame
            .combine(p1 / ca2, p2 / sa2, p3 / (sa2 * ca2))
            .vec();
        Ok(Covector { p, lambda0 })
    }

    /// Switching-function values `(phi_1, phi_2, phi_3)`.
    pub fn phi(&self, frame: &Frame) -> (f64, f64, f64) {
        (
            self.p.dot(&frame.f.vec()),
            self.p.dot(&frame.g.vec()),
            self.p.dot(&frame.h.vec()),
        )
    }

    /// `I_1 = -phi_1 + |phi_2|`; equals `lambda0` along admissible extremals.
    pub fn i1(&self, frame: &Frame) -> f64 {
        let (p1, p2, _) = self.phi(frame);
        -p1 + p2.abs()
    }

    /// The Casimir `I_2 = cos^2 phi_2^2 + sin^2 phi_1^2 + phi_3^2`.
    ///
    /// Equals `sin^2 cos^2 |p|^2`, hence exactly invariant under the
    /// closed-form transport.
    pub fn i2(&self, frame: &Frame) -> f64 {
        let (p1, p2, p3) = self.phi(frame);
        frame.alpha.cos_sq() * p2 * p2 + frame.alpha.sin_sq() * p1 * p1 + p3 * p3
    }

    /// Whether `I_1` matches `lambda0` within [`I1_TOL`].
    pub fn is_admissible(&self, frame: &Frame) -> bool {
        (self.i1(frame) - self.lambda0).abs() < I1_TOL
    }
}

/// State of an extremal pair at time `t`.
#[derive(Clone, Copy, Debug)]
pub struct ExtremalState {
    pub x: Rotation,
    pub cov: Covector,
    pub t: f64,
}

impl ExtremalState {
    pub fn new(x: Rotation, cov: Covector, t: f64) -> Self {
        ExtremalState { x, cov, t }
    }

    pub fn initial(cov: Covector) -> Self {
        ExtremalState {
            x: Rotation::identity(),
            cov,
            t: 0.0,
        }
    }
}

/// Switching functions at the given state.
pub fn switching_functions(frame: &Frame, state: &ExtremalState) -> (f64, f64, f64) {
    state.cov.phi(frame)
}

/// Right-hand side of the adjoint system:
/// `(phi_1', phi_2', phi_3') = (-u phi_3, phi_3, sin^2 u phi_1 - cos^2 phi_2)`.
pub fn adjoint_rhs(frame: &Frame, phi: (f64, f64, f64), u: f64) -> (f64, f64, f64) {
    let (p1, p2, p3) = phi;
    (
        -u * p3,
        p3,
        frame.alpha.sin_sq() * u * p1 - frame.alpha.cos_sq() * p2,
    )
}

/// Propagates state and covector along a bang arc in closed form.
///
/// The group state moves by `x exp(dt hat(X_eps))`; the covector by the
/// inverse flow, so both conserved quantities are preserved to rounding.
pub fn propagate_bang(frame: &Frame, state: &ExtremalState, sign: Sign, dt: f64) -> ExtremalState {
    debug_assert!(dt >= 0.0);
    let x_gen = frame.bang(sign);
    let x = state
        .x
        .compose(&exp_unit(&x_gen, dt).expect("bang generators are unit"));
    let p = rotate_about(&(-x_gen.vec()), dt, &state.cov.p);
    ExtremalState {
        x,
        cov: Covector {
            p,
            lambda0: state.cov.lambda0,
        },
        t: state.t + dt,
    }
}

/// Propagates along a singular arc (drift flow, `u = 0`).
pub fn propagate_singular(frame: &Frame, state: &ExtremalState, dt: f64) -> ExtremalState {
    debug_assert!(dt >= 0.0);
    let x = state.x.compose(&exp_general(&frame.f, dt));
    let p = exp_general(&-frame.f, dt).apply(&state.cov.p);
    ExtremalState {
        x,
        cov: Covector {
            p,
            lambda0: state.cov.lambda0,
        },
        t: state.t + dt,
    }
}

/// Interior bang duration from the switching configuration.
///
/// At a switching time `phi_2 = 0` and the next interior arc with control
/// `u` lasts the unique `T` in `(pi, 2 pi)` with
/// `tan(T/2) = phi_3(0) / (u sin^2)`, which requires `sign(phi_3) = -sign(u)`.
pub fn interior_bang_duration(frame: &Frame, phi3_0: f64, u: Sign) -> Result<f64> {
    let uv = u.value();
    if phi3_0 == 0.0 || phi3_0 * uv > 0.0 {
        return Err(Error::NotASwitchingConfiguration { phi3: phi3_0, u: uv });
    }
    let ratio = phi3_0 / (uv * frame.alpha.sin_sq());
    Ok(2.0 * std::f64::consts::PI + 2.0 * ratio.atan())
}

/// One arc of a concatenation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcKind {
    Bang(Sign),
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSpec {
    pub kind: ArcKind,
    pub duration: f64,
}

impl ArcSpec {
    pub fn bang(sign: Sign, duration: f64) -> Self {
        ArcSpec {
            kind: ArcKind::Bang(sign),
            duration,
        }
    }

    pub fn singular(duration: f64) -> Self {
        ArcSpec {
            kind: ArcKind::Singular,
            duration,
        }
    }
}

/// Signed bang/singular program with an optional initial covector.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalArcSequence {
    pub arcs: Vec<ArcSpec>,
    pub initial_covector: Option<Covector>,
}

impl ExtremalArcSequence {
    pub fn new(arcs: Vec<ArcSpec>) -> Self {
        ExtremalArcSequence {
            arcs,
            initial_covector: None,
        }
    }

    pub fn with_covector(arcs: Vec<ArcSpec>, cov: Covector) -> Self {
        ExtremalArcSequence {
            arcs,
            initial_covector: Some(cov),
        }
    }

    pub fn total_time(&self) -> f64 {
        self.arcs.iter().map(|a| a.duration).sum()
    }

    /// Alternating bang program starting with `first`, given durations.
    pub fn alternating(first: Sign, durations: &[f64]) -> Self {
        let arcs = durations
            .iter()
            .enumerate()
            .map(|(i, &d)| ArcSpec::bang(first.after(i), d))
            .collect();
        ExtremalArcSequence::new(arcs)
    }

    /// Wire record with fields `signs` (0 for singular), `durations`, `lambda0`.
    pub fn record(&self) -> ArcSequenceRecord {
        ArcSequenceRecord {
            signs: self
                .arcs
                .iter()
                .map(|a| match a.kind {
                    ArcKind::Bang(Sign::Plus) => 1,
                    ArcKind::Bang(Sign::Minus) => -1,
                    ArcKind::Singular => 0,
                })
                .collect(),
            durations: self.arcs.iter().map(|a| a.duration).collect(),
            lambda0: self.initial_covector.map(|c| c.lambda0),
        }
    }
}

/// Serialization record for [`ExtremalArcSequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSequenceRecord {
    pub signs: Vec<i8>,
    pub durations: Vec<f64>,
    pub lambda0: Option<f64>,
}

impl ArcSequenceRecord {
    /// Rebuilds the arc list; the full covector is not part of the record.
    pub fn into_sequence(self) -> Result<ExtremalArcSequence> {
        if self.signs.len() != self.durations.len() {
            return Err(Error::Config(
                "signs and durations length mismatch".to_string(),
            ));
        }
        let arcs = self
            .signs
            .iter()
            .zip(&self.durations)
            .map(|(&s, &d)| match s {
                1 => Ok(ArcSpec::bang(Sign::Plus, d)),
                -1 => Ok(ArcSpec::bang(Sign::Minus, d)),
                0 => Ok(ArcSpec::singular(d)),
                other => Err(Error::Config(format!("invalid sign {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExtremalArcSequence::new(arcs))
    }
}

/// Structural class of an arc sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremalClass {
    Normal,
    Abnormal,
    ContainsSingular,
    NotExtremal,
}

/// Classifies a sequence against the structural patterns of extremals:
/// abnormal interiors are exactly `pi`, normal interiors share a common
/// duration in `(pi, 2 pi)`, and singular arcs only occur as `B S B`.
///
/// Sequences with no interior arc satisfy the normal pattern vacuously and
/// are reported as `Normal` unless a `lambda0 = 0` covector is attached.
pub fn classify(frame: &Frame, seq: &ExtremalArcSequence) -> ExtremalClass {
    let tol = CLASSIFY_TOL;
    let arcs = &seq.arcs;
    if arcs.is_empty() {
        return ExtremalClass::Normal;
    }
    let tau = 2.0 * std::f64::consts::PI;
    for arc in arcs {
        if arc.duration < -tol {
            return ExtremalClass::NotExtremal;
        }
        match arc.kind {
            ArcKind::Bang(_) => {
                if arc.duration >= tau + tol {
                    return ExtremalClass::NotExtremal;
                }
            }
            ArcKind::Singular => {
                if arc.duration >= tau / frame.alpha.cos() + tol {
                    return ExtremalClass::NotExtremal;
                }
            }
        }
    }

    let singular_count = arcs
        .iter()
        .filter(|a| matches!(a.kind, ArcKind::Singular))
        .count();
    if singular_count > 0 {
        return classify_singular(frame, arcs, singular_count, tol);
    }

    // Bang-bang: signs must alternate.
    for w in arcs.windows(2) {
        match (w[0].kind, w[1].kind) {
            (ArcKind::Bang(a), ArcKind::Bang(b)) if a == b => return ExtremalClass::NotExtremal,
            _ => {}
        }
    }

    if arcs.len() <= 2 {
        if let Some(cov) = &seq.initial_covector {
            if cov.lambda0 == 0.0 {
                return ExtremalClass::Abnormal;
            }
        }
        return ExtremalClass::Normal;
    }

    let interior: Vec<f64> = arcs[1..arcs.len() - 1].iter().map(|a| a.duration).collect();
    let t_first = interior[0];
    let spread = interior
        .iter()
        .fold(0.0f64, |acc, &d| acc.max((d - t_first).abs()));
    if spread > tol {
        return ExtremalClass::NotExtremal;
    }
    let outer_ok = |bound: f64| {
        arcs.first().unwrap().duration <= bound + tol && arcs.last().unwrap().duration <= bound + tol
    };
    if (t_first - std::f64::consts::PI).abs() <= tol {
        if outer_ok(std::f64::consts::PI) {
            return ExtremalClass::Abnormal;
        }
        return ExtremalClass::NotExtremal;
    }
    if t_first > std::f64::consts::PI + tol && t_first < tau - tol && outer_ok(t_first) {
        return ExtremalClass::Normal;
    }
    ExtremalClass::NotExtremal
}

fn classify_singular(
    frame: &Frame,
    arcs: &[ArcSpec],
    singular_count: usize,
    tol: f64,
) -> ExtremalClass {
    // The only admissible shape is B_t S_s B_t' (outer bangs optional).
    if singular_count > 1 || arcs.len() > 3 {
        return ExtremalClass::NotExtremal;
    }
    let pos = arcs
        .iter()
        .position(|a| matches!(a.kind, ArcKind::Singular))
        .unwrap();
    let flanked_ok = pos == 0 || matches!(arcs[pos - 1].kind, ArcKind::Bang(_));
    let trailing_ok = pos + 1 >= arcs.len() || matches!(arcs[pos + 1].kind, ArcKind::Bang(_));
    if !flanked_ok || !trailing_ok {
        return ExtremalClass::NotExtremal;
    }
    let s = arcs[pos].duration;
    let has_bang = arcs
        .iter()
        .enumerate()
        .any(|(i, a)| i != pos && a.duration > tol);
    if has_bang && s > std::f64::consts::PI / frame.alpha.cos() + tol {
        return ExtremalClass::NotExtremal;
    }
    ExtremalClass::ContainsSingular
}

/// Endpoint of the sequence applied on the right of `start`.
pub fn endpoint(frame: &Frame, seq: &ExtremalArcSequence, start: &Rotation) -> Rotation {
    let mut x = *start;
    for arc in &seq.arcs {
        let step = match arc.kind {
            ArcKind::Bang(sign) => {
                exp_unit(&frame.bang(sign), arc.duration).expect("bang generators are unit")
            }
            ArcKind::Singular => exp_general(&frame.f, arc.duration),
        };
        x = x.compose(&step);
    }
    x
}

/// Result of scanning `phi_2` along an admissible extremal.
#[derive(Clone, Debug, Default)]
pub struct Phi2Scan {
    /// Zeros of `phi_2`, in increasing time order.
    pub zeros: Vec<f64>,
    /// Intervals where `|phi_2| < 1e-10` persisted over 10 grid steps.
    pub singular_candidates: Vec<(f64, f64)>,
}

/// Follows the admissible extremal from `cov` with initial control `u0`,
/// flipping the control at each zero of `phi_2`, and locates the zeros by
/// sign-change bracketing on a fixed grid followed by bisection.
pub fn phi2_zero_scan(
    frame: &Frame,
    cov: &Covector,
    u0: Sign,
    t_max: f64,
    step: f64,
) -> Phi2Scan {
    let g = frame.g.vec();
    let mut scan = Phi2Scan::default();
    let mut u = u0;
    let mut arc_start_t = 0.0;
    let mut arc_start_p = cov.p;
    let mut quiet_run = 0usize;
    let mut quiet_start = 0.0f64;

    // phi_2 along the current arc, offset tau from the arc start.
    let phi2_at = |p0: &Vector3<f64>, sign: Sign, tau: f64| -> f64 {
        rotate_about(&(-frame.bang(sign).vec()), tau, p0).dot(&g)
    };

    let mut t = 0.0;
    let mut prev = phi2_at(&arc_start_p, u, 0.0);
    if prev == 0.0 {
        // Starting at a switching configuration; u0 is the post-switch control.
        scan.zeros.push(0.0);
    }
    while t < t_max {
        let t_next = (t + step).min(t_max);
        let cur = phi2_at(&arc_start_p, u, t_next - arc_start_t);

        if cur.abs() < 1e-10 {
            if quiet_run == 0 {
                quiet_start = t_next;
            }
            quiet_run += 1;
            if quiet_run == 10 {
                scan.singular_candidates.push((quiet_start, t_next));
            } else if quiet_run > 10 {
                if let Some(last) = scan.singular_candidates.last_mut() {
                    last.1 = t_next;
                }
            }
        } else {
            quiet_run = 0;
        }

        if prev != 0.0 && (prev * cur < 0.0 || cur == 0.0) {
            // Bisection on the closed-form phi_2 of the current arc.
            let mut lo = t - arc_start_t;
            let mut hi = t_next - arc_start_t;
            let f_lo = phi2_at(&arc_start_p, u, lo);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let f_mid = phi2_at(&arc_start_p, u, mid);
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            let zero_tau = 0.5 * (lo + hi);
            let zero_t = arc_start_t + zero_tau;
            if scan
                .zeros
                .last()
                .map(|&z| (zero_t - z).abs() > 1e-9)
                .unwrap_or(true)
            {
                scan.zeros.push(zero_t);
                // Switch: transport the covector to the zero and flip u.
                arc_start_p = rotate_about(&(-frame.bang(u).vec()), zero_tau, &arc_start_p);
                arc_start_t = zero_t;
                u = u.flip();
            }
        }
        prev = phi2_at(&arc_start_p, u, t_next - arc_start_t);
        t = t_next;
    }
    scan
}
