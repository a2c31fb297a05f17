//! The synthesis downstairs: interior bang duration `v(s)`, the structured
//! extremal families, switching curves, abnormal supports, snake regions,
//! the exact switching count and the conjugate-point test.
//!
//! Everything is built from exact rotations about the two bang axes, so
//! curve samples and arc events carry only rounding error. Two independent
//! routes exist for the key quantities and are cross-checked in tests:
//! `v(s)` in closed form against the root of the switching-time relation,
//! and the switching-count formula against a purely geometric count of
//! meridian crossings.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{rotate_about, Frame, Sign};
use crate::sphere::{
    arc_first_level_crossing, arc_level_crossings, bang_axis, bang_flow, meridian_point, p_point,
    ProjectivePoint, SpherePoint,
};
use crate::util::{par_map, snapped_floor};

const EQUATOR: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);
const MERIDIAN: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);

/// Interior bang duration `v(s) = pi + 2 arctan(sin s / (cos s + cot^2 a))`.
///
/// Defined for `s in [0, pi]`; takes values in `[pi, pi + 2 arcsin(tan^2 a)]`.
pub fn v_of_s(frame: &Frame, s: f64) -> f64 {
    std::f64::consts::PI + 2.0 * (s.sin() / (s.cos() + frame.alpha.cot_sq())).atan()
}

/// The maximum of `v`, attained at [`v_argmax`].
pub fn v_max(frame: &Frame) -> f64 {
    std::f64::consts::PI + 2.0 * frame.alpha.tan().powi(2).asin()
}

/// The unique interior maximizer `s* = arccos(-tan^2 a)`.
pub fn v_argmax(frame: &Frame) -> f64 {
    (-frame.alpha.tan().powi(2)).acos()
}

/// Interior duration as the root in `[pi, 2 pi)` of the switching relation
/// `-sin^2(a) cos(s - t/2) = cos^2(a) cos(t/2)`, by bisection.
///
/// Must equal [`v_of_s`] to 1e-9; kept as an independent route.
pub fn v_from_req(frame: &Frame, s: f64) -> Result<f64> {
    let sa2 = frame.alpha.sin_sq();
    let ca2 = frame.alpha.cos_sq();
    let g = |t: f64| -sa2 * (s - t / 2.0).cos() - ca2 * (t / 2.0).cos();
    let mut lo = std::f64::consts::PI;
    let mut hi = 2.0 * std::f64::consts::PI;
    let g_lo = g(lo);
    if g_lo.abs() < 1e-14 {
        return Ok(lo);
    }
    if g_lo > 0.0 || g(hi) < 0.0 {
        return Err(Error::NoSwitchingTimeRoot { s });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Switching-count constants for one cone angle.
///
/// `n0 = 2 [pi/(8a)]`, `ns = n0 - [n0 - pi/(4a)]` (the exact count),
/// `na = [pi/a]` (the index-theory bound), `k_tilde = 2 + [pi/(4a)]`.
/// Floors snap to integers within 1e-9 relative so that resonant angles
/// `a = pi/(4k)` evaluate exactly; within 1e-12 of a resonance the two
/// one-sided values are reported as well.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchCounts {
    pub n0: i64,
    pub ns: i64,
    pub na: i64,
    pub k_tilde: i64,
    /// `(ns just below, ns just above)` when alpha sits on a resonance.
    pub resonant_neighbors: Option<(i64, i64)>,
}

fn ns_raw(alpha: f64) -> (i64, i64) {
    let n0 = 2 * snapped_floor(std::f64::consts::PI / (8.0 * alpha));
    let x4 = std::f64::consts::PI / (4.0 * alpha);
    let x4 = {
        let r = x4.round();
        if (x4 - r).abs() < 1e-9 * x4.max(1.0) {
            r
        } else {
            x4
        }
    };
    let ns = n0 - snapped_floor(n0 as f64 - x4);
    (n0, ns)
}

pub fn switch_counts(frame: &Frame) -> SwitchCounts {
    let alpha = frame.alpha.rad();
    let (n0, ns) = ns_raw(alpha);
    let na = snapped_floor(std::f64::consts::PI / alpha);
    let k_tilde = 2 + snapped_floor(std::f64::consts::PI / (4.0 * alpha));
    // On a resonance the count jumps; report both one-sided values.
    let x4 = std::f64::consts::PI / (4.0 * alpha);
    let x8 = x4 / 2.0;
    let near = |x: f64| (x - x.round()).abs() < 4e-12 * x.max(1.0);
    let resonant_neighbors = if near(x4) || near(x8) {
        let below = ns_raw(alpha * (1.0 + 1e-9)).1; // larger alpha, smaller ratio
        let above = ns_raw(alpha * (1.0 - 1e-9)).1;
        Some((below.min(above), below.max(above)))
    } else {
        None
    };
    SwitchCounts {
        n0,
        ns,
        na,
        k_tilde,
        resonant_neighbors,
    }
}

/// Structured bang program downstairs: first arc `s in [0, pi]`, interior
/// arcs of duration `v(s)`, final arc `t in [0, v(s)]`, signs alternating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BangProgramS {
    pub first_sign: Sign,
    pub s: f64,
    /// Total number of bang arcs, `>= 1`.
    pub arc_count: usize,
    /// Duration of the last arc; ignored when `arc_count == 1`.
    pub final_t: f64,
}

impl BangProgramS {
    pub fn single(first_sign: Sign, s: f64) -> Self {
        BangProgramS {
            first_sign,
            s,
            arc_count: 1,
            final_t: 0.0,
        }
    }

    pub fn total_time(&self, frame: &Frame) -> f64 {
        if self.arc_count == 1 {
            self.s
        } else {
            self.s + (self.arc_count as f64 - 2.0) * v_of_s(frame, self.s) + self.final_t
        }
    }

    /// Number of switching events strictly inside the time interval.
    pub fn switch_count(&self) -> usize {
        if self.arc_count <= 1 {
            0
        } else if self.final_t > 1e-9 {
            self.arc_count - 1
        } else {
            self.arc_count - 2
        }
    }

    pub fn last_sign(&self) -> Sign {
        self.first_sign.after(self.arc_count - 1)
    }

    pub fn is_valid(&self, frame: &Frame) -> bool {
        self.arc_count >= 1
            && (0.0..=std::f64::consts::PI + 1e-12).contains(&self.s)
            && (self.arc_count == 1
                || (-1e-12..=v_of_s(frame, self.s) + 1e-9).contains(&self.final_t))
    }
}

/// Endpoint of the structured program applied to the north pole.
pub fn endpoint_s(frame: &Frame, prog: &BangProgramS) -> SpherePoint {
    let mut y = SpherePoint::north();
    let mut sign = prog.first_sign;
    if prog.arc_count == 1 {
        return bang_flow(frame, sign, prog.s, &y);
    }
    let v = v_of_s(frame, prog.s);
    y = bang_flow(frame, sign, prog.s, &y);
    sign = sign.flip();
    for _ in 0..prog.arc_count - 2 {
        y = bang_flow(frame, sign, v, &y);
        sign = sign.flip();
    }
    bang_flow(frame, sign, prog.final_t, &y)
}

/// Switch points of the program (endpoints of arcs 1..arc_count-1).
pub fn switch_points(frame: &Frame, prog: &BangProgramS) -> Vec<SpherePoint> {
    let mut out = Vec::new();
    if prog.arc_count < 2 {
        return out;
    }
    let v = v_of_s(frame, prog.s);
    let mut y = bang_flow(frame, prog.first_sign, prog.s, &SpherePoint::north());
    out.push(y);
    let mut sign = prog.first_sign.flip();
    for _ in 0..prog.arc_count - 2 {
        y = bang_flow(frame, sign, v, &y);
        out.push(y);
        sign = sign.flip();
    }
    out
}

/// Uniform `s`-grid with 4x refinement within 0.05 of the endpoints,
/// where switching curves meet the abnormal supports tangentially.
pub fn s_grid(n_base: usize) -> Vec<f64> {
    let n = n_base.max(8);
    let h = std::f64::consts::PI / n as f64;
    let mut out = Vec::with_capacity(n + 8);
    for i in 0..=n {
        let s = (i as f64 * h).min(std::f64::consts::PI);
        out.push(s);
        let near_edge = s < 0.05 || s + h > std::f64::consts::PI - 0.05;
        if near_edge && i < n {
            for j in 1..4 {
                out.push(s + h * j as f64 / 4.0);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

/// Serializable sphere point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePointData(pub [f64; 3]);

impl From<SpherePoint> for SpherePointData {
    fn from(p: SpherePoint) -> Self {
        let v = p.vec();
        SpherePointData([v.x, v.y, v.z])
    }
}

impl SpherePointData {
    pub fn point(&self) -> SpherePoint {
        SpherePoint::from_components(self.0[0], self.0[1], self.0[2])
    }
}

/// One switching curve `C_k^side` sampled over the `s`-grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwitchingCurveS {
    pub k: usize,
    pub side: Sign,
    /// Pairs `(s, point)`.
    pub samples: Vec<(f64, SpherePointData)>,
}

impl SwitchingCurveS {
    pub fn points(&self) -> impl Iterator<Item = SpherePoint> + '_ {
        self.samples.iter().map(|(_, p)| p.point())
    }
}

/// Builds `C_k^side` by the pointwise recursion
/// `C_1^e(s) = exp(X_S^e v(s)) exp(X_S^{-e} s) y0`,
/// `C_{k+1}^e(s) = exp(X_S^e v(s)) C_k^{-e}(s)`.
pub fn switching_curve(frame: &Frame, k: usize, side: Sign, grid: &[f64]) -> SwitchingCurveS {
    assert!(k >= 1, "switching curves are indexed from 1");
    let samples = grid
        .iter()
        .map(|&s| (s, SpherePointData::from(curve_point(frame, k, side, s))))
        .collect();
    SwitchingCurveS { k, side, samples }
}

/// Single sample `C_k^side(s)`.
pub fn curve_point(frame: &Frame, k: usize, side: Sign, s: f64) -> SpherePoint {
    let v = v_of_s(frame, s);
    // Unrolling the recursion: first a bang of length s with the sign
    // opposite to level 1, then k interior arcs of length v(s), the last
    // of which carries the requested side.
    let first_sign = side.after(k);
    let mut y = bang_flow(frame, first_sign, s, &SpherePoint::north());
    let mut sign = first_sign.flip();
    for _ in 0..k {
        y = bang_flow(frame, sign, v, &y);
        sign = sign.flip();
    }
    y
}

/// Abnormal extremal support up to its first equator contact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbnormalSupport {
    pub side: Sign,
    /// Sampled support, ending exactly at the equator contact.
    pub polyline: Vec<SpherePointData>,
    /// Meridian points visited at the switch times (starting at y0).
    pub meridian_hits: Vec<SpherePointData>,
    /// Time of the first equator contact.
    pub t_eq: f64,
    pub y_eq: SpherePointData,
}

/// Follows the pi-bang abnormal extremal `A^side` to the equator.
pub fn abnormal_support(frame: &Frame, side: Sign, samples_per_arc: usize) -> AbnormalSupport {
    let mut polyline = Vec::new();
    let mut meridian_hits = vec![SpherePointData::from(SpherePoint::north())];
    let mut y = SpherePoint::north();
    let mut sign = side;
    let mut elapsed = 0.0;
    let max_arcs = (snapped_floor(std::f64::consts::PI / frame.alpha.rad()) + 4) as usize;
    for _ in 0..max_arcs {
        let axis = bang_axis(frame, sign);
        let contact = arc_first_level_crossing(
            &axis,
            &y.vec(),
            &EQUATOR,
            0.0,
            std::f64::consts::PI + 1e-12,
        );
        let arc_end = contact.unwrap_or(std::f64::consts::PI);
        for i in 1..=samples_per_arc {
            let t = arc_end * i as f64 / samples_per_arc as f64;
            polyline.push(SpherePointData::from(bang_flow(frame, sign, t, &y)));
        }
        y = bang_flow(frame, sign, arc_end, &y);
        elapsed += arc_end;
        if contact.is_some() {
            return AbnormalSupport {
                side,
                polyline,
                meridian_hits,
                t_eq: elapsed,
                y_eq: SpherePointData::from(y),
            };
        }
        meridian_hits.push(SpherePointData::from(y));
        sign = sign.flip();
    }
    AbnormalSupport {
        side,
        polyline,
        meridian_hits,
        t_eq: elapsed,
        y_eq: SpherePointData::from(y),
    }
}

/// One snake-region cell `D_k^side` with its boundary loop (clipped to the
/// closed upper hemisphere).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnakeRegion {
    /// Which snake (`S^+` or `S^-`) the cell belongs to.
    pub snake: Sign,
    /// Hemisphere side of the cell (`D^side_k` lies in `NH^side`).
    pub side: Sign,
    pub k: usize,
    pub boundary: Vec<SpherePointData>,
}

/// South-pole case label of the conjectured synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    A,
    B,
    C,
    Boundary,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseLabel::A => write!(f, "A"),
            CaseLabel::B => write!(f, "B"),
            CaseLabel::C => write!(f, "C"),
            CaseLabel::Boundary => write!(f, "boundary"),
        }
    }
}

/// Schema identifier written into every chart document and figure.
pub const CHART_SCHEMA: &str = "so3tos-chart-v1";

/// The full downstairs synthesis for one cone angle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisChart {
    /// Schema version of the serialized form.
    pub schema: String,
    pub alpha: f64,
    pub counts: SwitchCounts,
    /// Last time the single-bang trajectories are optimal (always pi).
    pub t_op: f64,
    pub t_eq: f64,
    pub y_eq_plus: SpherePointData,
    pub y_eq_minus: SpherePointData,
    pub curves: Vec<SwitchingCurveS>,
    pub abnormal_plus: AbnormalSupport,
    pub abnormal_minus: AbnormalSupport,
    pub snakes: Vec<SnakeRegion>,
    /// Meridian-crossing count measured on the constructed family;
    /// must equal `counts.ns`.
    pub construction_ns: i64,
    /// South-pole case; `None` until classified by the wavefront module.
    pub case_label: Option<CaseLabel>,
}

/// Chart construction options.
#[derive(Clone, Copy, Debug)]
pub struct ChartOptions {
    /// Base resolution of the `s`-grid.
    pub grid: usize,
    /// Samples per abnormal arc and per boundary piece.
    pub arc_samples: usize,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            grid: 512,
            arc_samples: 128,
        }
    }
}

/// Builds the chart: switching curves up to the first equator crossing per
/// side, abnormal supports, snake regions and the constants, and
/// cross-checks the switching-count formula against the geometric count.
pub fn build_chart(frame: &Frame, opts: &ChartOptions) -> SynthesisChart {
    let counts = switch_counts(frame);
    let grid = s_grid(opts.grid);

    // Curves C_k for every k with P_k not strictly below the equator; the
    // last of these is the first curve reaching it.
    let k_stop = snapped_floor(std::f64::consts::PI / (4.0 * frame.alpha.rad())).max(1) as usize;
    let specs: Vec<(usize, Sign)> = (1..=k_stop)
        .flat_map(|k| [(k, Sign::Plus), (k, Sign::Minus)])
        .collect();
    let curves = par_map(&specs, |&(k, side)| switching_curve(frame, k, side, &grid));

    let abnormal_plus = abnormal_support(frame, Sign::Plus, opts.arc_samples);
    let abnormal_minus = abnormal_support(frame, Sign::Minus, opts.arc_samples);
    let t_eq = abnormal_plus.t_eq;

    let snakes = snake_regions(frame, opts.arc_samples);
    let construction_ns = meridian_crossing_count(frame, opts.grid);

    SynthesisChart {
        schema: CHART_SCHEMA.to_string(),
        alpha: frame.alpha.rad(),
        counts,
        t_op: std::f64::consts::PI,
        t_eq,
        y_eq_plus: abnormal_plus.y_eq,
        y_eq_minus: abnormal_minus.y_eq,
        curves,
        abnormal_plus,
        abnormal_minus,
        snakes,
        construction_ns,
        case_label: None,
    }
}

/// Assembles the cells `D_k^side` from the abnormal half-circles and the
/// meridian segments, clipping at the equator.
fn snake_regions(frame: &Frame, arc_samples: usize) -> Vec<SnakeRegion> {
    let alpha = frame.alpha.rad();
    let mut out = Vec::new();
    for side in [Sign::Plus, Sign::Minus] {
        let eps = side.value();
        // D^side_0: gamma_op^side plus the meridian segment [P_0, P_1^side].
        let mut loop0 = Vec::new();
        for i in 0..=arc_samples {
            let t = std::f64::consts::PI * i as f64 / arc_samples as f64;
            loop0.push(bang_flow(frame, side, t, &SpherePoint::north()));
        }
        for i in 1..arc_samples {
            let xi = eps * 2.0 * alpha * (1.0 - i as f64 / arc_samples as f64);
            loop0.push(meridian_point(xi));
        }
        out.push(SnakeRegion {
            snake: side,
            side,
            k: 0,
            boundary: clip_upper(&loop0),
        });

        // D^side_k between L^side_{k-1} and L^side_k.
        for k in 1..=frame_k_cap(frame) {
            let inner = l_arc(frame, side, k - 1, arc_samples);
            let outer = l_arc(frame, side, k, arc_samples);
            if inner.iter().all(|p| p.vec().z <= 1e-12) {
                break;
            }
            let mut boundary = Vec::new();
            boundary.extend(inner.iter().copied());
            // Side segment [P^side_k, P^side_{k+1}].
            boundary.extend(meridian_segment(
                eps * 2.0 * k as f64 * alpha,
                eps * 2.0 * (k + 1) as f64 * alpha,
                arc_samples / 4,
            ));
            boundary.extend(outer.iter().rev().copied());
            // Side segment [P^{-side}_k, P^{-side}_{k-1}].
            boundary.extend(meridian_segment(
                -eps * 2.0 * k as f64 * alpha,
                -eps * 2.0 * (k - 1) as f64 * alpha,
                arc_samples / 4,
            ));
            // The snake alternates hemisphere side with k.
            let snake = if k % 2 == 0 { side } else { side.flip() };
            out.push(SnakeRegion {
                snake,
                side,
                k,
                boundary: clip_upper(&boundary),
            });
        }
    }
    out
}

fn frame_k_cap(frame: &Frame) -> usize {
    (snapped_floor(std::f64::consts::PI / (4.0 * frame.alpha.rad())) + 3) as usize
}

/// The half-circle `L^side_k` from `P^{-side}_k` to `P^side_{k+1}`.
fn l_arc(frame: &Frame, side: Sign, k: usize, samples: usize) -> Vec<SpherePoint> {
    let start = p_point(frame, k as i64, side.flip());
    (0..=samples)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / samples as f64;
            bang_flow(frame, side, t, &start)
        })
        .collect()
}

fn meridian_segment(xi_from: f64, xi_to: f64, samples: usize) -> Vec<SpherePoint> {
    let n = samples.max(2);
    (1..n)
        .map(|i| meridian_point(xi_from + (xi_to - xi_from) * i as f64 / n as f64))
        .collect()
}

/// Keeps the part of a loop with `y3 >= 0`, inserting equator points where
/// segments cross it.
fn clip_upper(points: &[SpherePoint]) -> Vec<SpherePointData> {
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0].vec(), w[1].vec());
        if a.z >= -1e-12 {
            out.push(SpherePointData::from(w[0]));
        }
        if (a.z > 0.0) != (b.z > 0.0) && (a.z - b.z).abs() > 1e-15 {
            let t = a.z / (a.z - b.z);
            let cross = a + (b - a) * t;
            out.push(SpherePointData::from(SpherePoint::new(cross)));
        }
    }
    if let Some(last) = points.last() {
        if last.vec().z >= -1e-12 {
            out.push(SpherePointData::from(*last));
        }
    }
    out
}

/// Maximum number of crossings of the open top half-meridian by a family
/// trajectory strictly before its first equator contact.
///
/// This is the geometric route to the switching count: the formula and
/// this count must agree exactly.
pub fn meridian_crossing_count(frame: &Frame, grid: usize) -> i64 {
    let n = grid.max(64);
    let ss: Vec<f64> = (1..n)
        .map(|i| std::f64::consts::PI * i as f64 / n as f64)
        .collect();
    let per_s = par_map(&ss, |&s| {
        let mut best = 0i64;
        for first in [Sign::Plus, Sign::Minus] {
            best = best.max(crossing_count_single(frame, first, s));
        }
        best
    });
    per_s.into_iter().max().unwrap_or(0)
}

fn crossing_count_single(frame: &Frame, first: Sign, s: f64) -> i64 {
    let v = v_of_s(frame, s);
    let max_arcs = frame_k_cap(frame) + 4;
    let mut y = SpherePoint::north();
    let mut sign = first;
    let mut count = 0i64;
    for arc in 0..max_arcs {
        let dur = if arc == 0 { s } else { v };
        let axis = bang_axis(frame, sign);
        let equator_exit = arc_first_level_crossing(&axis, &y.vec(), &EQUATOR, 0.0, dur);
        let horizon = equator_exit.unwrap_or(dur);
        for t in arc_level_crossings(&axis, &y.vec(), &MERIDIAN, 0.0, horizon) {
            let p = rotate_about(&axis, t, &y.vec());
            // Count only crossings strictly inside the open hemisphere and
            // strictly before the equator contact.
            if p.z > 1e-9 && equator_exit.map(|e| t < e - 1e-12).unwrap_or(true) {
                count += 1;
            }
        }
        if equator_exit.is_some() {
            return count;
        }
        y = bang_flow(frame, sign, dur, &y);
        sign = sign.flip();
    }
    count
}

/// A structured program reaching a target, with its total time.
#[derive(Clone, Copy, Debug)]
pub struct ReachCandidate {
    pub program: BangProgramS,
    pub time: f64,
}

/// All structured-family programs reaching `target` exactly (to rounding)
/// within `horizon`, sorted by total time.
///
/// For each first sign and arc count the admissible first-arc lengths
/// solve a smooth scalar equation (the target must lie on the final-arc
/// circle); roots are bracketed on a grid and bisected, and the final-arc
/// duration then follows in closed form.
pub fn reach_candidates(
    frame: &Frame,
    target: &SpherePoint,
    horizon: f64,
    grid: usize,
) -> Vec<ReachCandidate> {
    let mut out = Vec::new();
    let y = target.vec();
    let north = SpherePoint::north().vec();

    // Single-arc candidates: the target lies on the first-arc circle.
    for sign in [Sign::Plus, Sign::Minus] {
        let axis = bang_axis(frame, sign);
        if (axis.dot(&y) - axis.dot(&north)).abs() < 1e-9 {
            let t = rotation_angle_about(&axis, &north, &y);
            if t <= std::f64::consts::PI + 1e-9 && t <= horizon {
                out.push(ReachCandidate {
                    program: BangProgramS::single(sign, t),
                    time: t,
                });
            }
        }
    }

    let max_arcs = ((horizon / std::f64::consts::PI).ceil() as usize + 2).max(2);
    let n = grid.max(64);
    let ss: Vec<f64> = (0..=n)
        .map(|i| std::f64::consts::PI * i as f64 / n as f64)
        .collect();

    for first in [Sign::Plus, Sign::Minus] {
        // Switch points p_j(s) for all grid s, built incrementally in j.
        let vs: Vec<f64> = ss.iter().map(|&s| v_of_s(frame, s)).collect();
        let first_axis = bang_axis(frame, first);
        let mut chain: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(max_arcs);
        chain.push(
            ss.iter()
                .map(|&s| rotate_about(&first_axis, s, &north))
                .collect(),
        );
        for j in 1..max_arcs {
            let axis = bang_axis(frame, first.after(j));
            let next: Vec<Vector3<f64>> = chain[j - 1]
                .iter()
                .zip(&vs)
                .map(|(p, &v)| rotate_about(&axis, v, p))
                .collect();
            chain.push(next);
        }

        for m in 2..=max_arcs {
            if (m as f64 - 2.0) * std::f64::consts::PI > horizon + 1e-9 {
                break;
            }
            let last_sign = first.after(m - 1);
            let last_axis = bang_axis(frame, last_sign);
            let c_target = last_axis.dot(&y);
            let pts = &chain[m - 2];
            let g = |i: usize| last_axis.dot(&pts[i]) - c_target;

            let mut push_root = |s_root: f64| {
                let p = switch_chain_end(frame, first, s_root, m - 1);
                let t = rotation_angle_about(&last_axis, &p, &y);
                let v = v_of_s(frame, s_root);
                // A vanishing final arc duplicates the (m-1)-arc program.
                if t < 1e-9 {
                    return;
                }
                if t <= v + 1e-7 {
                    let time = s_root + (m as f64 - 2.0) * v + t;
                    if time <= horizon + 1e-9 {
                        out.push(ReachCandidate {
                            program: BangProgramS {
                                first_sign: first,
                                s: s_root,
                                arc_count: m,
                                final_t: t,
                            },
                            time,
                        });
                    }
                }
            };

            if g(0).abs() < 1e-11 {
                push_root(0.0);
            }
            if g(n).abs() < 1e-11 {
                push_root(std::f64::consts::PI);
            }
            for i in 0..n {
                let (ga, gb) = (g(i), g(i + 1));
                if ga == 0.0 && i > 0 {
                    push_root(ss[i]);
                } else if ga * gb < 0.0 {
                    // Bisect on the exact chain.
                    let f =
                        |s: f64| last_axis.dot(&switch_chain_end(frame, first, s, m - 1)) - c_target;
                    let (mut lo, mut hi) = (ss[i], ss[i + 1]);
                    let f_lo = f(lo);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let fm = f(mid);
                        if fm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if fm.signum() == f_lo.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo < 1e-13 {
                            break;
                        }
                    }
                    push_root(0.5 * (lo + hi));
                }
            }
        }
    }

    out.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    out.dedup_by(|a, b| {
        a.program.first_sign == b.program.first_sign
            && a.program.arc_count == b.program.arc_count
            && (a.program.s - b.program.s).abs() < 1e-7
    });
    out
}

/// Endpoint of the first `arcs` arcs (durations `s, v, v, ...`).
fn switch_chain_end(frame: &Frame, first: Sign, s: f64, arcs: usize) -> Vector3<f64> {
    let v = v_of_s(frame, s);
    let mut y = rotate_about(&bang_axis(frame, first), s, &SpherePoint::north().vec());
    for j in 1..arcs {
        y = rotate_about(&bang_axis(frame, first.after(j)), v, &y);
    }
    y
}

/// Oriented rotation angle in `[0, 2 pi)` carrying `p` to `q` about `axis`
/// (both assumed on the same circle).
fn rotation_angle_about(axis: &Vector3<f64>, p: &Vector3<f64>, q: &Vector3<f64>) -> f64 {
    let sin = axis.dot(&p.cross(q));
    let cos = p.dot(q) - axis.dot(p) * axis.dot(q);
    let angle = sin.atan2(cos);
    if angle < -1e-10 {
        angle + 2.0 * std::f64::consts::PI
    } else {
        angle.max(0.0)
    }
}

/// Chart-predicted switching count of the optimal trajectory to `y`.
pub fn count_switchings_to(
    frame: &Frame,
    y: &ProjectivePoint,
    chart: &SynthesisChart,
) -> Result<usize> {
    let rep = y.rep();
    if rep.geodesic_distance(&SpherePoint::north()) < 1e-12 {
        return Ok(0);
    }
    let horizon = chart.t_eq + v_max(frame) + 1e-6;
    let candidates = reach_candidates(frame, rep, horizon, 512);
    let best = candidates.first().ok_or_else(|| Error::OutsideChart {
        reason: format!("no structured trajectory reaches {:?}", rep.vec()),
    })?;
    Ok(best.program.switch_count())
}

/// How a sample of a switching curve failed the local-optimality test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugateKind {
    /// Tangent falls in the closed same-sign cone of the two bang fields.
    Conjugate,
    /// Tangent norm below 1e-8; no direction information.
    Degenerate,
    /// Fields nearly parallel (condition number above 1e8).
    Indeterminate,
}

#[derive(Clone, Copy, Debug)]
pub struct ConjugateFlag {
    pub s: f64,
    pub kind: ConjugateKind,
}

/// Conjugate-point test along a sampled switching curve.
///
/// The numeric tangent (central differences) is decomposed on the two bang
/// fields in the tangent plane; a sample is conjugate when both
/// coefficients share a sign within 1e-6 after normalization. The boundary
/// samples `s = 0, pi` are excluded: there the curve meets the meridian,
/// where the two fields are parallel.
pub fn local_optimality(frame: &Frame, curve: &SwitchingCurveS) -> Vec<ConjugateFlag> {
    let mut flags = Vec::new();
    let samples = &curve.samples;
    for i in 1..samples.len().saturating_sub(1) {
        let (s_prev, p_prev) = (samples[i - 1].0, samples[i - 1].1.point());
        let (s_next, p_next) = (samples[i + 1].0, samples[i + 1].1.point());
        let s = samples[i].0;
        let p = samples[i].1.point();
        let ds = s_next - s_prev;
        if ds <= 0.0 {
            continue;
        }
        let tangent = (p_next.vec() - p_prev.vec()) / ds;
        if tangent.norm() < 1e-8 {
            flags.push(ConjugateFlag {
                s,
                kind: ConjugateKind::Degenerate,
            });
            continue;
        }
        let y1 = bang_axis(frame, Sign::Plus).cross(&p.vec());
        let y2 = bang_axis(frame, Sign::Minus).cross(&p.vec());
        // Orthonormal tangent basis at p.
        let e1 = y1 / y1.norm();
        let e2n = p.vec().cross(&e1);
        let m = [[y1.dot(&e1), y2.dot(&e1)], [y1.dot(&e2n), y2.dot(&e2n)]];
        let rhs = [tangent.dot(&e1), tangent.dot(&e2n)];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let norm_inf = m
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        if det.abs() < norm_inf * norm_inf / 1e8 {
            flags.push(ConjugateFlag {
                s,
                kind: ConjugateKind::Indeterminate,
            });
            continue;
        }
        let a = (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det;
        let b = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        let scale = a.hypot(b);
        if scale > 0.0 && (a / scale) * (b / scale) >= -1e-6 {
            flags.push(ConjugateFlag {
                s,
                kind: ConjugateKind::Conjugate,
            });
        }
        let _ = s_prev;
    }
    flags
}

/// Lune-containment check: distance of a curve sample from the admissible
/// half-cap of `C_k^side` (positive means outside, in radians).
pub fn lune_violation(frame: &Frame, k: usize, side: Sign, p: &SpherePoint) -> f64 {
    let alpha = frame.alpha.rad();
    let center = meridian_point(side.value() * (2.0 * k as f64 + 1.0) * alpha);
    let cap = p.geodesic_distance(&center) - alpha;
    let hemi = side.value() * p.vec().y; // must be <= 0 on Clos(NH^side)
    cap.max(hemi)
}

/// `r(alpha) = N_S (2/pi) arcsin(tan^2 alpha)`, the slack in the
/// upper-bound estimate.
pub fn switching_slack(frame: &Frame) -> f64 {
    let ns = switch_counts(frame).ns as f64;
    ns * (2.0 / std::f64::consts::PI) * frame.alpha.tan().powi(2).asin()
}
