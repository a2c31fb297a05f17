//! Minimum-time front propagation over the extremal families on the whole
//! sphere, minimum-time maps on a Fibonacci-cell partition, overlap
//! detection, and the south-pole case classification.
//!
//! The front is generated purely from the structured families (no PDE
//! solve). Two resolutions of truth coexist: the binned cell map, cheap
//! and global, and an exact pointwise solver that roots the family
//! equations for a single target; the classifier uses the exact solver.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::lattice::FibonacciLattice;
use crate::lie::{Frame, Sign};
use crate::sphere::{bang_axis, bang_flow, meridian_point, SpherePoint};
use crate::synthesis::{
    endpoint_s, reach_candidates, v_of_s, BangProgramS, CaseLabel, ReachCandidate,
    SpherePointData,
};
use crate::util::{par_map, snapped_floor};

/// `[pi/(2 alpha)]`: the arc-count index governing the south-pole cases
/// and the conjectured coverage horizon `(index + 1) pi`.
pub fn southern_index(frame: &Frame) -> i64 {
    snapped_floor(std::f64::consts::PI / (2.0 * frame.alpha.rad()))
}

/// The remainder `r = pi - 2 alpha [pi/(2 alpha)] in [0, 2 alpha)`.
pub fn southern_remainder(frame: &Frame) -> f64 {
    std::f64::consts::PI - 2.0 * frame.alpha.rad() * southern_index(frame) as f64
}

/// Conjectured coverage horizon `(N + 1) pi`.
pub fn coverage_horizon(frame: &Frame) -> f64 {
    (southern_index(frame) + 1) as f64 * std::f64::consts::PI
}

/// One point of the extremal front at a fixed time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FrontSample {
    pub time: f64,
    pub point: SpherePointData,
    pub generator: BangProgramS,
}

/// Evaluates the extremal front at time `t`: every family member whose
/// total duration is exactly `t` contributes its endpoint.
pub fn propagate_front(frame: &Frame, t: f64, resolution: usize) -> Vec<FrontSample> {
    let n = resolution.max(16);
    let mut out = Vec::new();
    let pi = std::f64::consts::PI;
    for sign in [Sign::Plus, Sign::Minus] {
        // Single bang of duration exactly t.
        if t <= pi {
            let prog = BangProgramS::single(sign, t);
            out.push(FrontSample {
                time: t,
                point: SpherePointData::from(endpoint_s(frame, &prog)),
                generator: prog,
            });
        }
        let max_arcs = (t / pi).ceil() as usize + 2;
        for m in 2..=max_arcs {
            for i in 0..=n {
                let s = pi * i as f64 / n as f64;
                let v = v_of_s(frame, s);
                let final_t = t - s - (m as f64 - 2.0) * v;
                if !(0.0..=v).contains(&final_t) {
                    continue;
                }
                let prog = BangProgramS {
                    first_sign: sign,
                    s,
                    arc_count: m,
                    final_t,
                };
                out.push(FrontSample {
                    time: t,
                    point: SpherePointData::from(endpoint_s(frame, &prog)),
                    generator: prog,
                });
            }
        }
    }
    out
}

/// Serializes front samples as CSV with columns `T,y1,y2,y3,sign,s,m,t`.
pub fn front_to_csv(samples: &[FrontSample]) -> String {
    let mut out = String::from("T,y1,y2,y3,sign,s,m,t\n");
    for f in samples {
        let p = f.point.0;
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{},{:.12e}\n",
            f.time,
            p[0],
            p[1],
            p[2],
            f.generator.first_sign.value() as i32,
            f.generator.s,
            f.generator.arc_count,
            f.generator.final_t
        ));
    }
    out
}

/// A candidate generator for a cell: the program and its arrival time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CellCandidate {
    pub time: f64,
    pub program: BangProgramS,
}

impl CellCandidate {
    fn rank(&self) -> (f64, usize, f64, i8) {
        (
            self.time,
            self.program.arc_count,
            self.program.s,
            -self.program.first_sign.value() as i8,
        )
    }

    fn before(&self, other: &CellCandidate) -> bool {
        self.rank().partial_cmp(&other.rank()).unwrap() == std::cmp::Ordering::Less
    }

    /// Unit arrival direction at `p` (the final-arc field there).
    pub fn arrival_direction(&self, frame: &Frame, p: &Vector3<f64>) -> Vector3<f64> {
        let v = bang_axis(frame, self.program.last_sign()).cross(p);
        let n = v.norm();
        if n < 1e-12 {
            Vector3::zeros()
        } else {
            v / n
        }
    }

    /// Whether the two candidates are distinct branches meeting at `p`.
    ///
    /// This is the overlap criterion: the histories must differ (different
    /// first sign, or first-arc lengths apart by more than the cell scale)
    /// and the arrival velocities must be transversal. Samples of one
    /// trajectory across its own switching point share the history;
    /// neighbors of a smooth sheet share the direction; neither witnesses
    /// an overlap.
    pub fn differs_from(&self, other: &CellCandidate, frame: &Frame, p: &Vector3<f64>) -> bool {
        let same_history = self.program.first_sign == other.program.first_sign
            && (self.program.s - other.program.s).abs() <= SAME_BRANCH_S_TOL;
        if same_history {
            return false;
        }
        let d1 = self.arrival_direction(frame, p);
        let d2 = other.arrival_direction(frame, p);
        d1.dot(&d2) < ARRIVAL_ANGLE_COS
    }
}

/// Arrivals within ~17 degrees of each other count as the same branch.
const ARRIVAL_ANGLE_COS: f64 = 0.955;

/// First-arc lengths this close (same first sign) share their history.
const SAME_BRANCH_S_TOL: f64 = 0.25;

/// Minimum-time cell: the three best candidates (deterministic total
/// order), from which best and structurally different runner-up derive.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct MinTimeCell {
    pub candidates: [Option<CellCandidate>; 3],
}

impl MinTimeCell {
    fn insert(&mut self, frame: &Frame, p: &Vector3<f64>, cand: CellCandidate) {
        // Keep the three smallest (by the deterministic rank), at most one
        // candidate per arrival branch.
        for slot in self.candidates.iter_mut() {
            match slot {
                None => {
                    *slot = Some(cand);
                    return;
                }
                Some(existing) => {
                    if !existing.differs_from(&cand, frame, p) {
                        if cand.before(existing) {
                            *existing = cand;
                            self.resort();
                        }
                        return;
                    }
                    if cand.before(existing) {
                        let evicted = *existing;
                        *existing = cand;
                        self.insert(frame, p, evicted);
                        return;
                    }
                }
            }
        }
    }

    fn resort(&mut self) {
        let mut list: Vec<CellCandidate> = self.candidates.iter().flatten().copied().collect();
        list.sort_by(|a, b| a.rank().partial_cmp(&b.rank()).unwrap());
        let mut out = [None; 3];
        for (i, c) in list.into_iter().take(3).enumerate() {
            out[i] = Some(c);
        }
        self.candidates = out;
    }

    fn merge(&mut self, frame: &Frame, p: &Vector3<f64>, other: &MinTimeCell) {
        for cand in other.candidates.iter().flatten() {
            self.insert(frame, p, *cand);
        }
    }

    pub fn best(&self) -> Option<&CellCandidate> {
        self.candidates[0].as_ref()
    }

    /// Best candidate arriving from a different direction than the best.
    pub fn runner_up(&self, frame: &Frame, p: &Vector3<f64>) -> Option<&CellCandidate> {
        let best = self.best()?;
        self.candidates[1..]
            .iter()
            .flatten()
            .find(|c| c.differs_from(best, frame, p))
    }
}

/// Minimum-time map over a Fibonacci-cell partition of the sphere.
pub struct MinTimeMap {
    pub frame: Frame,
    pub lattice: FibonacciLattice,
    pub cells: Vec<MinTimeCell>,
    pub horizon: f64,
}

/// Map construction options.
#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    pub cells: usize,
    /// First-arc grid resolution.
    pub s_grid: usize,
    /// Samples along each final arc.
    pub t_steps: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            cells: 10_000,
            s_grid: 512,
            t_steps: 96,
        }
    }
}

/// Sweeps the whole family up to `horizon` and bins endpoints into cells,
/// keeping per cell the deterministic three best generators.
pub fn min_time_map(frame: &Frame, horizon: f64, opts: &MapOptions) -> MinTimeMap {
    let lattice = FibonacciLattice::new(opts.cells);
    let pi = std::f64::consts::PI;
    let n_s = opts.s_grid.max(32);
    let ss: Vec<f64> = (0..=n_s).map(|i| pi * i as f64 / n_s as f64).collect();

    let chunks: Vec<(Sign, Vec<f64>)> = [Sign::Plus, Sign::Minus]
        .into_iter()
        .flat_map(|sign| {
            ss.chunks(32)
                .map(move |c| (sign, c.to_vec()))
                .collect::<Vec<_>>()
        })
        .collect();

    let partials = par_map(&chunks, |(sign, chunk)| {
        let mut cells = vec![MinTimeCell::default(); lattice.len()];
        for &s in chunk {
            accumulate_family(frame, *sign, s, horizon, opts.t_steps, &lattice, &mut cells);
        }
        cells
    });

    let mut cells = vec![MinTimeCell::default(); lattice.len()];
    for partial in &partials {
        for (i, (acc, p)) in cells.iter_mut().zip(partial).enumerate() {
            acc.merge(frame, &lattice.points()[i], p);
        }
    }
    MinTimeMap {
        frame: *frame,
        lattice,
        cells,
        horizon,
    }
}

fn accumulate_family(
    frame: &Frame,
    sign: Sign,
    s: f64,
    horizon: f64,
    t_steps: usize,
    lattice: &FibonacciLattice,
    cells: &mut [MinTimeCell],
) {
    let pi = std::f64::consts::PI;
    let v = v_of_s(frame, s);
    let max_arcs = ((horizon / pi).ceil() as usize + 2).max(2);

    // Walk the switch points; sample each arc with an incremental rotation.
    let mut base_time = s;
    let mut y = bang_flow(frame, sign, s, &SpherePoint::north());
    // The first arc itself (m = 1 programs, final time = s grid value).
    if s <= pi {
        let idx = lattice.nearest(&y.vec());
        cells[idx].insert(
            frame,
            &lattice.points()[idx],
            CellCandidate {
                time: s,
                program: BangProgramS::single(sign, s),
            },
        );
    }
    if s == 0.0 {
        // A vanishing first arc re-parametrizes the opposite family.
        return;
    }
    for m in 2..=max_arcs {
        let arc_sign = sign.after(m - 1);
        let t_cap = v.min(horizon - base_time);
        if t_cap < 0.0 {
            break;
        }
        let steps = t_steps.max(8);
        let dt = t_cap / steps as f64;
        let axis = bang_axis(frame, arc_sign);
        let mut p = y.vec();
        for i in 1..=steps {
            p = crate::lie::rotate_about(&axis, dt, &p);
            let t = dt * i as f64;
            let idx = lattice.nearest(&p);
            cells[idx].insert(
                frame,
                &lattice.points()[idx],
                CellCandidate {
                    time: base_time + t,
                    program: BangProgramS {
                        first_sign: sign,
                        s,
                        arc_count: m,
                        final_t: t,
                    },
                },
            );
        }
        // Advance to the next switch point.
        y = bang_flow(frame, arc_sign, v, &y);
        base_time += v;
        if base_time > horizon {
            break;
        }
    }
}

/// Fraction of cells holding at least one generator.
pub fn coverage(map: &MinTimeMap) -> f64 {
    let filled = map.cells.iter().filter(|c| c.best().is_some()).count();
    filled as f64 / map.cells.len() as f64
}

/// Largest switch count among the best generators of all cells.
pub fn max_best_switchings(map: &MinTimeMap) -> usize {
    map.cells
        .iter()
        .filter_map(|c| c.best())
        .map(|c| c.program.switch_count())
        .max()
        .unwrap_or(0)
}

/// Points reached at near-equal minimal time by structurally different
/// generators, chained into polylines by cell adjacency.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub points: Vec<SpherePointData>,
    pub times: Vec<f64>,
}

/// Finds overlap cells (runner-up within `tol` of best, default twice the
/// cell diameter) and chains them greedily by nearest neighbor.
pub fn detect_overlaps(map: &MinTimeMap, tol: Option<f64>) -> Vec<OverlapCurve> {
    let tol = tol.unwrap_or(2.0 * map.lattice.cell_diameter());
    let mut marked: Vec<usize> = Vec::new();
    for (i, cell) in map.cells.iter().enumerate() {
        let p = map.lattice.points()[i];
        if let (Some(best), Some(runner)) = (cell.best(), cell.runner_up(&map.frame, &p)) {
            // The degenerate zero-length arrivals at the origin are not ties.
            if runner.time - best.time < tol && best.time > tol {
                marked.push(i);
            }
        }
    }
    chain_polylines(map, &marked)
}

fn chain_polylines(map: &MinTimeMap, marked: &[usize]) -> Vec<OverlapCurve> {
    let link = 2.5 * map.lattice.cell_diameter();
    let mut unused: Vec<usize> = marked.to_vec();
    let mut curves = Vec::new();
    while let Some(seed) = unused.pop() {
        let mut chain = vec![seed];
        // Grow from both ends.
        loop {
            let tail = *chain.last().unwrap();
            let tail_p = map.lattice.points()[tail];
            let next = unused
                .iter()
                .enumerate()
                .map(|(j, &i)| (j, map.lattice.points()[i].dot(&tail_p)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            match next {
                Some((j, dot)) if dot.clamp(-1.0, 1.0).acos() < link => {
                    chain.push(unused.swap_remove(j));
                }
                _ => break,
            }
        }
        loop {
            let head = chain[0];
            let head_p = map.lattice.points()[head];
            let next = unused
                .iter()
                .enumerate()
                .map(|(j, &i)| (j, map.lattice.points()[i].dot(&head_p)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            match next {
                Some((j, dot)) if dot.clamp(-1.0, 1.0).acos() < link => {
                    chain.insert(0, unused.swap_remove(j));
                }
                _ => break,
            }
        }
        curves.push(OverlapCurve {
            points: chain
                .iter()
                .map(|&i| {
                    let p = map.lattice.points()[i];
                    SpherePointData([p.x, p.y, p.z])
                })
                .collect(),
            times: chain
                .iter()
                .map(|&i| map.cells[i].best().map(|c| c.time).unwrap_or(f64::NAN))
                .collect(),
        });
    }
    curves.sort_by(|a, b| b.points.len().cmp(&a.points.len()));
    curves
}

/// Exact minimum time to a single point through the structured family:
/// best candidate and best structurally different candidate.
pub fn exact_min_time(
    frame: &Frame,
    y: &SpherePoint,
    horizon: f64,
    grid: usize,
) -> Option<(ReachCandidate, Option<ReachCandidate>)> {
    let cands = reach_candidates(frame, y, horizon, grid);
    let best = *cands.first()?;
    let best_cell = CellCandidate {
        time: best.time,
        program: best.program,
    };
    let runner = cands
        .iter()
        .skip(1)
        .find(|c| {
            CellCandidate {
                time: c.time,
                program: c.program,
            }
            .differs_from(&best_cell, frame, &y.vec())
        })
        .copied();
    Some((best, runner))
}

/// First-sign asymmetry `T_+(y) - T_-(y)`; antisymmetric under the polar
/// flip, zero on the overlap locus fed from the two sides.
pub fn first_sign_gap(frame: &Frame, y: &SpherePoint, horizon: f64, grid: usize) -> Option<f64> {
    let cands = reach_candidates(frame, y, horizon, grid);
    let t_plus = cands
        .iter()
        .find(|c| c.program.first_sign == Sign::Plus)
        .map(|c| c.time)?;
    let t_minus = cands
        .iter()
        .find(|c| c.program.first_sign == Sign::Minus)
        .map(|c| c.time)?;
    Some(t_plus - t_minus)
}

/// Diagnostics and label of the south-pole classification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SouthPoleReport {
    pub alpha: f64,
    pub southern_index: i64,
    pub remainder: f64,
    pub label: CaseLabel,
    /// Whether the pattern is read at `P_{N-1}` (exact `r = 0`).
    pub shifted: bool,
    /// Smallest structural tie gap on the probe ring around `P_N^+`,
    /// normalized by the ring radius.
    pub tie_at_p: f64,
    /// Sign changes of the first-sign gap around the pole ring.
    pub pole_sign_changes: usize,
    /// Smallest structural tie gap on the pole ring, normalized.
    pub pole_tie: f64,
    pub ring_radius: f64,
}

/// Classification options.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub ring_samples: usize,
    pub grid: usize,
    /// Normalized tie-gap threshold separating overlap from no-overlap.
    pub tie_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            ring_samples: 64,
            grid: 768,
            tie_threshold: 0.35,
        }
    }
}

/// Ring of points at geodesic radius `rho` around `center`.
fn probe_ring(center: &SpherePoint, rho: f64, n: usize) -> Vec<SpherePoint> {
    let c = center.vec();
    let seed = if c.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let e1 = (seed - c * seed.dot(&c)).normalize();
    let e2 = c.cross(&e1);
    (0..n)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            SpherePoint::new(c * rho.cos() + (e1 * phi.cos() + e2 * phi.sin()) * rho.sin())
        })
        .collect()
}

/// Classifies the south-pole picture for one cone angle.
///
/// The predicates are measured, not asserted: the structural tie gap near
/// `P_N^+` decides whether the overlap attaches there (case B) or detaches
/// (case A); the topology of the first-sign gap around the pole separates
/// the simple overlap-through-pole pictures (A, B) from the remaining
/// pattern (C). Inconclusive measurements return `Boundary`.
pub fn classify_south_pole(frame: &Frame, opts: &ClassifyOptions) -> SouthPoleReport {
    let n_half = southern_index(frame);
    let r = southern_remainder(frame);
    let alpha = frame.alpha.rad();
    let horizon = coverage_horizon(frame) + 2.0 * std::f64::consts::PI;

    // r = 0 exactly: same picture as case A but at the previous P-point.
    let shifted = r < 1e-9;
    let attach_index = if shifted { n_half - 1 } else { n_half };
    let p_attach = meridian_point(2.0 * attach_index as f64 * alpha);

    // Probe ring around the attachment point.
    let rho_p = (0.5 * r.min(2.0 * alpha - r)).clamp(0.004, 0.05);
    let ring = probe_ring(&p_attach, rho_p, opts.ring_samples);
    let ties = par_map(&ring, |y| {
        exact_min_time(frame, y, horizon, opts.grid)
            .and_then(|(best, runner)| runner.map(|r| r.time - best.time))
            .unwrap_or(f64::INFINITY)
    });
    let tie_at_p = ties.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / rho_p;

    // Probe ring around the pole: sign changes of the first-sign gap.
    let rho_pole = (0.35 * r.max(0.02)).clamp(0.015, 0.06);
    let pole_ring = probe_ring(&SpherePoint::south(), rho_pole, opts.ring_samples);
    let gaps = par_map(&pole_ring, |y| {
        first_sign_gap(frame, y, horizon, opts.grid).unwrap_or(f64::NAN)
    });
    let mut pole_sign_changes = 0;
    for i in 0..gaps.len() {
        let a = gaps[i];
        let b = gaps[(i + 1) % gaps.len()];
        if a.is_finite() && b.is_finite() && a.signum() != b.signum() {
            pole_sign_changes += 1;
        }
    }
    let pole_ties = par_map(&pole_ring, |y| {
        exact_min_time(frame, y, horizon, opts.grid)
            .and_then(|(best, runner)| runner.map(|r| r.time - best.time))
            .unwrap_or(f64::INFINITY)
    });
    let pole_tie = pole_ties.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / rho_pole;

    let overlap_at_p = tie_at_p < opts.tie_threshold;
    let simple_pole = pole_sign_changes == 2;
    let label = match (overlap_at_p, simple_pole) {
        (true, true) => CaseLabel::B,
        (false, true) => CaseLabel::A,
        (_, false) => CaseLabel::C,
    };

    SouthPoleReport {
        alpha,
        southern_index: n_half,
        remainder: r,
        label,
        shifted,
        tie_at_p,
        pole_sign_changes,
        pole_tie,
        ring_radius: rho_p,
    }
}

/// Measured case-transition thresholds within one resonance window
/// (`southern_index` constant), expressed as remainder values.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CaseThresholds {
    pub southern_index: i64,
    /// Remainder at the C/B transition, with its bisection interval.
    pub r1: f64,
    pub r1_interval: (f64, f64),
    /// Remainder at the B/A transition, with its bisection interval.
    pub r2: f64,
    pub r2_interval: (f64, f64),
}

/// Bisection over alpha inside the window `[pi/(2(N+1)), pi/(2N)]` for the
/// two case transitions. Returns `None` when the window does not exhibit
/// all three labels at the probe resolution.
pub fn measure_case_thresholds(
    n_half: i64,
    opts: &ClassifyOptions,
    alpha_tol: f64,
) -> Option<CaseThresholds> {
    let lo = std::f64::consts::PI / (2.0 * (n_half + 1) as f64) + 1e-6;
    let hi = (std::f64::consts::PI / (2.0 * n_half as f64) - 1e-6)
        .min(std::f64::consts::FRAC_PI_4 - 2e-3);
    if lo >= hi {
        return None;
    }
    let label_at = |alpha: f64| -> CaseLabel {
        let frame = Frame::from_angle(alpha).unwrap();
        classify_south_pole(&frame, opts).label
    };
    // Remainder decreases as alpha grows inside the window: A at the low
    // end (r near 2 alpha), C at the high end (r near 0).
    let la = label_at(lo);
    let lc = label_at(hi);
    if la != CaseLabel::A || lc != CaseLabel::C {
        return None;
    }
    // First transition away from A.
    let (mut a_lo, mut a_hi) = (lo, hi);
    while a_hi - a_lo > alpha_tol {
        let mid = 0.5 * (a_lo + a_hi);
        if label_at(mid) == CaseLabel::A {
            a_lo = mid;
        } else {
            a_hi = mid;
        }
    }
    // Last transition into C.
    let (mut c_lo, mut c_hi) = (a_hi.max(lo), hi);
    while c_hi - c_lo > alpha_tol {
        let mid = 0.5 * (c_lo + c_hi);
        if label_at(mid) == CaseLabel::C {
            c_hi = mid;
        } else {
            c_lo = mid;
        }
    }
    let rem = |alpha: f64| {
        let frame = Frame::from_angle(alpha).unwrap();
        southern_remainder(&frame)
    };
    Some(CaseThresholds {
        southern_index: n_half,
        r2: rem(0.5 * (a_lo + a_hi)),
        r2_interval: (rem(a_hi), rem(a_lo)),
        r1: rem(0.5 * (c_lo + c_hi)),
        r1_interval: (rem(c_hi), rem(c_lo)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::FieldKind;

    fn frame(alpha: f64) -> Frame {
        Frame::from_angle(alpha).unwrap()
    }

    #[test]
    fn front_at_quarter_period_is_two_direct_arcs() {
        let fr = frame(0.3);
        let t = std::f64::consts::FRAC_PI_2;
        let front = propagate_front(&fr, t, 64);
        // The single-bang samples match the direct flows.
        for sample in front.iter().filter(|f| f.generator.arc_count == 1) {
            let direct = crate::sphere::flow(
                &fr,
                if sample.generator.first_sign == Sign::Plus {
                    FieldKind::XPlus
                } else {
                    FieldKind::XMinus
                },
                t,
                &SpherePoint::north(),
            );
            assert!((sample.point.point().vec() - direct.vec()).norm() < 1e-12);
        }
        // All samples land on the unit sphere and carry consistent times.
        for sample in &front {
            assert!((sample.point.point().vec().norm() - 1.0).abs() < 1e-12);
            assert!((sample.generator.total_time(&fr) - t).abs() < 1e-9);
        }
    }

    #[test]
    fn front_fold_touches_first_switching_curve() {
        // Just above t = pi the front folds at C_1: the two-arc samples
        // with full interior duration lie on the curve.
        let fr = frame(0.3);
        let t = std::f64::consts::PI + 0.3;
        let front = propagate_front(&fr, t, 256);
        let on_fold: Vec<_> = front
            .iter()
            .filter(|f| {
                f.generator.arc_count == 2
                    && (f.generator.final_t - v_of_s(&fr, f.generator.s)).abs() < 0.02
            })
            .collect();
        assert!(!on_fold.is_empty());
        for sample in on_fold {
            let curve_pt = crate::synthesis::curve_point(
                &fr,
                1,
                sample.generator.first_sign.flip(),
                sample.generator.s,
            );
            let d = (sample.point.point().vec() - curve_pt.vec()).norm();
            // final_t is within 0.02 of v(s); unit-speed flows bound the gap.
            assert!(d < 0.03, "distance to C_1 = {d}");
        }
    }

    #[test]
    fn front_continuity_in_time() {
        let fr = frame(0.3);
        let delta = 1e-3;
        let f1 = propagate_front(&fr, 2.0, 64);
        let f2 = propagate_front(&fr, 2.0 + delta, 64);
        // Match generators by (sign, arc_count, s-index) and compare.
        for (a, b) in f1.iter().zip(f2.iter()) {
            if a.generator.first_sign == b.generator.first_sign
                && a.generator.arc_count == b.generator.arc_count
                && (a.generator.s - b.generator.s).abs() < 1e-12
            {
                let d = a
                    .point
                    .point()
                    .geodesic_distance(&b.point.point());
                assert!(d <= delta * 1.01 + 1e-12);
            }
        }
    }

    #[test]
    fn map_covers_sphere_by_conjectured_horizon() {
        let fr = frame(0.42);
        let map = min_time_map(
            &fr,
            coverage_horizon(&fr),
            &MapOptions {
                cells: 2000,
                s_grid: 192,
                t_steps: 48,
            },
        );
        assert!(coverage(&map) == 1.0, "coverage = {}", coverage(&map));
        // Origin cell is reached at time ~ 0.
        let idx = map.lattice.nearest(&SpherePoint::north().vec());
        let best = map.cells[idx].best().unwrap();
        assert!(best.time < 0.1);
    }

    #[test]
    fn map_agrees_with_exact_solver_in_rigorous_region() {
        // The cell value is the exact minimum time at some point of the
        // cell, so it must lie within the range of the exact solver over a
        // ring of cell radius around the center. (The minimum time is not
        // Euclid-Lipschitz: transversal displacements cost more than their
        // length, so a plain center comparison would be wrong.)
        let fr = frame(0.42);
        let map = min_time_map(
            &fr,
            coverage_horizon(&fr),
            &MapOptions {
                cells: 4000,
                s_grid: 256,
                t_steps: 64,
            },
        );
        let horizon = 4.0 * std::f64::consts::PI;
        let rho = map.lattice.cell_diameter();
        let mut checked = 0;
        for (i, cell) in map.cells.iter().enumerate() {
            if i % 17 != 0 {
                continue;
            }
            let center = map.lattice.points()[i];
            if center.z < 0.35 {
                continue; // rigorous region only
            }
            let best = cell.best().unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut probes = probe_ring(&SpherePoint::new(center), rho, 8);
            probes.push(SpherePoint::new(center));
            for p in &probes {
                let t = exact_min_time(&fr, p, horizon, 256).map(|(b, _)| b.time).unwrap();
                lo = lo.min(t);
                hi = hi.max(t);
            }
            assert!(
                best.time >= lo - 0.02 && best.time <= hi + 0.02,
                "cell {i}: map {} outside exact range [{lo}, {hi}]",
                best.time
            );
            checked += 1;
        }
        assert!(checked > 80, "only {checked} cells checked");
    }

    #[test]
    fn no_overlaps_in_rigorous_region_below_horizon() {
        let fr = frame(0.42);
        let n = southern_index(&fr); // 3 here
        let map = min_time_map(
            &fr,
            coverage_horizon(&fr),
            &MapOptions {
                cells: 4000,
                s_grid: 256,
                t_steps: 64,
            },
        );
        let tol = 2.0 * map.lattice.cell_diameter();
        let rigorous_time = (n - 1) as f64 * std::f64::consts::PI;
        for curve in detect_overlaps(&map, None) {
            for (p, t) in curve.points.iter().zip(&curve.times) {
                if *t < rigorous_time - tol {
                    assert!(
                        p.0[2] < 3.0 * map.lattice.cell_diameter(),
                        "overlap at {:?} time {t} inside the rigorous region",
                        p.0
                    );
                }
            }
        }
    }

    #[test]
    fn pole_gap_is_antisymmetric() {
        let fr = frame(0.45);
        let horizon = coverage_horizon(&fr) + 2.0;
        let ring = probe_ring(&SpherePoint::south(), 0.05, 16);
        for y in &ring {
            let g1 = first_sign_gap(&fr, y, horizon, 256);
            let g2 = first_sign_gap(&fr, &crate::sphere::polar_flip(y), horizon, 256);
            if let (Some(a), Some(b)) = (g1, g2) {
                assert!((a + b).abs() < 1e-6, "gap not antisymmetric: {a} vs {b}");
            }
        }
    }
}
