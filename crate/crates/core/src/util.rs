//! Small internal helpers shared across modules.

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Floor that snaps arguments within `1e-9` (relative) of an integer.
///
/// Integer formulas on ratios of pi/alpha hit exact resonances like
/// alpha = pi/(4k); plain `floor` on the f64 quotient would be off by one
/// depending on the rounding direction of the division.
pub fn snapped_floor(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Distance from `x` to the nearest integer, in units of `x`'s magnitude.
pub fn resonance_offset(x: f64) -> f64 {
    (x - x.round()).abs() / x.abs().max(1.0)
}

/// All solutions of `a cos(t) + b sin(t) + c = 0` in `(0, t_max]`.
///
/// Used for exact event location along circular arcs: equator and meridian
/// crossings, cap membership, final-arc targeting. Roots are returned in
/// increasing order; tangential grazes count once.
pub fn trig_roots(a: f64, b: f64, c: f64, t_max: f64) -> Vec<f64> {
    let r = a.hypot(b);
    let mut out = Vec::new();
    if r < 1e-300 {
        return out; // constant function, either no roots or all-roots
    }
    let ratio = -c / r;
    // Snap tangential grazes: an exact touch rounds to |ratio| near 1 and
    // acos would either vanish or lose half the digits to the square root.
    if ratio.abs() > 1.0 + 1e-12 {
        return out;
    }
    // a cos t + b sin t = r cos(t - phase)
    let phase = b.atan2(a);
    let delta = if 1.0 - ratio.abs() < 1e-13 {
        if ratio > 0.0 {
            0.0
        } else {
            std::f64::consts::PI
        }
    } else {
        ratio.clamp(-1.0, 1.0).acos()
    };
    let tau = 2.0 * std::f64::consts::PI;
    for base in [phase - delta, phase + delta] {
        let mut t = base.rem_euclid(tau);
        if t < 1e-12 {
            t += tau;
        }
        while t <= t_max + 1e-12 {
            out.push(t.min(t_max));
            t += tau;
        }
    }
    out.sort_by(|p, q| p.partial_cmp(q).unwrap());
    out.dedup_by(|p, q| (*p - *q).abs() < 1e-10);
    out
}

/// First root of `a cos t + b sin t + c = 0` in `(0, t_max]`, if any.
pub fn first_trig_root(a: f64, b: f64, c: f64, t_max: f64) -> Option<f64> {
    trig_roots(a, b, c, t_max).into_iter().next()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapped_floor_handles_resonances() {
        assert_eq!(snapped_floor(4.999999999999), 5);
        assert_eq!(snapped_floor(5.000000000001), 5);
        assert_eq!(snapped_floor(4.9), 4);
        assert_eq!(snapped_floor(-0.618), -1);
        assert_eq!(snapped_floor(-1.0000000000001), -1);
    }

    #[test]
    fn trig_roots_match_direct_evaluation() {
        let (a, b, c) = (0.7, -0.4, 0.2);
        let roots = trig_roots(a, b, c, 12.0);
        assert!(!roots.is_empty());
        for t in &roots {
            assert!((a * t.cos() + b * t.sin() + c).abs() < 1e-9);
        }
        for w in roots.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn trig_roots_out_of_reach() {
        assert!(trig_roots(0.1, 0.1, 5.0, 100.0).is_empty());
    }
}
