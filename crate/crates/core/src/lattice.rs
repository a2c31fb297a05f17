//! Spherical Fibonacci lattice for near-uniform cell indexing.
//!
//! Cells are the Voronoi regions of golden-angle spiral points. Unlike a
//! latitude-longitude grid the cell area is nearly constant, so the polar
//! caps are not over-resolved; the south-pole analysis depends on that.
//! Nearest-cell queries go through a coarse longitude/z bucket table.

use nalgebra::Vector3;

const GOLDEN_ANGLE: f64 = 2.399963229728653; // pi (3 - sqrt 5)

/// Fixed lattice of `n` near-uniform points on the unit sphere.
#[derive(Clone, Debug)]
pub struct FibonacciLattice {
    points: Vec<Vector3<f64>>,
    buckets: Vec<Vec<u32>>,
    n_z: usize,
    n_phi: usize,
}

impl FibonacciLattice {
    pub fn new(n: usize) -> Self {
        let n = n.max(16);
        let points: Vec<Vector3<f64>> = (0..n)
            .map(|i| {
                // Midpoint offset avoids degenerate pole cells.
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = GOLDEN_ANGLE * i as f64;
                Vector3::new(rho * phi.cos(), rho * phi.sin(), z)
            })
            .collect();

        // Buckets coarser than the lattice spacing, so the 3x3 insertion
        // halo always covers the true nearest point. Polar rows degenerate
        // in longitude and get full-row insertion.
        let n_z = ((n as f64).sqrt() * 0.5) as usize + 2;
        let n_phi = n_z * 2;
        let mut buckets = vec![Vec::new(); n_z * n_phi];
        for (idx, p) in points.iter().enumerate() {
            let (iz, ip) = bucket_of(p, n_z, n_phi);
            for dz in -1i64..=1 {
                let z = iz as i64 + dz;
                if z < 0 || z >= n_z as i64 {
                    continue;
                }
                let polar = z < 2 || z >= n_z as i64 - 2;
                if polar {
                    for f in 0..n_phi {
                        buckets[z as usize * n_phi + f].push(idx as u32);
                    }
                } else {
                    for dp in -1i64..=1 {
                        let f = (ip as i64 + dp).rem_euclid(n_phi as i64);
                        buckets[z as usize * n_phi + f as usize].push(idx as u32);
                    }
                }
            }
        }
        let mut buckets = buckets;
        for b in &mut buckets {
            b.sort_unstable();
            b.dedup();
        }
        FibonacciLattice {
            points,
            buckets,
            n_z,
            n_phi,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Approximate cell diameter (geodesic), from the mean cell area.
    pub fn cell_diameter(&self) -> f64 {
        2.0 * (1.0 / self.points.len() as f64).sqrt() * std::f64::consts::PI.sqrt()
    }

    /// Index of the nearest lattice point.
    pub fn nearest(&self, y: &Vector3<f64>) -> usize {
        let (iz, ip) = bucket_of(y, self.n_z, self.n_phi);
        let mut best = usize::MAX;
        let mut best_dot = f64::NEG_INFINITY;
        // Search the home bucket, then widen if it was empty.
        for radius in 0..self.n_z as i64 {
            for dz in -radius..=radius {
                let z = iz as i64 + dz;
                if z < 0 || z >= self.n_z as i64 {
                    continue;
                }
                for dp in -radius..=radius {
                    if radius > 0 && dz.abs() != radius && dp.abs() != radius {
                        continue;
                    }
                    let f = (ip as i64 + dp).rem_euclid(self.n_phi as i64);
                    for &idx in &self.buckets[z as usize * self.n_phi + f as usize] {
                        let d = self.points[idx as usize].dot(y);
                        if d > best_dot {
                            best_dot = d;
                            best = idx as usize;
                        }
                    }
                }
            }
            if best != usize::MAX {
                break;
            }
        }
        best
    }
}

fn bucket_of(p: &Vector3<f64>, n_z: usize, n_phi: usize) -> (usize, usize) {
    let z = ((1.0 - p.z) / 2.0 * n_z as f64) as usize;
    let phi = p.y.atan2(p.x).rem_euclid(2.0 * std::f64::consts::PI);
    let ip = (phi / (2.0 * std::f64::consts::PI) * n_phi as f64) as usize;
    (z.min(n_z - 1), ip.min(n_phi - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_unit_and_spread() {
        let lat = FibonacciLattice::new(1000);
        assert_eq!(lat.len(), 1000);
        for p in lat.points() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        // Mean of the points is near the origin for a uniform set.
        let mean: Vector3<f64> = lat.points().iter().sum::<Vector3<f64>>() / 1000.0;
        assert!(mean.norm() < 0.01);
    }

    #[test]
    fn nearest_agrees_with_linear_scan() {
        let lat = FibonacciLattice::new(797);
        let mut failures = 0;
        for i in 0..500 {
            let t = i as f64 * 0.7511;
            let z = (2.0 * (t.sin() * 43758.5453).fract() - 1.0).clamp(-1.0, 1.0);
            let phi = 6.2831853 * (t.cos() * 9631.0).fract().abs();
            let rho = (1.0 - z * z).sqrt();
            let y = Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
            let fast = lat.nearest(&y);
            let slow = (0..lat.len())
                .max_by(|&a, &b| {
                    lat.points()[a]
                        .dot(&y)
                        .partial_cmp(&lat.points()[b].dot(&y))
                        .unwrap()
                })
                .unwrap();
            if fast != slow {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn nearest_is_exact_near_poles() {
        let lat = FibonacciLattice::new(5000);
        for z_sign in [1.0, -1.0] {
            for i in 0..200 {
                let theta = 0.002 * i as f64;
                let phi = 2.399963 * i as f64;
                let y = Vector3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    z_sign * theta.cos(),
                );
                let fast = lat.nearest(&y);
                let slow = (0..lat.len())
                    .max_by(|&a, &b| {
                        lat.points()[a]
                            .dot(&y)
                            .partial_cmp(&lat.points()[b].dot(&y))
                            .unwrap()
                    })
                    .unwrap();
                assert_eq!(fast, slow);
            }
        }
    }
}
