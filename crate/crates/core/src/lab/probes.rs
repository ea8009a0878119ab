//! Probe sets and the potential-difference surrogate for weak-* distance.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::math;
use crate::measure::EmpiricalMeasure;
use crate::stats;

/// Probes closer than this (relative to the probe window) to an atom count
/// as lying on the support.
pub const DEFAULT_CLEARANCE: f64 = 1e-6;
/// Batches used for the standard error of a distance.
pub const SE_BATCHES: usize = 16;

const RING_ANGLES: usize = 48;
const INTERIOR_LATTICE: usize = 8;

/// Points where potentials are compared: rings around a compact set plus a
/// sparse lattice in its interior.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeSet {
    pub points: Vec<Complex64>,
    pub clearance: f64,
}

impl ProbeSet {
    pub fn new(points: Vec<Complex64>, clearance: f64) -> Self {
        ProbeSet { points, clearance }
    }

    /// Rings of radius `ρ + margin·{1, 2, 4}` around the hull (`ρ` its
    /// circumradius about the bounding-box center) and interior lattice
    /// points at least `margin / 2` away from the outer boundary.
    pub fn around(hull: &GridSet, boundary: &[Complex64], margin: f64) -> Self {
        let pts: Vec<Complex64> = hull.points().collect();
        let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for z in &pts {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let center = (lo + hi) * 0.5;
        let half_pixel = 0.5 * math::hypot(hull.lattice.dx(), hull.lattice.dy());
        let rho = pts.iter().map(|z| math::cabs(z - center)).fold(0.0, f64::max) + half_pixel;
        let mut points = Vec::new();
        for f in [1.0, 2.0, 4.0] {
            for k in 0..RING_ANGLES {
                let t = math::TAU * (k as f64 + 0.5 * f) / RING_ANGLES as f64;
                points.push(center + math::cis(t) * (rho + margin * f));
            }
        }
        let span = hi - lo;
        for j in 0..INTERIOR_LATTICE {
            for i in 0..INTERIOR_LATTICE {
                let z = lo
                    + Complex64::new(
                        span.re * (i as f64 + 0.5) / INTERIOR_LATTICE as f64,
                        span.im * (j as f64 + 0.5) / INTERIOR_LATTICE as f64,
                    );
                if hull.contains_point(z) && boundary.iter().all(|b| math::cabs(z - b) >= 0.5 * margin) {
                    points.push(z);
                }
            }
        }
        ProbeSet { points, clearance: DEFAULT_CLEARANCE * (1.0 + rho) }
    }

    /// Drops probes within the clearance of any atom of `m`.
    pub fn avoiding(&self, m: &EmpiricalMeasure) -> ProbeSet {
        let points = self.points.iter().copied().filter(|z| !near_any(*z, &m.points, self.clearance)).collect();
        ProbeSet { points, clearance: self.clearance }
    }
}

fn near_any(z: Complex64, pts: &[Complex64], r: f64) -> bool {
    pts.iter().any(|p| math::cabs(z - p) < r)
}

fn check(m: &EmpiricalMeasure, probes: &ProbeSet) -> Result<()> {
    for (index, z) in probes.points.iter().enumerate() {
        if near_any(*z, &m.points, probes.clearance) {
            return Err(Error::ProbeOnSupport { index });
        }
    }
    Ok(())
}

/// `max_ζ |p_{m1}(ζ) - p_{m2}(ζ)|` over the probes.
pub fn weak_star_distance(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure, probes: &ProbeSet) -> Result<f64> {
    Ok(weak_star_distance_with_se(m1, m2, probes)?.0)
}

/// Distance and a batch-means standard error for its maximizing probe.
///
/// Atoms of each measure are split into [`SE_BATCHES`] groups by index
/// modulo the batch count (for striped chain output this groups whole chains).
pub fn weak_star_distance_with_se(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure, probes: &ProbeSet) -> Result<(f64, f64)> {
    check(m1, probes)?;
    check(m2, probes)?;
    if probes.points.is_empty() {
        return Err(Error::InvalidArgument("empty probe set".into()));
    }
    let (mut best, mut best_se) = (0.0f64, 0.0f64);
    for &z in &probes.points {
        let (p1, s1) = potential_with_se(m1, z);
        let (p2, s2) = potential_with_se(m2, z);
        let d = (p1 - p2).abs();
        if d > best || (d == best && best_se == 0.0) {
            best = d;
            best_se = math::sqrt(s1 * s1 + s2 * s2);
        }
    }
    Ok((best, best_se))
}

fn potential_with_se(m: &EmpiricalMeasure, z: Complex64) -> (f64, f64) {
    let b = SE_BATCHES.min(m.len());
    let mut sums = [0.0f64; SE_BATCHES];
    let mut mass = [0.0f64; SE_BATCHES];
    for (i, (&a, &w)) in m.points.iter().zip(&m.weights).enumerate() {
        let v = w * math::ln(math::cabs(z - a));
        sums[i % b] += v;
        mass[i % b] += w;
    }
    let total: f64 = sums[..b].iter().sum();
    if b < 2 {
        return (total, 0.0);
    }
    let means: Vec<f64> = (0..b).map(|k| sums[k] / mass[k]).collect();
    (total, stats::sample_se(&means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Lattice, NamedShape, Rect};
    use crate::measure::Provenance;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle_setup() -> (GridSet, Vec<Complex64>) {
        let lat = Lattice::new(Rect::new(-1.5, 1.5, -1.5, 1.5).unwrap(), 128, 128).unwrap();
        let ring = GridSet::from_shape(lat, NamedShape::Circle { center: Complex64::new(0.0, 0.0), radius: 1.0 }, None).unwrap();
        let hull = crate::equilibrium::filled_hull(&ring).unwrap();
        let b: Vec<Complex64> = crate::equilibrium::outer_boundary(&ring).unwrap().iter().map(|&i| lat.center_of(i)).collect();
        (hull, b)
    }

    fn circle_atoms(n: usize) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform((0..n).map(|k| math::cis(math::TAU * k as f64 / n as f64)).collect(), Provenance::Equilibrium)
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let (hull, b) = circle_setup();
        let probes = ProbeSet::around(&hull, &b, 1.0);
        let m = circle_atoms(300);
        assert_eq!(weak_star_distance(&m, &m, &probes).unwrap(), 0.0);
    }

    #[test]
    fn random_circle_samples_are_close() {
        let (hull, b) = circle_setup();
        let probes = ProbeSet::around(&hull, &b, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = EmpiricalMeasure::uniform(
            (0..10_000).map(|_| math::cis(rng.gen_range(0.0..math::TAU))).collect(),
            Provenance::Custom,
        );
        let (d, se) = weak_star_distance_with_se(&samples, &circle_atoms(512), &probes).unwrap();
        assert!(d < 0.01, "{d}");
        assert!(se > 0.0 && se < 0.01);
    }

    #[test]
    fn point_cluster_is_far_from_circle() {
        let (hull, b) = circle_setup();
        let probes = ProbeSet::around(&hull, &b, 1.0);
        assert!(probes.points.iter().any(|z| z.norm() < 0.9));
        let cluster = EmpiricalMeasure::uniform(vec![Complex64::new(1e-3, 0.0), Complex64::new(-1e-3, 0.0)], Provenance::Zeros);
        assert!(weak_star_distance(&cluster, &circle_atoms(512), &probes).unwrap() >= 0.3);
    }

    #[test]
    fn probe_on_support_is_an_error() {
        let probes = ProbeSet::new(vec![Complex64::new(1.0, 0.0)], 1e-6);
        let m = circle_atoms(8);
        assert!(matches!(weak_star_distance(&m, &m, &probes), Err(Error::ProbeOnSupport { index: 0 })));
        assert!(probes.avoiding(&m).points.is_empty());
    }
}
