//! Individual diagnostics used by the degree sweep.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::{preimages, PolyDyn};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridSet;
use crate::lab::testfn::PolyTest;
use crate::math;
use crate::measure::{energy_with, EmpiricalMeasure, Provenance, NEG_INF};
use crate::orthopoly::OrthoBasis;
use crate::roots;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MassEstimate {
    pub mass: f64,
    pub std_error: f64,
}

impl MassEstimate {
    /// Indistinguishable from zero at two standard errors.
    pub fn is_zero(&self) -> bool {
        self.mass <= 2.0 * self.std_error
    }
}

/// `ω(V)` with a binomial standard error. `V` must miss the hull `k_mu`.
pub fn mass_escape(omega: &EmpiricalMeasure, v: &GridSet, k_mu: &GridSet) -> Result<MassEstimate> {
    if v.intersects(k_mu) {
        return Err(Error::Hypothesis("V meets the filled hull K(mu)".into()));
    }
    let mass: f64 = omega.points.iter().zip(&omega.weights).filter(|(z, _)| v.contains_point(**z)).fold(0.0, |acc, (_, w)| acc + w);
    let mass = mass.clamp(0.0, 1.0);
    let n = omega.len().max(1) as f64;
    Ok(MassEstimate { mass, std_error: math::sqrt(mass * (1.0 - mass) / n) })
}

/// `#(P^{-1}(w) ∩ V)`, counting multiplicity; requires `|w| ≤ bound`.
pub fn preimage_count(p: &PolyDyn, w: Complex64, v: &GridSet, bound: f64) -> Result<usize> {
    if math::cabs(w) > bound {
        return Err(Error::InvalidArgument("probe value exceeds the containment radius".into()));
    }
    Ok(preimages(p, w, roots::POLISH_TOL)?.iter().filter(|z| v.contains_point(**z)).count())
}

/// 32 probe values: radii `R·{1/4, 1/2, 3/4, 1}` times 8 angles.
pub fn preimage_probes(r: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(32);
    for q in 1..=4 {
        for k in 0..8 {
            out.push(math::cis(math::TAU * (k as f64 + 0.25) / 8.0) * (r * q as f64 / 4.0));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BalancedCheck {
    pub function: PolyTest,
    /// `(1/N) Σ f(z_i)`.
    pub direct: f64,
    /// `(1/dN) Σ_i Σ_{P(ζ) = z_i} f(ζ)`.
    pub pulled_back: f64,
    pub combined_se: f64,
    pub passed: bool,
}

/// Compares `∫ f dω` with `∫ (1/d) Σ_{P(ζ)=z} f(ζ) dω(z)` on the samples.
pub fn balanced_measure_check<E: Exec>(exec: &E, p: &PolyDyn, samples: &EmpiricalMeasure, f: PolyTest) -> Result<BalancedCheck> {
    let d = p.degree as f64;
    let pulled = exec.map_indexed(samples.len(), |i| {
        preimages(p, samples.points[i], roots::POLISH_TOL).map(|pre| pre.iter().map(|z| f.eval(*z)).sum::<f64>() / d)
    });
    let mut back = Vec::with_capacity(samples.len());
    for r in pulled {
        back.push(r?);
    }
    let direct: Vec<f64> = samples.points.iter().map(|z| f.eval(*z)).collect();
    let batches = samples.chains.max(16);
    let s1 = stats::batch_means_se(&chain_ordered(&direct, samples.chains), batches);
    let s2 = stats::batch_means_se(&chain_ordered(&back, samples.chains), batches);
    let direct_mean = stats::mean(&direct);
    let back_mean = stats::mean(&back);
    let combined_se = math::sqrt(s1 * s1 + s2 * s2);
    Ok(BalancedCheck {
        function: f,
        direct: direct_mean,
        pulled_back: back_mean,
        combined_se,
        passed: (direct_mean - back_mean).abs() <= 4.0 * combined_se.max(f64::EPSILON * (1.0 + direct_mean.abs())),
    })
}

/// Reorders striped samples so each chain's samples are contiguous.
fn chain_ordered(x: &[f64], chains: usize) -> Vec<f64> {
    let c = chains.max(1);
    let mut out = Vec::with_capacity(x.len());
    for k in 0..c {
        out.extend(x.iter().skip(k).step_by(c));
    }
    out
}

/// Sample energy of the first `max_points` atoms (striped across chains)
/// and a standard error from 8 disjoint subsamples.
pub fn sample_energy<E: Exec>(exec: &E, m: &EmpiricalMeasure, max_points: usize) -> Result<(f64, f64)> {
    let k = m.len().min(max_points.max(16));
    let head = EmpiricalMeasure::uniform(m.points[..k].to_vec(), m.provenance);
    let e = energy_with(exec, &head)?;
    const GROUPS: usize = 8;
    let mut parts = Vec::with_capacity(GROUPS);
    for g in 0..GROUPS {
        let pts: Vec<Complex64> = head.points.iter().skip(g).step_by(GROUPS).copied().collect();
        if pts.len() < 2 {
            return Ok((e, 0.0));
        }
        let v = energy_with(exec, &EmpiricalMeasure::uniform(pts, m.provenance))?;
        if v == NEG_INF {
            return Ok((e, 0.0));
        }
        parts.push(v);
    }
    Ok((e, stats::sample_se(&parts)))
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Vec<Complex64> = if pass == 0 { p.clone() } else { p.iter().rev().copied().collect() };
        for z in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], z) <= 0.0 {
                hull.pop();
            }
            hull.push(z);
        }
        hull.pop();
    }
    hull
}

/// Distance from `z` to the convex polygon `hull` (zero inside).
pub fn distance_to_hull(z: Complex64, hull: &[Complex64]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => math::cabs(z - hull[0]),
        2 => crate::grid::segment_distance(z, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|k| {
                let (a, b) = (hull[k], hull[(k + 1) % n]);
                (b - a).re * (z - a).im - (b - a).im * (z - a).re >= 0.0
            });
            if inside {
                return 0.0;
            }
            (0..n).map(|k| crate::grid::segment_distance(z, hull[k], hull[(k + 1) % n])).fold(f64::INFINITY, f64::min)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroDistribution {
    pub measure: EmpiricalMeasure,
    /// Largest distance from a zero to the convex hull of the support.
    pub hull_excess: f64,
    pub inside: bool,
}

/// Zeros of `P_n`, weighted `1/n`, and their position relative to the
/// convex hull of `hull_points` (allowed slack `slack`).
pub fn zero_distribution(b: &OrthoBasis, n: usize, hull_points: &[Complex64], slack: f64) -> Result<ZeroDistribution> {
    if n == 0 || n > b.max_degree {
        return Err(Error::OutOfRange { index: n, max: b.max_degree });
    }
    let zeros = roots::roots(&b.coeffs[n], roots::POLISH_TOL, 1.0)?;
    let hull = convex_hull(hull_points);
    let hull_excess = zeros.iter().map(|z| distance_to_hull(*z, &hull)).fold(0.0, f64::max);
    let measure = EmpiricalMeasure::uniform(zeros, Provenance::Zeros);
    Ok(ZeroDistribution { measure, hull_excess, inside: hull_excess <= slack })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClauseVerdict {
    pub deviations: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub tolerance: f64,
    pub last_within_tolerance: bool,
    pub trend_ok: bool,
    pub passed: bool,
}

/// Last value within `tol`, and no increase beyond two standard errors
/// between consecutive values among the final three.
pub fn trend_verdict(deviations: Vec<f64>, std_errors: Vec<f64>, tol: f64) -> ClauseVerdict {
    let n = deviations.len();
    let last_within_tolerance = n > 0 && deviations[n - 1] <= tol;
    let trend_ok = non_increasing_tail(&deviations, &std_errors, 3);
    ClauseVerdict { passed: last_within_tolerance && trend_ok, deviations, std_errors, tolerance: tol, last_within_tolerance, trend_ok }
}

pub fn non_increasing_tail(x: &[f64], se: &[f64], len: usize) -> bool {
    let n = x.len();
    let start = n.saturating_sub(len);
    (start + 1..n).all(|k| {
        let s = math::sqrt(se.get(k).copied().unwrap_or(0.0).powi(2) + se.get(k - 1).copied().unwrap_or(0.0).powi(2));
        x[k] - x[k - 1] <= 2.0 * s + 1e-12 * (1.0 + x[k - 1].abs())
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityReport {
    /// `|γ_n^{1/n} Cap - 1|`.
    pub clause1: ClauseVerdict,
    /// `|Cap(K_n)/Cap - 1|`.
    pub clause2: ClauseVerdict,
    /// `|I(ω_n) - I|`, with tolerance `ln(1 + tol)`.
    pub clause3: ClauseVerdict,
    /// `max_n |Cap(K_n) - γ_n^{-1/(n-1)}| / Cap(K_n)`.
    pub identity_error: f64,
    /// `γ_n^{1/(n-1)} / γ_n^{1/n}` per degree.
    pub exponent_ratios: Vec<f64>,
    pub passed: bool,
}

/// Regularity clauses for a sweep. `energies` are independent estimates of
/// `I(ω_n)` (for instance from samples) with their standard errors.
pub fn regularity_report(
    degrees: &[usize],
    gammas: &[f64],
    cap_julia: &[f64],
    energies: &[f64],
    energy_se: &[f64],
    reference_cap: f64,
    tol: f64,
) -> Result<RegularityReport> {
    if !(reference_cap > 0.0) {
        return Err(Error::InvalidArgument("reference capacity must be positive".into()));
    }
    let zeros = || alloc::vec![0.0; degrees.len()];
    let c1: Vec<f64> = degrees
        .iter()
        .zip(gammas)
        .map(|(&n, &g)| (math::powf(g, 1.0 / n as f64) * reference_cap - 1.0).abs())
        .collect();
    let c2: Vec<f64> = cap_julia.iter().map(|c| (c / reference_cap - 1.0).abs()).collect();
    let ref_energy = math::ln(reference_cap);
    let c3: Vec<f64> = energies.iter().map(|e| (e - ref_energy).abs()).collect();
    let identity_error = degrees
        .iter()
        .zip(gammas.iter().zip(cap_julia))
        .map(|(&n, (&g, &c))| (c - math::powf(g, -1.0 / (n as f64 - 1.0))).abs() / c)
        .fold(0.0, f64::max);
    let exponent_ratios =
        degrees.iter().zip(gammas).map(|(&n, &g)| math::powf(g, 1.0 / (n as f64 * (n as f64 - 1.0)))).collect();
    let clause1 = trend_verdict(c1, zeros(), tol);
    let clause2 = trend_verdict(c2, zeros(), tol);
    let clause3 = trend_verdict(c3, energy_se.to_vec(), math::ln(1.0 + tol));
    Ok(RegularityReport {
        passed: clause1.passed && clause2.passed && clause3.passed,
        clause1,
        clause2,
        clause3,
        identity_error,
        exponent_ratios,
    })
}

/// `M̂ = 2 max_{n ≤ 4} n x_n`.
pub fn fitted_m(degrees: &[usize], x: &[f64]) -> f64 {
    2.0 * degrees.iter().zip(x).filter(|(n, _)| **n <= 4).map(|(&n, &v)| n as f64 * v).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::grid::{Lattice, NamedShape, Rect};
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lat() -> Lattice {
        Lattice::new(Rect::new(-3.0, 3.0, -3.0, 3.0).unwrap(), 120, 120).unwrap()
    }

    #[test]
    fn preimage_count_examples() {
        let v = GridSet::from_shape(lat(), NamedShape::Disk { center: c(1.5, 0.0), radius: 0.2 }, None).unwrap();
        let cheb = PolyDyn::from_real(&[-2.0, 0.0, 1.0]).unwrap();
        assert_eq!(preimage_count(&cheb, c(0.0, 0.0), &v, 4.0).unwrap(), 1);
        let zn = PolyDyn::from_real(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(preimage_count(&zn, c(0.0, 0.0), &v, 4.0).unwrap(), 0);
        assert!(preimage_count(&cheb, c(5.0, 0.0), &v, 4.0).is_err());
    }

    #[test]
    fn mass_escape_rules() {
        let k = GridSet::from_shape(lat(), NamedShape::Disk { center: c(0.0, 0.0), radius: 1.0 }, None).unwrap();
        let far = GridSet::from_shape(lat(), NamedShape::Disk { center: c(2.0, 0.0), radius: 0.5 }, None).unwrap();
        let near = GridSet::from_shape(lat(), NamedShape::Disk { center: c(1.0, 0.0), radius: 0.5 }, None).unwrap();
        let m = EmpiricalMeasure::uniform(vec![c(1.0, 0.0), c(2.1, 0.0), c(-1.0, 0.0), c(0.0, 1.0)], Provenance::Custom);
        let est = mass_escape(&m, &far, &k).unwrap();
        assert_eq!(est.mass, 0.25);
        assert!((est.std_error - math::sqrt(0.25 * 0.75 / 4.0)).abs() < 1e-15);
        assert!(matches!(mass_escape(&m, &near, &k), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn balanced_identity_for_chebyshev() {
        let p = PolyDyn::from_real(&[-2.0, 0.0, 1.0]).unwrap();
        let m = crate::dynamics::brolin_sample(&Sequential, &p, 10_000, 50, 4, 64).unwrap();
        for f in [PolyTest::ReZ, PolyTest::AbsSq, PolyTest::ReZ2] {
            let r = balanced_measure_check(&Sequential, &p, &m, f).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn hull_and_distance() {
        let h = convex_hull(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(0.5, 0.5), c(0.5, 0.0)]);
        assert_eq!(h.len(), 4);
        assert_eq!(distance_to_hull(c(0.5, 0.5), &h), 0.0);
        assert!((distance_to_hull(c(2.0, 0.5), &h) - 1.0).abs() < 1e-15);
        let seg = convex_hull(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(seg.len(), 2);
        assert!((distance_to_hull(c(0.0, 0.5), &seg) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trend_rule() {
        assert!(trend_verdict(vec![0.5, 0.3, 0.2, 0.1], vec![0.0; 4], 0.15).passed);
        assert!(!trend_verdict(vec![0.5, 0.1, 0.12, 0.1], vec![0.0; 4], 0.15).passed);
        assert!(trend_verdict(vec![0.5, 0.1, 0.12, 0.1], vec![0.02; 4], 0.15).passed);
        assert!(!trend_verdict(vec![0.5, 0.3, 0.2, 0.2], vec![0.0; 4], 0.15).passed);
    }
}
