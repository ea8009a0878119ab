//! Dynamics of a single polynomial: escape radius, Green's function, filled
//! Julia set on a grid, preimages and the Brolin measure.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Lattice;
use crate::math;
use crate::measure::{EmpiricalMeasure, Provenance};
use crate::orthopoly::OrthoBasis;
use crate::roots;

pub const DEFAULT_K_MAX: usize = 200;
pub const DEFAULT_GREEN_TOL: f64 = 1e-10;
pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_CHAINS: usize = 64;
pub const DEFAULT_GRID: usize = 512;
/// Seed domain for per-chain streams, see [`math::derive_seed`].
pub const CHAIN_SEED_DOMAIN: u64 = 2;

/// A polynomial of degree `d ≥ 2` with ascending monomial coefficients.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolyDyn {
    pub coeffs: Vec<Complex64>,
    pub degree: usize,
    pub gamma: Complex64,
    pub escape_radius: f64,
}

impl PolyDyn {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        let escape_radius = escape_radius(&coeffs)?;
        let degree = coeffs.len() - 1;
        Ok(PolyDyn { gamma: coeffs[degree], degree, coeffs, escape_radius })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `P_n` of an orthonormal basis.
    pub fn from_basis(b: &OrthoBasis, n: usize) -> Result<Self> {
        let c = b.coeffs.get(n).ok_or(Error::OutOfRange { index: n, max: b.max_degree })?;
        Self::new(c.clone())
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut p = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        p
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        roots::eval_with_derivative(&self.coeffs, z).1
    }

    /// `ln|P(z)|` without forming `P(z)`, valid for `|z| ≥ 1`.
    fn log_abs_eval_large(&self, z: Complex64) -> f64 {
        let u = z.inv();
        let mut q = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter() {
            q = q * u + c / self.gamma;
        }
        // q = Σ a_i/γ u^{d-i}; P(z) = γ z^d q.
        math::ln(math::cabs(self.gamma)) + self.degree as f64 * math::ln(math::cabs(z)) + math::ln(math::cabs(q))
    }

    /// `Σ_{i<d} |a_i| / |γ|`.
    fn tail_ratio(&self) -> f64 {
        self.coeffs[..self.degree].iter().map(|c| math::cabs(*c)).sum::<f64>() / math::cabs(self.gamma)
    }
}

/// `R = max(1, (2 + Σ_{i<d} |a_i|) / |γ|)`, so `|z| > R` implies `|P(z)| ≥ 2|z|`.
pub fn escape_radius(coeffs: &[Complex64]) -> Result<f64> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == Complex64::new(0.0, 0.0) {
        hi -= 1;
    }
    if hi < 3 {
        return Err(Error::DegreeTooLow(hi.saturating_sub(1)));
    }
    let d = hi - 1;
    let tail: f64 = coeffs[..d].iter().map(|c| math::cabs(*c)).sum();
    Ok(((2.0 + tail) / math::cabs(coeffs[d])).max(1.0))
}

/// Outcome of iterating one starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    /// Green's function estimate, `0` if the orbit stayed in the disk.
    pub green: f64,
    /// `1 + k` for the first `k ≥ 0` with `|P^k(z)| > R`; `0` if none up to `k_max`.
    pub escaped_at: u32,
}

/// Modulus above which the next iterate is taken in the log domain.
fn overflow_guard(d: usize) -> f64 {
    math::powf(10.0, (250.0 / d as f64).min(100.0))
}

pub fn orbit(p: &PolyDyn, z: Complex64, k_max: usize, tol: f64) -> Orbit {
    let d = p.degree as f64;
    let r = p.escape_radius;
    let shift = math::ln(math::cabs(p.gamma)) / (d - 1.0);
    let tail = p.tail_ratio();
    let guard = overflow_guard(p.degree);
    let mut z = z;
    let mut k = 0usize;
    while math::cabs(z) <= r {
        if k >= k_max {
            return Orbit { green: 0.0, escaped_at: 0 };
        }
        z = p.eval(z);
        k += 1;
    }
    let escaped_at = (k + 1) as u32;
    // ln|z_{k+1}| + shift = d (ln|z_k| + shift) + ln|1 + Σ a_i/(γ z^{d-i})|, and the last
    // term is at most -ln(1 - tail/|z|) once tail < |z|.
    let mut scale = math::powf(d, -(k as f64));
    loop {
        let next_log = p.log_abs_eval_large(z);
        scale /= d;
        let estimate = scale * (next_log + shift);
        let s = tail * math::exp(-next_log);
        let remaining = if s < 0.5 { 2.0 * s * scale / d } else { f64::INFINITY };
        if remaining <= tol || math::cabs(z) > guard || k >= k_max + 64 || !next_log.is_finite() {
            return Orbit { green: estimate.max(f64::MIN_POSITIVE), escaped_at };
        }
        z = p.eval(z);
        k += 1;
    }
}

/// `g_P(z) = lim d^{-k} log⁺|P^k(z)|`.
pub fn green_value(p: &PolyDyn, z: Complex64, k_max: usize, tol: f64) -> Result<f64> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    Ok(orbit(p, z, k_max, tol).green)
}

/// Green's function and escape times sampled at pixel centers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub escaped_at: Vec<u32>,
    pub k_max: usize,
    /// No pixel center stayed bounded: `K_P` is thinner than the grid.
    pub below_resolution: bool,
}

impl GridField {
    /// Pixels whose orbit never left the disk of radius `R`.
    pub fn filled_mask(&self) -> Vec<bool> {
        self.escaped_at.iter().map(|&e| e == 0).collect()
    }
}

pub fn filled_julia_grid<E: Exec>(exec: &E, p: &PolyDyn, lattice: Lattice, k_max: usize, tol: f64) -> Result<GridField> {
    if !lattice.rect.covers_disk(Complex64::new(0.0, 0.0), p.escape_radius) {
        return Err(Error::GridTooSmall { radius: p.escape_radius });
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let rows = exec.map_indexed(lattice.ny, |j| {
        (0..lattice.nx).map(|i| orbit(p, lattice.center(i, j), k_max, tol)).collect::<Vec<_>>()
    });
    let mut values = Vec::with_capacity(lattice.len());
    let mut escaped_at = Vec::with_capacity(lattice.len());
    for o in rows.into_iter().flatten() {
        values.push(o.green);
        escaped_at.push(o.escaped_at);
    }
    let below_resolution = escaped_at.iter().all(|&e| e != 0);
    Ok(GridField { lattice, values, escaped_at, k_max, below_resolution })
}

/// The `d` solutions of `P(z) = w`, with multiplicity.
pub fn preimages(p: &PolyDyn, w: Complex64, tol: f64) -> Result<Vec<Complex64>> {
    let mut c = p.coeffs.clone();
    c[0] -= w;
    roots::roots(&c, tol, 1.0 + math::cabs(w))
}

/// Samples of the Brolin measure by random backward iteration.
///
/// Chain `c` starts at `R + 0i`, is seeded with `derive_seed(seed, 2, c)` and
/// contributes samples `c, c + chains, c + 2 chains, ...`.
pub fn brolin_sample<E: Exec>(
    exec: &E,
    p: &PolyDyn,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
    chains: usize,
) -> Result<EmpiricalMeasure> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    if burn_in < 20 {
        return Err(Error::InvalidArgument("burn_in must be >= 20".into()));
    }
    let chains = chains.clamp(1, n_samples);
    let runs = exec.map_indexed(chains, |c| {
        let len = (n_samples - c).div_ceil(chains);
        run_chain(p, len, burn_in, math::derive_seed(seed, CHAIN_SEED_DOMAIN, c as u64)).map_err(|e| match e {
            Error::RootsNotConverged { max_residual, residuals, .. } => {
                Error::RootsNotConverged { chain: Some(c), max_residual, residuals }
            }
            other => other,
        })
    });
    let mut per_chain = Vec::with_capacity(chains);
    for r in runs {
        per_chain.push(r?);
    }
    let points = (0..n_samples).map(|i| per_chain[i % chains][i / chains]).collect();
    let mut m = EmpiricalMeasure::uniform(points, Provenance::Brolin);
    m.seed = seed;
    m.chains = chains;
    Ok(m)
}

fn run_chain(p: &PolyDyn, len: usize, burn_in: usize, seed: u64) -> Result<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Complex64::new(p.escape_radius, 0.0);
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        let pre = preimages(p, z, roots::POLISH_TOL)?;
        z = pre[rng.gen_range(0..pre.len())];
        if step >= burn_in {
            out.push(z);
        }
    }
    Ok(out)
}

/// Fixed point of `P` with the largest multiplier; it lies on `J_P` whenever
/// that multiplier exceeds one in modulus.
pub fn most_repelling_fixed_point(p: &PolyDyn) -> Result<Complex64> {
    let mut c = p.coeffs.clone();
    c[1] -= Complex64::new(1.0, 0.0);
    let fixed = roots::roots(&c, roots::POLISH_TOL, 1.0)?;
    let mut best = fixed[0];
    for z in fixed {
        if math::cabs(p.derivative(z)) > math::cabs(p.derivative(best)) {
            best = z;
        }
    }
    Ok(best)
}

/// All `d^k` iterated preimages of the most repelling fixed point, with the
/// largest `k` such that `d^k ≤ max_points`, equally weighted.
///
/// Deterministic counterpart of [`brolin_sample`]; its discretization error
/// decays geometrically in `k` instead of like `N^{-1/2}`.
pub fn brolin_tree(p: &PolyDyn, max_points: usize) -> Result<EmpiricalMeasure> {
    let mut level = vec![most_repelling_fixed_point(p)?];
    while level.len() * p.degree <= max_points.max(1) {
        let mut next = Vec::with_capacity(level.len() * p.degree);
        for w in &level {
            next.extend(preimages(p, *w, roots::POLISH_TOL)?);
        }
        level = next;
    }
    Ok(EmpiricalMeasure::uniform(level, Provenance::Brolin))
}

/// `Cap(K_P) = |γ|^{-1/(d-1)}`.
pub fn capacity_julia(p: &PolyDyn) -> f64 {
    math::powf(math::cabs(p.gamma), -1.0 / (p.degree as f64 - 1.0))
}

/// Capacity from the expansion `g(z) = log|z| - log Cap + o(1)`.
///
/// `g - log|z|` is harmonic near infinity, so its mean over the circle
/// `|z| = 4R` equals `-log Cap`; the mean is taken over 64 equally spaced points.
pub fn capacity_from_green(p: &PolyDyn, k_max: usize, tol: f64) -> Result<f64> {
    let r = 4.0 * p.escape_radius;
    let m = 64;
    let mut acc = 0.0;
    for k in 0..m {
        let z = math::cis(math::TAU * (k as f64 + 0.5) / m as f64) * r;
        acc += green_value(p, z, k_max, tol)? - math::ln(r);
    }
    Ok(math::exp(-acc / m as f64))
}

/// `max |g(P(z)) - d g(z)|` over the sample points.
pub fn functional_equation_residual(p: &PolyDyn, points: &[Complex64], k_max: usize, tol: f64) -> f64 {
    let d = p.degree as f64;
    points
        .iter()
        .map(|&z| {
            let g = orbit(p, z, k_max, tol).green;
            let gp = orbit(p, p.eval(z), k_max, tol).green;
            (gp - d * g).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::grid::{segment_distance, Rect};
    use crate::stats;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z2() -> PolyDyn {
        PolyDyn::from_real(&[0.0, 0.0, 1.0]).unwrap()
    }

    fn cheb() -> PolyDyn {
        PolyDyn::from_real(&[-2.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn escape_radius_examples() {
        assert_eq!(z2().escape_radius, 2.0);
        assert_eq!(cheb().escape_radius, 4.0);
        assert_eq!(PolyDyn::from_real(&[0.0, 0.0, 0.0, 2.0]).unwrap().escape_radius, 1.0);
        assert!(matches!(PolyDyn::from_real(&[1.0, 3.0]), Err(Error::DegreeTooLow(1))));
    }

    #[test]
    fn escape_contract_on_sampled_circle() {
        for p in [z2(), cheb(), PolyDyn::new(vec![c(0.3, -1.0), c(2.0, 0.5), c(0.0, 1.0), c(0.5, 0.0)]).unwrap()] {
            let r = p.escape_radius * (1.0 + 1e-9);
            for k in 0..360 {
                let z = math::cis(k as f64 * math::TAU / 360.0) * r;
                assert!(p.eval(z).norm() >= 2.0 * z.norm());
            }
        }
    }

    #[test]
    fn green_examples() {
        let g = green_value(&z2(), c(2.0, 0.0), 200, 1e-12).unwrap();
        assert!((g - math::ln(2.0)).abs() < 1e-12);
        assert_eq!(green_value(&z2(), c(0.5, 0.0), 200, 1e-12).unwrap(), 0.0);
        let g = green_value(&cheb(), c(3.0, 0.0), 200, 1e-10).unwrap();
        let exact = math::ln((3.0 + math::sqrt(5.0)) / 2.0);
        assert!((g - exact).abs() < 1e-8, "{g} vs {exact}");
    }

    #[test]
    fn green_matches_plain_iteration_oracle() {
        // Naive d^{-k} ln|P^k(z)| at a moderate k, before overflow.
        let p = cheb();
        for z in [c(0.3, 0.2), c(-1.0, 1.5), c(2.5, -0.1)] {
            let mut w = z;
            let mut k = 0;
            while w.norm() < 1e60 {
                w = p.eval(w);
                k += 1;
            }
            let naive = math::ln(w.norm()) / math::powf(2.0, k as f64);
            let g = green_value(&p, z, 200, 1e-12).unwrap();
            assert!((g - naive).abs() < 1e-9, "{g} vs {naive}");
        }
    }

    #[test]
    fn green_asymptotics_match_capacity() {
        for p in [cheb(), PolyDyn::from_real(&[0.1, -0.4, 0.0, 2.0]).unwrap()] {
            let z = c(1e6, 3e5);
            let g = green_value(&p, z, 200, 1e-12).unwrap();
            assert!((g - math::ln(z.norm()) + math::ln(capacity_julia(&p))).abs() < 1e-4);
        }
    }

    #[test]
    fn capacity_two_ways() {
        let two_z3 = PolyDyn::from_real(&[0.0, 0.0, 0.0, 2.0]).unwrap();
        for (p, exact) in [(cheb(), 1.0), (two_z3, math::powf(2.0, -0.5))] {
            assert!((capacity_julia(&p) - exact).abs() < 1e-14);
            assert!((capacity_from_green(&p, 200, 1e-12).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_unit_disk() {
        let lat = Lattice::new(Rect::new(-2.0, 2.0, -2.0, 2.0).unwrap(), 512, 512).unwrap();
        let f = filled_julia_grid(&Sequential, &z2(), lat, 200, 1e-10).unwrap();
        let h = lat.dx();
        for (idx, &e) in f.escaped_at.iter().enumerate() {
            let z = lat.center_of(idx);
            let inside = z.norm() <= 1.0;
            assert_eq!(e == 0, f.values[idx] == 0.0);
            assert!(f.values[idx] >= 0.0);
            if inside != (e == 0) {
                assert!((z.norm() - 1.0).abs() <= h, "pixel {z} misclassified");
            }
        }
        assert!(!f.below_resolution);
    }

    #[test]
    fn grid_chebyshev_segment() {
        let lat = Lattice::new(Rect::new(-4.0, 4.0, -4.0, 4.0).unwrap(), 256, 256).unwrap();
        let f = filled_julia_grid(&Sequential, &cheb(), lat, 200, 1e-10).unwrap();
        let h = lat.dx();
        for (idx, &e) in f.escaped_at.iter().enumerate() {
            if e == 0 {
                assert!(segment_distance(lat.center_of(idx), c(-2.0, 0.0), c(2.0, 0.0)) <= h);
            }
        }
    }

    #[test]
    fn grid_cantor_dust_is_below_resolution() {
        let p = PolyDyn::from_real(&[10.0, 0.0, 1.0]).unwrap();
        // Oracle: the critical point 0 escapes, so K_P is totally disconnected.
        let mut w = c(0.0, 0.0);
        let mut escaped = false;
        for _ in 0..50 {
            w = p.eval(w);
            if w.norm() > p.escape_radius {
                escaped = true;
                break;
            }
        }
        assert!(escaped);
        let r = p.escape_radius;
        let lat = Lattice::new(Rect::new(-r, r, -r, r).unwrap(), 128, 128).unwrap();
        let f = filled_julia_grid(&Sequential, &p, lat, 200, 1e-10).unwrap();
        assert!(f.below_resolution);
        assert!(f.filled_mask().iter().all(|m| !m));
    }

    #[test]
    fn grid_must_cover_escape_disk() {
        let lat = Lattice::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 8, 8).unwrap();
        assert!(matches!(filled_julia_grid(&Sequential, &z2(), lat, 200, 1e-10), Err(Error::GridTooSmall { .. })));
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v
    }

    #[test]
    fn preimage_examples() {
        let r = sorted_re(preimages(&z2(), c(4.0, 0.0), 1e-12).unwrap());
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-14 && (r[1] - c(2.0, 0.0)).norm() < 1e-14);
        let r = sorted_re(preimages(&cheb(), c(2.0, 0.0), 1e-12).unwrap());
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-14 && (r[1] - c(2.0, 0.0)).norm() < 1e-14);
        let p = PolyDyn::from_real(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let r = sorted_re(preimages(&p, c(0.0, 0.0), 1e-12).unwrap());
        for (x, e) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((x - c(e, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn brolin_circle() {
        let m = brolin_sample(&Sequential, &z2(), 10_000, 50, 7, 64).unwrap();
        assert!(m.points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
        let mut u: Vec<f64> = m.points.iter().map(|z| (math::atan2(z.im, z.re) + math::PI) / math::TAU).collect();
        assert!(stats::ks_statistic(&mut u, |x| x.clamp(0.0, 1.0)) < 0.02);
    }

    #[test]
    fn brolin_chebyshev_is_arcsine() {
        let m = brolin_sample(&Sequential, &cheb(), 10_000, 50, 11, 64).unwrap();
        assert!(m.points.iter().all(|z| z.im.abs() < 1e-6 && z.re.abs() <= 2.0 + 1e-9));
        let mut x: Vec<f64> = m.points.iter().map(|z| z.re).collect();
        let d = stats::ks_statistic(&mut x, |x| math::acos((-x / 2.0).clamp(-1.0, 1.0)) / math::PI);
        assert!(d < 0.02, "KS {d}");
    }

    #[test]
    fn brolin_is_deterministic_and_confined() {
        let p = PolyDyn::new(vec![c(-0.12, 0.75), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let a = brolin_sample(&Sequential, &p, 10_000, 50, 99, 64).unwrap();
        let b = brolin_sample(&Sequential, &p, 10_000, 50, 99, 64).unwrap();
        assert!(a.points.iter().zip(&b.points).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        assert!(a.max_modulus() <= p.escape_radius);
    }

    #[test]
    fn brolin_is_invariant_under_pushforward() {
        let p = cheb();
        let a = brolin_sample(&Sequential, &p, 10_000, 50, 1, 64).unwrap();
        let b = brolin_sample(&Sequential, &p, 10_000, 50, 2, 64).unwrap();
        let mut pushed: Vec<f64> = a.points.iter().map(|z| p.eval(*z).re).collect();
        let mut fresh: Vec<f64> = b.points.iter().map(|z| z.re).collect();
        assert!(stats::ks_two_sample(&mut pushed, &mut fresh) < 0.03);
    }

    #[test]
    fn brolin_tree_on_chebyshev() {
        let t = brolin_tree(&cheb(), 4096).unwrap();
        assert_eq!(t.len(), 4096);
        let mut x: Vec<f64> = t.points.iter().map(|z| z.re).collect();
        assert!(stats::ks_statistic(&mut x, |x| math::acos((-x / 2.0).clamp(-1.0, 1.0)) / math::PI) < 2e-3);
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_julia(&cheb()), 1.0);
        let p = PolyDyn::from_real(&[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!((capacity_julia(&p) - 0.70711).abs() < 1e-5);
        for n in 2..10 {
            let mut a = vec![0.0; n + 1];
            a[n] = 1.0;
            assert_eq!(capacity_julia(&PolyDyn::from_real(&a).unwrap()), 1.0);
        }
    }

    #[test]
    fn functional_equation() {
        assert!(functional_equation_residual(&z2(), &[c(3.0, 0.0)], 200, 1e-12) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Complex64> = (0..100)
            .map(|_| math::cis(rng.gen_range(0.0..math::TAU)) * rng.gen_range(2.0..4.0))
            .collect();
        assert!(functional_equation_residual(&cheb(), &pts, 200, 1e-10) < 1e-8);
        assert_eq!(functional_equation_residual(&cheb(), &[c(0.5, 0.0), c(-1.9, 0.0)], 200, 1e-10), 0.0);
    }
}
