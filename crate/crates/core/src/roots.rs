//! Polynomial roots: Aberth-Ehrlich simultaneous iteration, then Newton polishing.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

pub const ABERTH_MAX_ITER: usize = 200;
/// Relative residual target for polished roots.
pub const POLISH_TOL: f64 = 1e-12;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `(p(z), p'(z), Σ|a_j||z|^j)`.
#[inline]
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = C0;
    let mut dp = C0;
    let mut mag = 0.0;
    let az = math::cabs(z);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        mag = mag * az + math::cabs(*c);
    }
    (p, dp, mag)
}

/// All roots of `Σ coeffs[j] z^j` (ascending coefficients, nonzero leading
/// term), with multiplicity.
///
/// A root is accepted when `|p(z)| ≤ max(tol * scale, 16 ε Σ|a_j||z|^j)`:
/// the second term is the rounding floor of evaluating `p` in `f64`.
/// Low-order coefficients below `4 ε Σ|a_j|` are treated as exact zeros and
/// deflated as roots at the origin.
pub fn roots(coeffs: &[Complex64], tol: f64, scale: f64) -> Result<Vec<Complex64>> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == C0 {
        hi -= 1;
    }
    if hi == 0 {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    let coeffs = &coeffs[..hi];
    let l1: f64 = coeffs.iter().map(|c| math::cabs(*c)).sum();
    let zeros_at_origin = coeffs[..hi - 1]
        .iter()
        .take_while(|c| math::cabs(**c) <= 4.0 * f64::EPSILON * l1)
        .count();
    let reduced = &coeffs[zeros_at_origin..];
    let mut out = vec![C0; zeros_at_origin];
    out.extend(nonzero_roots(reduced, tol, scale)?);
    Ok(out)
}

fn nonzero_roots(a: &[Complex64], tol: f64, scale: f64) -> Result<Vec<Complex64>> {
    let d = a.len() - 1;
    match d {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![-a[0] / a[1]]),
        2 => return Ok(quadratic(a).to_vec()),
        _ => {}
    }

    // Start on a circle around the centroid of the roots.
    let center = -a[d - 1] / (a[d] * d as f64);
    let (pc, _, _) = eval_with_derivative(a, center);
    let mut radius = math::powf(math::cabs(pc / a[d]), 1.0 / d as f64);
    if !(radius > 0.0 && radius.is_finite()) {
        radius = 1.0;
    }
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| center + math::cis(math::TAU * k as f64 / d as f64 + 0.7 / d as f64) * radius)
        .collect();

    let mut done = vec![false; d];
    for _ in 0..ABERTH_MAX_ITER {
        let mut moved = false;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp, _) = eval_with_derivative(a, z[i]);
            if p == C0 {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut s = C0;
            for j in 0..d {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff != C0 {
                        s += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * s;
            let step = if denom == C0 || !(ratio.re.is_finite() && ratio.im.is_finite()) {
                C0
            } else {
                ratio / denom
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if math::cabs(step) <= 4.0 * f64::EPSILON * (1.0 + math::cabs(z[i])) {
                done[i] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let mut residuals = Vec::with_capacity(d);
    let mut ok = true;
    for zi in z.iter_mut() {
        polish(a, zi);
        let (p, _, mag) = eval_with_derivative(a, *zi);
        let r = math::cabs(p);
        if !(r <= (tol * scale).max(16.0 * f64::EPSILON * mag)) {
            ok = false;
        }
        residuals.push(r);
    }
    if !ok {
        let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
        return Err(Error::RootsNotConverged { chain: None, max_residual, residuals });
    }
    Ok(z)
}

fn polish(a: &[Complex64], z: &mut Complex64) {
    let (mut p, mut dp, _) = eval_with_derivative(a, *z);
    for _ in 0..4 {
        if p == C0 || dp == C0 {
            return;
        }
        let cand = *z - p / dp;
        let (pc, dpc, _) = eval_with_derivative(a, cand);
        if math::cabs(pc) < math::cabs(p) {
            *z = cand;
            p = pc;
            dp = dpc;
        } else {
            return;
        }
    }
}

/// Roots of `a0 + a1 z + a2 z²` without cancellation.
fn quadratic(a: &[Complex64]) -> [Complex64; 2] {
    let (c, b, a2) = (a[0], a[1], a[2]);
    let disc = math::csqrt(b * b - a2 * c * 4.0);
    // Pick the sign that avoids cancellation in -b ± √disc.
    let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
    if q == C0 {
        return [C0, C0];
    }
    [q / a2, c / q]
}
