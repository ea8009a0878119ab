//! Orthonormal polynomials `P_n(z) = γ_n z^n + ...` of a quadrature measure.
//!
//! The basis is built by orthogonalizing Krylov vectors `z^k` in node space
//! (Arnoldi with a second Gram-Schmidt pass), never from the moment matrix.
//! The Hessenberg entries of that process give the monomial coefficients
//! through `P_{k+1} = (z P_k - Σ_{j≤k} h_{jk} P_j) / h_{k+1,k}`.
//!
//! Monomial coefficients cancel badly for interval measures (the ratio of
//! `Σ|c_j| |z|^j` to `|P_n(z)|` grows like `(1+√2)^n`), so the construction
//! is repeated at 53, 113, 256 and 1024 mantissa bits until the stored
//! coefficients pass the orthonormality tolerance. Coefficients computed
//! above `f64` precision are kept as `f64` expansions ([`OrthoBasis::coeff_tails`]).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::measure::QuadratureMeasure;
use crate::precision::{Cplx, Mp, Real};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEGREE: usize = 64;
/// Largest working precision tried by [`orthonormal_basis`].
pub const DEFAULT_MAX_BITS: u32 = 1024;

const PRECISION_LADDER: [u32; 4] = [53, 113, 256, 1024];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrthoBasis {
    pub max_degree: usize,
    /// `coeffs[n][j]` is the coefficient of `z^j` in `P_n` (nearest `f64`).
    pub coeffs: Vec<Vec<Complex64>>,
    /// Lower-order parts: `coeffs[n][j] + Σ_k coeff_tails[n][j][k]` is the
    /// coefficient at working precision. Empty when `precision_bits == 53`.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub coeff_tails: Vec<Vec<Vec<Complex64>>>,
    pub gammas: Vec<f64>,
    /// Decimal digits of the working precision that met the tolerance.
    pub precision_used: u32,
    pub precision_bits: u32,
    /// `max_{j,k} |<P_j, P_k> - δ_jk|` over the construction quadrature.
    pub residual: f64,
}

impl OrthoBasis {
    /// Monic polynomial `p_n = P_n / γ_n` (leading `f64` parts only).
    pub fn monic(&self, n: usize) -> Vec<Complex64> {
        let g = self.gammas[n];
        self.coeffs[n].iter().map(|c| c / g).collect()
    }

    /// Copy restricted to degrees `0..=n`.
    pub fn truncated(&self, n: usize) -> OrthoBasis {
        OrthoBasis {
            max_degree: n,
            coeffs: self.coeffs[..=n].to_vec(),
            coeff_tails: if self.coeff_tails.is_empty() { Vec::new() } else { self.coeff_tails[..=n].to_vec() },
            gammas: self.gammas[..=n].to_vec(),
            precision_used: self.precision_used,
            precision_bits: self.precision_bits,
            residual: self.residual,
        }
    }

    fn coefficient<R: Real>(&self, n: usize, j: usize) -> Cplx<R> {
        let head = self.coeffs[n][j];
        let mut re = vec![head.re];
        let mut im = vec![head.im];
        if let Some(tail) = self.coeff_tails.get(n).and_then(|t| t.get(j)) {
            re.extend(tail.iter().map(|c| c.re));
            im.extend(tail.iter().map(|c| c.im));
        }
        Cplx::new(R::from_f64_expansion(&re), R::from_f64_expansion(&im))
    }

    fn horner<R: Real>(&self, n: usize, z: Complex64) -> Complex64 {
        let z = Cplx::<R>::from_c64(z);
        let mut acc = Cplx::<R>::zero();
        for j in (0..=n).rev() {
            acc = acc * z + self.coefficient::<R>(n, j);
        }
        acc.to_c64()
    }

    /// Value of `P_n` at each point, evaluated at the basis' precision.
    pub fn values(&self, n: usize, points: &[Complex64]) -> Vec<Complex64> {
        points.iter().map(|&z| self.eval_unchecked(n, z)).collect()
    }

    fn eval_unchecked(&self, n: usize, z: Complex64) -> Complex64 {
        match self.precision_bits {
            0..=53 => self.horner::<f64>(n, z),
            54..=113 => self.horner::<Mp<113>>(n, z),
            114..=256 => self.horner::<Mp<256>>(n, z),
            _ => self.horner::<Mp<1024>>(n, z),
        }
    }
}

/// Orthonormal basis up to degree `max_degree` with the default precision budget.
pub fn orthonormal_basis(q: &QuadratureMeasure, max_degree: usize, tol: f64) -> Result<OrthoBasis> {
    orthonormal_basis_with(q, max_degree, tol, DEFAULT_MAX_BITS)
}

/// Orthonormal basis, escalating working precision up to `max_bits`.
///
/// On failure the error carries the largest degree whose leading block met
/// `tol` at the last precision tried, together with that truncated basis.
pub fn orthonormal_basis_with(
    q: &QuadratureMeasure,
    max_degree: usize,
    tol: f64,
    max_bits: u32,
) -> Result<OrthoBasis> {
    if max_degree < 1 {
        return Err(Error::InvalidArgument("max_degree must be >= 1".into()));
    }
    q.validate()?;
    let distinct = q.distinct_nodes();
    if distinct < max_degree + 1 {
        return Err(Error::DegenerateQuadrature { distinct, needed: max_degree + 1 });
    }
    let mut last: Option<(OrthoBasis, Vec<f64>)> = None;
    for &bits in PRECISION_LADDER.iter().filter(|&&b| b <= max_bits.max(53)) {
        let attempt = match bits {
            53 => build::<f64>(q, max_degree),
            113 => build::<Mp<113>>(q, max_degree),
            256 => build::<Mp<256>>(q, max_degree),
            _ => build::<Mp<1024>>(q, max_degree),
        };
        let Some((basis, prefix)) = attempt else { continue };
        if basis.residual <= tol {
            return Ok(basis);
        }
        last = Some((basis, prefix));
    }
    match last {
        Some((basis, prefix)) => {
            let largest = prefix.iter().take_while(|&&r| r <= tol).count().saturating_sub(1);
            let mut partial = basis.truncated(largest);
            partial.residual = prefix[largest];
            Err(Error::PrecisionExhausted { largest_degree: largest, partial: Some(Box::new(partial)) })
        }
        None => Err(Error::DegenerateQuadrature { distinct, needed: max_degree + 1 }),
    }
}

/// Runs the Arnoldi construction at precision `R`. Returns the basis and the
/// orthonormality defect of each leading block, or `None` on breakdown.
fn build<R: Real>(q: &QuadratureMeasure, n_max: usize) -> Option<(OrthoBasis, Vec<f64>)> {
    let m = q.nodes.len();
    let nodes: Vec<Cplx<R>> = q.nodes.iter().map(|&z| Cplx::from_c64(z)).collect();
    let w: Vec<R> = q.weights.iter().map(|&x| R::from_f64(x)).collect();
    let inner = |a: &[Cplx<R>], b: &[Cplx<R>]| {
        let mut s = Cplx::<R>::zero();
        for i in 0..m {
            s = s + (a[i] * b[i].conj()).scale(w[i]);
        }
        s
    };

    let mass = w.iter().fold(R::zero(), |acc, &x| acc + x);
    let c0 = R::one() / mass.sqrt();
    let mut basis_vals: Vec<Vec<Cplx<R>>> = vec![vec![Cplx::new(c0, R::zero()); m]];
    let mut coeffs: Vec<Vec<Cplx<R>>> = vec![vec![Cplx::new(c0, R::zero())]];
    let mut gammas = vec![c0];

    for k in 0..n_max {
        let mut v: Vec<Cplx<R>> = (0..m).map(|i| nodes[i] * basis_vals[k][i]).collect();
        let mut h = vec![Cplx::<R>::zero(); k + 1];
        for _pass in 0..2 {
            for j in 0..=k {
                let proj = inner(&v, &basis_vals[j]);
                for i in 0..m {
                    v[i] = v[i] - proj * basis_vals[j][i];
                }
                h[j] = h[j] + proj;
            }
        }
        let beta = inner(&v, &v).re.sqrt();
        if !(beta.to_f64() > 0.0) {
            return None;
        }
        let inv = R::one() / beta;
        basis_vals.push(v.iter().map(|x| x.scale(inv)).collect());

        let mut c = vec![Cplx::<R>::zero(); k + 2];
        for (j, cj) in coeffs[k].iter().enumerate() {
            c[j + 1] = c[j + 1] + *cj;
        }
        for (j, hj) in h.iter().enumerate() {
            for (l, cl) in coeffs[j].iter().enumerate() {
                c[l] = c[l] - *hj * *cl;
            }
        }
        let c: Vec<Cplx<R>> = c.iter().map(|x| x.scale(inv)).collect();
        gammas.push(gammas[k] * inv);
        coeffs.push(c);
    }

    // Store, then measure the defect of exactly what was stored.
    let wide = R::BITS > 53;
    let mut heads = Vec::with_capacity(n_max + 1);
    let mut tails = Vec::new();
    for row in &coeffs {
        let mut head_row = Vec::with_capacity(row.len());
        let mut tail_row = Vec::with_capacity(row.len());
        for c in row {
            let re = c.re.to_f64_expansion();
            let im = c.im.to_f64_expansion();
            head_row.push(Complex64::new(re[0], im[0]));
            let len = re.len().max(im.len());
            tail_row.push(
                (1..len)
                    .map(|k| Complex64::new(re.get(k).copied().unwrap_or(0.0), im.get(k).copied().unwrap_or(0.0)))
                    .collect::<Vec<_>>(),
            );
        }
        heads.push(head_row);
        tails.push(tail_row);
    }
    let mut basis = OrthoBasis {
        max_degree: n_max,
        coeffs: heads,
        coeff_tails: if wide { tails } else { Vec::new() },
        gammas: gammas.iter().map(|g| g.to_f64()).collect(),
        precision_used: R::digits(),
        precision_bits: R::BITS,
        residual: 0.0,
    };

    let stored: Vec<Vec<Cplx<R>>> = (0..=n_max)
        .map(|n| {
            let cs: Vec<Cplx<R>> = (0..=n).map(|j| basis.coefficient::<R>(n, j)).collect();
            nodes
                .iter()
                .map(|&z| cs.iter().rev().fold(Cplx::<R>::zero(), |acc, &c| acc * z + c))
                .collect()
        })
        .collect();
    let prefix = block_defects(n_max, |j, k| inner(&stored[j], &stored[k]).to_c64());
    basis.residual = prefix[n_max];
    Some((basis, prefix))
}

/// `out[n] = max_{j,k≤n} |G(j,k) - δ_jk|`.
fn block_defects(n_max: usize, gram: impl Fn(usize, usize) -> Complex64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let mut running: f64 = 0.0;
    for n in 0..=n_max {
        for j in 0..=n {
            let g = gram(j, n);
            let target = if j == n { 1.0 } else { 0.0 };
            running = running.max((g - Complex64::new(target, 0.0)).norm());
        }
        out[n] = running;
    }
    out
}

/// Orthonormality defect of `b` measured against an arbitrary quadrature.
pub fn orthonormality_defect(b: &OrthoBasis, q: &QuadratureMeasure) -> f64 {
    let vals: Vec<Vec<Complex64>> = (0..=b.max_degree).map(|n| b.values(n, &q.nodes)).collect();
    let defects = block_defects(b.max_degree, |j, k| {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..q.nodes.len() {
            s += vals[j][i] * vals[k][i].conj() * q.weights[i];
        }
        s
    });
    defects[b.max_degree]
}

/// `P_n(z)` by Horner's rule on the stored coefficients.
pub fn evaluate_poly(b: &OrthoBasis, n: usize, z: Complex64) -> Result<Complex64> {
    if n > b.max_degree {
        return Err(Error::OutOfRange { index: n, max: b.max_degree });
    }
    Ok(b.eval_unchecked(n, z))
}

/// `γ_n^{1/n}` for `n = 1..=N`.
pub fn gamma_root_sequence(b: &OrthoBasis) -> Vec<f64> {
    (1..=b.max_degree)
        .map(|n| math::exp(math::ln(b.gammas[n]) / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimalityReport {
    pub min_ratio: f64,
    pub passed: bool,
}

/// Pass threshold for [`monic_minimality_check`].
pub const MINIMALITY_SLACK: f64 = 1e-10;

/// Compares `‖p_n + q‖` with `‖p_n‖` in `L²(q)` for random lower-degree `q`.
///
/// Each perturbation has coefficients drawn uniformly from `[-1, 1]`
/// (complex unless `real_coefficients`), is scaled to unit `L²` norm and
/// then to an amplitude drawn log-uniformly from `[1e-3, 1]`.
pub fn monic_minimality_check(
    b: &OrthoBasis,
    q: &QuadratureMeasure,
    n: usize,
    trials: usize,
    seed: u64,
    real_coefficients: bool,
) -> Result<MinimalityReport> {
    if n > b.max_degree {
        return Err(Error::OutOfRange { index: n, max: b.max_degree });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let g = b.gammas[n];
    let p: Vec<Complex64> = b.values(n, &q.nodes).iter().map(|v| v / g).collect();
    let norm = |vals: &[Complex64]| -> f64 {
        math::sqrt(vals.iter().zip(&q.weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>())
    };
    let p_norm = norm(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(math::derive_seed(seed, 3, n as u64));
    let mut min_ratio = f64::INFINITY;
    for _ in 0..trials {
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| {
                let re = rng.gen_range(-1.0..=1.0);
                let im = if real_coefficients { 0.0 } else { rng.gen_range(-1.0..=1.0) };
                Complex64::new(re, im)
            })
            .collect();
        let amplitude = libm::pow(10.0, rng.gen_range(-3.0..=0.0));
        let pert: Vec<Complex64> = q
            .nodes
            .iter()
            .map(|&z| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c))
            .collect();
        let pn = norm(&pert);
        if !(pn > 0.0) {
            continue;
        }
        let s = amplitude / pn;
        let sum: Vec<Complex64> = p.iter().zip(&pert).map(|(a, e)| a + e * s).collect();
        min_ratio = min_ratio.min(norm(&sum) / p_norm);
    }
    Ok(MinimalityReport { min_ratio, passed: min_ratio >= 1.0 - MINIMALITY_SLACK })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_quadrature, Density, MeasureSpec};

    fn circle_q(n: usize) -> QuadratureMeasure {
        make_quadrature(&MeasureSpec::circle(Complex64::new(0.0, 0.0), 1.0), n).unwrap()
    }

    #[test]
    fn circle_basis_is_monomials() {
        let b = orthonormal_basis(&circle_q(64), 5, DEFAULT_TOL).unwrap();
        for n in 0..=5 {
            assert!((b.gammas[n] - 1.0).abs() < 1e-12);
            for (j, c) in b.coeffs[n].iter().enumerate() {
                let e = if j == n { 1.0 } else { 0.0 };
                assert!((c - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
        assert_eq!(b.precision_bits, 53);
        let v = evaluate_poly(&b, 3, Complex64::new(2.0, 0.0)).unwrap();
        assert!((v - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!(gamma_root_sequence(&b).iter().all(|g| (g - 1.0).abs() < 1e-12));
    }

    #[test]
    fn legendre_p2_closed_form() {
        // For the probability measure dx/2 on [-1, 1], P_n = √(2n+1) L_n.
        // Against plain dx the normalization is √(n + 1/2) L_n, a factor √2 apart.
        let q = make_quadrature(&MeasureSpec::interval(-1.0, 1.0, Density::Lebesgue), 16).unwrap();
        let b = orthonormal_basis(&q, 3, DEFAULT_TOL).unwrap();
        let s = math::sqrt(5.0);
        let expect = [-s / 2.0, 0.0, 1.5 * s];
        for (c, e) in b.coeffs[2].iter().zip(expect) {
            assert!((c.re - e).abs() < 1e-12 && c.im.abs() < 1e-14, "{:?}", b.coeffs[2]);
        }
        assert!((b.gammas[2] - 1.5 * s).abs() < 1e-12);
        assert!((b.gammas[2] / core::f64::consts::SQRT_2 - 1.5 * math::sqrt(2.5)).abs() < 1e-12);
    }

    #[test]
    fn degree_zero_is_one_and_out_of_range_errors() {
        let q = make_quadrature(&MeasureSpec::interval(-2.0, 2.0, Density::Arcsine), 32).unwrap();
        let b = orthonormal_basis(&q, 4, DEFAULT_TOL).unwrap();
        let v = evaluate_poly(&b, 0, Complex64::new(0.3, -7.0)).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(matches!(evaluate_poly(&b, 5, Complex64::new(0.0, 0.0)), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn degenerate_quadrature_is_rejected() {
        let q = QuadratureMeasure::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![0.25, 0.25, 0.5],
            "atoms",
        )
        .unwrap();
        assert!(matches!(
            orthonormal_basis(&q, 2, DEFAULT_TOL),
            Err(Error::DegenerateQuadrature { distinct: 2, needed: 3 })
        ));
    }

    #[test]
    fn precision_escalates_for_high_degree_legendre() {
        let q = make_quadrature(&MeasureSpec::interval(-1.0, 1.0, Density::Lebesgue), 256).unwrap();
        let b = orthonormal_basis(&q, 30, DEFAULT_TOL).unwrap();
        assert!(b.precision_bits > 53, "bits {}", b.precision_bits);
        assert!(b.residual <= DEFAULT_TOL);
        match orthonormal_basis_with(&q, 30, DEFAULT_TOL, 53) {
            Err(Error::PrecisionExhausted { largest_degree, partial }) => {
                assert!(largest_degree < 30 && largest_degree >= 5);
                let p = partial.unwrap();
                assert_eq!(p.max_degree, largest_degree);
                assert!(p.residual <= DEFAULT_TOL);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn minimality_on_circle_and_counterexample() {
        let q = circle_q(64);
        let b = orthonormal_basis(&q, 4, DEFAULT_TOL).unwrap();
        let r = monic_minimality_check(&b, &q, 2, 100, 7, false).unwrap();
        assert!(r.passed && r.min_ratio >= 1.0);

        let mut wrong = b.clone();
        // p_2 + 0.1 in monic terms.
        wrong.coeffs[2][0] += Complex64::new(0.1 * wrong.gammas[2], 0.0);
        let r = monic_minimality_check(&wrong, &q, 2, 100, 7, true).unwrap();
        assert!(!r.passed && r.min_ratio < 1.0, "{r:?}");
    }
}
