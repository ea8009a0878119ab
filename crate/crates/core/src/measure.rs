//! Compactly supported probability measures, their discrete quadrature
//! proxies, and logarithmic potentials, energies and capacities.
//!
//! Potentials follow the sign convention `p(z) = ∫ log|z - w| dμ(w)`, so
//! energies are maximized by equilibrium measures and `Cap = exp(I)`.
//! A value of `-∞` ([`NEG_INF`]) marks polar situations (an evaluation point
//! on an atom, coincident atoms); it is never `NaN`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{Exec, Sequential};
use crate::grid::Rect;
use crate::linalg;
use crate::math;

/// Sentinel for a logarithmic quantity equal to `-∞`.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Maximum nesting depth of [`MeasureKind::Mixture`].
pub const MAX_MIXTURE_DEPTH: usize = 4;

const WEIGHT_TOL: f64 = 1e-12;

/// Normalized density on an interval `[a, b]`, transported from `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Density {
    Lebesgue,
    Arcsine,
    /// Weight `(1 - t)^alpha (1 + t)^beta` on `[-1, 1]`.
    Jacobi { alpha: f64, beta: f64 },
}

impl Density {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "lebesgue" | "uniform" => Ok(Density::Lebesgue),
            "arcsine" | "chebyshev" => Ok(Density::Arcsine),
            other => Err(Error::UnknownDensity(other.into())),
        }
    }

    pub fn jacobi_parameters(&self) -> (f64, f64) {
        match *self {
            Density::Lebesgue => (0.0, 0.0),
            Density::Arcsine => (-0.5, -0.5),
            Density::Jacobi { alpha, beta } => (alpha, beta),
        }
    }

    /// Recurrence coefficients `(a_k, b_k)` of the monic orthogonal
    /// polynomials on `[-1, 1]`: `π_{k+1} = (t - a_k) π_k - b_k π_{k-1}`.
    /// Returns `a_0..a_{n-1}` and `b_1..b_{n-1}`.
    pub fn recurrence(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let (al, be) = self.jacobi_parameters();
        let ab = al + be;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            let kf = k as f64;
            if k == 0 {
                a.push((be - al) / (ab + 2.0));
            } else {
                let s = 2.0 * kf + ab;
                a.push((be * be - al * al) / (s * (s + 2.0)));
                let bk = if k == 1 {
                    4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
                } else {
                    4.0 * kf * (kf + al) * (kf + be) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
                };
                b.push(bk);
            }
        }
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    CircleUniform { center: Complex64, radius: f64 },
    Interval { a: f64, b: f64, density: Density },
    AtomicMixture(Vec<(Complex64, f64)>),
    Mixture(Vec<(MeasureSpec, f64)>),
    /// Nodes and weights supplied directly (read from a file by the caller).
    QuadratureTable(QuadratureMeasure),
}

/// Constructive description of a probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub label: String,
}

impl MeasureSpec {
    pub fn new(kind: MeasureKind, label: impl Into<String>) -> Self {
        MeasureSpec { kind, label: label.into() }
    }

    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self::new(MeasureKind::CircleUniform { center, radius }, "circle")
    }

    pub fn interval(a: f64, b: f64, density: Density) -> Self {
        let name = match density {
            Density::Lebesgue => "lebesgue",
            Density::Arcsine => "arcsine",
            Density::Jacobi { .. } => "jacobi",
        };
        Self::new(MeasureKind::Interval { a, b, density }, name)
    }

    /// Checks weights, nesting depth and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        self.validate_at(1)
    }

    fn validate_at(&self, depth: usize) -> Result<()> {
        match &self.kind {
            MeasureKind::CircleUniform { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("circle radius must be positive, got {radius}")));
                }
            }
            MeasureKind::Interval { a, b, density } => {
                if !(a < b && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("interval needs a < b, got [{a}, {b}]")));
                }
                let (al, be) = density.jacobi_parameters();
                if !(al > -1.0 && be > -1.0) {
                    return Err(Error::InvalidMeasure("jacobi exponents must exceed -1".into()));
                }
            }
            MeasureKind::AtomicMixture(atoms) => {
                check_weights(atoms.iter().map(|a| a.1))?;
                if atoms.iter().any(|a| !(a.0.re.is_finite() && a.0.im.is_finite())) {
                    return Err(Error::InvalidMeasure("non-finite atom".into()));
                }
            }
            MeasureKind::Mixture(parts) => {
                if depth > MAX_MIXTURE_DEPTH {
                    return Err(Error::InvalidMeasure(format!(
                        "mixtures nest deeper than {MAX_MIXTURE_DEPTH}"
                    )));
                }
                check_weights(parts.iter().map(|p| p.1))?;
                for (m, _) in parts {
                    m.validate_at(depth + 1)?;
                }
            }
            MeasureKind::QuadratureTable(q) => q.validate()?,
        }
        Ok(())
    }

    /// Bounding box of the support.
    pub fn support_bbox(&self) -> Rect {
        match &self.kind {
            MeasureKind::CircleUniform { center, radius } => Rect::centered(*center, *radius),
            MeasureKind::Interval { a, b, .. } => Rect { re_min: *a, re_max: *b, im_min: 0.0, im_max: 0.0 },
            MeasureKind::AtomicMixture(atoms) => bbox_of(atoms.iter().map(|a| a.0)),
            MeasureKind::Mixture(parts) => parts
                .iter()
                .map(|p| p.0.support_bbox())
                .reduce(|a, b| a.union(&b))
                .unwrap_or(Rect { re_min: 0.0, re_max: 0.0, im_min: 0.0, im_max: 0.0 }),
            MeasureKind::QuadratureTable(q) => bbox_of(q.nodes.iter().copied()),
        }
    }

    /// Points whose convex hull is the convex hull of the support, up to
    /// `sagitta` (the polygonal error for curved pieces).
    pub fn hull_points(&self) -> (Vec<Complex64>, f64) {
        const CIRCLE_VERTICES: usize = 720;
        match &self.kind {
            MeasureKind::CircleUniform { center, radius } => {
                let pts = (0..CIRCLE_VERTICES)
                    .map(|k| center + math::cis(math::TAU * k as f64 / CIRCLE_VERTICES as f64) * radius)
                    .collect();
                (pts, radius * (1.0 - math::cos(math::PI / CIRCLE_VERTICES as f64)))
            }
            MeasureKind::Interval { a, b, .. } => (vec![Complex64::new(*a, 0.0), Complex64::new(*b, 0.0)], 0.0),
            MeasureKind::AtomicMixture(atoms) => (atoms.iter().map(|a| a.0).collect(), 0.0),
            MeasureKind::Mixture(parts) => {
                let mut pts = Vec::new();
                let mut sag: f64 = 0.0;
                for (m, _) in parts {
                    let (p, s) = m.hull_points();
                    pts.extend(p);
                    sag = sag.max(s);
                }
                (pts, sag)
            }
            MeasureKind::QuadratureTable(q) => (q.nodes.clone(), 0.0),
        }
    }

    /// Pushforward under `z ↦ s z`, `s > 0`.
    pub fn dilated(&self, s: f64) -> MeasureSpec {
        let kind = match &self.kind {
            MeasureKind::CircleUniform { center, radius } => {
                MeasureKind::CircleUniform { center: center * s, radius: radius * s }
            }
            MeasureKind::Interval { a, b, density } => MeasureKind::Interval { a: a * s, b: b * s, density: *density },
            MeasureKind::AtomicMixture(atoms) => {
                MeasureKind::AtomicMixture(atoms.iter().map(|&(z, w)| (z * s, w)).collect())
            }
            MeasureKind::Mixture(parts) => {
                MeasureKind::Mixture(parts.iter().map(|(m, w)| (m.dilated(s), *w)).collect())
            }
            MeasureKind::QuadratureTable(q) => MeasureKind::QuadratureTable(QuadratureMeasure {
                nodes: q.nodes.iter().map(|z| z * s).collect(),
                weights: q.weights.clone(),
                source: q.source.clone(),
            }),
        };
        MeasureSpec { kind, label: format!("{}*{s}", self.label) }
    }

    /// True when the support lies on the real axis.
    pub fn is_real_supported(&self) -> bool {
        let bb = self.support_bbox();
        bb.im_min == 0.0 && bb.im_max == 0.0
    }

    /// True when the measure is invariant under complex conjugation, so its
    /// orthonormal polynomials have real coefficients.
    pub fn is_conjugation_symmetric(&self) -> bool {
        match &self.kind {
            MeasureKind::CircleUniform { center, .. } => center.im == 0.0,
            MeasureKind::Interval { .. } => true,
            MeasureKind::Mixture(parts) => parts.iter().all(|p| p.0.is_conjugation_symmetric()),
            _ => self.is_real_supported(),
        }
    }
}

fn bbox_of(points: impl Iterator<Item = Complex64>) -> Rect {
    let mut r = Rect {
        re_min: f64::INFINITY,
        re_max: f64::NEG_INFINITY,
        im_min: f64::INFINITY,
        im_max: f64::NEG_INFINITY,
    };
    for z in points {
        r.re_min = r.re_min.min(z.re);
        r.re_max = r.re_max.max(z.re);
        r.im_min = r.im_min.min(z.im);
        r.im_max = r.im_max.max(z.im);
    }
    r
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::NonNormalizable(format!("weight {w} is not strictly positive")));
        }
        sum += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::NonNormalizable("no weights".into()));
    }
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::NonNormalizable(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Discrete proxy for `L²(μ)` inner products.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureMeasure {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub source: String,
}

impl QuadratureMeasure {
    pub fn new(nodes: Vec<Complex64>, weights: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let q = QuadratureMeasure { nodes, weights, source: source.into() };
        q.validate()?;
        Ok(q)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.weights.len() {
            return Err(Error::InvalidMeasure("nodes and weights differ in length".into()));
        }
        if self.nodes.len() < 2 {
            return Err(Error::InvalidMeasure("a quadrature needs at least 2 nodes".into()));
        }
        check_weights(self.weights.iter().copied())
    }

    /// Number of pairwise distinct nodes.
    pub fn distinct_nodes(&self) -> usize {
        let mut pts: Vec<(f64, f64)> = self.nodes.iter().map(|z| (z.re, z.im)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        pts.dedup();
        pts.len()
    }

    pub fn to_empirical(&self) -> EmpiricalMeasure {
        EmpiricalMeasure {
            points: self.nodes.clone(),
            weights: self.weights.clone(),
            seed: 0,
            provenance: Provenance::Custom,
            chains: 1,
        }
    }
}

/// Default quadrature size for bases up to `max_degree`.
pub fn default_node_count(max_degree: usize) -> usize {
    256.max(8 * max_degree)
}

/// Builds a quadrature proxy for `spec` with `node_count` nodes per
/// continuous component.
///
/// Circles get equally spaced nodes with equal weights. Interval densities
/// get the Gauss rule of their three-term recurrence (Golub-Welsch), exact
/// up to degree `2 node_count - 1`. Atoms are copied as they are, and
/// mixtures concatenate their components with scaled weights.
pub fn make_quadrature(spec: &MeasureSpec, node_count: usize) -> Result<QuadratureMeasure> {
    if node_count < 2 {
        return Err(Error::InvalidArgument(format!("node_count must be >= 2, got {node_count}")));
    }
    spec.validate()?;
    let (nodes, mut weights) = quadrature_parts(spec, node_count)?;
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonNormalizable("quadrature weights vanish".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    QuadratureMeasure::new(nodes, weights, spec.label.clone())
}

fn quadrature_parts(spec: &MeasureSpec, n: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
    Ok(match &spec.kind {
        MeasureKind::CircleUniform { center, radius } => {
            let nodes = (0..n)
                .map(|k| center + math::cis(math::TAU * k as f64 / n as f64) * radius)
                .collect();
            (nodes, vec![1.0 / n as f64; n])
        }
        MeasureKind::Interval { a, b, density } => {
            let (t, w) = gauss_rule(density, n)?;
            let mid = (a + b) / 2.0;
            let half = (b - a) / 2.0;
            (t.iter().map(|&x| Complex64::new(mid + half * x, 0.0)).collect(), w)
        }
        MeasureKind::AtomicMixture(atoms) => (atoms.iter().map(|a| a.0).collect(), atoms.iter().map(|a| a.1).collect()),
        MeasureKind::Mixture(parts) => {
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (m, s) in parts {
                let (zn, wn) = quadrature_parts(m, n)?;
                let tot: f64 = wn.iter().sum();
                nodes.extend(zn);
                weights.extend(wn.iter().map(|w| w * s / tot));
            }
            (nodes, weights)
        }
        MeasureKind::QuadratureTable(q) => (q.nodes.clone(), q.weights.clone()),
    })
}

/// Gauss rule on `[-1, 1]` for a normalized density (Golub-Welsch).
pub fn gauss_rule(density: &Density, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = density.recurrence(n);
    let off: Vec<f64> = b.iter().map(|x| math::sqrt(*x)).collect();
    let (nodes, first) = linalg::tridiagonal_eigen(&a, &off)
        .ok_or_else(|| Error::InvalidArgument("Golub-Welsch eigensolver did not converge".into()))?;
    let mut weights: Vec<f64> = first.iter().map(|v| v * v).collect();
    let s: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= s;
    }
    Ok((nodes, weights))
}

/// Hermitian moment matrix `G[j][k] = Σ_i w_i z_i^j conj(z_i)^k`, `j, k ≤ max_degree`.
///
/// Fails with [`Error::PrecisionExhausted`] when a Cholesky pivot drops
/// below `64 ε` times the largest diagonal entry; `largest_degree` is then
/// the largest degree whose leading block is still safely positive definite.
pub fn gram_matrix(q: &QuadratureMeasure, max_degree: usize) -> Result<Vec<Vec<Complex64>>> {
    let n = max_degree + 1;
    let mut powers = vec![Complex64::new(1.0, 0.0); q.nodes.len()];
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for _ in 0..n {
        cols.push(powers.clone());
        for (p, z) in powers.iter_mut().zip(&q.nodes) {
            *p *= z;
        }
    }
    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        for k in j..n {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..q.nodes.len() {
                s += cols[j][i] * cols[k][i].conj() * q.weights[i];
            }
            g[j][k] = s;
            g[k][j] = s.conj();
        }
        g[j][j].im = 0.0;
    }
    if let Some(bad) = first_unsafe_pivot(&g) {
        return Err(Error::PrecisionExhausted { largest_degree: bad.saturating_sub(1), partial: None });
    }
    Ok(g)
}

/// Index of the first Cholesky pivot that is numerically zero, if any.
fn first_unsafe_pivot(g: &[Vec<Complex64>]) -> Option<usize> {
    let n = g.len();
    let scale = (0..n).map(|i| g[i][i].re).fold(0.0, f64::max);
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = g[j][j].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if d <= 64.0 * f64::EPSILON * scale {
            return Some(j);
        }
        let djj = math::sqrt(d);
        l[j][j] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / djj;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    Brolin,
    Equilibrium,
    Zeros,
    Custom,
}

/// Weighted point cloud.
///
/// `chains` records how many interleaved sampler chains produced the points
/// (point `i` belongs to chain `i % chains`); it is 1 for deterministic
/// constructions and drives batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalMeasure {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub provenance: Provenance,
    pub chains: usize,
}

impl EmpiricalMeasure {
    pub fn uniform(points: Vec<Complex64>, provenance: Provenance) -> Self {
        let n = points.len().max(1);
        let weights = vec![1.0 / n as f64; points.len()];
        EmpiricalMeasure { points, weights, seed: 0, provenance, chains: 1 }
    }

    pub fn new(points: Vec<Complex64>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure("points and weights differ in length".into()));
        }
        if points.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidMeasure("non-finite point".into()));
        }
        check_weights(weights.iter().copied())?;
        Ok(EmpiricalMeasure { points, weights, seed: 0, provenance, chains: 1 })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∫ f dm`.
    pub fn integrate(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|&z| math::cabs(z)).fold(0.0, f64::max)
    }
}

/// `p_m(z) = Σ w_i log|z - z_i|`, or [`NEG_INF`] if `z` is an atom.
pub fn potential(m: &EmpiricalMeasure, z: Complex64) -> f64 {
    let mut s = 0.0;
    for (&p, &w) in m.points.iter().zip(&m.weights) {
        let d = math::cabs(z - p);
        if d == 0.0 {
            return NEG_INF;
        }
        s += w * math::ln(d);
    }
    s
}

/// Discrete energy with the diagonal removed:
/// `Σ_{i≠j} w_i w_j log|z_i - z_j| / (1 - Σ w_i²)`.
pub fn energy(m: &EmpiricalMeasure) -> Result<f64> {
    energy_with(&Sequential, m)
}

/// [`energy`] with rows of the double sum spread over `exec`.
pub fn energy_with<E: Exec>(exec: &E, m: &EmpiricalMeasure) -> Result<f64> {
    let n = m.points.len();
    if n < 2 {
        return Err(Error::InvalidArgument("energy needs at least 2 atoms".into()));
    }
    let rows = exec.map_indexed(n, |i| {
        let zi = m.points[i];
        let mut s = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = math::cabs(zi - m.points[j]);
            if d == 0.0 {
                return NEG_INF;
            }
            s += m.weights[j] * math::ln(d);
        }
        m.weights[i] * s
    });
    let mut total = 0.0;
    for r in rows {
        if r == NEG_INF {
            return Ok(NEG_INF);
        }
        total += r;
    }
    let self_mass: f64 = m.weights.iter().map(|w| w * w).sum();
    Ok(total / (1.0 - self_mass))
}

/// `Cap = exp(I)`; the `-∞` sentinel maps to 0 (polar).
pub fn capacity_from_energy(e: f64) -> f64 {
    if e == NEG_INF {
        0.0
    } else {
        math::exp(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PotentialReport {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::log_value"))]
    pub energy: f64,
    pub capacity: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::log_pairs"))]
    pub evaluation_points: Vec<(Complex64, f64)>,
}

pub fn potential_report(m: &EmpiricalMeasure, at: &[Complex64]) -> Result<PotentialReport> {
    let e = energy(m)?;
    Ok(PotentialReport {
        energy: e,
        capacity: capacity_from_energy(e),
        evaluation_points: at.iter().map(|&z| (z, potential(m, z))).collect(),
    })
}
