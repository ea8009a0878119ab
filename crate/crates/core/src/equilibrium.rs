//! Filled hulls of grid sets and equilibrium measures of their outer
//! boundaries.
//!
//! A discrete equilibrium measure is a set of atoms `z_i` with weights `w_i`
//! and cell sizes `h_i` (the arc length each atom stands for). Potentials use
//! the kernel `log max(|z - z_j|, h_j / 2π)`; the cutoff makes the self term
//! exact for equally spaced circle nodes and for Chebyshev nodes.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{Exec, Sequential};
use crate::grid::{GridSet, NamedShape, SetProvenance};
use crate::linalg;
use crate::math;
use crate::measure::{EmpiricalMeasure, Provenance};

pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_FROSTMAN_TOL: f64 = 0.02;
/// Atom count of the closed-form circle and segment discretizations.
pub const NAMED_SHAPE_ATOMS: usize = 512;
/// Multiplicative update step.
pub const THETA: f64 = 0.5;
/// Boundaries with more atoms than this are merged over pixel blocks.
pub const MAX_ATOMS: usize = 3000;

/// Exterior flood fill (4-connected, from the rectangle border); the
/// complement is the filled hull.
fn exterior(s: &GridSet) -> Result<Vec<bool>> {
    if s.touches_border() {
        return Err(Error::MaskTouchesBorder);
    }
    let (nx, ny) = (s.lattice.nx, s.lattice.ny);
    let mut ext = vec![false; s.mask.len()];
    let mut queue = VecDeque::new();
    for i in 0..nx {
        queue.push_back(i);
        queue.push_back((ny - 1) * nx + i);
    }
    for j in 0..ny {
        queue.push_back(j * nx);
        queue.push_back(j * nx + nx - 1);
    }
    while let Some(idx) = queue.pop_front() {
        if ext[idx] || s.mask[idx] {
            continue;
        }
        ext[idx] = true;
        let (i, j) = (idx % nx, idx / nx);
        if i > 0 {
            queue.push_back(idx - 1);
        }
        if i + 1 < nx {
            queue.push_back(idx + 1);
        }
        if j > 0 {
            queue.push_back(idx - nx);
        }
        if j + 1 < ny {
            queue.push_back(idx + nx);
        }
    }
    Ok(ext)
}

/// `K(S)`: the complement of the unbounded component of the complement.
pub fn filled_hull(s: &GridSet) -> Result<GridSet> {
    let ext = exterior(s)?;
    Ok(GridSet {
        lattice: s.lattice,
        mask: ext.iter().map(|e| !e).collect(),
        provenance: s.provenance,
        shape: match s.shape {
            Some(NamedShape::Circle { center, radius }) => Some(NamedShape::Disk { center, radius }),
            Some(NamedShape::SquareBoundary { .. }) => None,
            other => other,
        },
    })
}

/// Indices of hull pixels 8-adjacent to the exterior.
pub fn outer_boundary(s: &GridSet) -> Result<Vec<usize>> {
    let ext = exterior(s)?;
    let (nx, ny) = (s.lattice.nx as isize, s.lattice.ny as isize);
    let mut out = Vec::new();
    for idx in 0..ext.len() {
        if ext[idx] {
            continue;
        }
        let (i, j) = ((idx as isize) % nx, (idx as isize) / nx);
        let touches = (-1..=1).any(|dj| {
            (-1..=1).any(|di| {
                let (ii, jj) = (i + di, j + dj);
                ii >= 0 && jj >= 0 && ii < nx && jj < ny && ext[(jj * nx + ii) as usize]
            })
        });
        if touches {
            out.push(idx);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquilibriumResult {
    pub measure: EmpiricalMeasure,
    pub cell_sizes: Vec<f64>,
    pub energy: f64,
    pub capacity: f64,
    /// `max |p(z_i) - I|` over atoms carrying mass.
    pub frostman_defect: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumResult {
    /// Wraps arbitrary atoms; energy and defect use the cutoff kernel.
    pub fn from_atoms(points: Vec<Complex64>, weights: Vec<f64>, cell_sizes: Vec<f64>) -> Result<Self> {
        if cell_sizes.len() != points.len() || cell_sizes.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidArgument("one positive cell size per atom required".into()));
        }
        let measure = EmpiricalMeasure::new(points, weights, Provenance::Equilibrium)?;
        let p = atom_potentials(&Sequential, &measure.points, &measure.weights, &cell_sizes);
        Ok(Self::assemble(measure, cell_sizes, &p, 0, true))
    }

    fn assemble(measure: EmpiricalMeasure, cell_sizes: Vec<f64>, p: &[f64], iterations: usize, converged: bool) -> Self {
        let energy: f64 = measure.weights.iter().zip(p).map(|(w, p)| w * p).sum();
        let cut = support_threshold(measure.len());
        let frostman_defect = measure
            .weights
            .iter()
            .zip(p)
            .filter(|(w, _)| **w >= cut)
            .map(|(_, p)| (p - energy).abs())
            .fold(0.0, f64::max);
        EquilibriumResult {
            capacity: math::exp(energy),
            measure,
            cell_sizes,
            energy,
            frostman_defect,
            iterations,
            converged,
        }
    }

    /// `p_ω(z)` with the cutoff kernel.
    pub fn potential(&self, z: Complex64) -> f64 {
        let m = &self.measure;
        m.points
            .iter()
            .zip(&m.weights)
            .zip(&self.cell_sizes)
            .map(|((&a, &w), &h)| w * math::ln(math::cabs(z - a).max(h / math::TAU)))
            .sum()
    }
}

/// Atoms below this weight are not counted as support.
fn support_threshold(n: usize) -> f64 {
    1e-3 / n.max(1) as f64
}

fn kernel(a: Complex64, b: Complex64, hb: f64) -> f64 {
    math::ln(math::cabs(a - b).max(hb / math::TAU))
}

fn atom_potentials<E: Exec>(exec: &E, pts: &[Complex64], w: &[f64], h: &[f64]) -> Vec<f64> {
    exec.map_indexed(pts.len(), |i| (0..pts.len()).map(|j| w[j] * kernel(pts[i], pts[j], h[j])).sum())
}

/// Closed-form discretizations: equally spaced circle nodes, Chebyshev
/// nodes on a segment; both uniformly weighted.
pub fn named_shape_equilibrium(shape: &NamedShape, n: usize) -> Option<EquilibriumResult> {
    let n = n.max(2);
    let (points, cells, energy): (Vec<Complex64>, Vec<f64>, f64) = match *shape {
        NamedShape::Circle { center, radius } => (
            (0..n).map(|k| center + math::cis(math::TAU * k as f64 / n as f64) * radius).collect(),
            vec![math::TAU * radius / n as f64; n],
            math::ln(radius),
        ),
        NamedShape::Segment { a, b } => {
            let mid = (a + b) * 0.5;
            let half = (b - a) * 0.5;
            let len = math::cabs(b - a);
            let theta = |k: usize| (2.0 * k as f64 + 1.0) * math::PI / (2.0 * n as f64);
            (
                (0..n).map(|k| mid + half * math::cos(theta(k))).collect(),
                (0..n).map(|k| 0.5 * len * math::sin(theta(k)) * math::PI / n as f64).collect(),
                math::ln(len / 4.0),
            )
        }
        _ => return None,
    };
    let measure = EmpiricalMeasure::uniform(points, Provenance::Equilibrium);
    let p = atom_potentials(&Sequential, &measure.points, &measure.weights, &cells);
    let mut r = EquilibriumResult::assemble(measure, cells, &p, 0, true);
    r.energy = energy;
    r.capacity = math::exp(energy);
    r.frostman_defect = p.iter().map(|v| (v - energy).abs()).fold(0.0, f64::max);
    Some(r)
}

/// Equilibrium measure of the filled hull of `s`, discretized on its outer
/// boundary pixels.
///
/// Sets rasterized from a circle or segment use the closed forms. Otherwise
/// weights start uniform and follow `w_i ← w_i exp(θ (p_i - Σ w_j p_j))`
/// until the potential spread over the support drops below `tol`; if that
/// does not happen within `iterations` sweeps the current support is
/// equalized directly by a linear solve, and failing that the last iterate
/// is returned with `converged = false`.
pub fn equilibrium_measure<E: Exec>(exec: &E, s: &GridSet, iterations: usize, tol: f64) -> Result<EquilibriumResult> {
    if let Some(shape) = s.shape {
        if let Some(r) = named_shape_equilibrium(&shape, NAMED_SHAPE_ATOMS) {
            return Ok(r);
        }
    }
    if s.count() < 2 {
        return Err(Error::InvalidArgument("set is a single pixel (polar at grid scale)".into()));
    }
    let boundary = outer_boundary(s)?;
    let (pts, cells) = boundary_atoms(s, &boundary);
    let n = pts.len();
    if n < 2 {
        return Err(Error::InvalidArgument("boundary has fewer than 2 atoms".into()));
    }

    let rows: Vec<Vec<f64>> =
        exec.map_indexed(n, |i| (0..n).map(|j| kernel(pts[i], pts[j], cells[j])).collect());
    let matvec = |w: &[f64]| -> Vec<f64> {
        exec.map_indexed(n, |i| rows[i].iter().zip(w).map(|(k, w)| k * w).sum())
    };
    let spread_ok = |w: &[f64], p: &[f64]| {
        let e: f64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
        let cut = support_threshold(n);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut min_all = f64::INFINITY;
        for (wi, pi) in w.iter().zip(p) {
            min_all = min_all.min(*pi);
            if *wi >= cut {
                lo = lo.min(*pi);
                hi = hi.max(*pi);
            }
        }
        hi - lo < tol && min_all >= e - tol
    };

    let mut w = vec![1.0 / n as f64; n];
    let mut p = matvec(&w);
    let mut sweeps = 0;
    let mut converged = spread_ok(&w, &p);
    while !converged && sweeps < iterations {
        let e: f64 = w.iter().zip(&p).map(|(w, p)| w * p).sum();
        for (wi, pi) in w.iter_mut().zip(&p) {
            *wi *= math::exp(THETA * (pi - e));
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        p = matvec(&w);
        sweeps += 1;
        converged = spread_ok(&w, &p);
    }

    if !converged {
        if let Some(polished) = equalize_on_support(&rows, &w) {
            let pp = matvec(&polished);
            if spread_ok(&polished, &pp) {
                w = polished;
                p = pp;
                converged = true;
            }
        }
    }

    let measure = EmpiricalMeasure::new(pts, w, Provenance::Equilibrium)?;
    Ok(EquilibriumResult::assemble(measure, cells, &p, sweeps, converged))
}

/// Solves `K_AA w_A = I 1, Σ w_A = 1` on the support `A` of `w`, dropping
/// atoms that come out negative, a few rounds at most.
fn equalize_on_support(rows: &[Vec<f64>], w: &[f64]) -> Option<Vec<f64>> {
    let cut = support_threshold(w.len());
    let mut active: Vec<usize> = (0..w.len()).filter(|&i| w[i] >= cut).collect();
    for _ in 0..8 {
        let a: Vec<Vec<f64>> = active.iter().map(|&i| active.iter().map(|&j| rows[i][j]).collect()).collect();
        let y = linalg::solve(&a, &vec![1.0; active.len()])?;
        let total: f64 = y.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            return None;
        }
        let sol: Vec<f64> = y.iter().map(|v| v / total).collect();
        if sol.iter().all(|&v| v >= 0.0) {
            let mut out = vec![0.0; w.len()];
            for (k, &i) in active.iter().enumerate() {
                out[i] = sol[k];
            }
            return Some(out);
        }
        active = active.iter().zip(&sol).filter(|(_, &v)| v > 0.0).map(|(&i, _)| i).collect();
        if active.len() < 2 {
            return None;
        }
    }
    None
}

/// Atom positions and cell sizes for the boundary pixels; large boundaries
/// are merged over square pixel blocks first.
fn boundary_atoms(s: &GridSet, boundary: &[usize]) -> (Vec<Complex64>, Vec<f64>) {
    let nx = s.lattice.nx;
    let mut block = 1;
    while boundary.len() / block > MAX_ATOMS {
        block += 1;
    }
    let mut pts: Vec<Complex64> = if block == 1 {
        boundary.iter().map(|&idx| s.lattice.center_of(idx)).collect()
    } else {
        let bx = nx.div_ceil(block);
        let mut acc: Vec<(Complex64, usize)> = vec![(Complex64::new(0.0, 0.0), 0); bx * s.lattice.ny.div_ceil(block)];
        for &idx in boundary {
            let key = (idx / nx / block) * bx + (idx % nx) / block;
            acc[key].0 += s.lattice.center_of(idx);
            acc[key].1 += 1;
        }
        acc.into_iter().filter(|a| a.1 > 0).map(|(z, c)| z / c as f64).collect()
    };
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    // Cell size: mean distance to the two nearest other atoms.
    let cells = (0..pts.len())
        .map(|i| {
            let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
            for (j, q) in pts.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = math::cabs(pts[i] - q);
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            let h = if d2.is_finite() { 0.5 * (d1 + d2) } else { d1 };
            if h.is_finite() && h > 0.0 {
                h
            } else {
                s.lattice.dx()
            }
        })
        .collect();
    (pts, cells)
}

/// `g_Ω(z) = max(0, p_ω(z) - I)`, with differences at the summation
/// rounding level of the potential flushed to zero.
pub fn green_outer(e: &EquilibriumResult, z: Complex64) -> f64 {
    let g = e.potential(z) - e.energy;
    let floor = 4.0 * e.measure.len() as f64 * f64::EPSILON * (1.0 + e.energy.abs());
    if g <= floor {
        0.0
    } else {
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrostmanReport {
    /// `min p_ω - I` over mask pixels and support atoms.
    pub min_on_set: f64,
    /// `max p_ω - I` over mask pixels and support atoms.
    pub max_on_set: f64,
    pub support_min: f64,
    pub support_max: f64,
    pub lower_bound_defect: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Frostman bounds: passes when `|p_ω - I| ≤ tol` on every support atom.
pub fn frostman_check<E: Exec>(exec: &E, e: &EquilibriumResult, s: &GridSet, tol: f64) -> FrostmanReport {
    let m = &e.measure;
    let cut = support_threshold(m.len());
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &z) in m.points.iter().enumerate() {
        if m.weights[i] >= cut {
            let v = e.potential(z) - e.energy;
            smin = smin.min(v);
            smax = smax.max(v);
        }
    }
    let pixels: Vec<usize> = (0..s.mask.len()).filter(|&i| s.mask[i]).collect();
    let vals = exec.map_indexed(pixels.len(), |k| e.potential(s.lattice.center_of(pixels[k])) - e.energy);
    let min_on_set = vals.iter().copied().fold(smin, f64::min);
    let max_on_set = vals.iter().copied().fold(smax, f64::max);
    FrostmanReport {
        min_on_set,
        max_on_set,
        support_min: smin,
        support_max: smax,
        lower_bound_defect: (-min_on_set).max(0.0),
        tol,
        passed: smin >= -tol && smax <= tol,
    }
}

/// Grid set of the outer boundary atoms, for plotting and containment checks.
pub fn support_set(s: &GridSet) -> Result<GridSet> {
    let b = outer_boundary(s)?;
    let mut mask = vec![false; s.mask.len()];
    for i in b {
        mask[i] = true;
    }
    GridSet::new(s.lattice, mask, SetProvenance::Support)
}
