//! The degree sweep: orthonormal polynomials of one measure, their Brolin
//! measures, and diagnostics for convergence to the equilibrium measure of
//! the support.

pub mod checks;
pub mod probes;
pub mod testfn;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::{self, capacity_julia, PolyDyn};
use crate::equilibrium::{self, EquilibriumResult};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{GridSet, Lattice, NamedShape, Rect, SetProvenance};
use crate::math;
use crate::measure::{default_node_count, make_quadrature, MeasureKind, MeasureSpec};
use crate::orthopoly::{self, OrthoBasis};

pub use checks::{
    balanced_measure_check, convex_hull, distance_to_hull, mass_escape, preimage_count, preimage_probes,
    regularity_report, sample_energy, zero_distribution, BalancedCheck, ClauseVerdict, MassEstimate,
    RegularityReport, ZeroDistribution,
};
pub use probes::{weak_star_distance, weak_star_distance_with_se, ProbeSet};
pub use testfn::{laplacian_pairing_check, Bump, Pairing, PolyTest};

/// Seed domain for per-degree streams, see [`math::derive_seed`].
pub const DEGREE_SEED_DOMAIN: u64 = 1;
/// Factor applied to the support's largest modulus to get the containment radius.
pub const LEMMA_RADIUS_FACTOR: f64 = 1.1;

/// A test region `V` away from the support.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "shape", deny_unknown_fields))]
pub enum Region {
    Disk { center: Complex64, radius: f64 },
    Annulus { center: Complex64, inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Disk { center, radius } => math::cabs(z - center) <= radius,
            Region::Annulus { center, inner, outer } => {
                let r = math::cabs(z - center);
                inner <= r && r <= outer
            }
        }
    }

    pub fn bbox(&self) -> Rect {
        match *self {
            Region::Disk { center, radius } => Rect::centered(center, radius),
            Region::Annulus { center, outer, .. } => Rect::centered(center, outer),
        }
    }

    pub fn rasterize(&self, lattice: Lattice) -> Result<GridSet> {
        let mask = (0..lattice.len()).map(|i| self.contains(lattice.center_of(i))).collect();
        GridSet::new(lattice, mask, SetProvenance::Custom)
    }
}

/// Which sweep verdicts a caller insists on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    Regularity,
    WeakStar,
    Identity,
    Containment,
    Confinement,
    Mass,
    Preimages,
    Contrast,
    ZerosInHull,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LabConfig {
    pub seed: u64,
    pub node_count: Option<usize>,
    pub ortho_tol: f64,
    pub max_bits: u32,
    pub brolin_samples: usize,
    pub burn_in: usize,
    pub chains: usize,
    /// Samples used for the energy estimate (pairwise cost).
    pub energy_points: usize,
    pub grid_resolution: usize,
    pub equilibrium_iterations: usize,
    pub equilibrium_tol: f64,
    pub regularity_tol: f64,
    pub weak_tol: f64,
    pub identity_tol: f64,
    /// Contrast check: zeros must stay at least this far from the reference.
    pub contrast_zero_min: f64,
    /// Contrast check: Brolin measures must come at least this close.
    pub contrast_brolin_max: f64,
    pub probe_margin: Option<f64>,
    pub region: Option<Region>,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            seed: 0,
            node_count: None,
            ortho_tol: orthopoly::DEFAULT_TOL,
            max_bits: orthopoly::DEFAULT_MAX_BITS,
            brolin_samples: 10_000,
            burn_in: dynamics::DEFAULT_BURN_IN,
            chains: dynamics::DEFAULT_CHAINS,
            energy_points: 4000,
            grid_resolution: 256,
            equilibrium_iterations: equilibrium::DEFAULT_ITERATIONS,
            equilibrium_tol: equilibrium::DEFAULT_TOL,
            regularity_tol: 0.1,
            weak_tol: 0.05,
            identity_tol: 0.02,
            contrast_zero_min: 0.3,
            contrast_brolin_max: 0.02,
            probe_margin: None,
            region: None,
        }
    }
}

/// Geometry of `S(μ)` shared by all degrees.
#[derive(Debug, Clone)]
pub struct Reference {
    pub lattice: Lattice,
    pub support: GridSet,
    pub hull: GridSet,
    pub equilibrium: EquilibriumResult,
    /// `R` with `K(μ) ⊂ D(0, R)`.
    pub lemma_radius: f64,
    pub hull_points: Vec<Complex64>,
    pub hull_slack: f64,
    pub probes: ProbeSet,
}

/// Pixels covering the support of `spec`.
pub fn support_grid(spec: &MeasureSpec, lattice: Lattice) -> Result<GridSet> {
    if let Some(shape) = named_shape(spec) {
        return GridSet::from_shape(lattice, shape, None);
    }
    let mut mask = vec![false; lattice.len()];
    paint(spec, lattice, &mut mask)?;
    GridSet::new(lattice, mask, SetProvenance::Support)
}

fn named_shape(spec: &MeasureSpec) -> Option<NamedShape> {
    match spec.kind {
        MeasureKind::CircleUniform { center, radius } => Some(NamedShape::Circle { center, radius }),
        MeasureKind::Interval { a, b, .. } => {
            Some(NamedShape::Segment { a: Complex64::new(a, 0.0), b: Complex64::new(b, 0.0) })
        }
        _ => None,
    }
}

fn paint(spec: &MeasureSpec, lattice: Lattice, mask: &mut [bool]) -> Result<()> {
    let mut mark = |z: Complex64| -> Result<()> {
        let (i, j) = lattice.locate(z).ok_or(Error::InvalidArgument("support leaves the grid window".into()))?;
        mask[j * lattice.nx + i] = true;
        Ok(())
    };
    match &spec.kind {
        MeasureKind::CircleUniform { .. } | MeasureKind::Interval { .. } => {
            let shape = GridSet::from_shape(lattice, named_shape(spec).expect("named"), None)?;
            for (m, s) in mask.iter_mut().zip(&shape.mask) {
                *m |= *s;
            }
        }
        MeasureKind::AtomicMixture(atoms) => {
            for (z, _) in atoms {
                mark(*z)?;
            }
        }
        MeasureKind::Mixture(parts) => {
            for (m, _) in parts {
                paint(m, lattice, mask)?;
            }
        }
        MeasureKind::QuadratureTable(q) => {
            for z in &q.nodes {
                mark(*z)?;
            }
        }
    }
    Ok(())
}

/// Builds the grid window, `S(μ)`, `K(μ)`, its equilibrium measure and the probes.
pub fn reference<E: Exec>(exec: &E, spec: &MeasureSpec, cfg: &LabConfig) -> Result<Reference> {
    let (hull_points, sagitta) = spec.hull_points();
    let max_mod = hull_points.iter().map(|z| math::cabs(*z)).fold(0.0, f64::max);
    let lemma_radius = (LEMMA_RADIUS_FACTOR * max_mod).max(1e-3);
    let mut half = 1.25 * lemma_radius;
    if let Some(v) = cfg.region {
        let b = v.bbox();
        half = half.max(1.05 * b.max_modulus());
    }
    let res = cfg.grid_resolution.max(16);
    let lattice = Lattice::new(Rect::centered(Complex64::new(0.0, 0.0), half), res, res)?;
    let support = support_grid(spec, lattice)?;
    let hull = equilibrium::filled_hull(&support)?;
    let equilibrium = equilibrium::equilibrium_measure(exec, &support, cfg.equilibrium_iterations, cfg.equilibrium_tol)?;
    let boundary: Vec<Complex64> =
        equilibrium::outer_boundary(&support)?.iter().map(|&i| lattice.center_of(i)).collect();
    let margin = cfg.probe_margin.unwrap_or(lemma_radius);
    let probes = ProbeSet::around(&hull, &boundary, margin);
    let scale = 1.0 + max_mod;
    Ok(Reference {
        lattice,
        support,
        hull,
        equilibrium,
        lemma_radius,
        hull_points,
        hull_slack: sagitta + 1e-6 * scale,
        probes,
    })
}

/// Per-degree measurements.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegreeRow {
    pub degree: usize,
    pub gamma: f64,
    pub escape_radius: f64,
    pub cap_julia: f64,
    pub sample_energy: f64,
    pub sample_energy_se: f64,
    pub weak_distance: f64,
    pub weak_distance_se: f64,
    pub zero_distance: f64,
    pub zero_hull_excess: f64,
    pub max_sample_modulus: f64,
    pub outside_fraction: f64,
    pub mass_in_v: Option<MassEstimate>,
    pub preimage_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegreeFailure {
    pub degree: usize,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MassVerdict {
    pub fitted_m: f64,
    pub dominated: bool,
    pub decreasing_or_zero: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepChecks {
    pub regularity: RegularityReport,
    pub weak_star: ClauseVerdict,
    /// `|Cap(K_n) - exp(I_sample(ω_n))| / Cap(K_n)` per degree.
    pub identity_errors: Vec<f64>,
    pub identity_passed: bool,
    /// First degree from which every sample lies in `D(0, R)`.
    pub containment_from: Option<usize>,
    pub containment_passed: bool,
    pub confinement_fitted_m: f64,
    pub confinement_passed: bool,
    pub mass: Option<MassVerdict>,
    pub preimage_max: Option<usize>,
    pub preimages_constant_after_4: Option<bool>,
    pub contrast_passed: bool,
    pub zeros_in_hull: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub label: String,
    pub seed: u64,
    pub degrees: Vec<usize>,
    pub gamma_roots: Vec<f64>,
    pub cap_julia: Vec<f64>,
    /// `I(ω_n) = log Cap(K_n)`.
    pub energies: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::log_vec"))]
    pub sample_energies: Vec<f64>,
    pub weak_distances: Vec<f64>,
    pub masses_in_v: Vec<MassEstimate>,
    pub preimage_counts: Vec<usize>,
    pub zero_distances: Vec<f64>,
    pub rows: Vec<DegreeRow>,
    pub reference_capacity: f64,
    pub reference_energy: f64,
    pub lemma_radius: f64,
    pub basis_precision_bits: u32,
    pub checks: SweepChecks,
    pub failures: Vec<DegreeFailure>,
}

impl ConvergenceReport {
    /// `None` when the verdict does not apply (no region `V`).
    pub fn verdict(&self, v: Verdict) -> Option<bool> {
        let c = &self.checks;
        Some(match v {
            Verdict::Regularity => c.regularity.passed,
            Verdict::WeakStar => c.weak_star.passed,
            Verdict::Identity => c.identity_passed,
            Verdict::Containment => c.containment_passed,
            Verdict::Confinement => c.confinement_passed,
            Verdict::Mass => c.mass.as_ref()?.passed,
            Verdict::Preimages => c.preimages_constant_after_4?,
            Verdict::Contrast => c.contrast_passed,
            Verdict::ZerosInHull => c.zeros_in_hull,
        })
    }
}

/// Runs the full sweep. Per-degree failures are collected in
/// [`ConvergenceReport::failures`]; setup failures (an invalid measure, a
/// region `V` meeting `K(μ)`) are returned as errors.
pub fn run_sweep<E: Exec>(exec: &E, spec: &MeasureSpec, degrees: &[usize], cfg: &LabConfig) -> Result<ConvergenceReport> {
    spec.validate()?;
    let mut degrees: Vec<usize> = degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("no degrees requested".into()));
    }
    if let Some(&n) = degrees.iter().find(|&&n| n < 2) {
        return Err(Error::DegreeTooLow(n));
    }
    let reference = reference(exec, spec, cfg)?;
    let region = match cfg.region {
        Some(r) => {
            let v = r.rasterize(reference.lattice)?;
            if v.intersects(&reference.hull) {
                return Err(Error::Hypothesis("V meets the filled hull K(mu)".into()));
            }
            Some(v)
        }
        None => None,
    };

    let max_degree = *degrees.last().expect("non-empty");
    let q = make_quadrature(spec, cfg.node_count.unwrap_or_else(|| default_node_count(max_degree)))?;
    let (basis, basis_error) = match orthopoly::orthonormal_basis_with(&q, max_degree, cfg.ortho_tol, cfg.max_bits) {
        Ok(b) => (b, None),
        Err(Error::PrecisionExhausted { largest_degree, partial: Some(b) }) => {
            (*b, Some(Error::PrecisionExhausted { largest_degree, partial: None }))
        }
        Err(e) => return Err(e),
    };

    let confinement_set = reference.hull.dilate_pixels(2);
    let outcomes = exec.map_indexed(degrees.len(), |k| {
        let n = degrees[k];
        if n > basis.max_degree {
            let e = basis_error.as_ref().expect("basis truncated only on exhaustion");
            return Err(DegreeFailure { degree: n, message: format!("{e}"), exit_code: e.exit_code() });
        }
        degree_run(exec, n, &basis, &reference, region.as_ref(), &confinement_set, cfg)
            .map_err(|e| DegreeFailure { degree: n, message: format!("{e}"), exit_code: e.exit_code() })
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    assemble(spec, cfg, &reference, &basis, rows, failures)
}

fn degree_run<E: Exec>(
    exec: &E,
    n: usize,
    basis: &OrthoBasis,
    r: &Reference,
    region: Option<&GridSet>,
    confinement_set: &GridSet,
    cfg: &LabConfig,
) -> Result<DegreeRow> {
    let p = PolyDyn::from_basis(basis, n)?;
    let seed = math::derive_seed(cfg.seed, DEGREE_SEED_DOMAIN, n as u64);
    let omega = dynamics::brolin_sample(exec, &p, cfg.brolin_samples, cfg.burn_in, seed, cfg.chains)?;
    let (sample_energy, sample_energy_se) = sample_energy(exec, &omega, cfg.energy_points)?;
    let eq = &r.equilibrium.measure;
    let probes = r.probes.avoiding(&omega);
    let (weak_distance, weak_distance_se) = weak_star_distance_with_se(&omega, eq, &probes)?;
    let zeros = zero_distribution(basis, n, &r.hull_points, r.hull_slack)?;
    let zero_probes = r.probes.avoiding(&zeros.measure);
    let zero_distance = weak_star_distance(&zeros.measure, eq, &zero_probes)?;
    let outside = omega.points.iter().filter(|z| !confinement_set.contains_point(**z)).count();
    let (mass_in_v, preimage_count) = match region {
        Some(v) => {
            let m = mass_escape(&omega, v, &r.hull)?;
            let mut best = 0;
            for w in preimage_probes(r.lemma_radius) {
                best = best.max(preimage_count(&p, w, v, r.lemma_radius)?);
            }
            (Some(m), Some(best))
        }
        None => (None, None),
    };
    Ok(DegreeRow {
        degree: n,
        gamma: basis.gammas[n],
        escape_radius: p.escape_radius,
        cap_julia: capacity_julia(&p),
        sample_energy,
        sample_energy_se,
        weak_distance,
        weak_distance_se,
        zero_distance,
        zero_hull_excess: zeros.hull_excess,
        max_sample_modulus: omega.max_modulus(),
        outside_fraction: outside as f64 / omega.len() as f64,
        mass_in_v,
        preimage_count,
    })
}

fn finite_or_max(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

fn assemble(
    spec: &MeasureSpec,
    cfg: &LabConfig,
    r: &Reference,
    basis: &OrthoBasis,
    rows: Vec<DegreeRow>,
    failures: Vec<DegreeFailure>,
) -> Result<ConvergenceReport> {
    let degrees: Vec<usize> = rows.iter().map(|x| x.degree).collect();
    let gammas: Vec<f64> = rows.iter().map(|x| x.gamma).collect();
    let gamma_roots: Vec<f64> = rows.iter().map(|x| math::powf(x.gamma, 1.0 / x.degree as f64)).collect();
    let cap_julia: Vec<f64> = rows.iter().map(|x| x.cap_julia).collect();
    let energies: Vec<f64> = cap_julia.iter().map(|c| math::ln(*c)).collect();
    let sample_energies: Vec<f64> = rows.iter().map(|x| x.sample_energy).collect();
    let sample_se: Vec<f64> = rows.iter().map(|x| x.sample_energy_se).collect();
    let weak_distances: Vec<f64> = rows.iter().map(|x| x.weak_distance).collect();
    let weak_se: Vec<f64> = rows.iter().map(|x| x.weak_distance_se).collect();
    let zero_distances: Vec<f64> = rows.iter().map(|x| x.zero_distance).collect();
    let masses_in_v: Vec<MassEstimate> = rows.iter().filter_map(|x| x.mass_in_v).collect();
    let preimage_counts: Vec<usize> = rows.iter().filter_map(|x| x.preimage_count).collect();
    let reference_capacity = r.equilibrium.capacity;

    let regularity = if rows.is_empty() {
        RegularityReport {
            clause1: checks::trend_verdict(vec![], vec![], cfg.regularity_tol),
            clause2: checks::trend_verdict(vec![], vec![], cfg.regularity_tol),
            clause3: checks::trend_verdict(vec![], vec![], cfg.regularity_tol),
            identity_error: 0.0,
            exponent_ratios: vec![],
            passed: false,
        }
    } else {
        let mut rep = regularity_report(
            &degrees,
            &gammas,
            &cap_julia,
            &sample_energies,
            &sample_se,
            reference_capacity,
            cfg.regularity_tol,
        )?;
        for c in [&mut rep.clause1, &mut rep.clause2, &mut rep.clause3] {
            c.deviations.iter_mut().for_each(|d| *d = finite_or_max(*d));
        }
        rep
    };
    let weak_star = checks::trend_verdict(weak_distances.clone(), weak_se, cfg.weak_tol);

    let identity_errors: Vec<f64> = rows
        .iter()
        .map(|x| finite_or_max((x.cap_julia - math::exp(x.sample_energy)).abs() / x.cap_julia))
        .collect();
    let identity_passed = !rows.is_empty() && identity_errors.iter().all(|e| *e <= cfg.identity_tol);

    let contained: Vec<bool> = rows.iter().map(|x| x.max_sample_modulus <= r.lemma_radius).collect();
    let containment_from = (0..rows.len()).find(|&k| contained[k..].iter().all(|&c| c)).map(|k| degrees[k]);
    let containment_passed = !rows.is_empty() && contained.iter().all(|&c| c);

    let outside: Vec<f64> = rows.iter().map(|x| x.outside_fraction).collect();
    let confinement_fitted_m = checks::fitted_m(&degrees, &outside);
    let confinement_passed = !rows.is_empty()
        && rows.iter().all(|x| x.outside_fraction <= confinement_fitted_m / x.degree as f64 + 1e-12)
        && checks::non_increasing_tail(&outside, &vec![0.0; outside.len()], 3);

    let mass = if masses_in_v.len() == rows.len() && !rows.is_empty() {
        let m: Vec<f64> = masses_in_v.iter().map(|m| m.mass).collect();
        let fitted = checks::fitted_m(&degrees, &m);
        let dominated = rows.iter().zip(&m).all(|(x, v)| *v <= fitted / x.degree as f64 + 1e-12);
        let (first, last) = (masses_in_v[0], masses_in_v[masses_in_v.len() - 1]);
        let se = math::sqrt(first.std_error.powi(2) + last.std_error.powi(2));
        let decreasing_or_zero = (first.is_zero() && last.is_zero()) || first.mass - last.mass >= 2.0 * se;
        Some(MassVerdict { fitted_m: fitted, dominated, decreasing_or_zero, passed: dominated && decreasing_or_zero })
    } else {
        None
    };

    let (preimage_max, preimages_constant_after_4) = if preimage_counts.len() == rows.len() && !rows.is_empty() {
        let tail: Vec<usize> = rows.iter().filter(|x| x.degree >= 4).filter_map(|x| x.preimage_count).collect();
        (preimage_counts.iter().copied().max(), Some(tail.windows(2).all(|w| w[0] == w[1])))
    } else {
        (None, None)
    };

    let contrast_passed = !rows.is_empty()
        && zero_distances.iter().all(|d| *d >= cfg.contrast_zero_min)
        && weak_distances.iter().all(|d| *d < cfg.contrast_brolin_max);
    let zeros_in_hull = rows.iter().all(|x| x.zero_hull_excess <= r.hull_slack);

    Ok(ConvergenceReport {
        label: spec.label.clone(),
        seed: cfg.seed,
        degrees,
        gamma_roots,
        cap_julia,
        energies,
        sample_energies,
        weak_distances,
        masses_in_v,
        preimage_counts,
        zero_distances,
        rows,
        reference_capacity,
        reference_energy: r.equilibrium.energy,
        lemma_radius: r.lemma_radius,
        basis_precision_bits: basis.precision_bits,
        checks: SweepChecks {
            regularity,
            weak_star,
            identity_errors,
            identity_passed,
            containment_from,
            containment_passed,
            confinement_fitted_m,
            confinement_passed,
            mass,
            preimage_max,
            preimages_constant_after_4,
            contrast_passed,
            zeros_in_hull,
        },
        failures,
    })
}
