//! Subcommand pipelines. Each writes its files under the config's output
//! directory and returns an [`Outcome`] carrying the exit status.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use brolin_core::dynamics::{self, capacity_from_green, capacity_julia, PolyDyn};
use brolin_core::equilibrium::{self, FrostmanReport};
use brolin_core::error::Error;
use brolin_core::exec::Exec;
use brolin_core::grid::{GridSet, Lattice, Rect, SetProvenance};
use brolin_core::lab::{self, ConvergenceReport, Verdict, DEGREE_SEED_DOMAIN};
use brolin_core::math;
use brolin_core::measure::{default_node_count, make_quadrature, MeasureSpec, QuadratureMeasure};
use brolin_core::orthopoly::{self, OrthoBasis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Loaded;
use crate::error::{LabError, LabResult};
use crate::formats::{self, Stamp};

/// What a command reports back to the shell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

impl Outcome {
    fn ok(message: impl Into<String>) -> Self {
        Outcome { exit_code: 0, message: message.into() }
    }
}

pub const ALL_VERDICTS: [Verdict; 9] = [
    Verdict::Regularity,
    Verdict::WeakStar,
    Verdict::Identity,
    Verdict::Containment,
    Verdict::Confinement,
    Verdict::Mass,
    Verdict::Preimages,
    Verdict::Contrast,
    Verdict::ZerosInHull,
];

pub fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|s| s.as_str().map(String::from)).unwrap_or_default()
}

fn stamp(l: &Loaded) -> LabResult<Stamp> {
    Stamp::new(&l.config, l.config.seed)
}

fn quadrature(l: &Loaded, spec: &MeasureSpec, max_degree: usize) -> LabResult<QuadratureMeasure> {
    let n = l.config.ortho.node_count.unwrap_or_else(|| default_node_count(max_degree));
    Ok(make_quadrature(spec, n)?)
}

/// Summary printed by `measure validate`.
pub fn measure_validate(path: &Path) -> LabResult<Outcome> {
    let (_, spec) = crate::measure_doc::MeasureDoc::load(path)?;
    let b = spec.support_bbox();
    Ok(Outcome::ok(format!(
        "ok: {} (support box re [{}, {}], im [{}, {}])",
        spec.label, b.re_min, b.re_max, b.im_min, b.im_max
    )))
}

/// Writes the quadrature proxy of a measure document as CSV.
pub fn measure_quadrature(path: &Path, nodes: usize, out: &Path) -> LabResult<Outcome> {
    let (doc, spec) = crate::measure_doc::MeasureDoc::load(path)?;
    let q = make_quadrature(&spec, nodes)?;
    let s = Stamp::new(&doc, 0)?;
    formats::write_quadrature_csv(out, &q, Some(&s))?;
    Ok(Outcome::ok(format!("wrote {} nodes to {}", q.node_count(), out.display())))
}

pub fn cmd_ortho(l: &Loaded) -> LabResult<Outcome> {
    let cfg = &l.config;
    let spec = l.spec()?;
    let n = cfg.ortho.degree.unwrap_or_else(|| cfg.degrees.iter().copied().max().unwrap_or(16));
    let q = quadrature(l, &spec, n)?;
    let dir = l.output_dir();
    let s = stamp(l)?;
    let (basis, exit) = match orthopoly::orthonormal_basis_with(&q, n, cfg.tolerances.ortho, cfg.ortho.max_bits) {
        Ok(b) => (b, None),
        Err(Error::PrecisionExhausted { largest_degree, partial: Some(b) }) => {
            (*b, Some(Error::PrecisionExhausted { largest_degree, partial: None }))
        }
        Err(e) => return Err(e.into()),
    };
    write_basis(&dir, &basis, &s)?;
    formats::write_quadrature_csv(&dir.join("quadrature.csv"), &q, Some(&s))?;
    match exit {
        None => Ok(Outcome::ok(format!(
            "basis up to degree {} at {} bits, residual {:e}",
            basis.max_degree, basis.precision_bits, basis.residual
        ))),
        Some(e) => Ok(Outcome { exit_code: e.exit_code(), message: format!("{e}; partial basis written") }),
    }
}

fn write_basis(dir: &Path, b: &OrthoBasis, s: &Stamp) -> LabResult<()> {
    let rows = (0..=b.max_degree).map(|n| {
        [n.to_string(), b.gammas[n].to_string(), math::powf(b.gammas[n], 1.0 / n.max(1) as f64).to_string()]
    });
    formats::write_text(&dir.join("gammas.csv"), &formats::csv_text(Some(s), &["degree", "gamma", "gamma_root"], rows)?)?;
    formats::write_json(&dir.join("basis.json"), b)
}

pub fn read_basis(path: &Path) -> LabResult<OrthoBasis> {
    formats::read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynSummary {
    pub measure: String,
    pub degree: usize,
    pub seed: u64,
    pub gamma: f64,
    pub coefficients: Vec<Complex64>,
    pub escape_radius: f64,
    pub capacity: f64,
    pub capacity_from_green: f64,
    pub functional_residual: f64,
    pub below_resolution: bool,
    pub filled_pixels: usize,
    pub lattice: Lattice,
    pub samples: usize,
    pub chains: usize,
    pub max_sample_modulus: f64,
    pub precision_bits: u32,
}

/// `m` points spread over the annulus `1.1R ≤ |z| ≤ 2.1R`.
pub fn annulus_points(r: f64, m: usize) -> Vec<Complex64> {
    let golden = math::PI * (3.0 - math::sqrt(5.0));
    (0..m).map(|k| math::cis(golden * k as f64) * (r * (1.1 + k as f64 / m as f64))).collect()
}

pub fn cmd_dyn<E: Exec>(exec: &E, l: &Loaded) -> LabResult<Outcome> {
    let cfg = &l.config;
    let o = &cfg.dynamics;
    let d = o.degree;
    if d < 2 {
        return Err(Error::DegreeTooLow(d).into());
    }
    let spec = l.spec()?;
    let q = quadrature(l, &spec, d)?;
    let basis = orthopoly::orthonormal_basis_with(&q, d, cfg.tolerances.ortho, cfg.ortho.max_bits)?;
    let p = PolyDyn::from_basis(&basis, d)?;
    let rect = cfg.grid.rect()?.unwrap_or_else(|| Rect::centered(Complex64::new(0.0, 0.0), 1.05 * p.escape_radius));
    let res = cfg.grid.resolution;
    let lattice = Lattice::new(rect, res, res)?;
    let tol = cfg.tolerances.green;
    let g = dynamics::filled_julia_grid(exec, &p, lattice, o.k_max, tol)?;
    let seed = math::derive_seed(cfg.seed, DEGREE_SEED_DOMAIN, d as u64);
    let omega = dynamics::brolin_sample(exec, &p, o.samples, o.burn_in, seed, o.chains)?;
    let residual = dynamics::functional_equation_residual(&p, &annulus_points(p.escape_radius, 100), o.k_max, tol);

    let dir = l.output_dir();
    let s = stamp(l)?;
    formats::write_grid_field_csv(&dir.join("green.csv"), &g, Some(&s))?;
    if o.binary_grid {
        formats::write_grid_field_binary(&dir.join("green.json"), "green.bin", &g)?;
    }
    if !g.below_resolution {
        let filled = GridSet::new(lattice, g.filled_mask(), SetProvenance::Julia)?;
        formats::write_gridset(&dir.join("filled.json"), "filled.pbm", &filled)?;
    }
    formats::write_empirical_csv(&dir.join("samples.csv"), &omega, Some(&s))?;
    let summary = DynSummary {
        measure: spec.label.clone(),
        degree: d,
        seed,
        gamma: basis.gammas[d],
        coefficients: p.coeffs.clone(),
        escape_radius: p.escape_radius,
        capacity: capacity_julia(&p),
        capacity_from_green: capacity_from_green(&p, o.k_max, tol)?,
        functional_residual: residual,
        below_resolution: g.below_resolution,
        filled_pixels: g.escaped_at.iter().filter(|&&e| e == 0).count(),
        lattice,
        samples: omega.len(),
        chains: omega.chains,
        max_sample_modulus: omega.max_modulus(),
        precision_bits: basis.precision_bits,
    };
    formats::write_json(&dir.join("summary.json"), &summary)?;
    Ok(Outcome::ok(format!("degree {d}: R = {}, Cap(K) = {}", summary.escape_radius, summary.capacity)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqSummary {
    pub measure: String,
    pub lattice: Lattice,
    pub support_pixels: usize,
    pub hull_pixels: usize,
    pub atoms: usize,
    pub energy: f64,
    pub capacity: f64,
    pub frostman_defect: f64,
    pub frostman: FrostmanReport,
    pub iterations: usize,
    pub converged: bool,
}

/// Square window around the support with a quarter of its size as margin.
pub fn support_window(spec: &MeasureSpec) -> Rect {
    let b = spec.support_bbox();
    let half = 0.75 * b.width().max(b.height()).max(1e-3);
    Rect::centered(b.center(), half)
}

pub fn cmd_eq<E: Exec>(exec: &E, l: &Loaded) -> LabResult<Outcome> {
    let cfg = &l.config;
    let spec = l.spec()?;
    let rect = cfg.grid.rect()?.unwrap_or_else(|| support_window(&spec));
    let res = cfg.grid.resolution;
    let lattice = Lattice::new(rect, res, res)?;
    let support = lab::support_grid(&spec, lattice)?;
    let hull = equilibrium::filled_hull(&support)?;
    let e = equilibrium::equilibrium_measure(exec, &support, cfg.eq.iterations, cfg.tolerances.equilibrium)?;
    let frostman = equilibrium::frostman_check(exec, &e, &support, cfg.tolerances.frostman);

    let dir = l.output_dir();
    let s = stamp(l)?;
    formats::write_gridset(&dir.join("support.json"), "support.pbm", &support)?;
    formats::write_gridset(&dir.join("hull.json"), "hull.pbm", &hull)?;
    formats::write_empirical_csv(&dir.join("equilibrium.csv"), &e.measure, Some(&s))?;
    let summary = EqSummary {
        measure: spec.label.clone(),
        lattice,
        support_pixels: support.count(),
        hull_pixels: hull.count(),
        atoms: e.measure.len(),
        energy: e.energy,
        capacity: e.capacity,
        frostman_defect: e.frostman_defect,
        frostman,
        iterations: e.iterations,
        converged: e.converged,
    };
    formats::write_json(&dir.join("equilibrium.json"), &summary)?;
    Ok(Outcome::ok(format!(
        "I = {}, Cap = {}, Frostman {}",
        summary.energy,
        summary.capacity,
        if frostman.passed { "ok" } else { "outside tolerance" }
    )))
}

/// Everything `lab` writes to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabReportFile {
    pub config_sha256: String,
    pub config: crate::config::ExperimentConfig,
    pub report: ConvergenceReport,
    pub requested: Vec<Verdict>,
    /// Every verdict by name; `null` when not applicable.
    pub verdicts: BTreeMap<String, Option<bool>>,
}

impl LabReportFile {
    pub fn outcome(&self) -> Outcome {
        let failed: Vec<String> = self
            .requested
            .iter()
            .filter(|v| self.report.verdict(**v) != Some(true))
            .map(|v| match self.report.verdict(*v) {
                None => format!("{} (not applicable)", verdict_name(*v)),
                _ => verdict_name(*v),
            })
            .collect();
        let numeric = self.report.failures.iter().map(|f| f.exit_code).filter(|&c| c >= 2).max();
        let mut lines: Vec<String> =
            self.report.failures.iter().map(|f| format!("degree {}: {}", f.degree, f.message)).collect();
        let code = if !failed.is_empty() {
            lines.push(LabError::Verdicts(failed.join(", ")).to_string());
            numeric.unwrap_or(1)
        } else if let Some(c) = numeric {
            c
        } else {
            0
        };
        if code == 0 {
            lines.push(format!(
                "all requested verdicts pass ({})",
                self.requested.iter().map(|v| verdict_name(*v)).collect::<Vec<_>>().join(", ")
            ));
        }
        Outcome { exit_code: code, message: lines.join("\n") }
    }
}

pub fn cmd_lab<E: Exec>(exec: &E, l: &Loaded) -> LabResult<(LabReportFile, Outcome)> {
    let cfg = &l.config;
    let spec = l.spec()?;
    let report = lab::run_sweep(exec, &spec, &cfg.degrees, &cfg.lab_config())?;
    let s = stamp(l)?;
    let verdicts = ALL_VERDICTS.iter().map(|v| (verdict_name(*v), report.verdict(*v))).collect();
    let file = LabReportFile {
        config_sha256: s.config_sha256.clone(),
        config: cfg.clone(),
        report,
        requested: cfg.lab.require.clone(),
        verdicts,
    };
    let dir = l.output_dir();
    formats::write_json(&dir.join("report.json"), &file)?;
    write_sequence_csvs(&dir, &file)?;
    let outcome = file.outcome();
    Ok((file, outcome))
}

/// One CSV per report sequence, keyed by degree.
pub fn write_sequence_csvs(dir: &Path, f: &LabReportFile) -> LabResult<Vec<PathBuf>> {
    let r = &f.report;
    let s = Stamp { config_sha256: f.config_sha256.clone(), seed: f.config.seed };
    let mut written = Vec::new();
    let mut put = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> LabResult<()> {
        let path = dir.join(name);
        formats::write_text(&path, &formats::csv_text(Some(&s), header, rows)?)?;
        written.push(path);
        Ok(())
    };
    let simple = |xs: &[f64]| -> Vec<Vec<String>> {
        r.degrees.iter().zip(xs).map(|(n, x)| vec![n.to_string(), x.to_string()]).collect()
    };
    put("gamma_roots.csv", &["degree", "value"], simple(&r.gamma_roots))?;
    put("cap_julia.csv", &["degree", "value"], simple(&r.cap_julia))?;
    put("energies.csv", &["degree", "value"], simple(&r.energies))?;
    put("zero_distances.csv", &["degree", "value"], simple(&r.zero_distances))?;
    let with_se = |f: fn(&lab::DegreeRow) -> (f64, f64)| -> Vec<Vec<String>> {
        r.rows
            .iter()
            .map(|row| {
                let (v, se) = f(row);
                vec![row.degree.to_string(), v.to_string(), se.to_string()]
            })
            .collect()
    };
    put("sample_energies.csv", &["degree", "value", "std_error"], with_se(|x| (x.sample_energy, x.sample_energy_se)))?;
    put("weak_distances.csv", &["degree", "value", "std_error"], with_se(|x| (x.weak_distance, x.weak_distance_se)))?;
    let masses = r
        .rows
        .iter()
        .filter_map(|x| x.mass_in_v.map(|m| vec![x.degree.to_string(), m.mass.to_string(), m.std_error.to_string()]))
        .collect();
    put("masses_in_v.csv", &["degree", "value", "std_error"], masses)?;
    let counts = r
        .rows
        .iter()
        .filter_map(|x| x.preimage_count.map(|c| vec![x.degree.to_string(), c.to_string()]))
        .collect();
    put("preimage_counts.csv", &["degree", "value"], counts)?;
    let rows: Vec<Vec<String>> = f.verdicts.iter().map(|(k, v)| vec![k.clone(), v.map(|b| b.to_string()).unwrap_or_default()]).collect();
    put("verdicts.csv", &["verdict", "passed"], rows)?;
    Ok(written)
}

/// Regenerates the CSVs of a saved report and summarizes its verdicts.
pub fn cmd_report(input: &Path, out: Option<&Path>) -> LabResult<Outcome> {
    let f: LabReportFile = formats::read_json(input)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
    write_sequence_csvs(&dir, &f)?;
    let mut lines = vec![format!("{}: degrees {:?}", f.report.label, f.report.degrees)];
    for (k, v) in &f.verdicts {
        let state = match v {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "n/a",
        };
        lines.push(format!("  {k:<14} {state}"));
    }
    let o = f.outcome();
    lines.push(o.message);
    Ok(Outcome { exit_code: o.exit_code, message: lines.join("\n") })
}
