//! The experiment config: one JSON file holding every input of a run.
//! Its schema lives in `schema/experiment.schema.json`; unknown keys are
//! rejected at every level.

use std::path::{Path, PathBuf};

use brolin_core::grid::Rect;
use brolin_core::lab::{LabConfig, Region, Verdict};
use brolin_core::measure::MeasureSpec;
use brolin_core::{dynamics, equilibrium, orthopoly};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::formats;
use crate::measure_doc::MeasureDoc;

pub const SCHEMA: &str = include_str!("../../../schema/experiment.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub measure: MeasureDoc,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ortho: OrthoOptions,
    #[serde(default, rename = "dyn")]
    pub dynamics: DynOptions,
    #[serde(default)]
    pub eq: EqOptions,
    #[serde(default)]
    pub lab: LabOptions,
}

fn default_degrees() -> Vec<usize> {
    (2..=16).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOptions {
    /// `[re_min, re_max, im_min, im_max]`; chosen per command when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rect: Option<[f64; 4]>,
    pub resolution: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { rect: None, resolution: dynamics::DEFAULT_GRID }
    }
}

impl GridOptions {
    pub fn rect(&self) -> LabResult<Option<Rect>> {
        self.rect.map(|[a, b, c, d]| Rect::new(a, b, c, d).map_err(LabError::from)).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ortho: f64,
    pub green: f64,
    pub equilibrium: f64,
    pub frostman: f64,
    pub regularity: f64,
    pub weak: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let lab = LabConfig::default();
        Tolerances {
            ortho: orthopoly::DEFAULT_TOL,
            green: dynamics::DEFAULT_GREEN_TOL,
            equilibrium: equilibrium::DEFAULT_TOL,
            frostman: equilibrium::DEFAULT_FROSTMAN_TOL,
            regularity: lab.regularity_tol,
            weak: lab.weak_tol,
            identity: lab.identity_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrthoOptions {
    /// Highest degree for `ortho`; the largest sweep degree when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    pub max_bits: u32,
}

impl Default for OrthoOptions {
    fn default() -> Self {
        OrthoOptions { degree: None, node_count: None, max_bits: orthopoly::DEFAULT_MAX_BITS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynOptions {
    pub degree: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub k_max: usize,
    pub binary_grid: bool,
}

impl Default for DynOptions {
    fn default() -> Self {
        DynOptions {
            degree: 6,
            samples: 10_000,
            burn_in: dynamics::DEFAULT_BURN_IN,
            chains: dynamics::DEFAULT_CHAINS,
            k_max: dynamics::DEFAULT_K_MAX,
            binary_grid: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqOptions {
    pub iterations: usize,
}

impl Default for EqOptions {
    fn default() -> Self {
        EqOptions { iterations: equilibrium::DEFAULT_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabOptions {
    pub samples: usize,
    pub energy_points: usize,
    /// Grid for support, hull and equilibrium measure in the sweep.
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_margin: Option<f64>,
    pub contrast_zero_min: f64,
    pub contrast_brolin_max: f64,
    /// Verdicts that decide the exit status.
    pub require: Vec<Verdict>,
}

impl Default for LabOptions {
    fn default() -> Self {
        let lab = LabConfig::default();
        LabOptions {
            samples: lab.brolin_samples,
            energy_points: lab.energy_points,
            resolution: lab.grid_resolution,
            region: None,
            probe_margin: None,
            contrast_zero_min: lab.contrast_zero_min,
            contrast_brolin_max: lab.contrast_brolin_max,
            require: vec![Verdict::Regularity],
        }
    }
}

/// A config plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

impl ExperimentConfig {
    pub fn with_measure(measure: MeasureDoc) -> Self {
        ExperimentConfig {
            measure,
            degrees: default_degrees(),
            seed: 0,
            grid: GridOptions::default(),
            tolerances: Tolerances::default(),
            output_dir: default_output_dir(),
            ortho: OrthoOptions::default(),
            dynamics: DynOptions::default(),
            eq: EqOptions::default(),
            lab: LabOptions::default(),
        }
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.degrees.is_empty() {
            return Err(LabError::Input("`degrees` is empty".into()));
        }
        self.grid.rect()?;
        if self.grid.resolution < 16 || self.lab.resolution < 16 {
            return Err(LabError::Input("grid resolutions must be at least 16".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("ortho", t.ortho),
            ("green", t.green),
            ("equilibrium", t.equilibrium),
            ("frostman", t.frostman),
            ("regularity", t.regularity),
            ("weak", t.weak),
            ("identity", t.identity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::Input(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        if self.dynamics.samples == 0 || self.lab.samples == 0 || self.dynamics.chains == 0 {
            return Err(LabError::Input("sample and chain counts must be positive".into()));
        }
        Ok(())
    }

    pub fn lab_config(&self) -> LabConfig {
        LabConfig {
            seed: self.seed,
            node_count: self.ortho.node_count,
            ortho_tol: self.tolerances.ortho,
            max_bits: self.ortho.max_bits,
            brolin_samples: self.lab.samples,
            burn_in: self.dynamics.burn_in,
            chains: self.dynamics.chains,
            energy_points: self.lab.energy_points,
            grid_resolution: self.lab.resolution,
            equilibrium_iterations: self.eq.iterations,
            equilibrium_tol: self.tolerances.equilibrium,
            regularity_tol: self.tolerances.regularity,
            weak_tol: self.tolerances.weak,
            identity_tol: self.tolerances.identity,
            contrast_zero_min: self.lab.contrast_zero_min,
            contrast_brolin_max: self.lab.contrast_brolin_max,
            probe_margin: self.lab.probe_margin,
            region: self.lab.region,
        }
    }
}

impl Loaded {
    pub fn read(path: &Path) -> LabResult<Self> {
        let config: ExperimentConfig = formats::read_json(path)?;
        config.validate()?;
        Ok(Loaded { config, base: path.parent().unwrap_or(Path::new(".")).to_path_buf() })
    }

    pub fn from_measure_file(path: &Path) -> LabResult<Self> {
        let (doc, _) = MeasureDoc::load(path)?;
        Ok(Loaded {
            config: ExperimentConfig::with_measure(doc),
            base: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        })
    }

    pub fn spec(&self) -> LabResult<MeasureSpec> {
        self.config.measure.to_spec(&self.base)
    }

    /// Output directory; relative paths are taken from the working directory.
    pub fn output_dir(&self) -> PathBuf {
        self.config.output_dir.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn schema() -> Value {
        serde_json::from_str(SCHEMA).unwrap()
    }

    fn keys(v: &Value) -> Vec<String> {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    }

    #[test]
    fn schema_lists_exactly_the_config_keys() {
        let s = schema();
        let mut full = ExperimentConfig::with_measure(MeasureDoc::CircleUniform { label: None, center: [0.0, 0.0], radius: 1.0 });
        full.grid.rect = Some([-2.0, 2.0, -2.0, 2.0]);
        full.ortho.degree = Some(8);
        full.ortho.node_count = Some(300);
        full.lab.region = Some(Region::Disk { center: num_complex::Complex64::new(0.0, 3.0), radius: 0.5 });
        full.lab.probe_margin = Some(0.2);
        let v = serde_json::to_value(&full).unwrap();
        assert_eq!(keys(&s["properties"]), keys(&v));
        assert_eq!(s["additionalProperties"], Value::Bool(false));
        for section in ["grid", "tolerances", "ortho", "dyn", "eq", "lab"] {
            let sub = &s["properties"][section];
            assert_eq!(keys(&sub["properties"]), keys(&v[section]), "section {section}");
            assert_eq!(sub["additionalProperties"], Value::Bool(false), "section {section}");
        }
        assert_eq!(s["required"], serde_json::json!(["measure"]));
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = formats::from_json_str::<ExperimentConfig>(
            r#"{"measure": {"kind": "circle-uniform", "radius": 1}, "tolerances": {"ortho": 1e-10, "wek": 0.1}}"#,
            Path::new("c.json"),
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("wek") && e.contains("tolerances"), "{e}");
    }

    #[test]
    fn defaults_fill_in() {
        let c: ExperimentConfig =
            formats::from_json_str(r#"{"measure": {"kind": "circle-uniform", "radius": 1}}"#, Path::new("c.json")).unwrap();
        assert_eq!(c.degrees, (2..=16).collect::<Vec<_>>());
        assert_eq!(c.lab_config().brolin_samples, 10_000);
        c.validate().unwrap();
    }
}
