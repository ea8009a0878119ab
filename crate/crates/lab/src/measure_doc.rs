//! JSON documents describing a [`MeasureSpec`].
//!
//! ```json
//! {"kind": "circle-uniform", "center": [0, 0], "radius": 1}
//! {"kind": "interval", "a": -2, "b": 2, "density": "arcsine"}
//! {"kind": "interval", "a": -1, "b": 1, "density": {"jacobi": {"alpha": 0.5, "beta": -0.5}}}
//! {"kind": "atomic-mixture", "atoms": [{"point": [0.5, 0], "weight": 1}]}
//! {"kind": "mixture", "components": [{"measure": {...}, "weight": 0.5}, ...]}
//! {"kind": "quadrature-table", "path": "nodes.csv"}
//! ```
//!
//! Every variant takes an optional `label`. Table paths are resolved
//! against the directory of the document that names them.

use std::path::{Path, PathBuf};

use brolin_core::measure::{Density, MeasureKind, MeasureSpec, QuadratureMeasure};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::formats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureDoc {
    CircleUniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Interval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        a: f64,
        b: f64,
        density: Density,
    },
    AtomicMixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        atoms: Vec<Atom>,
    },
    Mixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        components: Vec<Component>,
    },
    QuadratureTable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: [f64; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub measure: MeasureDoc,
    pub weight: f64,
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl MeasureDoc {
    /// Builds and validates the measure; `base` resolves table paths.
    pub fn to_spec(&self, base: &Path) -> LabResult<MeasureSpec> {
        let spec = self.build(base)?;
        spec.validate()?;
        Ok(spec)
    }

    fn build(&self, base: &Path) -> LabResult<MeasureSpec> {
        let (kind, label, default_label) = match self {
            MeasureDoc::CircleUniform { label, center, radius } => {
                (MeasureKind::CircleUniform { center: c(*center), radius: *radius }, label, "circle".to_string())
            }
            MeasureDoc::Interval { label, a, b, density } => {
                let name = MeasureSpec::interval(*a, *b, *density).label;
                (MeasureKind::Interval { a: *a, b: *b, density: *density }, label, name)
            }
            MeasureDoc::AtomicMixture { label, atoms } => (
                MeasureKind::AtomicMixture(atoms.iter().map(|a| (c(a.point), a.weight)).collect()),
                label,
                "atomic".to_string(),
            ),
            MeasureDoc::Mixture { label, components } => {
                let parts = components
                    .iter()
                    .map(|p| Ok((p.measure.build(base)?, p.weight)))
                    .collect::<LabResult<Vec<_>>>()?;
                (MeasureKind::Mixture(parts), label, "mixture".to_string())
            }
            MeasureDoc::QuadratureTable { label, path } => {
                let full = base.join(path);
                let q = formats::read_quadrature_csv(&full)?;
                (MeasureKind::QuadratureTable(q), label, path.display().to_string())
            }
        };
        Ok(MeasureSpec::new(kind, label.clone().unwrap_or(default_label)))
    }

    pub fn from_json_str(s: &str, origin: &Path) -> LabResult<Self> {
        formats::from_json_str(s, origin)
    }

    /// Reads a document and the measure it describes.
    pub fn load(path: &Path) -> LabResult<(Self, MeasureSpec)> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let doc = Self::from_json_str(&text, path)?;
        let spec = doc.to_spec(path.parent().unwrap_or(Path::new(".")))?;
        Ok((doc, spec))
    }
}

/// Quadrature table as a document; the caller writes the CSV next to it.
pub fn table_doc(q: &QuadratureMeasure, csv_name: &str) -> MeasureDoc {
    MeasureDoc::QuadratureTable { label: Some(q.source.clone()), path: PathBuf::from(csv_name) }
}
