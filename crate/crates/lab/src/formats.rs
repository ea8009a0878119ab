//! On-disk formats.
//!
//! * Point clouds and quadrature tables: CSV with columns `re,im,weight`.
//! * Green's function grids: CSV `x,y,green,escaped_at`, or a raw
//!   little-endian binary (all `green` values as `f64`, then all `escaped_at`
//!   values as `u32`, row-major with the imaginary axis slow) described by a
//!   JSON header.
//! * Grid sets: binary PBM (`P4`) with the top row at the largest imaginary
//!   part, plus a JSON header carrying the lattice.
//! * Reports and summaries: JSON with keys in sorted order.
//!
//! Every CSV we write starts with `# config_sha256=<hex> seed=<n>`; readers
//! skip `#` lines.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use brolin_core::dynamics::GridField;
use brolin_core::grid::{GridSet, Lattice, NamedShape, SetProvenance};
use brolin_core::measure::{EmpiricalMeasure, Provenance, QuadratureMeasure};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

/// Provenance line for CSV outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_sha256: String,
    pub seed: u64,
}

impl Stamp {
    pub fn new(config: &impl Serialize, seed: u64) -> LabResult<Self> {
        Ok(Stamp { config_sha256: sha256_hex(canonical_json(config)?.as_bytes()), seed })
    }

    pub fn line(&self) -> String {
        format!("# config_sha256={} seed={}\n", self.config_sha256, self.seed)
    }

    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix("# config_sha256=")?;
        let (hash, seed) = rest.split_once(" seed=")?;
        Some(Stamp { config_sha256: hash.to_string(), seed: seed.parse().ok()? })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with object keys sorted, newline-terminated.
pub fn canonical_json(v: &impl Serialize) -> LabResult<String> {
    let value = serde_json::to_value(v).map_err(|e| LabError::Input(format!("serialization: {e}")))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| LabError::Input(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Deserializes with the path of the offending key in the error message.
pub fn from_json_str<T: DeserializeOwned>(s: &str, origin: &Path) -> LabResult<T> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        if at == "." {
            LabError::parse(origin, inner.to_string())
        } else {
            LabError::parse(origin, format!("at `{at}`: {inner}"))
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> LabResult<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    from_json_str(&text, path)
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn write_json(path: &Path, v: &impl Serialize) -> LabResult<()> {
    write_text(path, &canonical_json(v)?)
}

/// CSV text: optional stamp line, header row, then records.
pub fn csv_text<I, R>(stamp: Option<&Stamp>, header: &[&str], rows: I) -> LabResult<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    if let Some(s) = stamp {
        buf.extend_from_slice(s.line().as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| LabError::Input(format!("csv: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| LabError::Input(format!("csv: {e}")))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses a numeric CSV (header required, `#` lines skipped).
pub fn read_csv_table(path: &Path, expect: &[&str]) -> LabResult<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_csv_table(&text, path, expect)
}

pub fn parse_csv_table(text: &str, origin: &Path, expect: &[&str]) -> LabResult<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| LabError::parse(origin, e.to_string()))?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expect {
        return Err(LabError::parse(origin, format!("expected columns {expect:?}, found {got:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| LabError::parse(origin, e.to_string()))?;
        let row = rec
            .iter()
            .zip(expect)
            .map(|(f, col)| {
                f.parse::<f64>().map_err(|_| LabError::parse(origin, format!("row {}: bad {col} value {f:?}", line + 1)))
            })
            .collect::<LabResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

const POINT_COLUMNS: [&str; 3] = ["re", "im", "weight"];

fn point_rows<'a>(points: &'a [Complex64], weights: &'a [f64]) -> impl Iterator<Item = [String; 3]> + 'a {
    points.iter().zip(weights).map(|(z, w)| [z.re.to_string(), z.im.to_string(), w.to_string()])
}

pub fn write_empirical_csv(path: &Path, m: &EmpiricalMeasure, stamp: Option<&Stamp>) -> LabResult<()> {
    write_text(path, &csv_text(stamp, &POINT_COLUMNS, point_rows(&m.points, &m.weights))?)
}

pub fn read_empirical_csv(path: &Path, provenance: Provenance) -> LabResult<EmpiricalMeasure> {
    let rows = read_csv_table(path, &POINT_COLUMNS)?;
    let (points, weights) = rows.iter().map(|r| (Complex64::new(r[0], r[1]), r[2])).unzip();
    Ok(EmpiricalMeasure::new(points, weights, provenance)?)
}

pub fn write_quadrature_csv(path: &Path, q: &QuadratureMeasure, stamp: Option<&Stamp>) -> LabResult<()> {
    write_text(path, &csv_text(stamp, &POINT_COLUMNS, point_rows(&q.nodes, &q.weights))?)
}

/// Reads a table; weights are renormalized when they sum to within 1e-6 of 1.
pub fn read_quadrature_csv(path: &Path) -> LabResult<QuadratureMeasure> {
    let rows = read_csv_table(path, &POINT_COLUMNS)?;
    let (nodes, weights): (Vec<Complex64>, Vec<f64>) = rows.iter().map(|r| (Complex64::new(r[0], r[1]), r[2])).unzip();
    let total: f64 = weights.iter().sum();
    let weights = if (total - 1.0).abs() <= 1e-6 { weights.iter().map(|w| w / total).collect() } else { weights };
    let source = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(QuadratureMeasure::new(nodes, weights, source)?)
}

pub fn write_grid_field_csv(path: &Path, g: &GridField, stamp: Option<&Stamp>) -> LabResult<()> {
    let lat = g.lattice;
    let rows = (0..lat.len()).map(|idx| {
        let z = lat.center_of(idx);
        [z.re.to_string(), z.im.to_string(), g.values[idx].to_string(), g.escaped_at[idx].to_string()]
    });
    write_text(path, &csv_text(stamp, &["x", "y", "green", "escaped_at"], rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFieldHeader {
    pub lattice: Lattice,
    pub k_max: usize,
    pub below_resolution: bool,
    /// File with the payload, relative to the header.
    pub data: PathBuf,
    pub layout: String,
}

const FIELD_LAYOUT: &str = "green:f64le[ny*nx] then escaped_at:u32le[ny*nx], row-major, im slow";

pub fn write_grid_field_binary(header_path: &Path, data_name: &str, g: &GridField) -> LabResult<()> {
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let data_path = dir.join(data_name);
    let mut bytes = Vec::with_capacity(g.values.len() * 12);
    for v in &g.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for e in &g.escaped_at {
        bytes.extend_from_slice(&e.to_le_bytes());
    }
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let f = fs::File::create(&data_path).map_err(|e| LabError::io(&data_path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(&bytes).map_err(|e| LabError::io(&data_path, e))?;
    let header = GridFieldHeader {
        lattice: g.lattice,
        k_max: g.k_max,
        below_resolution: g.below_resolution,
        data: PathBuf::from(data_name),
        layout: FIELD_LAYOUT.into(),
    };
    write_json(header_path, &header)
}

pub fn read_grid_field_binary(header_path: &Path) -> LabResult<GridField> {
    let h: GridFieldHeader = read_json(header_path)?;
    let data_path = header_path.parent().unwrap_or(Path::new(".")).join(&h.data);
    let mut bytes = Vec::new();
    fs::File::open(&data_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| LabError::io(&data_path, e))?;
    let n = h.lattice.len();
    if bytes.len() != 12 * n {
        return Err(LabError::parse(&data_path, format!("expected {} bytes, found {}", 12 * n, bytes.len())));
    }
    let (vals, esc) = bytes.split_at(8 * n);
    let values = vals.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let escaped_at = esc.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok(GridField { lattice: h.lattice, values, escaped_at, k_max: h.k_max, below_resolution: h.below_resolution })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSetHeader {
    pub lattice: Lattice,
    pub provenance: SetProvenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<NamedShape>,
    pub count: usize,
    pub mask: PathBuf,
}

pub fn pbm_bytes(s: &GridSet) -> Vec<u8> {
    let lat = s.lattice;
    let mut out = format!("P4\n{} {}\n", lat.nx, lat.ny).into_bytes();
    let row_bytes = lat.nx.div_ceil(8);
    for j in (0..lat.ny).rev() {
        let mut row = vec![0u8; row_bytes];
        for i in 0..lat.nx {
            if s.get(i, j) {
                row[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Mask from `P4` bytes, bottom row first in the result.
pub fn parse_pbm(bytes: &[u8], origin: &Path) -> LabResult<(usize, usize, Vec<bool>)> {
    let bad = |m: &str| LabError::parse(origin, m.to_string());
    let mut pos = 0;
    let mut token = || -> LabResult<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P4" {
        return Err(bad("not a binary PBM (P4)"));
    }
    let nx: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let ny: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    pos += 1;
    let row_bytes = nx.div_ceil(8);
    let body = bytes.get(pos..).ok_or_else(|| bad("missing raster"))?;
    if body.len() != row_bytes * ny {
        return Err(bad("raster size does not match the header"));
    }
    let mut mask = vec![false; nx * ny];
    for (r, row) in body.chunks_exact(row_bytes).enumerate() {
        let j = ny - 1 - r;
        for i in 0..nx {
            mask[j * nx + i] = row[i / 8] & (0x80 >> (i % 8)) != 0;
        }
    }
    Ok((nx, ny, mask))
}

pub fn write_gridset(header_path: &Path, pbm_name: &str, s: &GridSet) -> LabResult<()> {
    let dir = header_path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let pbm_path = dir.join(pbm_name);
    fs::write(&pbm_path, pbm_bytes(s)).map_err(|e| LabError::io(&pbm_path, e))?;
    let header = GridSetHeader {
        lattice: s.lattice,
        provenance: s.provenance,
        shape: s.shape,
        count: s.count(),
        mask: PathBuf::from(pbm_name),
    };
    write_json(header_path, &header)
}

pub fn read_gridset(header_path: &Path) -> LabResult<GridSet> {
    let h: GridSetHeader = read_json(header_path)?;
    let pbm_path: PathBuf = header_path.parent().unwrap_or(Path::new(".")).join(&h.mask);
    let bytes = fs::read(&pbm_path).map_err(|e| LabError::io(&pbm_path, e))?;
    let (nx, ny, mask) = parse_pbm(&bytes, &pbm_path)?;
    if (nx, ny) != (h.lattice.nx, h.lattice.ny) {
        return Err(LabError::parse(&pbm_path, "raster size disagrees with the header lattice"));
    }
    let mut s = GridSet::new(h.lattice, mask, h.provenance)?;
    s.shape = h.shape;
    Ok(s)
}
