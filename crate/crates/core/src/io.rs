//! JSON file formats for body and matrix tuples, report envelopes with
//! reproducibility metadata, and git-style content hashing.
//!
//! Numbers in input files are either plain JSON numbers or strings of the
//! form `"p/q"`, which are parsed as exact rationals and rounded once to
//! the nearest double.

use crate::discriminant::MatrixTuple;
use crate::geometry::{BodyTuple, ConvexBody, Limits};
use crate::rational::{parse_rational, rational_to_f64};
use crate::solver::{CapacityReport, DecompositionResult, SubsetCertificate};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A coordinate that is either a decimal number or an exact fraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coordinate {
    Real(f64),
    Fraction(String),
}

impl Coordinate {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Coordinate::Real(v) => {
                if v.is_finite() {
                    Ok(*v)
                } else {
                    Err(Error::ParseInput("non-finite coordinate".into()))
                }
            }
            Coordinate::Fraction(s) => Ok(rational_to_f64(&parse_rational(s)?)),
        }
    }
}

fn vec_f64(v: &[Coordinate]) -> Result<Vec<f64>> {
    v.iter().map(Coordinate::to_f64).collect()
}

fn rows_f64(v: &[Vec<Coordinate>]) -> Result<Vec<Vec<f64>>> {
    v.iter().map(|r| vec_f64(r)).collect()
}

/// One body entry in a tuple file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodySpec {
    Box { lower: Vec<Coordinate>, upper: Vec<Coordinate> },
    Zonotope { center: Vec<Coordinate>, generators: Vec<Vec<Coordinate>> },
    Vpolytope { vertices: Vec<Vec<Coordinate>> },
}

/// Schema of a body-tuple file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyFile {
    pub dim: usize,
    pub bodies: Vec<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A parsed and validated body tuple together with display labels
/// (defaulted to `K1..Kn` when the file omits them).
#[derive(Debug, Clone)]
pub struct LabeledTuple {
    pub tuple: BodyTuple,
    pub labels: Vec<String>,
}

/// Parses a body-tuple file, validating the schema and every body.
pub fn parse_body_file(text: &str) -> Result<LabeledTuple> {
    parse_body_file_with(text, &Limits::default())
}

/// [`parse_body_file`] with explicit representation limits.
pub fn parse_body_file_with(text: &str, limits: &Limits) -> Result<LabeledTuple> {
    let file: BodyFile =
        serde_json::from_str(text).map_err(|e| Error::ParseInput(e.to_string()))?;
    let n = file.bodies.len();
    if n == 0 {
        return Err(Error::ParseInput("body list is empty".into()));
    }
    let mut bodies = Vec::with_capacity(n);
    for (i, spec) in file.bodies.iter().enumerate() {
        let body = match spec {
            BodySpec::Box { lower, upper } => ConvexBody::cuboid(vec_f64(lower)?, vec_f64(upper)?),
            BodySpec::Zonotope { center, generators } => {
                ConvexBody::zonotope(vec_f64(center)?, rows_f64(generators)?)
            }
            BodySpec::Vpolytope { vertices } => {
                ConvexBody::vpolytope_with(rows_f64(vertices)?, limits)
            }
        }
        .map_err(|e| Error::ParseInput(format!("body {}: {e}", i + 1)))?;
        if body.dim() != file.dim {
            return Err(Error::ParseInput(format!(
                "body {} has dimension {}, file declares {}",
                i + 1,
                body.dim(),
                file.dim
            )));
        }
        bodies.push(body);
    }
    let labels = match file.labels {
        Some(ls) => {
            if ls.len() != n {
                return Err(Error::ParseInput(format!("{} labels for {} bodies", ls.len(), n)));
            }
            ls
        }
        None => (1..=n).map(|i| format!("K{i}")).collect(),
    };
    let tuple = BodyTuple::new(bodies).map_err(|e| Error::ParseInput(e.to_string()))?;
    Ok(LabeledTuple { tuple, labels })
}

/// Serializes a tuple back to the file schema (numbers only; fractions in
/// the input are not preserved).
pub fn body_file_to_json(tuple: &BodyTuple, labels: Option<&[String]>) -> Result<String> {
    let reals = |v: &[f64]| v.iter().map(|&x| Coordinate::Real(x)).collect::<Vec<_>>();
    let bodies: Vec<BodySpec> = tuple
        .bodies()
        .iter()
        .map(|b| match b {
            ConvexBody::Box { lower, upper } => {
                BodySpec::Box { lower: reals(lower), upper: reals(upper) }
            }
            ConvexBody::Zonotope { center, generators } => BodySpec::Zonotope {
                center: reals(center),
                generators: generators.iter().map(|g| reals(g)).collect(),
            },
            ConvexBody::VPolytope { vertices } => {
                BodySpec::Vpolytope { vertices: vertices.iter().map(|v| reals(v)).collect() }
            }
        })
        .collect();
    let file = BodyFile { dim: tuple.n(), bodies, labels: labels.map(|ls| ls.to_vec()) };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Schema of a matrix-tuple file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub matrices: Vec<Vec<Vec<Coordinate>>>,
}

/// Parses a matrix-tuple file into a validated symmetric PSD tuple.
pub fn parse_matrix_file(text: &str) -> Result<MatrixTuple> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| Error::ParseInput(e.to_string()))?;
    if file.matrices.len() != file.n {
        return Err(Error::ParseInput(format!(
            "{} matrices for declared n = {}",
            file.matrices.len(),
            file.n
        )));
    }
    let mut mats = Vec::with_capacity(file.n);
    for (i, rows) in file.matrices.iter().enumerate() {
        if rows.len() != file.n || rows.iter().any(|r| r.len() != file.n) {
            return Err(Error::ParseInput(format!(
                "matrix {} is not {}x{}",
                i + 1,
                file.n,
                file.n
            )));
        }
        let flat = rows_f64(rows)?;
        mats.push(nalgebra::DMatrix::from_fn(file.n, file.n, |r, c| flat[r][c]));
    }
    MatrixTuple::new(mats).map_err(|e| Error::ParseInput(e.to_string()))
}

/// Serializes a matrix tuple to the file schema.
pub fn matrix_file_to_json(tuple: &MatrixTuple) -> Result<String> {
    let matrices: Vec<Vec<Vec<Coordinate>>> = tuple
        .matrices()
        .iter()
        .map(|m| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| Coordinate::Real(m[(r, c)])).collect())
                .collect()
        })
        .collect();
    let file = MatrixFile { n: tuple.n(), matrices };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Git-style content hash: SHA-256 over `"blob {len}\0"` followed by the
/// bytes, rendered as lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Reproducibility metadata attached to every emitted report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub command: String,
    pub input_sha256: String,
    pub epsilon: f64,
    pub samples: u64,
    /// `"partial"` (n!-scaled derivative convention) or `"classical"`.
    pub normalization: String,
    /// Human-readable statement of how emitted values relate to the
    /// internal n!-scaled convention.
    pub normalization_note: String,
    /// Wall-clock duration; the only field that varies between identical
    /// runs, stripped by [`json_without_timing`] for byte comparisons.
    pub wall_time_ms: f64,
}

/// A capacity-style report plus its run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub report: CapacityReport,
    /// Independently computed exact value (polarization), when affordable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_value: Option<f64>,
    pub meta: RunMeta,
}

impl ReportEnvelope {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseInput(e.to_string()))
    }
}

/// Removes the wall-time field so otherwise-identical runs compare
/// byte-for-byte.
pub fn json_without_timing(text: &str) -> Result<String> {
    let mut v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ParseInput(e.to_string()))?;
    if let Some(meta) = v.get_mut("meta").and_then(|m| m.as_object_mut()) {
        meta.remove("wall_time_ms");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Serializable view of a decomposition (block indices and span bases;
/// the per-block tuples stay in memory).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub blocks: Vec<BlockSummary>,
    pub zero_certificate: Option<SubsetCertificate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSummary {
    pub indices: Vec<usize>,
    pub basis: Vec<Vec<f64>>,
}

impl From<&DecompositionResult> for DecompositionSummary {
    fn from(d: &DecompositionResult) -> Self {
        DecompositionSummary {
            blocks: d
                .blocks
                .iter()
                .map(|b| BlockSummary { indices: b.indices.clone(), basis: b.basis.clone() })
                .collect(),
            zero_certificate: d.zero_certificate.clone(),
        }
    }
}
