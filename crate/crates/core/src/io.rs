//! JSON documents for models, states, vectors and subspaces, operator dumps
//! and CSV helpers.
//!
//! Every document carries `"format": 1`. Complex numbers are `[re, im]`
//! pairs; matrices are row-major lists of rows.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::fmt17;
use crate::lindblad::DensityMatrix;
use crate::model::{ModelSpec, RawModel, StateVector};
use crate::numerics::{CMatrix, CVector, SubspaceBasis, C64};
use crate::spectrum::SpectralPair;

pub const FORMAT_VERSION: u32 = 1;

type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn unpair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn check_format(format: u32) -> Result<()> {
    if format != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format {format}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| pair(m[(r, c)])).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<Pair>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Format(format!("row {i} has {} entries, expected {ncols}", rows[i].len())));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| unpair(&rows[r][c])))
}

fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|&z| pair(z)).collect()
}

fn pairs_to_vector(p: &[Pair]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(unpair))
}

/// Density-matrix document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub format: u32,
    pub kind: String,
    pub dim: usize,
    pub entries: Vec<Vec<Pair>>,
}

/// State-vector document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorFile {
    pub format: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub entries: Vec<Pair>,
}

/// Subspace document: an orthonormal basis listed vector by vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub format: u32,
    pub kind: String,
    pub name: String,
    pub ambient_dim: usize,
    pub dim: usize,
    pub basis: Vec<Vec<Pair>>,
}

const DENSITY_KIND: &str = "density_matrix";
const VECTOR_KIND: &str = "state_vector";
const SUBSPACE_KIND: &str = "subspace";

fn check_kind(kind: &str, expected: &str) -> Result<()> {
    if kind != expected {
        return Err(Error::Format(format!("document kind {kind:?}, expected {expected:?}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn model_to_json(spec: &ModelSpec) -> String {
    let mut raw = spec.to_raw();
    raw.format = Some(FORMAT_VERSION);
    to_json(&raw)
}

/// Parses and validates a model document.
pub fn model_from_json(text: &str) -> Result<ModelSpec> {
    let raw = RawModel::from_json(text)?;
    if let Some(f) = raw.format {
        check_format(f)?;
    }
    raw.validate()
}

pub fn state_to_json(rho: &DensityMatrix) -> String {
    to_json(&StateFile {
        format: FORMAT_VERSION,
        kind: DENSITY_KIND.into(),
        dim: rho.dim(),
        entries: matrix_to_rows(rho.matrix()),
    })
}

/// Parses a density-matrix document and validates it as a state.
pub fn state_from_json(text: &str) -> Result<DensityMatrix> {
    let f: StateFile = from_json(text)?;
    check_format(f.format)?;
    check_kind(&f.kind, DENSITY_KIND)?;
    let m = rows_to_matrix(&f.entries)?;
    if m.nrows() != f.dim || m.ncols() != f.dim {
        return Err(Error::Format(format!("dim {} but entries are {}x{}", f.dim, m.nrows(), m.ncols())));
    }
    DensityMatrix::new(m)
}

pub fn vector_to_json(v: &StateVector) -> String {
    to_json(&VectorFile {
        format: FORMAT_VERSION,
        kind: VECTOR_KIND.into(),
        label: v.label.clone(),
        entries: vector_to_pairs(&v.entries),
    })
}

pub fn vector_from_json(text: &str) -> Result<StateVector> {
    let f: VectorFile = from_json(text)?;
    check_format(f.format)?;
    check_kind(&f.kind, VECTOR_KIND)?;
    Ok(StateVector { entries: pairs_to_vector(&f.entries), label: f.label })
}

pub fn subspace_file(name: &str, s: &SubspaceBasis) -> SubspaceFile {
    SubspaceFile {
        format: FORMAT_VERSION,
        kind: SUBSPACE_KIND.into(),
        name: name.into(),
        ambient_dim: s.ambient_dim(),
        dim: s.dim(),
        basis: s.vectors().iter().map(vector_to_pairs).collect(),
    }
}

pub fn subspace_to_json(name: &str, s: &SubspaceBasis) -> String {
    to_json(&subspace_file(name, s))
}

/// Parses a subspace document; the listed vectors must be orthonormal.
pub fn subspace_from_json(text: &str) -> Result<(String, SubspaceBasis)> {
    let f: SubspaceFile = from_json(text)?;
    check_format(f.format)?;
    check_kind(&f.kind, SUBSPACE_KIND)?;
    if f.basis.len() != f.dim {
        return Err(Error::Format(format!("dim {} but {} basis vectors", f.dim, f.basis.len())));
    }
    if let Some(i) = f.basis.iter().position(|v| v.len() != f.ambient_dim) {
        return Err(Error::Format(format!("basis vector {i} has the wrong length")));
    }
    let m = CMatrix::from_fn(f.ambient_dim, f.dim, |r, c| unpair(&f.basis[c][r]));
    Ok((f.name, SubspaceBasis::from_orthonormal(m)?))
}

/// Comparison of the analytic fast recurrent subspace with the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericCheck {
    pub numeric_dim: usize,
    pub max_angle: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Several named subspaces of one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub format: u32,
    pub kind: String,
    pub dims: Vec<usize>,
    pub subspaces: Vec<SubspaceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_check: Option<NumericCheck>,
}

pub fn subspace_report_to_json(
    spec: &ModelSpec,
    named: &[(&str, &SubspaceBasis)],
    numeric_check: Option<NumericCheck>,
) -> String {
    to_json(&SubspaceReport {
        format: FORMAT_VERSION,
        kind: "subspaces".into(),
        dims: spec.dims.clone(),
        subspaces: named.iter().map(|(n, b)| subspace_file(n, b)).collect(),
        numeric_check,
    })
}

pub fn subspace_report_from_json(text: &str) -> Result<SubspaceReport> {
    let r: SubspaceReport = from_json(text)?;
    check_format(r.format)?;
    check_kind(&r.kind, "subspaces")?;
    Ok(r)
}

/// Named matrix in an operator dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Pair>>,
}

/// Operator dump with the conventions needed to interpret it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDump {
    pub format: u32,
    pub conventions: Vec<String>,
    pub model: RawModel,
    pub operators: Vec<OperatorEntry>,
}

/// Convention lines written at the top of every operator dump.
pub fn conventions() -> Vec<String> {
    [
        "basis: levels 0..N+1 in order, level k occupies coordinates offsets[k]..offsets[k]+n_k",
        "zeta_k = exp(2 pi i / n_k)",
        "entangled vector phi_{a_k} = n_k^{-1/2} sum_b zeta_k^{-ab} |b_k>",
        "Z_k = n_k^{-1/2} sum_{a,b} zeta_k^{ab} |a_{k+1}><b_k|",
        "superoperators act on column-stacked vec(X); vec(AXB) = (B^T kron A) vec(X)",
        "matrices are row-major lists of rows; complex entries are [re, im]",
    ]
    .map(String::from)
    .to_vec()
}

pub fn operator_dump(spec: &ModelSpec, ops: &[(String, CMatrix)]) -> String {
    let mut raw = spec.to_raw();
    raw.format = Some(FORMAT_VERSION);
    to_json(&OperatorDump {
        format: FORMAT_VERSION,
        conventions: conventions(),
        model: raw,
        operators: ops
            .iter()
            .map(|(name, m)| OperatorEntry {
                name: name.clone(),
                rows: m.nrows(),
                cols: m.ncols(),
                entries: matrix_to_rows(m),
            })
            .collect(),
    })
}

/// CSV of closed-form spectral pairs: `value,level,tau_index`.
pub fn spectrum_csv(pairs: &[SpectralPair]) -> String {
    let mut out = String::from("value,level,tau_index\n");
    for p in pairs {
        out.push_str(&format!("{},{},{}\n", fmt17(p.value), p.level, p.tau_index));
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<ModelSpec> {
    model_from_json(&read_text(path)?)
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    state_from_json(&read_text(path)?)
}

pub fn read_vector(path: &Path) -> Result<StateVector> {
    vector_from_json(&read_text(path)?)
}

/// Writes a state, reads it back and checks that the round trip is exact.
pub fn write_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_text(path, &state_to_json(rho))?;
    let back = read_state(path)?;
    let diff = (back.matrix() - rho.matrix()).norm();
    if diff != 0.0 {
        return Err(Error::Format(format!("{}: round trip changed the state by {diff:e}", path.display())));
    }
    Ok(())
}
