//! JSON file formats for states, ensembles and local unitaries.
//!
//! Complex numbers are `[re, im]` pairs. Pure amplitudes are listed in flat
//! row-major order (first party most significant); matrices are lists of rows.
//! Floats are written in shortest round-trip form, so parse -> write -> parse
//! is exact.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::linalg::{c, CMatrix, CVector};
use crate::separable::{purify_ensemble, Ensemble, EnsembleTerm};
use crate::tensor::{DensityMatrix, LocalUnitary, PartitionSpec, PureState};

pub const FORMAT_VERSION: &str = "1";

/// Largest allowed distance between a pure payload and the purification of
/// its embedded ensemble.
pub const EMBED_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("bad field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl FileError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        FileError::Field {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn parse_json(text: &str) -> Result<Value, FileError> {
    serde_json::from_str(text).map_err(|e| FileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyEntry {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub p: f64,
    pub vectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
    Ensemble,
}

/// A state as stored on disk.
///
/// `ensemble` is optional metadata on pure and density files: a density file
/// may carry a separable ensemble that reconstructs it, and a pure file may
/// carry the ensemble it purifies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateFile {
    pub format_version: String,
    pub parties: Vec<PartyEntry>,
    pub kind: StateKind,
    pub payload: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<TermEntry>>,
}

#[derive(Debug, Clone)]
pub enum LoadedState {
    Pure {
        state: PureState,
        ensemble: Option<Ensemble>,
    },
    Density {
        state: DensityMatrix,
        ensemble: Option<Ensemble>,
    },
    Ensemble(Ensemble),
}

impl LoadedState {
    pub fn spec(&self) -> &PartitionSpec {
        match self {
            LoadedState::Pure { state, .. } => state.spec(),
            LoadedState::Density { state, .. } => state.spec(),
            LoadedState::Ensemble(e) => e.spec(),
        }
    }

    /// The separable ensemble carried by the file, if any.
    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            LoadedState::Pure { ensemble, .. } | LoadedState::Density { ensemble, .. } => ensemble.as_ref(),
            LoadedState::Ensemble(e) => Some(e),
        }
    }
}

fn pair(z: &num_complex::Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn vector_json(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(pair).collect()
}

pub fn matrix_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()).collect()
}

fn parties_json(spec: &PartitionSpec) -> Vec<PartyEntry> {
    spec.parties()
        .iter()
        .map(|p| PartyEntry {
            label: p.label.clone(),
            dim: p.dim,
        })
        .collect()
}

fn terms_json(e: &Ensemble) -> Vec<TermEntry> {
    e.terms()
        .iter()
        .map(|t| TermEntry {
            p: t.weight,
            vectors: t.vectors.iter().map(vector_json).collect(),
        })
        .collect()
}

impl StateFile {
    pub fn from_pure(psi: &PureState) -> Self {
        StateFile {
            format_version: FORMAT_VERSION.into(),
            parties: parties_json(psi.spec()),
            kind: StateKind::Pure,
            payload: serde_json::to_value(vector_json(psi.amplitudes())).expect("finite floats"),
            ensemble: None,
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        StateFile {
            format_version: FORMAT_VERSION.into(),
            parties: parties_json(rho.spec()),
            kind: StateKind::Density,
            payload: serde_json::to_value(matrix_json(rho.matrix())).expect("finite floats"),
            ensemble: None,
        }
    }

    pub fn from_ensemble(e: &Ensemble) -> Self {
        StateFile {
            format_version: FORMAT_VERSION.into(),
            parties: parties_json(e.spec()),
            kind: StateKind::Ensemble,
            payload: serde_json::to_value(terms_json(e)).expect("finite floats"),
            ensemble: None,
        }
    }

    pub fn with_ensemble(mut self, e: &Ensemble) -> Self {
        self.ensemble = Some(terms_json(e));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files serialize")
    }
}

fn number(v: &Value, path: &str) -> Result<f64, FileError> {
    let x = v.as_f64().ok_or_else(|| FileError::field(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(FileError::field(path, "non-finite number"));
    }
    Ok(x)
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, FileError> {
    v.as_array().ok_or_else(|| FileError::field(path, "expected an array"))
}

fn complex(v: &Value, path: &str) -> Result<num_complex::Complex64, FileError> {
    let a = array(v, path)?;
    if a.len() != 2 {
        return Err(FileError::field(path, "expected [re, im]"));
    }
    Ok(c(number(&a[0], &format!("{path}[0]"))?, number(&a[1], &format!("{path}[1]"))?))
}

fn vector(v: &Value, len: usize, path: &str) -> Result<CVector, FileError> {
    let a = array(v, path)?;
    if a.len() != len {
        return Err(FileError::field(path, format!("expected {len} entries, found {}", a.len())));
    }
    let entries = a
        .iter()
        .enumerate()
        .map(|(i, x)| complex(x, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CVector::from_vec(entries))
}

fn matrix(v: &Value, n: usize, path: &str) -> Result<CMatrix, FileError> {
    let rows = array(v, path)?;
    if rows.len() != n {
        return Err(FileError::field(path, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let r = vector(row, n, &format!("{path}[{i}]"))?;
        m.set_row(i, &r.transpose());
    }
    Ok(m)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a serde_json::Map<String, Value>, FileError> {
    v.as_object().ok_or_else(|| FileError::field(path, "expected an object"))
}

fn required<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FileError> {
    obj.get(key)
        .ok_or_else(|| FileError::field(format!("{path}{key}"), "missing field"))
}

fn check_version(obj: &serde_json::Map<String, Value>) -> Result<(), FileError> {
    match required(obj, "format_version", "")?.as_str() {
        Some(FORMAT_VERSION) => Ok(()),
        Some(other) => Err(FileError::field("format_version", format!("unsupported version `{other}`"))),
        None => Err(FileError::field("format_version", "expected a string")),
    }
}

fn parse_parties(v: &Value) -> Result<PartitionSpec, FileError> {
    let list = array(v, "parties")?;
    let mut parties = Vec::with_capacity(list.len());
    for (i, p) in list.iter().enumerate() {
        let path = format!("parties[{i}]");
        let entry: PartyEntry =
            serde_json::from_value(p.clone()).map_err(|e| FileError::field(&path, e.to_string()))?;
        parties.push((entry.label, entry.dim));
    }
    Ok(PartitionSpec::new(parties)?)
}

fn parse_terms(v: &Value, spec: &PartitionSpec, path: &str) -> Result<Ensemble, FileError> {
    let list = array(v, path)?;
    let mut terms = Vec::with_capacity(list.len());
    for (i, t) in list.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let obj = object(t, &tp)?;
        let weight = number(required(obj, "p", &format!("{tp}."))?, &format!("{tp}.p"))?;
        let vp = format!("{tp}.vectors");
        let vs = array(required(obj, "vectors", &format!("{tp}."))?, &vp)?;
        if vs.len() != spec.len() {
            return Err(FileError::field(&vp, format!("expected one vector per party ({})", spec.len())));
        }
        let vectors = vs
            .iter()
            .enumerate()
            .map(|(k, x)| vector(x, spec.dim(k), &format!("{vp}[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        terms.push(EnsembleTerm { weight, vectors });
    }
    Ok(Ensemble::new(spec.clone(), terms)?)
}

/// Parses and validates a state file.
pub fn parse_state(text: &str) -> Result<LoadedState, FileError> {
    let doc = parse_json(text)?;
    let obj = object(&doc, "$")?;
    check_version(obj)?;
    let spec = parse_parties(required(obj, "parties", "")?)?;
    let kind: StateKind = serde_json::from_value(required(obj, "kind", "")?.clone())
        .map_err(|_| FileError::field("kind", "expected \"pure\", \"density\" or \"ensemble\""))?;
    let payload = required(obj, "payload", "")?;
    let ensemble = match obj.get("ensemble") {
        Some(v) if kind != StateKind::Ensemble => Some(v),
        Some(_) => return Err(FileError::field("ensemble", "not allowed on ensemble files")),
        None => None,
    };
    let n = spec.total_dim();
    match kind {
        StateKind::Pure => {
            let state = PureState::new(spec.clone(), vector(payload, n, "payload")?)?;
            let ensemble = match ensemble {
                Some(v) => {
                    if spec.len() != 3 {
                        return Err(FileError::field("ensemble", "pure files carry an ensemble only as its purification"));
                    }
                    let sub = spec.subspec(&[0, 1]);
                    let e = parse_terms(v, &sub, "ensemble")?;
                    let expected = purify_ensemble(&e);
                    if expected.state().spec().dims() != spec.dims() {
                        return Err(FileError::field("ensemble", "line count does not match the auxiliary dimension"));
                    }
                    let dist = (expected.state().amplitudes() - state.amplitudes())
                        .iter()
                        .fold(0.0_f64, |m, z| m.max(z.norm()));
                    if dist > EMBED_TOL {
                        return Err(Error::NotAPurification { distance: dist }.into());
                    }
                    Some(e)
                }
                None => None,
            };
            Ok(LoadedState::Pure { state, ensemble })
        }
        StateKind::Density => {
            let state = DensityMatrix::new(spec.clone(), matrix(payload, n, "payload")?)?;
            let ensemble = match ensemble {
                Some(v) => {
                    let e = parse_terms(v, &spec, "ensemble")?;
                    let dist = crate::linalg::max_abs(&(e.density().matrix() - state.matrix()));
                    if dist > EMBED_TOL {
                        return Err(Error::ReducedStateMismatch { distance: dist }.into());
                    }
                    Some(e)
                }
                None => None,
            };
            Ok(LoadedState::Density { state, ensemble })
        }
        StateKind::Ensemble => Ok(LoadedState::Ensemble(parse_terms(payload, &spec, "payload")?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorEntry {
    pub label: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// A local unitary as stored on disk. Parties without a factor act as identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitaryFile {
    pub format_version: String,
    pub factors: Vec<FactorEntry>,
    pub global_phase: f64,
}

impl UnitaryFile {
    pub fn from_local(u: &LocalUnitary) -> Self {
        UnitaryFile {
            format_version: FORMAT_VERSION.into(),
            factors: u
                .spec()
                .parties()
                .iter()
                .zip(u.factors())
                .map(|(p, m)| FactorEntry {
                    label: p.label.clone(),
                    matrix: matrix_json(m),
                })
                .collect(),
            global_phase: u.global_phase(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("unitary files serialize")
    }
}

/// Parses a unitary file against the partition it will act on.
pub fn parse_unitary(text: &str, spec: &PartitionSpec) -> Result<LocalUnitary, FileError> {
    let doc = parse_json(text)?;
    let obj = object(&doc, "$")?;
    check_version(obj)?;
    let phase = match obj.get("global_phase") {
        Some(v) => number(v, "global_phase")?,
        None => 0.0,
    };
    let mut factors: Vec<Option<CMatrix>> = vec![None; spec.len()];
    for (i, f) in array(required(obj, "factors", "")?, "factors")?.iter().enumerate() {
        let path = format!("factors[{i}]");
        let fo = object(f, &path)?;
        let label = required(fo, "label", &format!("{path}."))?
            .as_str()
            .ok_or_else(|| FileError::field(format!("{path}.label"), "expected a string"))?;
        let k = spec.index_of(label)?;
        if factors[k].is_some() {
            return Err(Error::DuplicateLabel(label.to_string()).into());
        }
        factors[k] = Some(matrix(required(fo, "matrix", &format!("{path}."))?, spec.dim(k), &format!("{path}.matrix"))?);
    }
    let factors = factors
        .into_iter()
        .enumerate()
        .map(|(k, m)| m.unwrap_or_else(|| CMatrix::identity(spec.dim(k), spec.dim(k))))
        .collect();
    Ok(LocalUnitary::new(spec.clone(), factors, phase)?)
}

/// Parses a single vector file: `{"format_version": "1", "vector": [[re, im], ...]}`.
pub fn parse_vector(text: &str, dim: usize) -> Result<CVector, FileError> {
    let doc = parse_json(text)?;
    let obj = object(&doc, "$")?;
    check_version(obj)?;
    vector(required(obj, "vector", "")?, dim, "vector")
}

pub fn vector_file_json(v: &CVector) -> String {
    let doc = serde_json::json!({ "format_version": FORMAT_VERSION, "vector": vector_json(v) });
    serde_json::to_string_pretty(&doc).expect("vector files serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn pure_round_trip_is_exact() {
        let spec = PartitionSpec::new([("A", 2), ("B", 3)]).unwrap();
        let psi = catalog::random_state(&spec, 11);
        let text = StateFile::from_pure(&psi).to_json();
        match parse_state(&text).unwrap() {
            LoadedState::Pure { state, ensemble } => {
                assert_eq!(state, psi);
                assert!(ensemble.is_none());
                assert_eq!(StateFile::from_pure(&state).to_json(), text);
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn density_with_ensemble_round_trip() {
        let e = catalog::werner_ensemble(0.25).unwrap();
        let rho = catalog::werner(0.25).unwrap();
        let text = StateFile::from_density(&rho).with_ensemble(&e).to_json();
        let loaded = parse_state(&text).unwrap();
        assert_eq!(loaded.ensemble().unwrap().weights(), e.weights());
        match loaded {
            LoadedState::Density { state, .. } => assert_eq!(state.matrix(), rho.matrix()),
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn purification_carries_its_ensemble() {
        let e = catalog::werner_ensemble(0.1).unwrap();
        let p = purify_ensemble(&e);
        let text = StateFile::from_pure(p.state()).with_ensemble(&e).to_json();
        assert!(parse_state(&text).unwrap().ensemble().is_some());
        let wrong = StateFile::from_pure(p.state())
            .with_ensemble(&catalog::werner_ensemble(0.2).unwrap())
            .to_json();
        assert!(matches!(parse_state(&wrong), Err(FileError::Invalid(Error::NotAPurification { .. }))));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_state("{\n  \"format_version\": \"1\",\n  \"parties\": [,]\n}").unwrap_err();
        match err {
            FileError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_errors_carry_path() {
        let text = r#"{"format_version":"1","parties":[{"label":"A","dim":2}],"kind":"pure","payload":[[1,0],[0,"x"]]}"#;
        match parse_state(text).unwrap_err() {
            FileError::Field { path, .. } => assert_eq!(path, "payload[1][1]"),
            other => panic!("{other:?}"),
        }
        let overflow = r#"{"format_version":"1","parties":[{"label":"A","dim":1}],"kind":"pure","payload":[[1e999,0]]}"#;
        assert!(parse_state(overflow).is_err());
        let nan = r#"{"format_version":"1","parties":[{"label":"A","dim":1}],"kind":"pure","payload":[[NaN,0]]}"#;
        assert!(matches!(parse_state(nan), Err(FileError::Syntax { .. })));
    }

    #[test]
    fn validation_errors_are_forwarded() {
        let text = r#"{"format_version":"1","parties":[{"label":"A","dim":2}],"kind":"pure","payload":[[1,0],[1,0]]}"#;
        assert!(matches!(parse_state(text), Err(FileError::Invalid(Error::NotNormalized { .. }))));
        let text = r#"{"format_version":"2","parties":[],"kind":"pure","payload":[]}"#;
        assert!(matches!(parse_state(text), Err(FileError::Field { .. })));
    }

    #[test]
    fn unitary_files_default_to_identity() {
        let spec = PartitionSpec::qubits(&["A", "B"]).unwrap();
        let text = r#"{"format_version":"1","factors":[{"label":"B","matrix":[[[0,0],[1,0]],[[1,0],[0,0]]]}]}"#;
        let u = parse_unitary(text, &spec).unwrap();
        assert_eq!(u.factors()[0], CMatrix::identity(2, 2));
        assert_eq!(u.factors()[1][(0, 1)], c(1.0, 0.0));
        let back = parse_unitary(&UnitaryFile::from_local(&u).to_json(), &spec).unwrap();
        assert_eq!(back.factors(), u.factors());
        let bad = r#"{"format_version":"1","factors":[{"label":"B","matrix":[[[1,0],[1,0]],[[1,0],[0,0]]]}]}"#;
        assert!(matches!(parse_unitary(bad, &spec), Err(FileError::Invalid(Error::NotUnitary { .. }))));
    }
}
