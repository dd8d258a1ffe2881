use std::io::Read;
use std::path::Path;

use entgroup::analysis::{self, quotient_witness, DiscreteCandidate, TheoremChecks, WitnessOutcome};
use entgroup::catalog;
use entgroup::io::{self, matrix_json, FileError, LoadedState, StateFile, UnitaryFile};
use entgroup::linalg::c;
use entgroup::separable::{self, purify_ensemble, Ensemble};
use entgroup::tensor::{minimal_purification, DensityMatrix, PartitionSpec, PureState, StateRef};
use entgroup::Error;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::render;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("missing metadata: {0}")]
    Metadata(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::File(FileError::Syntax { .. } | FileError::Field { .. }) => 2,
            CliError::File(FileError::Invalid(e)) | CliError::Lib(e) => library_code(e),
            CliError::Invalid(_) => 3,
            CliError::Metadata(_) => 6,
        }
    }
}

fn library_code(e: &Error) -> u8 {
    match e {
        Error::ScopeGuard(_) | Error::NonQubit(_) => 4,
        Error::NotAStabilizer { .. } | Error::EigenvectorCondition { .. } | Error::PhaseSumCondition { .. } => 5,
        Error::OutOfRange(_) => 7,
        _ => 3,
    }
}

pub struct Settings {
    pub tol: f64,
    pub json: bool,
    pub timestamp: bool,
}

struct Input {
    text: String,
    digest: String,
}

fn read_input(path: &str) -> Result<Input, CliError> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    }
    let digest = format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())));
    Ok(Input { text, digest })
}

fn read_file(path: &Path) -> Result<Input, CliError> {
    read_input(&path.to_string_lossy())
}

#[derive(Serialize)]
struct Envelope<'a> {
    format_version: &'static str,
    command: &'a str,
    input_digest: &'a str,
    settings: Value,
    result: Value,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

struct Outcome {
    settings: Value,
    result: Value,
    warnings: Vec<String>,
    text: String,
}

fn finish(settings: &Settings, command: &str, input: &Input, outcome: Outcome) -> String {
    if !settings.json {
        let mut text = outcome.text;
        for w in &outcome.warnings {
            text.push_str(&format!("warning: {w}\n"));
        }
        return text;
    }
    let timestamp = settings.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let env = Envelope {
        format_version: io::FORMAT_VERSION,
        command,
        input_digest: &input.digest,
        settings: outcome.settings,
        result: outcome.result,
        warnings: outcome.warnings,
        timestamp,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// The analyzable state behind a file: ensembles become their density matrix.
enum Owned {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl Owned {
    fn as_ref(&self) -> StateRef<'_> {
        match self {
            Owned::Pure(p) => p.into(),
            Owned::Mixed(m) => m.into(),
        }
    }
}

fn state_of(loaded: &LoadedState) -> Owned {
    match loaded {
        LoadedState::Pure { state, .. } => Owned::Pure(state.clone()),
        LoadedState::Density { state, .. } => Owned::Mixed(state.clone()),
        LoadedState::Ensemble(e) => Owned::Mixed(e.density()),
    }
}

fn parse_grouping(spec: &PartitionSpec, grouping: &str) -> Result<Vec<Vec<usize>>, CliError> {
    let mut seen = vec![false; spec.len()];
    let mut groups = Vec::new();
    for group in grouping.split('|') {
        let labels: Vec<String> = if spec.index_of(group).is_ok() {
            vec![group.to_string()]
        } else if group.contains(',') {
            group.split(',').map(str::to_string).collect()
        } else {
            group.chars().map(String::from).collect()
        };
        let mut idx = Vec::new();
        for l in labels {
            let k = spec
                .index_of(&l)
                .map_err(|_| CliError::Usage(format!("unknown party `{l}` in grouping `{grouping}`")))?;
            if seen[k] {
                return Err(CliError::Usage(format!("party `{l}` appears twice in `{grouping}`")));
            }
            seen[k] = true;
            idx.push(k);
        }
        if idx.is_empty() {
            return Err(CliError::Usage(format!("empty group in `{grouping}`")));
        }
        groups.push(idx);
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(CliError::Usage(format!("party `{}` missing from `{grouping}`", spec.label(k))));
    }
    Ok(groups)
}

#[derive(Serialize)]
pub struct WitnessEntry {
    pub pauli: String,
    #[serde(flatten)]
    pub outcome: WitnessOutcome,
}

fn witnesses(ensemble: &Ensemble, candidates: &[DiscreteCandidate]) -> Result<Vec<WitnessEntry>, CliError> {
    let purif = purify_ensemble(ensemble);
    candidates
        .iter()
        .map(|cand| {
            Ok(WitnessEntry {
                pauli: cand.label.clone().unwrap_or_default(),
                outcome: quotient_witness(&purif, cand)?,
            })
        })
        .collect()
}

fn needs_ensemble<'a>(loaded: &'a LoadedState, command: &str) -> Result<&'a Ensemble, CliError> {
    loaded.ensemble().ok_or_else(|| {
        CliError::Metadata(format!(
            "{command} needs a separable ensemble: pass an ensemble file or a state file with an `ensemble` field"
        ))
    })
}

pub fn analyze(settings: &Settings, path: &str, grouping: Option<&str>) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let mut state = state_of(&loaded);
    let mut ensemble = loaded.ensemble().cloned();
    let mut warnings = Vec::new();
    if let Some(g) = grouping {
        let groups = parse_grouping(loaded.spec(), g)?;
        state = match state {
            Owned::Pure(p) => Owned::Pure(p.regroup(&groups)?),
            Owned::Mixed(m) => Owned::Mixed(m.regroup(&groups)?),
        };
        if ensemble.take().is_some() {
            warnings.push("ensemble metadata ignored after regrouping".to_string());
        }
    }
    let report = analysis::analyze(state.as_ref(), settings.tol)?;
    warnings.extend(report.warnings.iter().cloned());

    let witness_list = match (&ensemble, report.candidates.is_empty()) {
        (Some(e), false) => Some(witnesses(e, &analysis::pauli_search(state.as_ref())?)?),
        _ => None,
    };
    let spec = state.as_ref().spec();
    let theorems = match (&state, spec.len()) {
        (Owned::Pure(_), 3) | (Owned::Mixed(_), 2) => Some(analysis::theorem_checks(state.as_ref(), settings.tol)?),
        _ => None,
    };

    let mut result = to_value(&report);
    result["witnesses"] = to_value(&witness_list);
    result["theorem_checks"] = theorem_value(theorems.as_ref());
    let text = render::analysis(&report, witness_list.as_deref(), theorems.as_ref());
    Ok(finish(
        settings,
        "analyze",
        &input,
        Outcome {
            settings: json!({ "tol": settings.tol, "parties": grouping }),
            result,
            warnings,
            text,
        },
    ))
}

fn theorem_value(t: Option<&TheoremChecks>) -> Value {
    match t {
        Some(t) => {
            let mut v = to_value(t);
            v["all_pass"] = Value::Bool(t.all_pass());
            v
        }
        None => Value::Null,
    }
}

pub enum CatalogRequest {
    Ghz { a: f64, b: f64, a_im: f64, b_im: f64 },
    Werner(f64),
    WernerEnsemble(f64),
    WernerPurification(f64),
    Bell,
    Random { parties: String, seed: u64 },
    RandomDensity { parties: String, seed: u64, rank: usize },
    RandomEnsemble { parties: String, seed: u64, lines: usize },
}

fn parse_parties(s: &str) -> Result<PartitionSpec, CliError> {
    let mut parties = Vec::new();
    for item in s.split(',') {
        let (label, dim) = item
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("expected `label:dim`, got `{item}`")))?;
        let dim: usize = dim
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad dimension in `{item}`")))?;
        parties.push((label.trim().to_string(), dim));
    }
    Ok(PartitionSpec::new(parties)?)
}

/// Catalog entries are written as state files so they can be piped into the
/// other commands.
pub fn catalog(req: CatalogRequest) -> Result<String, CliError> {
    let file = match req {
        CatalogRequest::Ghz { a, b, a_im, b_im } => StateFile::from_pure(&catalog::ghz(c(a, a_im), c(b, b_im))?),
        CatalogRequest::Werner(p) => {
            let rho = catalog::werner(p)?;
            let file = StateFile::from_density(&rho);
            if p <= 1.0 / 3.0 {
                file.with_ensemble(&catalog::werner_ensemble(p)?)
            } else {
                file
            }
        }
        CatalogRequest::WernerEnsemble(p) => StateFile::from_ensemble(&catalog::werner_ensemble(p)?),
        CatalogRequest::WernerPurification(p) => StateFile::from_pure(&catalog::werner_min_purification(p)?),
        CatalogRequest::Bell => StateFile::from_pure(&catalog::bell()),
        CatalogRequest::Random { parties, seed } => StateFile::from_pure(&catalog::random_state(&parse_parties(&parties)?, seed)),
        CatalogRequest::RandomDensity { parties, seed, rank } => {
            StateFile::from_density(&catalog::random_density(&parse_parties(&parties)?, rank, seed)?)
        }
        CatalogRequest::RandomEnsemble { parties, seed, lines } => {
            StateFile::from_ensemble(&catalog::random_ensemble(&parse_parties(&parties)?, lines, seed)?)
        }
    };
    Ok(file.to_json() + "\n")
}

/// Purifications are written as state files; ensemble purifications carry
/// their ensemble.
pub fn purify(path: &str) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let file = match (&loaded, loaded.ensemble()) {
        (LoadedState::Pure { .. }, _) => return Err(CliError::Invalid("state is already pure".into())),
        (_, Some(e)) => StateFile::from_pure(purify_ensemble(e).state()).with_ensemble(e),
        (LoadedState::Density { state, .. }, None) => StateFile::from_pure(&minimal_purification(state)),
        (LoadedState::Ensemble(_), None) => unreachable!("ensemble files always carry an ensemble"),
    };
    Ok(file.to_json() + "\n")
}

pub fn disentangle(settings: &Settings, path: &str, target: Option<&str>, chi: Option<&Path>) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let e = needs_ensemble(&loaded, "disentangle")?;
    let target = target.unwrap_or_else(|| e.spec().label(1)).to_string();
    let k = e.spec().index_of(&target)?;
    let (chi_vec, chi_digest) = match chi {
        Some(p) => {
            let f = read_file(p)?;
            (Some(io::parse_vector(&f.text, e.spec().dim(k))?), Some(f.digest))
        }
        None => (None, None),
    };
    let d = separable::disentangle(e, &target, chi_vec.as_ref())?;
    let result = json!({
        "target": target,
        "control": d.unitary.control(),
        "chi": d.chi.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "blocks": d.unitary.blocks().iter().map(matrix_json).collect::<Vec<_>>(),
        "residual": d.residual,
        "rest": to_value(&StateFile::from_pure(&d.rest)),
        "output": to_value(&StateFile::from_pure(&d.output)),
    });
    let text = render::disentanglement(&d, &target);
    Ok(finish(
        settings,
        "disentangle",
        &input,
        Outcome {
            settings: json!({ "tol": settings.tol, "target": target, "chi_digest": chi_digest }),
            result,
            warnings: vec![],
            text,
        },
    ))
}

pub fn decompose(settings: &Settings, path: &str, stabilizer: &Path) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let e = needs_ensemble(&loaded, "decompose")?;
    let purif = purify_ensemble(e);
    let sfile = read_file(stabilizer)?;
    let s = io::parse_unitary(&sfile.text, purif.state().spec())?;
    let dec = separable::decompose_two_party_stabilizer(&purif, &s)?;
    let result = json!({
        "theta": dec.theta,
        "alphas": dec.alphas,
        "betas": dec.betas,
        "clusters": to_value(&dec.clusters),
        "s_ac": to_value(&UnitaryFile::from_local(&dec.s_ac)),
        "s_bc": to_value(&UnitaryFile::from_local(&dec.s_bc)),
        "ac_residual": dec.ac_residual,
        "bc_residual": dec.bc_residual,
        "product_residual": dec.product_residual,
        "complement_blocks": "inherited from the input factors",
    });
    let text = render::decomposition(&dec);
    Ok(finish(
        settings,
        "decompose",
        &input,
        Outcome {
            settings: json!({ "tol": settings.tol, "stabilizer_digest": sfile.digest }),
            result,
            warnings: vec![],
            text,
        },
    ))
}

pub fn pauli_search(settings: &Settings, path: &str) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let state = state_of(&loaded);
    let found = analysis::pauli_search(state.as_ref())?;
    let witness_list = match loaded.ensemble() {
        Some(e) => Some(witnesses(e, &found)?),
        None => None,
    };
    let candidates: Vec<Value> = found
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut v = json!({ "pauli": f.label, "phase": f.phase, "residual": f.residual });
            if let Some(w) = &witness_list {
                v["witness"] = to_value(&w[i].outcome);
            }
            v
        })
        .collect();
    let text = render::candidates(&found, witness_list.as_deref());
    Ok(finish(
        settings,
        "pauli-search",
        &input,
        Outcome {
            settings: json!({ "verify_tol": analysis::VERIFY_TOL }),
            result: json!({ "count": found.len(), "candidates": candidates }),
            warnings: vec![],
            text,
        },
    ))
}

pub fn verify(settings: &Settings, path: &str, unitary: &Path) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let state = state_of(&loaded);
    let ufile = read_file(unitary)?;
    let u = io::parse_unitary(&ufile.text, state.as_ref().spec())?;
    let cand = analysis::verify_candidate(state.as_ref(), &u)?;
    let text = render::verification(&cand);
    Ok(finish(
        settings,
        "verify",
        &input,
        Outcome {
            settings: json!({ "verify_tol": analysis::VERIFY_TOL, "unitary_digest": ufile.digest }),
            result: json!({ "verified": cand.verified, "phase": cand.phase, "residual": cand.residual }),
            warnings: vec![],
            text,
        },
    ))
}

pub fn check_theorems(settings: &Settings, path: &str) -> Result<String, CliError> {
    let input = read_input(path)?;
    let loaded = io::parse_state(&input.text)?;
    let state = state_of(&loaded);
    let checks = analysis::theorem_checks(state.as_ref(), settings.tol)?;
    let text = render::theorems(&checks);
    Ok(finish(
        settings,
        "check-theorems",
        &input,
        Outcome {
            settings: json!({ "tol": settings.tol }),
            result: theorem_value(Some(&checks)),
            warnings: vec![],
            text,
        },
    ))
}
