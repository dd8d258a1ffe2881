//! Entanglement-algebra data derived from stabilizer algebras.
//!
//! For a party subset `K` with at least two members the entanglement algebra
//! dimension is `dim s_K - dim span{ s_{K \ k} : k in K }`; for pairs the
//! denominator is the direct sum of the two one-party algebras. Coarse-grained
//! quotients such as `A(BC)` come from the same computation on the regrouped
//! two-party state.

mod discrete;
mod purification;
mod theorems;

pub use discrete::{pauli_matrix, pauli_search, quotient_witness, verify_candidate, DiscreteCandidate, WitnessOutcome, VERIFY_TOL};
pub use purification::{lift_stabilizer, purification_equivalence, AuxiliaryAlignment, LiftedStabilizer};
pub use theorems::{theorem_checks, CommutationCheck, ExclusionCheck, IsomorphismCheck, TheoremChecks};

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{column_space, RMatrix, RankDecision};
use crate::stabilizer::{
    mixed_algebra_indices, pure_algebra_indices, subspace_span, AlgebraKind, StabilizerAlgebra,
};
use crate::tensor::{DensityMatrix, Party, PartitionSpec, PureState, StateRef};

pub const MAX_PURE_PARTIES: usize = 4;
pub const MAX_MIXED_PARTIES: usize = 3;
/// Spectral gaps below this are flagged in report warnings.
pub const GAP_WARNING: f64 = 1e3;
/// Bracket components outside the denominator below this count as zero.
pub const BRACKET_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraSummary {
    pub name: String,
    pub parties: Vec<String>,
    pub dim: usize,
    pub rank: RankDecision,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientSummary {
    pub name: String,
    pub numerator: String,
    pub denominators: Vec<String>,
    pub numerator_dim: usize,
    pub denominator_dim: usize,
    pub dim: usize,
    /// `None` when the quotient is zero-dimensional.
    pub abelian: Option<bool>,
    pub bracket_residual: f64,
    pub hint: Option<String>,
    /// Smallest spectral gap among the rank decisions behind this entry.
    pub min_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSummary {
    pub pauli: String,
    pub phase: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Hygiene {
    pub max_stabilization_residual: f64,
    pub max_exponentiation_residual: f64,
    pub max_bracket_closure_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntanglementReport {
    pub parties: Vec<Party>,
    pub kind: AlgebraKind,
    pub tol: f64,
    pub stabilizers: Vec<AlgebraSummary>,
    pub quotients: Vec<QuotientSummary>,
    pub candidates: Vec<CandidateSummary>,
    pub hygiene: Hygiene,
    pub warnings: Vec<String>,
    /// Every algebra behind the tables, including the coarse-grained ones.
    #[serde(skip)]
    pub algebras: Vec<StabilizerAlgebra>,
}

impl EntanglementReport {
    pub fn stabilizer_dim(&self, name: &str) -> Option<usize> {
        self.stabilizers.iter().find(|s| s.name == name).map(|s| s.dim)
    }

    pub fn quotient_dim(&self, name: &str) -> Option<usize> {
        self.quotients.iter().find(|q| q.name == name).map(|q| q.dim)
    }

    pub fn quotient(&self, name: &str) -> Option<&QuotientSummary> {
        self.quotients.iter().find(|q| q.name == name)
    }

    /// Smallest spectral gap over all rank decisions in the report.
    pub fn min_gap(&self) -> f64 {
        self.stabilizers
            .iter()
            .map(|s| s.rank.gap)
            .chain(self.quotients.iter().map(|q| q.min_gap))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Display name of a party list: labels concatenated when each is a single
/// character or a merged group, comma-separated otherwise.
pub fn subset_name<S: AsRef<str>>(labels: &[S]) -> String {
    let simple = labels
        .iter()
        .all(|l| l.as_ref().chars().count() == 1 || l.as_ref().starts_with('('));
    let parts: Vec<&str> = labels.iter().map(|l| l.as_ref()).collect();
    if simple {
        parts.concat()
    } else {
        parts.join(",")
    }
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&k| mask & (1 << k) != 0).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

struct Tables {
    stabilizers: Vec<AlgebraSummary>,
    quotients: Vec<QuotientSummary>,
    algebras: Vec<StabilizerAlgebra>,
}

fn tables(spec: &PartitionSpec, solve: &dyn Fn(&[usize]) -> StabilizerAlgebra) -> Result<Tables> {
    let mut by_mask: BTreeMap<Vec<usize>, StabilizerAlgebra> = BTreeMap::new();
    let order = subsets(spec.len());
    let mut stabilizers = Vec::new();
    for mask in &order {
        let alg = solve(mask);
        let labels: Vec<String> = mask.iter().map(|&k| spec.label(k).to_string()).collect();
        stabilizers.push(AlgebraSummary {
            name: subset_name(&labels),
            parties: labels,
            dim: alg.dim(),
            rank: *alg.decision(),
            residual: alg.residual(),
        });
        by_mask.insert(mask.clone(), alg);
    }
    let mut quotients = Vec::new();
    let mut extra = Vec::new();
    for mask in order.iter().filter(|m| m.len() >= 2) {
        let num = &by_mask[mask];
        let subs: Vec<Vec<usize>> = mask
            .iter()
            .map(|&k| mask.iter().copied().filter(|&j| j != k).collect())
            .collect();
        let den_algs: Vec<&StabilizerAlgebra> = subs.iter().map(|s| &by_mask[s]).collect();
        let den = subspace_span(&den_algs)?;
        let mut denominators: Vec<String> = subs
            .iter()
            .map(|s| subset_name(&s.iter().map(|&k| spec.label(k)).collect::<Vec<_>>()))
            .collect();
        denominators.reverse();
        let name = subset_name(&mask.iter().map(|&k| spec.label(k)).collect::<Vec<_>>());
        quotients.push(quotient_summary(name.clone(), name, denominators, num, &den));
        extra.push(den);
    }
    let mut algebras: Vec<StabilizerAlgebra> = by_mask.into_values().collect();
    algebras.extend(extra);
    Ok(Tables {
        stabilizers,
        quotients,
        algebras,
    })
}

fn quotient_summary(
    name: String,
    numerator: String,
    denominators: Vec<String>,
    num: &StabilizerAlgebra,
    den: &StabilizerAlgebra,
) -> QuotientSummary {
    let dim = num.dim().saturating_sub(den.dim());
    let (abelian, bracket_residual) = abelian_flag(num, den);
    let hint = match (dim, abelian) {
        (1, _) => Some("u(1)-like".to_string()),
        (3, Some(false)) => Some("su(2)-like".to_string()),
        (k, Some(true)) if k > 1 => Some(format!("u(1)^{k}-like")),
        _ => None,
    };
    QuotientSummary {
        name,
        numerator,
        denominators,
        numerator_dim: num.dim(),
        denominator_dim: den.dim(),
        dim,
        abelian,
        bracket_residual,
        hint,
        min_gap: num.gap().min(den.gap()),
    }
}

/// Brackets of a complement basis of `den` inside `num`, measured by their
/// component orthogonal to `den`.
fn abelian_flag(num: &StabilizerAlgebra, den: &StabilizerAlgebra) -> (Option<bool>, f64) {
    let d = den.coords();
    let reject = |x: &DVector<f64>| -> DVector<f64> { x - d * (d.transpose() * x) };
    let n = num.coords();
    let mut outside = RMatrix::zeros(n.nrows(), n.ncols());
    for j in 0..n.ncols() {
        outside.set_column(j, &reject(&n.column(j).into_owned()));
    }
    let (comp, _) = column_space(&outside, num.tol());
    if comp.ncols() == 0 {
        return (None, 0.0);
    }
    let layout = num.layout();
    let gens: Vec<_> = comp
        .column_iter()
        .map(|c| layout.to_generator(num.spec(), c.as_slice()))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let b = DVector::from_vec(layout.coords(&gens[i].bracket(&gens[j])));
            worst = worst.max(reject(&b).norm());
        }
    }
    (Some(worst < BRACKET_TOL), worst)
}

/// Regrouped partition and a solver for masks over its parties.
type Regrouped = (PartitionSpec, Box<dyn Fn(&[usize]) -> StabilizerAlgebra>);

/// Coarse-grained quotient `X(rest)` from the regrouped two-party state.
fn coarse_quotient(
    spec: &PartitionSpec,
    x: usize,
    solve_regrouped: &dyn Fn(&[Vec<usize>]) -> Result<Regrouped>,
) -> Result<(QuotientSummary, Vec<StabilizerAlgebra>)> {
    let rest: Vec<usize> = (0..spec.len()).filter(|&k| k != x).collect();
    let (merged, solve) = solve_regrouped(&[vec![x], rest])?;
    let whole = solve(&[0, 1]);
    let a = solve(&[0]);
    let b = solve(&[1]);
    let den = subspace_span(&[&a, &b])?;
    let name = subset_name(&merged.labels());
    let q = quotient_summary(
        name.clone(),
        name,
        vec![merged.label(0).to_string(), merged.label(1).to_string()],
        &whole,
        &den,
    );
    Ok((q, vec![whole, a, b, den]))
}

fn hygiene_and_warnings(algebras: &[StabilizerAlgebra], quotients: &[QuotientSummary]) -> (Hygiene, Vec<String>) {
    let mut h = Hygiene::default();
    let mut warnings = Vec::new();
    for (i, alg) in algebras.iter().enumerate() {
        h.max_stabilization_residual = h.max_stabilization_residual.max(alg.residual());
        h.max_exponentiation_residual = h
            .max_exponentiation_residual
            .max(alg.exponentiation_residual(2, &[0.1, 1.0], i as u64));
        h.max_bracket_closure_residual = h
            .max_bracket_closure_residual
            .max(alg.bracket_closure_residual(20, i as u64));
    }
    let mut seen = std::collections::BTreeSet::new();
    for alg in algebras {
        let gap = alg.gap();
        if gap < GAP_WARNING {
            let name = format!("{}:{}", subset_name(&alg.spec().labels()), subset_name(&alg.active_labels()));
            if seen.insert(name.clone()) {
                warnings.push(format!(
                    "small spectral gap {gap:.3e} at rank {} for algebra on {} (dimension claim is fragile)",
                    alg.decision().rank,
                    name
                ));
            }
        }
    }
    for q in quotients {
        if q.bracket_residual.is_finite() && q.bracket_residual >= BRACKET_TOL && q.abelian == Some(true) {
            warnings.push(format!("quotient {} abelian flag is borderline", q.name));
        }
    }
    (h, warnings)
}

fn candidates_for(state: StateRef<'_>) -> Vec<CandidateSummary> {
    let spec = state.spec();
    if spec.len() > 3 || spec.parties().iter().any(|p| p.dim != 2) {
        return Vec::new();
    }
    match pauli_search(state) {
        Ok(found) => found
            .into_iter()
            .map(|c| CandidateSummary {
                pauli: c.label.unwrap_or_default(),
                phase: c.phase,
                residual: c.residual,
            })
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// Full stabilizer and entanglement tables of a pure state (1 to 4 parties).
pub fn analyze_pure(psi: &PureState, tol: f64) -> Result<EntanglementReport> {
    let spec = psi.spec();
    if spec.len() > MAX_PURE_PARTIES {
        return Err(Error::ScopeGuard(format!(
            "pure-state analysis supports at most {MAX_PURE_PARTIES} parties, got {}",
            spec.len()
        )));
    }
    let solve = |mask: &[usize]| pure_algebra_indices(psi, mask, tol);
    let Tables {
        stabilizers,
        mut quotients,
        mut algebras,
    } = tables(spec, &solve)?;
    if spec.len() >= 3 {
        let regrouped = |groups: &[Vec<usize>]| -> Result<Regrouped> {
            let merged = psi.regroup(groups)?;
            let ms = merged.spec().clone();
            Ok((ms, Box::new(move |mask: &[usize]| pure_algebra_indices(&merged, mask, tol))))
        };
        for x in 0..spec.len() {
            let (q, algs) = coarse_quotient(spec, x, &regrouped)?;
            quotients.push(q);
            algebras.extend(algs);
        }
    }
    let (hygiene, warnings) = hygiene_and_warnings(&algebras, &quotients);
    Ok(EntanglementReport {
        parties: spec.parties().to_vec(),
        kind: AlgebraKind::Pure,
        tol,
        stabilizers,
        quotients,
        candidates: candidates_for(psi.into()),
        hygiene,
        warnings,
        algebras,
    })
}

/// Tables for a density matrix (1 to 3 parties) from conjugation-stabilizer algebras.
pub fn analyze_mixed(rho: &DensityMatrix, tol: f64) -> Result<EntanglementReport> {
    let spec = rho.spec();
    if spec.len() > MAX_MIXED_PARTIES {
        return Err(Error::ScopeGuard(format!(
            "mixed-state analysis supports at most {MAX_MIXED_PARTIES} parties, got {}",
            spec.len()
        )));
    }
    let solve = |mask: &[usize]| mixed_algebra_indices(rho, mask, tol);
    let Tables {
        stabilizers,
        mut quotients,
        mut algebras,
    } = tables(spec, &solve)?;
    if spec.len() >= 3 {
        let regrouped = |groups: &[Vec<usize>]| -> Result<Regrouped> {
            let merged = rho.regroup(groups)?;
            let ms = merged.spec().clone();
            Ok((ms, Box::new(move |mask: &[usize]| mixed_algebra_indices(&merged, mask, tol))))
        };
        for x in 0..spec.len() {
            let (q, algs) = coarse_quotient(spec, x, &regrouped)?;
            quotients.push(q);
            algebras.extend(algs);
        }
    }
    let (hygiene, warnings) = hygiene_and_warnings(&algebras, &quotients);
    Ok(EntanglementReport {
        parties: spec.parties().to_vec(),
        kind: AlgebraKind::Mixed,
        tol,
        stabilizers,
        quotients,
        candidates: candidates_for(rho.into()),
        hygiene,
        warnings,
        algebras,
    })
}

/// Dispatch on state kind.
pub fn analyze<'a>(state: impl Into<StateRef<'a>>, tol: f64) -> Result<EntanglementReport> {
    match state.into() {
        StateRef::Pure(p) => analyze_pure(p, tol),
        StateRef::Mixed(m) => analyze_mixed(m, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVector};
    use crate::stabilizer::DEFAULT_TOL;

    fn ghz(a: f64, b: f64) -> PureState {
        let mut v = CVector::zeros(8);
        v[0] = c(a, 0.0);
        v[7] = c(b, 0.0);
        PureState::new(PartitionSpec::qubits(&["A", "B", "C"]).unwrap(), v).unwrap()
    }

    #[test]
    fn subset_order_and_names() {
        assert_eq!(subsets(3), vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]);
        assert_eq!(subset_name(&["A", "B"]), "AB");
        assert_eq!(subset_name(&["A", "(BC)"]), "A(BC)");
        assert_eq!(subset_name(&["Alice", "Bob"]), "Alice,Bob");
    }

    #[test]
    fn generic_ghz_tables() {
        let r = analyze_pure(&ghz(0.6, 0.8), DEFAULT_TOL).unwrap();
        for name in ["AB", "AC", "BC", "A(BC)", "B(AC)", "C(AB)"] {
            assert_eq!(r.quotient_dim(name), Some(1), "{name}");
        }
        assert_eq!(r.quotient_dim("ABC"), Some(0));
        assert_eq!(r.quotient("AB").unwrap().hint.as_deref(), Some("u(1)-like"));
        assert!(r.min_gap() > 1e3);
        assert!(r.warnings.is_empty());
        assert!(r.candidates.iter().all(|c| !c.pauli.contains('X')));
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let psi = PureState::basis(PartitionSpec::qubits(&["A", "B", "C"]).unwrap(), &[0, 0, 0]).unwrap();
        let r = analyze_pure(&psi, DEFAULT_TOL).unwrap();
        assert!(r.quotients.iter().all(|q| q.dim == 0));
        assert_eq!(r.candidates.len(), 8);
    }

    #[test]
    fn single_party_only_phase() {
        let psi = PureState::basis(PartitionSpec::new([("A", 1)]).unwrap(), &[0]).unwrap();
        let r = analyze_pure(&psi, DEFAULT_TOL).unwrap();
        assert_eq!(r.stabilizer_dim("A"), Some(1));
        assert!(r.quotients.is_empty());
    }

    #[test]
    fn scope_guards() {
        let psi = PureState::basis(PartitionSpec::qubits(&["A", "B", "C", "D", "E"]).unwrap(), &[0; 5]).unwrap();
        assert!(matches!(analyze_pure(&psi, DEFAULT_TOL), Err(Error::ScopeGuard(_))));
        let rho = DensityMatrix::maximally_mixed(PartitionSpec::qubits(&["A", "B", "C", "D"]).unwrap());
        assert!(matches!(analyze_mixed(&rho, DEFAULT_TOL), Err(Error::ScopeGuard(_))));
    }

    #[test]
    fn maximally_mixed_two_qubits() {
        let rho = DensityMatrix::maximally_mixed(PartitionSpec::qubits(&["A", "B"]).unwrap());
        let r = analyze_mixed(&rho, DEFAULT_TOL).unwrap();
        assert_eq!(r.quotient_dim("AB"), Some(0));
        assert_eq!(r.stabilizer_dim("A"), Some(4));
        assert_eq!(r.candidates.len(), 16);
    }
}
