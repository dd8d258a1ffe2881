//! Separable states given as explicit product ensembles: purification with
//! one auxiliary basis vector per line, controlled-unitary disentanglers and
//! the split of two-party stabilizers into `AC` and `BC` pieces.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::verify_candidate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::tensor::{
    apply_on_party, embed_index, DensityMatrix, LocalUnitary, PartitionSpec, PureState, NORM_TOL,
    UNITARY_TOL,
};

/// Ensemble weights must sum to one within this.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Per-line eigenvector condition in the stabilizer split.
pub const EIGEN_TOL: f64 = 1e-8;
/// Eigenphases closer than this on the circle share a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Allowed deviation of `alpha_l + beta_l` from the fitted phase.
pub const PHASE_SUM_TOL: f64 = 1e-7;
pub const DECOMPOSE_TOL: f64 = 1e-8;
pub const FACTOR_TOL: f64 = 1e-9;

/// One weighted product line `p |l>_A |l>_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTerm {
    pub weight: f64,
    pub vectors: Vec<CVector>,
}

/// Convex mixture of pure product states on two parties.
///
/// Zero weights are allowed so that fixed line numberings survive boundary
/// parameter values; such lines contribute nothing to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    spec: PartitionSpec,
    terms: Vec<EnsembleTerm>,
}

impl Ensemble {
    pub fn new(spec: PartitionSpec, terms: Vec<EnsembleTerm>) -> Result<Self> {
        if spec.len() != 2 {
            return Err(Error::InvalidEnsemble(format!(
                "ensembles are defined on two parties, got {}",
                spec.len()
            )));
        }
        if terms.is_empty() {
            return Err(Error::InvalidEnsemble("no terms".into()));
        }
        let bound = spec.total_dim() * spec.total_dim();
        if terms.len() > bound {
            return Err(Error::InvalidEnsemble(format!(
                "{} terms exceed the bound {bound} for this partition",
                terms.len()
            )));
        }
        let mut total = 0.0;
        for (l, t) in terms.iter().enumerate() {
            if !t.weight.is_finite() {
                return Err(Error::NonFinite(format!("weight of line {l}")));
            }
            if t.weight < 0.0 {
                return Err(Error::InvalidEnsemble(format!("negative weight on line {l}")));
            }
            total += t.weight;
            if t.vectors.len() != 2 {
                return Err(Error::DimensionMismatch {
                    context: format!("vectors of line {l}"),
                    expected: 2,
                    found: t.vectors.len(),
                });
            }
            for (k, v) in t.vectors.iter().enumerate() {
                if v.len() != spec.dim(k) {
                    return Err(Error::DimensionMismatch {
                        context: format!("line {l} vector on {}", spec.label(k)),
                        expected: spec.dim(k),
                        found: v.len(),
                    });
                }
                if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite(format!("line {l} vector")));
                }
                let norm = v.norm();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(Error::NotNormalized { norm });
                }
            }
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Ensemble { spec, terms })
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn terms(&self) -> &[EnsembleTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    /// `sum_l p_l |l><l|_A (x) |l><l|_B`.
    pub fn density(&self) -> DensityMatrix {
        let n = self.spec.total_dim();
        let mut m = CMatrix::zeros(n, n);
        for t in &self.terms {
            let v = t.vectors[0].kronecker(&t.vectors[1]);
            m += (&v * v.adjoint()).scale(t.weight);
        }
        DensityMatrix::new(self.spec.clone(), m).expect("convex mixture of product states is a density matrix")
    }

    /// Merge lines equal up to phase on both parties, summing their weights.
    pub fn merge_duplicates(&self) -> Ensemble {
        let mut out: Vec<EnsembleTerm> = Vec::new();
        for t in &self.terms {
            let dup = out.iter_mut().find(|o| {
                o.vectors
                    .iter()
                    .zip(&t.vectors)
                    .all(|(a, b)| a.dotc(b).norm() >= 1.0 - WEIGHT_TOL)
            });
            match dup {
                Some(o) => o.weight += t.weight,
                None => out.push(t.clone()),
            }
        }
        Ensemble {
            spec: self.spec.clone(),
            terms: out,
        }
    }
}

/// `sum_l sqrt(p_l) |l>_A |l>_B |l>_C` together with the ensemble it came from.
#[derive(Debug, Clone)]
pub struct EnsemblePurification {
    state: PureState,
    ensemble: Ensemble,
}

impl EnsemblePurification {
    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn aux_label(&self) -> &str {
        self.state.spec().label(2)
    }
}

/// Purify an ensemble onto a new auxiliary party with one basis vector per line.
///
/// Lines are kept as given, including repeated ones, so that line numbers in
/// the auxiliary basis match the input order; use
/// [`Ensemble::merge_duplicates`] first if a redundant basis is unwanted.
pub fn purify_ensemble(e: &Ensemble) -> EnsemblePurification {
    let aux = e.spec.fresh_label();
    let l = e.len();
    let spec = e.spec.with_party(aux, l).expect("fresh label is unique");
    let (da, db) = (e.spec.dim(0), e.spec.dim(1));
    let mut amps = CVector::zeros(da * db * l);
    for (line, t) in e.terms.iter().enumerate() {
        let w = t.weight.sqrt();
        for a in 0..da {
            for b in 0..db {
                amps[(a * db + b) * l + line] += t.vectors[0][a] * t.vectors[1][b] * w;
            }
        }
    }
    let state = PureState::normalized(spec, amps).expect("weights sum to one");
    EnsemblePurification {
        state,
        ensemble: e.clone(),
    }
}

/// Block-diagonal unitary `sum_l u^(l)_target (x) |l><l|_control`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledUnitary {
    spec: PartitionSpec,
    control: usize,
    target: usize,
    blocks: Vec<CMatrix>,
}

impl ControlledUnitary {
    pub fn new(spec: PartitionSpec, control: &str, target: &str, blocks: Vec<CMatrix>) -> Result<Self> {
        let c = spec.index_of(control)?;
        let t = spec.index_of(target)?;
        if c == t {
            return Err(Error::SpecMismatch("control and target must differ".into()));
        }
        if blocks.len() != spec.dim(c) {
            return Err(Error::DimensionMismatch {
                context: "controlled-unitary blocks".into(),
                expected: spec.dim(c),
                found: blocks.len(),
            });
        }
        let d = spec.dim(t);
        for (l, b) in blocks.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: format!("block {l}"),
                    expected: d,
                    found: b.nrows(),
                });
            }
            let residual = linalg::unitarity_residual(b);
            if !(residual <= UNITARY_TOL) {
                return Err(Error::NotUnitary {
                    party: format!("{} (block {l})", spec.label(t)),
                    residual,
                });
            }
        }
        Ok(ControlledUnitary {
            spec,
            control: c,
            target: t,
            blocks,
        })
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn control(&self) -> &str {
        self.spec.label(self.control)
    }

    pub fn target(&self) -> &str {
        self.spec.label(self.target)
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.spec.total_dim();
        let l = self.blocks.len();
        let mut out = CMatrix::zeros(n, n);
        for (i, b) in self.blocks.iter().enumerate() {
            let mut proj = CMatrix::zeros(l, l);
            proj[(i, i)] = Complex64::new(1.0, 0.0);
            let u = embed_index(&self.spec, self.target, b).expect("block dims checked");
            let p = embed_index(&self.spec, self.control, &proj).expect("projector dims checked");
            out += u * p;
        }
        out
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        self.spec.check_same(psi.spec(), "controlled unitary")?;
        let v = psi.amplitudes();
        let n = v.len();
        let digit: Vec<usize> = (0..n).map(|f| self.spec.digits(f)[self.control]).collect();
        let mut out = CVector::zeros(n);
        for (l, b) in self.blocks.iter().enumerate() {
            let masked: Vec<Complex64> = (0..n).map(|f| if digit[f] == l { v[f] } else { ZERO }).collect();
            let res = apply_on_party(&self.spec, self.target, b, &masked);
            for (o, r) in out.iter_mut().zip(res) {
                *o += r;
            }
        }
        PureState::normalized(self.spec.clone(), out)
    }
}

/// Unitary taking `line` exactly to `chi`: a phased Householder reflection,
/// or a pure phase when the two are parallel.
pub fn householder_block(line: &CVector, chi: &CVector) -> CMatrix {
    let d = line.len();
    let ov = line.dotc(chi);
    let phi = -ov.arg();
    let rot = Complex64::from_polar(1.0, phi);
    let v = line - chi * rot;
    let vv = v.norm_squared();
    let back = Complex64::from_polar(1.0, -phi);
    if vv < 1e-24 {
        return CMatrix::identity(d, d) * back;
    }
    (CMatrix::identity(d, d) - (&v * v.adjoint()) * Complex64::new(2.0 / vv, 0.0)) * back
}

fn default_chi(d: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// Controlled unitary on `target (x) aux` rotating every line's target
/// vector onto `chi` (default `|0>`).
pub fn build_disentangler(e: &Ensemble, target: &str, chi: Option<&CVector>) -> Result<ControlledUnitary> {
    let t = e.spec.index_of(target)?;
    let d = e.spec.dim(t);
    let chi = chi.cloned().unwrap_or_else(|| default_chi(d));
    if chi.len() != d {
        return Err(Error::DimensionMismatch {
            context: "chi".into(),
            expected: d,
            found: chi.len(),
        });
    }
    let norm = chi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let blocks = e.terms.iter().map(|term| householder_block(&term.vectors[t], &chi)).collect();
    let aux = e.spec.fresh_label();
    let spec = e.spec.with_party(aux.clone(), e.len())?;
    ControlledUnitary::new(spec, &aux, target, blocks)
}

/// Contract party `k` of a state with `<chi|`, returning the spec and vector
/// of the remaining parties.
fn contract_party(psi: &PureState, k: usize, chi: &CVector) -> (PartitionSpec, CVector) {
    let spec = psi.spec();
    let rest: Vec<usize> = (0..spec.len()).filter(|&i| i != k).collect();
    let rest_spec = spec.subspec(&rest);
    let mut out = CVector::zeros(rest_spec.total_dim());
    for flat in 0..spec.total_dim() {
        let d = spec.digits(flat);
        let rd: Vec<usize> = rest.iter().map(|&i| d[i]).collect();
        out[rest_spec.flat(&rd)] += chi[d[k]].conj() * psi.amplitudes()[flat];
    }
    (rest_spec, out)
}

/// `|chi>_k (x) |phi>_rest` laid out in the order of `spec`.
fn insert_party(spec: &PartitionSpec, k: usize, chi: &CVector, rest_spec: &PartitionSpec, phi: &CVector) -> CVector {
    let rest: Vec<usize> = (0..spec.len()).filter(|&i| i != k).collect();
    CVector::from_iterator(
        spec.total_dim(),
        (0..spec.total_dim()).map(|flat| {
            let d = spec.digits(flat);
            let rd: Vec<usize> = rest.iter().map(|&i| d[i]).collect();
            chi[d[k]] * phi[rest_spec.flat(&rd)]
        }),
    )
}

#[derive(Debug, Clone)]
pub struct Disentanglement {
    pub unitary: ControlledUnitary,
    pub output: PureState,
    pub chi: CVector,
    /// State of the remaining parties after the target factors out.
    pub rest: PureState,
    /// `|U psi - chi (x) rest|`.
    pub residual: f64,
}

/// Build the disentangler for `target`, apply it to the ensemble
/// purification and certify the product form.
pub fn disentangle(e: &Ensemble, target: &str, chi: Option<&CVector>) -> Result<Disentanglement> {
    let purif = purify_ensemble(e);
    let unitary = build_disentangler(e, target, chi)?;
    let t = unitary.target;
    let chi = chi.cloned().unwrap_or_else(|| default_chi(e.spec.dim(t)));
    let output = unitary.apply(purif.state())?;
    let (rest_spec, phi) = contract_party(&output, t, &chi);
    let expected = insert_party(output.spec(), t, &chi, &rest_spec, &phi);
    let residual = (output.amplitudes() - expected).norm();
    if residual > FACTOR_TOL {
        return Err(Error::Numerical(format!(
            "disentangled state does not factor (residual {residual:e})"
        )));
    }
    let rest = PureState::normalized(rest_spec, phi)?;
    Ok(Disentanglement {
        unitary,
        output,
        chi,
        rest,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct FullSeparation {
    /// Disentangler with target `B` (second ensemble party).
    pub u_bc: ControlledUnitary,
    /// Disentangler with target `A`, applied second.
    pub u_ac: ControlledUnitary,
    pub chi_a: CVector,
    pub chi_b: CVector,
    pub phi_aux: CVector,
    pub output: PureState,
    /// `|U_AC U_BC psi - chi_A (x) chi_B (x) phi|`.
    pub residual: f64,
}

/// Disentangle both ensemble parties from the auxiliary system.
pub fn full_separation(e: &Ensemble) -> Result<FullSeparation> {
    let purif = purify_ensemble(e);
    let (la, lb) = (e.spec.label(0).to_string(), e.spec.label(1).to_string());
    let u_bc = build_disentangler(e, &lb, None)?;
    let u_ac = build_disentangler(e, &la, None)?;
    let chi_a = default_chi(e.spec.dim(0));
    let chi_b = default_chi(e.spec.dim(1));
    let output = u_ac.apply(&u_bc.apply(purif.state())?)?;
    // phi = (<chi_A| (x) <chi_B| (x) 1) output
    let (s1, v1) = contract_party(&output, 0, &chi_a);
    let (_, phi) = contract_party(&PureState::from_parts_unchecked(s1, v1), 0, &chi_b);
    let expect = chi_a.kronecker(&chi_b).kronecker(&phi);
    let residual = (output.amplitudes() - expect).norm();
    if residual > FACTOR_TOL {
        return Err(Error::Numerical(format!("separation residual {residual:e}")));
    }
    Ok(FullSeparation {
        u_bc,
        u_ac,
        chi_a,
        chi_b,
        phi_aux: phi,
        output,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCluster {
    pub a: f64,
    pub b: f64,
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StabilizerDecomposition {
    /// `e^{i theta} u_A (x) 1_B (x) diag(e^{-i a})`.
    pub s_ac: LocalUnitary,
    /// `1_A (x) u_B (x) diag(e^{-i b})`.
    pub s_bc: LocalUnitary,
    /// Fitted phase of the input stabilizer on the purification.
    pub theta: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub clusters: Vec<PhaseCluster>,
    pub ac_residual: f64,
    pub bc_residual: f64,
    /// Max-abs distance of `s_ac s_bc` from `s (x) 1_aux` as operators.
    pub product_residual: f64,
}

/// Split a two-party stabilizer `u_A (x) u_B` of an ensemble purification into
/// an `AC` and a `BC` stabilizer whose product is the original operator.
///
/// Every line is an eigenvector of both factors; lines are clustered by their
/// eigenphase pairs and the auxiliary factors undo those phases line by line.
/// The phase split puts the whole fitted phase on `s_ac`. On the orthogonal
/// complement of the line spans the outputs keep the input factors unchanged.
pub fn decompose_two_party_stabilizer(purif: &EnsemblePurification, s: &LocalUnitary) -> Result<StabilizerDecomposition> {
    let ens = purif.ensemble();
    let psi = purif.state();
    let (ua, ub) = if s.spec() == ens.spec() {
        (s.factors()[0].clone(), s.factors()[1].clone())
    } else if s.spec() == psi.spec() {
        let aux = &s.factors()[2];
        if linalg::max_abs(&(aux - CMatrix::identity(aux.nrows(), aux.ncols()))) > UNITARY_TOL {
            return Err(Error::SpecMismatch("stabilizer must act trivially on the auxiliary party".into()));
        }
        (s.factors()[0].clone(), s.factors()[1].clone())
    } else {
        return Err(Error::SpecMismatch(
            "stabilizer must act on the ensemble parties".into(),
        ));
    };
    let gamma = s.global_phase();
    let l = ens.len();
    let id_aux = CMatrix::identity(l, l);
    let full = LocalUnitary::new(psi.spec().clone(), vec![ua.clone(), ub.clone(), id_aux], gamma)?;
    let cand = verify_candidate(psi, &full)?;
    if !cand.verified {
        return Err(Error::NotAStabilizer {
            residual: cand.residual,
        });
    }
    let theta = cand.phase.unwrap_or(0.0);
    let theta0 = linalg::wrap_angle(theta - gamma);
    let labels = (ens.spec().label(0).to_string(), ens.spec().label(1).to_string());

    let eigenphase = |u: &CMatrix, v: &CVector, line: usize, party: &str| -> Result<f64> {
        let uv = u * v;
        let alpha = v.dotc(&uv).arg();
        let residual = (&uv - v * Complex64::from_polar(1.0, alpha)).norm();
        if residual > EIGEN_TOL {
            return Err(Error::EigenvectorCondition {
                line,
                party: party.to_string(),
                residual,
            });
        }
        Ok(linalg::wrap_angle(alpha))
    };

    let mut alphas = Vec::with_capacity(l);
    let mut betas = Vec::with_capacity(l);
    for (line, t) in ens.terms().iter().enumerate() {
        if t.weight == 0.0 {
            alphas.push(theta0);
            betas.push(0.0);
            continue;
        }
        let a = eigenphase(&ua, &t.vectors[0], line, &labels.0)?;
        let b = eigenphase(&ub, &t.vectors[1], line, &labels.1)?;
        if linalg::angle_distance(a + b, theta0) > PHASE_SUM_TOL {
            return Err(Error::PhaseSumCondition {
                line,
                sum: linalg::wrap_angle(a + b),
                theta: theta0,
            });
        }
        alphas.push(a);
        betas.push(b);
    }

    let mut clusters: Vec<PhaseCluster> = Vec::new();
    let mut cluster_of = Vec::with_capacity(l);
    for line in 0..l {
        let (a, b) = (alphas[line], betas[line]);
        match clusters.iter().position(|c| {
            linalg::angle_distance(c.a, a) <= CLUSTER_TOL && linalg::angle_distance(c.b, b) <= CLUSTER_TOL
        }) {
            Some(i) => {
                clusters[i].lines.push(line);
                cluster_of.push(i);
            }
            None => {
                clusters.push(PhaseCluster {
                    a,
                    b: linalg::wrap_angle(theta0 - a),
                    lines: vec![line],
                });
                cluster_of.push(clusters.len() - 1);
            }
        }
    }

    let diag = |f: &dyn Fn(&PhaseCluster) -> f64| {
        CMatrix::from_diagonal(&CVector::from_iterator(
            l,
            cluster_of.iter().map(|&i| Complex64::from_polar(1.0, -f(&clusters[i]))),
        ))
    };
    let (ida, idb) = (
        CMatrix::identity(ua.nrows(), ua.nrows()),
        CMatrix::identity(ub.nrows(), ub.nrows()),
    );
    let s_ac = LocalUnitary::new(psi.spec().clone(), vec![ua, idb, diag(&|c| c.a)], theta)?;
    let s_bc = LocalUnitary::new(psi.spec().clone(), vec![ida, ub, diag(&|c| c.b)], 0.0)?;
    let ac_residual = verify_candidate(psi, &s_ac)?.residual;
    let bc_residual = verify_candidate(psi, &s_bc)?.residual;
    let product_residual = linalg::max_abs(&(s_ac.compose(&s_bc)?.to_matrix() - full.to_matrix()));
    let worst = ac_residual.max(bc_residual).max(product_residual);
    if worst > DECOMPOSE_TOL {
        return Err(Error::Numerical(format!("decomposition check failed (residual {worst:e})")));
    }
    Ok(StabilizerDecomposition {
        s_ac,
        s_bc,
        theta,
        alphas,
        betas,
        clusters,
        ac_residual,
        bc_residual,
        product_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pauli_matrix;
    use crate::linalg::{c, ONE};

    fn ket(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i] = ONE;
        v
    }

    fn ghz_ensemble() -> Ensemble {
        let spec = PartitionSpec::qubits(&["A", "B"]).unwrap();
        Ensemble::new(
            spec,
            vec![
                EnsembleTerm { weight: 0.5, vectors: vec![ket(2, 0), ket(2, 0)] },
                EnsembleTerm { weight: 0.5, vectors: vec![ket(2, 1), ket(2, 1)] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn purification_of_single_line_is_product() {
        let spec = PartitionSpec::qubits(&["A", "B"]).unwrap();
        let e = Ensemble::new(spec, vec![EnsembleTerm { weight: 1.0, vectors: vec![ket(2, 0), ket(2, 0)] }]).unwrap();
        let p = purify_ensemble(&e);
        assert_eq!(p.state().spec().dims(), vec![2, 2, 1]);
        assert_eq!(p.state().amplitudes()[0], ONE);
    }

    #[test]
    fn ghz_ensemble_purifies_to_ghz() {
        let p = purify_ensemble(&ghz_ensemble());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = p.state().amplitudes();
        assert!((a[0] - c(s, 0.0)).norm() < 1e-15 && (a[7] - c(s, 0.0)).norm() < 1e-15);
        assert_eq!(p.aux_label(), "C");
    }

    #[test]
    fn ensemble_validation() {
        let spec = PartitionSpec::qubits(&["A", "B"]).unwrap();
        let bad_sum = Ensemble::new(spec.clone(), vec![EnsembleTerm { weight: 0.9, vectors: vec![ket(2, 0), ket(2, 0)] }]);
        assert!(matches!(bad_sum, Err(Error::InvalidEnsemble(_))));
        let bad_norm = Ensemble::new(
            spec.clone(),
            vec![EnsembleTerm { weight: 1.0, vectors: vec![ket(2, 0) * c(2.0, 0.0), ket(2, 0)] }],
        );
        assert!(matches!(bad_norm, Err(Error::NotNormalized { .. })));
        let too_many = vec![EnsembleTerm { weight: 1.0 / 17.0, vectors: vec![ket(2, 0), ket(2, 0)] }; 17];
        assert!(matches!(Ensemble::new(spec, too_many), Err(Error::InvalidEnsemble(_))));
    }

    #[test]
    fn merge_sums_identical_lines() {
        let spec = PartitionSpec::qubits(&["A", "B"]).unwrap();
        let e = Ensemble::new(
            spec,
            vec![
                EnsembleTerm { weight: 0.25, vectors: vec![ket(2, 0), ket(2, 0)] },
                EnsembleTerm { weight: 0.5, vectors: vec![ket(2, 1), ket(2, 1)] },
                EnsembleTerm { weight: 0.25, vectors: vec![ket(2, 0) * c(0.0, 1.0), ket(2, 0)] },
            ],
        )
        .unwrap();
        let m = e.merge_duplicates();
        assert_eq!(m.weights(), vec![0.5, 0.5]);
        assert!(linalg::max_abs(&(m.density().matrix() - e.density().matrix())) < 1e-15);
    }

    #[test]
    fn householder_maps_exactly() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let line = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
        let chi = ket(2, 0);
        let u = householder_block(&line, &chi);
        assert!(linalg::unitarity_residual(&u) < 1e-14);
        assert!((&u * &line - &chi).norm() < 1e-14);
        let par = householder_block(&(chi.clone() * c(0.0, 1.0)), &chi);
        assert!((&par * (chi.clone() * c(0.0, 1.0)) - &chi).norm() < 1e-15);
        assert!(linalg::max_abs(&(householder_block(&chi, &chi) - CMatrix::identity(2, 2))) < 1e-15);
        let x = householder_block(&ket(2, 1), &chi);
        assert!(linalg::max_abs(&(x - pauli_matrix('X').unwrap())) < 1e-15);
    }

    #[test]
    fn ghz_disentangler_blocks_and_output() {
        let e = ghz_ensemble();
        let u = build_disentangler(&e, "B", None).unwrap();
        assert!(linalg::max_abs(&(&u.blocks()[0] - CMatrix::identity(2, 2))) < 1e-15);
        assert!(linalg::max_abs(&(&u.blocks()[1] - pauli_matrix('X').unwrap())) < 1e-15);
        let d = disentangle(&e, "B", None).unwrap();
        assert!(d.residual < 1e-12);
        // rest on (A, C) is (|00> + |11>)/sqrt2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = CVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        assert!((d.rest.amplitudes() - want).norm() < 1e-12);
        // operator form agrees with the direct block application
        let purif = purify_ensemble(&e);
        let direct = u.to_matrix() * purif.state().amplitudes();
        assert!((direct - d.output.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn bad_chi_rejected() {
        let e = ghz_ensemble();
        let chi = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(build_disentangler(&e, "B", Some(&chi)), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn full_separation_of_ghz() {
        let sep = full_separation(&ghz_ensemble()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(sep.residual < 1e-12);
        assert!((&sep.phi_aux - CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])).norm() < 1e-12);
    }

    #[test]
    fn zz_decomposes_into_ac_and_bc() {
        let purif = purify_ensemble(&ghz_ensemble());
        let z = pauli_matrix('Z').unwrap();
        let s = LocalUnitary::new(purif.ensemble().spec().clone(), vec![z.clone(), z], 0.0).unwrap();
        let d = decompose_two_party_stabilizer(&purif, &s).unwrap();
        assert!(d.theta.abs() < 1e-12);
        assert!(d.alphas[0].abs() < 1e-12 && (d.alphas[1].abs() - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(d.clusters.len(), 2);
        let aux = &d.s_ac.factors()[2];
        assert!((aux[(1, 1)] + ONE).norm() < 1e-12);
        assert!(d.product_residual < 1e-12);
    }

    #[test]
    fn identity_decomposes_trivially_and_non_stabilizer_fails() {
        let purif = purify_ensemble(&ghz_ensemble());
        let id = LocalUnitary::identity(purif.ensemble().spec().clone());
        let d = decompose_two_party_stabilizer(&purif, &id).unwrap();
        assert!(linalg::max_abs(&(d.s_ac.to_matrix() - CMatrix::identity(8, 8))) < 1e-12);
        assert!(linalg::max_abs(&(d.s_bc.to_matrix() - CMatrix::identity(8, 8))) < 1e-12);
        let x = pauli_matrix('X').unwrap();
        let xi = LocalUnitary::from_labeled(purif.ensemble().spec().clone(), &[("A", x)], 0.0).unwrap();
        assert!(matches!(decompose_two_party_stabilizer(&purif, &xi), Err(Error::NotAStabilizer { .. })));
    }
}
