//! Multipartite state containers and the tensor-product substrate.
//!
//! Flat indices are row-major over the declaration order of the parties in a
//! [`PartitionSpec`]: the first declared party is the most significant digit.
//! Every operator assembly in the crate relies on this convention.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, hermitian_eigen, CMatrix, CVector, ONE, ZERO};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the largest one are dropped when purifying.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Party {
    pub label: String,
    pub dim: usize,
}

/// Ordered party labels with local dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSpec {
    parties: Vec<Party>,
    #[serde(skip)]
    total_dim: usize,
}

impl PartitionSpec {
    pub fn new<L: Into<String>>(parties: impl IntoIterator<Item = (L, usize)>) -> Result<Self> {
        let parties: Vec<Party> = parties
            .into_iter()
            .map(|(label, dim)| Party {
                label: label.into(),
                dim,
            })
            .collect();
        if parties.is_empty() {
            return Err(Error::EmptyPartySet);
        }
        let mut seen = BTreeSet::new();
        for p in &parties {
            if p.label.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if p.dim == 0 {
                return Err(Error::InvalidDimension {
                    label: p.label.clone(),
                    dim: p.dim,
                });
            }
            if !seen.insert(p.label.as_str()) {
                return Err(Error::DuplicateLabel(p.label.clone()));
            }
        }
        let total_dim = parties.iter().map(|p| p.dim).product();
        Ok(PartitionSpec { parties, total_dim })
    }

    /// Qubit parties with the given labels.
    pub fn qubits(labels: &[&str]) -> Result<Self> {
        Self::new(labels.iter().map(|l| (*l, 2)))
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim(&self, party: usize) -> usize {
        self.parties[party].dim
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.dim).collect()
    }

    pub fn label(&self, party: usize) -> &str {
        &self.parties[party].label
    }

    pub fn labels(&self) -> Vec<&str> {
        self.parties.iter().map(|p| p.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.parties
            .iter()
            .position(|p| p.label == label)
            .ok_or_else(|| Error::UnknownParty(label.to_string()))
    }

    /// Resolve labels to sorted, deduplicated party indices.
    pub fn indices(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut out = BTreeSet::new();
        for l in labels {
            out.insert(self.index_of(l)?);
        }
        Ok(out.into_iter().collect())
    }

    /// Row-major stride of each party.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.parties[k + 1].dim;
        }
        strides
    }

    /// Sub-partition on the given (sorted) party indices.
    pub fn subspec(&self, indices: &[usize]) -> PartitionSpec {
        let parties: Vec<Party> = indices.iter().map(|&i| self.parties[i].clone()).collect();
        let total_dim = parties.iter().map(|p| p.dim).product();
        PartitionSpec { parties, total_dim }
    }

    /// Append a party.
    pub fn with_party(&self, label: impl Into<String>, dim: usize) -> Result<PartitionSpec> {
        let mut parties: Vec<(String, usize)> =
            self.parties.iter().map(|p| (p.label.clone(), p.dim)).collect();
        parties.push((label.into(), dim));
        PartitionSpec::new(parties)
    }

    /// A label not yet used: the first free capital letter from `C`, else `aux`.
    pub fn fresh_label(&self) -> String {
        for ch in "CDEFGHIJKLMNOPQRSTUVWXYZ".chars() {
            let l = ch.to_string();
            if self.index_of(&l).is_err() {
                return l;
            }
        }
        let mut n = 0;
        loop {
            let l = format!("aux{n}");
            if self.index_of(&l).is_err() {
                return l;
            }
            n += 1;
        }
    }

    /// Digits of a flat index.
    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            out[k] = flat % self.parties[k].dim;
            flat /= self.parties[k].dim;
        }
        out
    }

    pub fn flat(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.parties)
            .fold(0, |acc, (&d, p)| acc * p.dim + d)
    }

    pub(crate) fn check_same(&self, other: &PartitionSpec, context: &str) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(format!(
                "{context}: {:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        Ok(())
    }

    /// Group parties into merged factors. Each group becomes one party whose
    /// index is row-major over the group's members in the listed order.
    /// Returns the merged spec and the permutation (new flat -> old flat).
    pub fn regroup(&self, groups: &[Vec<usize>]) -> Result<(PartitionSpec, Vec<usize>)> {
        let mut seen = BTreeSet::new();
        for g in groups {
            if g.is_empty() {
                return Err(Error::EmptyPartySet);
            }
            for &i in g {
                if i >= self.len() || !seen.insert(i) {
                    return Err(Error::SpecMismatch("grouping must cover every party once".into()));
                }
            }
        }
        if seen.len() != self.len() {
            return Err(Error::SpecMismatch("grouping must cover every party once".into()));
        }
        let merged = PartitionSpec::new(groups.iter().map(|g| {
            let label = if g.len() == 1 {
                self.parties[g[0]].label.clone()
            } else {
                let inner: String = g.iter().map(|&i| self.parties[i].label.as_str()).collect();
                format!("({inner})")
            };
            (label, g.iter().map(|&i| self.parties[i].dim).product())
        }))?;
        let order: Vec<usize> = groups.iter().flatten().copied().collect();
        let permuted = self.subspec(&order);
        let mut perm = vec![0; self.total_dim];
        for (new_flat, slot) in perm.iter_mut().enumerate() {
            let new_digits = permuted.digits(new_flat);
            let mut old_digits = vec![0; self.len()];
            for (pos, &party) in order.iter().enumerate() {
                old_digits[party] = new_digits[pos];
            }
            *slot = self.flat(&old_digits);
        }
        Ok((merged, perm))
    }
}

/// Apply `m` to one tensor factor of a flat vector.
pub(crate) fn apply_on_party(
    spec: &PartitionSpec,
    party: usize,
    m: &CMatrix,
    v: &[Complex64],
) -> Vec<Complex64> {
    let d = spec.dim(party);
    let stride = spec.strides()[party];
    let outer = spec.total_dim() / (d * stride);
    let mut out = vec![ZERO; v.len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * d * stride + s;
            for i in 0..d {
                let mut acc = ZERO;
                for j in 0..d {
                    acc += m[(i, j)] * v[base + j * stride];
                }
                out[base + i * stride] = acc;
            }
        }
    }
    out
}

/// Apply `m` on one factor to every column of a square operator.
pub(crate) fn apply_on_party_columns(
    spec: &PartitionSpec,
    party: usize,
    m: &CMatrix,
    a: &CMatrix,
) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        let col: Vec<Complex64> = a.column(j).iter().copied().collect();
        let res = apply_on_party(spec, party, m, &col);
        out.set_column(j, &CVector::from_vec(res));
    }
    out
}

/// Operator acting as `m` on `party` and as the identity elsewhere.
pub fn kron_embed(spec: &PartitionSpec, party: &str, m: &CMatrix) -> Result<CMatrix> {
    let k = spec.index_of(party)?;
    embed_index(spec, k, m)
}

pub(crate) fn embed_index(spec: &PartitionSpec, k: usize, m: &CMatrix) -> Result<CMatrix> {
    let d = spec.dim(k);
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: format!("operator on party {}", spec.label(k)),
            expected: d,
            found: m.nrows(),
        });
    }
    let left: usize = (0..k).map(|i| spec.dim(i)).product();
    let right: usize = (k + 1..spec.len()).map(|i| spec.dim(i)).product();
    Ok(CMatrix::identity(left, left).kronecker(&m.kronecker(&CMatrix::identity(right, right))))
}

/// Normalized pure state on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    spec: PartitionSpec,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(spec: PartitionSpec, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "amplitude vector".into(),
                expected: spec.total_dim(),
                found: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("amplitudes".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { spec, amplitudes })
    }

    /// Build from an arbitrary nonzero vector, rescaling to unit norm.
    pub fn normalized(spec: PartitionSpec, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(spec, amplitudes.unscale(norm))
    }

    /// Tensor product of one vector per party.
    pub fn product(spec: PartitionSpec, factors: &[CVector]) -> Result<Self> {
        if factors.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                context: "product factors".into(),
                expected: spec.len(),
                found: factors.len(),
            });
        }
        let mut amps = CVector::from_element(1, ONE);
        for (k, f) in factors.iter().enumerate() {
            if f.len() != spec.dim(k) {
                return Err(Error::DimensionMismatch {
                    context: format!("factor for party {}", spec.label(k)),
                    expected: spec.dim(k),
                    found: f.len(),
                });
            }
            amps = amps.kronecker(f);
        }
        Self::normalized(spec, amps)
    }

    /// Computational basis state.
    pub fn basis(spec: PartitionSpec, digits: &[usize]) -> Result<Self> {
        let mut amps = CVector::zeros(spec.total_dim());
        amps[spec.flat(digits)] = ONE;
        Self::new(spec, amps)
    }

    pub(crate) fn from_parts_unchecked(spec: PartitionSpec, amplitudes: CVector) -> Self {
        PureState { spec, amplitudes }
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_parts_hermitized(self.spec.clone(), self.projector())
    }

    /// Amplitudes reshaped to a `kept x traced` matrix for the given party split.
    pub(crate) fn split_matrix(&self, keep: &[usize]) -> CMatrix {
        let traced: Vec<usize> = (0..self.spec.len()).filter(|i| !keep.contains(i)).collect();
        let kept_spec = self.spec.subspec(keep);
        let traced_spec = self.spec.subspec(&traced);
        let mut m = CMatrix::zeros(kept_spec.total_dim(), traced_spec.total_dim().max(1));
        for flat in 0..self.spec.total_dim() {
            let d = self.spec.digits(flat);
            let kd: Vec<usize> = keep.iter().map(|&i| d[i]).collect();
            let td: Vec<usize> = traced.iter().map(|&i| d[i]).collect();
            let col = if traced.is_empty() { 0 } else { traced_spec.flat(&td) };
            m[(kept_spec.flat(&kd), col)] = self.amplitudes[flat];
        }
        m
    }

    /// Reorder and merge parties; see [`PartitionSpec::regroup`].
    pub fn regroup(&self, groups: &[Vec<usize>]) -> Result<PureState> {
        let (spec, perm) = self.spec.regroup(groups)?;
        let amps = CVector::from_iterator(perm.len(), perm.iter().map(|&old| self.amplitudes[old]));
        Ok(PureState::from_parts_unchecked(spec, amps))
    }

    /// |<self|other>|
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Hermitian, positive semidefinite, unit-trace operator on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    spec: PartitionSpec,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(spec: PartitionSpec, matrix: CMatrix) -> Result<Self> {
        let n = spec.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "density matrix".into(),
                expected: n,
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix".into()));
        }
        let residual = linalg::hermiticity_residual(&matrix);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::BadTrace { trace });
        }
        let eig = hermitian_eigen(&matrix);
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(DensityMatrix {
            spec,
            matrix: (&matrix + matrix.adjoint()).scale(0.5),
        })
    }

    /// Maximally mixed state.
    pub fn maximally_mixed(spec: PartitionSpec) -> Self {
        let n = spec.total_dim();
        let m = CMatrix::identity(n, n).unscale(n as f64);
        DensityMatrix { spec, matrix: m }
    }

    pub(crate) fn from_parts_hermitized(spec: PartitionSpec, matrix: CMatrix) -> Self {
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        DensityMatrix { spec, matrix }
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).values
    }

    pub fn rank(&self) -> usize {
        let v = self.eigenvalues();
        let max = v.first().copied().unwrap_or(0.0);
        v.iter().filter(|&&x| x > RANK_CUTOFF * max).count()
    }

    pub fn regroup(&self, groups: &[Vec<usize>]) -> Result<DensityMatrix> {
        let (spec, perm) = self.spec.regroup(groups)?;
        let n = perm.len();
        let m = CMatrix::from_fn(n, n, |i, j| self.matrix[(perm[i], perm[j])]);
        Ok(DensityMatrix { spec, matrix: m })
    }
}

/// Borrowed pure or mixed state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> StateRef<'a> {
    pub fn spec(&self) -> &'a PartitionSpec {
        match self {
            StateRef::Pure(p) => p.spec(),
            StateRef::Mixed(m) => m.spec(),
        }
    }
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(p: &'a PureState) -> Self {
        StateRef::Pure(p)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(m: &'a DensityMatrix) -> Self {
        StateRef::Mixed(m)
    }
}

/// Reduced density matrix on the parties in `keep` (result in declaration order).
pub fn partial_trace<'a>(state: impl Into<StateRef<'a>>, keep: &[&str]) -> Result<DensityMatrix> {
    let state = state.into();
    let spec = state.spec();
    if keep.is_empty() {
        return Err(Error::EmptyPartySet);
    }
    let keep = spec.indices(keep)?;
    Ok(partial_trace_indices(state, &keep))
}

pub(crate) fn partial_trace_indices(state: StateRef<'_>, keep: &[usize]) -> DensityMatrix {
    let spec = state.spec();
    let sub = spec.subspec(keep);
    match state {
        StateRef::Pure(psi) => {
            let m = psi.split_matrix(keep);
            DensityMatrix::from_parts_hermitized(sub, &m * m.adjoint())
        }
        StateRef::Mixed(rho) => {
            let traced: Vec<usize> = (0..spec.len()).filter(|i| !keep.contains(i)).collect();
            let traced_spec = spec.subspec(&traced);
            let n = spec.total_dim();
            let mut kept_of = vec![0; n];
            let mut traced_of = vec![0; n];
            for flat in 0..n {
                let d = spec.digits(flat);
                let kd: Vec<usize> = keep.iter().map(|&i| d[i]).collect();
                let td: Vec<usize> = traced.iter().map(|&i| d[i]).collect();
                kept_of[flat] = sub.flat(&kd);
                traced_of[flat] = if traced.is_empty() { 0 } else { traced_spec.flat(&td) };
            }
            let mut out = CMatrix::zeros(sub.total_dim(), sub.total_dim());
            for a in 0..n {
                for b in 0..n {
                    if traced_of[a] == traced_of[b] {
                        out[(kept_of[a], kept_of[b])] += rho.matrix()[(a, b)];
                    }
                }
            }
            DensityMatrix::from_parts_hermitized(sub, out)
        }
    }
}

/// Minimal purification `sum_i sqrt(p_i) |i> (x) |i>_aux` with an appended
/// auxiliary party of dimension `rank(rho)`.
pub fn minimal_purification(rho: &DensityMatrix) -> PureState {
    let eig = hermitian_eigen(rho.matrix());
    let max = eig.values.first().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > RANK_CUTOFF * max)
        .collect();
    let rank = kept.len().max(1);
    let label = rho.spec().fresh_label();
    let spec = rho
        .spec()
        .with_party(label, rank)
        .expect("fresh label is unique");
    let n = rho.spec().total_dim();
    let mut amps = CVector::zeros(n * rank);
    for (col, &i) in kept.iter().enumerate() {
        let w = eig.values[i].sqrt();
        for s in 0..n {
            amps[s * rank + col] = eig.vectors[(s, i)] * w;
        }
    }
    PureState::normalized(spec, amps).expect("purification of a unit-trace matrix is nonzero")
}

/// Real-orthonormal basis of the `n x n` Hermitian matrices.
///
/// Order: diagonal units `E_ii`, then for each `i < j` (lexicographic) the
/// symmetric `(E_ij + E_ji)/sqrt2` followed by the antisymmetric
/// `i(E_ij - E_ji)/sqrt2`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            let mut m = CMatrix::zeros(dim, dim);
            m[(i, i)] = ONE;
            elements.push(m);
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let mut sym = CMatrix::zeros(dim, dim);
                sym[(i, j)] = c(s, 0.0);
                sym[(j, i)] = c(s, 0.0);
                elements.push(sym);
                let mut anti = CMatrix::zeros(dim, dim);
                anti[(i, j)] = c(0.0, s);
                anti[(j, i)] = c(0.0, -s);
                elements.push(anti);
            }
        }
        HermitianBasis { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Real coordinates `tr(B_a h)`.
    pub fn coords(&self, h: &CMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|b| (b * h).trace().re)
            .collect()
    }

    pub fn compose(&self, coords: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (b, &x) in self.elements.iter().zip(coords) {
            if x != 0.0 {
                m += b.scale(x);
            }
        }
        m
    }
}

/// Tensor product of one unitary per party times a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    spec: PartitionSpec,
    factors: Vec<CMatrix>,
    global_phase: f64,
}

impl LocalUnitary {
    pub fn new(spec: PartitionSpec, factors: Vec<CMatrix>, global_phase: f64) -> Result<Self> {
        if factors.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                context: "local unitary factors".into(),
                expected: spec.len(),
                found: factors.len(),
            });
        }
        for (k, f) in factors.iter().enumerate() {
            if f.nrows() != spec.dim(k) || f.ncols() != spec.dim(k) {
                return Err(Error::DimensionMismatch {
                    context: format!("factor for party {}", spec.label(k)),
                    expected: spec.dim(k),
                    found: f.nrows(),
                });
            }
            let residual = linalg::unitarity_residual(f);
            if !(residual <= UNITARY_TOL) {
                return Err(Error::NotUnitary {
                    party: spec.label(k).to_string(),
                    residual,
                });
            }
        }
        if !global_phase.is_finite() {
            return Err(Error::NonFinite("global phase".into()));
        }
        Ok(LocalUnitary {
            spec,
            factors,
            global_phase,
        })
    }

    pub fn identity(spec: PartitionSpec) -> Self {
        let factors = spec
            .parties()
            .iter()
            .map(|p| CMatrix::identity(p.dim, p.dim))
            .collect();
        LocalUnitary {
            spec,
            factors,
            global_phase: 0.0,
        }
    }

    /// Identity everywhere except the listed `(label, matrix)` factors.
    pub fn from_labeled(
        spec: PartitionSpec,
        factors: &[(&str, CMatrix)],
        global_phase: f64,
    ) -> Result<Self> {
        let mut full: Vec<CMatrix> = spec
            .parties()
            .iter()
            .map(|p| CMatrix::identity(p.dim, p.dim))
            .collect();
        for (label, m) in factors {
            full[spec.index_of(label)?] = m.clone();
        }
        Self::new(spec, full, global_phase)
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn factor(&self, label: &str) -> Result<&CMatrix> {
        Ok(&self.factors[self.spec.index_of(label)?])
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn with_global_phase(mut self, phase: f64) -> Self {
        self.global_phase = phase;
        self
    }

    /// Full operator `e^{i phase} (x)_k u_k`.
    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::from_element(1, 1, Complex64::from_polar(1.0, self.global_phase));
        for f in &self.factors {
            m = m.kronecker(f);
        }
        m
    }

    /// Factorwise product `self * other`.
    pub fn compose(&self, other: &LocalUnitary) -> Result<LocalUnitary> {
        self.spec.check_same(&other.spec, "compose")?;
        Ok(LocalUnitary {
            spec: self.spec.clone(),
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a * b)
                .collect(),
            global_phase: self.global_phase + other.global_phase,
        })
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        self.spec.check_same(psi.spec(), "apply_local")?;
        Ok(PureState::from_parts_unchecked(
            self.spec.clone(),
            self.apply_vec(psi.amplitudes()),
        ))
    }

    pub(crate) fn apply_vec(&self, v: &CVector) -> CVector {
        let mut cur: Vec<Complex64> = v.iter().copied().collect();
        for (k, f) in self.factors.iter().enumerate() {
            if !is_identity(f) {
                cur = apply_on_party(&self.spec, k, f, &cur);
            }
        }
        let phase = Complex64::from_polar(1.0, self.global_phase);
        CVector::from_iterator(cur.len(), cur.into_iter().map(|z| z * phase))
    }

    /// `U rho U^dag`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.spec.check_same(rho.spec(), "conjugate")?;
        let left = self.apply_columns(rho.matrix());
        let out = self.apply_columns(&left.adjoint());
        Ok(DensityMatrix::from_parts_hermitized(self.spec.clone(), out))
    }

    fn apply_columns(&self, a: &CMatrix) -> CMatrix {
        let mut cur = a.clone();
        for (k, f) in self.factors.iter().enumerate() {
            if !is_identity(f) {
                cur = apply_on_party_columns(&self.spec, k, f, &cur);
            }
        }
        cur
    }
}

fn is_identity(m: &CMatrix) -> bool {
    m.iter().enumerate().all(|(idx, z)| {
        let (i, j) = (idx % m.nrows(), idx / m.nrows());
        if i == j {
            *z == ONE
        } else {
            *z == ZERO
        }
    })
}

pub fn apply_local(u: &LocalUnitary, psi: &PureState) -> Result<PureState> {
    u.apply(psi)
}

pub fn conjugate(u: &LocalUnitary, rho: &DensityMatrix) -> Result<DensityMatrix> {
    u.conjugate(rho)
}
