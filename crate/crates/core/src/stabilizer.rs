//! Lie algebras of local-unitary stabilizer groups.
//!
//! A stabilizer generator is a tuple of Hermitian matrices `(H_k)` (one per
//! party) plus, for pure states, a phase rate `theta`. The infinitesimal
//! stabilizer condition is linear in these parameters:
//!
//! * pure:  `(sum_k H_k - theta) |psi> = 0`
//! * mixed: `[sum_k H_k, rho] = 0`
//!
//! Each `H_k` is expanded in the [`HermitianBasis`] of its party, so the
//! condition becomes a real matrix (real rows, then imaginary rows) whose null
//! space is the algebra. `theta` enters as one extra coordinate with unit
//! weight, the same norm as a unit Hilbert-Schmidt Hermitian direction.
//! Inactive parties carry no coordinates in the solve and are zero-padded
//! afterwards, so every algebra of one state lives in the same parameter space.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, column_space, null_space, realify, CMatrix, RMatrix, RankDecision, I};
use crate::tensor::{
    apply_on_party, apply_on_party_columns, DensityMatrix, HermitianBasis, LocalUnitary,
    PartitionSpec, PureState, HERMITIAN_TOL,
};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Entries below this magnitude do not count towards a generator's support.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Pure,
    Mixed,
}

/// One element of the stabilizer parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGenerator {
    spec: PartitionSpec,
    hs: Vec<CMatrix>,
    theta: f64,
}

impl LocalGenerator {
    pub fn new(spec: PartitionSpec, hs: Vec<CMatrix>, theta: f64) -> Result<Self> {
        if hs.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                context: "generator components".into(),
                expected: spec.len(),
                found: hs.len(),
            });
        }
        for (k, h) in hs.iter().enumerate() {
            if h.nrows() != spec.dim(k) || h.ncols() != spec.dim(k) {
                return Err(Error::DimensionMismatch {
                    context: format!("generator on party {}", spec.label(k)),
                    expected: spec.dim(k),
                    found: h.nrows(),
                });
            }
            let residual = linalg::hermiticity_residual(h);
            if residual > HERMITIAN_TOL {
                return Err(Error::NotHermitian { residual });
            }
        }
        Ok(LocalGenerator { spec, hs, theta })
    }

    pub fn zero(spec: PartitionSpec) -> Self {
        let hs = spec
            .parties()
            .iter()
            .map(|p| CMatrix::zeros(p.dim, p.dim))
            .collect();
        LocalGenerator {
            spec,
            hs,
            theta: 0.0,
        }
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn hs(&self) -> &[CMatrix] {
        &self.hs
    }

    pub fn h(&self, label: &str) -> Result<&CMatrix> {
        Ok(&self.hs[self.spec.index_of(label)?])
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Parties whose component has an entry above [`SUPPORT_TOL`].
    pub fn support(&self) -> Vec<usize> {
        (0..self.hs.len())
            .filter(|&k| linalg::max_abs(&self.hs[k]) > SUPPORT_TOL)
            .collect()
    }

    /// Hermitian generator of the Lie bracket: componentwise `i [h_k, h'_k]`, `theta = 0`.
    pub fn bracket(&self, other: &LocalGenerator) -> LocalGenerator {
        let hs = self
            .hs
            .iter()
            .zip(&other.hs)
            .map(|(a, b)| (a * b - b * a) * I)
            .map(|m| (&m + m.adjoint()).scale(0.5))
            .collect();
        LocalGenerator {
            spec: self.spec.clone(),
            hs,
            theta: 0.0,
        }
    }

    /// `e^{-i t theta} (x)_k exp(i t h_k)`, which fixes the state exactly when
    /// the generator is in its stabilizer algebra.
    pub fn exponentiate(&self, t: f64) -> LocalUnitary {
        let factors = self
            .hs
            .iter()
            .map(|h| linalg::expm_i_hermitian(h, t))
            .collect();
        LocalUnitary::new(self.spec.clone(), factors, -t * self.theta)
            .expect("exponential of Hermitian generator is unitary")
    }

    /// `|| (sum_k H_k - theta) psi ||`.
    pub fn pure_residual(&self, psi: &PureState) -> f64 {
        let v: Vec<Complex64> = psi.amplitudes().iter().copied().collect();
        let mut acc: Vec<Complex64> = v.iter().map(|z| -z * self.theta).collect();
        for (k, h) in self.hs.iter().enumerate() {
            let hv = apply_on_party(&self.spec, k, h, &v);
            for (a, b) in acc.iter_mut().zip(hv) {
                *a += b;
            }
        }
        acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-abs entry of `[sum_k H_k, rho]`.
    pub fn mixed_residual(&self, rho: &DensityMatrix) -> f64 {
        let n = rho.spec().total_dim();
        let mut er = CMatrix::zeros(n, n);
        for (k, h) in self.hs.iter().enumerate() {
            er += apply_on_party_columns(&self.spec, k, h, rho.matrix());
        }
        linalg::max_abs(&(&er - er.adjoint()))
    }
}

/// Coordinate layout of the full parameter space of a partition.
#[derive(Debug, Clone)]
pub(crate) struct ParamLayout {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    with_theta: bool,
    len: usize,
}

impl ParamLayout {
    pub(crate) fn new(spec: &PartitionSpec, kind: AlgebraKind) -> Self {
        let dims = spec.dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d * d;
        }
        let with_theta = kind == AlgebraKind::Pure;
        ParamLayout {
            offsets,
            dims,
            with_theta,
            len: acc + usize::from(with_theta),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn party_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.dims[k] * self.dims[k]
    }

    fn theta_index(&self) -> Option<usize> {
        self.with_theta.then_some(self.len - 1)
    }

    pub(crate) fn to_generator(&self, spec: &PartitionSpec, coords: &[f64]) -> LocalGenerator {
        let hs = (0..self.dims.len())
            .map(|k| HermitianBasis::new(self.dims[k]).compose(&coords[self.party_range(k)]))
            .collect();
        let theta = self.theta_index().map_or(0.0, |i| coords[i]);
        LocalGenerator {
            spec: spec.clone(),
            hs,
            theta,
        }
    }

    pub(crate) fn coords(&self, g: &LocalGenerator) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (k, h) in g.hs.iter().enumerate() {
            let x = HermitianBasis::new(self.dims[k]).coords(h);
            out[self.party_range(k)].copy_from_slice(&x);
        }
        if let Some(i) = self.theta_index() {
            out[i] = g.theta;
        }
        out
    }
}

/// The state an algebra stabilizes.
#[derive(Debug, Clone)]
pub enum Stabilized {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl Stabilized {
    fn residual(&self, g: &LocalGenerator) -> f64 {
        match self {
            Stabilized::Pure(psi) => g.pure_residual(psi),
            Stabilized::Mixed(rho) => g.mixed_residual(rho),
        }
    }

    fn spec(&self) -> &PartitionSpec {
        match self {
            Stabilized::Pure(p) => p.spec(),
            Stabilized::Mixed(m) => m.spec(),
        }
    }
}

/// Orthonormal basis of a stabilizer Lie algebra.
#[derive(Debug, Clone)]
pub struct StabilizerAlgebra {
    spec: PartitionSpec,
    active: Vec<usize>,
    kind: AlgebraKind,
    tol: f64,
    residual: f64,
    decision: RankDecision,
    coords: RMatrix,
    basis: Vec<LocalGenerator>,
    target: Stabilized,
}

impl StabilizerAlgebra {
    fn from_coords(
        target: Stabilized,
        active: Vec<usize>,
        kind: AlgebraKind,
        tol: f64,
        decision: RankDecision,
        coords: RMatrix,
    ) -> Self {
        let spec = target.spec().clone();
        let layout = ParamLayout::new(&spec, kind);
        let basis: Vec<LocalGenerator> = coords
            .column_iter()
            .map(|col| layout.to_generator(&spec, col.as_slice()))
            .collect();
        let residual = basis
            .iter()
            .map(|g| target.residual(g))
            .fold(0.0, f64::max);
        StabilizerAlgebra {
            spec,
            active,
            kind,
            tol,
            residual,
            decision,
            coords,
            basis,
            target,
        }
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn active_labels(&self) -> Vec<&str> {
        self.active.iter().map(|&k| self.spec.label(k)).collect()
    }

    pub fn basis(&self) -> &[LocalGenerator] {
        &self.basis
    }

    /// Basis coordinates as orthonormal columns.
    pub fn coords(&self) -> &RMatrix {
        &self.coords
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Largest stabilization residual among basis elements.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Rank decision that fixed the dimension.
    pub fn decision(&self) -> &RankDecision {
        &self.decision
    }

    pub fn gap(&self) -> f64 {
        self.decision.gap
    }

    pub fn target(&self) -> &Stabilized {
        &self.target
    }

    pub(crate) fn layout(&self) -> ParamLayout {
        ParamLayout::new(&self.spec, self.kind)
    }

    /// Stabilization residual of an arbitrary generator against this algebra's state.
    pub fn stabilization_residual(&self, g: &LocalGenerator) -> f64 {
        self.target.residual(g)
    }

    /// Generator with the given coefficients on the basis.
    pub fn element(&self, coefficients: &[f64]) -> LocalGenerator {
        let x = &self.coords * DVector::from_column_slice(coefficients);
        self.layout().to_generator(&self.spec, x.as_slice())
    }

    /// Distance of `g` from the span (Euclidean, in parameter coordinates).
    pub fn membership_residual(&self, g: &LocalGenerator) -> f64 {
        let x = DVector::from_vec(self.layout().coords(g));
        let proj = &self.coords * (self.coords.transpose() * &x);
        (x - proj).norm()
    }

    /// Largest distance of a bracket of basis elements from the span, over all
    /// pairs when there are at most `max_pairs`, otherwise over `max_pairs`
    /// seeded random pairs.
    pub fn bracket_closure_residual(&self, max_pairs: usize, seed: u64) -> f64 {
        let n = self.dim();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        if pairs.len() > max_pairs {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pairs.shuffle(&mut rng);
            pairs.truncate(max_pairs);
        }
        pairs
            .iter()
            .map(|&(i, j)| self.membership_residual(&self.basis[i].bracket(&self.basis[j])))
            .fold(0.0, f64::max)
    }

    /// Exponentiate `samples` random unit-norm elements at each `t` and return
    /// the largest residual of the resulting local unitaries as stabilizers.
    pub fn exponentiation_residual(&self, samples: usize, times: &[f64], seed: u64) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let mut coeff: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = coeff.iter().map(|x| x * x).sum::<f64>().sqrt();
            coeff.iter_mut().for_each(|x| *x /= norm);
            let g = self.element(&coeff);
            for &t in times {
                let u = g.exponentiate(t);
                let r = match &self.target {
                    Stabilized::Pure(psi) => {
                        let out = u.apply(psi).expect("same spec");
                        (out.amplitudes() - psi.amplitudes()).norm()
                    }
                    Stabilized::Mixed(rho) => {
                        let out = u.conjugate(rho).expect("same spec");
                        linalg::max_abs(&(out.matrix() - rho.matrix()))
                    }
                };
                worst = worst.max(r);
            }
        }
        worst
    }
}

fn check_active(spec: &PartitionSpec, active: &[&str]) -> Result<Vec<usize>> {
    if active.is_empty() {
        return Err(Error::EmptyPartySet);
    }
    spec.indices(active)
}

/// Stabilizer algebra of a pure state restricted to the `active` parties.
pub fn pure_stabilizer_algebra(psi: &PureState, active: &[&str], tol: f64) -> Result<StabilizerAlgebra> {
    let active = check_active(psi.spec(), active)?;
    Ok(pure_algebra_indices(psi, &active, tol))
}

pub(crate) fn pure_algebra_indices(psi: &PureState, active: &[usize], tol: f64) -> StabilizerAlgebra {
    let spec = psi.spec();
    let layout = ParamLayout::new(spec, AlgebraKind::Pure);
    let v: Vec<Complex64> = psi.amplitudes().iter().copied().collect();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut param_index: Vec<usize> = Vec::new();
    for &k in active {
        let basis = HermitianBasis::new(spec.dim(k));
        for (a, b) in basis.elements().iter().enumerate() {
            columns.push(realify(&apply_on_party(spec, k, b, &v)));
            param_index.push(layout.party_range(k).start + a);
        }
    }
    let minus_psi: Vec<Complex64> = v.iter().map(|z| -z).collect();
    columns.push(realify(&minus_psi));
    param_index.push(layout.len() - 1);
    solve(
        Stabilized::Pure(psi.clone()),
        active.to_vec(),
        AlgebraKind::Pure,
        tol,
        &layout,
        &columns,
        &param_index,
    )
}

/// Stabilizer algebra of a density matrix (conjugation condition) on the `active` parties.
pub fn mixed_stabilizer_algebra(
    rho: &DensityMatrix,
    active: &[&str],
    tol: f64,
) -> Result<StabilizerAlgebra> {
    let active = check_active(rho.spec(), active)?;
    Ok(mixed_algebra_indices(rho, &active, tol))
}

pub(crate) fn mixed_algebra_indices(rho: &DensityMatrix, active: &[usize], tol: f64) -> StabilizerAlgebra {
    let spec = rho.spec();
    let layout = ParamLayout::new(spec, AlgebraKind::Mixed);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut param_index: Vec<usize> = Vec::new();
    for &k in active {
        let basis = HermitianBasis::new(spec.dim(k));
        for (a, b) in basis.elements().iter().enumerate() {
            let er = apply_on_party_columns(spec, k, b, rho.matrix());
            let comm = &er - er.adjoint();
            columns.push(realify(comm.as_slice()));
            param_index.push(layout.party_range(k).start + a);
        }
    }
    solve(
        Stabilized::Mixed(rho.clone()),
        active.to_vec(),
        AlgebraKind::Mixed,
        tol,
        &layout,
        &columns,
        &param_index,
    )
}

fn solve(
    target: Stabilized,
    active: Vec<usize>,
    kind: AlgebraKind,
    tol: f64,
    layout: &ParamLayout,
    columns: &[Vec<f64>],
    param_index: &[usize],
) -> StabilizerAlgebra {
    let rows = columns.first().map_or(0, Vec::len);
    let system = RMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let (null, decision) = null_space(&system, tol);
    let mut coords = RMatrix::zeros(layout.len(), null.ncols());
    for (local, &global) in param_index.iter().enumerate() {
        for j in 0..null.ncols() {
            coords[(global, j)] = null[(local, j)];
        }
    }
    StabilizerAlgebra::from_coords(target, active, kind, tol, decision, coords)
}

/// Orthonormal basis of the sum of the spans of compatible algebras.
pub fn subspace_span(algebras: &[&StabilizerAlgebra]) -> Result<StabilizerAlgebra> {
    let first = algebras
        .first()
        .ok_or_else(|| Error::IncompatibleAlgebras("empty list".into()))?;
    for a in &algebras[1..] {
        if a.spec != first.spec || a.kind != first.kind {
            return Err(Error::IncompatibleAlgebras(
                "algebras must share partition and kind".into(),
            ));
        }
    }
    let n = first.coords.nrows();
    let total: usize = algebras.iter().map(|a| a.dim()).sum();
    let mut stacked = RMatrix::zeros(n, total);
    let mut col = 0;
    let mut active: Vec<usize> = Vec::new();
    for a in algebras {
        for j in 0..a.dim() {
            stacked.set_column(col, &a.coords.column(j));
            col += 1;
        }
        active.extend_from_slice(&a.active);
    }
    active.sort_unstable();
    active.dedup();
    let (basis, decision) = column_space(&stacked, first.tol);
    Ok(StabilizerAlgebra::from_coords(
        first.target.clone(),
        active,
        first.kind,
        first.tol,
        decision,
        basis,
    ))
}

/// `dim U + dim V - rank [U V]`.
pub fn intersection_dim(a: &StabilizerAlgebra, b: &StabilizerAlgebra) -> Result<usize> {
    let span = subspace_span(&[a, b])?;
    Ok(a.dim() + b.dim() - span.dim())
}

/// A real subspace of one party's Hermitian matrices.
#[derive(Debug, Clone)]
pub struct ProjectedSubspace {
    pub party: String,
    pub party_dim: usize,
    /// Orthonormal (Hilbert-Schmidt) Hermitian basis.
    pub basis: Vec<CMatrix>,
    /// Basis coordinates in the party's [`HermitianBasis`], as columns.
    pub coords: RMatrix,
    pub decision: RankDecision,
}

impl ProjectedSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn from_coords(party: &str, d: usize, coords: RMatrix, decision: RankDecision) -> Self {
        let hb = HermitianBasis::new(d);
        let basis = coords.column_iter().map(|c| hb.compose(c.as_slice())).collect();
        ProjectedSubspace {
            party: party.to_string(),
            party_dim: d,
            basis,
            coords,
            decision,
        }
    }

    /// Euclidean distance of a Hermitian matrix from the subspace.
    pub fn membership_residual(&self, h: &CMatrix) -> f64 {
        let x = DVector::from_vec(HermitianBasis::new(self.party_dim).coords(h));
        let proj = &self.coords * (self.coords.transpose() * &x);
        (x - proj).norm()
    }
}

/// `pi_party` of an algebra: span of that party's components.
pub fn project_party(alg: &StabilizerAlgebra, party: &str) -> Result<ProjectedSubspace> {
    let k = alg.spec.index_of(party)?;
    let range = alg.layout().party_range(k);
    let block = alg.coords.rows(range.start, range.len()).into_owned();
    let (coords, decision) = column_space(&block, alg.tol);
    Ok(ProjectedSubspace::from_coords(party, alg.spec.dim(k), coords, decision))
}

/// Elements of `pi_party(alg)` commuting with all of `pi_party(alg)`.
pub fn centralizer_in_projection(alg: &StabilizerAlgebra, party: &str) -> Result<ProjectedSubspace> {
    let proj = project_party(alg, party)?;
    Ok(centralizer_of(&proj, alg.tol))
}

pub(crate) fn centralizer_of(proj: &ProjectedSubspace, tol: f64) -> ProjectedSubspace {
    let k = proj.dim();
    let d = proj.party_dim;
    if k == 0 {
        return proj.clone();
    }
    let rows = 2 * d * d * k;
    let mut system = RMatrix::zeros(rows, k);
    for i in 0..k {
        let mut col = Vec::with_capacity(rows);
        for j in 0..k {
            let comm = &proj.basis[i] * &proj.basis[j] - &proj.basis[j] * &proj.basis[i];
            col.extend(realify(comm.as_slice()));
        }
        system.set_column(i, &DVector::from_vec(col));
    }
    let (null, decision) = null_space(&system, tol);
    let coords = &proj.coords * null;
    ProjectedSubspace::from_coords(&proj.party, d, coords, decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVector, ONE, ZERO};

    fn ket00() -> PureState {
        PureState::basis(PartitionSpec::qubits(&["A", "B"]).unwrap(), &[0, 0]).unwrap()
    }

    fn ghz(a: f64, b: f64) -> PureState {
        let mut v = CVector::zeros(8);
        v[0] = c(a, 0.0);
        v[7] = c(b, 0.0);
        PureState::new(PartitionSpec::qubits(&["A", "B", "C"]).unwrap(), v).unwrap()
    }

    /// Brute-force oracle: assemble the full operator for every parameter
    /// direction and count the null space via a pivoted Gram-Schmidt rank of
    /// the image vectors (no SVD).
    fn brute_force_pure_dim(psi: &PureState, active: &[usize]) -> usize {
        let spec = psi.spec();
        let mut images: Vec<Vec<f64>> = Vec::new();
        for &k in active {
            let d = spec.dim(k);
            for i in 0..d {
                for j in 0..d {
                    // real symmetric and imaginary antisymmetric unit directions
                    for imag in [false, true] {
                        if imag && i >= j {
                            continue;
                        }
                        if !imag && i > j {
                            continue;
                        }
                        let mut h = CMatrix::zeros(d, d);
                        if imag {
                            h[(i, j)] = c(0.0, 1.0);
                            h[(j, i)] = c(0.0, -1.0);
                        } else {
                            h[(i, j)] = ONE;
                            h[(j, i)] = ONE;
                        }
                        let op = crate::tensor::kron_embed(spec, spec.label(k), &h).unwrap();
                        let out = op * psi.amplitudes();
                        images.push(realify(out.as_slice()));
                    }
                }
            }
        }
        images.push(realify(psi.amplitudes().map(|z| -z).as_slice()));
        let params = images.len();
        params - gram_schmidt_rank(images)
    }

    fn gram_schmidt_rank(mut vs: Vec<Vec<f64>>) -> usize {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        loop {
            let mut best: Option<(usize, f64)> = None;
            for (i, v) in vs.iter().enumerate() {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if best.map_or(true, |b| n > b.1) {
                    best = Some((i, n));
                }
            }
            match best {
                Some((i, n)) if n > 1e-9 => {
                    let q: Vec<f64> = vs.remove(i).iter().map(|x| x / n).collect();
                    for v in vs.iter_mut() {
                        let d: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
                        for (x, y) in v.iter_mut().zip(&q) {
                            *x -= d * y;
                        }
                    }
                    basis.push(q);
                }
                _ => return basis.len(),
            }
        }
    }

    #[test]
    fn product_state_dims_match_oracle() {
        let psi = ket00();
        let alg = pure_stabilizer_algebra(&psi, &["A", "B"], DEFAULT_TOL).unwrap();
        // H_A, H_B diagonal (2 + 2), theta fixed by the |00> eigenvalue.
        assert_eq!(brute_force_pure_dim(&psi, &[0, 1]), 4);
        assert_eq!(alg.dim(), 4);
        assert!(alg.gap() > 1e3);
    }

    #[test]
    fn ghz_dims_match_oracle() {
        let psi = ghz(0.6, 0.8);
        for (mask, expect) in [(vec!["A", "B", "C"], 5), (vec!["A", "B"], 3), (vec!["A"], 1)] {
            let alg = pure_stabilizer_algebra(&psi, &mask, DEFAULT_TOL).unwrap();
            let idx = psi.spec().indices(&mask).unwrap();
            assert_eq!(brute_force_pure_dim(&psi, &idx), expect);
            assert_eq!(alg.dim(), expect, "mask {mask:?}");
        }
    }

    #[test]
    fn one_dimensional_party_has_only_phase() {
        let spec = PartitionSpec::new([("A", 1), ("B", 2)]).unwrap();
        let psi = PureState::basis(spec, &[0, 1]).unwrap();
        let alg = pure_stabilizer_algebra(&psi, &["A"], DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 1);
    }

    #[test]
    fn empty_active_rejected() {
        assert!(matches!(
            pure_stabilizer_algebra(&ket00(), &[], DEFAULT_TOL),
            Err(Error::EmptyPartySet)
        ));
    }

    #[test]
    fn basis_is_orthonormal_and_stabilizes() {
        let psi = ghz(0.6, 0.8);
        let alg = pure_stabilizer_algebra(&psi, &["A", "B", "C"], DEFAULT_TOL).unwrap();
        let gram = alg.coords().transpose() * alg.coords();
        assert!((gram - RMatrix::identity(alg.dim(), alg.dim())).abs().max() < 1e-10);
        assert!(alg.residual() < 10.0 * DEFAULT_TOL);
        assert!(alg.bracket_closure_residual(20, 0) < 1e-8);
        assert!(alg.exponentiation_residual(5, &[0.1, 1.0], 1) < 1e-8);
    }

    #[test]
    fn maximally_mixed_has_full_local_algebra() {
        let rho = DensityMatrix::maximally_mixed(PartitionSpec::qubits(&["A", "B"]).unwrap());
        let alg = mixed_stabilizer_algebra(&rho, &["A", "B"], DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 8);
    }

    #[test]
    fn ghz_reduced_mixed_algebra_is_diagonal() {
        let rho = crate::tensor::partial_trace(&ghz(0.5_f64.sqrt(), 0.5_f64.sqrt()), &["A", "B"]).unwrap();
        let alg = mixed_stabilizer_algebra(&rho, &["A", "B"], DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 4);
        for g in alg.basis() {
            for h in g.hs() {
                assert!(h[(0, 1)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn span_identities() {
        let psi = ket00();
        let sa = pure_stabilizer_algebra(&psi, &["A"], DEFAULT_TOL).unwrap();
        let sb = pure_stabilizer_algebra(&psi, &["B"], DEFAULT_TOL).unwrap();
        let span = subspace_span(&[&sa, &sb]).unwrap();
        let inter = intersection_dim(&sa, &sb).unwrap();
        assert_eq!(span.dim(), sa.dim() + sb.dim() - inter);
        let again = subspace_span(&[&span]).unwrap();
        assert_eq!(again.dim(), span.dim());
        assert_eq!(intersection_dim(&span, &again).unwrap(), span.dim());
    }

    #[test]
    fn span_rejects_mixed_kinds() {
        let psi = ket00();
        let sa = pure_stabilizer_algebra(&psi, &["A"], DEFAULT_TOL).unwrap();
        let ma = mixed_stabilizer_algebra(&psi.to_density(), &["A"], DEFAULT_TOL).unwrap();
        assert!(subspace_span(&[&sa, &ma]).is_err());
    }

    #[test]
    fn projection_of_product_one_party_algebra() {
        let sa = pure_stabilizer_algebra(&ket00(), &["A"], DEFAULT_TOL).unwrap();
        let pa = project_party(&sa, "A").unwrap();
        assert_eq!(pa.dim(), 2);
        // direct construction: diagonal Hermitian matrices
        for b in &pa.basis {
            assert!(b[(0, 1)].norm() < 1e-12);
        }
        assert_eq!(project_party(&sa, "B").unwrap().dim(), 0);
        assert!(project_party(&sa, "Q").is_err());
        let z = centralizer_in_projection(&sa, "A").unwrap();
        assert_eq!(z.dim(), 2);
    }

    /// Commutant oracle: solve X B_j = B_j X over the full Hermitian space
    /// and intersect with the projection by rank counting.
    fn commutant_dim_within(proj: &ProjectedSubspace) -> usize {
        let d = proj.party_dim;
        let hb = HermitianBasis::new(d);
        // Coordinates of candidates X = sum_i c_i P_i; test each basis vector of
        // the full space individually is not enough, so count via Gram-Schmidt
        // on the commutator images of the projection basis.
        let mut images = Vec::new();
        for p in &proj.basis {
            let mut img = Vec::new();
            for q in &proj.basis {
                let comm = p * q - q * p;
                img.extend(realify(comm.as_slice()));
            }
            images.push(img);
        }
        let _ = hb;
        proj.dim() - gram_schmidt_rank(images)
    }

    #[test]
    fn centralizer_of_full_u2_is_identity_line() {
        let rho = DensityMatrix::maximally_mixed(PartitionSpec::qubits(&["A", "B"]).unwrap());
        let alg = mixed_stabilizer_algebra(&rho, &["A", "B"], DEFAULT_TOL).unwrap();
        let pa = project_party(&alg, "A").unwrap();
        assert_eq!(pa.dim(), 4);
        let z = centralizer_in_projection(&alg, "A").unwrap();
        assert_eq!(commutant_dim_within(&pa), 1);
        assert_eq!(z.dim(), 1);
        let id = CMatrix::identity(2, 2);
        assert!(z.membership_residual(&id.unscale(2f64.sqrt())) < 1e-10);
    }

    #[test]
    fn bracket_is_hermitian_and_theta_free() {
        let spec = PartitionSpec::qubits(&["A"]).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let g1 = LocalGenerator::new(spec.clone(), vec![x], 1.0).unwrap();
        let g2 = LocalGenerator::new(spec, vec![z], 2.0).unwrap();
        let b = g1.bracket(&g2);
        assert_eq!(b.theta(), 0.0);
        // i[X, Z] = i(-2iY) = 2Y
        let y2 = CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -2.0), c(0.0, 2.0), ZERO]);
        assert!(linalg::max_abs(&(b.hs()[0].clone() - y2)) < 1e-12);
        assert_eq!(b.support(), vec![0]);
    }
}
