//! Stabilizer lifting and the auxiliary-unitary freedom of purifications.

use serde::Serialize;

use crate::analysis::discrete::verify_candidate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::tensor::{DensityMatrix, LocalUnitary, PureState};

/// Reduced states closer than this (max-abs) count as equal.
pub const REDUCED_TOL: f64 = 1e-8;
pub const LIFT_TOL: f64 = 1e-8;
pub const ALIGN_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct LiftedStabilizer {
    /// `s (x) u_aux` on the purification's partition.
    pub unitary: LocalUnitary,
    /// `|U psi - psi|`.
    pub residual: f64,
}

/// Extend a density-matrix stabilizer to a stabilizer of a purification.
///
/// `psi` must carry the parties of `rho` (same order) followed by one
/// auxiliary party. Writing `psi` as a system-by-auxiliary matrix `M`, both
/// `M` and `S M` purify `rho`, so an orthogonal Procrustes fit gives the
/// auxiliary factor exactly.
pub fn lift_stabilizer(rho: &DensityMatrix, s: &LocalUnitary, psi: &PureState) -> Result<LiftedStabilizer> {
    let n = rho.spec().len();
    s.spec().check_same(rho.spec(), "stabilizer vs density matrix")?;
    if psi.spec().len() != n + 1 || psi.spec().parties()[..n] != *rho.spec().parties() {
        return Err(Error::SpecMismatch(
            "purification must list the density-matrix parties followed by one auxiliary party".into(),
        ));
    }
    let cand = verify_candidate(rho, s)?;
    if !cand.verified {
        return Err(Error::NotAStabilizer {
            residual: cand.residual,
        });
    }
    let sys: Vec<usize> = (0..n).collect();
    let m = psi.split_matrix(&sys);
    let distance = linalg::max_abs(&(&m * m.adjoint() - rho.matrix()));
    if distance > REDUCED_TOL {
        return Err(Error::NotAPurification { distance });
    }
    let sm = s.to_matrix() * &m;
    let w = linalg::procrustes(&sm, &m);
    let mut factors = s.factors().to_vec();
    factors.push(w.transpose());
    let unitary = LocalUnitary::new(psi.spec().clone(), factors, s.global_phase())?;
    let residual = (unitary.apply(psi)?.amplitudes() - psi.amplitudes()).norm();
    if residual > LIFT_TOL {
        return Err(Error::Numerical(format!("lifted stabilizer residual {residual:e}")));
    }
    Ok(LiftedStabilizer { unitary, residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuxiliaryAlignment {
    /// Unitary on the zero-padded auxiliary space: `(1 (x) W) psi = psi2`.
    #[serde(skip)]
    pub w: CMatrix,
    /// Auxiliary dimensions of the two inputs before padding.
    pub aux_dims: (usize, usize),
    pub residual: f64,
    pub reduced_distance: f64,
}

/// Relate two purifications of the same reduced state on `shared` parties.
///
/// The non-shared parties of each state (in their original order) form its
/// auxiliary factor; the smaller one is zero-padded to the larger.
pub fn purification_equivalence(psi: &PureState, psi2: &PureState, shared: &[&str]) -> Result<AuxiliaryAlignment> {
    if shared.is_empty() {
        return Err(Error::EmptyPartySet);
    }
    let mut idx1 = Vec::with_capacity(shared.len());
    let mut idx2 = Vec::with_capacity(shared.len());
    for label in shared {
        let i = psi.spec().index_of(label)?;
        let j = psi2.spec().index_of(label)?;
        if psi.spec().dim(i) != psi2.spec().dim(j) {
            return Err(Error::DimensionMismatch {
                context: format!("shared party {label}"),
                expected: psi.spec().dim(i),
                found: psi2.spec().dim(j),
            });
        }
        idx1.push(i);
        idx2.push(j);
    }
    let m1 = psi.split_matrix(&idx1);
    let m2 = psi2.split_matrix(&idx2);
    let reduced_distance = linalg::max_abs(&(&m1 * m1.adjoint() - &m2 * m2.adjoint()));
    if reduced_distance > REDUCED_TOL {
        return Err(Error::ReducedStateMismatch {
            distance: reduced_distance,
        });
    }
    let (d1, d2) = (m1.ncols(), m2.ncols());
    let d = d1.max(d2);
    let pad = |m: &CMatrix| {
        let mut p = CMatrix::zeros(m.nrows(), d);
        p.columns_mut(0, m.ncols()).copy_from(m);
        p
    };
    let (p1, p2) = (pad(&m1), pad(&m2));
    let wt = linalg::procrustes(&p1, &p2);
    let residual = (&p1 * &wt - &p2).norm();
    if residual > ALIGN_TOL {
        return Err(Error::Numerical(format!("auxiliary alignment residual {residual:e}")));
    }
    Ok(AuxiliaryAlignment {
        w: wt.transpose(),
        aux_dims: (d1, d2),
        residual,
        reduced_distance,
    })
}
