//! Algebra-level checks of the structural results for three-party states:
//! isomorphic actions of a two-party entanglement algebra on its parties,
//! commutation of algebras sharing one party, and exclusion of two-party
//! actions from the full-mask quotient.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{null_space, RMatrix};
use crate::stabilizer::{project_party, pure_algebra_indices, subspace_span, StabilizerAlgebra};
use crate::tensor::{minimal_purification, PureState, StateRef};

pub const THEOREM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct IsomorphismCheck {
    /// Party playing the role of the purifier.
    pub traced: String,
    pub left: String,
    pub right: String,
    /// `dim pi_left(s_full) - dim pi_left(span(s_{left,traced}, s_{right,traced}))`.
    pub left_dim: usize,
    pub right_dim: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationCheck {
    pub shared: String,
    pub left: String,
    pub right: String,
    pub pairs: usize,
    /// Largest component of a bracket on a party other than `shared`.
    pub max_support_violation: f64,
    /// Largest distance of a bracket from the one-party algebra of `shared`.
    pub max_membership_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExclusionCheck {
    pub party: String,
    pub pair: String,
    /// Dimension of the full-mask subspace whose `party` component lies in
    /// the projection of the pair algebra.
    pub subspace_dim: usize,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremChecks {
    pub isomorphism: Vec<IsomorphismCheck>,
    pub commutation: Vec<CommutationCheck>,
    pub exclusion: Vec<ExclusionCheck>,
}

impl TheoremChecks {
    pub fn isomorphism_pass(&self) -> bool {
        self.isomorphism.iter().all(|c| c.pass)
    }

    pub fn commutation_pass(&self) -> bool {
        self.commutation.iter().all(|c| c.pass)
    }

    pub fn exclusion_pass(&self) -> bool {
        self.exclusion.iter().all(|c| c.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.isomorphism_pass() && self.commutation_pass() && self.exclusion_pass()
    }
}

fn others(a: usize) -> (usize, usize) {
    match a {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn pair(i: usize, j: usize) -> Vec<usize> {
    if i < j {
        vec![i, j]
    } else {
        vec![j, i]
    }
}

/// Run all three checks on a three-party pure state, or on the minimal
/// purification of a two-party density matrix.
pub fn theorem_checks<'a>(state: impl Into<StateRef<'a>>, tol: f64) -> Result<TheoremChecks> {
    let owned;
    let psi: &PureState = match state.into() {
        StateRef::Pure(p) => p,
        StateRef::Mixed(rho) => {
            if rho.spec().len() != 2 {
                return Err(Error::ScopeGuard(
                    "theorem checks take a two-party density matrix or a three-party pure state".into(),
                ));
            }
            owned = minimal_purification(rho);
            &owned
        }
    };
    let spec = psi.spec();
    if spec.len() != 3 {
        return Err(Error::ScopeGuard(
            "theorem checks take a two-party density matrix or a three-party pure state".into(),
        ));
    }
    let alg = |mask: Vec<usize>| pure_algebra_indices(psi, &mask, tol);
    let full = alg(vec![0, 1, 2]);
    let singles: Vec<StabilizerAlgebra> = (0..3).map(|k| alg(vec![k])).collect();
    let pairs: Vec<((usize, usize), StabilizerAlgebra)> = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .map(|(i, j)| ((i, j), alg(vec![i, j])))
        .collect();
    let pair_alg = |i: usize, j: usize| -> &StabilizerAlgebra {
        let key = (i.min(j), i.max(j));
        &pairs.iter().find(|(k, _)| *k == key).expect("all pairs computed").1
    };
    let label = |k: usize| spec.label(k).to_string();

    let mut isomorphism = Vec::new();
    for z in (0..3).rev() {
        let (x, y) = others(z);
        let n = subspace_span(&[pair_alg(x, z), pair_alg(y, z)])?;
        let quotient_dim = |k: usize| -> Result<usize> {
            let g = project_party(&full, spec.label(k))?.dim();
            let d = project_party(&n, spec.label(k))?.dim();
            Ok(g.saturating_sub(d))
        };
        let (left_dim, right_dim) = (quotient_dim(x)?, quotient_dim(y)?);
        isomorphism.push(IsomorphismCheck {
            traced: label(z),
            left: label(x),
            right: label(y),
            left_dim,
            right_dim,
            pass: left_dim == right_dim,
        });
    }

    let mut commutation = Vec::new();
    for a in 0..3 {
        let (b, c) = others(a);
        let (left, right) = (pair_alg(a, b), pair_alg(a, c));
        let mut support: f64 = 0.0;
        let mut membership: f64 = 0.0;
        let mut count = 0;
        for g in left.basis() {
            for h in right.basis() {
                let br = g.bracket(h);
                for k in [b, c] {
                    support = support.max(crate::linalg::max_abs(&br.hs()[k]));
                }
                membership = membership.max(singles[a].membership_residual(&br));
                count += 1;
            }
        }
        commutation.push(CommutationCheck {
            shared: label(a),
            left: label(a) + spec.label(b),
            right: label(a) + spec.label(c),
            pairs: count,
            max_support_violation: support,
            max_membership_residual: membership,
            pass: support < THEOREM_TOL && membership < THEOREM_TOL,
        });
    }

    let mut exclusion = Vec::new();
    let layout = full.layout();
    for a in 0..3 {
        let (b1, b2) = others(a);
        for (b, c) in [(b1, b2), (b2, b1)] {
            let sab = pair_alg(a, b);
            let proj = project_party(sab, spec.label(a))?;
            let range = layout.party_range(a);
            let q = full.coords();
            let r = q.rows(range.start, range.len()).into_owned();
            let w = &proj.coords;
            let outside: RMatrix = &r - w * (w.transpose() * &r);
            let (combo, _) = null_space(&outside, tol);
            let v = q * combo;
            let target = subspace_span(&[sab, pair_alg(b, c)])?;
            let t = target.coords();
            let max_residual = v
                .column_iter()
                .map(|col| {
                    let x: DVector<f64> = col.into_owned();
                    (&x - t * (t.transpose() * &x)).norm()
                })
                .fold(0.0, f64::max);
            exclusion.push(ExclusionCheck {
                party: label(a),
                pair: spec.label(pair(a, b)[0]).to_string() + spec.label(pair(a, b)[1]),
                subspace_dim: v.ncols(),
                max_residual,
                pass: max_residual < THEOREM_TOL,
            });
        }
    }

    Ok(TheoremChecks {
        isomorphism,
        commutation,
        exclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVector};
    use crate::stabilizer::DEFAULT_TOL;
    use crate::tensor::PartitionSpec;

    #[test]
    fn ghz_generic_passes() {
        let mut v = CVector::zeros(8);
        v[0] = c(0.6, 0.0);
        v[7] = c(0.8, 0.0);
        let psi = PureState::new(PartitionSpec::qubits(&["A", "B", "C"]).unwrap(), v).unwrap();
        let t = theorem_checks(&psi, DEFAULT_TOL).unwrap();
        assert!(t.all_pass(), "{t:?}");
        assert_eq!(t.isomorphism.len(), 3);
        assert_eq!(t.exclusion.len(), 6);
    }

    #[test]
    fn bell_on_bc_isomorphism_dims() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = CVector::zeros(8);
        v[0] = c(s, 0.0);
        v[3] = c(s, 0.0);
        let psi = PureState::new(PartitionSpec::qubits(&["A", "B", "C"]).unwrap(), v).unwrap();
        let t = theorem_checks(&psi, DEFAULT_TOL).unwrap();
        let bc = t.isomorphism.iter().find(|c| c.traced == "A").unwrap();
        assert_eq!((bc.left_dim, bc.right_dim), (3, 3));
        assert!(t.all_pass(), "{t:?}");
    }

    #[test]
    fn wrong_party_count_rejected() {
        let psi = PureState::basis(PartitionSpec::qubits(&["A", "B"]).unwrap(), &[0, 0]).unwrap();
        assert!(theorem_checks(&psi, DEFAULT_TOL).is_err());
        assert!(theorem_checks(&psi.to_density(), DEFAULT_TOL).unwrap().all_pass());
    }
}
