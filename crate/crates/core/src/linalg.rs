//! Dense linear-algebra helpers shared by the state and solver modules.
//!
//! Everything here works on small dense matrices (`nalgebra::DMatrix`). Rank
//! decisions go through [`RankDecision`] so callers can report the singular
//! value gap that justified a dimension count.
//!
//! The SVD and the Hermitian eigensolver are Jacobi methods written here
//! rather than nalgebra's bidiagonalization-based routines, whose tall-matrix
//! SVD was observed to return singular values off in the sixth digit for
//! rank-deficient inputs with repeated singular values. Jacobi rotations give
//! high relative accuracy and the matrices involved are at most a few hundred
//! rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Outcome of a numerical rank decision on a singular value spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankDecision {
    pub rank: usize,
    /// Number of singular values examined (the smaller matrix dimension after padding).
    pub size: usize,
    pub sigma_max: f64,
    pub cutoff: f64,
    /// `sigma_r / sigma_{r+1}` at the cutoff; infinite when there is no
    /// retained/dropped pair or the first dropped value is exactly zero.
    pub gap: f64,
}

impl RankDecision {
    fn from_sorted(sigma: &[f64], tol: f64) -> Self {
        let sigma_max = sigma.first().copied().unwrap_or(0.0);
        let cutoff = tol * sigma_max;
        let rank = if sigma_max == 0.0 {
            0
        } else {
            sigma.iter().take_while(|&&s| s > cutoff).count()
        };
        let gap = if rank == 0 || rank == sigma.len() || sigma[rank] == 0.0 {
            f64::INFINITY
        } else {
            sigma[rank - 1] / sigma[rank]
        };
        RankDecision {
            rank,
            size: sigma.len(),
            sigma_max,
            cutoff,
            gap,
        }
    }
}

/// `a = u diag(sigma) v^dag` with `sigma` descending, `u` thin (`m x n`,
/// zero columns where `sigma` is exactly zero) and `v` square.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

const MAX_SWEEPS: usize = 100;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &CMatrix) -> Svd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    // columns below this squared norm are numerical zeros and left alone
    let zero_col = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                if alpha <= zero_col || beta <= zero_col {
                    continue;
                }
                let gamma = w.column(i).dotc(&w.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut w, i, j, cs, sn, e);
                rotate_columns(&mut v, i, j, cs, sn, e);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            u.set_column(dst, &w.column(src).unscale(s));
        }
        vs.set_column(dst, &v.column(src));
    }
    Svd { u, sigma, v: vs }
}

/// Columns `(x_i, x_j) <- (c x_i - s conj(e) x_j, s x_i + c conj(e) x_j)`.
fn rotate_columns(x: &mut CMatrix, i: usize, j: usize, cs: f64, sn: f64, e: Complex64) {
    let ec = e.conj();
    for r in 0..x.nrows() {
        let xi = x[(r, i)];
        let xj = x[(r, j)] * ec;
        x[(r, i)] = xi * cs - xj * sn;
        x[(r, j)] = xi * sn + xj * cs;
    }
}

fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

fn to_real(a: &CMatrix) -> RMatrix {
    a.map(|z| z.re)
}

/// Extend the first `k` orthonormal columns of a square matrix to a unitary,
/// filling the rest by Gram-Schmidt on the standard basis.
fn complete_unitary(u: &mut CMatrix, k: usize) {
    let n = u.nrows();
    for j in 0..k {
        let mut col = u.column(j).into_owned();
        for q in 0..j {
            let ov = u.column(q).dotc(&col);
            col -= u.column(q) * ov;
        }
        let norm = col.norm();
        u.set_column(j, &col.unscale(norm));
    }
    let mut filled = k;
    for e in 0..n {
        if filled == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[e] = ONE;
        for _ in 0..2 {
            for q in 0..filled {
                let ov = u.column(q).dotc(&v);
                v -= u.column(q) * ov;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            u.set_column(filled, &v.unscale(norm));
            filled += 1;
        }
    }
}

/// Orthonormal basis (as columns) of the null space of `a`, cutting singular
/// values at `tol * sigma_max`.
pub fn null_space(a: &RMatrix, tol: f64) -> (RMatrix, RankDecision) {
    let (m, n) = a.shape();
    if n == 0 {
        return (
            RMatrix::zeros(0, 0),
            RankDecision {
                rank: 0,
                size: 0,
                sigma_max: 0.0,
                cutoff: 0.0,
                gap: f64::INFINITY,
            },
        );
    }
    let _ = m;
    let dec = svd(&to_complex(a));
    let decision = RankDecision::from_sorted(&dec.sigma, tol);
    let v = to_real(&dec.v);
    let mut basis = v.columns(decision.rank, n - decision.rank).into_owned();
    canonical_signs(&mut basis);
    (basis, decision)
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn column_space(a: &RMatrix, tol: f64) -> (RMatrix, RankDecision) {
    let (m, n) = a.shape();
    if n == 0 || m == 0 {
        return (
            RMatrix::zeros(m, 0),
            RankDecision {
                rank: 0,
                size: 0,
                sigma_max: 0.0,
                cutoff: 0.0,
                gap: f64::INFINITY,
            },
        );
    }
    let dec = svd(&to_complex(a));
    let decision = RankDecision::from_sorted(&dec.sigma, tol);
    let mut basis = to_real(&dec.u).columns(0, decision.rank).into_owned();
    canonical_signs(&mut basis);
    (basis, decision)
}

/// Flip column signs so the first entry of significant magnitude is positive.
fn canonical_signs(basis: &mut RMatrix) {
    for mut col in basis.column_iter_mut() {
        if let Some(&x) = col.iter().find(|x| x.abs() > 1e-12) {
            if x < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

/// Hermitian eigendecomposition with deterministic eigenvector gauge.
///
/// Eigenvalues are sorted descending. Inside each cluster of (numerically)
/// degenerate eigenvalues the basis is rebuilt by pivoted Gram-Schmidt on the
/// cluster projector applied to the standard basis, so the result depends only
/// on the eigenspace. Each vector is then phased so its first significant
/// component is real and positive.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let (raw_values, raw_vectors) = jacobi_eigen(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[b].total_cmp(&raw_values[a]));
    let values: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }

    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let cluster_tol = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let rebuilt = canonical_subspace_basis(&block);
            vectors.columns_mut(start, end - start).copy_from(&rebuilt);
        }
        start = end;
    }
    for mut col in vectors.column_iter_mut() {
        if let Some(&z) = col.iter().find(|z| z.norm() > 1e-12) {
            let phase = z.conj() / z.norm();
            for x in col.iter_mut() {
                *x *= phase;
            }
        }
    }
    HermitianEigen { values, vectors }
}

/// Cyclic complex Jacobi eigenvalue iteration on a Hermitian matrix.
fn jacobi_eigen(mut a: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm();
    let skip = f64::EPSILON * 1e-2 * scale;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 || g <= skip {
                    continue;
                }
                rotated = true;
                let e = apq / g;
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut a, p, q, cs, sn, e);
                // rows: conjugate transpose of the column operation
                for col in 0..n {
                    let xp = a[(p, col)];
                    let xq = a[(q, col)] * e;
                    a[(p, col)] = xp * cs - xq * sn;
                    a[(q, col)] = xp * sn + xq * cs;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                rotate_columns(&mut v, p, q, cs, sn, e);
            }
        }
        if !rotated {
            break;
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Basis-independent orthonormal basis of the span of the (orthonormal) columns.
fn canonical_subspace_basis(block: &CMatrix) -> CMatrix {
    let (n, k) = block.shape();
    let proj = block * block.adjoint();
    let mut out: Vec<CVector> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, CVector, f64)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let mut v: CVector = proj.column(j).into_owned();
            for q in &out {
                let overlap = q.dotc(&v);
                v -= q * overlap;
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|b| norm > b.2 + 1e-12) {
                best = Some((j, v, norm));
            }
        }
        let (j, v, norm) = best.expect("subspace rank");
        used[j] = true;
        out.push(v.unscale(norm));
    }
    CMatrix::from_columns(&out)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `exp(i t h)` for Hermitian `h`.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = hermitian_eigen(h);
    let n = h.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        diag[(k, k)] = Complex64::from_polar(1.0, t * lambda);
    }
    &eig.vectors * diag * eig.vectors.adjoint()
}

/// Unitary `w` minimizing `|a w - b|_F` (orthogonal Procrustes).
///
/// When `a a^dag = b b^dag` the minimum is zero and `a w = b` exactly.
pub fn procrustes(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let m = a.adjoint() * b;
    let dec = svd(&m);
    let mut u = dec.u;
    let top = dec.sigma.first().copied().unwrap_or(0.0);
    let k = dec.sigma.iter().filter(|&&s| s > 1e-13 * top).count();
    complete_unitary(&mut u, k);
    u * dec.v.adjoint()
}

/// Realify a complex vector as `[Re; Im]`.
pub fn realify(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn eigen_reconstructs_and_sorts() {
        let h = herm(5, 3);
        let e = hermitian_eigen(&h);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(5, e.values.iter().map(|&x| c(x, 0.0))));
        let back = &e.vectors * d * e.vectors.adjoint();
        assert!(max_abs(&(back - h)) < 1e-12);
        assert!(unitarity_residual(&e.vectors) < 1e-12);
    }

    #[test]
    fn degenerate_eigenspace_is_gauge_fixed() {
        // Same projector written in two different bases yields identical eigenvectors.
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ZERO]));
        let e1 = hermitian_eigen(&h);
        let s = 0.5_f64.sqrt();
        let rot = CMatrix::from_row_slice(
            3,
            3,
            &[c(s, 0.0), c(0.0, s), ZERO, c(0.0, s), c(s, 0.0), ZERO, ZERO, ZERO, ONE],
        );
        let e2 = hermitian_eigen(&(&rot * &h * rot.adjoint()));
        assert!(max_abs(&(e1.vectors - e2.vectors)) < 1e-12);
    }

    #[test]
    fn svd_of_rank_deficient_tall_matrix() {
        // Column pairs repeated: singular values sqrt2 * (those of the half).
        let half = RMatrix::from_row_slice(4, 3, &[0.0, 0.7405, 0.2272, 0.5774, 0.2395, -0.7806, -0.4714, -0.1491, -0.3944, -0.4714, 0.5915, -0.1672]);
        let mut a = RMatrix::zeros(13, 6);
        for j in 0..3 {
            for i in 0..4 {
                a[(i * 3, j)] = half[(i, j)];
                a[(i * 3, j + 3)] = half[(i, j)];
            }
        }
        let d = svd(&to_complex(&a));
        let back = &d.u * CMatrix::from_diagonal(&CVector::from_iterator(6, d.sigma.iter().map(|&x| c(x, 0.0)))) * d.v.adjoint();
        assert!(max_abs(&(back - to_complex(&a))) < 1e-14);
        assert!(unitarity_residual(&d.v) < 1e-14);
        assert_eq!(column_space(&a, 1e-9).1.rank, 3);
        let h = svd(&to_complex(&half));
        for k in 0..3 {
            assert!((d.sigma[k] - 2f64.sqrt() * h.sigma[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_of_complex_matrices() {
        for seed in 0..5 {
            let a = herm(5, seed) * expm_i_hermitian(&herm(5, seed + 100), 0.3);
            let a = a.columns(0, 3).into_owned();
            let d = svd(&a);
            let back = &d.u * CMatrix::from_diagonal(&CVector::from_iterator(3, d.sigma.iter().map(|&x| c(x, 0.0)))) * d.v.adjoint();
            assert!(max_abs(&(back - &a)) < 1e-13);
            assert!(d.sigma.windows(2).all(|w| w[0] >= w[1]));
            let wide = a.adjoint();
            let dw = svd(&wide);
            assert!(dw.sigma.iter().zip(&d.sigma).all(|(x, y)| (x - y).abs() < 1e-13));
        }
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = RMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let (n, d) = null_space(&a, 1e-9);
        assert_eq!(n.ncols(), 2);
        assert_eq!(d.rank, 1);
        assert!((&a * &n).norm() < 1e-14);
    }

    #[test]
    fn rank_gap_reported() {
        let a = RMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1e-13]));
        let (_, d) = column_space(&a, 1e-9);
        assert_eq!(d.rank, 2);
        assert!(d.gap > 1e12);
        let (_, full) = column_space(&RMatrix::identity(3, 3), 1e-9);
        assert!(full.gap.is_infinite());
    }

    #[test]
    fn procrustes_aligns_purifications() {
        let a = herm(4, 9);
        let w0 = expm_i_hermitian(&herm(4, 10), 1.0);
        let b = &a * &w0;
        let w = procrustes(&a, &b);
        assert!(max_abs(&(&a * w - b)) < 1e-12);
        // rank-deficient: only the first two columns carry weight
        let mut thin = a.clone();
        thin.columns_mut(2, 2).fill(ZERO);
        let w2 = procrustes(&thin, &(&thin * &w0));
        assert!(unitarity_residual(&w2) < 1e-12);
        assert!(max_abs(&(&thin * w2 - &thin * &w0)) < 1e-12);
    }

    #[test]
    fn expm_is_unitary() {
        let u = expm_i_hermitian(&herm(3, 1), 0.7);
        assert!(unitarity_residual(&u) < 1e-13);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(angle_distance(PI - 1e-9, -PI + 1e-9) < 1e-8);
    }
}
