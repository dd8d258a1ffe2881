//! Named states and unitaries, plus seeded random fixtures.
//!
//! Random objects use `ChaCha8Rng::seed_from_u64(seed)`, so a seed fixes the
//! output on every platform.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, ONE, ZERO};
use crate::separable::{purify_ensemble, ControlledUnitary, Ensemble, EnsemblePurification, EnsembleTerm};
use crate::tensor::{partial_trace_indices, DensityMatrix, LocalUnitary, PartitionSpec, PureState};

/// Normalization slack accepted for user-supplied GHZ coefficients.
pub const GHZ_NORM_TOL: f64 = 1e-10;

pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

/// `(|0> + |1>)/sqrt2`
pub fn plus() -> CVector {
    CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)])
}

/// `(|0> - |1>)/sqrt2`
pub fn minus() -> CVector {
    CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)])
}

/// `(|0> + i|1>)/sqrt2`
pub fn cross() -> CVector {
    CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)])
}

/// `(|0> - i|1>)/sqrt2`
pub fn circle() -> CVector {
    CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)])
}

fn abc() -> PartitionSpec {
    PartitionSpec::qubits(&["A", "B", "C"]).expect("static labels")
}

fn ab() -> PartitionSpec {
    PartitionSpec::qubits(&["A", "B"]).expect("static labels")
}

/// `a|000> + b|111>` on qubits `A, B, C`.
pub fn ghz(a: Complex64, b: Complex64) -> Result<PureState> {
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("GHZ coefficients".into()));
    }
    if (norm * norm - 1.0).abs() > GHZ_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let mut v = CVector::zeros(8);
    v[0] = a;
    v[7] = b;
    PureState::normalized(abc(), v)
}

/// `(|00> + |11>)/sqrt2` on `A, B`.
pub fn bell() -> PureState {
    let mut v = CVector::zeros(4);
    v[0] = c(FRAC_1_SQRT_2, 0.0);
    v[3] = c(FRAC_1_SQRT_2, 0.0);
    PureState::new(ab(), v).expect("normalized")
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("Werner parameter p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// `p |Bell><Bell| + (1 - p)/4 * 1`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    check_p(p)?;
    let bell = bell().projector();
    let m = bell * c(p, 0.0) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0, 0.0);
    DensityMatrix::new(ab(), m)
}

/// Ten product lines for `p <= 1/3`: weight `p/2` on `|00>, |11>, |-->,
/// |++>, |o x>, |x o>` (lines 0-5) and `(1-3p)/4` on `|00>, |01>, |10>,
/// |11>` (lines 6-9). Lines are kept in this order even when weights vanish.
pub fn werner_ensemble(p: f64) -> Result<Ensemble> {
    check_p(p)?;
    if p > 1.0 / 3.0 {
        return Err(Error::OutOfRange(format!(
            "Werner state with p = {p} > 1/3 has no separable ensemble"
        )));
    }
    let (k0, k1) = (ket(2, 0), ket(2, 1));
    let hi = p / 2.0;
    let lo = (1.0 - 3.0 * p) / 4.0;
    let lines = [
        (hi, k0.clone(), k0.clone()),
        (hi, k1.clone(), k1.clone()),
        (hi, minus(), minus()),
        (hi, plus(), plus()),
        (hi, circle(), cross()),
        (hi, cross(), circle()),
        (lo, k0.clone(), k0.clone()),
        (lo, k0.clone(), k1.clone()),
        (lo, k1.clone(), k0.clone()),
        (lo, k1.clone(), k1.clone()),
    ];
    Ensemble::new(
        ab(),
        lines
            .into_iter()
            .map(|(w, a, b)| EnsembleTerm {
                weight: w.max(0.0),
                vectors: vec![a, b],
            })
            .collect(),
    )
}

pub fn werner_ensemble_purification(p: f64) -> Result<EnsemblePurification> {
    Ok(purify_ensemble(&werner_ensemble(p)?))
}

/// Four-dimensional purification valid for every `p` in `[0, 1]`:
/// `sqrt((1-p)/4) [ (|00> - |11>)/sqrt2 |0> + |01>|1> + |10>|2> ]
///  + sqrt((1+3p)/8) (|00> + |11>) |3>`.
pub fn werner_min_purification(p: f64) -> Result<PureState> {
    check_p(p)?;
    let spec = PartitionSpec::new([("A", 2), ("B", 2), ("C", 4)])?;
    let lo = ((1.0 - p) / 4.0).sqrt();
    let hi = ((1.0 + 3.0 * p) / 8.0).sqrt();
    let mut v = CVector::zeros(16);
    let mut set = |a: usize, b: usize, cc: usize, x: f64| v[spec.flat(&[a, b, cc])] += c(x, 0.0);
    set(0, 0, 0, lo * FRAC_1_SQRT_2);
    set(1, 1, 0, -lo * FRAC_1_SQRT_2);
    set(0, 1, 1, lo);
    set(1, 0, 2, lo);
    set(0, 0, 3, hi);
    set(1, 1, 3, hi);
    PureState::normalized(spec, v)
}

fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// The explicit block-diagonal `U_BC` for the ten-line Werner purification:
/// block `l` sends line `l`'s `B` vector to `|0>`.
pub fn werner_disentangler() -> ControlledUnitary {
    let (k0, k1) = (ket(2, 0), ket(2, 1));
    let id = CMatrix::identity(2, 2);
    let x = outer(&k0, &k1) + outer(&k1, &k0);
    let blocks = vec![
        id.clone(),
        x.clone(),
        outer(&k0, &minus()) + outer(&k1, &plus()),
        outer(&k0, &plus()) + outer(&k1, &minus()),
        outer(&k0, &cross()) + outer(&k1, &circle()),
        outer(&k0, &circle()) + outer(&k1, &cross()),
        id.clone(),
        x.clone(),
        id,
        x,
    ];
    let spec = PartitionSpec::new([("A", 2), ("B", 2), ("C", 10)]).expect("static labels");
    ControlledUnitary::new(spec, "C", "B", blocks).expect("blocks are unitary")
}

/// Expected image of the ten-line purification under the disentangler:
/// `|0>_B (x) [ sqrt(p/2) (|0,0> + |1,1> + |-,2> + |+,3> + |o,4> + |x,5>)
///  + sqrt((1-3p)/4) (|0,6> + |0,7> + |1,8> + |1,9>) ]_AC`.
pub fn werner_factorized(p: f64) -> Result<PureState> {
    check_p(p)?;
    if p > 1.0 / 3.0 {
        return Err(Error::OutOfRange(format!("p = {p} > 1/3")));
    }
    let spec = PartitionSpec::new([("A", 2), ("B", 2), ("C", 10)])?;
    let hi = (p / 2.0).sqrt();
    let lo = ((1.0 - 3.0 * p).max(0.0) / 4.0).sqrt();
    let a_vectors = [
        (hi, ket(2, 0)),
        (hi, ket(2, 1)),
        (hi, minus()),
        (hi, plus()),
        (hi, circle()),
        (hi, cross()),
        (lo, ket(2, 0)),
        (lo, ket(2, 0)),
        (lo, ket(2, 1)),
        (lo, ket(2, 1)),
    ];
    let mut v = CVector::zeros(40);
    for (line, (w, a)) in a_vectors.iter().enumerate() {
        for i in 0..2 {
            v[spec.flat(&[i, 0, line])] += a[i] * c(*w, 0.0);
        }
    }
    PureState::normalized(spec, v)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn random_vector(d: usize, rng: &mut impl Rng) -> CVector {
    loop {
        let v = CVector::from_fn(d, |_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v.unscale(n);
        }
    }
}

/// Haar-random unitary: Gram-Schmidt (the QR `Q` factor with positive `R`
/// diagonal) of a complex Gaussian matrix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    loop {
        let z = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
        let mut q = CMatrix::zeros(d, d);
        let mut ok = true;
        for j in 0..d {
            let mut v = z.column(j).into_owned();
            for _ in 0..2 {
                for k in 0..j {
                    let ov = q.column(k).dotc(&v);
                    v -= q.column(k) * ov;
                }
            }
            let n = v.norm();
            if n < 1e-8 {
                ok = false;
                break;
            }
            q.set_column(j, &v.unscale(n));
        }
        if ok {
            return q;
        }
    }
}

pub fn random_state(spec: &PartitionSpec, seed: u64) -> PureState {
    let mut r = rng(seed);
    PureState::normalized(spec.clone(), random_vector(spec.total_dim(), &mut r)).expect("nonzero vector")
}

pub fn random_local_unitary(spec: &PartitionSpec, seed: u64) -> LocalUnitary {
    let mut r = rng(seed);
    let factors = spec.parties().iter().map(|p| random_unitary(p.dim, &mut r)).collect();
    LocalUnitary::new(spec.clone(), factors, 0.0).expect("Haar factors are unitary")
}

/// Reduced state of a random pure state with an auxiliary factor of dimension `rank`.
pub fn random_density(spec: &PartitionSpec, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 {
        return Err(Error::OutOfRange("rank must be at least 1".into()));
    }
    let full = spec.with_party(spec.fresh_label(), rank)?;
    let psi = random_state(&full, seed);
    let keep: Vec<usize> = (0..spec.len()).collect();
    Ok(partial_trace_indices((&psi).into(), &keep))
}

/// Flat Dirichlet weights from normalized exponential draws.
fn dirichlet(l: usize, rng: &mut impl Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..l).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|x| x / total).collect()
}

/// Ensemble with Dirichlet(1, ..., 1) weights and independent Haar line vectors.
pub fn random_ensemble(spec: &PartitionSpec, l: usize, seed: u64) -> Result<Ensemble> {
    if l == 0 {
        return Err(Error::InvalidEnsemble("at least one line required".into()));
    }
    if spec.len() != 2 {
        return Err(Error::InvalidEnsemble("ensembles are defined on two parties".into()));
    }
    let mut r = rng(seed);
    let weights = dirichlet(l, &mut r);
    let terms = weights
        .into_iter()
        .map(|w| EnsembleTerm {
            weight: w,
            vectors: vec![random_vector(spec.dim(0), &mut r), random_vector(spec.dim(1), &mut r)],
        })
        .collect();
    Ensemble::new(spec.clone(), terms)
}

/// A random ensemble together with a two-party stabilizer `u_A (x) u_B` of its
/// purification that fixes every line up to phase.
///
/// Both factors are diagonal in Haar-random frames with `s` distinct
/// eigenphases `a_i` and `b_i = theta - a_i`; every line lies inside the
/// `i`-th eigenspaces of both factors for a randomly chosen `i`.
pub fn random_symmetric_ensemble(dims: (usize, usize), l: usize, seed: u64) -> Result<(Ensemble, LocalUnitary)> {
    let (da, db) = dims;
    let spec = PartitionSpec::new([("A", da), ("B", db)])?;
    if l == 0 {
        return Err(Error::InvalidEnsemble("at least one line required".into()));
    }
    let mut r = rng(seed);
    let s = r.random_range(1..=da.min(db));
    let assign = |d: usize, r: &mut ChaCha8Rng| -> Vec<usize> {
        (0..d).map(|j| if j < s { j } else { r.random_range(0..s) }).collect()
    };
    let cluster_a = assign(da, &mut r);
    let cluster_b = assign(db, &mut r);
    let theta: f64 = r.random_range(-PI..PI);
    let phases: Vec<f64> = loop {
        let cand: Vec<f64> = (0..s).map(|_| r.random_range(-PI..PI)).collect();
        let separated = cand.iter().enumerate().all(|(i, x)| {
            cand[..i].iter().all(|y| crate::linalg::angle_distance(*x, *y) > 1e-3)
        });
        if separated {
            break cand;
        }
    };
    let va = random_unitary(da, &mut r);
    let vb = random_unitary(db, &mut r);
    let factor = |v: &CMatrix, clusters: &[usize], ph: &dyn Fn(usize) -> f64| {
        let d = CVector::from_iterator(clusters.len(), clusters.iter().map(|&i| Complex64::from_polar(1.0, ph(i))));
        v * CMatrix::from_diagonal(&d) * v.adjoint()
    };
    let ua = factor(&va, &cluster_a, &|i| phases[i]);
    let ub = factor(&vb, &cluster_b, &|i| theta - phases[i]);
    let in_cluster = |v: &CMatrix, clusters: &[usize], i: usize, r: &mut ChaCha8Rng| {
        let coeffs = CVector::from_iterator(
            clusters.len(),
            clusters.iter().map(|&k| if k == i { gaussian(r) } else { ZERO }),
        );
        let x = v * coeffs;
        let n = x.norm();
        x.unscale(n)
    };
    let weights = dirichlet(l, &mut r);
    let mut terms = Vec::with_capacity(l);
    for w in weights {
        let i = r.random_range(0..s);
        terms.push(EnsembleTerm {
            weight: w,
            vectors: vec![in_cluster(&va, &cluster_a, i, &mut r), in_cluster(&vb, &cluster_b, i, &mut r)],
        });
    }
    let ens = Ensemble::new(spec.clone(), terms)?;
    let u = LocalUnitary::new(spec, vec![ua, ub], 0.0)?;
    Ok((ens, u))
}
