use std::collections::BTreeSet;

use entgroup::analysis::{analyze_pure, pauli_search, quotient_witness, verify_candidate, WitnessOutcome};
use entgroup::catalog;
use entgroup::linalg::{c, max_abs, CMatrix, CVector};
use entgroup::separable::{decompose_two_party_stabilizer, disentangle, purify_ensemble};
use entgroup::stabilizer::pure_stabilizer_algebra;
use entgroup::tensor::{kron_embed, minimal_purification, partial_trace, LocalUnitary, PartitionSpec, PureState};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig::with_cases(cases)
}

fn dims_2x2(seed: u64) -> PartitionSpec {
    let d = 2 + (seed % 2) as usize;
    PartitionSpec::new([("A", 2), ("B", d)]).unwrap()
}

/// Letterwise Pauli product, dropping the phase.
fn pauli_product(a: &str, b: &str) -> String {
    a.chars()
        .zip(b.chars())
        .map(|(x, y)| match (x, y) {
            ('I', z) | (z, 'I') => z,
            (x, y) if x == y => 'I',
            ('X', 'Y') | ('Y', 'X') => 'Z',
            ('Y', 'Z') | ('Z', 'Y') => 'X',
            _ => 'Y',
        })
        .collect()
}

fn pauli_eigenstate(letter: usize, sign: bool) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match (letter, sign) {
        (0, true) => (c(1.0, 0.0), c(0.0, 0.0)),
        (0, false) => (c(0.0, 0.0), c(1.0, 0.0)),
        (1, true) => (c(s, 0.0), c(s, 0.0)),
        (1, false) => (c(s, 0.0), c(-s, 0.0)),
        (_, true) => (c(s, 0.0), c(0.0, s)),
        (_, false) => (c(s, 0.0), c(0.0, -s)),
    };
    CVector::from_vec(vec![a, b])
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn partial_trace_undoes_minimal_purification(seed in 0u64..10_000, rank in 1usize..4) {
        let spec = dims_2x2(seed);
        let rho = catalog::random_density(&spec, rank, seed).unwrap();
        let psi = minimal_purification(&rho);
        let back = partial_trace(&psi, &spec.labels()).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn embedded_factors_on_distinct_parties_commute(seed in 0u64..10_000) {
        let spec = PartitionSpec::new([("A", 2), ("B", 3), ("C", 2)]).unwrap();
        let mut r = catalog::rng(seed);
        let m = catalog::random_unitary(2, &mut r);
        let n = catalog::random_unitary(3, &mut r);
        let a = kron_embed(&spec, "A", &m).unwrap();
        let b = kron_embed(&spec, "B", &n).unwrap();
        prop_assert!(max_abs(&(&a * &b - &b * &a)) < 1e-14);
    }

    #[test]
    fn conjugation_preserves_spectrum(seed in 0u64..10_000) {
        let spec = dims_2x2(seed);
        let rho = catalog::random_density(&spec, 3, seed).unwrap();
        let u = catalog::random_local_unitary(&spec, seed ^ 0xabc);
        let moved = u.conjugate(&rho).unwrap();
        for (x, y) in rho.eigenvalues().iter().zip(moved.eigenvalues()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_purification_reduces_to_ensemble_density(seed in 0u64..10_000, l in 1usize..7) {
        let e = catalog::random_ensemble(&dims_2x2(seed), l, seed).unwrap();
        let p = purify_ensemble(&e);
        let rho = partial_trace(p.state(), &["A", "B"]).unwrap();
        prop_assert!(max_abs(&(rho.matrix() - e.density().matrix())) < 1e-10);
    }

    #[test]
    fn disentangled_target_is_pure_chi(seed in 0u64..10_000, l in 1usize..7, target_b in any::<bool>()) {
        let spec = dims_2x2(seed);
        let e = catalog::random_ensemble(&spec, l, seed).unwrap();
        let target = if target_b { "B" } else { "A" };
        let d = spec.dim(spec.index_of(target).unwrap());
        let chi = catalog::random_vector(d, &mut catalog::rng(seed + 1));
        let out = disentangle(&e, target, Some(&chi)).unwrap();
        let reduced = partial_trace(&out.output, &[target]).unwrap();
        prop_assert!(max_abs(&(reduced.matrix() - &chi * chi.adjoint())) < 1e-9);
    }

    #[test]
    fn stabilizer_split_round_trips(seed in 0u64..10_000, l in 1usize..7) {
        let dims = (2 + (seed % 2) as usize, 2 + (seed / 2 % 2) as usize);
        let (e, s) = catalog::random_symmetric_ensemble(dims, l, seed).unwrap();
        let p = purify_ensemble(&e);
        let dec = decompose_two_party_stabilizer(&p, &s).unwrap();
        prop_assert!(verify_candidate(p.state(), &dec.s_ac).unwrap().residual < 1e-8);
        prop_assert!(verify_candidate(p.state(), &dec.s_bc).unwrap().residual < 1e-8);
        prop_assert!(dec.product_residual < 1e-8);
    }

    #[test]
    fn line_fixing_stabilizers_are_never_witnesses(seed in 0u64..10_000, l in 1usize..7, power in 1usize..4) {
        let (e, s) = catalog::random_symmetric_ensemble((2, 3), l, seed).unwrap();
        let p = purify_ensemble(&e);
        let mut prod = s.clone();
        for _ in 1..power {
            prod = prod.compose(&s).unwrap();
        }
        let cand = verify_candidate(p.state(), &{
            let mut f = prod.factors().to_vec();
            f.push(CMatrix::identity(l, l));
            LocalUnitary::new(p.state().spec().clone(), f, prod.global_phase()).unwrap()
        })
        .unwrap();
        prop_assert!(cand.verified);
        let w = quotient_witness(&p, &cand).unwrap();
        let nontrivial = matches!(w, WitnessOutcome::Nontrivial { .. });
        prop_assert!(!nontrivial);
    }

    #[test]
    fn pauli_search_output_is_closed_under_products(letters in proptest::collection::vec((0usize..3, any::<bool>()), 3), entangle in any::<bool>()) {
        let spec = PartitionSpec::qubits(&["A", "B", "C"]).unwrap();
        let vectors: Vec<CVector> = letters.iter().map(|&(l, s)| pauli_eigenstate(l, s)).collect();
        let mut psi = PureState::product(spec.clone(), &vectors).unwrap();
        if entangle {
            // CNOT from A to B keeps the state a stabilizer state
            let mut v = psi.amplitudes().clone();
            for flat in 0..8 {
                let d = spec.digits(flat);
                if d[0] == 1 && d[1] == 0 {
                    v.swap_rows(flat, spec.flat(&[1, 1, d[2]]));
                }
            }
            psi = PureState::new(spec, v).unwrap();
        }
        let found: BTreeSet<String> = pauli_search(&psi).unwrap().into_iter().filter_map(|f| f.label).collect();
        prop_assert_eq!(found.len(), 8);
        for a in &found {
            for b in &found {
                prop_assert!(found.contains(&pauli_product(a, b)), "{} * {} missing", a, b);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn algebra_dimension_grows_with_the_mask(seed in 0u64..10_000) {
        let spec = PartitionSpec::new([("A", 2), ("B", 2), ("C", 3)]).unwrap();
        let v = catalog::bell().amplitudes().kronecker(&catalog::random_vector(3, &mut catalog::rng(seed)));
        let psi = if seed % 2 == 0 { PureState::new(spec.clone(), v).unwrap() } else { catalog::random_state(&spec, seed) };
        let masks: [&[&str]; 4] = [&["A"], &["A", "B"], &["A", "B", "C"], &["A", "C"]];
        let dims: Vec<usize> = masks.iter().map(|m| pure_stabilizer_algebra(&psi, m, 1e-9).unwrap().dim()).collect();
        prop_assert!(dims[0] <= dims[1] && dims[1] <= dims[2]);
        prop_assert!(dims[0] <= dims[3] && dims[3] <= dims[2]);
        let full = pure_stabilizer_algebra(&psi, &["A", "B", "C"], 1e-9).unwrap();
        for g in full.basis() {
            prop_assert!(full.stabilization_residual(g) < 1e-8);
        }
        prop_assert!(full.bracket_closure_residual(20, seed) < 1e-8);
    }

    #[test]
    fn quotient_dims_are_bounded_and_frame_independent(seed in 0u64..10_000) {
        let spec = PartitionSpec::qubits(&["A", "B", "C"]).unwrap();
        let psi = catalog::random_state(&spec, seed);
        let r = analyze_pure(&psi, 1e-9).unwrap();
        for q in &r.quotients {
            prop_assert!(q.dim <= q.numerator_dim);
        }
        let moved = catalog::random_local_unitary(&spec, seed + 1).apply(&psi).unwrap();
        let r2 = analyze_pure(&moved, 1e-9).unwrap();
        let dims = |r: &entgroup::analysis::EntanglementReport| r.quotients.iter().map(|q| q.dim).collect::<Vec<_>>();
        prop_assert_eq!(dims(&r), dims(&r2));
    }

    #[test]
    fn disentangler_keeps_a_bc_groups_and_frees_b(seed in 0u64..10_000, l in 2usize..5) {
        let e = catalog::random_ensemble(&PartitionSpec::qubits(&["A", "B"]).unwrap(), l, seed).unwrap();
        let p = purify_ensemble(&e);
        let d = disentangle(&e, "B", None).unwrap();
        let before = analyze_pure(p.state(), 1e-9).unwrap();
        let after = analyze_pure(&d.output, 1e-9).unwrap();
        prop_assert_eq!(before.quotient_dim("A(BC)"), after.quotient_dim("A(BC)"));
        let rest = analyze_pure(&d.rest, 1e-9).unwrap();
        prop_assert_eq!(after.quotient_dim("A(BC)"), rest.quotient_dim("AC"));
    }

    #[test]
    fn ghz_has_xxx_exactly_on_the_symmetric_ray(angle in 0.05f64..1.5) {
        let (a, b) = (angle.cos(), angle.sin());
        let psi = catalog::ghz(c(a, 0.0), c(b, 0.0)).unwrap();
        let found = pauli_search(&psi).unwrap();
        let has_xxx = found.iter().any(|f| f.label.as_deref() == Some("XXX"));
        prop_assert_eq!(has_xxx, (a - b).abs() < 1e-12);
    }
}

#[test]
fn ghz_symmetric_ray_has_xxx() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = catalog::ghz(c(s, 0.0), c(s, 0.0)).unwrap();
    assert!(pauli_search(&psi).unwrap().iter().any(|f| f.label.as_deref() == Some("XXX")));
}

#[test]
fn werner_purifications_are_equivalent() {
    for p in [0.0, 0.1, 0.25, 1.0 / 3.0] {
        let a = purify_ensemble(&catalog::werner_ensemble(p).unwrap());
        let b = catalog::werner_min_purification(p).unwrap();
        let align = entgroup::analysis::purification_equivalence(a.state(), &b, &["A", "B"]).unwrap();
        assert!(align.residual < 1e-7, "p = {p}: {:e}", align.residual);
    }
}
