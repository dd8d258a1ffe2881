//! Plain-text summaries printed when `--json` is not given.

use std::fmt::Write;

use entgroup::analysis::{DiscreteCandidate, EntanglementReport, TheoremChecks, WitnessOutcome};
use entgroup::separable::{Disentanglement, StabilizerDecomposition};

use crate::commands::WitnessEntry;

fn gap(g: f64) -> String {
    if g.is_finite() {
        format!("{g:.2e}")
    } else {
        "inf".into()
    }
}

fn phase(p: Option<f64>) -> String {
    p.map_or("-".into(), |p| format!("{p:+.6}"))
}

fn outcome(w: &WitnessOutcome) -> String {
    match w {
        WitnessOutcome::Nontrivial { permutation } => format!("nontrivial {permutation:?}"),
        WitnessOutcome::Inconclusive { .. } => "inconclusive".into(),
    }
}

pub fn analysis(r: &EntanglementReport, witnesses: Option<&[WitnessEntry]>, theorems: Option<&TheoremChecks>) -> String {
    let mut s = String::new();
    let parties: Vec<String> = r.parties.iter().map(|p| format!("{}({})", p.label, p.dim)).collect();
    let kind = format!("{:?}", r.kind).to_lowercase();
    let _ = writeln!(s, "parties {}  kind {kind}  tol {:e}", parties.join(" "), r.tol);
    let _ = writeln!(s, "\nstabilizer algebras");
    let _ = writeln!(s, "  {:<10} {:>4} {:>10} {:>10}", "parties", "dim", "gap", "residual");
    for a in &r.stabilizers {
        let _ = writeln!(s, "  {:<10} {:>4} {:>10} {:>10.2e}", a.name, a.dim, gap(a.rank.gap), a.residual);
    }
    if !r.quotients.is_empty() {
        let _ = writeln!(s, "\nentanglement algebras");
        let _ = writeln!(s, "  {:<10} {:>4} {:>9} {:<14} {:>10}", "name", "dim", "abelian", "hint", "min gap");
        for q in &r.quotients {
            let abelian = q.abelian.map_or("-".to_string(), |b| b.to_string());
            let hint = q.hint.clone().unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "  {:<10} {:>4} {:>9} {:<14} {:>10}", q.name, q.dim, abelian, hint, gap(q.min_gap));
        }
    }
    if !r.candidates.is_empty() {
        let _ = writeln!(s, "\nPauli stabilizers ({})", r.candidates.len());
        for (i, cnd) in r.candidates.iter().enumerate() {
            let w = witnesses.map(|w| format!("  {}", outcome(&w[i].outcome))).unwrap_or_default();
            let _ = writeln!(s, "  {:<6} phase {}{}", cnd.pauli, phase(cnd.phase), w);
        }
    }
    if let Some(t) = theorems {
        let _ = writeln!(s, "\ntheorem checks: {}", if t.all_pass() { "pass" } else { "FAIL" });
    }
    let h = &r.hygiene;
    let _ = writeln!(
        s,
        "\nhygiene: stabilization {:.1e}, exponentiation {:.1e}, bracket closure {:.1e}",
        h.max_stabilization_residual, h.max_exponentiation_residual, h.max_bracket_closure_residual
    );
    s
}

pub fn disentanglement(d: &Disentanglement, target: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "disentangler on {target} controlled by {}: {} blocks", d.unitary.control(), d.unitary.blocks().len());
    let _ = writeln!(s, "factorization residual {:.2e}", d.residual);
    let labels = d.rest.spec().labels().join("");
    let _ = writeln!(s, "rest state on {labels}:");
    for (i, z) in d.rest.amplitudes().iter().enumerate() {
        if z.norm() > 1e-12 {
            let digits: Vec<String> = d.rest.spec().digits(i).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "  |{}>  {:+.6} {:+.6}i", digits.join(","), z.re, z.im);
        }
    }
    s
}

pub fn decomposition(d: &StabilizerDecomposition) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "theta {:+.6}", d.theta);
    let _ = writeln!(s, "clusters");
    for c in &d.clusters {
        let _ = writeln!(s, "  a {:+.6}  b {:+.6}  lines {:?}", c.a, c.b, c.lines);
    }
    let _ = writeln!(
        s,
        "residuals: s_AC {:.2e}, s_BC {:.2e}, product {:.2e}",
        d.ac_residual, d.bc_residual, d.product_residual
    );
    s
}

pub fn candidates(found: &[DiscreteCandidate], witnesses: Option<&[WitnessEntry]>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} Pauli stabilizers", found.len());
    for (i, f) in found.iter().enumerate() {
        let w = witnesses.map(|w| format!("  {}", outcome(&w[i].outcome))).unwrap_or_default();
        let _ = writeln!(
            s,
            "  {:<6} phase {}  residual {:.1e}{}",
            f.label.as_deref().unwrap_or("?"),
            phase(f.phase),
            f.residual,
            w
        );
    }
    s
}

pub fn verification(c: &DiscreteCandidate) -> String {
    format!(
        "verified {}  phase {}  residual {:.2e}\n",
        c.verified,
        phase(c.phase),
        c.residual
    )
}

pub fn theorems(t: &TheoremChecks) -> String {
    let mut s = String::new();
    for i in &t.isomorphism {
        let _ = writeln!(
            s,
            "isomorphism  trace {:<3} {} vs {}: {} / {}  {}",
            i.traced,
            i.left,
            i.right,
            i.left_dim,
            i.right_dim,
            if i.pass { "pass" } else { "FAIL" }
        );
    }
    for c in &t.commutation {
        let _ = writeln!(
            s,
            "commutation  [{}, {}] in s_{}: {} pairs, residual {:.1e}  {}",
            c.left,
            c.right,
            c.shared,
            c.pairs,
            c.max_membership_residual.max(c.max_support_violation),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    for e in &t.exclusion {
        let _ = writeln!(
            s,
            "exclusion    {} within {}: dim {}, residual {:.1e}  {}",
            e.party,
            e.pair,
            e.subspace_dim,
            e.max_residual,
            if e.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "overall: {}", if t.all_pass() { "pass" } else { "FAIL" });
    s
}
