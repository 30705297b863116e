//! Ready-made law suites over built-in and seeded random instances, shared by the
//! command line and the acceptance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::fixtures::{one_binary, three_type};
use crate::freemon::{self, check_free_monoid, TensorContext, Tree};
use crate::gen::{
    arrow_over, random_morphism, random_msig_object, random_signature, random_signature_on,
    random_twist, random_twist_sigmas, rng, twist_automorphism,
};
use crate::opetope::{terminal_tower, validate_opetopic_set, OpetopicSet};
use crate::perm::{
    check_functoriality_lemma, check_homomorphism_counterexample, check_operad_associativity,
};
use crate::report::{check_all, LawResult, Report};
use crate::sig::{Arrow, FiniteTypes, Obj, Signature};
use crate::sigmamon::{
    check_distributivity, check_odot_coherence, check_tensor_coherence, check_tensor_functoriality,
    validate_monoid, Monoid, MonoidHom, PhiVariant,
};
use crate::slice::{
    arity_collapse, check_action, check_naturality, check_phi_star, check_transported,
    check_underlying_monoidal, compare, unit_over, Comparison, OverSet,
};
use crate::term::Term;
use crate::web::{
    check_web_functor, check_web_laws, check_web_separation, graft_agreement,
    standard_retyping_search, tensor_pairs_each, three_type_pairs, Instance, Nu1, Retyping, Webs,
};
use crate::Result;

/// Folds per-instance results into one line per law, keeping the first witness.
fn merge(into: &mut Report, instance: &str, results: impl IntoIterator<Item = LawResult>) {
    for r in results {
        match into.results.iter_mut().find(|x| x.law == r.law) {
            Some(x) => {
                x.checked += r.checked;
                if x.passed && !r.passed {
                    x.passed = false;
                    x.witness = r.witness.map(|w| format!("{instance}: {w}"));
                }
            }
            None => {
                let mut r = r;
                r.witness = r.witness.map(|w| format!("{instance}: {w}"));
                into.push(r);
            }
        }
    }
}

/// `F_⊗` of one binary symbol: stage sizes and the free-monoid laws.
pub fn free_monoid_suite(stages: usize, cap: usize) -> (Vec<usize>, Report) {
    let ctx = TensorContext::new(one_binary());
    let mut report = Report::new("free monoid on one binary symbol").bound("stages", stages);
    let counts: Vec<usize> = (0..=stages)
        .map(|n| freemon::enumerate(&ctx, n, usize::MAX).len())
        .collect();
    report.notes.push(format!("stage sizes {counts:?}"));
    for r in check_free_monoid(&ctx, stages.min(2), usize::MAX, cap) {
        report.push(r);
    }
    (counts, report)
}

/// Associativity and inverses of `∗`, the functoriality lemma and the stored
/// counterexample to `∗` being a homomorphism.
pub fn operad_suite(seed: u64, lemma_cases: usize) -> Report {
    let mut report = Report::new("operad of symmetries").bound("seed", seed as usize);
    for r in check_operad_associativity(3, 3, 2, seed) {
        report.push(r);
    }
    report.push(check_functoriality_lemma(lemma_cases, seed));
    report.push(check_homomorphism_counterexample());
    report
}

/// ⊗ coherence and functoriality on `cases` random families of signatures.
pub fn tensor_suite(seed: u64, cases: usize, cap: usize) -> Report {
    let mut report = Report::new("⊗ on Sig_a")
        .bound("seed", seed as usize)
        .bound("cases", cases)
        .bound("cap", cap);
    let mut r = rng(seed);
    for i in 0..cases {
        let first = random_signature(&mut r);
        let types: Vec<Term> = first.types.iter().cloned().collect();
        let mut sigs = vec![Arc::new(first)];
        sigs.extend((0..3).map(|_| Arc::new(random_signature_on(&mut r, &types))));
        let objs: Vec<Obj> = sigs.iter().map(|s| Obj::Base(s.clone())).collect();
        let unit = Obj::unit_tensor(Arc::new(FiniteTypes(types.iter().cloned().collect())));
        let fs: Vec<Arrow> = sigs[..3]
            .iter()
            .map(|s| Arrow::from_morphism(&random_morphism(&mut r, s, "'")))
            .collect();
        let results = check_tensor_coherence(
            [&objs[0], &objs[1], &objs[2], &objs[3]],
            &unit,
            Some([&fs[0], &fs[1], &fs[2]]),
            cap,
        );
        merge(&mut report, &format!("instance {i}"), results);
        let mut next = |f: &Arrow, s: &Signature| {
            let cod = Arc::new(f.cod.materialize(s.types.clone(), usize::MAX));
            Arrow::from_morphism(&random_morphism(&mut r, &cod, "''"))
        };
        let f2 = next(&fs[0], &sigs[0]);
        let g2 = next(&fs[1], &sigs[1]);
        let law = check_tensor_functoriality(&fs[0], &f2, &fs[1], &g2, cap);
        merge(&mut report, &format!("instance {i}"), [law]);
    }
    report
}

fn msig_objects(r: &mut rand_chacha::ChaCha8Rng, m: &Arc<dyn Monoid>, n: usize) -> Vec<Obj> {
    (0..n)
        .map(|i| {
            Obj::base(random_msig_object(
                r,
                m,
                &format!("{}", (b'a' + i as u8) as char),
                2,
            ))
        })
        .collect()
}

/// The three-type monoid followed by `cases - 1` random twisted monoids, each with
/// its automorphism (the identity for the three-type monoid).
fn monoids(r: &mut rand_chacha::ChaCha8Rng, cases: usize) -> Vec<(Arc<dyn Monoid>, MonoidHom)> {
    let mut out = Vec::with_capacity(cases);
    let c = three_type().shared();
    out.push((c.clone(), MonoidHom::identity(&c)));
    for _ in 1..cases {
        let t = random_twist(r);
        let sigmas = random_twist_sigmas(r, &t);
        let m = t.shared();
        let h = twist_automorphism(&m, sigmas);
        out.push((m, h));
    }
    out
}

/// ⊙ pentagon, triangle, inverses and naturality on the three-type monoid and random twisted
/// monoids (whose `α⊙` carries nontrivial `γ`).
pub fn odot_suite(seed: u64, cases: usize, cap: usize) -> Report {
    let mut report = Report::new("⊙ on Sig_ma")
        .bound("seed", seed as usize)
        .bound("cases", cases)
        .bound("cap", cap);
    let mut r = rng(seed);
    for (i, (m, h)) in monoids(&mut r, cases).into_iter().enumerate() {
        let o = msig_objects(&mut r, &m, 4);
        let arrows: Vec<Arrow> = o[..3].iter().map(|x| arrow_over(x, &h)).collect();
        let results = check_odot_coherence(
            &m,
            [&o[0], &o[1], &o[2], &o[3]],
            Some((&h, [&arrows[0], &arrows[1], &arrows[2]])),
            cap,
        );
        merge(&mut report, &format!("{} #{i}", m.name()), results);
    }
    report
}

/// Conditions I–VII on the three-type monoid and random twisted monoids, and detection of the
/// φ that reverses its groups.
pub fn distributivity_suite(seed: u64, cases: usize, cap: usize) -> Report {
    let mut report = Report::new("distributivity")
        .bound("seed", seed as usize)
        .bound("cases", cases)
        .bound("cap", cap);
    let mut r = rng(seed);
    for (i, (m, _)) in monoids(&mut r, cases).into_iter().enumerate() {
        merge(
            &mut report,
            &format!("{} #{i}", m.name()),
            validate_monoid(&m, cap).results,
        );
        let o = msig_objects(&mut r, &m, 5);
        let results = check_distributivity(
            &m,
            [&o[0], &o[1], &o[2], &o[3], &o[4]],
            None,
            PhiVariant::Standard,
            cap,
        );
        merge(&mut report, &format!("{} #{i}", m.name()), results);
    }

    let m = three_type().shared();
    let mut caught = None;
    let mut tried = 0;
    let mut r = rng(seed ^ 0x5eed);
    while caught.is_none() && tried < 20 {
        tried += 1;
        let o = msig_objects(&mut r, &m, 5);
        let results = check_distributivity(
            &m,
            [&o[0], &o[1], &o[2], &o[3], &o[4]],
            None,
            PhiVariant::ReversedGroups,
            cap,
        );
        caught = results.into_iter().find(|x| !x.passed);
    }
    let law = match caught {
        Some(f) => {
            report.notes.push(format!(
                "reversed φ caught by \"{}\": {}",
                f.law,
                f.witness.unwrap_or_default()
            ));
            LawResult::pass("φ mutation detected", tried)
        }
        None => LawResult::fail(
            "φ mutation detected",
            tried,
            "no law failed for the reversed φ",
        ),
    };
    report.push(law);
    report
}

/// Web-monoid laws over the three-type monoid with `node_bound` total nodes, ν against the
/// grafting oracle on every pair whose webs each have at most `node_bound` nodes,
/// separation, functoriality and detection of a corrupted `ν_1`.
pub fn web_suite(node_bound: usize, cap: usize) -> Report {
    let m = three_type().shared();
    let webs = Webs::new(&m);
    let mut report = check_web_laws(&webs, node_bound, cap);
    report.suite = "web monoid over three-type".into();
    let pairs = tensor_pairs_each(&webs, node_bound, cap);
    let mut agree = graft_agreement(&webs, &pairs);
    agree.law = "ν = graft_oracle (per-web bound)".into();
    report.push(agree);
    report.push(check_web_separation(&webs, node_bound.min(3), cap));
    for r in check_web_functor(&arity_collapse(&m), node_bound.min(3), cap) {
        report.push(r);
    }
    let bad = Webs::new(&m).with_nu1(Nu1::Corrupted);
    let caught = check_web_laws(&bad, 2, cap)
        .results
        .into_iter()
        .any(|r| !r.passed);
    report.push(if caught {
        LawResult::pass("corrupted ν_1 detected", 1)
    } else {
        LawResult::fail(
            "corrupted ν_1 detected",
            1,
            "every law passed with the corrupted ν_1",
        )
    });
    report
}

/// The three-type evidence: the three compositions, their amalgamations and the
/// infeasibility of a standard retyping.
pub fn three_type_suite() -> Result<(Vec<Instance>, Retyping, Report)> {
    let m = three_type().shared();
    let webs = Webs::new(&m);
    let mut report = Report::new("three-type monoid");
    let instances = three_type_pairs()
        .iter()
        .map(|(w, vs)| Instance::evaluate(&webs, w, vs))
        .collect::<Result<Vec<_>>>()?;
    let target = &instances[0].result;
    report.push(check_all("the three compositions agree", &instances, |i| {
        if &i.result == target && i.result.nodes() == 4 {
            Ok(())
        } else {
            Err(format!("{} vs {target}", i.result))
        }
    }));
    report.push(check_all("ν agrees with grafting", &instances, |i| {
        let (t, p) = webs
            .graft_tracking(&i.outer, &i.inners)
            .map_err(|e| e.to_string())?;
        if t == i.result && p == i.amalgamation {
            Ok(())
        } else {
            Err(format!("{t} {p} vs {} {}", i.result, i.amalgamation))
        }
    }));
    for (k, i) in instances.iter().enumerate() {
        report.notes.push(format!(
            "E{}: {} with amalgamation {}",
            k + 1,
            i.result,
            i.amalgamation
        ));
    }

    let full = standard_retyping_search(&instances);
    let law = match &full {
        Retyping::Infeasible(cert) => {
            for (k, adj) in cert.iter().enumerate() {
                let pairs: Vec<String> = adj.iter().map(|(a, b)| format!("{a}~{b}")).collect();
                report
                    .notes
                    .push(format!("E{} forces adjacencies {}", k + 1, pairs.join(" ")));
            }
            LawResult::pass("no standard retyping of all three", 1)
        }
        Retyping::Feasible(p) => LawResult::fail(
            "no standard retyping of all three",
            1,
            format!("found {p:?}"),
        ),
    };
    report.push(law);
    let n = instances.len();
    let subsets: Vec<Vec<usize>> = (1..(1usize << n) - 1)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    report.push(check_all(
        "every proper subset has a standard retyping",
        &subsets,
        |s| {
            let sub: Vec<Instance> = s.iter().map(|&i| instances[i].clone()).collect();
            match standard_retyping_search(&sub) {
                Retyping::Feasible(_) => Ok(()),
                Retyping::Infeasible(_) => Err(format!("subset {s:?} is infeasible")),
            }
        },
    ));
    Ok((instances, full, report))
}

/// A web with no unit leaves: every branch ends in a nullary node.
pub fn is_leafless(t: &Tree) -> bool {
    match t {
        Tree::Unit(_) => false,
        Tree::Node(_, cs) => cs.iter().all(is_leafless),
    }
}

/// The terminal tower with validation, one 2-opetope per arity, and the
/// 3-opetope counts by node number (all, and leafless).
pub fn opetope_suite(depth: usize, node_bound: usize, cap: usize) -> (OpetopicSet, Report) {
    let t = terminal_tower(depth, node_bound);
    let mut report = validate_opetopic_set(&t, cap);
    if depth >= 2 {
        let by_arity = t.counts_by_nodes(2);
        let want: BTreeMap<usize, usize> = (0..=node_bound).map(|k| (k, 1)).collect();
        report.push(if by_arity == want {
            LawResult::pass("one 2-opetope per arity", by_arity.len())
        } else {
            LawResult::fail(
                "one 2-opetope per arity",
                by_arity.len(),
                format!("{by_arity:?}"),
            )
        });
    }
    if depth >= 3 {
        report
            .notes
            .push(format!("3-opetopes by nodes {:?}", t.counts_by_nodes(3)));
        report.notes.push(format!(
            "leafless 3-opetopes by nodes {:?}",
            leafless_counts(&t, 3)
        ));
    }
    (t, report)
}

/// Cells of dimension `n ≥ 2` with leafless body webs, by node count.
pub fn leafless_counts(t: &OpetopicSet, n: usize) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in t.cells(n) {
        if let Ok(w) = Tree::from_term(&c) {
            if is_leafless(&w) {
                *out.entry(w.nodes()).or_insert(0) += 1;
            }
        }
    }
    out
}

/// The comparison `W(M)⋆X ≅ F_⊗(X)` together with the slice-side structure it uses:
/// the action, the transported tensor, `U` strict monoidal, `φ` for the action and
/// naturality along the arity collapse.
pub fn comparison_suite(
    m: &Arc<dyn Monoid>,
    x: &OverSet,
    stages: usize,
    seed: u64,
    cap: usize,
) -> Result<(Comparison, Report)> {
    let c = compare(m, x, stages, cap)?;
    let mut report = c.report.clone();
    report.suite = format!("comparison over {}", m.name());
    // Redraw until every action law has something to check.
    let mut r = rng(seed);
    let mut o = msig_objects(&mut r, m, 3);
    let mut action = check_action(m, &o[0], &o[1], x, cap);
    for _ in 0..50 {
        if action.results.iter().all(|l| l.checked > 0) {
            break;
        }
        o = msig_objects(&mut r, m, 3);
        action = check_action(m, &o[0], &o[1], x, cap);
    }
    merge(&mut report, "action", action.results);
    let units = unit_over(&**m)?;
    let mixed = OverSet::new(x.anchors.clone().into_iter().chain(units.anchors));
    merge(
        &mut report,
        "⊗ over M",
        check_transported(&**m, [&mixed, x, &mixed, x], cap)?.results,
    );
    merge(
        &mut report,
        "U",
        check_underlying_monoidal(m, &o[0], &o[1], &o[2], cap).results,
    );
    merge(
        &mut report,
        "φ",
        check_phi_star(m, &o[0], &o[1], &o[2], x, cap)?.results,
    );
    let h = arity_collapse(m);
    merge(
        &mut report,
        "collapse",
        check_naturality(&h, x, stages, cap)?.results,
    );
    let anchors: BTreeSet<&Term> = x.anchors.values().collect();
    report.notes.push(format!("X anchored at {anchors:?}"));
    Ok((c, report))
}
