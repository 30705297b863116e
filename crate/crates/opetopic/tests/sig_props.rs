use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use opetopic::gen::{random_morphism, random_signature, rng};
use opetopic::perm::all_permutations;
use opetopic::sig::{
    coproduct, pullback, structural_iso_otimes, tensor_mor, validate_morphism, validate_signature,
    StructuralKind,
};
use opetopic::{Obj, Permutation, SigMorphism, Signature, Term};
use proptest::prelude::*;

fn identity_types(s: &Signature) -> BTreeMap<Term, Term> {
    s.types.iter().map(|t| (t.clone(), t.clone())).collect()
}

/// Whether `a ↦ (b, σ)` makes the typing square commute under `u`.
fn square(
    dom: &Signature,
    cod: &Signature,
    u: &BTreeMap<Term, Term>,
    a: &Term,
    b: &Term,
    s: &Permutation,
) -> bool {
    let (ta, tb) = (&dom.symbols[a], &cod.symbols[b]);
    ta.arity() == tb.arity()
        && s.len() == ta.arity()
        && u[&ta.output] == tb.output
        && (0..ta.arity()).all(|i| u[&ta.inputs[i]] == tb.inputs[s.apply(i + 1) - 1])
}

/// Keeps `A⊗(B⊗C)` small enough to tabulate.
fn small(a: &Signature, b: &Signature, c: &Signature) -> bool {
    let o = |s: &Signature| Obj::base(s.clone());
    Obj::tensor(o(a), Obj::tensor(o(b), o(c)))
        .enumerate(2001)
        .len()
        <= 2000
}

fn bijective(m: &SigMorphism) -> bool {
    let image: BTreeSet<&Term> = m.symbol_map.values().collect();
    image.len() == m.dom.len() && image.len() == m.cod.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_signatures_and_morphisms_are_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = Arc::new(random_signature(&mut r));
        prop_assert!(validate_signature(&s).is_empty());
        let f = random_morphism(&mut r, &s, "'");
        prop_assert!(validate_morphism(&f).is_empty());
        let g = random_morphism(&mut r, &f.cod, "'");
        let gf = g.after(&f).unwrap();
        prop_assert!(validate_morphism(&gf).is_empty());
        for a in s.symbols.keys() {
            let want = g.sigma[&f.symbol_map[a]].compose(&f.sigma[a]).unwrap();
            prop_assert_eq!(&gf.sigma[a], &want);
        }
    }

    #[test]
    fn strict_morphisms_compose_to_strict(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_signature(&mut r);
        let cover: BTreeSet<Term> = s.types.iter().flat_map(|t| [0, 1].map(|i| Term::atom(format!("{t}_{i}")))).collect();
        let u: BTreeMap<Term, Term> = cover
            .iter()
            .map(|t| (t.clone(), Term::atom(t.to_string().rsplit_once('_').unwrap().0)))
            .collect();
        let (p, proj) = pullback(&cover, &u, &s).unwrap();
        prop_assert!(proj.is_strict());
        prop_assert!(validate_morphism(&proj).is_empty());
        let id = SigMorphism::identity(&Arc::new(p));
        prop_assert!(SigMorphism::identity(&Arc::new(s)).after(&proj).unwrap().after(&id).unwrap().is_strict());
    }

    #[test]
    fn unit_and_associativity_isos(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_signature(&mut r);
        let types: Vec<Term> = a.types.iter().cloned().collect();
        let b = opetopic::gen::random_signature_on(&mut r, &types);
        let c = opetopic::gen::random_signature_on(&mut r, &types);
        prop_assume!(small(&a, &b, &c));
        for kind in [StructuralKind::Lambda, StructuralKind::Rho] {
            let m = structural_iso_otimes(kind, &a, None, None).unwrap();
            prop_assert!(m.is_strict());
            prop_assert!(bijective(&m));
            prop_assert!(validate_morphism(&m).is_empty());
        }
        let alpha = structural_iso_otimes(StructuralKind::Alpha, &a, Some(&b), Some(&c)).unwrap();
        prop_assert!(bijective(&alpha));
        prop_assert!(validate_morphism(&alpha).is_empty());
    }

    #[test]
    fn alpha_is_natural(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Arc::new(random_signature(&mut r));
        let types: Vec<Term> = a.types.iter().cloned().collect();
        let b = Arc::new(opetopic::gen::random_signature_on(&mut r, &types));
        let c = Arc::new(opetopic::gen::random_signature_on(&mut r, &types));
        prop_assume!(small(&a, &b, &c));
        let (f, g, h) = (random_morphism(&mut r, &a, "'"), random_morphism(&mut r, &b, "'"), random_morphism(&mut r, &c, "'"));
        let alpha = structural_iso_otimes(StructuralKind::Alpha, &a, Some(&b), Some(&c)).unwrap();
        let alpha2 = structural_iso_otimes(StructuralKind::Alpha, &f.cod, Some(&g.cod), Some(&h.cod)).unwrap();
        let left = tensor_mor(&tensor_mor(&f, &g).unwrap(), &h).unwrap().after(&alpha).unwrap();
        let right = alpha2.after(&tensor_mor(&f, &tensor_mor(&g, &h).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(left.symbol_map, right.symbol_map);
        prop_assert_eq!(left.sigma, right.sigma);
    }

    #[test]
    fn coproduct_is_universal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Arc::new(random_signature(&mut r));
        let types: Vec<Term> = a.types.iter().cloned().collect();
        let b = Arc::new(opetopic::gen::random_signature_on(&mut r, &types));
        let (sum, inl, inr) = coproduct(&a, &b).unwrap();
        prop_assert!(inl.is_strict() && inr.is_strict());
        prop_assert!(validate_morphism(&inl).is_empty() && validate_morphism(&inr).is_empty());
        // jointly surjective, disjoint images
        let left: BTreeSet<&Term> = inl.symbol_map.values().collect();
        let right: BTreeSet<&Term> = inr.symbol_map.values().collect();
        prop_assert!(left.is_disjoint(&right));
        prop_assert_eq!(left.len() + right.len(), sum.len());

        // f: A → C and g: B → C into a common codomain C = A' + B'
        let (f0, g0) = (random_morphism(&mut r, &a, "'"), random_morphism(&mut r, &b, "'"));
        let (c, j1, j2) = coproduct(&f0.cod, &g0.cod).unwrap();
        let (f, g) = (j1.after(&f0).unwrap(), j2.after(&g0).unwrap());
        let u = identity_types(&sum);
        let mut factorizations = 1usize;
        for s in sum.symbols.keys() {
            let (src, leg) = match inl.symbol_map.iter().find(|(_, v)| *v == s) {
                Some((x, _)) => (x, &f),
                None => (inr.symbol_map.iter().find(|(_, v)| *v == s).unwrap().0, &g),
            };
            let k = sum.symbols[s].arity();
            let mut candidates = 0;
            for cs in c.symbols.keys() {
                for p in all_permutations(k) {
                    if square(&sum, &c, &u, s, cs, &p) && *cs == leg.symbol_map[src] && p == leg.sigma[src] {
                        candidates += 1;
                    }
                }
            }
            factorizations *= candidates;
        }
        prop_assert_eq!(factorizations, 1);
    }

    #[test]
    fn strict_verticals_force_the_amalgamation(seed in any::<u64>()) {
        // A --f--> B over C --h--> D with strict prone verticals p, q: every f making
        // the square commute has σ_a = θ_{p(a)}.
        let mut r = rng(seed);
        let c = Arc::new(random_signature(&mut r));
        let h = random_morphism(&mut r, &c, "'");
        let cover: BTreeSet<Term> = c.types.iter().flat_map(|t| [0, 1].map(|i| Term::atom(format!("{t}_{i}")))).collect();
        let u: BTreeMap<Term, Term> = cover
            .iter()
            .map(|t| (t.clone(), Term::atom(t.to_string().rsplit_once('_').unwrap().0)))
            .collect();
        let (a, p) = pullback(&cover, &u, &c).unwrap();
        let (b, q) = pullback(&cover, &u, &h.cod).unwrap();
        let ident: BTreeMap<Term, Term> = cover.iter().map(|t| (t.clone(), t.clone())).collect();
        for x in a.symbols.keys() {
            let target = &h.symbol_map[&p.symbol_map[x]];
            let theta = &h.sigma[&p.symbol_map[x]];
            let mut found = 0;
            for y in b.symbols.keys().filter(|y| &q.symbol_map[*y] == target) {
                for s in all_permutations(a.symbols[x].arity()) {
                    if square(&a, &b, &ident, x, y, &s) && q.sigma[y].compose(&s).unwrap() == *theta {
                        prop_assert_eq!(&s, theta);
                        found += 1;
                    }
                }
            }
            prop_assert_eq!(found, 1);
        }
    }

    #[test]
    fn json_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = Arc::new(random_signature(&mut r));
        let back: Signature = serde_json::from_value(s.to_json()).unwrap();
        prop_assert_eq!(&back, &*s);
        let f = random_morphism(&mut r, &s, "'");
        let g = SigMorphism::from_json(&f.to_json(), f.dom.clone(), f.cod.clone()).unwrap();
        prop_assert_eq!(g, f);
    }
}
