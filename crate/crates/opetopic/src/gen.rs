//! Seeded random instances for the law suites.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::perm::{all_permutations, Permutation};
use crate::sig::{Arrow, Obj, SigMorphism, Signature, Typing};
use crate::sigmamon::{Monoid, MonoidHom, MonoidSig};
use crate::term::Term;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Permutation {
    let mut v: Vec<usize> = (1..=n).collect();
    v.shuffle(rng);
    Permutation::new(v).expect("shuffle is a bijection")
}

/// At most 3 types, at most 4 symbols, arities at most 3.
pub fn random_signature(rng: &mut ChaCha8Rng) -> Signature {
    let ntypes = rng.gen_range(1..=3);
    let types: Vec<Term> = (0..ntypes).map(|i| Term::atom(format!("o{i}"))).collect();
    random_signature_on(rng, &types)
}

/// At most 4 symbols of arity at most 3 over the given types.
pub fn random_signature_on(rng: &mut ChaCha8Rng, types: &[Term]) -> Signature {
    let mut s = Signature::new(types.iter().cloned());
    let nsym = rng.gen_range(1..=4);
    for i in 0..nsym {
        let k = rng.gen_range(0..=3);
        let out = types.choose(rng).expect("types").clone();
        let ins = (0..k)
            .map(|_| types.choose(rng).expect("types").clone())
            .collect();
        s.symbols
            .insert(Term::atom(format!("a{i}")), Typing::new(out, ins));
    }
    s
}

/// A morphism out of `s` with uniformly random amalgamations; its codomain is the
/// copy of `s` retyped so that every square commutes.
pub fn random_morphism(rng: &mut ChaCha8Rng, s: &Arc<Signature>, suffix: &str) -> SigMorphism {
    let mut cod = Signature::new(s.types.iter().cloned());
    let mut symbol_map = BTreeMap::new();
    let mut sigma = BTreeMap::new();
    for (a, ty) in &s.symbols {
        let p = random_permutation(rng, ty.arity());
        let b = Term::atom(format!("{a}{suffix}"));
        cod.symbols.insert(
            b.clone(),
            Typing::new(ty.output.clone(), p.permute(&ty.inputs)),
        );
        symbol_map.insert(a.clone(), b);
        sigma.insert(a.clone(), p);
    }
    SigMorphism {
        dom: s.clone(),
        cod: Arc::new(cod),
        symbol_map,
        type_map: s.types.iter().map(|t| (t.clone(), t.clone())).collect(),
        sigma,
    }
}

/// A `Sig_ma` object over `m` with one symbol over each element of `m` (so that
/// ⊙-composites always exist) and vertical arity at most `max_in`.
pub fn random_msig_object(
    rng: &mut ChaCha8Rng,
    m: &Arc<dyn Monoid>,
    prefix: &str,
    max_in: usize,
) -> Signature {
    let syms = m.enumerate(usize::MAX);
    let mut s = Signature::new(syms.iter().cloned());
    for (i, out) in syms.iter().enumerate() {
        let k = rng.gen_range(0..=max_in);
        let ins = (0..k)
            .map(|_| syms.choose(rng).expect("symbols").clone())
            .collect();
        s.symbols.insert(
            Term::atom(format!("{prefix}{i}")),
            Typing::new(out.clone(), ins),
        );
    }
    s
}

/// The identity-on-symbols arrow of a `Sig_ma` object over a homomorphism that is
/// the identity on symbols (only its amalgamations are nontrivial).
pub fn arrow_over(obj: &Obj, h: &MonoidHom) -> Arrow {
    let o = obj.clone();
    let hh = h.clone();
    Arrow::new("f", obj.clone(), obj.clone(), move |t| {
        let n = o.typing(t)?.arity();
        Ok((t.clone(), Permutation::identity(n)))
    })
    .with_type_map(Arc::new(move |x: &Term| {
        hh.apply(x).map(|r| r.0).unwrap_or_else(|_| x.clone())
    }))
}

/// A twisted monoid with random group order and random twists.
pub fn random_twist(rng: &mut ChaCha8Rng) -> MonoidSig {
    let n = rng.gen_range(1..=4);
    let ntw = rng.gen_range(1..=2);
    let mut twists = Vec::new();
    for _ in 0..ntw {
        let k = rng.gen_range(1..=3);
        let ok: Vec<Permutation> = all_permutations(k)
            .into_iter()
            .filter(|c| {
                let mut r = Permutation::identity(k);
                for _ in 0..n {
                    r = c.compose(&r).expect("same size");
                }
                r.is_identity()
            })
            .collect();
        twists.push(ok.choose(rng).expect("identity always qualifies").clone());
    }
    crate::fixtures::twist(n, &twists)
}

/// The automorphism of a twisted monoid that is the identity on symbols and
/// amalgamates each `p` by the given permutations (which must commute with its twist).
pub fn twist_automorphism(m: &Arc<dyn Monoid>, sigmas: BTreeMap<Term, Permutation>) -> MonoidHom {
    let mm = m.clone();
    MonoidHom {
        name: "σ-twist".into(),
        dom: m.clone(),
        cod: m.clone(),
        map: Arc::new(move |x| {
            let n = mm
                .typing(x)
                .ok_or_else(|| crate::error::Error::Structural(format!("unknown {x}")))?
                .arity();
            let s = sigmas
                .get(x)
                .cloned()
                .unwrap_or_else(|| Permutation::identity(n));
            Ok((x.clone(), s))
        }),
        type_map: Arc::new(|t| t.clone()),
    }
}

/// Random automorphism data for [`twist_automorphism`]: for each `p`, a random element
/// of the centralizer of its twist.
pub fn random_twist_sigmas(rng: &mut ChaCha8Rng, m: &MonoidSig) -> BTreeMap<Term, Permutation> {
    let mut out = BTreeMap::new();
    for (sym, ty) in &m.carrier.symbols {
        if ty.output != Term::atom("y") || ty.arity() == 1 && ty.inputs[0] == Term::atom("y") {
            continue;
        }
        let k = ty.arity();
        // One `f` and the rest units, so the twist is `c` itself rather than `c^k`.
        let mut xs: Vec<Term> = vec![Term::atom("1_x"); k];
        if let Some(x) = xs.first_mut() {
            *x = Term::atom("f");
        }
        let twist = match Monoid::mult(m, sym, &xs) {
            Ok((_, g)) => g,
            Err(_) => Permutation::identity(k),
        };
        let central: Vec<Permutation> = all_permutations(k)
            .into_iter()
            .filter(|s| s.compose(&twist).ok() == twist.compose(s).ok())
            .collect();
        out.insert(
            sym.clone(),
            central.choose(rng).expect("identity is central").clone(),
        );
    }
    out
}
