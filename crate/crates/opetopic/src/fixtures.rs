//! Built-in example monoids and signatures.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::sig::{Signature, Typing};
use crate::sigmamon::{Monoid, MonoidSig};
use crate::term::Term;

/// One type `o` and one binary symbol `B: (o; o, o)`.
pub fn one_binary() -> Signature {
    Signature::new([Term::atom("o")]).with("B", "o", &["o", "o"])
}

/// The monoid with only identities `1_o` on the given types.
pub fn trivial(types: &[&str]) -> MonoidSig {
    let mut carrier = Signature::new(types.iter().map(Term::atom));
    let mut unit = BTreeMap::new();
    for o in types {
        let name = format!("1_{o}");
        carrier = carrier.with(&name, o, &[*o]);
        unit.insert(Term::atom(o), Term::atom(&name));
    }
    MonoidSig::from_rule("trivial", carrier, unit, |h, args| {
        let _ = args;
        Ok((h.clone(), Permutation::identity(1)))
    })
    .expect("trivial monoid table")
}

/// The three-type monoid with a binary symbol `b: (circle; square, triangle)` and
/// idempotent unary symbols `c, s, t`.
///
/// Composites absorb upwards along `1_x < x < b`: anything containing `b` is `b`,
/// `c·c = c`, `s·s = s`, `t·t = t`, and every γ is the identity.
pub fn three_type() -> MonoidSig {
    let carrier = Signature::new(["circle", "square", "triangle"].map(Term::atom))
        .with("b", "circle", &["square", "triangle"])
        .with("c", "circle", &["circle"])
        .with("s", "square", &["square"])
        .with("t", "triangle", &["triangle"])
        .with("1_c", "circle", &["circle"])
        .with("1_s", "square", &["square"])
        .with("1_t", "triangle", &["triangle"]);
    let unit = [("circle", "1_c"), ("square", "1_s"), ("triangle", "1_t")]
        .into_iter()
        .map(|(o, e)| (Term::atom(o), Term::atom(e)))
        .collect();
    let rank = |x: &Term| match x.to_string().as_str() {
        "b" => 2,
        "c" | "s" | "t" => 1,
        _ => 0,
    };
    let sig = carrier.clone();
    MonoidSig::from_rule("three-type", carrier, unit, move |h, args| {
        let top = std::iter::once(h)
            .chain(args)
            .max_by_key(|x| rank(x))
            .expect("nonempty");
        // Units only ever sit under a symbol of the same type, so the top symbol
        // already has the composite's typing.
        let top = if rank(top) == 0 { h } else { top };
        let n = sig.symbols[top].inputs.len();
        Ok((top.clone(), Permutation::identity(n)))
    })
    .expect("three-type monoid table")
}

fn fpow(i: usize) -> Term {
    match i {
        0 => Term::atom("1_x"),
        1 => Term::atom("f"),
        _ => Term::atom(format!("f{i}")),
    }
}

fn ppow(idx: usize) -> Term {
    if idx == 0 {
        Term::atom("p")
    } else {
        Term::atom(format!("p{}", idx + 1))
    }
}

/// A monoid with nontrivial γ.
///
/// Types `x, y`; unary symbols `f^i: (x; x)` forming `Z/n`, the unit `1_y`, and for
/// each `c` in `twists` a symbol `p: (y; x^k)` with `k = |c|`. Multiplying `p` by
/// `f^{i_1}..f^{i_k}` gives `p` with `γ = c^{Σ i}`. Needs `c^n = id` for every `c`.
pub fn twist(n: usize, twists: &[Permutation]) -> MonoidSig {
    try_twist(n, twists).expect("twist parameters")
}

pub fn try_twist(n: usize, twists: &[Permutation]) -> Result<MonoidSig> {
    if n == 0 {
        return Err(Error::Structural("the cyclic group needs n ≥ 1".into()));
    }
    let power = |c: &Permutation, e: usize| {
        let mut r = Permutation::identity(c.len());
        for _ in 0..e {
            r = c.compose(&r).expect("same size");
        }
        r
    };
    for c in twists {
        if !power(c, n).is_identity() {
            return Err(Error::Structural(format!(
                "{c} does not have order dividing {n}"
            )));
        }
    }
    let mut carrier = Signature::new([Term::atom("x"), Term::atom("y")]).with("1_y", "y", &["y"]);
    for i in 0..n {
        carrier = carrier.with(&fpow(i).to_string(), "x", &["x"]);
    }
    for (idx, c) in twists.iter().enumerate() {
        let ins = vec!["x"; c.len()];
        carrier = carrier.with(&ppow(idx).to_string(), "y", &ins);
    }
    let unit = [("x", "1_x"), ("y", "1_y")]
        .into_iter()
        .map(|(o, e)| (Term::atom(o), Term::atom(e)))
        .collect();
    let exponent = |t: &Term| (0..n).find(|&i| fpow(i) == *t);
    let twists = twists.to_vec();
    let sig = carrier.clone();
    MonoidSig::from_rule("twist", carrier, unit, move |h, args| {
        if let Some(i) = exponent(h) {
            let j = exponent(&args[0]).expect("x-typed argument");
            return Ok((fpow((i + j) % n), Permutation::identity(1)));
        }
        if h == &Term::atom("1_y") {
            let k = sig.symbols[&args[0]].inputs.len();
            return Ok((args[0].clone(), Permutation::identity(k)));
        }
        let idx = (0..twists.len())
            .find(|&i| ppow(i) == *h)
            .expect("p symbol");
        let total: usize = args.iter().map(|a| exponent(a).expect("x-typed")).sum();
        Ok((h.clone(), power(&twists[idx], total % n)))
    })
}

/// `f·f = 1_x`, one binary `p` with `μ⟨p, f, 1_x⟩ = p` and `γ = (1 2)`.
pub fn m_twist() -> MonoidSig {
    twist(2, &[Permutation::new(vec![2, 1]).expect("swap")])
}

/// The one-type monoid of arities: a symbol `n: (*; *^n)` for every `n`, with
/// `μ(n; k_1..k_n) = Σ k_i` and every `γ` the identity. Only `0..=max` are listed.
pub struct Arities {
    pub max: usize,
}

impl Monoid for Arities {
    fn name(&self) -> String {
        "arities".into()
    }

    fn types(&self) -> Vec<Term> {
        vec![Term::atom("*")]
    }

    fn typing(&self, m: &Term) -> Option<Typing> {
        let n = m.as_nat()?;
        Some(Typing::new(Term::atom("*"), vec![Term::atom("*"); n]))
    }

    fn unit(&self, o: &Term) -> Result<Term> {
        if *o == Term::atom("*") {
            Ok(Term::nat(1))
        } else {
            Err(Error::Structural(format!("{o} is not a type of arities")))
        }
    }

    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)> {
        let bad = || Error::Composability(format!("{head} applied to {} arguments", args.len()));
        if head.as_nat().ok_or_else(bad)? != args.len() {
            return Err(bad());
        }
        let total = args
            .iter()
            .map(|a| a.as_nat().ok_or_else(bad))
            .sum::<Result<usize>>()?;
        Ok((Term::nat(total), Permutation::identity(total)))
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        (0..=self.max).take(cap).map(Term::nat).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::validate_signature;

    #[test]
    fn three_type_table_entries() {
        let m = three_type();
        assert_eq!(m.carrier.len(), 7);
        assert_eq!(m.carrier.types.len(), 3);
        assert!(validate_signature(&m.carrier).is_empty());
        let at = |h: &str, args: &[&str]| {
            m.mult(&h.into(), &args.iter().map(Term::atom).collect::<Vec<_>>())
                .unwrap()
        };
        assert_eq!(at("c", &["b"]).0, Term::atom("b"));
        assert_eq!(at("b", &["s", "1_t"]).0, Term::atom("b"));
        assert_eq!(at("b", &["1_s", "t"]).0, Term::atom("b"));
        assert_eq!(at("c", &["c"]).0, Term::atom("c"));
        assert!(at("b", &["s", "t"]).1.is_identity());
        // 4 b-headed, 3 each for c and 1_c, 2 each for the four other unaries
        assert_eq!(m.mult.len(), 18);
    }

    #[test]
    fn twist_rejects_bad_order() {
        let c = Permutation::new(vec![2, 3, 1]).unwrap();
        assert!(try_twist(2, std::slice::from_ref(&c)).is_err());
        assert!(try_twist(3, &[c]).is_ok());
    }
}
