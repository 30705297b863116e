//! Monoids in `Sig_a`, the ⊙ tensor of `Sig_ma`, and the distributivity data (φ, ψ).
//!
//! An object of `Sig_ma` over a monoid `M` is any [`Obj`] whose vertical types are
//! symbols of `M`; its horizontal typing is read off through `M`. The ⊙ structure
//! maps are [`Arrow`]s, so the same code checks finite and lazy (web) monoids.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{compose_blocks, move_blocks, pad_block, Permutation};
use crate::report::{check_all, LawResult, Report};
use crate::sig::{agree_at, Arrow, Obj, SigObject, Signature, TypeFn, Typing};
use crate::term::{tag, Term};

/// A monoid in `Sig_a`: unit and multiplication with amalgamation γ.
///
/// `mult(m, [m_1..m_k])` returns the composite and `γ`, which sends the flat input
/// position `(i, j)` of the formal composite to the matching slot of the result.
pub trait Monoid: Send + Sync {
    fn name(&self) -> String;
    /// The type set, restricted to the configured bound for lazy monoids.
    fn types(&self) -> Vec<Term>;
    fn typing(&self, m: &Term) -> Option<Typing>;
    fn unit(&self, o: &Term) -> Result<Term>;
    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)>;
    /// Up to `cap` symbols in a deterministic order.
    fn enumerate(&self, cap: usize) -> Vec<Term>;
}

/// The carrier of a monoid as a `Sig_a` object.
pub struct Carrier(pub Arc<dyn Monoid>);

impl SigObject for Carrier {
    fn typing_of(&self, s: &Term) -> Option<Typing> {
        self.0.typing(s)
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        self.0.enumerate(cap)
    }

    fn describe(&self) -> String {
        format!("carrier of {}", self.0.name())
    }
}

pub fn carrier(m: &Arc<dyn Monoid>) -> Obj {
    Obj::Base(Arc::new(Carrier(m.clone())))
}

fn typing_or_err(m: &dyn Monoid, x: &Term) -> Result<Typing> {
    m.typing(x)
        .ok_or_else(|| Error::Structural(format!("{x} is not a symbol of {}", m.name())))
}

/// A finite, table-backed monoid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidSig {
    pub name: String,
    pub carrier: Signature,
    pub unit: BTreeMap<Term, Term>,
    /// Keyed by the formal composite `ot(m, m_1..m_k)`.
    pub mult: BTreeMap<Term, (Term, Permutation)>,
}

#[derive(Serialize, Deserialize)]
struct MultEntry {
    term: Vec<Term>,
    result: Term,
    gamma: Permutation,
}

#[derive(Serialize, Deserialize)]
struct MonoidJson {
    #[serde(default)]
    name: Option<String>,
    #[serde(flatten)]
    carrier: Signature,
    unit: BTreeMap<Term, Term>,
    mult: Vec<MultEntry>,
}

impl MonoidSig {
    /// Tabulates `rule` on every composable pair of the carrier.
    pub fn from_rule(
        name: &str,
        carrier: Signature,
        unit: BTreeMap<Term, Term>,
        rule: impl Fn(&Term, &[Term]) -> Result<(Term, Permutation)>,
    ) -> Result<MonoidSig> {
        let obj = Obj::tensor(Obj::base(carrier.clone()), Obj::base(carrier.clone()));
        let mut mult = BTreeMap::new();
        for x in obj.enumerate(usize::MAX) {
            let args = x.expect_app(tag::TENSOR)?;
            mult.insert(x.clone(), rule(&args[0], &args[1..])?);
        }
        Ok(MonoidSig {
            name: name.to_string(),
            carrier,
            unit,
            mult,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mult = self
            .mult
            .iter()
            .map(|(k, (r, g))| MultEntry {
                term: k.args_of(tag::TENSOR).unwrap_or_default().to_vec(),
                result: r.clone(),
                gamma: g.clone(),
            })
            .collect();
        serde_json::to_value(MonoidJson {
            name: Some(self.name.clone()),
            carrier: self.carrier.clone(),
            unit: self.unit.clone(),
            mult,
        })
        .expect("monoid serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<MonoidSig> {
        let j: MonoidJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mult = j
            .mult
            .into_iter()
            .map(|e| (Term::app(tag::TENSOR, e.term), (e.result, e.gamma)))
            .collect();
        Ok(MonoidSig {
            name: j.name.unwrap_or_else(|| "monoid".into()),
            carrier: j.carrier,
            unit: j.unit,
            mult,
        })
    }

    pub fn shared(self) -> Arc<dyn Monoid> {
        Arc::new(self)
    }
}

impl Monoid for MonoidSig {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn types(&self) -> Vec<Term> {
        self.carrier.types.iter().cloned().collect()
    }

    fn typing(&self, m: &Term) -> Option<Typing> {
        self.carrier.symbols.get(m).cloned()
    }

    fn unit(&self, o: &Term) -> Result<Term> {
        self.unit
            .get(o)
            .cloned()
            .ok_or_else(|| Error::Structural(format!("no unit for type {o}")))
    }

    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)> {
        let mut key = vec![head.clone()];
        key.extend(args.iter().cloned());
        let key = Term::app(tag::TENSOR, key);
        self.mult.get(&key).cloned().ok_or_else(|| {
            Error::Composability(format!("{key} is not in the multiplication table"))
        })
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        self.carrier.symbols.keys().take(cap).cloned().collect()
    }
}

/// `μ: M⊗M → M` as an arrow.
pub fn mult_arrow(m: &Arc<dyn Monoid>) -> Arrow {
    let c = carrier(m);
    let mm = m.clone();
    Arrow::new("μ", Obj::tensor(c.clone(), c.clone()), c, move |t| {
        let args = t.expect_app(tag::TENSOR)?;
        mm.mult(&args[0], &args[1..])
    })
}

/// Checks typing of μ, both unit laws and associativity (including γ) within `cap`.
pub fn validate_monoid(m: &Arc<dyn Monoid>, cap: usize) -> Report {
    let mut report = Report::new(format!("monoid {}", m.name())).bound("cap", cap);
    let c = carrier(m);
    let mu = mult_arrow(m);
    // composites past a truncation bound are outside the domain
    let truncated = |t: &Term, f: &Arrow| matches!(f.apply(t), Err(Error::Truncation(_)));
    let elems = m.enumerate(cap);
    let inputs = |h: &Term| m.typing(h).map(|t| t.inputs).unwrap_or_default();
    let by_out = group_outputs(&elems, |x| m.typing(x).map(|t| t.output));
    let pairs = fair_tensor(&elems, inputs, &by_out, cap, |x| !truncated(x, &mu));
    report.push(check_all("multiplication respects typing", &pairs, |x| {
        mu.check_at(x).map_err(|e| e.to_string())
    }));
    report.push(check_all("units are unary identities", m.types(), |o| {
        let e = m.unit(o).map_err(|e| e.to_string())?;
        match m.typing(&e) {
            Some(t) if t.output == *o && t.inputs == vec![o.clone()] => Ok(()),
            _ => Err(format!("unit {e} of {o} is not typed ({o}; {o})")),
        }
    }));
    report.push(check_all("left unit", &elems, |x| {
        let ty = typing_or_err(&**m, x).map_err(|e| e.to_string())?;
        let e = m.unit(&ty.output).map_err(|e| e.to_string())?;
        let r = m
            .mult(&e, std::slice::from_ref(x))
            .map_err(|e| e.to_string())?;
        if r == (Term::clone(x), Permutation::identity(ty.arity())) {
            Ok(())
        } else {
            Err(format!("μ⟨{e},{x}⟩ = {} with {}", r.0, r.1))
        }
    }));
    report.push(check_all("right unit", &elems, |x| {
        let ty = typing_or_err(&**m, x).map_err(|e| e.to_string())?;
        let units = ty
            .inputs
            .iter()
            .map(|o| m.unit(o))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let r = m.mult(x, &units).map_err(|e| e.to_string())?;
        if r == (Term::clone(x), Permutation::identity(ty.arity())) {
            Ok(())
        } else {
            Err(format!("μ⟨{x}, units⟩ = {} with {}", r.0, r.1))
        }
    }));
    // μ∘(1⊗μ) = μ∘(μ⊗1)∘α on M⊗(M⊗M)
    let id = Arrow::identity(&c);
    let lhs = Arrow::tensor(&id, &mu).then(&mu);
    let rhs = Arrow::alpha_tensor(&c, &c, &c)
        .then(&Arrow::tensor(&mu, &id))
        .then(&mu);
    let pairs_of = Obj::tensor(c.clone(), c.clone());
    let pair_outs = group_outputs(&pairs, |x| pairs_of.typing(x).ok().map(|t| t.output));
    let triples = fair_tensor(&elems, inputs, &pair_outs, cap, |x| {
        !truncated(x, &lhs) && !truncated(x, &rhs)
    });
    report.push(check_all("associativity", &triples, |x| {
        agree_at(&lhs, &rhs, x)
    }));
    report
}

fn group_outputs(
    items: &[Term],
    output: impl Fn(&Term) -> Option<Term>,
) -> BTreeMap<Term, Vec<Term>> {
    let mut out: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
    for x in items {
        if let Some(o) = output(x) {
            out.entry(o).or_default().push(x.clone());
        }
    }
    out
}

/// Up to `cap` terms `⟨h, x_1..x_k⟩` accepted by `keep`, drawing from the heads in
/// turn so that a head with many argument choices cannot crowd out the rest. Gives
/// up after `16·cap` rejections.
fn fair_tensor(
    heads: &[Term],
    inputs: impl Fn(&Term) -> Vec<Term>,
    by_out: &BTreeMap<Term, Vec<Term>>,
    cap: usize,
    mut keep: impl FnMut(&Term) -> bool,
) -> Vec<Term> {
    use itertools::Itertools;
    let empty = Vec::new();
    let mut iters: Vec<Box<dyn Iterator<Item = Term> + '_>> = heads
        .iter()
        .map(|h| -> Box<dyn Iterator<Item = Term> + '_> {
            let slots = inputs(h);
            if slots.is_empty() {
                return Box::new(std::iter::once(Term::app(tag::TENSOR, vec![h.clone()])));
            }
            let lists: Vec<&Vec<Term>> = slots
                .iter()
                .map(|o| by_out.get(o).unwrap_or(&empty))
                .collect();
            Box::new(
                lists
                    .into_iter()
                    .map(|l| l.iter())
                    .multi_cartesian_product()
                    .map(move |xs| {
                        let mut args = vec![h.clone()];
                        args.extend(xs.into_iter().cloned());
                        Term::app(tag::TENSOR, args)
                    }),
            )
        })
        .collect();
    let (mut out, mut rejected) = (Vec::new(), 0);
    while !iters.is_empty() && out.len() < cap && rejected < 16 * cap {
        iters.retain_mut(|it| match it.next() {
            Some(x) if out.len() < cap => {
                if keep(&x) {
                    out.push(x);
                } else {
                    rejected += 1;
                }
                true
            }
            Some(_) => true,
            None => false,
        });
    }
    out
}

/// A monoid homomorphism `(u, σ)`: symbol map with amalgamation, plus its type map.
#[derive(Clone)]
pub struct MonoidHom {
    pub name: String,
    pub dom: Arc<dyn Monoid>,
    pub cod: Arc<dyn Monoid>,
    pub map: Arc<dyn Fn(&Term) -> Result<(Term, Permutation)> + Send + Sync>,
    pub type_map: Arc<TypeFn>,
}

impl MonoidHom {
    pub fn identity(m: &Arc<dyn Monoid>) -> MonoidHom {
        let mm = m.clone();
        MonoidHom {
            name: "id".into(),
            dom: m.clone(),
            cod: m.clone(),
            map: Arc::new(move |x| {
                let n = typing_or_err(&*mm, x)?.arity();
                Ok((x.clone(), Permutation::identity(n)))
            }),
            type_map: Arc::new(|t| t.clone()),
        }
    }

    pub fn apply(&self, x: &Term) -> Result<(Term, Permutation)> {
        (self.map)(x)
    }

    pub fn as_arrow(&self) -> Arrow {
        let f = self.map.clone();
        Arrow::new(
            self.name.clone(),
            carrier(&self.dom),
            carrier(&self.cod),
            move |t| f(t),
        )
        .with_type_map(self.type_map.clone())
    }

    /// Composite `next ∘ self`.
    pub fn then(&self, next: &MonoidHom) -> MonoidHom {
        let (f, g) = (self.map.clone(), next.map.clone());
        let (u, v) = (self.type_map.clone(), next.type_map.clone());
        MonoidHom {
            name: format!("{}∘{}", next.name, self.name),
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            map: Arc::new(move |x| {
                let (y, s) = f(x)?;
                let (z, r) = g(&y)?;
                Ok((z, r.compose(&s)?))
            }),
            type_map: Arc::new(move |t| v(&u(t))),
        }
    }
}

/// Typing square, unit preservation and `u∘μ = μ∘(u⊗u)` within `cap`.
pub fn validate_hom(h: &MonoidHom, cap: usize) -> Report {
    let mut report = Report::new(format!("homomorphism {}", h.name)).bound("cap", cap);
    let f = h.as_arrow();
    let elems = h.dom.enumerate(cap);
    report.push(check_all("typing square", &elems, |x| {
        f.check_at(x).map_err(|e| e.to_string())
    }));
    report.push(check_all("preserves units", h.dom.types(), |o| {
        let e = h.dom.unit(o).map_err(|e| e.to_string())?;
        let img = h.apply(&e).map_err(|e| e.to_string())?;
        let want = h.cod.unit(&(h.type_map)(o)).map_err(|e| e.to_string())?;
        if img == (want.clone(), Permutation::identity(1)) {
            Ok(())
        } else {
            Err(format!(
                "{e} ↦ {} but the unit of {} is {want}",
                img.0,
                (h.type_map)(o)
            ))
        }
    }));
    let lhs = mult_arrow(&h.dom).then(&f);
    let rhs = Arrow::tensor(&f, &f).then(&mult_arrow(&h.cod));
    // composites past a truncation bound are outside the domain
    let pairs: Vec<Term> = lhs
        .dom
        .enumerate(cap)
        .into_iter()
        .filter(|x| !matches!(mult_arrow(&h.dom).apply(x), Err(Error::Truncation(_))))
        .collect();
    report.push(check_all("preserves multiplication", &pairs, |x| {
        agree_at(&lhs, &rhs, x)
    }));
    report
}

// ---------------------------------------------------------------------------
// M_ℕ: relabelled copies used by the separation harness.

/// `M × {0..bound}` with labels adding under multiplication.
pub struct FreshMonoid {
    pub base: Arc<dyn Monoid>,
    pub bound: usize,
}

pub fn label(m: &Term, n: usize) -> Term {
    Term::app(tag::LABEL, vec![m.clone(), Term::nat(n)])
}

pub fn unlabel(x: &Term) -> Option<(Term, usize)> {
    let args = x.args_of(tag::LABEL)?;
    Some((args.first()?.clone(), args.get(1)?.as_nat()?))
}

impl Monoid for FreshMonoid {
    fn name(&self) -> String {
        format!("{}_N≤{}", self.base.name(), self.bound)
    }

    fn types(&self) -> Vec<Term> {
        self.base.types()
    }

    fn typing(&self, m: &Term) -> Option<Typing> {
        let (x, n) = unlabel(m)?;
        if n > self.bound {
            return None;
        }
        self.base.typing(&x)
    }

    fn unit(&self, o: &Term) -> Result<Term> {
        Ok(label(&self.base.unit(o)?, 0))
    }

    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)> {
        let split = |x: &Term| {
            unlabel(x).ok_or_else(|| Error::Structural(format!("{x} is not a labelled symbol")))
        };
        let (h, mut total) = split(head)?;
        let mut base_args = Vec::with_capacity(args.len());
        for a in args {
            let (x, n) = split(a)?;
            total += n;
            base_args.push(x);
        }
        if total > self.bound {
            return Err(Error::Truncation(format!(
                "label sum {total} exceeds the bound {}",
                self.bound
            )));
        }
        let (r, g) = self.base.mult(&h, &base_args)?;
        Ok((label(&r, total), g))
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        let base = self.base.enumerate(cap);
        let mut out = Vec::new();
        for n in 0..=self.bound {
            for x in &base {
                if out.len() >= cap {
                    return out;
                }
                out.push(label(x, n));
            }
        }
        out
    }
}

/// `M_ℕ` truncated at `bound`, with the strict projection `π: M_ℕ → M`.
pub fn freshen(m: &Arc<dyn Monoid>, bound: usize) -> (Arc<dyn Monoid>, MonoidHom) {
    let fresh: Arc<dyn Monoid> = Arc::new(FreshMonoid {
        base: m.clone(),
        bound,
    });
    let base = m.clone();
    let pi = MonoidHom {
        name: "π".into(),
        dom: fresh.clone(),
        cod: m.clone(),
        map: Arc::new(move |x| {
            let (y, _) = unlabel(x)
                .ok_or_else(|| Error::Structural(format!("{x} is not a labelled symbol")))?;
            let n = typing_or_err(&*base, &y)?.arity();
            Ok((y, Permutation::identity(n)))
        }),
        type_map: Arc::new(|t| t.clone()),
    };
    (fresh, pi)
}

// ---------------------------------------------------------------------------
// The ⊙ structure.

/// Horizontal typing of a `Sig_ma` symbol: the `M`-typing of its vertical output.
pub fn horizontal(m: &dyn Monoid, obj: &Obj, x: &Term) -> Result<Typing> {
    let v = obj.typing(x)?;
    typing_or_err(m, &v.output)
}

/// `f ⊙ g` over a homomorphism `h` (identity when `None`):
/// `⟨̇a, b_i⟩̇ ↦ ⟨̇f(a), g(b_{σ_ǎ⁻¹(i)})⟩̇` with amalgamation `(1, σ_ǎ)∗(τ_a, τ'_{b_i})`.
pub fn odot_arrow(m: &Arc<dyn Monoid>, f: &Arrow, g: &Arrow, h: Option<&MonoidHom>) -> Arrow {
    let (ff, gg) = (f.clone(), g.clone());
    let hh = h.cloned();
    let cod_m = h.map(|h| h.cod.clone()).unwrap_or_else(|| m.clone());
    let mut out = Arrow::new(
        format!("({}⊙{})", f.name, g.name),
        Obj::odot(m, f.dom.clone(), g.dom.clone()),
        Obj::odot(&cod_m, f.cod.clone(), g.cod.clone()),
        move |t| {
            let args = t.expect_app(tag::ODOT)?;
            let head = ff.dom.typing(&args[0])?.output;
            let k = args.len() - 1;
            let sigma = match &hh {
                Some(h) => h.apply(&head)?.1,
                None => Permutation::identity(k),
            };
            if sigma.len() != k {
                return Err(Error::Structural(format!(
                    "{t}: σ at {head} has the wrong size"
                )));
            }
            let (fa, ta) = ff.apply(&args[0])?;
            let mut imgs = Vec::with_capacity(k);
            let mut blocks = vec![ta];
            for b in &args[1..] {
                let (gb, tb) = gg.apply(b)?;
                imgs.push(gb);
                blocks.push(tb);
            }
            let mut res = vec![fa];
            res.extend(sigma.permute(&imgs));
            Ok((
                Term::app(tag::ODOT, res),
                compose_blocks(&pad_block(&sigma), &blocks)?,
            ))
        },
    );
    out.type_map = f.type_map.clone();
    out
}

/// `α⊙: A⊙(B⊙C) → (A⊙B)⊙C`. Slot `p` of the outer composite receives `c_{γ⁻¹(p)}`
/// and the amalgamation moves whole input blocks: `π = κ∗(identity blocks)`.
pub fn alpha_odot(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, c: &Obj) -> Arrow {
    let dom = Obj::odot(m, a.clone(), Obj::odot(m, b.clone(), c.clone()));
    let cod = Obj::odot(m, Obj::odot(m, a.clone(), b.clone()), c.clone());
    let (mm, aa, bb, cc) = (m.clone(), a.clone(), b.clone(), c.clone());
    Arrow::new("α⊙", dom, cod, move |t| {
        let args = t.expect_app(tag::ODOT)?;
        let ta = aa.typing(&args[0])?;
        let mut b_terms = Vec::new();
        let mut b_outs = Vec::new();
        // (block key, vertical arity) in source order
        let mut src: Vec<((usize, usize, usize), usize)> = vec![((0, 0, 0), ta.arity())];
        let mut c_terms: Vec<Vec<Term>> = Vec::new();
        let mut c_arity: Vec<Vec<usize>> = Vec::new();
        for (i, x) in args[1..].iter().enumerate() {
            let inner = x.expect_app(tag::ODOT)?;
            let tb = bb.typing(&inner[0])?;
            src.push(((1, i, 0), tb.arity()));
            b_terms.push(inner[0].clone());
            b_outs.push(tb.output);
            let mut row = Vec::new();
            let mut ar = Vec::new();
            for (j, y) in inner[1..].iter().enumerate() {
                let n = cc.typing(y)?.arity();
                src.push(((2, i, j), n));
                row.push(y.clone());
                ar.push(n);
            }
            c_terms.push(row);
            c_arity.push(ar);
        }
        let (_, gamma) = mm.mult(&ta.output, &b_outs)?;
        let flat: Vec<(usize, usize)> = c_terms
            .iter()
            .enumerate()
            .flat_map(|(i, row)| (0..row.len()).map(move |j| (i, j)))
            .collect();
        if gamma.len() != flat.len() {
            return Err(Error::Structural(format!(
                "{t}: γ acts on {} points",
                gamma.len()
            )));
        }
        let ginv = gamma.inverse();
        let mut tgt_keys = vec![(0, 0, 0)];
        tgt_keys.extend((0..b_terms.len()).map(|i| (1, i, 0)));
        let mut outer = Vec::new();
        for p in 1..=flat.len() {
            let (i, j) = flat[ginv.apply(p) - 1];
            tgt_keys.push((2, i, j));
            outer.push(c_terms[i][j].clone());
        }
        let src_keys: Vec<_> = src.iter().map(|(k, _)| *k).collect();
        let kappa = Permutation::tracking(&src_keys, &tgt_keys)?;
        let lengths: Vec<usize> = src.iter().map(|(_, n)| *n).collect();
        let pi = move_blocks(&kappa, &lengths)?;
        let mut head = vec![args[0].clone()];
        head.extend(b_terms);
        let mut res = vec![Term::app(tag::ODOT, head)];
        res.extend(outer);
        Ok((Term::app(tag::ODOT, res), pi))
    })
}

/// `α⊙⁻¹: (A⊙B)⊙C → A⊙(B⊙C)`.
pub fn alpha_odot_inv(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, c: &Obj) -> Arrow {
    let dom = Obj::odot(m, Obj::odot(m, a.clone(), b.clone()), c.clone());
    let cod = Obj::odot(m, a.clone(), Obj::odot(m, b.clone(), c.clone()));
    let (mm, aa, bb, cc) = (m.clone(), a.clone(), b.clone(), c.clone());
    Arrow::new("α⊙⁻¹", dom, cod, move |t| {
        let args = t.expect_app(tag::ODOT)?;
        let head = args[0].expect_app(tag::ODOT)?;
        let ta = aa.typing(&head[0])?;
        let mut b_outs = Vec::new();
        let mut b_arity = Vec::new();
        let mut row_len = Vec::new();
        for x in &head[1..] {
            let tb = bb.typing(x)?;
            b_arity.push(tb.arity());
            row_len.push(typing_or_err(&*mm, &tb.output)?.arity());
            b_outs.push(tb.output);
        }
        let (_, gamma) = mm.mult(&ta.output, &b_outs)?;
        let outer = &args[1..];
        if gamma.len() != outer.len() {
            return Err(Error::Composability(format!(
                "{t}: wrong number of outer arguments"
            )));
        }
        let mut src_keys = vec![(0, 0, 0)];
        let mut lengths = vec![ta.arity()];
        for (i, n) in b_arity.iter().enumerate() {
            src_keys.push((1, i, 0));
            lengths.push(*n);
        }
        let mut flat = Vec::new();
        for (i, &l) in row_len.iter().enumerate() {
            for j in 0..l {
                flat.push((i, j));
            }
        }
        let ginv = gamma.inverse();
        for p in 1..=outer.len() {
            let (i, j) = flat[ginv.apply(p) - 1];
            src_keys.push((2, i, j));
            lengths.push(cc.typing(&outer[p - 1])?.arity());
        }
        let mut tgt_keys = vec![(0, 0, 0)];
        let mut res = vec![head[0].clone()];
        let mut q = 0;
        for (i, &l) in row_len.iter().enumerate() {
            tgt_keys.push((1, i, 0));
            let mut inner = vec![head[i + 1].clone()];
            for j in 0..l {
                tgt_keys.push((2, i, j));
                inner.push(outer[gamma.apply(q + 1) - 1].clone());
                q += 1;
            }
            res.push(Term::app(tag::ODOT, inner));
        }
        let kappa = Permutation::tracking(&src_keys, &tgt_keys)?;
        Ok((Term::app(tag::ODOT, res), move_blocks(&kappa, &lengths)?))
    })
}

fn arity_of(obj: &Obj, t: &Term) -> Result<usize> {
    Ok(obj.typing(t)?.arity())
}

/// `λ⊙: I⊙ ⊙ A → A`.
pub fn lambda_odot(m: &Arc<dyn Monoid>, a: &Obj) -> Arrow {
    let dom = Obj::odot(m, Obj::unit_odot(m), a.clone());
    let d = dom.clone();
    Arrow::new("λ⊙", dom, a.clone(), move |t| {
        let n = arity_of(&d, t)?;
        Ok((
            t.expect_app(tag::ODOT)?[1].clone(),
            Permutation::identity(n),
        ))
    })
}

/// `λ⊙⁻¹: A → I⊙ ⊙ A`.
pub fn lambda_odot_inv(m: &Arc<dyn Monoid>, a: &Obj) -> Arrow {
    let cod = Obj::odot(m, Obj::unit_odot(m), a.clone());
    let (mm, aa) = (m.clone(), a.clone());
    Arrow::new("λ⊙⁻¹", a.clone(), cod, move |t| {
        let ty = aa.typing(t)?;
        let h = typing_or_err(&*mm, &ty.output)?;
        Ok((
            Term::app(
                tag::ODOT,
                vec![Term::app(tag::ODOT_UNIT, vec![h.output]), t.clone()],
            ),
            Permutation::identity(ty.arity()),
        ))
    })
}

/// `ρ⊙: A → A ⊙ I⊙`, padding every horizontal input with a unit.
pub fn rho_odot(m: &Arc<dyn Monoid>, a: &Obj) -> Arrow {
    let cod = Obj::odot(m, a.clone(), Obj::unit_odot(m));
    let (mm, aa) = (m.clone(), a.clone());
    Arrow::new("ρ⊙", a.clone(), cod, move |t| {
        let ty = aa.typing(t)?;
        let h = typing_or_err(&*mm, &ty.output)?;
        let mut args = vec![t.clone()];
        args.extend(
            h.inputs
                .iter()
                .map(|o| Term::app(tag::ODOT_UNIT, vec![o.clone()])),
        );
        Ok((
            Term::app(tag::ODOT, args),
            Permutation::identity(ty.arity()),
        ))
    })
}

/// `ρ⊙⁻¹: A ⊙ I⊙ → A`.
pub fn rho_odot_inv(m: &Arc<dyn Monoid>, a: &Obj) -> Arrow {
    let dom = Obj::odot(m, a.clone(), Obj::unit_odot(m));
    let d = dom.clone();
    Arrow::new("ρ⊙⁻¹", dom, a.clone(), move |t| {
        let n = arity_of(&d, t)?;
        Ok((
            t.expect_app(tag::ODOT)?[0].clone(),
            Permutation::identity(n),
        ))
    })
}

/// `φ: (A⊗X)⊙(B⊗X) → (A⊙B)⊗X`, concatenating the `x`-arguments in order.
pub fn phi(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, x: &Obj) -> Arrow {
    let dom = Obj::odot(
        m,
        Obj::tensor(a.clone(), x.clone()),
        Obj::tensor(b.clone(), x.clone()),
    );
    let cod = Obj::tensor(Obj::odot(m, a.clone(), b.clone()), x.clone());
    let d = dom.clone();
    Arrow::new("φ", dom, cod, move |t| {
        let n = arity_of(&d, t)?;
        let (head, xs) = phi_regroup(t)?;
        let mut args = vec![head];
        args.extend(xs);
        Ok((Term::app(tag::TENSOR, args), Permutation::identity(n)))
    })
}

fn phi_regroup(t: &Term) -> Result<(Term, Vec<Term>)> {
    let args = t.expect_app(tag::ODOT)?;
    let mut heads = Vec::with_capacity(args.len());
    let mut xs = Vec::new();
    for y in args {
        let inner = y.expect_app(tag::TENSOR)?;
        heads.push(inner[0].clone());
        xs.extend(inner[1..].iter().cloned());
    }
    Ok((Term::app(tag::ODOT, heads), xs))
}

/// A deliberately broken φ that reverses the order of the `x`-groups.
/// Used to show that condition I detects a wrong regrouping.
pub fn phi_reversed_groups(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, x: &Obj) -> Arrow {
    let good = phi(m, a, b, x);
    let xx = x.clone();
    let mut bad = Arrow::new("φ_bad", good.dom.clone(), good.cod.clone(), move |t| {
        let args = t.expect_app(tag::ODOT)?;
        let mut groups = Vec::new();
        for y in args {
            groups.push(y.expect_app(tag::TENSOR)?[1..].to_vec());
        }
        let lengths: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|x| arity_of(&xx, x)).sum::<Result<usize>>())
            .collect::<Result<_>>()?;
        let k = groups.len();
        let rev = Permutation::new((1..=k).rev().collect())?;
        let (head, _) = phi_regroup(t)?;
        let mut out = vec![head];
        for g in groups.iter().rev() {
            out.extend(g.iter().cloned());
        }
        Ok((Term::app(tag::TENSOR, out), move_blocks(&rev, &lengths)?))
    });
    bad.name = "φ_bad".into();
    bad
}

/// `φ⁻¹: (A⊙B)⊗X → (A⊗X)⊙(B⊗X)`, splitting by the vertical arities of `a` and the `b_i`.
pub fn phi_inv(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, x: &Obj) -> Arrow {
    let good = phi(m, a, b, x);
    let (aa, bb) = (a.clone(), b.clone());
    let d = good.cod.clone();
    Arrow::new("φ⁻¹", good.cod.clone(), good.dom.clone(), move |t| {
        let n = arity_of(&d, t)?;
        let args = t.expect_app(tag::TENSOR)?;
        let head = args[0].expect_app(tag::ODOT)?;
        let mut rest = args[1..].iter();
        let mut out = Vec::with_capacity(head.len());
        for (i, h) in head.iter().enumerate() {
            let k = if i == 0 {
                arity_of(&aa, h)?
            } else {
                arity_of(&bb, h)?
            };
            let mut grp = vec![h.clone()];
            for _ in 0..k {
                grp.push(
                    rest.next()
                        .ok_or_else(|| Error::Composability(format!("{t}: too few x-arguments")))?
                        .clone(),
                );
            }
            out.push(Term::app(tag::TENSOR, grp));
        }
        Ok((Term::app(tag::ODOT, out), Permutation::identity(n)))
    })
}

/// `ψ_X: I⊙ → I⊙⊗X`, `1_o ↦ ⟨1_o, −⟩`.
pub fn psi(m: &Arc<dyn Monoid>, x: &Obj) -> Arrow {
    let u = Obj::unit_odot(m);
    Arrow::new("ψ", u.clone(), Obj::tensor(u, x.clone()), |t| {
        t.expect_app(tag::ODOT_UNIT)?;
        Ok((
            Term::app(tag::TENSOR, vec![t.clone()]),
            Permutation::identity(0),
        ))
    })
}

/// `ψ_X⁻¹: I⊙⊗X → I⊙`.
pub fn psi_inv(m: &Arc<dyn Monoid>, x: &Obj) -> Arrow {
    let u = Obj::unit_odot(m);
    Arrow::new("ψ⁻¹", Obj::tensor(u.clone(), x.clone()), u, |t| {
        let args = t.expect_app(tag::TENSOR)?;
        if args.len() != 1 {
            return Err(Error::Composability(format!("{t} has x-arguments")));
        }
        Ok((args[0].clone(), Permutation::identity(0)))
    })
}

// ---------------------------------------------------------------------------
// Law suites.

/// Runs one equation between two arrows on every element of their common domain.
pub fn equation(law: &str, lhs: &Arrow, rhs: &Arrow, cap: usize) -> LawResult {
    let elems = lhs.dom.enumerate(cap);
    check_all(law, &elems, |x| {
        lhs.check_at(x).map_err(|e| format!("{law}: {e}"))?;
        agree_at(lhs, rhs, x)
    })
}

/// Pentagon, triangle, inverse and naturality checks for ⊙ on four objects.
/// `nat` supplies arrows `f: A→A'` etc. over a common homomorphism `h`.
pub fn check_odot_coherence(
    m: &Arc<dyn Monoid>,
    objs: [&Obj; 4],
    nat: Option<(&MonoidHom, [&Arrow; 3])>,
    cap: usize,
) -> Vec<LawResult> {
    let [a, b, c, d] = objs;
    let mut out = Vec::new();
    let id = Arrow::identity;
    let od = |x: &Obj, y: &Obj| Obj::odot(m, x.clone(), y.clone());

    let lhs = alpha_odot(m, a, b, &od(c, d)).then(&alpha_odot(m, &od(a, b), c, d));
    let rhs = odot_arrow(m, &id(a), &alpha_odot(m, b, c, d), None)
        .then(&alpha_odot(m, a, &od(b, c), d))
        .then(&odot_arrow(m, &alpha_odot(m, a, b, c), &id(d), None));
    out.push(equation("⊙ pentagon", &lhs, &rhs, cap));

    let lhs = odot_arrow(m, &id(a), &lambda_odot_inv(m, b), None).then(&alpha_odot(
        m,
        a,
        &Obj::unit_odot(m),
        b,
    ));
    let rhs = odot_arrow(m, &rho_odot(m, a), &id(b), None);
    out.push(equation("⊙ triangle", &lhs, &rhs, cap));

    let round = alpha_odot(m, a, b, c).then(&alpha_odot_inv(m, a, b, c));
    out.push(equation("α⊙ inverse", &round, &id(&round.dom), cap));
    let round = lambda_odot_inv(m, a).then(&lambda_odot(m, a));
    out.push(equation("λ⊙ inverse", &round, &id(a), cap));
    let round = rho_odot(m, a).then(&rho_odot_inv(m, a));
    out.push(equation("ρ⊙ inverse", &round, &id(a), cap));

    if let Some((h, [f, g, k])) = nat {
        let lhs =
            alpha_odot(m, a, b, c).then(&odot_arrow(m, &odot_arrow(m, f, g, Some(h)), k, Some(h)));
        let fgk = odot_arrow(m, f, &odot_arrow(m, g, k, Some(h)), Some(h));
        let rhs = fgk.then(&alpha_odot(&h.cod, &f.cod, &g.cod, &k.cod));
        out.push(equation("α⊙ naturality", &lhs, &rhs, cap));
        let lhs = lambda_odot(m, a).then(f);
        let rhs = odot_arrow(m, &unit_odot_mor(h), f, Some(h)).then(&lambda_odot(&h.cod, &f.cod));
        out.push(equation("λ⊙ naturality", &lhs, &rhs, cap));
        let lhs = rho_odot(m, a).then(&odot_arrow(m, f, &unit_odot_mor(h), Some(h)));
        let rhs = f.then(&rho_odot(&h.cod, &f.cod));
        out.push(equation("ρ⊙ naturality", &lhs, &rhs, cap));
    }
    out
}

/// Pentagon, triangle and inverse laws of ⊗ on `Sig_a`, plus naturality of α, λ, ρ
/// along `f, g, h` when given (their type maps must be identities).
pub fn check_tensor_coherence(
    objs: [&Obj; 4],
    unit: &Obj,
    nat: Option<[&Arrow; 3]>,
    cap: usize,
) -> Vec<LawResult> {
    let [a, b, c, d] = objs;
    let mut out = Vec::new();
    let id = Arrow::identity;
    let t = |x: &Obj, y: &Obj| Obj::tensor(x.clone(), y.clone());

    let lhs = Arrow::alpha_tensor(a, b, &t(c, d)).then(&Arrow::alpha_tensor(&t(a, b), c, d));
    let rhs = Arrow::tensor(&id(a), &Arrow::alpha_tensor(b, c, d))
        .then(&Arrow::alpha_tensor(a, &t(b, c), d))
        .then(&Arrow::tensor(&Arrow::alpha_tensor(a, b, c), &id(d)));
    out.push(equation("⊗ pentagon", &lhs, &rhs, cap));

    let lhs = Arrow::alpha_tensor(a, unit, b)
        .then(&Arrow::tensor(&Arrow::rho_tensor_inv(a, unit), &id(b)));
    let rhs = Arrow::tensor(&id(a), &Arrow::lambda_tensor(unit, b));
    out.push(equation("⊗ triangle", &lhs, &rhs, cap));

    let round = Arrow::alpha_tensor(a, b, c).then(&Arrow::alpha_tensor_inv(a, b, c));
    out.push(equation("α⊗ inverse", &round, &id(&round.dom), cap));
    let round = Arrow::lambda_tensor_inv(unit, a).then(&Arrow::lambda_tensor(unit, a));
    out.push(equation("λ⊗ inverse", &round, &id(a), cap));
    let round = Arrow::rho_tensor(a, unit).then(&Arrow::rho_tensor_inv(a, unit));
    out.push(equation("ρ⊗ inverse", &round, &id(a), cap));

    if let Some([f, g, h]) = nat {
        let lhs = Arrow::alpha_tensor(&f.dom, &g.dom, &h.dom)
            .then(&Arrow::tensor(&Arrow::tensor(f, g), h));
        let rhs = Arrow::tensor(f, &Arrow::tensor(g, h))
            .then(&Arrow::alpha_tensor(&f.cod, &g.cod, &h.cod));
        out.push(equation("α⊗ naturality", &lhs, &rhs, cap));
        let lhs = Arrow::lambda_tensor(unit, &f.dom).then(f);
        let rhs = Arrow::tensor(&id(unit), f).then(&Arrow::lambda_tensor(unit, &f.cod));
        out.push(equation("λ⊗ naturality", &lhs, &rhs, cap));
        let lhs = Arrow::rho_tensor_inv(&f.dom, unit).then(f);
        let rhs = Arrow::tensor(f, &id(unit)).then(&Arrow::rho_tensor_inv(&f.cod, unit));
        out.push(equation("ρ⊗ naturality", &lhs, &rhs, cap));
    }
    out
}

/// `(f'∘f)⊗(g'∘g) = (f'⊗g')∘(f⊗g)`.
pub fn check_tensor_functoriality(
    f: &Arrow,
    f2: &Arrow,
    g: &Arrow,
    g2: &Arrow,
    cap: usize,
) -> LawResult {
    let lhs = Arrow::tensor(&f.then(f2), &g.then(g2));
    let rhs = Arrow::tensor(f, g).then(&Arrow::tensor(f2, g2));
    equation("⊗ functoriality", &lhs, &rhs, cap)
}

/// `I⊙(h): I⊙(M) → I⊙(N)`, `1_o ↦ 1_{u(o)}`.
pub fn unit_odot_mor(h: &MonoidHom) -> Arrow {
    let hh = h.clone();
    let sym = h.clone();
    Arrow::new(
        "I⊙(h)",
        Obj::unit_odot(&h.dom),
        Obj::unit_odot(&h.cod),
        move |t| {
            let o = &t.expect_app(tag::ODOT_UNIT)?[0];
            Ok((
                Term::app(tag::ODOT_UNIT, vec![(hh.type_map)(o)]),
                Permutation::identity(0),
            ))
        },
    )
    .with_type_map(Arc::new(move |x: &Term| {
        sym.apply(x).map(|r| r.0).unwrap_or_else(|_| x.clone())
    }))
}

/// Which φ to use in the distributivity suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiVariant {
    Standard,
    ReversedGroups,
}

/// Conditions I–VII on the objects `A, B, C, X, Y`, plus φ/ψ inverse checks.
pub fn check_distributivity(
    m: &Arc<dyn Monoid>,
    objs: [&Obj; 5],
    f: Option<&Arrow>,
    variant: PhiVariant,
    cap: usize,
) -> Vec<LawResult> {
    let [a, b, c, x, y] = objs;
    let mk_phi = |p: &Obj, q: &Obj, r: &Obj| match variant {
        PhiVariant::Standard => phi(m, p, q, r),
        PhiVariant::ReversedGroups => phi_reversed_groups(m, p, q, r),
    };
    let id = Arrow::identity;
    let od = |p: &Obj, q: &Obj| Obj::odot(m, p.clone(), q.clone());
    let ot = |p: &Obj, q: &Obj| Obj::tensor(p.clone(), q.clone());
    let i_odot = Obj::unit_odot(m);
    let i_otimes = Obj::unit_tensor_over(m);
    let mut out = Vec::new();

    // I
    let lhs = alpha_odot(m, &ot(a, x), &ot(b, x), &ot(c, x))
        .then(&odot_arrow(m, &mk_phi(a, b, x), &id(&ot(c, x)), None))
        .then(&mk_phi(&od(a, b), c, x));
    let rhs = odot_arrow(m, &id(&ot(a, x)), &mk_phi(b, c, x), None)
        .then(&mk_phi(a, &od(b, c), x))
        .then(&Arrow::tensor(&alpha_odot(m, a, b, c), &id(x)));
    out.push(equation("condition I", &lhs, &rhs, cap));

    // II
    let lhs = odot_arrow(
        m,
        &Arrow::alpha_tensor(a, x, y),
        &Arrow::alpha_tensor(b, x, y),
        None,
    )
    .then(&mk_phi(&ot(a, x), &ot(b, x), y))
    .then(&Arrow::tensor(&mk_phi(a, b, x), &id(y)));
    let rhs = mk_phi(a, b, &ot(x, y)).then(&Arrow::alpha_tensor(&od(a, b), x, y));
    out.push(equation("condition II", &lhs, &rhs, cap));

    // III
    let lhs = odot_arrow(
        m,
        &Arrow::rho_tensor(a, &i_otimes),
        &Arrow::rho_tensor(b, &i_otimes),
        None,
    )
    .then(&mk_phi(a, b, &i_otimes));
    let rhs = Arrow::rho_tensor(&od(a, b), &i_otimes);
    out.push(equation("condition III", &lhs, &rhs, cap));

    // IV, for f: A⊗X → Y (identity on A⊗X when none is supplied)
    let default_f = id(&ot(a, x));
    let f = f.unwrap_or(&default_f);
    let lhs = odot_arrow(m, &psi_inv(m, x), f, None).then(&lambda_odot(m, &f.cod));
    let rhs = mk_phi(&i_odot, a, x)
        .then(&Arrow::tensor(&lambda_odot(m, a), &id(x)))
        .then(f);
    out.push(equation("condition IV", &lhs, &rhs, cap));

    // V
    let lhs = Arrow::alpha_tensor(&i_odot, x, y)
        .then(&Arrow::tensor(&psi_inv(m, x), &id(y)))
        .then(&psi_inv(m, y));
    let rhs = psi_inv(m, &ot(x, y));
    out.push(equation("condition V", &lhs, &rhs, cap));

    // VI
    out.push(equation(
        "condition VI",
        &psi(m, &i_otimes),
        &Arrow::rho_tensor(&i_odot, &i_otimes),
        cap,
    ));

    // VII
    let lhs = rho_odot(m, &ot(a, x))
        .then(&odot_arrow(m, &id(&ot(a, x)), &psi(m, x), None))
        .then(&mk_phi(a, &i_odot, x));
    let rhs = Arrow::tensor(&rho_odot(m, a), &id(x));
    out.push(equation("condition VII", &lhs, &rhs, cap));

    let round = mk_phi(a, b, x).then(&phi_inv(m, a, b, x));
    out.push(equation("φ inverse", &round, &id(&round.dom), cap));
    let round = psi(m, x).then(&psi_inv(m, x));
    out.push(equation("ψ inverse", &round, &id(&i_odot), cap));
    out
}

// ---------------------------------------------------------------------------
// Separation harness.

/// Base objects lifted along `π: M_ℕ → M`: symbols `lift(a, o, i_1..i_k)`.
pub struct Lifted(pub Obj);

impl SigObject for Lifted {
    fn typing_of(&self, s: &Term) -> Option<Typing> {
        let args = s.args_of("lift")?;
        let base = self.0.typing(&args[0]).ok()?;
        if args.len() != base.arity() + 2 {
            return None;
        }
        let lifted = Typing::new(args[1].clone(), args[2..].to_vec());
        let ok = std::iter::once((&base.output, &lifted.output))
            .chain(base.inputs.iter().zip(&lifted.inputs))
            .all(|(b, l)| unlabel(l).map(|(x, _)| &x == b).unwrap_or(false));
        ok.then_some(lifted)
    }

    fn enumerate(&self, _cap: usize) -> Vec<Term> {
        Vec::new()
    }

    fn describe(&self) -> String {
        "lifted object".into()
    }
}

/// Rebuilds an object expression over `M_ℕ`.
pub fn lift_obj(obj: &Obj, fresh: &Arc<dyn Monoid>) -> Obj {
    match obj {
        Obj::Base(_) => Obj::Base(Arc::new(Lifted(obj.clone()))),
        Obj::Tensor(a, b) => Obj::tensor(lift_obj(a, fresh), lift_obj(b, fresh)),
        Obj::UnitT(_) => Obj::unit_tensor_over(fresh),
        Obj::Odot(_, a, b) => Obj::odot(fresh, lift_obj(a, fresh), lift_obj(b, fresh)),
        Obj::UnitO(_) => Obj::unit_odot(fresh),
        Obj::Coprod(a, b) => Obj::coprod(lift_obj(a, fresh), lift_obj(b, fresh)),
    }
}

/// Lifts an element so that every vertical input gets its own label.
pub fn lift_element(
    obj: &Obj,
    fresh: &Arc<dyn Monoid>,
    t: &Term,
    counter: &mut usize,
) -> Result<Term> {
    lift_rec(obj, fresh, t, None, counter)
}

fn lift_rec(
    obj: &Obj,
    fm: &Arc<dyn Monoid>,
    t: &Term,
    out: Option<&Term>,
    counter: &mut usize,
) -> Result<Term> {
    let fresh = |x: &Term, counter: &mut usize| {
        *counter += 1;
        label(x, *counter)
    };
    match obj {
        Obj::Base(_) => {
            let ty = obj.typing(t)?;
            let o = match out {
                Some(o) => o.clone(),
                None => fresh(&ty.output, counter),
            };
            let mut args = vec![t.clone(), o];
            for i in &ty.inputs {
                args.push(fresh(i, counter));
            }
            Ok(Term::app("lift", args))
        }
        Obj::Tensor(a, b) => {
            let args = t.expect_app(tag::TENSOR)?;
            let head = lift_rec(a, fm, &args[0], out, counter)?;
            let slots = lift_obj(a, fm).typing(&head)?.inputs;
            let mut res = vec![head];
            for (x, o) in args[1..].iter().zip(&slots) {
                res.push(lift_rec(b, fm, x, Some(o), counter)?);
            }
            Ok(Term::app(tag::TENSOR, res))
        }
        Obj::UnitT(_) => {
            let o = t.expect_app(tag::UNIT)?[0].clone();
            let l = match out {
                Some(l) => l.clone(),
                None => fresh(&o, counter),
            };
            Ok(Term::app(tag::UNIT, vec![l]))
        }
        Obj::Odot(_, a, b) => {
            if out.is_some() {
                return Err(Error::Structural(format!(
                    "{t}: cannot pin the vertical output of a ⊙ composite"
                )));
            }
            let args = t.expect_app(tag::ODOT)?;
            let mut res = vec![lift_rec(a, fm, &args[0], None, counter)?];
            for x in &args[1..] {
                res.push(lift_rec(b, fm, x, None, counter)?);
            }
            Ok(Term::app(tag::ODOT, res))
        }
        Obj::UnitO(_) => {
            if out.is_some() {
                return Err(Error::Structural(format!(
                    "{t}: ⊙ units have a fixed output"
                )));
            }
            Ok(t.clone())
        }
        Obj::Coprod(a, b) => {
            if let Some(x) = t.args_of(tag::INL) {
                Ok(Term::app(
                    tag::INL,
                    vec![lift_rec(a, fm, &x[0], out, counter)?],
                ))
            } else {
                let x = t.expect_app(tag::INR)?;
                Ok(Term::app(
                    tag::INR,
                    vec![lift_rec(b, fm, &x[0], out, counter)?],
                ))
            }
        }
    }
}

/// Forgets labels: the strict projection on lifted elements.
pub fn unlift(t: &Term) -> Term {
    match t {
        Term::Atom(_) => t.clone(),
        Term::App(h, args) => {
            if &**h == "lift" {
                return args[0].clone();
            }
            if &**h == tag::LABEL {
                return args[0].clone();
            }
            Term::app(h, args.iter().map(unlift).collect())
        }
    }
}

/// The unique type-preserving permutation between two injectively typed input lists.
pub fn forced_amalgamation(src: &[Term], tgt: &[Term]) -> Result<Permutation> {
    let distinct = |v: &[Term]| {
        let mut s = v.to_vec();
        s.sort();
        s.windows(2).all(|w| w[0] != w[1])
    };
    if !distinct(src) {
        return Err(Error::Structural("input typing is not injective".into()));
    }
    Permutation::tracking(src, tgt)
}

/// Separation check for one transformation, given as a builder over `(monoid, objects)`.
///
/// For each element, lifts it with injective typing, applies the lifted arrow, and
/// checks that its amalgamation is the forced one and that it projects onto the
/// arrow over `M`.
pub fn separation_check(
    law: &str,
    m: &Arc<dyn Monoid>,
    objs: &[Obj],
    build: impl Fn(&Arc<dyn Monoid>, &[Obj]) -> Arrow,
    bound: usize,
    cap: usize,
) -> LawResult {
    let base = build(m, objs);
    let (fresh, _) = freshen(m, bound);
    let lifted_objs: Vec<Obj> = objs.iter().map(|o| lift_obj(o, &fresh)).collect();
    let lifted = build(&fresh, &lifted_objs);
    let elems = base.dom.enumerate(cap);
    check_all(law, &elems, |t| {
        let mut counter = 0;
        let lt = lift_element(&base.dom, &fresh, t, &mut counter).map_err(|e| e.to_string())?;
        let src = lifted
            .dom
            .typing(&lt)
            .map_err(|e| format!("lifted {lt}: {e}"))?;
        let (img, s) = lifted.apply(&lt).map_err(|e| e.to_string())?;
        let tgt = lifted
            .cod
            .typing(&img)
            .map_err(|e| format!("image {img}: {e}"))?;
        let forced = forced_amalgamation(&src.inputs, &tgt.inputs).map_err(|e| e.to_string())?;
        if forced != s {
            return Err(format!("at {t}: computed {s}, typing forces {forced}"));
        }
        let (bimg, bs) = base.apply(t).map_err(|e| e.to_string())?;
        if unlift(&img) != bimg || bs != s {
            return Err(format!(
                "at {t}: lifted result does not project onto {bimg}"
            ));
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{three_type, twist};

    #[test]
    fn three_type_is_a_monoid() {
        let m = three_type().shared();
        let r = validate_monoid(&m, 10_000);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn twisted_monoid_is_a_monoid() {
        let m = twist(2, &[Permutation::new(vec![2, 1]).unwrap()]).shared();
        let r = validate_monoid(&m, 10_000);
        assert!(r.passed(), "{:?}", r.failures());
        let (p, g) = m.mult(&"p".into(), &["f".into(), "1_x".into()]).unwrap();
        assert_eq!(p, Term::atom("p"));
        assert_eq!(g.images(), &[2, 1]);
    }

    #[test]
    fn fresh_labels_add() {
        let m = three_type().shared();
        let (fresh, pi) = freshen(&m, 5);
        let (r, _) = fresh
            .mult(
                &label(&"b".into(), 1),
                &[label(&"s".into(), 2), label(&"t".into(), 0)],
            )
            .unwrap();
        assert_eq!(r, label(&"b".into(), 3));
        assert_eq!(pi.apply(&r).unwrap().0, Term::atom("b"));
        assert!(matches!(
            fresh.mult(&label(&"c".into(), 4), &[label(&"c".into(), 4)]),
            Err(Error::Truncation(_))
        ));
        let e = fresh.unit(&"circle".into()).unwrap();
        assert_eq!(pi.apply(&e).unwrap().0, m.unit(&"circle".into()).unwrap());
        let r = validate_hom(&pi, 200);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn json_round_trip() {
        let m = three_type();
        let back = MonoidSig::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn unit_odot_is_sterile() {
        let m = three_type().shared();
        let u = Obj::unit_odot(&m);
        let syms = u.enumerate(100);
        assert_eq!(syms.len(), 3);
        for s in syms {
            let ty = u.typing(&s).unwrap();
            assert!(ty.inputs.is_empty());
            assert_eq!(m.typing(&ty.output).unwrap().arity(), 1);
        }
    }

    fn objects(m: &Arc<dyn Monoid>, seed: u64) -> Vec<Obj> {
        let mut r = crate::gen::rng(seed);
        (0..5)
            .map(|i| {
                Obj::base(crate::gen::random_msig_object(
                    &mut r,
                    m,
                    &format!("{}", (b'a' + i) as char),
                    2,
                ))
            })
            .collect()
    }

    fn first_failure(rs: &[LawResult]) -> Option<&LawResult> {
        rs.iter().find(|r| !r.passed)
    }

    #[test]
    fn odot_coherence_on_random_objects() {
        for m in [
            three_type().shared(),
            twist(2, &[Permutation::new(vec![2, 1]).unwrap()]).shared(),
        ] {
            for seed in 0..6 {
                let o = objects(&m, seed);
                let rs = check_odot_coherence(&m, [&o[0], &o[1], &o[2], &o[3]], None, 400);
                assert!(first_failure(&rs).is_none(), "{:?}", first_failure(&rs));
            }
        }
    }

    #[test]
    fn tensor_coherence_on_random_signatures() {
        use crate::gen::{random_morphism, random_signature, random_signature_on, rng};
        use crate::sig::FiniteTypes;
        let mut checked = 0;
        for seed in 0..20 {
            let mut r = rng(seed);
            let first = random_signature(&mut r);
            let types: Vec<Term> = first.types.iter().cloned().collect();
            let mut sigs = vec![Arc::new(first)];
            sigs.extend((0..3).map(|_| Arc::new(random_signature_on(&mut r, &types))));
            let objs: Vec<Obj> = sigs.iter().map(|s| Obj::Base(s.clone())).collect();
            let types = sigs.iter().flat_map(|s| s.types.iter().cloned()).collect();
            let unit = Obj::unit_tensor(Arc::new(FiniteTypes(types)));
            let fs: Vec<Arrow> = sigs[..3]
                .iter()
                .map(|s| Arrow::from_morphism(&random_morphism(&mut r, s, "'")))
                .collect();
            let rs = check_tensor_coherence(
                [&objs[0], &objs[1], &objs[2], &objs[3]],
                &unit,
                Some([&fs[0], &fs[1], &fs[2]]),
                400,
            );
            assert!(first_failure(&rs).is_none(), "{:?}", first_failure(&rs));
            checked += rs[0].checked;
            let next = |r: &mut rand_chacha::ChaCha8Rng, f: &Arrow, types| {
                let cod = Arc::new(f.cod.materialize(types, usize::MAX));
                Arrow::from_morphism(&random_morphism(r, &cod, "''"))
            };
            let f2 = next(&mut r, &fs[0], sigs[0].types.clone());
            let g2 = next(&mut r, &fs[1], sigs[1].types.clone());
            let law = check_tensor_functoriality(&fs[0], &f2, &fs[1], &g2, 400);
            assert!(law.passed, "{law:?}");
        }
        assert!(checked > 100, "pentagon checked only {checked} elements");
    }

    #[test]
    fn distributivity_on_random_objects() {
        for m in [
            three_type().shared(),
            twist(2, &[Permutation::new(vec![2, 1]).unwrap()]).shared(),
        ] {
            for seed in 0..6 {
                let o = objects(&m, seed);
                let rs = check_distributivity(
                    &m,
                    [&o[0], &o[1], &o[2], &o[3], &o[4]],
                    None,
                    PhiVariant::Standard,
                    400,
                );
                assert!(first_failure(&rs).is_none(), "{:?}", first_failure(&rs));
            }
        }
    }

    #[test]
    fn reversed_phi_is_caught() {
        let m = three_type().shared();
        let caught = (0..10).any(|seed| {
            let o = objects(&m, seed);
            let rs = check_distributivity(
                &m,
                [&o[0], &o[1], &o[2], &o[3], &o[4]],
                None,
                PhiVariant::ReversedGroups,
                400,
            );
            first_failure(&rs).is_some()
        });
        assert!(caught);
    }
}
