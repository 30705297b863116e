//! Sets over a monoid, the action `A⋆X`, the transported tensor on `Set/M`, and the
//! comparison `W(M)⋆X ≅ F_⊗(X)`.
//!
//! A set over `M` is a finite set `X` with an anchor `d: X → M`. For a `Sig_ma`
//! object `A` over `M`, `A⋆X` is the set of `(a, x_1..x_k)` with `d(x_i)` the
//! `i`-th vertical input of `a`, anchored at the vertical output of `a`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freemon::{self, eval_mu, OdotContext, Tree};
use crate::perm::{compose_blocks, Permutation};
use crate::report::{check_all, LawResult, Report};
use crate::sig::{validate_morphism, Arrow, Obj, SigMorphism, Signature, Typing};
use crate::sigmamon::{self, validate_hom, validate_monoid, Monoid, MonoidHom, MonoidSig};
use crate::term::{tag, Term};
use crate::web::Webs;

/// A finite set with an anchor into the symbols of a monoid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OverSet {
    pub anchors: BTreeMap<Term, Term>,
}

impl OverSet {
    pub fn new(pairs: impl IntoIterator<Item = (Term, Term)>) -> Self {
        OverSet {
            anchors: pairs.into_iter().collect(),
        }
    }

    /// `x1..xn` anchored round-robin at the non-unit symbols of `m`, widest first and
    /// covering each output type once before repeating one.
    pub fn spread(m: &dyn Monoid, n: usize) -> Result<Self> {
        let units: BTreeSet<Term> = m.types().iter().filter_map(|o| m.unit(o).ok()).collect();
        let mut syms: Vec<(Term, Typing)> = m
            .enumerate(usize::MAX)
            .into_iter()
            .filter(|s| !units.contains(s))
            .filter_map(|s| m.typing(&s).map(|t| (s, t)))
            .collect();
        syms.sort_by_key(|(_, t)| std::cmp::Reverse(t.arity()));
        let mut seen = BTreeSet::new();
        let (fresh, repeat): (Vec<_>, Vec<_>) = syms
            .into_iter()
            .partition(|(_, t)| seen.insert(t.output.clone()));
        let targets: Vec<Term> = fresh.into_iter().chain(repeat).map(|(s, _)| s).collect();
        if targets.is_empty() && n > 0 {
            return Err(Error::Structural(format!(
                "{} has no non-unit symbols",
                m.name()
            )));
        }
        Ok(OverSet::new((0..n).map(|i| {
            (
                Term::atom(format!("x{}", i + 1)),
                targets[i % targets.len()].clone(),
            )
        })))
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = &Term> {
        self.anchors.keys()
    }

    pub fn anchor(&self, x: &Term) -> Result<&Term> {
        self.anchors
            .get(x)
            .ok_or_else(|| Error::Structural(format!("{x} is not an element of the set")))
    }

    /// Elements grouped by anchor.
    pub fn fibers(&self) -> BTreeMap<Term, Vec<Term>> {
        let mut out: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
        for (x, d) in &self.anchors {
            out.entry(d.clone()).or_default().push(x.clone());
        }
        out
    }
}

/// `U(A)`: the symbols of `A` anchored at their vertical outputs.
pub fn underlying(a: &Obj, cap: usize) -> Result<OverSet> {
    a.enumerate(cap)
        .into_iter()
        .map(|s| Ok((s.clone(), a.typing(&s)?.output)))
        .collect::<Result<_>>()
        .map(|anchors| OverSet { anchors })
}

/// `X̄`: one symbol `x: (d(x); )` per element, with no vertical inputs.
pub fn sterile(x: &OverSet) -> Signature {
    let mut s = Signature::new(x.anchors.values().cloned());
    for (e, d) in &x.anchors {
        s.symbols
            .insert(e.clone(), Typing::new(d.clone(), Vec::new()));
    }
    s
}

/// Every choice of one element per input type, in lexicographic order.
fn choices(fibers: &BTreeMap<Term, Vec<Term>>, inputs: &[Term]) -> Vec<Vec<Term>> {
    if inputs.is_empty() {
        return vec![Vec::new()];
    }
    let empty = Vec::new();
    inputs
        .iter()
        .map(|t| fibers.get(t).unwrap_or(&empty).clone())
        .multi_cartesian_product()
        .collect()
}

/// `A⋆X`, listing at most `cap` symbols of `A` and `cap` elements in total.
pub fn star(a: &Obj, x: &OverSet, cap: usize) -> Result<OverSet> {
    let fibers = x.fibers();
    let mut out = OverSet::default();
    for s in a.enumerate(cap) {
        let ty = a.typing(&s)?;
        for xs in choices(&fibers, &ty.inputs) {
            if out.len() >= cap {
                return Ok(out);
            }
            let mut args = vec![s.clone()];
            args.extend(xs);
            out.anchors
                .insert(Term::app(tag::STAR, args), ty.output.clone());
        }
    }
    Ok(out)
}

fn split_star(t: &Term) -> Result<(&Term, &[Term])> {
    let args = t.expect_app(tag::STAR)?;
    Ok((&args[0], &args[1..]))
}

fn star_term(head: Term, xs: impl IntoIterator<Item = Term>) -> Term {
    let mut args = vec![head];
    args.extend(xs);
    Term::app(tag::STAR, args)
}

/// `f⋆X: (a, x_1..x_k) ↦ (f(a), x_{σ⁻¹(1)}..x_{σ⁻¹(k)})`.
pub fn star_map(f: &Arrow, t: &Term) -> Result<Term> {
    let (a, xs) = split_star(t)?;
    let (b, sigma) = f.apply(a)?;
    if sigma.len() != xs.len() {
        return Err(Error::Composability(format!(
            "{t}: amalgamation has the wrong size"
        )));
    }
    Ok(star_term(b, sigma.permute(xs)))
}

/// The associator `A⋆(B⋆X) → (A⊗B)⋆X`.
pub fn star_assoc(t: &Term) -> Result<Term> {
    let (a, inner) = split_star(t)?;
    let mut heads = vec![a.clone()];
    let mut xs = Vec::new();
    for e in inner {
        let (b, ys) = split_star(e)?;
        heads.push(b.clone());
        xs.extend(ys.iter().cloned());
    }
    Ok(star_term(Term::app(tag::TENSOR, heads), xs))
}

/// `A⋆X = U(A⊗X̄)`, `I⋆X ≅ X` and `A⋆(B⋆X) ≅ (A⊗B)⋆X` over the listed elements.
pub fn check_action(m: &Arc<dyn Monoid>, a: &Obj, b: &Obj, x: &OverSet, cap: usize) -> Report {
    let mut report = Report::new("the action ⋆").bound("cap", cap);
    let xbar = Obj::base(sterile(x));

    report.push(same_set(
        "A⋆X = U(A⊗X̄)",
        star(a, x, cap),
        underlying(&Obj::tensor(a.clone(), xbar), cap).and_then(|u| {
            rename(&u, |t| {
                let (h, xs) = t
                    .expect_app(tag::TENSOR)
                    .map(|args| (args[0].clone(), args[1..].to_vec()))?;
                Ok(star_term(h, xs))
            })
        }),
    ));

    let unit = Obj::unit_tensor_over(m);
    report.push(same_set(
        "I⋆X ≅ X",
        star(&unit, x, cap).and_then(|s| {
            rename(&s, |t| {
                let (_, xs) = split_star(t)?;
                Ok(xs[0].clone())
            })
        }),
        Ok(x.clone()),
    ));

    let bx = star(b, x, cap);
    report.push(same_set(
        "A⋆(B⋆X) ≅ (A⊗B)⋆X",
        bx.and_then(|bx| star(a, &bx, cap))
            .and_then(|s| rename(&s, star_assoc)),
        star(&Obj::tensor(a.clone(), b.clone()), x, cap),
    ));
    report
}

fn rename(s: &OverSet, f: impl Fn(&Term) -> Result<Term>) -> Result<OverSet> {
    let mut out = OverSet::default();
    for (x, d) in &s.anchors {
        let y = f(x)?;
        if out.anchors.insert(y.clone(), d.clone()).is_some() {
            return Err(Error::Structural(format!("{y} is hit twice")));
        }
    }
    Ok(out)
}

/// Both sides must list the same elements with the same anchors.
fn same_set(law: &str, lhs: Result<OverSet>, rhs: Result<OverSet>) -> LawResult {
    let (lhs, rhs) = match (lhs, rhs) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e), _) | (_, Err(e)) => return LawResult::fail(law, 0, e.to_string()),
    };
    let n = lhs.len().max(rhs.len());
    for (x, d) in &lhs.anchors {
        match rhs.anchors.get(x) {
            None => return LawResult::fail(law, n, format!("{x} only on the left")),
            Some(e) if e != d => {
                return LawResult::fail(law, n, format!("{x} anchored at {d} vs {e}"))
            }
            _ => {}
        }
    }
    if let Some(x) = rhs.anchors.keys().find(|x| !lhs.anchors.contains_key(*x)) {
        return LawResult::fail(law, n, format!("{x} only on the right"));
    }
    LawResult::pass(law, n)
}

// ---------------------------------------------------------------------------
// Factorization.

/// `f = g∘ζ_f` with `ζ_f: A → A[f]` the identity on symbols carrying `σ`, and
/// `g: A[f] → B` strict. `A[f]` types `a` by `∂^A(a)∘σ_a⁻¹`.
pub fn factorize(f: &SigMorphism) -> Result<(SigMorphism, SigMorphism)> {
    let mut af = Signature::new(f.dom.types.iter().cloned());
    for (a, ty) in &f.dom.symbols {
        let s = f.amalgamation(a)?;
        af.symbols.insert(
            a.clone(),
            Typing::new(ty.output.clone(), s.permute(&ty.inputs)),
        );
    }
    let af = Arc::new(af);
    let zeta = SigMorphism {
        dom: f.dom.clone(),
        cod: af.clone(),
        symbol_map: f
            .dom
            .symbols
            .keys()
            .map(|a| (a.clone(), a.clone()))
            .collect(),
        type_map: f.dom.types.iter().map(|t| (t.clone(), t.clone())).collect(),
        sigma: f.sigma.clone(),
    };
    let g = SigMorphism {
        dom: af.clone(),
        cod: f.cod.clone(),
        symbol_map: f.symbol_map.clone(),
        type_map: f.type_map.clone(),
        sigma: af
            .symbols
            .iter()
            .map(|(a, ty)| (a.clone(), Permutation::identity(ty.arity())))
            .collect(),
    };
    Ok((zeta, g))
}

pub fn check_factorization(f: &SigMorphism) -> Report {
    let mut report = Report::new("factorization f = g∘ζ_f");
    let (zeta, g) = match factorize(f) {
        Ok(p) => p,
        Err(e) => {
            report.push(LawResult::fail("factorization exists", 0, e.to_string()));
            return report;
        }
    };
    let n = f.dom.symbols.len();
    let valid = |law: &str, m: &SigMorphism| match validate_morphism(m).first() {
        None => LawResult::pass(law, n),
        Some(d) => LawResult::fail(law, n, d.clone()),
    };
    report.push(valid("ζ_f is a morphism", &zeta));
    report.push(valid("g is a morphism", &g));
    report.push(if g.is_strict() {
        LawResult::pass("g is strict", n)
    } else {
        LawResult::fail("g is strict", n, "nontrivial amalgamation")
    });
    report.push(match g.after(&zeta) {
        Ok(h) if h == *f => LawResult::pass("g∘ζ_f = f", n),
        Ok(_) => LawResult::fail("g∘ζ_f = f", n, "composite differs from f"),
        Err(e) => LawResult::fail("g∘ζ_f = f", n, e.to_string()),
    });
    report
}

/// The factorization of a homomorphism `h: M → N`: the monoid `M[h]` transported
/// along `ζ`, the isomorphism `ζ: M → M[h]` and the strict `g: M[h] → N`.
pub fn factorize_hom(m: &MonoidSig, h: &MonoidHom) -> Result<(MonoidSig, MonoidHom, MonoidHom)> {
    let md: Arc<dyn Monoid> = Arc::new(m.clone());
    let mut sigmas = BTreeMap::new();
    let mut carrier = Signature::new(m.carrier.types.iter().cloned());
    for (a, ty) in &m.carrier.symbols {
        let (_, s) = h.apply(a)?;
        carrier.symbols.insert(
            a.clone(),
            Typing::new(ty.output.clone(), s.permute(&ty.inputs)),
        );
        sigmas.insert(a.clone(), s);
    }
    // M[h]-argument j sits on M-input σ_a⁻¹(j); γ' = σ_c∘γ∘(σ_a⁻¹∗(σ_{b_j}⁻¹)).
    let base = md.clone();
    let ss = sigmas.clone();
    let mh = MonoidSig::from_rule(
        &format!("{}[{}]", m.name, h.name),
        carrier,
        m.unit.clone(),
        move |a, args| {
            let sa = &ss[a];
            let margs: Vec<Term> = (1..=args.len())
                .map(|i| args[sa.apply(i) - 1].clone())
                .collect();
            let (c, gamma) = base.mult(a, &margs)?;
            let inner: Vec<Permutation> = args.iter().map(|b| ss[b].inverse()).collect();
            let p = compose_blocks(&sa.inverse(), &inner)?;
            Ok((c.clone(), ss[&c].compose(&gamma.compose(&p)?)?))
        },
    )?;
    let mh_arc: Arc<dyn Monoid> = Arc::new(mh.clone());
    let zs = sigmas.clone();
    let zeta = MonoidHom {
        name: "ζ".into(),
        dom: md.clone(),
        cod: mh_arc.clone(),
        map: Arc::new(move |x| {
            zs.get(x)
                .map(|s| (x.clone(), s.clone()))
                .ok_or_else(|| Error::Structural(format!("{x} is not a symbol")))
        }),
        type_map: Arc::new(|t| t.clone()),
    };
    let hm = h.map.clone();
    let g = MonoidHom {
        name: "g".into(),
        dom: mh_arc,
        cod: h.cod.clone(),
        map: Arc::new(move |x| {
            let (y, s) = hm(x)?;
            Ok((y, Permutation::identity(s.len())))
        }),
        type_map: h.type_map.clone(),
    };
    Ok((mh, zeta, g))
}

/// `M[h]` is a monoid, `ζ` and `g` are homomorphisms and `g` is strict.
pub fn check_hom_factorization(m: &MonoidSig, h: &MonoidHom, cap: usize) -> Report {
    let mut report = Report::new(format!("factorization of {}", h.name)).bound("cap", cap);
    let (mh, zeta, g) = match factorize_hom(m, h) {
        Ok(t) => t,
        Err(e) => {
            report.push(LawResult::fail("factorization exists", 0, e.to_string()));
            return report;
        }
    };
    let mh: Arc<dyn Monoid> = Arc::new(mh);
    fn lift(prefix: &str, r: Report) -> Vec<LawResult> {
        r.results
            .into_iter()
            .map(|mut l| {
                l.law = format!("{prefix}: {}", l.law);
                l
            })
            .collect()
    }
    let mut all = lift("M[h]", validate_monoid(&mh, cap));
    all.extend(lift("ζ", validate_hom(&zeta, cap)));
    all.extend(lift("g", validate_hom(&g, cap)));
    for l in all {
        report.push(l);
    }
    let syms = m.enumerate(cap);
    report.push(check_all("g is strict and g∘ζ = h", &syms, |a| {
        let (z, s) = zeta.apply(a).map_err(|e| e.to_string())?;
        let (y, r) = g.apply(&z).map_err(|e| e.to_string())?;
        let want = h.apply(a).map_err(|e| e.to_string())?;
        if !r.is_identity() {
            return Err(format!("g has amalgamation {r:?} at {z}"));
        }
        let got = (y, r.compose(&s).map_err(|e| e.to_string())?);
        if got == want {
            Ok(())
        } else {
            Err(format!("{a}: {got:?} vs {want:?}"))
        }
    }));
    report
}

// ---------------------------------------------------------------------------
// The transported tensor on Set/M.

/// `A⊗B`: `⟨a, b_1..b_k⟩` with `b_i` on the `i`-th input of `d(a)`, anchored at
/// `μ(d(a); d(b_1)..d(b_k))`.
pub fn tensor_over(m: &dyn Monoid, a: &OverSet, b: &OverSet, cap: usize) -> Result<OverSet> {
    let mut by_out: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
    for (y, d) in &b.anchors {
        let t = m
            .typing(d)
            .ok_or_else(|| Error::Structural(format!("{d} is not in {}", m.name())))?;
        by_out.entry(t.output).or_default().push(y.clone());
    }
    let mut out = OverSet::default();
    for (x, d) in &a.anchors {
        let t = m
            .typing(d)
            .ok_or_else(|| Error::Structural(format!("{d} is not in {}", m.name())))?;
        for ys in choices(&by_out, &t.inputs) {
            if out.len() >= cap {
                return Ok(out);
            }
            let ds: Vec<Term> = ys.iter().map(|y| b.anchors[y].clone()).collect();
            let (c, _) = m.mult(d, &ds)?;
            let mut args = vec![x.clone()];
            args.extend(ys);
            out.anchors.insert(Term::app(tag::SLICE, args), c);
        }
    }
    Ok(out)
}

/// `I⊗`: `1_o` anchored at the unit of `o`.
pub fn unit_over(m: &dyn Monoid) -> Result<OverSet> {
    m.types()
        .into_iter()
        .map(|o| Ok((Term::app(tag::SLICE_UNIT, vec![o.clone()]), m.unit(&o)?)))
        .collect::<Result<_>>()
        .map(|anchors| OverSet { anchors })
}

fn split_slice(t: &Term) -> Result<(&Term, &[Term])> {
    let args = t.expect_app(tag::SLICE)?;
    Ok((&args[0], &args[1..]))
}

fn slice_term(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
    let mut v = vec![head];
    v.extend(args);
    Term::app(tag::SLICE, v)
}

/// `α: A⊗(B⊗C) → (A⊗B)⊗C`, `⟨a,⟨b_i,c_ij⟩⟩ ↦ ⟨⟨a,b_i⟩, c_{γ⁻¹(i,j)}⟩`.
pub fn alpha_over(m: &dyn Monoid, a: &OverSet, b: &OverSet, t: &Term) -> Result<Term> {
    let (x, inner) = split_slice(t)?;
    let mut bs = Vec::with_capacity(inner.len());
    let mut cs = Vec::new();
    for e in inner {
        let (y, zs) = split_slice(e)?;
        bs.push(y.clone());
        cs.extend(zs.iter().cloned());
    }
    let ds = bs
        .iter()
        .map(|y| b.anchor(y).cloned())
        .collect::<Result<Vec<_>>>()?;
    let (_, gamma) = m.mult(a.anchor(x)?, &ds)?;
    if gamma.len() != cs.len() {
        return Err(Error::Composability(format!(
            "{t}: γ acts on {} points",
            gamma.len()
        )));
    }
    Ok(slice_term(slice_term(x.clone(), bs), gamma.permute(&cs)))
}

/// `λ: I⊗A → A`.
pub fn lambda_over(t: &Term) -> Result<Term> {
    let (u, xs) = split_slice(t)?;
    u.expect_app(tag::SLICE_UNIT)?;
    match xs {
        [x] => Ok(x.clone()),
        _ => Err(Error::Composability(format!("{t} is not ⟨1, a⟩"))),
    }
}

/// `ρ: A⊗I → A`.
pub fn rho_over(t: &Term) -> Result<Term> {
    let (x, us) = split_slice(t)?;
    for u in us {
        u.expect_app(tag::SLICE_UNIT)?;
    }
    Ok(x.clone())
}

/// `f⊗g` for maps of sets over `M`.
pub fn tensor_map(
    f: impl Fn(&Term) -> Result<Term>,
    g: impl Fn(&Term) -> Result<Term>,
    t: &Term,
) -> Result<Term> {
    let (x, ys) = split_slice(t)?;
    Ok(slice_term(
        f(x)?,
        ys.iter().map(g).collect::<Result<Vec<_>>>()?,
    ))
}

fn ok(t: &Term) -> Result<Term> {
    Ok(t.clone())
}

fn equal_maps(
    law: &str,
    elems: &OverSet,
    lhs: impl Fn(&Term) -> Result<Term>,
    rhs: impl Fn(&Term) -> Result<Term>,
) -> LawResult {
    check_all(law, elems.elements(), |t| {
        let l = lhs(t).map_err(|e| format!("{t}: {e}"))?;
        let r = rhs(t).map_err(|e| format!("{t}: {e}"))?;
        if l == r {
            Ok(())
        } else {
            Err(format!("{t}: {l} vs {r}"))
        }
    })
}

/// Pentagon, triangle and unit laws of the transported tensor, plus α being an
/// anchor-preserving bijection, over `A, B, C, D`.
pub fn check_transported(m: &dyn Monoid, sets: [&OverSet; 4], cap: usize) -> Result<Report> {
    let [a, b, c, d] = sets;
    let mut report = Report::new(format!("transported ⊗ over {}", m.name())).bound("cap", cap);
    let t = |x: &OverSet, y: &OverSet| tensor_over(m, x, y, cap);
    let (ab, bc, cd) = (t(a, b)?, t(b, c)?, t(c, d)?);

    let lhs = t(a, &bc)?;
    let rhs = t(&ab, c)?;
    report.push(same_set(
        "α is a bijection over M",
        rename(&lhs, |x| alpha_over(m, a, b, x)),
        Ok(rhs),
    ));

    let dom = t(a, &t(b, &cd)?)?;
    report.push(equal_maps(
        "pentagon",
        &dom,
        |x| alpha_over(m, &ab, c, &alpha_over(m, a, b, x)?),
        |x| {
            let y = tensor_map(ok, |z| alpha_over(m, b, c, z), x)?;
            let y = alpha_over(m, a, &bc, &y)?;
            tensor_map(|z| alpha_over(m, a, b, z), ok, &y)
        },
    ));

    let unit = unit_over(m)?;
    let aib = t(a, &t(&unit, b)?)?;
    report.push(equal_maps(
        "triangle (ρ⊗1)∘α = 1⊗λ",
        &aib,
        |x| tensor_map(rho_over, ok, &alpha_over(m, a, &unit, x)?),
        |x| tensor_map(ok, lambda_over, x),
    ));
    report.push(same_set(
        "λ is a bijection over M",
        rename(&t(&unit, a)?, lambda_over),
        Ok(a.clone()),
    ));
    report.push(same_set(
        "ρ is a bijection over M",
        rename(&t(a, &unit)?, rho_over),
        Ok(a.clone()),
    ));
    Ok(report)
}

fn odot_to_slice(t: &Term) -> Term {
    match t.args_of(tag::ODOT) {
        Some(args) => Term::app(tag::SLICE, args.iter().map(odot_to_slice).collect()),
        None => match t.args_of(tag::ODOT_UNIT) {
            Some(args) => Term::app(tag::SLICE_UNIT, args.to_vec()),
            None => t.clone(),
        },
    }
}

/// `U(A⊙B) = U(A)⊗U(B)`, `U(I⊙) = I⊗` and `U(α⊙) = α⊗`.
pub fn check_underlying_monoidal(
    m: &Arc<dyn Monoid>,
    a: &Obj,
    b: &Obj,
    c: &Obj,
    cap: usize,
) -> Report {
    let mut report = Report::new("U is strict monoidal").bound("cap", cap);
    let u = |o: &Obj| underlying(o, cap);
    let renamed = |o: &Obj| u(o).and_then(|s| rename(&s, |t| Ok(odot_to_slice(t))));

    report.push(same_set(
        "U(A⊙B) = U(A)⊗U(B)",
        renamed(&Obj::odot(m, a.clone(), b.clone())),
        u(a).and_then(|ua| u(b).and_then(|ub| tensor_over(&**m, &ua, &ub, cap))),
    ));
    report.push(same_set(
        "U(I⊙) = I⊗",
        renamed(&Obj::unit_odot(m)),
        unit_over(&**m),
    ));

    let alpha = sigmamon::alpha_odot(m, a, b, c);
    let sets = u(a).and_then(|ua| Ok((ua, u(b)?)));
    report.push(match sets {
        Err(e) => LawResult::fail("U(α⊙) = α⊗", 0, e.to_string()),
        Ok((ua, ub)) => {
            let elems = alpha.dom.enumerate(cap);
            check_all("U(α⊙) = α⊗", &elems, |t| {
                // U forgets vertical inputs, so the amalgamation of α⊙ drops out.
                let (l, _) = alpha.apply(t).map_err(|e| e.to_string())?;
                let r = alpha_over(&**m, &ua, &ub, &odot_to_slice(t)).map_err(|e| e.to_string())?;
                if odot_to_slice(&l) == r {
                    Ok(())
                } else {
                    Err(format!("{t}: {l} vs {r}"))
                }
            })
        }
    });
    report
}

// ---------------------------------------------------------------------------
// φ for the action.

/// `φ: (A⋆X)⊗(B⋆X) → (A⊙B)⋆X`, regrouping the `x`-arguments in order.
pub fn phi_star(t: &Term) -> Result<Term> {
    let (first, rest) = split_slice(t)?;
    let (a, xs) = split_star(first)?;
    let mut heads = vec![a.clone()];
    let mut all: Vec<Term> = xs.to_vec();
    for e in rest {
        let (b, ys) = split_star(e)?;
        heads.push(b.clone());
        all.extend(ys.iter().cloned());
    }
    Ok(star_term(Term::app(tag::ODOT, heads), all))
}

/// `I⊙⋆X → I⊗`, `(1_o, −) ↦ 1_o`.
pub fn phi_star_unit(t: &Term) -> Result<Term> {
    let (u, xs) = split_star(t)?;
    let o = u.expect_app(tag::ODOT_UNIT)?;
    if !xs.is_empty() {
        return Err(Error::Composability(format!("{t} has x-arguments")));
    }
    Ok(Term::app(tag::SLICE_UNIT, o.to_vec()))
}

/// `φ` and its unit are anchor-preserving bijections, and
/// `a∘φ_{A,B,Y⋆X} = (φ_{A,B,Y}⋆X)∘φ_{A⊗Y,B⊗Y,X}∘(a⊗a)`.
pub fn check_phi_star(
    m: &Arc<dyn Monoid>,
    a: &Obj,
    b: &Obj,
    y: &Obj,
    x: &OverSet,
    cap: usize,
) -> Result<Report> {
    let mut report = Report::new("φ for the action").bound("cap", cap);
    let ax = star(a, x, cap)?;
    let bx = star(b, x, cap)?;
    let dom = tensor_over(&**m, &ax, &bx, cap)?;
    let cod = star(&Obj::odot(m, a.clone(), b.clone()), x, cap)?;
    report.push(same_set(
        "φ is a bijection over M",
        rename(&dom, phi_star),
        Ok(cod),
    ));
    report.push(same_set(
        "I⊙⋆X ≅ I⊗",
        star(&Obj::unit_odot(m), x, cap).and_then(|s| rename(&s, phi_star_unit)),
        unit_over(&**m),
    ));

    let yx = star(y, x, cap)?;
    let dom = tensor_over(&**m, &star(a, &yx, cap)?, &star(b, &yx, cap)?, cap)?;
    let phi_y = sigmamon::phi(m, a, b, y);
    report.push(equal_maps(
        "a∘φ = (φ⋆X)∘φ∘(a⊗a)",
        &dom,
        |t| star_assoc(&phi_star(t)?),
        |t| star_map(&phi_y, &phi_star(&tensor_map(star_assoc, star_assoc, t)?)?),
    ));
    Ok(report)
}

// ---------------------------------------------------------------------------
// F_⊗(X) and the comparison.

/// `F_⊗(X)` over `M`: trees of elements of `X` glued along `M`.
pub fn free_over(m: &Arc<dyn Monoid>, x: &OverSet) -> OdotContext {
    OdotContext::new(m, Obj::base(sterile(x)), usize::MAX)
}

/// `|X_{≤n}|` for `n = 0..=stages`.
pub fn stage_counts(m: &Arc<dyn Monoid>, x: &OverSet, stages: usize) -> Vec<usize> {
    let ctx = free_over(m, x);
    (0..=stages)
        .map(|n| freemon::enumerate(&ctx, n, usize::MAX).len())
        .collect()
}

/// Webs whose node labels all lie in `labels`, of stage at most `stage`.
fn webs_labelled_by(m: &Arc<dyn Monoid>, labels: &BTreeSet<Term>, stage: usize) -> Vec<Tree> {
    let mut s = Signature::new(labels.iter().cloned());
    for l in labels {
        s.symbols
            .insert(l.clone(), Typing::new(l.clone(), vec![l.clone()]));
    }
    freemon::enumerate(
        &OdotContext::new(m, Obj::base(s), usize::MAX),
        stage,
        usize::MAX,
    )
}

fn relabel(t: &Tree, labels: &mut impl Iterator<Item = Term>) -> Tree {
    match t {
        Tree::Unit(o) => Tree::Unit(o.clone()),
        Tree::Node(_, cs) => {
            let g = labels.next().expect("one label per node");
            Tree::Node(g, cs.iter().map(|c| relabel(c, labels)).collect())
        }
    }
}

/// `(w, x_1..x_k) ↦ w` with its `i`-th node (preorder) replaced by `x_i`.
pub fn to_free(w: &Tree, xs: &[Term]) -> Result<Tree> {
    if w.nodes() != xs.len() {
        return Err(Error::Composability(format!(
            "{w} has {} nodes, not {}",
            w.nodes(),
            xs.len()
        )));
    }
    Ok(relabel(w, &mut xs.iter().cloned()))
}

/// `W(M)⋆X` of stage at most `stage`, as pairs `(w, xs)`.
pub fn web_star(
    m: &Arc<dyn Monoid>,
    x: &OverSet,
    stage: usize,
    cap: usize,
) -> Vec<(Tree, Vec<Term>)> {
    let fibers = x.fibers();
    let labels: BTreeSet<Term> = fibers.keys().cloned().collect();
    let mut out = Vec::new();
    for w in webs_labelled_by(m, &labels, stage) {
        for xs in choices(&fibers, &w.labels()) {
            if out.len() >= cap {
                return out;
            }
            out.push((w.clone(), xs));
        }
    }
    out
}

/// The monad multiplication of `F_⊗`: substitute each node's tree into its parent.
pub fn flatten(ctx: &OdotContext, nested: &Tree, inner: &BTreeMap<Term, Tree>) -> Result<Tree> {
    match nested {
        Tree::Unit(o) => Ok(Tree::Unit(o.clone())),
        Tree::Node(g, cs) => {
            let t = inner
                .get(g)
                .ok_or_else(|| Error::Structural(format!("{g} names no inner tree")))?;
            let cs = cs
                .iter()
                .map(|c| flatten(ctx, c, inner))
                .collect::<Result<Vec<_>>>()?;
            Ok(eval_mu(ctx, t, &cs)?.0)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageSize {
    pub stage: usize,
    pub web_star: usize,
    pub free: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub monoid: String,
    pub x: OverSet,
    pub stages: Vec<StageSize>,
    pub report: Report,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Checks `Φ: W(M)⋆X ≅ F_⊗(X)` stage by stage up to `stages`, that `Φ` preserves
/// anchors and units, and that it carries `ν⋆X∘a` to the multiplication of `F_⊗`.
///
/// The multiplication is checked on outer webs of stage at most 2 whose nodes carry
/// elements of stage at most `stages − 1`, listing at most `cap` of them.
pub fn compare(m: &Arc<dyn Monoid>, x: &OverSet, stages: usize, cap: usize) -> Result<Comparison> {
    let webs = Webs::new(m);
    let ctx = free_over(m, x);
    let mut report = Report::new(format!("W({})⋆X ≅ F_⊗(X)", m.name()))
        .bound("stages", stages)
        .bound("|X|", x.len())
        .bound("cap", cap);

    let elems = web_star(m, x, stages, usize::MAX);
    let free = freemon::enumerate(&ctx, stages, usize::MAX);
    let mut sizes = Vec::new();
    let mut bijective = LawResult::pass("Φ is a bijection at each stage", 0);
    for n in 0..=stages {
        let mut image = BTreeSet::new();
        let mut count = 0;
        for (w, xs) in elems.iter().filter(|(w, _)| w.stage() == n) {
            image.insert(to_free(w, xs)?);
            count += 1;
        }
        let target: BTreeSet<Tree> = free.iter().filter(|t| t.stage() == n).cloned().collect();
        sizes.push(StageSize {
            stage: n,
            web_star: count,
            free: target.len(),
        });
        bijective.checked += count;
        if bijective.passed && (image.len() != count || image != target) {
            let witness = target
                .symmetric_difference(&image)
                .next()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "Φ is not injective".into());
            bijective = LawResult::fail(
                bijective.law.clone(),
                bijective.checked,
                format!("stage {n}: {witness}"),
            );
        }
    }
    report.push(bijective);

    report.push(check_all("Φ preserves anchors", &elems, |(w, xs)| {
        let t = to_free(w, xs).map_err(|e| e.to_string())?;
        let l = webs.composite(w).map_err(|e| e.to_string())?;
        let r = freemon::value(&ctx, &t).map_err(|e| e.to_string())?;
        if l == r {
            Ok(())
        } else {
            Err(format!("{w}: {l} vs {r}"))
        }
    }));

    report.push(check_all(
        "Φ∘(η⋆X) = η",
        x.anchors.iter(),
        |(e, d)| {
            let w = webs.eta(d).map_err(|e| e.to_string())?;
            let l = to_free(&w, std::slice::from_ref(*e)).map_err(|e| e.to_string())?;
            let r = freemon::corolla(&ctx, e).map_err(|e| e.to_string())?;
            if l == r {
                Ok(())
            } else {
                Err(format!("{e}: {l} vs {r}"))
            }
        },
    ));

    // W⋆(W⋆X): outer webs labelled by anchors of inner elements.
    let inner_elems: Vec<(Tree, Vec<Term>)> = elems
        .iter()
        .filter(|(w, _)| w.stage() < stages.max(1))
        .cloned()
        .collect();
    let mut inner_set = OverSet::default();
    let mut inner_of = BTreeMap::new();
    for (w, xs) in &inner_elems {
        let key = star_term(w.to_term(), xs.iter().cloned());
        inner_set.anchors.insert(key.clone(), webs.composite(w)?);
        inner_of.insert(key, (w.clone(), xs.clone()));
    }
    let nested = web_star(m, &inner_set, stages.min(2), cap);
    report.push(check_all(
        "Φ∘(ν⋆X)∘a = μ∘Φ(Φ)",
        &nested,
        |(w, es)| {
            let run = || -> Result<(Tree, Tree)> {
                let mut vs = Vec::with_capacity(es.len());
                let mut flat = Vec::new();
                let mut trees = BTreeMap::new();
                for e in es {
                    let (v, xs) = &inner_of[e];
                    vs.push(v.clone());
                    flat.extend(xs.iter().cloned());
                    trees.insert(e.clone(), to_free(v, xs)?);
                }
                let r = webs.nu(w, &vs)?;
                let lhs = to_free(&r.web, &r.amalgamation.permute(&flat))?;
                let rhs = flatten(&ctx, &to_free(w, es)?, &trees)?;
                Ok((lhs, rhs))
            };
            match run() {
                Ok((l, r)) if l == r => Ok(()),
                Ok((l, r)) => Err(format!("{w} over {es:?}: {l} vs {r}")),
                Err(e) => Err(format!("{w}: {e}")),
            }
        },
    ));

    Ok(Comparison {
        monoid: m.name(),
        x: x.clone(),
        stages: sizes,
        report,
    })
}

/// `h_!X`: the same set anchored through `h`.
pub fn push_forward(h: &MonoidHom, x: &OverSet) -> Result<OverSet> {
    x.anchors
        .iter()
        .map(|(e, d)| Ok((e.clone(), h.apply(d)?.0)))
        .collect::<Result<_>>()
        .map(|anchors| OverSet { anchors })
}

/// The collapse `M → arities`, sending each symbol to its arity.
pub fn arity_collapse(m: &Arc<dyn Monoid>) -> MonoidHom {
    let mm = m.clone();
    MonoidHom {
        name: "arity".into(),
        dom: m.clone(),
        cod: Arc::new(crate::fixtures::Arities {
            max: max_arity(&**m),
        }),
        map: Arc::new(move |x| {
            let n = mm
                .typing(x)
                .ok_or_else(|| Error::Structural(format!("{x} is not a symbol")))?
                .arity();
            Ok((Term::nat(n), Permutation::identity(n)))
        }),
        type_map: Arc::new(|_| Term::atom("*")),
    }
}

fn max_arity(m: &dyn Monoid) -> usize {
    m.enumerate(usize::MAX)
        .iter()
        .filter_map(|s| m.typing(s))
        .map(|t| t.arity())
        .max()
        .unwrap_or(0)
}

/// Naturality of `Φ` along `h: M → N`: `Φ_N∘(W(h)⋆X) = F(h)∘Φ_M` on `W(M)⋆X`.
pub fn check_naturality(h: &MonoidHom, x: &OverSet, stages: usize, cap: usize) -> Result<Report> {
    let mut report = Report::new(format!("naturality of Φ along {}", h.name))
        .bound("stages", stages)
        .bound("cap", cap);
    let (wm, wn) = (Webs::new(&h.dom), Webs::new(&h.cod));
    let hx = push_forward(h, x)?;
    let cod = free_over(&h.cod, &hx);
    let node = |g: &Term| {
        let (_, sigma) = h.apply(x.anchor(g)?)?;
        Ok((g.clone(), Permutation::identity(0), sigma))
    };
    let ty = |o: &Term| (h.type_map)(o);
    let elems = web_star(&h.dom, x, stages, cap);
    report.push(check_all(
        "Φ∘(W(h)⋆X) = F(h)∘Φ",
        &elems,
        |(w, xs)| {
            let run = || -> Result<(Tree, Tree)> {
                let (w2, pi) = wm.map(h, &wn, w)?;
                let lhs = to_free(&w2, &pi.permute(xs))?;
                let (rhs, _) = freemon::map_tree(&cod, &to_free(w, xs)?, &node, &ty)?;
                Ok((lhs, rhs))
            };
            match run() {
                Ok((l, r)) if l == r => Ok(()),
                Ok((l, r)) => Err(format!("{w} {xs:?}: {l} vs {r}")),
                Err(e) => Err(format!("{w}: {e}")),
            }
        },
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m_twist, three_type, Arities};
    use crate::gen::{random_msig_object, random_twist_sigmas, rng, twist_automorphism};

    fn ac() -> Arc<dyn Monoid> {
        three_type().shared()
    }

    #[test]
    fn binary_trees_over_the_arity_monoid() {
        let m: Arc<dyn Monoid> = Arc::new(Arities { max: 3 });
        let x = OverSet::new([(Term::atom("x"), Term::nat(2))]);
        assert_eq!(stage_counts(&m, &x, 3), vec![1, 2, 5, 26]);
    }

    #[test]
    fn spread_skips_units() {
        let x = OverSet::spread(&*ac(), 2).unwrap();
        let anchors: Vec<String> = x.anchors.values().map(|t| t.to_string()).collect();
        assert_eq!(anchors, ["b", "s"]);
    }

    #[test]
    fn action_laws() {
        let m = ac();
        let mut r = rng(7);
        let a = Obj::base(random_msig_object(&mut r, &m, "a", 2));
        let b = Obj::base(random_msig_object(&mut r, &m, "b", 1));
        let x = OverSet::spread(&*m, 3).unwrap();
        let report = check_action(&m, &a, &b, &x, 10_000);
        assert!(report.passed(), "{report:?}");
        assert!(report.results.iter().all(|l| l.checked > 0));
    }

    #[test]
    fn factorization_of_a_random_morphism() {
        let mut r = rng(3);
        let s = Arc::new(crate::gen::random_signature(&mut r));
        let f = crate::gen::random_morphism(&mut r, &s, "'");
        let report = check_factorization(&f);
        assert!(report.passed(), "{report:?}");
        let (zeta, _) = factorize(&SigMorphism::identity(&s)).unwrap();
        assert_eq!(zeta, SigMorphism::identity(&s));
    }

    #[test]
    fn factorization_of_a_twist_automorphism() {
        let m = m_twist();
        let shared = m.clone().shared();
        let mut r = rng(11);
        let h = twist_automorphism(&shared, random_twist_sigmas(&mut r, &m));
        let report = check_hom_factorization(&m, &h, 10_000);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn transported_tensor_laws() {
        for m in [ac(), m_twist().shared()] {
            let x = OverSet::spread(&*m, 2).unwrap();
            let y = OverSet::spread(&*m, 3).unwrap();
            let units = unit_over(&*m).unwrap();
            let mixed = OverSet::new(x.anchors.clone().into_iter().chain(units.anchors));
            let report = check_transported(&*m, [&mixed, &y, &mixed, &x], 20_000).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn underlying_is_strict_monoidal() {
        let m = m_twist().shared();
        let mut r = rng(5);
        let objs: Vec<Obj> = ["a", "b", "c"]
            .iter()
            .map(|p| Obj::base(random_msig_object(&mut r, &m, p, 1)))
            .collect();
        let report = check_underlying_monoidal(&m, &objs[0], &objs[1], &objs[2], 5_000);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn phi_for_the_action() {
        let m = ac();
        let mut r = rng(9);
        let a = Obj::base(random_msig_object(&mut r, &m, "a", 1));
        let b = Obj::base(random_msig_object(&mut r, &m, "b", 1));
        let y = Obj::base(random_msig_object(&mut r, &m, "y", 1));
        let x = OverSet::spread(&*m, 2).unwrap();
        let report = check_phi_star(&m, &a, &b, &y, &x, 5_000).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn comparison_on_three_type() {
        let m = ac();
        let x = OverSet::spread(&*m, 2).unwrap();
        let c = compare(&m, &x, 2, 2_000).unwrap();
        assert!(c.passed(), "{:?}", c.report);
        assert!(
            c.report.results.iter().all(|l| l.checked > 0),
            "{:?}",
            c.report
        );
    }

    #[test]
    fn naturality() {
        let m = ac();
        let h = arity_collapse(&m);
        assert!(validate_hom(&h, 10_000).passed());
        let x = OverSet::spread(&*m, 2).unwrap();
        let report = check_naturality(&h, &x, 3, 10_000).unwrap();
        assert!(report.passed(), "{report:?}");

        let mt = m_twist();
        let shared = mt.clone().shared();
        let h = twist_automorphism(&shared, random_twist_sigmas(&mut rng(2), &mt));
        let x = OverSet::spread(&*shared, 3).unwrap();
        let report = check_naturality(&h, &x, 3, 10_000).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.results[0].checked > 10);
    }

    #[test]
    fn comparison_with_nontrivial_gamma() {
        let m = m_twist().shared();
        let x = OverSet::spread(&*m, 2).unwrap();
        let c = compare(&m, &x, 2, 2_000).unwrap();
        assert!(c.passed(), "{:?}", c.report);
    }
}
