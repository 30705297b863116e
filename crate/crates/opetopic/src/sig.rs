//! Signatures with amalgamation and the ⊗ monoidal structure on them.
//!
//! Finite signatures are plain data ([`Signature`], [`SigMorphism`]). Law checks
//! that range over composite or infinite objects use the lazy layer: an [`Obj`] is
//! an expression built from base objects with ⊗, ⊙, units and coproducts, and an
//! [`Arrow`] is a symbol-wise computable morphism between two such expressions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{compose_blocks, Permutation};
use crate::sigmamon::Monoid;
use crate::term::{tag, Term};

/// Output type and ordered input types of a function symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Typing {
    #[serde(rename = "out")]
    pub output: Term,
    #[serde(rename = "in")]
    pub inputs: Vec<Term>,
}

impl Typing {
    pub fn new(output: Term, inputs: Vec<Term>) -> Self {
        Typing { output, inputs }
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }
}

impl fmt::Display for Typing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};", self.output)?;
        for (i, t) in self.inputs.iter().enumerate() {
            write!(f, "{}{t}", if i == 0 { " " } else { ", " })?;
        }
        write!(f, ")")
    }
}

/// A finite signature: typed function symbols over a finite type set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub types: BTreeSet<Term>,
    pub symbols: BTreeMap<Term, Typing>,
}

impl Signature {
    pub fn new(types: impl IntoIterator<Item = Term>) -> Self {
        Signature {
            types: types.into_iter().collect(),
            symbols: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, output: &str, inputs: &[&str]) -> Self {
        self.symbols.insert(
            Term::parse(name).expect("symbol name"),
            Typing::new(Term::atom(output), inputs.iter().map(Term::atom).collect()),
        );
        self
    }

    pub fn typing(&self, a: &Term) -> Result<&Typing> {
        self.symbols
            .get(a)
            .ok_or_else(|| Error::Structural(format!("unknown symbol {a}")))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("signature serializes")
    }
}

/// Lists every violated signature invariant; empty means valid.
pub fn validate_signature(s: &Signature) -> Vec<String> {
    let mut diags = Vec::new();
    for (a, ty) in &s.symbols {
        for (slot, t) in std::iter::once(&ty.output).chain(&ty.inputs).enumerate() {
            if !s.types.contains(t) {
                diags.push(format!("symbol {a}: unknown type {t} at slot {slot}"));
            }
        }
    }
    diags
}

/// A morphism `(f, σ, u)` of signatures with amalgamation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigMorphism {
    pub dom: Arc<Signature>,
    pub cod: Arc<Signature>,
    pub symbol_map: BTreeMap<Term, Term>,
    pub type_map: BTreeMap<Term, Term>,
    pub sigma: BTreeMap<Term, Permutation>,
}

#[derive(Serialize, Deserialize)]
struct MorphismJson {
    u: BTreeMap<Term, Term>,
    f: BTreeMap<Term, Term>,
    sigma: BTreeMap<Term, Permutation>,
}

impl SigMorphism {
    pub fn identity(s: &Arc<Signature>) -> Self {
        SigMorphism {
            dom: s.clone(),
            cod: s.clone(),
            symbol_map: s.symbols.keys().map(|a| (a.clone(), a.clone())).collect(),
            type_map: s.types.iter().map(|t| (t.clone(), t.clone())).collect(),
            sigma: s
                .symbols
                .iter()
                .map(|(a, ty)| (a.clone(), Permutation::identity(ty.arity())))
                .collect(),
        }
    }

    pub fn map_symbol(&self, a: &Term) -> Result<&Term> {
        self.symbol_map
            .get(a)
            .ok_or_else(|| Error::Structural(format!("morphism undefined on symbol {a}")))
    }

    pub fn map_type(&self, t: &Term) -> Result<&Term> {
        self.type_map
            .get(t)
            .ok_or_else(|| Error::Structural(format!("morphism undefined on type {t}")))
    }

    pub fn amalgamation(&self, a: &Term) -> Result<&Permutation> {
        self.sigma
            .get(a)
            .ok_or_else(|| Error::Structural(format!("no amalgamation for symbol {a}")))
    }

    /// `self ∘ first`, with amalgamations `θ_{f(a)} ∘ σ_a`.
    pub fn after(&self, first: &SigMorphism) -> Result<SigMorphism> {
        let mut symbol_map = BTreeMap::new();
        let mut sigma = BTreeMap::new();
        for a in first.dom.symbols.keys() {
            let fa = first.map_symbol(a)?;
            symbol_map.insert(a.clone(), self.map_symbol(fa)?.clone());
            sigma.insert(
                a.clone(),
                self.amalgamation(fa)?.compose(first.amalgamation(a)?)?,
            );
        }
        let mut type_map = BTreeMap::new();
        for t in &first.dom.types {
            type_map.insert(t.clone(), self.map_type(first.map_type(t)?)?.clone());
        }
        Ok(SigMorphism {
            dom: first.dom.clone(),
            cod: self.cod.clone(),
            symbol_map,
            type_map,
            sigma,
        })
    }

    /// Strict morphisms have identity amalgamation everywhere.
    pub fn is_strict(&self) -> bool {
        self.sigma.values().all(Permutation::is_identity)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MorphismJson {
            u: self.type_map.clone(),
            f: self.symbol_map.clone(),
            sigma: self.sigma.clone(),
        })
        .expect("morphism serializes")
    }

    pub fn from_json(
        v: &serde_json::Value,
        dom: Arc<Signature>,
        cod: Arc<Signature>,
    ) -> Result<SigMorphism> {
        let m: MorphismJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(SigMorphism {
            dom,
            cod,
            symbol_map: m.f,
            type_map: m.u,
            sigma: m.sigma,
        })
    }
}

/// Checks totality and the commuting square `u∂_a(i) = ∂_{f(a)}(σ_a(i))`.
pub fn validate_morphism(m: &SigMorphism) -> Vec<String> {
    let mut diags = Vec::new();
    for t in &m.dom.types {
        match m.type_map.get(t) {
            None => diags.push(format!("type {t} is not mapped")),
            Some(u) if !m.cod.types.contains(u) => diags.push(format!(
                "type {t} maps to {u}, which is not a codomain type"
            )),
            _ => {}
        }
    }
    for (a, ty) in &m.dom.symbols {
        let Some(fa) = m.symbol_map.get(a) else {
            diags.push(format!("symbol {a} is not mapped"));
            continue;
        };
        let Some(fty) = m.cod.symbols.get(fa) else {
            diags.push(format!(
                "symbol {a} maps to {fa}, which is not a codomain symbol"
            ));
            continue;
        };
        let Some(s) = m.sigma.get(a) else {
            diags.push(format!("symbol {a} has no amalgamation"));
            continue;
        };
        if s.len() != ty.arity() || fty.arity() != ty.arity() {
            diags.push(format!(
                "symbol {a}: arity {} but image {fa} has arity {} and σ acts on {} points",
                ty.arity(),
                fty.arity(),
                s.len()
            ));
            continue;
        }
        let u = |t: &Term| m.type_map.get(t).cloned();
        if u(&ty.output).as_ref() != Some(&fty.output) {
            diags.push(format!(
                "symbol {a}: output square fails ({} vs {})",
                ty.output, fty.output
            ));
        }
        for (i, t) in ty.inputs.iter().enumerate() {
            if u(t).as_ref() != Some(&fty.inputs[s.apply(i + 1) - 1]) {
                diags.push(format!(
                    "symbol {a}: input {} of type {t} lands on slot {} of type {}",
                    i + 1,
                    s.apply(i + 1),
                    fty.inputs[s.apply(i + 1) - 1]
                ));
            }
        }
    }
    diags
}

/// The unit signature: one unary symbol `one(o)` per type.
pub fn unit_sig(types: &BTreeSet<Term>) -> Signature {
    Signature {
        types: types.clone(),
        symbols: types
            .iter()
            .map(|o| (unit_symbol(o), Typing::new(o.clone(), vec![o.clone()])))
            .collect(),
    }
}

pub fn unit_symbol(o: &Term) -> Term {
    Term::app(tag::UNIT, vec![o.clone()])
}

fn same_types(a: &Signature, b: &Signature) -> Result<()> {
    if a.types != b.types {
        return Err(Error::Structural(
            "signatures live over different type sets".into(),
        ));
    }
    Ok(())
}

/// `A ⊗ B`: all composable formal composites `ot(a, b_1..b_k)`.
pub fn tensor(a: &Signature, b: &Signature) -> Result<Signature> {
    same_types(a, b)?;
    let obj = Obj::tensor(Obj::base(a.clone()), Obj::base(b.clone()));
    Ok(obj.materialize(a.types.clone(), usize::MAX))
}

/// `f ⊗ g`, defined when both lie over the same type map.
pub fn tensor_mor(f: &SigMorphism, g: &SigMorphism) -> Result<SigMorphism> {
    if f.type_map != g.type_map {
        return Err(Error::Structural(
            "f and g lie over different type maps".into(),
        ));
    }
    let dom = tensor(&f.dom, &g.dom)?;
    let cod = Arc::new(tensor(&f.cod, &g.cod)?);
    let arrow = Arrow::tensor(&Arrow::from_morphism(f), &Arrow::from_morphism(g));
    let dom = Arc::new(dom);
    morphism_from_arrow(&arrow, dom, cod, f.type_map.clone())
}

/// Tabulates an arrow on every symbol of a finite domain.
pub fn morphism_from_arrow(
    arrow: &Arrow,
    dom: Arc<Signature>,
    cod: Arc<Signature>,
    type_map: BTreeMap<Term, Term>,
) -> Result<SigMorphism> {
    let mut symbol_map = BTreeMap::new();
    let mut sigma = BTreeMap::new();
    for a in dom.symbols.keys() {
        let (fa, s) = arrow.apply(a)?;
        symbol_map.insert(a.clone(), fa);
        sigma.insert(a.clone(), s);
    }
    Ok(SigMorphism {
        dom,
        cod,
        symbol_map,
        type_map,
        sigma,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuralKind {
    Alpha,
    Lambda,
    Rho,
}

/// The ⊗ structural isomorphisms, tabulated: α on `A⊗(B⊗C)`, λ on `I⊗A`, ρ on `A`.
pub fn structural_iso_otimes(
    kind: StructuralKind,
    a: &Signature,
    b: Option<&Signature>,
    c: Option<&Signature>,
) -> Result<SigMorphism> {
    let types = a.types.clone();
    let id_types: BTreeMap<Term, Term> = types.iter().map(|t| (t.clone(), t.clone())).collect();
    let ua = Obj::unit_tensor(Arc::new(FiniteTypes(types.clone())));
    let base_a = Obj::base(a.clone());
    let arrow = match kind {
        StructuralKind::Alpha => {
            let (b, c) = match (b, c) {
                (Some(b), Some(c)) => (b, c),
                _ => return Err(Error::Structural("α needs three signatures".into())),
            };
            same_types(a, b)?;
            same_types(a, c)?;
            Arrow::alpha_tensor(&base_a, &Obj::base(b.clone()), &Obj::base(c.clone()))
        }
        StructuralKind::Lambda => Arrow::lambda_tensor(&ua, &base_a),
        StructuralKind::Rho => Arrow::rho_tensor(&base_a, &ua),
    };
    let dom = Arc::new(arrow.dom.materialize(types.clone(), usize::MAX));
    let cod = Arc::new(arrow.cod.materialize(types, usize::MAX));
    morphism_from_arrow(&arrow, dom, cod, id_types)
}

/// Tagged disjoint union with its two strict injections.
pub fn coproduct(a: &Signature, b: &Signature) -> Result<(Signature, SigMorphism, SigMorphism)> {
    same_types(a, b)?;
    let obj = Obj::coprod(Obj::base(a.clone()), Obj::base(b.clone()));
    let sum = Arc::new(obj.materialize(a.types.clone(), usize::MAX));
    let inj = |src: &Signature, t: &str| SigMorphism {
        dom: Arc::new(src.clone()),
        cod: sum.clone(),
        symbol_map: src
            .symbols
            .keys()
            .map(|x| (x.clone(), Term::app(t, vec![x.clone()])))
            .collect(),
        type_map: src.types.iter().map(|t| (t.clone(), t.clone())).collect(),
        sigma: src
            .symbols
            .iter()
            .map(|(x, ty)| (x.clone(), Permutation::identity(ty.arity())))
            .collect(),
    };
    let inl = inj(a, tag::INL);
    let inr = inj(b, tag::INR);
    Ok(((*sum).clone(), inl, inr))
}

/// Pullback of `A` along `u: O' → O`, with its prone (strict) projection.
///
/// Symbols are `pb(a, o_0, o_1..o_k)` for every typing over `O'` lying over `∂_a`.
pub fn pullback(
    new_types: &BTreeSet<Term>,
    u: &BTreeMap<Term, Term>,
    a: &Signature,
) -> Result<(Signature, SigMorphism)> {
    let mut fibers: BTreeMap<&Term, Vec<Term>> = BTreeMap::new();
    for t in new_types {
        let image = u
            .get(t)
            .ok_or_else(|| Error::Structural(format!("type map undefined on {t}")))?;
        if !a.types.contains(image) {
            return Err(Error::Structural(format!(
                "{t} maps outside the base types"
            )));
        }
        fibers.entry(image).or_default().push(t.clone());
    }
    let empty = Vec::new();
    let mut out = Signature::new(new_types.iter().cloned());
    let mut symbol_map = BTreeMap::new();
    let mut sigma = BTreeMap::new();
    for (sym, ty) in &a.symbols {
        let slots: Vec<&Vec<Term>> = std::iter::once(&ty.output)
            .chain(&ty.inputs)
            .map(|t| fibers.get(t).unwrap_or(&empty))
            .collect();
        for choice in itertools::Itertools::multi_cartesian_product(slots.iter().map(|v| v.iter()))
        {
            let mut args = vec![sym.clone()];
            args.extend(choice.iter().map(|t| (*t).clone()));
            let name = Term::app(tag::PULLBACK, args);
            let typing = Typing::new(
                choice[0].clone(),
                choice[1..].iter().map(|t| (*t).clone()).collect(),
            );
            symbol_map.insert(name.clone(), sym.clone());
            sigma.insert(name.clone(), Permutation::identity(ty.arity()));
            out.symbols.insert(name, typing);
        }
        if slots.is_empty() {
            unreachable!("output slot always present");
        }
    }
    let proj = SigMorphism {
        dom: Arc::new(out.clone()),
        cod: Arc::new(a.clone()),
        symbol_map,
        type_map: u.clone(),
        sigma,
    };
    Ok((out, proj))
}

pub use crate::sigmamon::{freshen, FreshMonoid};

// ---------------------------------------------------------------------------
// Lazy objects and arrows.

/// Anything that can type symbols and list a bounded prefix of them.
pub trait SigObject: Send + Sync {
    fn typing_of(&self, s: &Term) -> Option<Typing>;
    /// Up to `cap` symbols, in a deterministic order.
    fn enumerate(&self, cap: usize) -> Vec<Term>;
    fn describe(&self) -> String {
        "object".into()
    }
}

impl SigObject for Signature {
    fn typing_of(&self, s: &Term) -> Option<Typing> {
        self.symbols.get(s).cloned()
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        self.symbols.keys().take(cap).cloned().collect()
    }

    fn describe(&self) -> String {
        format!("signature with {} symbols", self.symbols.len())
    }
}

/// A (possibly infinite) set of types, used by the ⊗ unit.
pub trait TypeUniverse: Send + Sync {
    fn contains(&self, t: &Term) -> bool;
    fn list(&self, cap: usize) -> Vec<Term>;
}

pub struct FiniteTypes(pub BTreeSet<Term>);

impl TypeUniverse for FiniteTypes {
    fn contains(&self, t: &Term) -> bool {
        self.0.contains(t)
    }

    fn list(&self, cap: usize) -> Vec<Term> {
        self.0.iter().take(cap).cloned().collect()
    }
}

/// The symbols of a monoid, viewed as the vertical types of `Sig_ma` over it.
pub struct MonoidSymbols(pub Arc<dyn Monoid>);

impl TypeUniverse for MonoidSymbols {
    fn contains(&self, t: &Term) -> bool {
        self.0.typing(t).is_some()
    }

    fn list(&self, cap: usize) -> Vec<Term> {
        self.0.enumerate(cap)
    }
}

/// An object expression. Symbols of composite objects are tagged terms.
#[derive(Clone)]
pub enum Obj {
    Base(Arc<dyn SigObject>),
    Tensor(Box<Obj>, Box<Obj>),
    UnitT(Arc<dyn TypeUniverse>),
    Odot(Arc<dyn Monoid>, Box<Obj>, Box<Obj>),
    UnitO(Arc<dyn Monoid>),
    Coprod(Box<Obj>, Box<Obj>),
}

impl fmt::Debug for Obj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obj::Base(b) => write!(f, "[{}]", b.describe()),
            Obj::Tensor(a, b) => write!(f, "({a:?} ⊗ {b:?})"),
            Obj::UnitT(_) => write!(f, "I⊗"),
            Obj::Odot(_, a, b) => write!(f, "({a:?} ⊙ {b:?})"),
            Obj::UnitO(_) => write!(f, "I⊙"),
            Obj::Coprod(a, b) => write!(f, "({a:?} ⊔ {b:?})"),
        }
    }
}

impl Obj {
    pub fn base(s: impl SigObject + 'static) -> Obj {
        Obj::Base(Arc::new(s))
    }

    pub fn tensor(a: Obj, b: Obj) -> Obj {
        Obj::Tensor(Box::new(a), Box::new(b))
    }

    pub fn odot(m: &Arc<dyn Monoid>, a: Obj, b: Obj) -> Obj {
        Obj::Odot(m.clone(), Box::new(a), Box::new(b))
    }

    pub fn coprod(a: Obj, b: Obj) -> Obj {
        Obj::Coprod(Box::new(a), Box::new(b))
    }

    pub fn unit_tensor(types: Arc<dyn TypeUniverse>) -> Obj {
        Obj::UnitT(types)
    }

    /// The ⊗ unit of `Sig_ma` over `m`: one `one(x)` per symbol `x` of `m`.
    pub fn unit_tensor_over(m: &Arc<dyn Monoid>) -> Obj {
        Obj::UnitT(Arc::new(MonoidSymbols(m.clone())))
    }

    pub fn unit_odot(m: &Arc<dyn Monoid>) -> Obj {
        Obj::UnitO(m.clone())
    }

    pub fn typing(&self, t: &Term) -> Result<Typing> {
        match self {
            Obj::Base(s) => s.typing_of(t).ok_or_else(|| {
                Error::Structural(format!("{t} is not a symbol of {}", s.describe()))
            }),
            Obj::Tensor(a, b) => {
                let args = t.expect_app(tag::TENSOR)?;
                let ta = a.typing(&args[0])?;
                if args.len() - 1 != ta.arity() {
                    return Err(Error::Composability(format!(
                        "{t}: head has arity {} but {} arguments were given",
                        ta.arity(),
                        args.len() - 1
                    )));
                }
                let mut inputs = Vec::new();
                for (i, x) in args[1..].iter().enumerate() {
                    let tb = b.typing(x)?;
                    if tb.output != ta.inputs[i] {
                        return Err(Error::Composability(format!(
                            "{t}: argument {} has output {} but slot expects {}",
                            i + 1,
                            tb.output,
                            ta.inputs[i]
                        )));
                    }
                    inputs.extend(tb.inputs);
                }
                Ok(Typing::new(ta.output, inputs))
            }
            Obj::UnitT(u) => {
                let args = t.expect_app(tag::UNIT)?;
                if args.len() != 1 || !u.contains(&args[0]) {
                    return Err(Error::Structural(format!("{t} is not a unit symbol")));
                }
                Ok(Typing::new(args[0].clone(), vec![args[0].clone()]))
            }
            Obj::Odot(m, a, b) => {
                let args = t.expect_app(tag::ODOT)?;
                let ta = a.typing(&args[0])?;
                let head = ta.output.clone();
                let mt = m
                    .typing(&head)
                    .ok_or_else(|| Error::Structural(format!("{head} is not in the monoid")))?;
                if args.len() - 1 != mt.arity() {
                    return Err(Error::Composability(format!(
                        "{t}: horizontal arity {} but {} arguments were given",
                        mt.arity(),
                        args.len() - 1
                    )));
                }
                let mut inputs = ta.inputs;
                let mut outs = Vec::new();
                for (i, x) in args[1..].iter().enumerate() {
                    let tb = b.typing(x)?;
                    let ht = m.typing(&tb.output).ok_or_else(|| {
                        Error::Structural(format!("{} is not in the monoid", tb.output))
                    })?;
                    if ht.output != mt.inputs[i] {
                        return Err(Error::Composability(format!(
                            "{t}: argument {} is horizontally typed {} but slot expects {}",
                            i + 1,
                            ht.output,
                            mt.inputs[i]
                        )));
                    }
                    outs.push(tb.output);
                    inputs.extend(tb.inputs);
                }
                let (out, _) = m.mult(&head, &outs)?;
                Ok(Typing::new(out, inputs))
            }
            Obj::UnitO(m) => {
                let args = t.expect_app(tag::ODOT_UNIT)?;
                if args.len() != 1 {
                    return Err(Error::Structural(format!("{t} is not a ⊙-unit symbol")));
                }
                Ok(Typing::new(m.unit(&args[0])?, vec![]))
            }
            Obj::Coprod(a, b) => {
                if let Some(x) = t.args_of(tag::INL) {
                    a.typing(&x[0])
                } else if let Some(x) = t.args_of(tag::INR) {
                    b.typing(&x[0])
                } else {
                    Err(Error::Structural(format!("{t} is not a coproduct symbol")))
                }
            }
        }
    }

    /// Up to `cap` symbols in a deterministic order; sub-enumerations use the same cap.
    pub fn enumerate(&self, cap: usize) -> Vec<Term> {
        match self {
            Obj::Base(s) => s.enumerate(cap),
            Obj::Tensor(a, b) => {
                let by_out = group_by(b.enumerate(cap), |x| b.typing(x).ok().map(|t| t.output));
                let heads = a.enumerate(cap);
                composites(
                    tag::TENSOR,
                    heads,
                    cap,
                    |h| a.typing(h).ok().map(|t| t.inputs).unwrap_or_default(),
                    &by_out,
                )
            }
            Obj::Odot(m, a, b) => {
                let horizontal =
                    |x: &Term, obj: &Obj| obj.typing(x).ok().and_then(|t| m.typing(&t.output));
                let by_out = group_by(b.enumerate(cap), |x| horizontal(x, b).map(|t| t.output));
                let heads = a.enumerate(cap);
                composites(
                    tag::ODOT,
                    heads,
                    cap,
                    |h| horizontal(h, a).map(|t| t.inputs).unwrap_or_default(),
                    &by_out,
                )
            }
            Obj::UnitT(u) => u.list(cap).into_iter().map(|o| unit_symbol(&o)).collect(),
            Obj::UnitO(m) => m
                .types()
                .into_iter()
                .take(cap)
                .map(|o| Term::app(tag::ODOT_UNIT, vec![o]))
                .collect(),
            Obj::Coprod(a, b) => {
                let mut out: Vec<Term> = a
                    .enumerate(cap)
                    .into_iter()
                    .map(|x| Term::app(tag::INL, vec![x]))
                    .collect();
                out.extend(
                    b.enumerate(cap.saturating_sub(out.len()))
                        .into_iter()
                        .map(|x| Term::app(tag::INR, vec![x])),
                );
                out.truncate(cap);
                out
            }
        }
    }

    /// A finite signature listing up to `cap` symbols of this object.
    pub fn materialize(&self, types: BTreeSet<Term>, cap: usize) -> Signature {
        let mut s = Signature::new(types);
        for x in self.enumerate(cap) {
            if let Ok(t) = self.typing(&x) {
                s.symbols.insert(x, t);
            }
        }
        s
    }
}

fn group_by(items: Vec<Term>, key: impl Fn(&Term) -> Option<Term>) -> BTreeMap<Term, Vec<Term>> {
    let mut out: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
    for x in items {
        if let Some(k) = key(&x) {
            out.entry(k).or_default().push(x);
        }
    }
    out
}

fn composites(
    t: &str,
    heads: Vec<Term>,
    cap: usize,
    slots: impl Fn(&Term) -> Vec<Term>,
    by_out: &BTreeMap<Term, Vec<Term>>,
) -> Vec<Term> {
    use itertools::Itertools;
    let empty = Vec::new();
    let mut out = Vec::new();
    for h in heads {
        if out.len() >= cap {
            break;
        }
        let lists: Vec<&Vec<Term>> = slots(&h)
            .iter()
            .map(|o| by_out.get(o).unwrap_or(&empty))
            .collect();
        if lists.is_empty() {
            out.push(Term::app(t, vec![h]));
            continue;
        }
        for choice in lists.iter().map(|l| l.iter()).multi_cartesian_product() {
            if out.len() >= cap {
                break;
            }
            let mut args = vec![h.clone()];
            args.extend(choice.into_iter().cloned());
            out.push(Term::app(t, args));
        }
    }
    out
}

pub type ArrowFn = dyn Fn(&Term) -> Result<(Term, Permutation)> + Send + Sync;
pub type TypeFn = dyn Fn(&Term) -> Term + Send + Sync;

/// A symbol-wise computable morphism between object expressions.
#[derive(Clone)]
pub struct Arrow {
    pub name: String,
    pub dom: Obj,
    pub cod: Obj,
    /// Action on vertical types; `None` means the identity.
    pub type_map: Option<Arc<TypeFn>>,
    f: Arc<ArrowFn>,
}

impl fmt::Debug for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?} → {:?}", self.name, self.dom, self.cod)
    }
}

impl Arrow {
    pub fn new(
        name: impl Into<String>,
        dom: Obj,
        cod: Obj,
        f: impl Fn(&Term) -> Result<(Term, Permutation)> + Send + Sync + 'static,
    ) -> Arrow {
        Arrow {
            name: name.into(),
            dom,
            cod,
            type_map: None,
            f: Arc::new(f),
        }
    }

    pub fn with_type_map(mut self, u: Arc<TypeFn>) -> Arrow {
        self.type_map = Some(u);
        self
    }

    pub fn map_type(&self, t: &Term) -> Term {
        match &self.type_map {
            Some(u) => u(t),
            None => t.clone(),
        }
    }

    pub fn apply(&self, t: &Term) -> Result<(Term, Permutation)> {
        (self.f)(t)
    }

    pub fn identity(obj: &Obj) -> Arrow {
        let o = obj.clone();
        Arrow::new("id", obj.clone(), obj.clone(), move |t| {
            let n = o.typing(t)?.arity();
            Ok((t.clone(), Permutation::identity(n)))
        })
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Arrow) -> Arrow {
        let (f, g) = (self.f.clone(), next.f.clone());
        let type_map = match (&self.type_map, &next.type_map) {
            (None, None) => None,
            (Some(u), None) => Some(u.clone()),
            (None, Some(v)) => Some(v.clone()),
            (Some(u), Some(v)) => {
                let (u, v) = (u.clone(), v.clone());
                Some(Arc::new(move |t: &Term| v(&u(t))) as Arc<TypeFn>)
            }
        };
        Arrow {
            name: format!("{}∘{}", next.name, self.name),
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            type_map,
            f: Arc::new(move |t| {
                let (x, s) = f(t)?;
                let (y, r) = g(&x)?;
                Ok((y, r.compose(&s)?))
            }),
        }
    }

    pub fn from_morphism(m: &SigMorphism) -> Arrow {
        let m = Arc::new(m.clone());
        let (dom, cod) = (Obj::Base(m.dom.clone()), Obj::Base(m.cod.clone()));
        let mm = m.clone();
        let u = m.clone();
        Arrow::new("f", dom, cod, move |t| {
            Ok((mm.map_symbol(t)?.clone(), mm.amalgamation(t)?.clone()))
        })
        .with_type_map(Arc::new(move |t: &Term| {
            u.type_map.get(t).cloned().unwrap_or_else(|| t.clone())
        }))
    }

    /// `f ⊗ g`: `⟨a, b_i⟩ ↦ ⟨f(a), g(b_{σ_a⁻¹(j)})⟩` with amalgamation `σ_a∗(τ_{b_i})`.
    pub fn tensor(f: &Arrow, g: &Arrow) -> Arrow {
        let (ff, gg) = (f.f.clone(), g.f.clone());
        Arrow {
            name: format!("({}⊗{})", f.name, g.name),
            dom: Obj::tensor(f.dom.clone(), g.dom.clone()),
            cod: Obj::tensor(f.cod.clone(), g.cod.clone()),
            type_map: f.type_map.clone(),
            f: Arc::new(move |t| {
                let args = t.expect_app(tag::TENSOR)?;
                let (fa, sa) = ff(&args[0])?;
                if sa.len() != args.len() - 1 {
                    return Err(Error::Structural(format!(
                        "{t}: amalgamation size mismatch"
                    )));
                }
                let mut imgs = Vec::with_capacity(args.len() - 1);
                let mut taus = Vec::with_capacity(args.len() - 1);
                for b in &args[1..] {
                    let (gb, tb) = gg(b)?;
                    imgs.push(gb);
                    taus.push(tb);
                }
                let mut out = vec![fa];
                out.extend(sa.permute(&imgs));
                Ok((Term::app(tag::TENSOR, out), compose_blocks(&sa, &taus)?))
            }),
        }
    }

    /// `α: A⊗(B⊗C) → (A⊗B)⊗C`, identity amalgamation.
    pub fn alpha_tensor(a: &Obj, b: &Obj, c: &Obj) -> Arrow {
        let dom = Obj::tensor(a.clone(), Obj::tensor(b.clone(), c.clone()));
        let cod = Obj::tensor(Obj::tensor(a.clone(), b.clone()), c.clone());
        let d = dom.clone();
        Arrow::new("α⊗", dom, cod, move |t| {
            let n = d.typing(t)?.arity();
            let args = t.expect_app(tag::TENSOR)?;
            let mut head = vec![args[0].clone()];
            let mut tail = Vec::new();
            for x in &args[1..] {
                let inner = x.expect_app(tag::TENSOR)?;
                head.push(inner[0].clone());
                tail.extend(inner[1..].iter().cloned());
            }
            let mut out = vec![Term::app(tag::TENSOR, head)];
            out.extend(tail);
            Ok((Term::app(tag::TENSOR, out), Permutation::identity(n)))
        })
    }

    /// `α⁻¹: (A⊗B)⊗C → A⊗(B⊗C)`, regrouping the `c`'s by the arities of the `b`'s.
    pub fn alpha_tensor_inv(a: &Obj, b: &Obj, c: &Obj) -> Arrow {
        let dom = Obj::tensor(Obj::tensor(a.clone(), b.clone()), c.clone());
        let cod = Obj::tensor(a.clone(), Obj::tensor(b.clone(), c.clone()));
        let (d, bb) = (dom.clone(), b.clone());
        Arrow::new("α⊗⁻¹", dom, cod, move |t| {
            let n = d.typing(t)?.arity();
            let args = t.expect_app(tag::TENSOR)?;
            let inner = args[0].expect_app(tag::TENSOR)?;
            let mut rest = args[1..].iter();
            let mut out = vec![inner[0].clone()];
            for bi in &inner[1..] {
                let k = bb.typing(bi)?.arity();
                let mut grp = vec![bi.clone()];
                for _ in 0..k {
                    grp.push(
                        rest.next()
                            .ok_or_else(|| Error::Composability(format!("{t}: too few arguments")))?
                            .clone(),
                    );
                }
                out.push(Term::app(tag::TENSOR, grp));
            }
            if rest.next().is_some() {
                return Err(Error::Composability(format!("{t}: too many arguments")));
            }
            Ok((Term::app(tag::TENSOR, out), Permutation::identity(n)))
        })
    }

    /// `λ: I⊗A → A`.
    pub fn lambda_tensor(unit: &Obj, a: &Obj) -> Arrow {
        let dom = Obj::tensor(unit.clone(), a.clone());
        let d = dom.clone();
        Arrow::new("λ⊗", dom, a.clone(), move |t| {
            let n = d.typing(t)?.arity();
            let args = t.expect_app(tag::TENSOR)?;
            Ok((args[1].clone(), Permutation::identity(n)))
        })
    }

    /// `λ⁻¹: A → I⊗A`.
    pub fn lambda_tensor_inv(unit: &Obj, a: &Obj) -> Arrow {
        let cod = Obj::tensor(unit.clone(), a.clone());
        let aa = a.clone();
        Arrow::new("λ⊗⁻¹", a.clone(), cod, move |t| {
            let ty = aa.typing(t)?;
            Ok((
                Term::app(tag::TENSOR, vec![unit_symbol(&ty.output), t.clone()]),
                Permutation::identity(ty.arity()),
            ))
        })
    }

    /// `ρ: A → A⊗I`.
    pub fn rho_tensor(a: &Obj, unit: &Obj) -> Arrow {
        let cod = Obj::tensor(a.clone(), unit.clone());
        let aa = a.clone();
        Arrow::new("ρ⊗", a.clone(), cod, move |t| {
            let ty = aa.typing(t)?;
            let mut args = vec![t.clone()];
            args.extend(ty.inputs.iter().map(unit_symbol));
            Ok((
                Term::app(tag::TENSOR, args),
                Permutation::identity(ty.arity()),
            ))
        })
    }

    /// `ρ⁻¹: A⊗I → A`.
    pub fn rho_tensor_inv(a: &Obj, unit: &Obj) -> Arrow {
        let dom = Obj::tensor(a.clone(), unit.clone());
        let d = dom.clone();
        Arrow::new("ρ⊗⁻¹", dom, a.clone(), move |t| {
            let n = d.typing(t)?.arity();
            let args = t.expect_app(tag::TENSOR)?;
            Ok((args[0].clone(), Permutation::identity(n)))
        })
    }

    /// Checks that `t` is in the domain, its image in the codomain, and the typing square.
    pub fn check_at(&self, t: &Term) -> Result<()> {
        let ty = self.dom.typing(t)?;
        let (ft, s) = self.apply(t)?;
        let fty = self.cod.typing(&ft)?;
        if s.len() != ty.arity() || fty.arity() != ty.arity() {
            return Err(Error::Structural(format!(
                "{}: {t} ↦ {ft} changes arity or has a mis-sized amalgamation",
                self.name
            )));
        }
        if self.map_type(&ty.output) != fty.output {
            return Err(Error::Structural(format!(
                "{}: output square fails at {t}",
                self.name
            )));
        }
        for (i, x) in ty.inputs.iter().enumerate() {
            if self.map_type(x) != fty.inputs[s.apply(i + 1) - 1] {
                return Err(Error::Structural(format!(
                    "{}: input square fails at {t}, slot {}",
                    self.name,
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Compares two parallel arrows on one symbol; `Err` carries a description.
pub fn agree_at(f: &Arrow, g: &Arrow, t: &Term) -> std::result::Result<(), String> {
    let l = f
        .apply(t)
        .map_err(|e| format!("{} failed at {t}: {e}", f.name))?;
    let r = g
        .apply(t)
        .map_err(|e| format!("{} failed at {t}: {e}", g.name))?;
    if l != r {
        return Err(format!(
            "at {t}: {} gives {} with {}, {} gives {} with {}",
            f.name, l.0, l.1, g.name, r.0, r.1
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_binary() -> Signature {
        Signature::new([Term::atom("o")]).with("B", "o", &["o", "o"])
    }

    fn swap_endo(sigma: &[usize]) -> SigMorphism {
        let s = Arc::new(one_binary());
        let mut m = SigMorphism::identity(&s);
        m.sigma
            .insert(Term::atom("B"), Permutation::new(sigma.to_vec()).unwrap());
        m
    }

    #[test]
    fn unit_sig_validates() {
        let o: BTreeSet<Term> = [Term::atom("o")].into();
        let u = unit_sig(&o);
        assert_eq!(u.len(), 1);
        assert!(validate_signature(&u).is_empty());
    }

    #[test]
    fn unknown_type_is_diagnosed() {
        let s = Signature::new([Term::atom("o")]).with("f", "o", &["p"]);
        let d = validate_signature(&s);
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("unknown type"));
    }

    #[test]
    fn input_swap_is_a_morphism() {
        // Over one type any σ passes; the square only bites with two distinct input types.
        assert!(validate_morphism(&swap_endo(&[2, 1])).is_empty());
        let s = Arc::new(Signature::new([Term::atom("x"), Term::atom("y")]).with(
            "B",
            "x",
            &["x", "y"],
        ));
        let mut c = (*s).clone();
        c.symbols.insert(
            Term::atom("B"),
            Typing::new("x".into(), vec!["y".into(), "x".into()]),
        );
        let c = Arc::new(c);
        let mut m = SigMorphism::identity(&s);
        m.cod = c;
        m.sigma
            .insert(Term::atom("B"), Permutation::new(vec![2, 1]).unwrap());
        assert!(validate_morphism(&m).is_empty());
        m.sigma.insert(Term::atom("B"), Permutation::identity(2));
        assert!(!validate_morphism(&m).is_empty());
    }

    #[test]
    fn tensor_with_units_has_six_symbols() {
        let o: BTreeSet<Term> = [Term::atom("o")].into();
        let (a, _, _) = coproduct(&one_binary(), &unit_sig(&o)).unwrap();
        let t = tensor(&a, &a).unwrap();
        // B-headed: 2 choices per slot; unit-headed: one per symbol of A.
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn unit_tensor_copies_typing() {
        let a = one_binary();
        let o = a.types.clone();
        let t = tensor(&unit_sig(&o), &a).unwrap();
        assert_eq!(t.len(), 1);
        let (_, ty) = t.symbols.iter().next().unwrap();
        assert_eq!(ty, a.symbols.values().next().unwrap());
    }

    #[test]
    fn tensor_mor_swaps_blocks() {
        let o: BTreeSet<Term> = [Term::atom("o")].into();
        let (a, _, _) = coproduct(&one_binary(), &unit_sig(&o)).unwrap();
        let a = Arc::new(a);
        let mut f = SigMorphism::identity(&a);
        f.sigma.insert(
            Term::parse("inl(B)").unwrap(),
            Permutation::new(vec![2, 1]).unwrap(),
        );
        let id = SigMorphism::identity(&a);
        let t = tensor_mor(&f, &id).unwrap();
        let x = Term::parse("ot(inl(B),inl(B),inr(one(o)))").unwrap();
        assert_eq!(
            t.symbol_map[&x],
            Term::parse("ot(inl(B),inr(one(o)),inl(B))").unwrap()
        );
        // Block of the first B (2 inputs) moves after the unit's single input.
        assert_eq!(t.sigma[&x].images(), &[2, 3, 1]);
        assert!(validate_morphism(&t).is_empty());
    }

    #[test]
    fn identity_tensor_identity() {
        let a = Arc::new(one_binary());
        let id = SigMorphism::identity(&a);
        let t = tensor_mor(&id, &id).unwrap();
        assert_eq!(t, SigMorphism::identity(&t.dom));
    }

    #[test]
    fn composite_amalgamation_order() {
        let f = swap_endo(&[2, 1]);
        let g = f.after(&f).unwrap();
        assert!(g.sigma[&Term::atom("B")].is_identity());
    }

    #[test]
    fn pullback_along_identity_matches() {
        let a = one_binary();
        let id: BTreeMap<Term, Term> = a.types.iter().map(|t| (t.clone(), t.clone())).collect();
        let (p, proj) = pullback(&a.types, &id, &a).unwrap();
        assert_eq!(p.len(), a.len());
        assert!(proj.is_strict());
        assert!(validate_morphism(&proj).is_empty());
    }

    #[test]
    fn pullback_over_two_point_cover() {
        let a = one_binary();
        let new: BTreeSet<Term> = [Term::atom("o1"), Term::atom("o2")].into();
        let u: BTreeMap<Term, Term> = new.iter().map(|t| (t.clone(), Term::atom("o"))).collect();
        let (p, proj) = pullback(&new, &u, &a).unwrap();
        // output plus two inputs, each with two lifts
        assert_eq!(p.len(), 8);
        assert!(validate_morphism(&proj).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let a = one_binary();
        let v = a.to_json();
        assert_eq!(v["symbols"]["B"]["in"], serde_json::json!(["o", "o"]));
        let back: Signature = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
        let m = swap_endo(&[2, 1]);
        let j = m.to_json();
        let back = SigMorphism::from_json(&j, m.dom.clone(), m.cod.clone()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn structural_isos_have_identity_amalgamation() {
        let a = one_binary();
        let o = a.types.clone();
        let (a1, _, _) = coproduct(&a, &unit_sig(&o)).unwrap();
        let alpha =
            structural_iso_otimes(StructuralKind::Alpha, &a1, Some(&a1), Some(&a1)).unwrap();
        assert!(alpha.is_strict());
        assert!(validate_morphism(&alpha).is_empty());
        let lambda = structural_iso_otimes(StructuralKind::Lambda, &a1, None, None).unwrap();
        assert_eq!(lambda.dom.len(), a1.len());
        assert!(validate_morphism(&lambda).is_empty());
        let rho = structural_iso_otimes(StructuralKind::Rho, &a1, None, None).unwrap();
        assert!(validate_morphism(&rho).is_empty());
    }
}
