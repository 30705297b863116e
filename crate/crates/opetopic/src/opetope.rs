//! Opetopic sets: towers `X_0, X_1, ..` of signatures with pasting-diagram monoids
//! `S_n`, strict maps `θ_n: X_{n+1} → S_n` and prone maps `ξ_n: S_{n+1} → W(S_n)`.
//!
//! The base monoid `𝟙` is the unit signature on one type `*`. Every tower here is
//! truncated by a node bound on webs, and each level records what was cut off.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use itertools::Itertools;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fixtures::trivial;
use crate::freemon::Tree;
use crate::perm::Permutation;
use crate::report::{check_all, LawResult, Report};
use crate::sig::{validate_morphism, SigMorphism, Signature, Typing};
use crate::sigmamon::{validate_monoid, Monoid, MonoidHom};
use crate::term::Term;
use crate::web::WebMonoid;

pub fn point() -> Term {
    Term::atom("*")
}

/// `𝟙`: one type, one unary symbol.
pub fn base_monoid() -> Arc<dyn Monoid> {
    trivial(&["*"]).shared()
}

/// The pullback of `base` along an inclusion of types, keeping symbol names. With a
/// finite symbol list this is also how truncation is represented: a composite that
/// is not listed is reported as [`Error::Truncation`].
pub struct Restriction {
    pub base: Arc<dyn Monoid>,
    pub types: BTreeSet<Term>,
    pub symbols: BTreeMap<Term, Typing>,
}

impl Restriction {
    /// Keeps the first `cap` symbols of `base` whose types all lie in `types`.
    pub fn new(base: &Arc<dyn Monoid>, types: BTreeSet<Term>, cap: usize) -> Self {
        let symbols = base
            .enumerate(cap)
            .into_iter()
            .filter_map(|s| {
                let t = base.typing(&s)?;
                (types.contains(&t.output) && t.inputs.iter().all(|i| types.contains(i)))
                    .then_some((s, t))
            })
            .collect();
        Restriction {
            base: base.clone(),
            types,
            symbols,
        }
    }

    pub fn without(mut self, s: &Term) -> Self {
        self.symbols.remove(s);
        self
    }

    pub fn shared(self) -> Arc<dyn Monoid> {
        Arc::new(self)
    }
}

impl Monoid for Restriction {
    fn name(&self) -> String {
        format!("{}|{} types", self.base.name(), self.types.len())
    }

    fn types(&self) -> Vec<Term> {
        self.types.iter().cloned().collect()
    }

    fn typing(&self, t: &Term) -> Option<Typing> {
        self.symbols.get(t).cloned()
    }

    fn unit(&self, o: &Term) -> Result<Term> {
        let e = self.base.unit(o)?;
        if self.symbols.contains_key(&e) {
            Ok(e)
        } else {
            Err(Error::Truncation(format!(
                "unit {e} is outside the restriction"
            )))
        }
    }

    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)> {
        let (r, gamma) = self.base.mult(head, args)?;
        if self.symbols.contains_key(&r) {
            Ok((r, gamma))
        } else {
            Err(Error::Truncation(format!(
                "composite {r} is outside the restriction"
            )))
        }
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        self.symbols.keys().take(cap).cloned().collect()
    }
}

/// The symbols of a finite monoid as a signature.
pub fn materialize(m: &dyn Monoid) -> Signature {
    let mut s = Signature::new(m.types());
    for x in m.enumerate(usize::MAX) {
        if let Some(t) = m.typing(&x) {
            s.symbols.insert(x, t);
        }
    }
    s
}

/// Level `n` of a tower.
#[derive(Clone)]
pub struct Level {
    /// `S_n`, over `X_n`.
    pub s: Arc<dyn Monoid>,
    /// `X_{n+1}`, over `X_n`.
    pub cells: Arc<Signature>,
    /// `θ_n: X_{n+1} → S_n`.
    pub theta: SigMorphism,
    /// `ξ_{n-1}: S_n → W(S_{n-1})`, or `S_0 → 𝟙`.
    pub xi: MonoidHom,
    pub truncated: Vec<String>,
}

#[derive(Clone)]
pub struct OpetopicSet {
    pub x0: BTreeSet<Term>,
    pub levels: Vec<Level>,
    pub node_bound: usize,
}

impl OpetopicSet {
    /// Highest dimension with cells.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `X_n` as a sorted list.
    pub fn cells(&self, n: usize) -> Vec<Term> {
        if n == 0 {
            self.x0.iter().cloned().collect()
        } else {
            self.levels[n - 1].cells.symbols.keys().cloned().collect()
        }
    }

    /// Cells of dimension `n` counted by node count of their body web (dimension ≥ 2)
    /// or arity (dimension 1).
    pub fn counts_by_nodes(&self, n: usize) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for c in self.cells(n) {
            let k = match (n, Tree::from_term(&c)) {
                (0, _) => 0,
                (1, _) | (_, Err(_)) => self.levels[n - 1].cells.symbols[&c].arity(),
                (_, Ok(t)) => t.nodes(),
            };
            *out.entry(k).or_insert(0) += 1;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let dims: Vec<serde_json::Value> = (0..=self.depth())
            .map(|n| {
                let cells: Vec<serde_json::Value> = self
                    .cells(n)
                    .iter()
                    .map(|c| match Tree::from_term(c) {
                        Ok(t) if n >= 2 => serde_json::to_value(&t).expect("trees serialize"),
                        _ => serde_json::to_value(c).expect("terms serialize"),
                    })
                    .collect();
                let truncated = if n == 0 {
                    Vec::new()
                } else {
                    self.levels[n - 1].truncated.clone()
                };
                json!({ "dim": n, "count": cells.len(), "cells": cells, "truncated": truncated })
            })
            .collect();
        json!({ "node_bound": self.node_bound, "dimensions": dims })
    }
}

/// The terminal opetopic set up to dimension `depth`.
///
/// `S_0 = 𝟙`, `X_{n+1}` is the symbols of `S_n` with `θ_n` the identity, and
/// `S_{n+1}` is `W(S_n)` pulled back along `θ_n`, keeping webs with at most
/// `node_bound` nodes.
pub fn terminal_tower(depth: usize, node_bound: usize) -> OpetopicSet {
    let one = base_monoid();
    let x0: BTreeSet<Term> = [point()].into();
    let mut s: Arc<dyn Monoid> = Restriction::new(&one, x0.clone(), usize::MAX).shared();
    let mut xi = collapse(&s, &one);
    let mut levels = Vec::with_capacity(depth);
    let mut truncated = Vec::new();
    for n in 0..depth {
        let cells = Arc::new(materialize(&*s));
        let theta = SigMorphism::identity(&cells);
        levels.push(Level {
            s: s.clone(),
            cells,
            theta,
            xi,
            truncated: std::mem::take(&mut truncated),
        });
        if n + 1 == depth {
            break;
        }
        let w = WebMonoid::new(&s, node_bound).shared();
        let types: BTreeSet<Term> = levels[n].cells.symbols.keys().cloned().collect();
        s = Restriction::new(&w, types, usize::MAX).shared();
        xi = inclusion(&s, &w);
        truncated = vec![
            format!("webs over S_{n} with more than {node_bound} nodes are omitted"),
            format!(
                "webs whose composite is not among the {} cells of dimension {} are omitted",
                levels[n].cells.len(),
                n + 1
            ),
        ];
    }
    OpetopicSet {
        x0,
        levels,
        node_bound,
    }
}

/// `ξ_{-1}: S_0 → 𝟙` over `X_0 → {*}`.
fn collapse(s0: &Arc<dyn Monoid>, one: &Arc<dyn Monoid>) -> MonoidHom {
    let (dom, cod) = (s0.clone(), one.clone());
    let unit = one.unit(&point()).expect("𝟙 has a unit");
    MonoidHom {
        name: "ξ_-1".into(),
        dom,
        cod,
        map: Arc::new(move |_| Ok((unit.clone(), Permutation::identity(1)))),
        type_map: Arc::new(|_| point()),
    }
}

/// Names are kept, so a restriction includes into its base with identity amalgamation.
fn inclusion(dom: &Arc<dyn Monoid>, cod: &Arc<dyn Monoid>) -> MonoidHom {
    let d = dom.clone();
    MonoidHom {
        name: "ξ".into(),
        dom: dom.clone(),
        cod: cod.clone(),
        map: Arc::new(move |x| {
            let t = d
                .typing(x)
                .ok_or_else(|| Error::Structural(format!("{x} is not a symbol")))?;
            Ok((x.clone(), Permutation::identity(t.arity())))
        }),
        type_map: Arc::new(|t| t.clone()),
    }
}

/// Replaces `θ_n` by a non-strict copy, swapping inputs of its first symbol of arity ≥ 2.
pub fn with_nonstrict_theta(x: &OpetopicSet, n: usize) -> Option<OpetopicSet> {
    let mut y = x.clone();
    let theta = &mut y.levels[n].theta;
    let (a, _) = theta.dom.symbols.iter().find(|(_, t)| t.arity() >= 2)?;
    let k = theta.dom.symbols[a].arity();
    theta
        .sigma
        .insert(a.clone(), Permutation::transposition(k, 1, 2));
    Some(y)
}

/// Drops one symbol from `S_n` (its last non-unit), so `ξ_{n-1}` is no longer a pullback.
pub fn with_dropped_symbol(x: &OpetopicSet, n: usize) -> Option<OpetopicSet> {
    let mut y = x.clone();
    let s = &y.levels[n].s;
    let units: BTreeSet<Term> = s.types().iter().filter_map(|o| s.unit(o).ok()).collect();
    let victim = s
        .enumerate(usize::MAX)
        .into_iter()
        .rev()
        .find(|x| !units.contains(x))?;
    let base = y.levels[n].xi.cod.clone();
    let r = Restriction {
        base: base.clone(),
        types: s.types().into_iter().collect(),
        symbols: materialize(&**s).symbols,
    }
    .without(&victim)
    .shared();
    y.levels[n].xi = if n == 0 {
        collapse(&r, &base)
    } else {
        inclusion(&r, &base)
    };
    y.levels[n].s = r;
    Some(y)
}

fn err(e: Error) -> String {
    e.to_string()
}

/// `θ_n` strict and well typed, `ξ_n` prone over `θ_n†`, and each `S_n` a monoid
/// within `cap`.
pub fn validate_opetopic_set(x: &OpetopicSet, cap: usize) -> Report {
    let mut report = Report::new("opetopic set")
        .bound("depth", x.depth())
        .bound("nodes", x.node_bound)
        .bound("cap", cap);
    for (n, level) in x.levels.iter().enumerate() {
        let types_n: BTreeSet<Term> = x.cells(n).into_iter().collect();
        let theta = &level.theta;
        report.push(check_all(
            format!("θ_{n} is strict"),
            theta.dom.symbols.keys(),
            |a| match theta.amalgamation(a) {
                Ok(p) if p.is_identity() => Ok(()),
                Ok(p) => Err(format!("not strict: θ_{n}({a}) has amalgamation {p}")),
                Err(e) => Err(err(e)),
            },
        ));
        report.push(check_all(
            format!("θ_{n} is a morphism over X_{n}"),
            [()],
            |_| {
                let mut problems = validate_morphism(theta);
                if theta.dom.types != types_n {
                    problems.push(format!("X_{} is not over X_{n}", n + 1));
                }
                let s_syms = materialize(&*level.s);
                if theta.cod.symbols != s_syms.symbols {
                    problems.push(format!("θ_{n} does not land in S_{n}"));
                }
                if problems.is_empty() {
                    Ok(())
                } else {
                    Err(problems.join("; "))
                }
            },
        ));
        report.push(prone(x, n));
        for r in validate_monoid(&level.s, cap).results {
            report.push(LawResult {
                law: format!("S_{n}: {}", r.law),
                ..r
            });
        }
    }
    report
}

/// `ξ_{n-1}: S_n → W(S_{n-1})` is the pullback of `∂^W` along `θ_{n-1}†`: identity
/// amalgamation, the typing square, and exactly one symbol over each web and lift.
fn prone(x: &OpetopicSet, n: usize) -> LawResult {
    let level = &x.levels[n];
    let xi = &level.xi;
    let s = &level.s;
    // θ_{n-1}† on types of S_n: X_n → symbols of S_{n-1} (or X_0 → {*})
    let theta_dag = |t: &Term| -> Option<Term> {
        if n == 0 {
            Some(point())
        } else {
            x.levels[n - 1].theta.symbol_map.get(t).cloned()
        }
    };
    let mut fibers: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
    for t in x.cells(n) {
        if let Some(b) = theta_dag(&t) {
            fibers.entry(b).or_default().push(t);
        }
    }
    let mut over: BTreeMap<(Term, Typing), Vec<Term>> = BTreeMap::new();
    let mut problems = Vec::new();
    for y in s.enumerate(usize::MAX) {
        let ty = s.typing(&y).expect("listed symbols are typed");
        match xi.apply(&y) {
            Ok((w, sigma)) => {
                if !sigma.is_identity() {
                    problems.push(format!("not prone: ξ({y}) has amalgamation {sigma}"));
                }
                let mapped = Typing::new(
                    theta_dag(&ty.output).unwrap_or(ty.output.clone()),
                    ty.inputs
                        .iter()
                        .map(|i| theta_dag(i).unwrap_or(i.clone()))
                        .collect(),
                );
                if xi.cod.typing(&w).as_ref() != Some(&mapped) {
                    problems.push(format!("not prone: typing square fails at {y}"));
                }
                over.entry((w, ty)).or_default().push(y);
            }
            Err(e) => problems.push(format!("not prone: ξ undefined at {y}: {e}")),
        }
    }
    let webs = xi.cod.enumerate(usize::MAX);
    let mut checked = 0;
    for w in &webs {
        let Some(t) = xi.cod.typing(w) else { continue };
        let slots: Vec<&Vec<Term>> = std::iter::once(&t.output)
            .chain(&t.inputs)
            .filter_map(|b| fibers.get(b))
            .collect();
        if slots.len() != t.arity() + 1 {
            continue;
        }
        for lift in slots.iter().map(|v| v.iter()).multi_cartesian_product() {
            checked += 1;
            let ty = Typing::new(
                lift[0].clone(),
                lift[1..].iter().map(|t| (*t).clone()).collect(),
            );
            match over.get(&(w.clone(), ty)).map(Vec::len) {
                Some(1) => {}
                Some(k) => problems.push(format!("not prone: {k} symbols over {w}")),
                None => problems.push(format!("not prone: no symbol of S_{n} over {w}")),
            }
        }
    }
    let law = if n == 0 {
        "ξ_-1 is prone".to_string()
    } else {
        format!("ξ_{} is prone", n - 1)
    };
    match problems.into_iter().next() {
        None => LawResult::pass(law, checked),
        Some(p) => LawResult::fail(law, checked, p),
    }
}

/// `f_n: X_n → Y_n` for `n ≤ depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpetopicMap {
    pub f: Vec<BTreeMap<Term, Term>>,
}

fn relabel(t: &Tree, nodes: &BTreeMap<Term, Term>, units: &BTreeMap<Term, Term>) -> Option<Tree> {
    Some(match t {
        Tree::Unit(o) => Tree::Unit(units.get(o)?.clone()),
        Tree::Node(m, cs) => Tree::Node(
            nodes.get(m)?.clone(),
            cs.iter()
                .map(|c| relabel(c, nodes, units))
                .collect::<Option<_>>()?,
        ),
    })
}

/// `f̄_n: S_n → T_n` determined by the pullbacks: `y` goes to the symbol of `T_n`
/// over `W(f̄_{n-1})(ξ(y))` typed by `f_n`. All maps here are strict, so `W(f̄)` is
/// relabelling.
fn induced(
    x: &OpetopicSet,
    y: &OpetopicSet,
    n: usize,
    f_n: &BTreeMap<Term, Term>,
    prev: Option<(&BTreeMap<Term, Term>, &BTreeMap<Term, Term>)>,
) -> std::result::Result<BTreeMap<Term, Term>, String> {
    let (sx, sy) = (&x.levels[n].s, &y.levels[n].s);
    let mut index: BTreeMap<(Term, Typing), Term> = BTreeMap::new();
    for z in sy.enumerate(usize::MAX) {
        let (w, _) = y.levels[n].xi.apply(&z).map_err(err)?;
        index.insert((w, sy.typing(&z).expect("listed")), z);
    }
    let mut out = BTreeMap::new();
    for s in sx.enumerate(usize::MAX) {
        let (w, _) = x.levels[n].xi.apply(&s).map_err(err)?;
        let image = match prev {
            None => w,
            Some((fbar, f_prev)) => {
                let t = Tree::from_term(&w).map_err(err)?;
                relabel(&t, fbar, f_prev)
                    .ok_or_else(|| format!("W(f̄_{}) undefined on {w}", n - 1))?
                    .to_term()
            }
        };
        let ty = sx.typing(&s).expect("listed");
        let fty = Typing::new(
            f_n.get(&ty.output).ok_or("f undefined on a type")?.clone(),
            ty.inputs
                .iter()
                .map(|i| f_n.get(i).cloned().ok_or("f undefined on a type"))
                .collect::<std::result::Result<_, _>>()?,
        );
        match index.get(&(image.clone(), fty)) {
            Some(z) => {
                out.insert(s, z.clone());
            }
            None => return Err(format!("W square: nothing in T_{n} over {image} for {s}")),
        }
    }
    Ok(out)
}

/// The level-0 square, strictness of each `f_{n+1}` over `f_n`, the `W(f̄_n)`/`ξ`
/// squares (by constructing `f̄`) and the `θ` squares, on every cell.
pub fn validate_opetopic_map(f: &OpetopicMap, x: &OpetopicSet, y: &OpetopicSet) -> Report {
    let mut report = Report::new("opetopic map").bound("depth", x.depth());
    let depth = x.depth().min(y.depth());
    if f.f.len() <= depth {
        report.push(LawResult::fail(
            "components",
            0,
            format!("need f_0..f_{depth}"),
        ));
        return report;
    }
    report.push(check_all("f_0 lands in Y_0", x.cells(0), |c| {
        match f.f[0].get(c) {
            Some(d) if y.x0.contains(d) => Ok(()),
            _ => Err(format!("f_0 undefined or out of range at {c}")),
        }
    }));
    for n in 0..depth {
        let (xs, ys) = (&x.levels[n].cells, &y.levels[n].cells);
        report.push(check_all(
            format!("f_{} strict over f_{n}", n + 1),
            xs.symbols.keys(),
            |c| {
                let d = f.f[n + 1]
                    .get(c)
                    .ok_or(format!("f_{} undefined at {c}", n + 1))?;
                let (tx, ty) = (
                    &xs.symbols[c],
                    ys.symbols
                        .get(d)
                        .ok_or(format!("{d} is not in Y_{}", n + 1))?,
                );
                let mapped: Option<Vec<Term>> = std::iter::once(&tx.output)
                    .chain(&tx.inputs)
                    .map(|t| f.f[n].get(t).cloned())
                    .collect();
                let want: Vec<Term> = std::iter::once(&ty.output)
                    .chain(&ty.inputs)
                    .cloned()
                    .collect();
                if mapped.as_ref() == Some(&want) {
                    Ok(())
                } else {
                    Err(format!("{c} ↦ {d} does not preserve typing"))
                }
            },
        ));
    }
    let mut fbars: Vec<BTreeMap<Term, Term>> = Vec::new();
    for n in 0..depth {
        let prev = if n == 0 {
            None
        } else {
            Some((&fbars[n - 1], &f.f[n - 1]))
        };
        match induced(x, y, n, &f.f[n], prev) {
            Ok(fbar) => {
                report.push(LawResult::pass(
                    format!("ξ square at level {n}"),
                    fbar.len(),
                ));
                fbars.push(fbar);
            }
            Err(w) => {
                report.push(LawResult::fail(format!("ξ square at level {n}"), 0, w));
                break;
            }
        }
        let fbar = &fbars[n];
        let (tx, ty) = (&x.levels[n].theta, &y.levels[n].theta);
        report.push(check_all(
            format!("θ square at level {n}"),
            tx.dom.symbols.keys(),
            |c| {
                let lhs = f.f[n + 1].get(c).and_then(|d| ty.symbol_map.get(d));
                let rhs = tx.symbol_map.get(c).and_then(|s| fbar.get(s));
                if lhs.is_some() && lhs == rhs {
                    Ok(())
                } else {
                    Err(format!("θ square fails at {c}: {lhs:?} vs {rhs:?}"))
                }
            },
        ));
    }
    report
}

pub fn identity_map(x: &OpetopicSet) -> OpetopicMap {
    OpetopicMap {
        f: (0..=x.depth())
            .map(|n| x.cells(n).into_iter().map(|c| (c.clone(), c)).collect())
            .collect(),
    }
}

/// The map into a terminal tower, built level by level: `f_{n+1} = θ_T⁻¹∘f̄_n∘θ_X`.
pub fn map_to_terminal(x: &OpetopicSet, t: &OpetopicSet) -> Result<OpetopicMap> {
    let depth = x.depth().min(t.depth());
    let mut f = vec![x
        .x0
        .iter()
        .map(|c| (c.clone(), point()))
        .collect::<BTreeMap<_, _>>()];
    let mut fbars: Vec<BTreeMap<Term, Term>> = Vec::new();
    for n in 0..depth {
        let prev = if n == 0 {
            None
        } else {
            Some((&fbars[n - 1], &f[n - 1]))
        };
        let fbar = induced(x, t, n, &f[n], prev).map_err(Error::Structural)?;
        let back: BTreeMap<&Term, &Term> = t.levels[n]
            .theta
            .symbol_map
            .iter()
            .map(|(a, b)| (b, a))
            .collect();
        let mut next = BTreeMap::new();
        for (c, s) in &x.levels[n].theta.symbol_map {
            let d = fbar
                .get(s)
                .and_then(|z| back.get(z))
                .ok_or_else(|| Error::Truncation(format!("{c} has no image within the bound")))?;
            next.insert(c.clone(), (*d).clone());
        }
        fbars.push(fbar);
        f.push(next);
    }
    Ok(OpetopicMap { f })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_dimensions() {
        let t = terminal_tower(2, 4);
        assert_eq!(t.cells(0), vec![point()]);
        assert_eq!(t.cells(1).len(), 1);
        let by_arity = t.counts_by_nodes(2);
        assert_eq!(by_arity, (0..=4).map(|k| (k, 1)).collect());
    }

    #[test]
    fn two_opetopes_are_typed_by_arity() {
        let t = terminal_tower(2, 3);
        let arrow = t.cells(1)[0].clone();
        for c in t.cells(2) {
            let ty = &t.levels[1].cells.symbols[&c];
            assert_eq!(ty.output, arrow);
            assert!(ty.inputs.iter().all(|i| i == &arrow));
            assert_eq!(ty.arity(), Tree::from_term(&c).unwrap().nodes());
        }
    }

    #[test]
    fn terminal_tower_is_valid() {
        let t = terminal_tower(3, 3);
        let r = validate_opetopic_set(&t, 200);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn nonstrict_theta_is_reported() {
        let t = terminal_tower(3, 3);
        let bad = with_nonstrict_theta(&t, 1).unwrap();
        let r = validate_opetopic_set(&bad, 50);
        let f = r.get("θ_1 is strict").unwrap();
        assert!(f.witness.as_deref().unwrap().contains("not strict"));
    }

    #[test]
    fn dropped_symbol_is_not_prone() {
        let t = terminal_tower(3, 3);
        let bad = with_dropped_symbol(&t, 2).unwrap();
        let r = validate_opetopic_set(&bad, 50);
        let f = r.get("ξ_1 is prone").unwrap();
        assert!(!f.passed);
        assert!(f.witness.as_deref().unwrap().contains("not prone"));
    }

    #[test]
    fn maps() {
        let t3 = terminal_tower(3, 3);
        let r = validate_opetopic_map(&identity_map(&t3), &t3, &t3);
        assert!(r.passed(), "{:?}", r.failures());

        let t4 = terminal_tower(3, 4);
        let f = map_to_terminal(&t3, &t4).unwrap();
        let r = validate_opetopic_map(&f, &t3, &t4);
        assert!(r.passed(), "{:?}", r.failures());
        assert!(f.f[3].iter().all(|(a, b)| a == b));
    }

    #[test]
    fn broken_theta_square_has_a_witness() {
        let t = terminal_tower(3, 3);
        let mut f = identity_map(&t);
        // two 3-cells with the same typing, swapped
        let cells = &t.levels[2].cells.symbols;
        let (a, b) = cells
            .iter()
            .tuple_combinations()
            .find(|((_, s), (_, u))| s == u)
            .map(|((a, _), (b, _))| (a.clone(), b.clone()))
            .unwrap();
        f.f[3].insert(a.clone(), b.clone());
        f.f[3].insert(b, a);
        let r = validate_opetopic_map(&f, &t, &t);
        let sq = r.get("θ square at level 2").unwrap();
        assert!(!sq.passed && sq.witness.is_some());
        assert!(r.get("f_3 strict over f_2").unwrap().passed);
    }

    #[test]
    fn json_counts() {
        let t = terminal_tower(2, 2);
        let j = t.to_json();
        assert_eq!(j["dimensions"][2]["count"], 3);
        assert_eq!(j["dimensions"][0]["cells"][0], "*");
    }
}
