//! Webs over a monoid `M`: the free ⊙-monoid on `I_⊗(M)`, with the
//! ⊗-multiplication `ν` built stage by stage.
//!
//! A web's vertical inputs are its node labels in preorder and its vertical output
//! is their composite in `M`. `ν(w; v_1..v_k)` substitutes `v_i` for the `i`-th node
//! of `w`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::freemon::{
    self, corolla, eval_mu, map_tree, mu_stage, section, slot_leaves, OdotContext, Tree,
};
use crate::perm::{all_permutations, block_diag, compose_blocks, move_blocks, Permutation};
use crate::report::{check_all, LawResult, Report};
use crate::sig::{Obj, SigObject, Typing};
use crate::sigmamon::{freshen, label, unlabel, Monoid, MonoidHom};
use crate::term::Term;

/// `I_⊗(M)`: one symbol `m: (m; m)` per element of `M`.
pub struct Labels(pub Arc<dyn Monoid>);

impl SigObject for Labels {
    fn typing_of(&self, s: &Term) -> Option<Typing> {
        self.0.typing(s)?;
        Some(Typing::new(s.clone(), vec![s.clone()]))
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        self.0.enumerate(cap)
    }

    fn describe(&self) -> String {
        format!("I_⊗({})", self.0.name())
    }
}

/// The corrupted variant replaces `ν_1 = (i_0ψ⁻¹, λ)` on the `I_⊗ ⊗ W` summand by
/// the unit branch, returning `η(m)` and dropping the inner web.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nu1 {
    Standard,
    Corrupted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuResult {
    pub web: Tree,
    pub amalgamation: Permutation,
}

impl NuResult {
    /// The web's JSON with an `"amalgamation"` field added.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.web).expect("trees serialize");
        v["amalgamation"] =
            serde_json::to_value(&self.amalgamation).expect("permutations serialize");
        v
    }
}

/// Webs over `m`, with `ν`.
#[derive(Clone)]
pub struct Webs {
    pub m: Arc<dyn Monoid>,
    pub ctx: OdotContext,
    pub nu1: Nu1,
}

impl Webs {
    pub fn new(m: &Arc<dyn Monoid>) -> Self {
        Webs {
            m: m.clone(),
            ctx: OdotContext::new(m, Obj::base(Labels(m.clone())), usize::MAX),
            nu1: Nu1::Standard,
        }
    }

    pub fn with_nu1(mut self, nu1: Nu1) -> Self {
        self.nu1 = nu1;
        self
    }

    /// The vertical output: the composite of the web in `M`.
    pub fn composite(&self, w: &Tree) -> Result<Term> {
        freemon::value(&self.ctx, w)
    }

    pub fn typing(&self, w: &Tree) -> Result<Typing> {
        Ok(Typing::new(self.composite(w)?, w.labels()))
    }

    /// `η(m)`: the single-node web.
    pub fn eta(&self, m: &Term) -> Result<Tree> {
        corolla(&self.ctx, m)
    }

    /// Every web with at most `node_bound` nodes, sorted.
    pub fn enumerate(&self, node_bound: usize) -> Vec<Tree> {
        freemon::enumerate(&self.ctx, node_bound, node_bound)
    }

    fn check_pair(&self, w: &Tree, vs: &[Tree]) -> Result<()> {
        let labels = w.labels();
        if labels.len() != vs.len() {
            return Err(Error::Composability(format!(
                "{w} has {} nodes but {} webs were given",
                labels.len(),
                vs.len()
            )));
        }
        for (i, (l, v)) in labels.iter().zip(vs).enumerate() {
            let c = self.composite(v)?;
            if &c != l {
                return Err(Error::Composability(format!(
                    "web {} composes to {c} but node {} is labelled {l}",
                    i + 1,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `ν = colim ν_n`.
    pub fn nu(&self, w: &Tree, vs: &[Tree]) -> Result<NuResult> {
        self.nu_stage(w.stage(), w, vs)
    }

    /// `ν_n: W_n ⊗ W → W`.
    ///
    /// `ν_0 = i_0ψ⁻¹`, `ν_1 = (i_0ψ⁻¹, λ)`, and for `n ≥ 2`
    /// `ν_n = μ∘(ν_1⊙ν_{n-1})∘φ⁻¹∘(s_n⊗1)`. Both `s_n ⊗ 1` and `φ⁻¹` have identity
    /// amalgamation; `ν_1⊙ν_{n-1}` contributes the block sum of the inner ones and the
    /// staged `μ` the rest.
    pub fn nu_stage(&self, n: usize, w: &Tree, vs: &[Tree]) -> Result<NuResult> {
        if w.stage() > n {
            return Err(Error::Structural(format!("{w} is not in W_{n}")));
        }
        self.check_pair(w, vs)?;
        self.nu_rec(n, w, vs)
    }

    fn nu_rec(&self, n: usize, w: &Tree, vs: &[Tree]) -> Result<NuResult> {
        match (n, w) {
            (_, Tree::Unit(_)) if n <= 1 => Ok(NuResult {
                web: w.clone(),
                amalgamation: Permutation::identity(0),
            }),
            (1, Tree::Node(m, _)) => match self.nu1 {
                Nu1::Standard => {
                    let k = vs[0].nodes();
                    Ok(NuResult {
                        web: vs[0].clone(),
                        amalgamation: Permutation::identity(k),
                    })
                }
                Nu1::Corrupted => Ok(NuResult {
                    web: self.eta(m)?,
                    amalgamation: Permutation::identity(1),
                }),
            },
            _ => {
                let (h, cs, _) = section(&self.ctx, n, w)?;
                // φ⁻¹ splits the inner webs along the vertical inputs of h ⊙ cs
                let mut rest = vs;
                let (vh, tail) = rest.split_at(h.nodes());
                rest = tail;
                let head = self.nu_rec(1, &h, vh)?;
                let mut taus = vec![head.amalgamation];
                let mut rs = Vec::with_capacity(cs.len());
                for c in &cs {
                    let (vc, tail) = rest.split_at(c.nodes());
                    rest = tail;
                    let r = self.nu_rec(n - 1, c, vc)?;
                    taus.push(r.amalgamation);
                    rs.push(r.web);
                }
                let m = rs.iter().map(Tree::stage).max().unwrap_or(0);
                let (web, rho) = mu_stage(&self.ctx, head.web.stage(), m, &head.web, &rs)?;
                Ok(NuResult {
                    web,
                    amalgamation: rho.compose(&block_diag(&taus))?,
                })
            }
        }
    }

    /// Direct substitution: node `i` of `w` is replaced by `vs[i]`, whose leaves
    /// receive the node's children in slot order. Also reports, for each node of the
    /// result in preorder, which `(inner web, node)` it came from.
    pub fn graft_oracle(&self, w: &Tree, vs: &[Tree]) -> Result<(Tree, Vec<(usize, usize)>)> {
        self.check_pair(w, vs)?;
        let mut next = 0;
        self.graft_rec(w, vs, &mut next)
    }

    fn graft_rec(
        &self,
        w: &Tree,
        vs: &[Tree],
        next: &mut usize,
    ) -> Result<(Tree, Vec<(usize, usize)>)> {
        match w {
            Tree::Unit(_) => Ok((w.clone(), Vec::new())),
            Tree::Node(_, cs) => {
                let me = *next;
                *next += 1;
                let mut subs = Vec::with_capacity(cs.len());
                for c in cs {
                    subs.push(self.graft_rec(c, vs, next)?);
                }
                let v = &vs[me];
                let leaves = slot_leaves(&self.ctx, v)?;
                let by_path: BTreeMap<Vec<usize>, usize> = leaves
                    .into_iter()
                    .enumerate()
                    .map(|(j, p)| (p, j))
                    .collect();
                let mut origins = Vec::new();
                let web = plug(
                    v,
                    &mut Vec::new(),
                    &by_path,
                    &subs,
                    me,
                    &mut 0,
                    &mut origins,
                );
                Ok((web, origins))
            }
        }
    }

    /// The forced amalgamation of `ν(w; vs)`: each input (a node of some `v_i`) is
    /// sent to the position of that node in the grafted web.
    pub fn graft_tracking(&self, w: &Tree, vs: &[Tree]) -> Result<(Tree, Permutation)> {
        let (web, origins) = self.graft_oracle(w, vs)?;
        let source: Vec<(usize, usize)> = vs
            .iter()
            .enumerate()
            .flat_map(|(i, v)| (0..v.nodes()).map(move |k| (i, k)))
            .collect();
        Ok((web, Permutation::tracking(&source, &origins)?))
    }

    /// `W(h)`: relabel nodes by `h`, moving child `i` of a node labelled `m` to slot
    /// `σ_m(i)`.
    pub fn map(&self, h: &MonoidHom, cod: &Webs, w: &Tree) -> Result<(Tree, Permutation)> {
        let node = |m: &Term| {
            let (m2, sigma) = h.apply(m)?;
            Ok((m2, Permutation::identity(1), sigma))
        };
        let ty = |o: &Term| (h.type_map)(o);
        map_tree(&cod.ctx, w, &node, &ty)
    }
}

fn plug(
    v: &Tree,
    path: &mut Vec<usize>,
    slot_of: &BTreeMap<Vec<usize>, usize>,
    subs: &[(Tree, Vec<(usize, usize)>)],
    me: usize,
    k: &mut usize,
    origins: &mut Vec<(usize, usize)>,
) -> Tree {
    match v {
        Tree::Unit(_) => {
            let (t, o) = &subs[slot_of[path.as_slice()]];
            origins.extend(o.iter().copied());
            t.clone()
        }
        Tree::Node(g, cs) => {
            origins.push((me, *k));
            *k += 1;
            let mut out = Vec::with_capacity(cs.len());
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                out.push(plug(c, path, slot_of, subs, me, k, origins));
                path.pop();
            }
            Tree::Node(g.clone(), out)
        }
    }
}

/// `W(M)` as a lazily evaluated monoid in `Sig_a` over the elements of `M`.
pub struct WebMonoid {
    pub webs: Webs,
    pub node_bound: usize,
    memo: Mutex<HashMap<(Term, Vec<Term>), (Term, Permutation)>>,
}

impl WebMonoid {
    pub fn new(m: &Arc<dyn Monoid>, node_bound: usize) -> Self {
        WebMonoid {
            webs: Webs::new(m),
            node_bound,
            memo: Mutex::default(),
        }
    }

    pub fn shared(self) -> Arc<dyn Monoid> {
        Arc::new(self)
    }

    /// All webs within the bound, or a truncation error if there are more than `cap`.
    pub fn try_enumerate(&self, cap: usize) -> Result<Vec<Term>> {
        let all = self.webs.enumerate(self.node_bound);
        if all.len() > cap {
            return Err(Error::Truncation(format!(
                "{} webs with at most {} nodes exceed the cap {cap}",
                all.len(),
                self.node_bound
            )));
        }
        Ok(all.iter().map(Tree::to_term).collect())
    }
}

impl Monoid for WebMonoid {
    fn name(&self) -> String {
        format!("W({})", self.webs.m.name())
    }

    fn types(&self) -> Vec<Term> {
        self.webs.m.enumerate(usize::MAX)
    }

    fn typing(&self, t: &Term) -> Option<Typing> {
        self.webs.typing(&Tree::from_term(t).ok()?).ok()
    }

    fn unit(&self, o: &Term) -> Result<Term> {
        Ok(self.webs.eta(o)?.to_term())
    }

    fn mult(&self, head: &Term, args: &[Term]) -> Result<(Term, Permutation)> {
        let key = (head.clone(), args.to_vec());
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let w = Tree::from_term(head)?;
        let vs = args
            .iter()
            .map(Tree::from_term)
            .collect::<Result<Vec<_>>>()?;
        let r = self.webs.nu(&w, &vs)?;
        let out = (r.web.to_term(), r.amalgamation);
        self.memo
            .lock()
            .expect("memo lock")
            .insert(key, out.clone());
        Ok(out)
    }

    fn enumerate(&self, cap: usize) -> Vec<Term> {
        let mut all = self.webs.enumerate(self.node_bound);
        all.truncate(cap);
        all.iter().map(Tree::to_term).collect()
    }
}

// ---------------------------------------------------------------------------
// Law suites.

/// Elements `⟨w; v_1..v_k⟩` of `W ⊗ W` with at most `node_bound` nodes in total.
pub fn tensor_pairs(webs: &Webs, node_bound: usize, cap: usize) -> Vec<(Tree, Vec<Tree>)> {
    pairs_with(webs, node_bound, |w| node_bound - w.nodes(), cap)
}

/// Elements `⟨w; v_1..v_k⟩` where both `w` and `ν(w; vs)` have at most `node_bound`
/// nodes.
pub fn tensor_pairs_each(webs: &Webs, node_bound: usize, cap: usize) -> Vec<(Tree, Vec<Tree>)> {
    pairs_with(webs, node_bound, |_| node_bound, cap)
}

fn pairs_with(
    webs: &Webs,
    node_bound: usize,
    budget: impl Fn(&Tree) -> usize,
    cap: usize,
) -> Vec<(Tree, Vec<Tree>)> {
    let all = webs.enumerate(node_bound);
    let mut by_composite: BTreeMap<Term, Vec<&Tree>> = BTreeMap::new();
    for v in &all {
        if let Ok(c) = webs.composite(v) {
            by_composite.entry(c).or_default().push(v);
        }
    }
    let mut out = Vec::new();
    for w in &all {
        let labels = w.labels();
        let pools: Vec<&[&Tree]> = labels
            .iter()
            .map(|l| by_composite.get(l).map(Vec::as_slice).unwrap_or_default())
            .collect();
        fill(&pools, budget(w), &mut Vec::new(), &mut |vs| {
            if out.len() < cap {
                out.push((w.clone(), vs.to_vec()));
            }
        });
        if out.len() >= cap {
            break;
        }
    }
    out
}

fn fill(pools: &[&[&Tree]], budget: usize, cur: &mut Vec<Tree>, emit: &mut dyn FnMut(&[Tree])) {
    let Some((pool, rest)) = pools.split_first() else {
        emit(cur);
        return;
    };
    for v in pool.iter() {
        let n = v.nodes();
        if n <= budget {
            cur.push((*v).clone());
            fill(rest, budget - n, cur, emit);
            cur.pop();
        }
    }
}

fn fail(e: Error) -> String {
    e.to_string()
}

/// `ν` unit laws, associativity, the main diagram, the bootstrap equation, stage
/// compatibility, agreement with the graft oracle, section laws and the coherence
/// square, all on webs with at most `node_bound` nodes.
pub fn check_web_laws(webs: &Webs, node_bound: usize, cap: usize) -> Report {
    let mut report = Report::new(format!("web laws over {}", webs.m.name()))
        .bound("nodes", node_bound)
        .bound("cap", cap);
    let all = webs.enumerate(node_bound);
    let pairs = tensor_pairs(webs, node_bound, cap);

    report.push(check_all("ν∘(η⊗1) = λ", &all, |v| {
        let c = webs.composite(v).map_err(fail)?;
        let r = webs
            .nu(&webs.eta(&c).map_err(fail)?, std::slice::from_ref(v))
            .map_err(fail)?;
        if &r.web == *v && r.amalgamation.is_identity() && r.amalgamation.len() == v.nodes() {
            Ok(())
        } else {
            Err(format!("η({c}) ⊗ {v} ↦ {} with {}", r.web, r.amalgamation))
        }
    }));
    report.push(check_all("ν∘(1⊗η) = ρ⁻¹", &all, |w| {
        let etas = w
            .labels()
            .iter()
            .map(|l| webs.eta(l))
            .collect::<Result<Vec<_>>>()
            .map_err(fail)?;
        let r = webs.nu(w, &etas).map_err(fail)?;
        if &r.web == *w && r.amalgamation.is_identity() {
            Ok(())
        } else {
            Err(format!("{w} ⊗ η.. ↦ {} with {}", r.web, r.amalgamation))
        }
    }));

    report.push(graft_agreement(webs, &pairs));

    report.push(check_all(
        "ν_n∘(i_n⊗1) = ν_{n-1}",
        &pairs,
        |(w, vs)| {
            let base = webs.nu(w, vs).map_err(fail)?;
            for n in w.stage() + 1..=w.stage() + 2 {
                let r = webs.nu_stage(n, w, vs).map_err(fail)?;
                if r != base {
                    return Err(format!("{w}: ν_{n} gives {} {}", r.web, r.amalgamation));
                }
            }
            Ok(())
        },
    ));

    report.push(check_all(
        "bootstrap: ν = μ∘(ν⊙ν)∘φ⁻¹∘(ŝ⊗1)",
        &pairs,
        |(w, vs)| {
            let lhs = webs.nu(w, vs).map_err(fail)?;
            let (h, cs, _) = section(&webs.ctx, w.stage().max(1), w).map_err(fail)?;
            let mut rest = vs.as_slice();
            let (vh, tail) = rest.split_at(h.nodes());
            rest = tail;
            let head = webs.nu(&h, vh).map_err(fail)?;
            let mut taus = vec![head.amalgamation];
            let mut rs = Vec::new();
            for c in &cs {
                let (vc, tail) = rest.split_at(c.nodes());
                rest = tail;
                let r = webs.nu(c, vc).map_err(fail)?;
                taus.push(r.amalgamation);
                rs.push(r.web);
            }
            let (web, rho) = eval_mu(&webs.ctx, &head.web, &rs).map_err(fail)?;
            let amalg = rho.compose(&block_diag(&taus)).map_err(fail)?;
            if web == lhs.web && amalg == lhs.amalgamation {
                Ok(())
            } else {
                Err(format!(
                    "{w}: {} {} vs {web} {amalg}",
                    lhs.web, lhs.amalgamation
                ))
            }
        },
    ));

    let triples = tensor_triples(webs, &pairs, node_bound, cap);
    report.push(check_all("ν associativity", &triples, |(w, vs, us)| {
        nu_associativity_at(webs, w, vs, us).map_err(fail)?
    }));

    let mains = main_diagram_elements(webs, node_bound, cap);
    report.push(check_all(
        "main diagram μ∘(ν⊙ν) = ν∘(μ⊗1)∘φ",
        &mains,
        |e| main_diagram_at(webs, e).map_err(fail)?,
    ));

    for r in freemon::check_sections(&webs.ctx, node_bound, node_bound) {
        report.push(r);
    }
    let (r, cx) = freemon::check_coherence_lemma(&webs.ctx, 2, node_bound.min(4), cap);
    report.push(r);
    if let Some((n, m, w, vs, up, low)) = cx {
        report.notes.push(format!(
            "coherence square differs on the I⊗X_m summand (n={n}, m={m}): {w}∘{vs:?} gives {:?} one way and {:?} the other; both agree after μ_1",
            (up.0, up.1),
            (low.0, low.1)
        ));
    }
    report
}

/// `ν` against direct grafting, web and amalgamation.
pub fn graft_agreement(webs: &Webs, pairs: &[(Tree, Vec<Tree>)]) -> LawResult {
    check_all("ν agrees with the graft oracle", pairs, |(w, vs)| {
        let r = webs.nu(w, vs).map_err(fail)?;
        let (g, t) = webs.graft_tracking(w, vs).map_err(fail)?;
        if r.web != g {
            return Err(format!("{w}: ν gives {} but grafting gives {g}", r.web));
        }
        if r.amalgamation != t {
            return Err(format!(
                "{w}: ν amalgamation {} but node tracking {t}",
                r.amalgamation
            ));
        }
        Ok(())
    })
}

/// `((w; vs); us)` with at most `node_bound` nodes in total.
pub fn tensor_triples(
    webs: &Webs,
    pairs: &[(Tree, Vec<Tree>)],
    node_bound: usize,
    cap: usize,
) -> Vec<(Tree, Vec<Tree>, Vec<Tree>)> {
    let all = webs.enumerate(node_bound);
    let mut by_composite: BTreeMap<Term, Vec<&Tree>> = BTreeMap::new();
    for v in &all {
        if let Ok(c) = webs.composite(v) {
            by_composite.entry(c).or_default().push(v);
        }
    }
    let mut out = Vec::new();
    for (w, vs) in pairs {
        let labels: Vec<Term> = vs.iter().flat_map(Tree::labels).collect();
        let pools: Vec<&[&Tree]> = labels
            .iter()
            .map(|l| by_composite.get(l).map(Vec::as_slice).unwrap_or_default())
            .collect();
        let used = w.nodes() + vs.iter().map(Tree::nodes).sum::<usize>();
        fill(&pools, node_bound - used, &mut Vec::new(), &mut |us| {
            if out.len() < cap {
                out.push((w.clone(), vs.clone(), us.to_vec()));
            }
        });
        if out.len() >= cap {
            break;
        }
    }
    out
}

/// `ν∘(ν⊗1)` against `ν∘(1⊗ν)∘α⁻¹` at `((w; vs); us)`.
pub fn nu_associativity_at(
    webs: &Webs,
    w: &Tree,
    vs: &[Tree],
    us: &[Tree],
) -> Result<std::result::Result<(), String>> {
    // ν⊗1 moves the block of us attached to input i to position ρ(i)
    let inner = webs.nu(w, vs)?;
    let lens: Vec<usize> = us.iter().map(Tree::nodes).collect();
    let moved = inner.amalgamation.permute(us);
    let lhs = webs.nu(&inner.web, &moved)?;
    let lhs_p = lhs
        .amalgamation
        .compose(&move_blocks(&inner.amalgamation, &lens)?)?;

    let mut rest = us;
    let mut rs = Vec::with_capacity(vs.len());
    let mut rhos = Vec::with_capacity(vs.len());
    for v in vs {
        let (uv, tail) = rest.split_at(v.nodes());
        rest = tail;
        let r = webs.nu(v, uv)?;
        rs.push(r.web);
        rhos.push(r.amalgamation);
    }
    let rhs = webs.nu(w, &rs)?;
    let rhs_p = rhs.amalgamation.compose(&block_diag(&rhos))?;
    Ok(if lhs.web == rhs.web && lhs_p == rhs_p {
        Ok(())
    } else {
        Err(format!("{} {lhs_p} vs {} {rhs_p}", lhs.web, rhs.web))
    })
}

/// An element `(w; vs) ⊙ ((w'_j; vs'_j))_j` of `(W⊗W)⊙(W⊗W)`.
#[derive(Clone, Debug)]
pub struct MainElement {
    pub outer: (Tree, Vec<Tree>),
    pub inners: Vec<(Tree, Vec<Tree>)>,
}

pub fn main_diagram_elements(webs: &Webs, node_bound: usize, cap: usize) -> Vec<MainElement> {
    let pairs = tensor_pairs(webs, node_bound, usize::MAX);
    let size = |(w, vs): &(Tree, Vec<Tree>)| w.nodes() + vs.iter().map(Tree::nodes).sum::<usize>();
    let mut by_output: BTreeMap<Term, Vec<&(Tree, Vec<Tree>)>> = BTreeMap::new();
    for p in &pairs {
        if let Ok(o) = freemon::output(&webs.ctx, &p.0) {
            by_output.entry(o).or_default().push(p);
        }
    }
    let mut out = Vec::new();
    for p in &pairs {
        let Ok(c) = webs.composite(&p.0) else {
            continue;
        };
        let slots = webs.m.typing(&c).map(|t| t.inputs).unwrap_or_default();
        let pools: Vec<&[&(Tree, Vec<Tree>)]> = slots
            .iter()
            .map(|s| by_output.get(s).map(Vec::as_slice).unwrap_or_default())
            .collect();
        let budget = node_bound.saturating_sub(size(p));
        let mut cur = Vec::new();
        fill_pairs(&pools, budget, &size, &mut cur, &mut |inners| {
            if out.len() < cap {
                out.push(MainElement {
                    outer: p.clone(),
                    inners: inners.to_vec(),
                });
            }
        });
        if out.len() >= cap {
            break;
        }
    }
    out
}

type Pair = (Tree, Vec<Tree>);

fn fill_pairs(
    pools: &[&[&Pair]],
    budget: usize,
    size: &dyn Fn(&Pair) -> usize,
    cur: &mut Vec<Pair>,
    emit: &mut dyn FnMut(&[Pair]),
) {
    let Some((pool, rest)) = pools.split_first() else {
        emit(cur);
        return;
    };
    for p in pool.iter() {
        let n = size(p);
        if n <= budget {
            cur.push((*p).clone());
            fill_pairs(rest, budget - n, size, cur, emit);
            cur.pop();
        }
    }
}

/// Both legs of the main diagram at one element.
pub fn main_diagram_at(webs: &Webs, e: &MainElement) -> Result<std::result::Result<(), String>> {
    // μ∘(ν⊙ν): over the identity of M, ν⊙ν has block-sum amalgamation
    let top = webs.nu(&e.outer.0, &e.outer.1)?;
    let mut rs = Vec::new();
    let mut taus = vec![top.amalgamation.clone()];
    for (w, vs) in &e.inners {
        let r = webs.nu(w, vs)?;
        rs.push(r.web);
        taus.push(r.amalgamation);
    }
    let (lhs, rho) = eval_mu(&webs.ctx, &top.web, &rs)?;
    let lhs_p = rho.compose(&block_diag(&taus))?;

    // ν∘(μ⊗1)∘φ: φ concatenates the inner lists, μ⊗1 moves their blocks
    let ws: Vec<Tree> = e.inners.iter().map(|(w, _)| w.clone()).collect();
    let (mw, rho_mu) = eval_mu(&webs.ctx, &e.outer.0, &ws)?;
    let mut xs: Vec<Tree> = e.outer.1.clone();
    for (_, vs) in &e.inners {
        xs.extend(vs.iter().cloned());
    }
    let lens: Vec<usize> = xs.iter().map(Tree::nodes).collect();
    let moved = rho_mu.permute(&xs);
    let rhs = webs.nu(&mw, &moved)?;
    let rhs_p = rhs.amalgamation.compose(&move_blocks(&rho_mu, &lens)?)?;
    Ok(if lhs == rhs.web && lhs_p == rhs_p {
        Ok(())
    } else {
        Err(format!("{lhs} {lhs_p} vs {} {rhs_p}", rhs.web))
    })
}

/// `W(h)` commutes with `η` and `ν` on every pair within the bound.
pub fn check_web_functor(h: &MonoidHom, node_bound: usize, cap: usize) -> Vec<LawResult> {
    let dom = Webs::new(&h.dom);
    let cod = Webs::new(&h.cod);
    let mut out = Vec::new();
    let syms = h.dom.enumerate(cap);
    out.push(check_all("W(h)∘η = η∘h", &syms, |m| {
        let (img, sigma) = dom.map(h, &cod, &dom.eta(m).map_err(fail)?).map_err(fail)?;
        let want = cod.eta(&h.apply(m).map_err(fail)?.0).map_err(fail)?;
        if img == want && sigma.is_identity() {
            Ok(())
        } else {
            Err(format!("η({m}) ↦ {img} with {sigma}, expected {want}"))
        }
    }));
    let pairs = tensor_pairs(&dom, node_bound, cap);
    out.push(check_all(
        "W(h)∘ν = ν∘(W(h)⊗W(h))",
        &pairs,
        |(w, vs)| {
            let r = dom.nu(w, vs).map_err(fail)?;
            let (fr, phi) = dom.map(h, &cod, &r.web).map_err(fail)?;
            let lhs_p = phi.compose(&r.amalgamation).map_err(fail)?;
            let (fw, sigma) = dom.map(h, &cod, w).map_err(fail)?;
            let mut fvs = Vec::new();
            let mut taus = Vec::new();
            for v in vs {
                let (fv, tau) = dom.map(h, &cod, v).map_err(fail)?;
                fvs.push(fv);
                taus.push(tau);
            }
            let fvs = sigma.permute(&fvs);
            let r2 = cod.nu(&fw, &fvs).map_err(fail)?;
            let rhs_p = r2
                .amalgamation
                .compose(&compose_blocks(&sigma, &taus).map_err(fail)?)
                .map_err(fail)?;
            if fr == r2.web && lhs_p == rhs_p {
                Ok(())
            } else {
                Err(format!("{w}: {fr} {lhs_p} vs {} {rhs_p}", r2.web))
            }
        },
    ));
    out
}

// ---------------------------------------------------------------------------
// Separation principle at the level of webs.

/// Relabels `⟨w; vs⟩` over `M_ℕ` so that every node of every `v_i` carries a
/// distinct power of two and each node of `w` the sum of its replacement's labels.
pub fn lift_pair(w: &Tree, vs: &[Tree]) -> (Tree, Vec<Tree>) {
    let mut next = 0u32;
    let mut sums = Vec::with_capacity(vs.len());
    let lifted: Vec<Tree> = vs
        .iter()
        .map(|v| {
            let mut s = 0usize;
            let t = relabel(v, &mut |m| {
                let n = 1usize << next;
                next += 1;
                s += n;
                label(m, n)
            });
            sums.push(s);
            t
        })
        .collect();
    let mut i = 0;
    let w2 = relabel(w, &mut |m| {
        let n = sums[i];
        i += 1;
        label(m, n)
    });
    (w2, lifted)
}

fn relabel(t: &Tree, f: &mut dyn FnMut(&Term) -> Term) -> Tree {
    match t {
        Tree::Unit(o) => Tree::Unit(o.clone()),
        Tree::Node(m, cs) => {
            let m2 = f(m);
            Tree::Node(m2, cs.iter().map(|c| relabel(c, f)).collect())
        }
    }
}

/// Erases `M_ℕ` labels.
pub fn unlift(t: &Tree) -> Tree {
    relabel(t, &mut |m| {
        unlabel(m).map(|(x, _)| x).unwrap_or_else(|| m.clone())
    })
}

/// Over `M_ℕ` every input of `⟨w; vs⟩` is distinct, so its amalgamation is forced by
/// where each label lands. Checks that `ν` computes exactly that, and that the lifted
/// result projects onto the result over `M`.
pub fn check_web_separation(webs: &Webs, node_bound: usize, cap: usize) -> LawResult {
    let pairs = tensor_pairs(webs, node_bound, cap);
    let bound = (1usize << node_bound) - 1;
    let (fresh, _) = freshen(&webs.m, bound.max(1));
    let lifted_webs = Webs::new(&fresh);
    check_all(
        "ν amalgamation is the forced one over M_ℕ",
        &pairs,
        |(w, vs)| {
            let (lw, lvs) = lift_pair(w, vs);
            let r = lifted_webs.nu(&lw, &lvs).map_err(fail)?;
            let source: Vec<Term> = lvs.iter().flat_map(Tree::labels).collect();
            let forced = Permutation::tracking(&source, &r.web.labels()).map_err(fail)?;
            if r.amalgamation != forced {
                return Err(format!(
                    "{lw}: ν gives {} but labels force {forced}",
                    r.amalgamation
                ));
            }
            let base = webs.nu(w, vs).map_err(fail)?;
            if unlift(&r.web) != base.web || base.amalgamation != forced {
                return Err(format!(
                    "{w}: lifted result does not project to {}",
                    base.web
                ));
            }
            Ok(())
        },
    )
}

// ---------------------------------------------------------------------------
// Retyping to standard amalgamation.

/// A `ν`-evaluation `⟨outer; inners⟩ ↦ result` with amalgamation `ρ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Instance {
    pub outer: Tree,
    pub inners: Vec<Tree>,
    pub result: Tree,
    pub amalgamation: Permutation,
}

impl Instance {
    pub fn evaluate(webs: &Webs, outer: &Tree, inners: &[Tree]) -> Result<Instance> {
        let r = webs.nu(outer, inners)?;
        Ok(Instance {
            outer: outer.clone(),
            inners: inners.to_vec(),
            result: r.web,
            amalgamation: r.amalgamation,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Retyping {
    /// New input order for each web: position `i` of its preorder list goes to `π(i)`.
    Feasible(BTreeMap<String, Permutation>),
    /// Per instance, the label pairs adjacent in the result under every retyping
    /// that makes that instance alone standard.
    Infeasible(Vec<Vec<(Term, Term)>>),
}

/// Searches all reorderings `π_x` of the input lists of the webs involved for one
/// under which every instance has identity amalgamation, i.e.
/// `π_result∘ρ = π_outer∗(π_inner_1..π_inner_k)`.
pub fn standard_retyping_search(instances: &[Instance]) -> Retyping {
    let mut webs: BTreeSet<Tree> = BTreeSet::new();
    for i in instances {
        webs.insert(i.outer.clone());
        webs.insert(i.result.clone());
        webs.extend(i.inners.iter().cloned());
    }
    let webs: Vec<Tree> = webs.into_iter().collect();
    let index: BTreeMap<&Tree, usize> = webs.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let choices: Vec<Vec<Permutation>> = webs.iter().map(|w| all_permutations(w.nodes())).collect();

    let standard = |inst: &Instance, pick: &[usize]| -> bool {
        let pi = |w: &Tree| &choices[index[w]][pick[index[w]]];
        let inner: Vec<Permutation> = inst.inners.iter().map(|v| pi(v).clone()).collect();
        let Ok(rhs) = compose_blocks(pi(&inst.outer), &inner) else {
            return false;
        };
        pi(&inst.result).compose(&inst.amalgamation).ok() == Some(rhs)
    };

    let mut pick = vec![0usize; webs.len()];
    let mut per_instance: Vec<Option<BTreeSet<(Term, Term)>>> = vec![None; instances.len()];
    loop {
        let ok: Vec<bool> = instances.iter().map(|i| standard(i, &pick)).collect();
        if ok.iter().all(|&b| b) {
            let map = webs
                .iter()
                .zip(&pick)
                .zip(&choices)
                .map(|((w, &p), c)| (w.to_string(), c[p].clone()))
                .collect();
            return Retyping::Feasible(map);
        }
        for (k, inst) in instances.iter().enumerate() {
            if !ok[k] {
                continue;
            }
            let order = choices[index[&inst.result]][pick[index[&inst.result]]]
                .permute(&inst.result.labels());
            let adj: BTreeSet<(Term, Term)> = order
                .windows(2)
                .map(|p| {
                    let (a, b) = (p[0].clone(), p[1].clone());
                    if a <= b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
                .collect();
            per_instance[k] = Some(match per_instance[k].take() {
                None => adj,
                Some(prev) => prev.intersection(&adj).cloned().collect(),
            });
        }
        let mut k = 0;
        while k < pick.len() {
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    Retyping::Infeasible(
        per_instance
            .into_iter()
            .map(|s| s.map(|s| s.into_iter().collect()).unwrap_or_default())
            .collect(),
    )
}

/// The three compositions in the three-type monoid, each landing on
/// `c·b(s, t)`.
pub fn three_type_pairs() -> Vec<(Tree, Vec<Tree>)> {
    let u = Tree::unit;
    let n = |g: &str, cs: Vec<Tree>| Tree::node(g, cs);
    let c = |x: Tree| n("c", vec![x]);
    let s = || n("s", vec![u("square")]);
    let t = || n("t", vec![u("triangle")]);
    let b = |x: Tree, y: Tree| n("b", vec![x, y]);
    let eta_c = c(u("circle"));
    let eta_s = s();
    let eta_t = t();
    vec![
        (
            c(b(s(), u("triangle"))),
            vec![eta_c.clone(), b(u("square"), t()), eta_s],
        ),
        (
            c(b(u("square"), t())),
            vec![eta_c, b(s(), u("triangle")), eta_t.clone()],
        ),
        (
            b(s(), t()),
            vec![c(b(u("square"), u("triangle"))), s(), eta_t],
        ),
    ]
}

// ---------------------------------------------------------------------------
// DOT.

/// Graphviz rendering: one box per node labelled by its symbol, points for units.
pub fn to_dot(w: &Tree, name: &str) -> String {
    let mut out = format!("digraph \"{name}\" {{\n  rankdir=BT;\n");
    let mut next = 0;
    dot_rec(w, &mut next, &mut out);
    out.push_str("}\n");
    out
}

fn dot_rec(t: &Tree, next: &mut usize, out: &mut String) -> usize {
    let me = *next;
    *next += 1;
    match t {
        Tree::Unit(o) => {
            let _ = writeln!(out, "  n{me} [shape=point, xlabel=\"{o}\"];");
        }
        Tree::Node(g, cs) => {
            let _ = writeln!(out, "  n{me} [shape=box, label=\"{g}\"];");
            for c in cs {
                let k = dot_rec(c, next, out);
                let _ = writeln!(out, "  n{k} -> n{me};");
            }
        }
    }
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m_twist, three_type, trivial};
    use crate::sigmamon::validate_monoid;

    fn webs_c() -> Webs {
        Webs::new(&three_type().shared())
    }

    fn by_root(webs: &Webs, bound: usize) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for w in webs.enumerate(bound) {
            let o = freemon::output(&webs.ctx, &w).unwrap().to_string();
            let row = out.entry(o).or_insert_with(|| vec![0; bound + 1]);
            row[w.nodes()] += 1;
        }
        out
    }

    #[test]
    fn three_type_web_counts() {
        let webs = webs_c();
        let counts = by_root(&webs, 5);
        assert_eq!(counts["circle"], vec![1, 3, 10, 32, 96, 272]);
        assert_eq!(counts["square"], vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(counts["triangle"], vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(webs.enumerate(5).len(), 540);
    }

    #[test]
    fn trivial_monoid_webs_are_chains() {
        let webs = Webs::new(&trivial(&["o"]).shared());
        let counts: Vec<usize> = (0..5)
            .map(|n| freemon::enumerate(&webs.ctx, n, usize::MAX).len())
            .collect();
        assert_eq!(counts, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn nu_base_cases() {
        let webs = webs_c();
        let r = webs.nu(&Tree::unit("circle"), &[]).unwrap();
        assert_eq!(r.web, Tree::unit("circle"));
        let v = Tree::node(
            "b",
            vec![
                Tree::node("s", vec![Tree::unit("square")]),
                Tree::unit("triangle"),
            ],
        );
        let r = webs
            .nu(&webs.eta(&"b".into()).unwrap(), std::slice::from_ref(&v))
            .unwrap();
        assert_eq!(r.web, v);
        assert!(r.amalgamation.is_identity());
        assert!(webs.nu(&webs.eta(&"c".into()).unwrap(), &[v]).is_err());
    }

    #[test]
    fn grafting_two_corollas() {
        let webs = webs_c();
        let w = webs.eta(&"c".into()).unwrap();
        let two = Tree::node("c", vec![webs.eta(&"c".into()).unwrap()]);
        let (g, _) = webs.graft_oracle(&w, std::slice::from_ref(&two)).unwrap();
        assert_eq!(g, two);
    }

    #[test]
    fn three_type_compositions() {
        let webs = webs_c();
        let target = Tree::node(
            "c",
            vec![Tree::node(
                "b",
                vec![
                    Tree::node("s", vec![Tree::unit("square")]),
                    Tree::node("t", vec![Tree::unit("triangle")]),
                ],
            )],
        );
        let mut amalgs = Vec::new();
        for (w, vs) in three_type_pairs() {
            let r = webs.nu(&w, &vs).unwrap();
            assert_eq!(r.web, target);
            assert_eq!(r.amalgamation, webs.graft_tracking(&w, &vs).unwrap().1);
            amalgs.push(r.amalgamation.images().to_vec());
        }
        assert_eq!(
            amalgs,
            vec![vec![1, 2, 4, 3], vec![1, 2, 3, 4], vec![1, 2, 3, 4]]
        );
        assert_eq!(target.stage(), 3);
        assert!(!freemon::enumerate(&webs.ctx, 2, 5).contains(&target));
        assert!(freemon::enumerate(&webs.ctx, 3, 5).contains(&target));
    }

    #[test]
    fn retyping_search() {
        let webs = webs_c();
        let instances: Vec<Instance> = three_type_pairs()
            .iter()
            .map(|(w, vs)| Instance::evaluate(&webs, w, vs).unwrap())
            .collect();
        match standard_retyping_search(&instances) {
            Retyping::Infeasible(cert) => {
                let b = Term::atom("b");
                let mut neighbours = BTreeSet::new();
                for adj in &cert {
                    for (x, y) in adj {
                        if x == &b {
                            neighbours.insert(y.clone());
                        } else if y == &b {
                            neighbours.insert(x.clone());
                        }
                    }
                }
                assert_eq!(neighbours.len(), 3);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        for skip in 0..3 {
            let sub: Vec<Instance> = instances
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, x)| x.clone())
                .collect();
            assert!(matches!(
                standard_retyping_search(&sub),
                Retyping::Feasible(_)
            ));
            assert!(matches!(
                standard_retyping_search(&[instances[skip].clone()]),
                Retyping::Feasible(_)
            ));
        }
    }

    #[test]
    fn web_laws_small() {
        for m in [three_type().shared(), m_twist().shared()] {
            let webs = Webs::new(&m);
            let r = check_web_laws(&webs, 3, 2000);
            assert!(r.passed(), "{:?}", r.failures());
            assert!(r.results.iter().all(|x| x.checked > 0), "{:?}", r.results);
        }
    }

    #[test]
    fn corrupted_nu1_breaks_the_unit_law() {
        let webs = webs_c().with_nu1(Nu1::Corrupted);
        let r = check_web_laws(&webs, 2, 200);
        let unit = r.get("ν∘(η⊗1) = λ").unwrap();
        assert!(!unit.passed);
        assert!(unit.witness.is_some());
    }

    #[test]
    fn web_monoid_is_a_monoid() {
        let w = WebMonoid::new(&m_twist().shared(), 2).shared();
        let r = validate_monoid(&w, 300);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn separation() {
        for m in [three_type().shared(), m_twist().shared()] {
            let r = check_web_separation(&Webs::new(&m), 3, 500);
            assert!(r.passed && r.checked > 0, "{r:?}");
        }
    }

    #[test]
    fn functor_laws() {
        let m = three_type().shared();
        let r = check_web_functor(&MonoidHom::identity(&m), 3, 300);
        assert!(r.iter().all(|x| x.passed && x.checked > 0), "{r:?}");
        let (_, pi) = freshen(&m, 3);
        let r = check_web_functor(&pi, 2, 300);
        assert!(r.iter().all(|x| x.passed && x.checked > 0), "{r:?}");
    }

    #[test]
    fn nu_result_json() {
        let webs = webs_c();
        let (w, vs) = &three_type_pairs()[0];
        let j = webs.nu(w, vs).unwrap().to_json();
        assert_eq!(j["node"], "c");
        assert_eq!(j["amalgamation"], serde_json::json!([1, 2, 4, 3]));
    }

    #[test]
    fn dot_is_deterministic() {
        let (w, _) = &three_type_pairs()[2];
        let d = to_dot(w, "w");
        assert_eq!(d, to_dot(w, "w"));
        assert!(d.contains("label=\"b\""));
        assert_eq!(d.matches("->").count(), 4);
    }
}
