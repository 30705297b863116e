//! The staged free monoid `X_∞ = colim X_n`, `X_{n+1} = I ⊔ X ⊗ X_n`, over a
//! monoidal context.
//!
//! Elements of `X_∞` are trees. A context says what a node's children plug into
//! (its slots), how slots of a composite are ordered (the routing `γ`), and which
//! inputs a tree carries. The same engine gives `F_⊗` for plain signatures and
//! `F_⊙` for objects over a monoid.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{block_diag, compose_blocks, move_blocks, pad_block, Permutation};
use crate::report::{check_all, LawResult};
use crate::sig::{Obj, SigMorphism, Signature, Typing};
use crate::sigmamon::Monoid;
use crate::term::{tag, Term};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "TreeRepr", into = "TreeRepr")]
pub enum Tree {
    Unit(Term),
    Node(Term, Vec<Tree>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TreeRepr {
    Unit { unit: Term },
    Node { node: Term, children: Vec<Tree> },
}

impl From<TreeRepr> for Tree {
    fn from(r: TreeRepr) -> Tree {
        match r {
            TreeRepr::Unit { unit } => Tree::Unit(unit),
            TreeRepr::Node { node, children } => Tree::Node(node, children),
        }
    }
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> TreeRepr {
        match t {
            Tree::Unit(unit) => TreeRepr::Unit { unit },
            Tree::Node(node, children) => TreeRepr::Node { node, children },
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Tree {
    pub fn unit(o: impl Into<Term>) -> Tree {
        Tree::Unit(o.into())
    }

    pub fn node(g: impl Into<Term>, children: Vec<Tree>) -> Tree {
        Tree::Node(g.into(), children)
    }

    /// Units are stage 0, a node is one more than its deepest child.
    pub fn stage(&self) -> usize {
        match self {
            Tree::Unit(_) => 0,
            Tree::Node(_, cs) => 1 + cs.iter().map(Tree::stage).max().unwrap_or(0),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            Tree::Unit(_) => 0,
            Tree::Node(_, cs) => 1 + cs.iter().map(Tree::nodes).sum::<usize>(),
        }
    }

    /// Node labels in preorder.
    pub fn labels(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.walk(&mut |g| out.push(g.clone()));
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Term)) {
        if let Tree::Node(g, cs) = self {
            visit(g);
            for c in cs {
                c.walk(visit);
            }
        }
    }

    /// `u(o)` or `n(g, children..)`.
    pub fn to_term(&self) -> Term {
        match self {
            Tree::Unit(o) => Term::app(tag::WEB_UNIT, vec![o.clone()]),
            Tree::Node(g, cs) => {
                let mut args = vec![g.clone()];
                args.extend(cs.iter().map(Tree::to_term));
                Term::app(tag::WEB_NODE, args)
            }
        }
    }

    pub fn from_term(t: &Term) -> Result<Tree> {
        if let Some([o]) = t.args_of(tag::WEB_UNIT) {
            return Ok(Tree::Unit(o.clone()));
        }
        if let Some(args) = t.args_of(tag::WEB_NODE) {
            if let Some((g, cs)) = args.split_first() {
                let cs = cs.iter().map(Tree::from_term).collect::<Result<_>>()?;
                return Ok(Tree::Node(g.clone(), cs));
            }
        }
        Err(Error::Parse(format!("{t} is not a tree term")))
    }

    fn replace_leaves(&self, path: &mut Vec<usize>, with: &BTreeMap<Vec<usize>, Tree>) -> Tree {
        match self {
            Tree::Unit(_) => with.get(path).cloned().unwrap_or_else(|| self.clone()),
            Tree::Node(g, cs) => {
                let mut out = Vec::with_capacity(cs.len());
                for (i, c) in cs.iter().enumerate() {
                    path.push(i);
                    out.push(c.replace_leaves(path, with));
                    path.pop();
                }
                Tree::Node(g.clone(), out)
            }
        }
    }
}

/// What the free-monoid engine needs from the ambient monoidal structure.
pub trait MonoidalContext: Send + Sync {
    /// What a tree evaluates to: its typing in `F_⊗`, its composite in `F_⊙`.
    type Value: Clone + PartialEq + fmt::Debug;

    fn name(&self) -> String;
    fn types(&self) -> Vec<Term>;
    fn generators(&self) -> Vec<Term>;
    fn generator_value(&self, g: &Term) -> Result<Self::Value>;
    fn unit_value(&self, o: &Term) -> Result<Self::Value>;
    fn output(&self, v: &Self::Value) -> Term;
    fn slots(&self, v: &Self::Value) -> Vec<Term>;
    /// `v` with `children` plugged into its slots, and the routing `γ` sending the
    /// flattened child slot `(i, j)` to its slot in the composite.
    fn compose(
        &self,
        v: &Self::Value,
        children: &[Self::Value],
    ) -> Result<(Self::Value, Permutation)>;
    /// Inputs a node carries of its own.
    fn kept(&self, g: &Term) -> Result<Vec<Term>>;
    fn unit_inputs(&self, o: &Term) -> Vec<Term>;
    /// Whether the outer factor's inputs survive in `X ∘ Y` (true for ⊙, false for ⊗).
    fn retains_outer(&self) -> bool;
}

/// `F_⊗` on a signature in `Sig_a`.
#[derive(Clone, Debug)]
pub struct TensorContext {
    pub sig: Arc<Signature>,
}

impl TensorContext {
    pub fn new(sig: Signature) -> Self {
        TensorContext { sig: Arc::new(sig) }
    }
}

impl MonoidalContext for TensorContext {
    type Value = Typing;

    fn name(&self) -> String {
        "F_⊗".into()
    }

    fn types(&self) -> Vec<Term> {
        self.sig.types.iter().cloned().collect()
    }

    fn generators(&self) -> Vec<Term> {
        self.sig.symbols.keys().cloned().collect()
    }

    fn generator_value(&self, g: &Term) -> Result<Typing> {
        self.sig.typing(g).cloned()
    }

    fn unit_value(&self, o: &Term) -> Result<Typing> {
        if !self.sig.types.contains(o) {
            return Err(Error::Structural(format!("{o} is not a type")));
        }
        Ok(Typing::new(o.clone(), vec![o.clone()]))
    }

    fn output(&self, v: &Typing) -> Term {
        v.output.clone()
    }

    fn slots(&self, v: &Typing) -> Vec<Term> {
        v.inputs.clone()
    }

    fn compose(&self, v: &Typing, children: &[Typing]) -> Result<(Typing, Permutation)> {
        check_slots(&v.inputs, children.iter().map(|c| &c.output))?;
        let inputs: Vec<Term> = children.iter().flat_map(|c| c.inputs.clone()).collect();
        let n = inputs.len();
        Ok((
            Typing::new(v.output.clone(), inputs),
            Permutation::identity(n),
        ))
    }

    fn kept(&self, _g: &Term) -> Result<Vec<Term>> {
        Ok(Vec::new())
    }

    fn unit_inputs(&self, o: &Term) -> Vec<Term> {
        vec![o.clone()]
    }

    fn retains_outer(&self) -> bool {
        false
    }
}

/// `F_⊙` on an object over a monoid `M` in `Sig_ma`. Slots are horizontal, kept
/// inputs vertical.
#[derive(Clone)]
pub struct OdotContext {
    pub m: Arc<dyn Monoid>,
    pub x: Obj,
    gens: Vec<Term>,
}

impl OdotContext {
    /// `cap` bounds how many symbols of `x` are used as generators.
    pub fn new(m: &Arc<dyn Monoid>, x: Obj, cap: usize) -> Self {
        let gens = x.enumerate(cap);
        OdotContext {
            m: m.clone(),
            x,
            gens,
        }
    }
}

impl MonoidalContext for OdotContext {
    type Value = Term;

    fn name(&self) -> String {
        format!("F_⊙ over {}", self.m.name())
    }

    fn types(&self) -> Vec<Term> {
        self.m.types()
    }

    fn generators(&self) -> Vec<Term> {
        self.gens.clone()
    }

    fn generator_value(&self, g: &Term) -> Result<Term> {
        Ok(self.x.typing(g)?.output)
    }

    fn unit_value(&self, o: &Term) -> Result<Term> {
        self.m.unit(o)
    }

    fn output(&self, v: &Term) -> Term {
        self.m
            .typing(v)
            .map(|t| t.output)
            .expect("values are symbols of M")
    }

    fn slots(&self, v: &Term) -> Vec<Term> {
        self.m
            .typing(v)
            .map(|t| t.inputs)
            .expect("values are symbols of M")
    }

    fn compose(&self, v: &Term, children: &[Term]) -> Result<(Term, Permutation)> {
        let outs: Vec<Term> = children.iter().map(|c| self.output(c)).collect();
        check_slots(&self.slots(v), outs.iter())?;
        self.m.mult(v, children)
    }

    fn kept(&self, g: &Term) -> Result<Vec<Term>> {
        Ok(self.x.typing(g)?.inputs)
    }

    fn unit_inputs(&self, _o: &Term) -> Vec<Term> {
        Vec::new()
    }

    fn retains_outer(&self) -> bool {
        true
    }
}

fn check_slots<'a>(slots: &[Term], outs: impl ExactSizeIterator<Item = &'a Term>) -> Result<()> {
    if slots.len() != outs.len() {
        return Err(Error::Composability(format!(
            "{} slots but {} arguments",
            slots.len(),
            outs.len()
        )));
    }
    for (i, (s, o)) in slots.iter().zip(outs).enumerate() {
        if s != o {
            return Err(Error::Composability(format!(
                "argument {} has output {o} but slot expects {s}",
                i + 1
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Trees in a context.

pub fn value<C: MonoidalContext>(ctx: &C, t: &Tree) -> Result<C::Value> {
    Ok(value_and_routing(ctx, t)?.0)
}

fn value_and_routing<C: MonoidalContext>(ctx: &C, t: &Tree) -> Result<(C::Value, Permutation)> {
    match t {
        Tree::Unit(o) => Ok((ctx.unit_value(o)?, Permutation::identity(1))),
        Tree::Node(g, cs) => {
            let vs = cs
                .iter()
                .map(|c| value(ctx, c))
                .collect::<Result<Vec<_>>>()?;
            ctx.compose(&ctx.generator_value(g)?, &vs)
        }
    }
}

pub fn output<C: MonoidalContext>(ctx: &C, t: &Tree) -> Result<Term> {
    match t {
        Tree::Unit(o) => Ok(o.clone()),
        Tree::Node(g, _) => Ok(ctx.output(&ctx.generator_value(g)?)),
    }
}

/// The inputs a tree carries: kept inputs in preorder, with each unit contributing
/// its own.
pub fn inputs<C: MonoidalContext>(ctx: &C, t: &Tree) -> Result<Vec<Term>> {
    match t {
        Tree::Unit(o) => Ok(ctx.unit_inputs(o)),
        Tree::Node(g, cs) => {
            let mut out = ctx.kept(g)?;
            for c in cs {
                out.extend(inputs(ctx, c)?);
            }
            Ok(out)
        }
    }
}

/// Paths to the unit leaves, listed in slot order of the tree's value.
pub fn slot_leaves<C: MonoidalContext>(ctx: &C, t: &Tree) -> Result<Vec<Vec<usize>>> {
    match t {
        Tree::Unit(_) => Ok(vec![Vec::new()]),
        Tree::Node(_, cs) => {
            let mut flat = Vec::new();
            for (i, c) in cs.iter().enumerate() {
                for mut p in slot_leaves(ctx, c)? {
                    p.insert(0, i);
                    flat.push(p);
                }
            }
            let (_, gamma) = value_and_routing(ctx, t)?;
            Ok(gamma.permute(&flat))
        }
    }
}

/// The one-node tree on `g`.
pub fn corolla<C: MonoidalContext>(ctx: &C, g: &Term) -> Result<Tree> {
    let slots = ctx.slots(&ctx.generator_value(g)?);
    Ok(Tree::Node(
        g.clone(),
        slots.into_iter().map(Tree::Unit).collect(),
    ))
}

/// Inputs of the formal composite `outer ∘ (inners..)`.
pub fn pair_inputs<C: MonoidalContext>(
    ctx: &C,
    outer: &Tree,
    inners: &[Tree],
) -> Result<Vec<Term>> {
    let mut out = if ctx.retains_outer() {
        inputs(ctx, outer)?
    } else {
        Vec::new()
    };
    for v in inners {
        out.extend(inputs(ctx, v)?);
    }
    Ok(out)
}

fn check_pair<C: MonoidalContext>(ctx: &C, outer: &Tree, inners: &[Tree]) -> Result<C::Value> {
    let v = value(ctx, outer)?;
    let outs = inners
        .iter()
        .map(|t| output(ctx, t))
        .collect::<Result<Vec<_>>>()?;
    check_slots(&ctx.slots(&v), outs.iter())?;
    Ok(v)
}

/// Every tree of stage at most `stage` with at most `node_bound` nodes, sorted.
pub fn enumerate<C: MonoidalContext>(ctx: &C, stage: usize, node_bound: usize) -> Vec<Tree> {
    // trees by output type, then by node count
    type Level = BTreeMap<Term, Vec<Vec<Tree>>>;
    let units = || -> Level {
        ctx.types()
            .into_iter()
            .map(|o| (o.clone(), vec![vec![Tree::Unit(o)]]))
            .collect()
    };
    let mut level = units();
    let gens: Vec<(Term, Term, Vec<Term>)> = ctx
        .generators()
        .into_iter()
        .filter_map(|g| {
            let v = ctx.generator_value(&g).ok()?;
            Some((g, ctx.output(&v), ctx.slots(&v)))
        })
        .collect();
    for _ in 0..stage {
        let mut next = units();
        if node_bound > 0 {
            for (g, out, slots) in &gens {
                let mut acc = Vec::new();
                fill_slots(&level, slots, node_bound - 1, &mut Vec::new(), &mut acc);
                let bucket = next.entry(out.clone()).or_default();
                for cs in acc {
                    let t = Tree::Node(g.clone(), cs);
                    let n = t.nodes();
                    if bucket.len() <= n {
                        bucket.resize(n + 1, Vec::new());
                    }
                    bucket[n].push(t);
                }
            }
        }
        if next == level {
            break;
        }
        level = next;
    }
    let mut all: Vec<Tree> = level.into_values().flatten().flatten().collect();
    all.sort();
    all
}

fn fill_slots(
    level: &BTreeMap<Term, Vec<Vec<Tree>>>,
    slots: &[Term],
    budget: usize,
    cur: &mut Vec<Tree>,
    acc: &mut Vec<Vec<Tree>>,
) {
    let Some((s, rest)) = slots.split_first() else {
        acc.push(cur.clone());
        return;
    };
    let Some(by_size) = level.get(s) else { return };
    for (n, trees) in by_size.iter().enumerate().take(budget + 1) {
        for t in trees {
            cur.push(t.clone());
            fill_slots(level, rest, budget - n, cur, acc);
            cur.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Multiplication.

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tag {
    Outer(usize, usize),
    Inner(usize, usize),
}

/// `μ(outer; inners)` by direct grafting: inner `j` replaces the leaf in slot `j`.
/// The permutation tracks every input of the formal composite to its place in the
/// grafted tree.
pub fn eval_mu<C: MonoidalContext>(
    ctx: &C,
    outer: &Tree,
    inners: &[Tree],
) -> Result<(Tree, Permutation)> {
    check_pair(ctx, outer, inners)?;
    let leaves = slot_leaves(ctx, outer)?;
    let graft: BTreeMap<Vec<usize>, Tree> =
        leaves.iter().cloned().zip(inners.iter().cloned()).collect();
    let result = outer.replace_leaves(&mut Vec::new(), &graft);

    let slot_of: BTreeMap<Vec<usize>, usize> = leaves
        .into_iter()
        .enumerate()
        .map(|(j, p)| (p, j))
        .collect();
    let inner_len = inners
        .iter()
        .map(|v| inputs(ctx, v).map(|i| i.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut source = Vec::new();
    if ctx.retains_outer() {
        tag_outer(ctx, outer, &mut 0, &mut source)?;
    }
    for (j, &k) in inner_len.iter().enumerate() {
        source.extend((0..k).map(|i| Tag::Inner(j, i)));
    }
    let mut target = Vec::new();
    tag_grafted(
        ctx,
        outer,
        &mut Vec::new(),
        &mut 0,
        &slot_of,
        &inner_len,
        &mut target,
    )?;
    Ok((result, Permutation::tracking(&source, &target)?))
}

fn tag_outer<C: MonoidalContext>(
    ctx: &C,
    t: &Tree,
    id: &mut usize,
    out: &mut Vec<Tag>,
) -> Result<()> {
    match t {
        Tree::Unit(o) => {
            let me = *id;
            *id += 1;
            out.extend((0..ctx.unit_inputs(o).len()).map(|k| Tag::Outer(me, k)));
        }
        Tree::Node(g, cs) => {
            let me = *id;
            *id += 1;
            out.extend((0..ctx.kept(g)?.len()).map(|k| Tag::Outer(me, k)));
            for c in cs {
                tag_outer(ctx, c, id, out)?;
            }
        }
    }
    Ok(())
}

fn tag_grafted<C: MonoidalContext>(
    ctx: &C,
    t: &Tree,
    path: &mut Vec<usize>,
    id: &mut usize,
    slot_of: &BTreeMap<Vec<usize>, usize>,
    inner_len: &[usize],
    out: &mut Vec<Tag>,
) -> Result<()> {
    match t {
        Tree::Unit(_) => {
            *id += 1;
            let j = slot_of[path.as_slice()];
            out.extend((0..inner_len[j]).map(|i| Tag::Inner(j, i)));
        }
        Tree::Node(g, cs) => {
            let me = *id;
            *id += 1;
            out.extend((0..ctx.kept(g)?.len()).map(|k| Tag::Outer(me, k)));
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                tag_grafted(ctx, c, path, id, slot_of, inner_len, out)?;
                path.pop();
            }
        }
    }
    Ok(())
}

/// `α⁻¹: (outer ∘ mids) ∘ inners → outer ∘ (mids_j ∘ routed inners)`.
///
/// Returns the regrouped inner lists and the amalgamation on inputs.
pub fn reassociate<C: MonoidalContext>(
    ctx: &C,
    outer: &Tree,
    mids: &[Tree],
    inners: &[Tree],
) -> Result<(Vec<Vec<Tree>>, Permutation)> {
    let v = check_pair(ctx, outer, mids)?;
    let mid_values = mids
        .iter()
        .map(|t| value(ctx, t))
        .collect::<Result<Vec<_>>>()?;
    let (composite, gamma) = ctx.compose(&v, &mid_values)?;
    let slots = ctx.slots(&composite);
    if slots.len() != inners.len() {
        return Err(Error::Composability(format!(
            "{} slots but {} arguments",
            slots.len(),
            inners.len()
        )));
    }
    let retains = ctx.retains_outer();
    let len = |t: &Tree| inputs(ctx, t).map(|i| i.len());
    let head = if retains { len(outer)? } else { 0 };
    let mid_len = mids
        .iter()
        .map(|t| if retains { len(t) } else { Ok(0) })
        .collect::<Result<Vec<_>>>()?;
    let inner_len = inners.iter().map(len).collect::<Result<Vec<_>>>()?;

    // Source blocks: head, mids, inners. Target: head, then each mid followed by
    // the inners routed to it.
    let mut groups = Vec::with_capacity(mids.len());
    let mut order = vec![0];
    let mut flat = 0;
    for (i, mid) in mids.iter().enumerate() {
        order.push(1 + i);
        let k = ctx.slots(&mid_values[i]).len();
        let mut group = Vec::with_capacity(k);
        for _ in 0..k {
            let slot = gamma.apply(flat + 1) - 1;
            group.push(inners[slot].clone());
            order.push(1 + mids.len() + slot);
            flat += 1;
        }
        let _ = mid;
        groups.push(group);
    }
    let mut lengths = vec![head];
    lengths.extend(mid_len);
    lengths.extend(inner_len);
    // order[p] = source block at target position p; move_blocks wants the inverse.
    let placed = Permutation::new(order.iter().map(|b| b + 1).collect())?.inverse();
    Ok((groups, move_blocks(&placed, &lengths)?))
}

/// `μ_{n,m}: X_n ⊗ X_m → X_{n+m}` by its defining recursion: `λ` at `n = 0`, the
/// inclusion on the unit summand, and `j(1 ⊗ μ_{n-1,m})∘α⁻¹` on `X ⊗ X_{n-1} ⊗ X_m`.
pub fn mu_stage<C: MonoidalContext>(
    ctx: &C,
    n: usize,
    m: usize,
    outer: &Tree,
    inners: &[Tree],
) -> Result<(Tree, Permutation)> {
    if outer.stage() > n {
        return Err(Error::Structural(format!("{outer} is not in X_{n}")));
    }
    if let Some(v) = inners.iter().find(|v| v.stage() > m) {
        return Err(Error::Structural(format!("{v} is not in X_{m}")));
    }
    check_pair(ctx, outer, inners)?;
    mu_rec(ctx, n, m, outer, inners)
}

fn mu_rec<C: MonoidalContext>(
    ctx: &C,
    n: usize,
    m: usize,
    outer: &Tree,
    inners: &[Tree],
) -> Result<(Tree, Permutation)> {
    let (g, cs) = match outer {
        Tree::Unit(_) => {
            let v = inners[0].clone();
            let k = inputs(ctx, &v)?.len();
            return Ok((v, Permutation::identity(k)));
        }
        Tree::Node(g, cs) => (g, cs),
    };
    let head = corolla(ctx, g)?;
    let (groups, alpha) = reassociate(ctx, &head, cs, inners)?;
    let mut children = Vec::with_capacity(cs.len());
    let mut rhos = vec![Permutation::identity(if ctx.retains_outer() {
        ctx.kept(g)?.len()
    } else {
        0
    })];
    for (c, group) in cs.iter().zip(&groups) {
        let (r, rho) = mu_rec(ctx, n - 1, m, c, group)?;
        children.push(r);
        rhos.push(rho);
    }
    let result = Tree::Node(g.clone(), children);
    debug_assert!(result.stage() <= n + m);
    Ok((result, block_diag(&rhos).compose(&alpha)?))
}

/// A formal composite `outer ∘ (inners..)` with an amalgamation from some source.
pub type Split = (Tree, Vec<Tree>, Permutation);

/// `s_n: X_n → X_1 ⊗ X_{n-1}`: a unit goes to `(unit; unit)`, a node is split into
/// its corolla and its children.
pub fn section<C: MonoidalContext>(ctx: &C, n: usize, t: &Tree) -> Result<Split> {
    if n == 0 {
        return Err(Error::Structural("s_n needs n ≥ 1".into()));
    }
    if t.stage() > n {
        return Err(Error::Structural(format!("{t} is not in X_{n}")));
    }
    let k = inputs(ctx, t)?.len();
    match t {
        Tree::Unit(_) => Ok((t.clone(), vec![t.clone()], Permutation::identity(k))),
        Tree::Node(g, cs) => Ok((corolla(ctx, g)?, cs.clone(), Permutation::identity(k))),
    }
}

/// Both legs of the coherence square `s_{n+m}∘μ_{n,m}` and
/// `(1⊗μ_{n-1,m})∘α⁻¹∘(s_n⊗1)` at `(outer; inners)`.
pub fn coherence_square<C: MonoidalContext>(
    ctx: &C,
    n: usize,
    m: usize,
    outer: &Tree,
    inners: &[Tree],
) -> Result<(Split, Split)> {
    let (r, rho) = mu_stage(ctx, n, m, outer, inners)?;
    let (h2, cs2, sigma2) = section(ctx, n + m, &r)?;
    let upper = (h2, cs2, sigma2.compose(&rho)?);

    let (h, cs, sigma1) = section(ctx, n, outer)?;
    let inner_total: usize = inners
        .iter()
        .map(|v| inputs(ctx, v).map(|i| i.len()))
        .sum::<Result<usize>>()?;
    let s_tensor_1 = if ctx.retains_outer() {
        block_diag(&[sigma1, Permutation::identity(inner_total)])
    } else {
        Permutation::identity(inner_total)
    };
    let (groups, alpha) = reassociate(ctx, &h, &cs, inners)?;
    let mut rs = Vec::new();
    let head = if ctx.retains_outer() {
        inputs(ctx, &h)?.len()
    } else {
        0
    };
    let mut rhos = vec![Permutation::identity(head)];
    for (c, group) in cs.iter().zip(&groups) {
        let (r, rho) = mu_stage(ctx, n - 1, m, c, group)?;
        rs.push(r);
        rhos.push(rho);
    }
    let lower = (
        h,
        rs,
        block_diag(&rhos).compose(&alpha)?.compose(&s_tensor_1)?,
    );
    Ok((upper, lower))
}

/// `f_∞` for a context map given per node: `g ↦ (g', τ, σ)` with `τ` acting on the
/// kept inputs and `σ` sending child `i` to slot `σ(i)`.
pub fn map_tree<C: MonoidalContext>(
    cod: &C,
    t: &Tree,
    node: &dyn Fn(&Term) -> Result<(Term, Permutation, Permutation)>,
    type_map: &dyn Fn(&Term) -> Term,
) -> Result<(Tree, Permutation)> {
    match t {
        Tree::Unit(o) => {
            let u = type_map(o);
            let k = cod.unit_inputs(&u).len();
            Ok((Tree::Unit(u), Permutation::identity(k)))
        }
        Tree::Node(g, cs) => {
            let (g2, tau, sigma) = node(g)?;
            let mut mapped = Vec::with_capacity(cs.len());
            let mut rhos = Vec::with_capacity(cs.len());
            for c in cs {
                let (c2, rho) = map_tree(cod, c, node, type_map)?;
                mapped.push(c2);
                rhos.push(rho);
            }
            let amalg = if cod.retains_outer() {
                let mut blocks = vec![tau];
                blocks.extend(rhos);
                compose_blocks(&pad_block(&sigma), &blocks)?
            } else {
                compose_blocks(&sigma, &rhos)?
            };
            Ok((Tree::Node(g2, sigma.permute(&mapped)), amalg))
        }
    }
}

/// `f_∞` for a morphism of signatures.
pub fn map_tensor_tree(f: &SigMorphism, t: &Tree) -> Result<(Tree, Permutation)> {
    let cod = TensorContext { sig: f.cod.clone() };
    let node = |g: &Term| {
        Ok((
            f.map_symbol(g)?.clone(),
            Permutation::identity(0),
            f.amalgamation(g)?.clone(),
        ))
    };
    let ty = |o: &Term| f.map_type(o).cloned().unwrap_or_else(|_| o.clone());
    map_tree(&cod, t, &node, &ty)
}

// ---------------------------------------------------------------------------
// Laws.

/// Formal composites `(outer; inners)` among `trees`, at most `cap` of them.
pub fn composable_pairs<C: MonoidalContext>(
    ctx: &C,
    trees: &[Tree],
    cap: usize,
) -> Vec<(Tree, Vec<Tree>)> {
    let mut by_output: BTreeMap<Term, Vec<&Tree>> = BTreeMap::new();
    for t in trees {
        if let Ok(o) = output(ctx, t) {
            by_output.entry(o).or_default().push(t);
        }
    }
    let mut out = Vec::new();
    for w in trees {
        let Ok(v) = value(ctx, w) else { continue };
        let slots = ctx.slots(&v);
        let pools: Vec<&[&Tree]> = slots
            .iter()
            .map(|s| by_output.get(s).map(Vec::as_slice).unwrap_or_default())
            .collect();
        let mut idx = vec![0usize; slots.len()];
        if pools.iter().any(|p| p.is_empty()) {
            continue;
        }
        loop {
            if out.len() >= cap {
                return out;
            }
            out.push((
                w.clone(),
                idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect(),
            ));
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

/// Unit laws, associativity and stage consistency for `μ` on trees within the given
/// stage and node bounds (at most `cap` composites per law).
pub fn check_free_monoid<C: MonoidalContext>(
    ctx: &C,
    stage: usize,
    node_bound: usize,
    cap: usize,
) -> Vec<LawResult> {
    let trees = enumerate(ctx, stage, node_bound);
    let mut out = Vec::new();
    let err = |e: Error| e.to_string();

    out.push(check_all("μ∘(η⊗1) = λ", &trees, |t| {
        let o = output(ctx, t).map_err(err)?;
        let (r, p) = eval_mu(ctx, &Tree::Unit(o), std::slice::from_ref(t)).map_err(err)?;
        if &r == *t && p.is_identity() {
            Ok(())
        } else {
            Err(format!("{t} ↦ {r} with {p}"))
        }
    }));
    out.push(check_all("μ∘(1⊗η) = ρ⁻¹", &trees, |t| {
        let v = value(ctx, t).map_err(err)?;
        let units: Vec<Tree> = ctx.slots(&v).into_iter().map(Tree::Unit).collect();
        let (r, p) = eval_mu(ctx, t, &units).map_err(err)?;
        if &r == *t && p.is_identity() {
            Ok(())
        } else {
            Err(format!("{t} ↦ {r} with {p}"))
        }
    }));

    let pairs = composable_pairs(ctx, &trees, cap);
    out.push(check_all(
        "eval_mu agrees with μ_{n,m}",
        &pairs,
        |(w, vs)| {
            let n = w.stage();
            let m = vs.iter().map(Tree::stage).max().unwrap_or(0);
            let direct = eval_mu(ctx, w, vs).map_err(err)?;
            let staged = mu_stage(ctx, n, m, w, vs).map_err(err)?;
            if direct != staged {
                return Err(format!("{w}∘{vs:?}: {direct:?} vs {staged:?}"));
            }
            if staged.0.stage() > n + m {
                return Err(format!("{} lands above stage {}", staged.0, n + m));
            }
            Ok(())
        },
    ));

    let mut triples = Vec::new();
    for (w, vs) in &pairs {
        let Ok((mid, _)) = eval_mu(ctx, w, vs) else {
            continue;
        };
        let Ok(mv) = value(ctx, &mid) else { continue };
        let slots = ctx.slots(&mv);
        // plug the first tree of each slot's output type (varying by position)
        let pool: Vec<&Tree> = trees.iter().filter(|t| t.nodes() <= 1).collect();
        let mut inner = Vec::with_capacity(slots.len());
        for (k, s) in slots.iter().enumerate() {
            let cands: Vec<&&Tree> = pool
                .iter()
                .filter(|t| output(ctx, t).ok().as_ref() == Some(s))
                .collect();
            if cands.is_empty() {
                break;
            }
            inner.push((*cands[(k + triples.len()) % cands.len()]).clone());
        }
        if inner.len() == slots.len() {
            triples.push((w.clone(), vs.clone(), inner));
        }
        if triples.len() >= cap {
            break;
        }
    }
    out.push(check_all(
        "μ∘(μ⊗1) = μ∘(1⊗μ)∘α⁻¹",
        &triples,
        |(w, vs, us)| associativity_at(ctx, w, vs, us).map_err(err)?,
    ));
    out
}

/// Compares `μ∘(μ⊗1)` and `μ∘(1⊗μ)∘α⁻¹` at `((w; vs); us)`.
pub fn associativity_at<C: MonoidalContext>(
    ctx: &C,
    w: &Tree,
    vs: &[Tree],
    us: &[Tree],
) -> Result<std::result::Result<(), String>> {
    let (mid, rho) = eval_mu(ctx, w, vs)?;
    let (lhs, rho2) = eval_mu(ctx, &mid, us)?;
    let us_len: usize = us
        .iter()
        .map(|u| inputs(ctx, u).map(|i| i.len()))
        .sum::<Result<usize>>()?;
    let mu_1 = if ctx.retains_outer() {
        block_diag(&[rho, Permutation::identity(us_len)])
    } else {
        Permutation::identity(us_len)
    };
    let lhs_p = rho2.compose(&mu_1)?;

    let (groups, alpha) = reassociate(ctx, w, vs, us)?;
    let head = if ctx.retains_outer() {
        inputs(ctx, w)?.len()
    } else {
        0
    };
    let mut rhos = vec![Permutation::identity(head)];
    let mut rs = Vec::new();
    for (v, g) in vs.iter().zip(&groups) {
        let (r, p) = eval_mu(ctx, v, g)?;
        rs.push(r);
        rhos.push(p);
    }
    let (rhs, rho3) = eval_mu(ctx, w, &rs)?;
    let rhs_p = rho3.compose(&block_diag(&rhos))?.compose(&alpha)?;
    Ok(if lhs == rhs && lhs_p == rhs_p {
        Ok(())
    } else {
        Err(format!("{lhs} {lhs_p} vs {rhs} {rhs_p}"))
    })
}

/// `μ_{1,n-1}∘s_n = id` and `(1⊗i)∘s_n = s_{n+1}∘i` on every tree of stage ≤ `n`.
pub fn check_sections<C: MonoidalContext>(ctx: &C, n: usize, node_bound: usize) -> Vec<LawResult> {
    let trees: Vec<Tree> = enumerate(ctx, n, node_bound);
    let err = |e: Error| e.to_string();
    let mut out = Vec::new();
    out.push(check_all(
        format!("μ_{{1,n-1}}∘s_n = id (n ≤ {n})"),
        &trees,
        |t| {
            for k in t.stage().max(1)..=n {
                let (h, cs, s) = section(ctx, k, t).map_err(err)?;
                let (r, p) = mu_stage(ctx, 1, k - 1, &h, &cs).map_err(err)?;
                if &r != *t || !p.compose(&s).map_err(err)?.is_identity() {
                    return Err(format!("n = {k}: {t} ↦ {r}"));
                }
            }
            Ok(())
        },
    ));
    out.push(check_all("(1⊗i)∘s_n = s_{n+1}∘i", &trees, |t| {
        for k in t.stage().max(1)..=n {
            let a = section(ctx, k, t).map_err(err)?;
            let b = section(ctx, k + 1, t).map_err(err)?;
            if a != b {
                return Err(format!("n = {k}: {a:?} vs {b:?}"));
            }
        }
        Ok(())
    }));
    out
}

/// The coherence square on the `X ⊗ X_{n-1} ⊗ X_m` summand, for all `n, m ≤ bound`.
/// Also returns the first instance on the `I ⊗ X_m` summand where the two legs
/// differ, if any.
pub fn check_coherence_lemma<C: MonoidalContext>(
    ctx: &C,
    bound: usize,
    node_bound: usize,
    cap: usize,
) -> (
    LawResult,
    Option<(usize, usize, Tree, Vec<Tree>, Split, Split)>,
) {
    let trees = enumerate(ctx, bound, node_bound);
    let pairs = composable_pairs(ctx, &trees, cap);
    let mut cases = Vec::new();
    let mut counterexample = None;
    for n in 1..=bound {
        for m in 0..=bound {
            for (w, vs) in &pairs {
                if w.stage() > n || vs.iter().any(|v| v.stage() > m) {
                    continue;
                }
                match w {
                    Tree::Node(..) => cases.push((n, m, w.clone(), vs.clone())),
                    Tree::Unit(_) if counterexample.is_none() => {
                        if let Ok((up, low)) = coherence_square(ctx, n, m, w, vs) {
                            if up != low {
                                counterexample = Some((n, m, w.clone(), vs.clone(), up, low));
                            }
                        }
                    }
                    Tree::Unit(_) => {}
                }
            }
        }
    }
    let r = check_all(
        "coherence square on X⊗X_{n-1}⊗X_m",
        &cases,
        |(n, m, w, vs)| {
            let (up, low) = coherence_square(ctx, *n, *m, w, vs).map_err(|e| e.to_string())?;
            if up == low {
                Ok(())
            } else {
                Err(format!("n={n} m={m} {w}: {up:?} vs {low:?}"))
            }
        },
    );
    (r, counterexample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m_twist, one_binary, three_type};
    use crate::sig::{Obj, Signature};
    use crate::sigmamon::Monoid;

    fn binary() -> TensorContext {
        TensorContext::new(one_binary())
    }

    fn stage_counts_oracle(n: usize) -> Vec<usize> {
        let mut a = vec![1usize];
        for _ in 0..n {
            let x = *a.last().unwrap();
            a.push(1 + x * x);
        }
        a
    }

    #[test]
    fn binary_stage_counts() {
        let ctx = binary();
        let got: Vec<usize> = (0..4)
            .map(|n| enumerate(&ctx, n, usize::MAX).len())
            .collect();
        assert_eq!(got, stage_counts_oracle(3));
        assert_eq!(got, vec![1, 2, 5, 26]);
    }

    #[test]
    fn empty_signature_has_only_units() {
        let ctx = TensorContext::new(Signature::new([Term::atom("o")]));
        for n in 0..4 {
            assert_eq!(enumerate(&ctx, n, usize::MAX), vec![Tree::unit("o")]);
        }
    }

    #[test]
    fn mu_zero_is_lambda() {
        let ctx = binary();
        for t in enumerate(&ctx, 2, usize::MAX) {
            let (r, p) = mu_stage(&ctx, 0, 2, &Tree::unit("o"), std::slice::from_ref(&t)).unwrap();
            assert_eq!(r, t);
            assert!(p.is_identity());
        }
    }

    #[test]
    fn section_of_stage_zero_is_an_error() {
        assert!(section(&binary(), 0, &Tree::unit("o")).is_err());
    }

    #[test]
    fn section_splits_head() {
        let ctx = binary();
        let t = Tree::node(
            "B",
            vec![
                Tree::node("B", vec![Tree::unit("o"), Tree::unit("o")]),
                Tree::unit("o"),
            ],
        );
        let (h, cs, p) = section(&ctx, 2, &t).unwrap();
        assert_eq!(h, Tree::node("B", vec![Tree::unit("o"), Tree::unit("o")]));
        assert_eq!(cs.len(), 2);
        assert!(p.is_identity());
    }

    #[test]
    fn binary_laws() {
        let ctx = binary();
        for r in check_free_monoid(&ctx, 3, 4, 400) {
            assert!(r.passed && r.checked > 0, "{r:?}");
        }
        for r in check_sections(&ctx, 4, 6) {
            assert!(r.passed && r.checked > 0, "{r:?}");
        }
    }

    #[test]
    fn json_shape() {
        let t = Tree::node("B", vec![Tree::unit("o"), Tree::unit("o")]);
        let j = serde_json::to_value(&t).unwrap();
        assert_eq!(
            j,
            serde_json::json!({"node": "B", "children": [{"unit": "o"}, {"unit": "o"}]})
        );
        assert_eq!(serde_json::from_value::<Tree>(j).unwrap(), t);
        assert_eq!(Tree::from_term(&t.to_term()).unwrap(), t);
    }

    fn odot_ctx(m: &Arc<dyn Monoid>) -> OdotContext {
        let mut r = crate::gen::rng(7);
        let x = crate::gen::random_msig_object(&mut r, m, "x", 2);
        OdotContext::new(m, Obj::base(x), 100)
    }

    #[test]
    fn odot_laws_with_twists() {
        for m in [three_type().shared(), m_twist().shared()] {
            let ctx = odot_ctx(&m);
            for r in check_free_monoid(&ctx, 3, 3, 300) {
                assert!(r.passed && r.checked > 0, "{}: {r:?}", m.name());
            }
            for r in check_sections(&ctx, 3, 4) {
                assert!(r.passed && r.checked > 0, "{r:?}");
            }
        }
    }

    #[test]
    fn coherence_square_holds_off_the_unit_summand() {
        for m in [three_type().shared(), m_twist().shared()] {
            let ctx = odot_ctx(&m);
            let (r, _) = check_coherence_lemma(&ctx, 2, 4, 300);
            assert!(r.passed && r.checked > 0, "{r:?}");
        }
        let (r, cx) = check_coherence_lemma(&binary(), 2, 5, 300);
        assert!(r.passed && r.checked > 0, "{r:?}");
        let (_, _, w, vs, up, low) = cx.expect("unit summand differs");
        assert!(matches!(w, Tree::Unit(_)));
        assert_eq!(low.0, w);
        assert_eq!(low.1, vs);
        assert_ne!(up.0, low.0);
    }

    #[test]
    fn tensor_functor_is_a_homomorphism() {
        let s = Arc::new(
            Signature::new(["x", "y"].map(Term::atom))
                .with("p", "x", &["x", "y"])
                .with("q", "y", &["x"]),
        );
        let mut r = crate::gen::rng(3);
        let f = crate::gen::random_morphism(&mut r, &s, "'");
        let dom = TensorContext { sig: s.clone() };
        let trees = enumerate(&dom, 3, 4);
        for (w, vs) in composable_pairs(&dom, &trees, 300) {
            let (r, rho) = eval_mu(&dom, &w, &vs).unwrap();
            let (fr, phi) = map_tensor_tree(&f, &r).unwrap();
            let lhs = phi.compose(&rho).unwrap();
            let (fw, sigma) = map_tensor_tree(&f, &w).unwrap();
            let mut fvs = Vec::new();
            let mut taus = Vec::new();
            for v in &vs {
                let (fv, tau) = map_tensor_tree(&f, v).unwrap();
                fvs.push(fv);
                taus.push(tau);
            }
            let fvs = sigma.permute(&fvs);
            let cod = TensorContext { sig: f.cod.clone() };
            let (r2, rho2) = eval_mu(&cod, &fw, &fvs).unwrap();
            let rhs = rho2
                .compose(&compose_blocks(&sigma, &taus).unwrap())
                .unwrap();
            assert_eq!(fr, r2);
            assert_eq!(lhs, rhs);
        }
    }
}
