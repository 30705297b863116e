//! Permutations on `{1..n}` and the block composition of the operad of symmetries.
//!
//! A [`Permutation`] stores its images 1-based: `images[i - 1]` is the image of `i`.
//! Block coordinates `(i, j)` mean "the j-th entry of the i-th block"; the flat
//! index of `(i, j)` is the length of the first `i - 1` blocks plus `j`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gen::{random_permutation, rng};
use crate::report::{check_all, LawResult};

/// A bijection of `{1..n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self, Error> {
        Permutation::new(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images)
    }
}

impl Permutation {
    /// Builds a permutation from its 1-based image list.
    pub fn new(images: Vec<usize>) -> Result<Self, Error> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x == 0 || x > n || seen[x - 1] {
                return Err(Error::Structural(format!(
                    "{images:?} is not a permutation of 1..{n}"
                )));
            }
            seen[x - 1] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n).collect(),
        }
    }

    /// The transposition of `a` and `b` on `{1..n}`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (1..=n).collect();
        images.swap(a - 1, b - 1);
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| x == i + 1)
    }

    /// Image of `i` (1-based).
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.len()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x - 1] = i + 1;
        }
        Permutation { images }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Self, Error> {
        if self.len() != other.len() {
            return Err(Error::Structural(format!(
                "cannot compose permutations on {} and {} points",
                self.len(),
                other.len()
            )));
        }
        Ok(Permutation {
            images: other.images.iter().map(|&x| self.images[x - 1]).collect(),
        })
    }

    /// Reorders `items` so that the item at position `i` lands at position `self(i)`.
    pub fn permute<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (i, item) in items.iter().enumerate() {
            out[self.images[i] - 1] = Some(item.clone());
        }
        out.into_iter().map(|x| x.expect("bijection")).collect()
    }

    /// The permutation sending position `p` of `source` to the position of the same
    /// key in `target`. Keys must be distinct and the lists must agree as sets.
    pub fn tracking<K: PartialEq + fmt::Debug>(source: &[K], target: &[K]) -> Result<Self, Error> {
        if source.len() != target.len() {
            return Err(Error::Structural(format!(
                "tracking lists differ in length: {} vs {}",
                source.len(),
                target.len()
            )));
        }
        let images = source
            .iter()
            .map(|k| {
                target
                    .iter()
                    .position(|t| t == k)
                    .map(|p| p + 1)
                    .ok_or_else(|| Error::Structural(format!("key {k:?} missing from target")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Permutation::new(images)
    }
}

/// Block lengths `k_1..k_n`; zero-length blocks are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockShape {
    pub lengths: Vec<usize>,
}

impl BlockShape {
    pub fn new(lengths: Vec<usize>) -> Self {
        BlockShape { lengths }
    }

    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Starting offset of each block in the flat order.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.lengths
            .iter()
            .map(|&k| {
                let o = acc;
                acc += k;
                o
            })
            .collect()
    }

    /// Block coordinates `(i, j)` (both 1-based) of a flat index.
    pub fn coords(&self, flat: usize) -> (usize, usize) {
        let mut rest = flat;
        for (i, &k) in self.lengths.iter().enumerate() {
            if rest <= k {
                return (i + 1, rest);
            }
            rest -= k;
        }
        panic!("flat index {flat} outside shape {:?}", self.lengths)
    }
}

/// `σ∗(ρ_1..ρ_n)`: block `i` moves to position `σ(i)` and is permuted internally by `ρ_i`.
pub fn compose_blocks(sigma: &Permutation, rhos: &[Permutation]) -> Result<Permutation, Error> {
    if sigma.len() != rhos.len() {
        return Err(Error::Structural(format!(
            "σ acts on {} blocks but {} block permutations were given",
            sigma.len(),
            rhos.len()
        )));
    }
    let n = sigma.len();
    let inv = sigma.inverse();
    let mut out_offset = vec![0; n];
    let mut acc = 0;
    for l in 1..=n {
        out_offset[l - 1] = acc;
        acc += rhos[inv.apply(l) - 1].len();
    }
    let mut images = Vec::with_capacity(acc);
    for (i, rho) in rhos.iter().enumerate() {
        let base = out_offset[sigma.apply(i + 1) - 1];
        images.extend(rho.images().iter().map(|&j| base + j));
    }
    Ok(Permutation { images })
}

/// Inverse of `σ∗(ρ)`, computed as `σ⁻¹∗(ρ⁻¹_{σ⁻¹(i)})`.
pub fn invert_blocks(sigma: &Permutation, rhos: &[Permutation]) -> Result<Permutation, Error> {
    if sigma.len() != rhos.len() {
        return Err(Error::Structural(format!(
            "σ acts on {} blocks but {} block permutations were given",
            sigma.len(),
            rhos.len()
        )));
    }
    let inv = sigma.inverse();
    let inner: Vec<Permutation> = (1..=sigma.len())
        .map(|i| rhos[inv.apply(i) - 1].inverse())
        .collect();
    compose_blocks(&inv, &inner)
}

/// `(1, σ)`: fixes 1 and acts as `σ` shifted by one on `{2..n+1}`.
pub fn pad_block(sigma: &Permutation) -> Permutation {
    let mut images = Vec::with_capacity(sigma.len() + 1);
    images.push(1);
    images.extend(sigma.images().iter().map(|&x| x + 1));
    Permutation { images }
}

/// `id∗(ρ_1..ρ_n)`, the block-diagonal sum.
pub fn block_diag(rhos: &[Permutation]) -> Permutation {
    let mut images = Vec::new();
    let mut acc = 0;
    for rho in rhos {
        images.extend(rho.images().iter().map(|&x| acc + x));
        acc += rho.len();
    }
    Permutation { images }
}

/// `σ∗(id_{k_1}..id_{k_n})` for the given block lengths.
pub fn move_blocks(sigma: &Permutation, lengths: &[usize]) -> Result<Permutation, Error> {
    let ids: Vec<Permutation> = lengths.iter().map(|&k| Permutation::identity(k)).collect();
    compose_blocks(sigma, &ids)
}

/// Every permutation of `{1..n}` in lexicographic order of images.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    use itertools::Itertools;
    (1..=n)
        .permutations(n)
        .map(|images| Permutation { images })
        .collect()
}

// ---------------------------------------------------------------------------
// Laws of the operad of symmetries.

fn shapes(max_n: usize, max_k: usize) -> Vec<(Permutation, Vec<Permutation>)> {
    use itertools::Itertools;
    let mut out = Vec::new();
    for n in 0..=max_n {
        for sigma in all_permutations(n) {
            let per_block: Vec<Permutation> = (0..=max_k).flat_map(all_permutations).collect();
            if n == 0 {
                out.push((sigma, Vec::new()));
                continue;
            }
            for rhos in (0..n)
                .map(|_| per_block.iter().cloned())
                .multi_cartesian_product()
            {
                out.push((sigma.clone(), rhos));
            }
        }
    }
    out
}

/// `(σ∗ρ)∗τ = σ∗(ρ_i∗τ_i)` for every `σ ∈ S_n`, `ρ_i ∈ S_{k_i}` with `n, k_i ≤` the
/// bounds, against `tau_samples` seeded random choices of the third level, plus the
/// inverse formula on the same instances.
pub fn check_operad_associativity(
    max_n: usize,
    max_k: usize,
    tau_samples: usize,
    seed: u64,
) -> Vec<LawResult> {
    use check_all;
    let mut r = rng(seed);
    let cases = shapes(max_n, max_k);
    let mut triples = Vec::with_capacity(cases.len() * tau_samples);
    for (sigma, rhos) in &cases {
        for _ in 0..tau_samples {
            let taus: Vec<Vec<Permutation>> = rhos
                .iter()
                .map(|rho| {
                    (0..rho.len())
                        .map(|_| {
                            let l = r.gen_range(0..=max_k);
                            random_permutation(&mut r, l)
                        })
                        .collect()
                })
                .collect();
            triples.push((sigma.clone(), rhos.clone(), taus));
        }
    }
    let assoc = check_all("∗ associativity", &triples, |(sigma, rhos, taus)| {
        let sides = || -> Result<(Permutation, Permutation), Error> {
            let flat: Vec<Permutation> = taus.iter().flatten().cloned().collect();
            let lhs = compose_blocks(&compose_blocks(sigma, rhos)?, &flat)?;
            let inner = rhos
                .iter()
                .zip(taus)
                .map(|(rho, t)| compose_blocks(rho, t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((lhs, compose_blocks(sigma, &inner)?))
        };
        let (lhs, rhs) = sides().map_err(|e| e.to_string())?;
        if lhs == rhs {
            Ok(())
        } else {
            Err(format!("σ={sigma} ρ={rhos:?} τ={taus:?}: {lhs} vs {rhs}"))
        }
    });
    let inverse = check_all("∗ inverse formula", &cases, |(sigma, rhos)| {
        let direct = compose_blocks(sigma, rhos)
            .map_err(|e| e.to_string())?
            .inverse();
        let formula = invert_blocks(sigma, rhos).map_err(|e| e.to_string())?;
        if direct == formula {
            Ok(())
        } else {
            Err(format!("σ={sigma} ρ={rhos:?}: {direct} vs {formula}"))
        }
    });
    vec![assoc, inverse]
}

/// `(σ'∗ρ')∘(σ∗ρ) = (σ'σ)∗(ρ'_{σ(i)}∘ρ_i)` on `cases` random instances with
/// matching block domains.
pub fn check_functoriality_lemma(cases: usize, seed: u64) -> LawResult {
    let mut r = rng(seed);
    let mut instances = Vec::with_capacity(cases);
    for _ in 0..cases {
        let n = r.gen_range(0..=4);
        let sigma = random_permutation(&mut r, n);
        let sigma2 = random_permutation(&mut r, n);
        let sizes: Vec<usize> = (0..n).map(|_| r.gen_range(0..=3)).collect();
        let rhos: Vec<Permutation> = sizes
            .iter()
            .map(|&k| random_permutation(&mut r, k))
            .collect();
        // ρ'_{σ(i)} acts on the block that ρ_i produced
        let mut rhos2 = vec![Permutation::identity(0); n];
        for i in 0..n {
            rhos2[sigma.apply(i + 1) - 1] = random_permutation(&mut r, sizes[i]);
        }
        instances.push((sigma, rhos, sigma2, rhos2));
    }
    check_all(
        "functoriality lemma for ∗",
        &instances,
        |(s, rs, s2, rs2)| {
            let sides = || -> Result<(Permutation, Permutation), Error> {
                let lhs = compose_blocks(s2, rs2)?.compose(&compose_blocks(s, rs)?)?;
                let inner = (0..s.len())
                    .map(|i| rs2[s.apply(i + 1) - 1].compose(&rs[i]))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((lhs, compose_blocks(&s2.compose(s)?, &inner)?))
            };
            let (lhs, rhs) = sides().map_err(|e| e.to_string())?;
            if lhs == rhs {
                Ok(())
            } else {
                Err(format!("σ={s} ρ={rs:?} σ'={s2} ρ'={rs2:?}: {lhs} vs {rhs}"))
            }
        },
    )
}

/// A stored instance where `∗` fails to be a group homomorphism:
/// `(id∗(τ, 1))∘((12)∗(1, 1)) ≠ (12)∗(τ∘1, 1∘1)` with `τ = (12)` on two points.
pub fn homomorphism_counterexample() -> (
    (Permutation, Vec<Permutation>),
    (Permutation, Vec<Permutation>),
) {
    let swap = Permutation::transposition(2, 1, 2);
    let id2 = Permutation::identity(2);
    (
        (swap.clone(), vec![id2.clone(), id2.clone()]),
        (Permutation::identity(2), vec![swap, id2]),
    )
}

/// The naive homomorphism formula fails on the stored instance while the lemma's
/// reindexed formula holds.
pub fn check_homomorphism_counterexample() -> LawResult {
    let law = "∗ is not a group homomorphism";
    let ((s, rs), (s2, rs2)) = homomorphism_counterexample();
    let run = || -> Result<(Permutation, Permutation, Permutation), Error> {
        let actual = compose_blocks(&s2, &rs2)?.compose(&compose_blocks(&s, &rs)?)?;
        let naive_inner = rs2
            .iter()
            .zip(&rs)
            .map(|(a, b)| a.compose(b))
            .collect::<Result<Vec<_>, _>>()?;
        let naive = compose_blocks(&s2.compose(&s)?, &naive_inner)?;
        let lemma_inner = (0..s.len())
            .map(|i| rs2[s.apply(i + 1) - 1].compose(&rs[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let lemma = compose_blocks(&s2.compose(&s)?, &lemma_inner)?;
        Ok((actual, naive, lemma))
    };
    match run() {
        Ok((actual, naive, lemma)) if actual != naive && actual == lemma => LawResult::pass(law, 1),
        Ok((actual, naive, lemma)) => LawResult::fail(
            law,
            1,
            format!("composite {actual}, naive {naive}, lemma {lemma}"),
        ),
        Err(e) => LawResult::fail(law, 1, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    // Block-coordinate oracle: (i, j) ↦ (σ(i), ρ_i(j)), flattened against the output shape.
    fn oracle_star(sigma: &Permutation, rhos: &[Permutation]) -> Vec<usize> {
        let n = sigma.len();
        let out_lengths: Vec<usize> = (1..=n)
            .map(|l| {
                let i = (1..=n).find(|&i| sigma.apply(i) == l).unwrap();
                rhos[i - 1].len()
            })
            .collect();
        let out_shape = BlockShape::new(out_lengths);
        let offs = out_shape.offsets();
        let mut images = vec![];
        for (i, rho) in rhos.iter().enumerate() {
            for j in 1..=rho.len() {
                images.push(offs[sigma.apply(i + 1) - 1] + rho.apply(j));
            }
        }
        images
    }

    #[test]
    fn swap_of_blocks_one_two() {
        let s = p(&[2, 1]);
        let r = [Permutation::identity(1), Permutation::identity(2)];
        assert_eq!(compose_blocks(&s, &r).unwrap().images(), &[3, 1, 2]);
        assert_eq!(invert_blocks(&s, &r).unwrap().images(), &[2, 3, 1]);
    }

    #[test]
    fn identity_star_identity() {
        let r = [Permutation::identity(4)];
        assert!(compose_blocks(&Permutation::identity(1), &r)
            .unwrap()
            .is_identity());
    }

    #[test]
    fn pad_examples() {
        assert_eq!(pad_block(&p(&[2, 1])).images(), &[1, 3, 2]);
        assert_eq!(pad_block(&p(&[2, 3, 1])).images(), &[1, 3, 4, 2]);
        assert!(pad_block(&Permutation::identity(3)).is_identity());
    }

    #[test]
    fn length_mismatch_is_structural() {
        assert!(compose_blocks(&Permutation::identity(2), &[Permutation::identity(1)]).is_err());
    }

    #[test]
    fn inverse_exhaustive_on_two_two() {
        let mut point_checks = 0;
        for s in all_permutations(2) {
            for r1 in all_permutations(2) {
                for r2 in all_permutations(2) {
                    let rs = [r1.clone(), r2.clone()];
                    let f = compose_blocks(&s, &rs).unwrap();
                    let g = invert_blocks(&s, &rs).unwrap();
                    for x in 1..=4 {
                        assert_eq!(g.apply(f.apply(x)), x);
                        point_checks += 1;
                    }
                }
            }
        }
        assert_eq!(point_checks, 32);
    }

    #[test]
    fn agrees_with_block_oracle() {
        for s in all_permutations(3) {
            for r in [
                vec![p(&[1]), p(&[2, 1]), Permutation::identity(0)],
                vec![p(&[3, 1, 2]), p(&[1]), p(&[2, 1])],
            ] {
                assert_eq!(
                    compose_blocks(&s, &r).unwrap().images(),
                    oracle_star(&s, &r).as_slice()
                );
            }
        }
    }

    #[test]
    fn nullary_blocks_contribute_nothing() {
        let s = p(&[3, 1, 2]);
        let r = [
            Permutation::identity(0),
            p(&[2, 1]),
            Permutation::identity(0),
        ];
        assert_eq!(compose_blocks(&s, &r).unwrap().images(), &[2, 1]);
    }

    #[test]
    fn tracking_positions() {
        let t = Permutation::tracking(&["a", "b", "c"], &["c", "a", "b"]).unwrap();
        assert_eq!(t.images(), &[2, 3, 1]);
        assert_eq!(t.permute(&["a", "b", "c"]), vec!["c", "a", "b"]);
    }

    #[test]
    fn block_coords_skip_empty_blocks() {
        let shape = BlockShape::new(vec![2, 0, 1]);
        assert_eq!(shape.coords(2), (1, 2));
        assert_eq!(shape.coords(3), (3, 1));
    }

    #[test]
    fn json_is_the_image_array() {
        let s = p(&[3, 1, 2]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[3,1,2]");
        let back: Permutation = serde_json::from_str("[3,1,2]").unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn operad_laws() {
        let rs = check_operad_associativity(3, 3, 2, 1);
        assert!(rs.iter().all(|r| r.passed), "{rs:?}");
        assert_eq!(rs[1].checked, 6211);
        let lemma = check_functoriality_lemma(500, 1);
        assert!(lemma.passed && lemma.checked == 500, "{lemma:?}");
        assert!(check_homomorphism_counterexample().passed);
    }
}
