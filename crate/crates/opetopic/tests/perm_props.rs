use opetopic::perm::{compose_blocks, invert_blocks, move_blocks, Permutation};
use proptest::prelude::*;

fn perm(max: usize) -> impl Strategy<Value = Permutation> {
    (0..=max).prop_flat_map(|n| {
        Just((1..=n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|v| Permutation::new(v).unwrap())
    })
}

fn perm_of(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::new(v).unwrap())
}

/// `σ ∈ S_n` with `ρ_i ∈ S_{k_i}`.
fn shape(max: usize) -> impl Strategy<Value = (Permutation, Vec<Permutation>)> {
    (perm(max), prop::collection::vec(perm(max), 0..=max)).prop_map(|(s, mut rs)| {
        rs.resize(s.len(), Permutation::identity(1));
        (s, rs)
    })
}

proptest! {
    #[test]
    fn composition_is_associative(n in 0usize..6, seed in any::<u64>()) {
        let mut r = opetopic::gen::rng(seed);
        let p = opetopic::gen::random_permutation(&mut r, n);
        let q = opetopic::gen::random_permutation(&mut r, n);
        let s = opetopic::gen::random_permutation(&mut r, n);
        let left = p.compose(&q).unwrap().compose(&s).unwrap();
        let right = p.compose(&q.compose(&s).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverse_undoes_permute(p in perm(6)) {
        let items: Vec<usize> = (0..p.len()).collect();
        let moved = p.permute(&items);
        prop_assert_eq!(p.inverse().permute(&moved), items.clone());
        for (i, x) in items.iter().enumerate() {
            prop_assert_eq!(moved[p.apply(i + 1) - 1], *x);
        }
    }

    #[test]
    fn compose_blocks_has_identity_and_inverses((s, rs) in shape(3)) {
        let c = compose_blocks(&s, &rs).unwrap();
        prop_assert_eq!(c.len(), rs.iter().map(Permutation::len).sum::<usize>());
        let inv = invert_blocks(&s, &rs).unwrap();
        prop_assert!(c.compose(&inv).unwrap().is_identity());
        let ids: Vec<Permutation> = rs.iter().map(|r| Permutation::identity(r.len())).collect();
        let lengths: Vec<usize> = rs.iter().map(Permutation::len).collect();
        prop_assert_eq!(compose_blocks(&s, &ids).unwrap(), move_blocks(&s, &lengths).unwrap());
    }

    #[test]
    fn compose_blocks_is_associative(
        (s, rs) in shape(3),
        seed in any::<u64>(),
    ) {
        // τ_{ij} ∈ S_{m_ij} for each point j of block i
        let mut r = opetopic::gen::rng(seed);
        let taus: Vec<Vec<Permutation>> = rs
            .iter()
            .map(|rho| {
                (0..rho.len())
                    .map(|_| {
                        let m = rand::Rng::gen_range(&mut r, 0..=2);
                        opetopic::gen::random_permutation(&mut r, m)
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<Permutation> = taus.iter().flatten().cloned().collect();
        let left = compose_blocks(&compose_blocks(&s, &rs).unwrap(), &flat).unwrap();
        let inner: Vec<Permutation> = rs
            .iter()
            .zip(&taus)
            .map(|(rho, t)| compose_blocks(rho, t).unwrap())
            .collect();
        let right = compose_blocks(&s, &inner).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn blocks_of_a_composite(n in 0usize..4, seed in any::<u64>()) {
        // (σ'∗ρ')∘(σ∗ρ) = (σ'∘σ)∗(ρ'_{σ(i)}∘ρ_i) when the domains match
        let mut r = opetopic::gen::rng(seed);
        let g = |r: &mut _, k| opetopic::gen::random_permutation(r, k);
        let s = g(&mut r, n);
        let s2 = g(&mut r, n);
        let ks: Vec<usize> = (0..n).map(|_| rand::Rng::gen_range(&mut r, 0..=3)).collect();
        let rs: Vec<Permutation> = ks.iter().map(|&k| g(&mut r, k)).collect();
        let mut rs2 = vec![Permutation::identity(0); n];
        for i in 0..n {
            rs2[s.apply(i + 1) - 1] = g(&mut r, ks[i]);
        }
        let lhs = compose_blocks(&s2, &rs2).unwrap().compose(&compose_blocks(&s, &rs).unwrap()).unwrap();
        let blocks: Vec<Permutation> = (0..n)
            .map(|i| rs2[s.apply(i + 1) - 1].compose(&rs[i]).unwrap())
            .collect();
        let rhs = compose_blocks(&s2.compose(&s).unwrap(), &blocks).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn json_round_trip(p in perm(8)) {
        let v = serde_json::to_value(&p).unwrap();
        prop_assert_eq!(serde_json::from_value::<Permutation>(v).unwrap(), p);
    }

    #[test]
    fn identity_is_neutral(p in (0usize..6).prop_flat_map(perm_of)) {
        let id = Permutation::identity(p.len());
        prop_assert_eq!(p.compose(&id).unwrap(), p.clone());
        prop_assert_eq!(id.compose(&p).unwrap(), p);
    }
}

#[test]
fn compose_blocks_is_not_a_homomorphism() {
    let ((s, rs), (s2, rs2)) = opetopic::perm::homomorphism_counterexample();
    let composite = compose_blocks(&s2, &rs2)
        .unwrap()
        .compose(&compose_blocks(&s, &rs).unwrap())
        .unwrap();
    let naive: Vec<Permutation> = rs2
        .iter()
        .zip(&rs)
        .map(|(a, b)| a.compose(b).unwrap())
        .collect();
    assert_ne!(
        compose_blocks(&s2.compose(&s).unwrap(), &naive).unwrap(),
        composite
    );
}
