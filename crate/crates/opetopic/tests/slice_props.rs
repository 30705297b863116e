use std::collections::BTreeSet;
use std::sync::Arc;

use opetopic::fixtures::three_type;
use opetopic::gen::{random_morphism, random_msig_object, random_signature, random_twist, rng};
use opetopic::sig::coproduct;
use opetopic::slice::{check_factorization, compare, factorize, star, OverSet};
use opetopic::Obj;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn star_preserves_coproducts_on_the_left(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let m = three_type().shared();
        let a = random_msig_object(&mut r, &m, "a", 2);
        let b = random_msig_object(&mut r, &m, "b", 2);
        let x = OverSet::spread(&*m, n).unwrap();
        let sa = star(&Obj::base(a.clone()), &x, usize::MAX).unwrap();
        let sb = star(&Obj::base(b.clone()), &x, usize::MAX).unwrap();
        let sum = star(&Obj::coprod(Obj::base(a), Obj::base(b)), &x, usize::MAX).unwrap();
        prop_assert_eq!(sum.len(), sa.len() + sb.len());
        let anchors = |s: &OverSet| s.anchors.values().cloned().collect::<Vec<_>>();
        let mut split = anchors(&sa);
        split.extend(anchors(&sb));
        split.sort();
        let mut joined = anchors(&sum);
        joined.sort();
        prop_assert_eq!(joined, split);
    }

    #[test]
    fn factorization_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = Arc::new(random_signature(&mut r));
        let f = random_morphism(&mut r, &s, "'");
        prop_assert!(check_factorization(&f).passed());
    }

    #[test]
    fn strict_morphisms_factor_trivially(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_signature(&mut r);
        let types: Vec<_> = a.types.iter().cloned().collect();
        let b = opetopic::gen::random_signature_on(&mut r, &types);
        let (_, inl, _) = coproduct(&a, &b).unwrap();
        let (zeta, g) = factorize(&inl).unwrap();
        prop_assert!(zeta.is_strict() && g.is_strict());
        let image: BTreeSet<_> = zeta.symbol_map.values().collect();
        prop_assert_eq!(image.len(), zeta.dom.len());
        prop_assert_eq!(zeta.cod.len(), zeta.dom.len());
        prop_assert_eq!(g.after(&zeta).unwrap(), inl);
    }

    #[test]
    fn webs_act_like_the_free_monoid(seed in any::<u64>(), n in 1usize..3) {
        let m = random_twist(&mut rng(seed)).shared();
        let x = OverSet::spread(&*m, n).unwrap();
        let c = compare(&m, &x, 2, 2_000).unwrap();
        prop_assert!(c.passed(), "{:?}", c.report.failures());
    }
}
