use opetopic::gen::{
    arrow_over, random_msig_object, random_twist, random_twist_sigmas, rng, twist_automorphism,
};
use opetopic::sigmamon::{
    check_distributivity, check_odot_coherence, validate_hom, validate_monoid, PhiVariant,
};
use opetopic::Obj;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn twisted_monoids_and_their_automorphisms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_twist(&mut r);
        let sigmas = random_twist_sigmas(&mut r, &t);
        let m = t.shared();
        prop_assert!(validate_monoid(&m, 300).passed());
        let h = twist_automorphism(&m, sigmas);
        let report = validate_hom(&h, 300);
        prop_assert!(report.passed(), "{:?}", report.failures());
    }

    #[test]
    fn odot_coherence_and_naturality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_twist(&mut r);
        let sigmas = random_twist_sigmas(&mut r, &t);
        let m = t.shared();
        let h = twist_automorphism(&m, sigmas);
        let o: Vec<Obj> = (0..4).map(|i| Obj::base(random_msig_object(&mut r, &m, &format!("{i}_"), 2))).collect();
        let f: Vec<_> = o[..3].iter().map(|x| arrow_over(x, &h)).collect();
        for l in check_odot_coherence(&m, [&o[0], &o[1], &o[2], &o[3]], Some((&h, [&f[0], &f[1], &f[2]])), 200) {
            prop_assert!(l.passed, "{}: {:?}", l.law, l.witness);
        }
    }

    #[test]
    fn distributivity_conditions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_twist(&mut r).shared();
        let o: Vec<Obj> = (0..5).map(|i| Obj::base(random_msig_object(&mut r, &m, &format!("{i}_"), 2))).collect();
        for l in check_distributivity(&m, [&o[0], &o[1], &o[2], &o[3], &o[4]], None, PhiVariant::Standard, 200) {
            prop_assert!(l.passed, "{}: {:?}", l.law, l.witness);
        }
    }
}
