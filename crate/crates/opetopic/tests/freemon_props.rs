use std::sync::Arc;

use opetopic::freemon::{self, check_free_monoid, map_tensor_tree, TensorContext, Tree};
use opetopic::gen::{random_morphism, random_signature, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_monoid_laws_on_random_signatures(seed in any::<u64>()) {
        let ctx = TensorContext::new(random_signature(&mut rng(seed)));
        for r in check_free_monoid(&ctx, 2, 4, 300) {
            prop_assert!(r.passed, "{}: {:?}", r.law, r.witness);
        }
    }

    #[test]
    fn mapping_trees_is_functorial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = Arc::new(random_signature(&mut r));
        let f = random_morphism(&mut r, &s, "'");
        let g = random_morphism(&mut r, &f.cod, "'");
        let gf = g.after(&f).unwrap();
        let ctx = TensorContext::new((*s).clone());
        for t in freemon::enumerate(&ctx, 2, 4).into_iter().take(200) {
            let (t1, p1) = map_tensor_tree(&f, &t).unwrap();
            let (t2, p2) = map_tensor_tree(&g, &t1).unwrap();
            let (t3, p3) = map_tensor_tree(&gf, &t).unwrap();
            prop_assert_eq!(&t2, &t3);
            prop_assert_eq!(p2.compose(&p1).unwrap(), p3);
        }
    }

    #[test]
    fn trees_round_trip_through_json(seed in any::<u64>()) {
        let ctx = TensorContext::new(random_signature(&mut rng(seed)));
        for t in freemon::enumerate(&ctx, 2, 3).into_iter().take(100) {
            let text = serde_json::to_string(&t).unwrap();
            prop_assert_eq!(serde_json::from_str::<Tree>(&text).unwrap(), t);
        }
    }
}
