use opetopic::fixtures::three_type;
use opetopic::freemon::Tree;
use opetopic::gen::{random_twist, rng};
use opetopic::web::{check_web_laws, tensor_pairs_each, Webs};
use opetopic::Permutation;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn web_laws_over_random_twisted_monoids(seed in any::<u64>()) {
        let m = random_twist(&mut rng(seed)).shared();
        let report = check_web_laws(&Webs::new(&m), 3, 300);
        prop_assert!(report.passed(), "{:?}", report.failures());
    }

    #[test]
    fn nu_agrees_with_grafting(pick in any::<prop::sample::Index>()) {
        let webs = Webs::new(&three_type().shared());
        let pairs = tensor_pairs_each(&webs, 3, usize::MAX);
        let (w, vs) = &pairs[pick.index(pairs.len())];
        let nu = webs.nu(w, vs).unwrap();
        let (graft, amalgamation) = webs.graft_tracking(w, vs).unwrap();
        prop_assert_eq!(&nu.web, &graft);
        prop_assert_eq!(&nu.amalgamation, &amalgamation);
        prop_assert_eq!(nu.web.nodes(), vs.iter().map(Tree::nodes).sum::<usize>());

        // the JSON result reads back as the same web and amalgamation
        let v = nu.to_json();
        let amalgamation: Permutation = serde_json::from_value(v["amalgamation"].clone()).unwrap();
        let mut web = v.clone();
        web.as_object_mut().unwrap().remove("amalgamation");
        prop_assert_eq!(serde_json::from_value::<Tree>(web).unwrap(), nu.web);
        prop_assert_eq!(amalgamation, nu.amalgamation);
    }
}
