use opetopic::freemon::Tree;
use opetopic::opetope::{terminal_tower, validate_opetopic_set};
use opetopic::web::Webs;

#[test]
fn generation_is_reproducible() {
    assert_eq!(
        terminal_tower(3, 3).to_json(),
        terminal_tower(3, 3).to_json()
    );
}

#[test]
fn truncations_are_prefixes_and_stay_valid() {
    let full = terminal_tower(3, 3);
    let prefix = terminal_tower(2, 3);
    for n in 0..=2 {
        assert_eq!(prefix.cells(n), full.cells(n), "dimension {n}");
    }
    assert!(validate_opetopic_set(&prefix, 300).passed());
}

#[test]
fn bodies_are_typed_by_their_nodes_and_composite() {
    let t = terminal_tower(3, 3);
    for n in 2..=3 {
        let webs = Webs::new(&t.levels[n - 2].s);
        for c in t.cells(n) {
            let w = Tree::from_term(&c).unwrap();
            let ty = &t.levels[n - 1].cells.symbols[&c];
            assert_eq!(ty.inputs, w.labels(), "{c}");
            assert_eq!(ty.output, webs.composite(&w).unwrap(), "{c}");
        }
    }
}
