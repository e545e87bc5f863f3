mod common;

use proptest::prelude::*;
use zoozve::sim::{build_hazard_graph, hazard_check, HazardError};
use zoozve::isa::{assemble, RegisterGroup};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn graph_matches_element_expansion(seed in any::<u64>()) {
        let cfg = common::hazard_config();
        let p = common::random_hazard_program(seed, 20, &cfg);
        let g = build_hazard_graph(&p, &cfg, None).unwrap();
        prop_assert_eq!(g.edges, common::expanded_hazards(&p, &cfg));
    }

    #[test]
    fn overlap_is_symmetric_and_matches_sets(a in 0u32..50, la in 1u32..10, b in 0u32..50, lb in 1u32..10) {
        let (x, y) = (RegisterGroup::new(a, a + la), RegisterGroup::new(b, b + lb));
        let shared = (a..a + la).any(|r| (b..b + lb).contains(&r));
        prop_assert_eq!(hazard_check(&x, &y), shared);
        prop_assert_eq!(hazard_check(&y, &x), shared);
    }
}

#[test]
fn branchy_programs_need_annotations() {
    let p = assemble("li x1, 4\nl: vload v0, x0, x1\nbne x1, x0, l").unwrap();
    let cfg = common::hazard_config();
    assert_eq!(build_hazard_graph(&p, &cfg, None).unwrap_err(), HazardError::Branchy);
    let ann = [(1usize, 4u64)].into_iter().collect();
    assert_eq!(build_hazard_graph(&p, &cfg, Some(&ann)).unwrap().edges.len(), 0);
}
