mod common;

use proptest::prelude::*;
use zoozve::compiler::{compile, lines_to_program, parse_ir, Compiled, LineTag};
use zoozve::isa::{group_size, VConfig};
use zoozve::sim::{hazard_check, run, MachineState, RunOptions};

const MEM: usize = 1 << 20;

fn opts() -> RunOptions {
    RunOptions { mem_bytes: MEM, ..RunOptions::default() }
}

fn compiled(seed: u64) -> (common::RandomModule, Compiled) {
    let rm = common::random_module(seed);
    let c = compile(&rm.module, &rm.config).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    (rm, c)
}

fn run_lines(c: &Compiled, rm: &common::RandomModule, coalesced: bool) -> MachineState {
    let lines = if coalesced { &c.lines } else { &c.before_merge };
    run(&lines_to_program(lines), &rm.config, &rm.image, &opts()).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_counts_follow_register_capacity(seed in any::<u64>()) {
        let (rm, c) = compiled(seed);
        let bits = rm.module.vew.bits();
        for v in &rm.module.values {
            let members = (0..).take_while(|j| c.split.find_value(&format!("{}.{j}", v.name)).is_some()).count() as u64;
            prop_assert_eq!(members, (v.len * bits as u64).div_ceil(rm.config.vlen_bits as u64));
            prop_assert_eq!(members, group_size(v.len, bits, rm.config.vlen_bits));
        }
    }

    #[test]
    fn groups_are_contiguous_and_live_groups_disjoint(seed in any::<u64>()) {
        let (_, c) = compiled(seed);
        let groups = c.split.groups();
        for (g, members) in &groups {
            if members.is_empty() {
                continue;
            }
            let rg = c.assignment.groups[g];
            prop_assert_eq!(rg.len() as usize, members.len());
            for (k, v) in members.iter().enumerate() {
                prop_assert_eq!(c.assignment.reg(*v), rg.head + k as u32);
            }
        }
        let spans: Vec<_> = groups
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(g, m)| {
                let iv = c.intervals.iter().find(|iv| iv.vreg == m[0]).unwrap();
                (c.assignment.groups[g], iv.start, iv.end)
            })
            .collect();
        for (i, a) in spans.iter().enumerate() {
            for b in &spans[i + 1..] {
                if a.1 <= b.2 && b.1 <= a.2 {
                    prop_assert!(!hazard_check(&a.0, &b.0), "{:?} and {:?} overlap while both live", a, b);
                }
            }
        }
    }

    #[test]
    fn compiled_program_matches_reference_interpreter(seed in any::<u64>()) {
        let (rm, c) = compiled(seed);
        let want = common::interpret(&rm.module, &rm.image, MEM);
        let got = run_lines(&c, &rm, true);
        prop_assert!(got.core.mem.as_bytes() == want.as_bytes(), "seed {seed}");
    }

    #[test]
    fn coalescing_preserves_behaviour(seed in any::<u64>()) {
        let (rm, c) = compiled(seed);
        let a = run_lines(&c, &rm, false);
        let b = run_lines(&c, &rm, true);
        prop_assert!(a.core.mem.as_bytes() == b.core.mem.as_bytes());
        prop_assert!(a.vregs.as_bytes() == b.vregs.as_bytes());
    }

    #[test]
    fn each_group_becomes_one_instruction(seed in any::<u64>()) {
        let (_, c) = compiled(seed);
        let mut per_group = std::collections::BTreeMap::new();
        for l in &c.lines {
            if let LineTag::Split { group, .. } = l.tag {
                *per_group.entry(group).or_insert(0) += 1;
            }
        }
        prop_assert_eq!(per_group.len(), c.module.ops.len());
        prop_assert!(per_group.values().all(|&n| n == 1), "{:?}", per_group);
    }

    #[test]
    fn split_text_round_trips(seed in any::<u64>()) {
        let (rm, c) = compiled(seed);
        prop_assert_eq!(parse_ir(&rm.module.to_string()).unwrap(), rm.module);
        prop_assert_eq!(parse_ir(&c.split.to_string()).unwrap(), c.split);
    }
}

#[test]
fn delimiter_free_module_rejects_resplit() {
    let rm = common::random_module(3);
    let c = compile(&rm.module, &rm.config).unwrap();
    assert!(compile(&c.split, &VConfig::default()).is_err());
}
