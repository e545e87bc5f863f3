use proptest::prelude::*;
use zoozve::isa::{assemble, Lmul, Program, RvvConfig, VConfig, Vew};
use zoozve::rvv::{rvv_utilization, run_rvv, strip_mine_iterations, vsetvli};
use zoozve::sim::{run, MemoryImage, RunOptions, SimErrorKind, TrapCause};

fn vew() -> impl Strategy<Value = Vew> {
    prop::sample::select(Vew::ALL.to_vec())
}

fn lmul() -> impl Strategy<Value = Lmul> {
    prop::sample::select(Lmul::ALL.to_vec())
}

fn opts() -> RunOptions {
    RunOptions { mem_bytes: 1 << 20, ..RunOptions::default() }
}

fn ramp(n: usize) -> Vec<i16> {
    (0..n).map(|i| (i as i16).wrapping_mul(37).wrapping_sub(500)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loads_leave_the_tail_untouched(n in 0u64..200, pre in 1u64..200) {
        let cfg = VConfig::default();
        let src = format!("li x1, {pre}\nli x2, 0x1000\nvload v4, x2, x1\nli x1, {n}\nli x2, 0x4000\nvload v4, x2, x1\n");
        let mut img = MemoryImage::new();
        img.put_i16s(0x1000, &ramp(200)).put_i16s(0x4000, &vec![7; 200]);
        let (s, stats) = run(&assemble(&src).unwrap(), &cfg, &img, &opts()).unwrap();
        let base = s.vregs.base(4, Vew::E16);
        for i in 0..200u64 {
            let want = if i < n { 7 } else if i < pre { ramp(200)[i as usize] as i64 } else { 0 };
            prop_assert_eq!(s.vregs.get_signed(base + i, Vew::E16), want, "element {}", i);
        }
        prop_assert_eq!(stats.dynamic_count, 6);
        prop_assert_eq!(stats.dynamic_count, stats.per_class.total());
        prop_assert_eq!(stats.strip_iterations, 0);
    }

    #[test]
    fn redsum_wraps_like_scalar_sum(n in 1usize..400) {
        let data = ramp(n);
        let src = format!("li x1, {n}\nli x2, 0x1000\nvload v0, x2, x1\nvredsum v100, v0, x1\nli x3, 1\nli x4, 0x8000\nvstore v100, x4, x3");
        let mut img = MemoryImage::new();
        img.put_i16s(0x1000, &data);
        let (s, _) = run(&assemble(&src).unwrap(), &VConfig::default(), &img, &opts()).unwrap();
        let want = data.iter().fold(0i16, |a, &b| a.wrapping_add(b));
        prop_assert_eq!(s.core.mem.read_i16s(0x8000, 1).unwrap(), vec![want]);
    }

    #[test]
    fn group_past_the_file_traps(head in 2000u16..2048, n in 1u64..2000) {
        let src = format!("li x1, {n}\nvload v{head}, x0, x1");
        let res = run(&assemble(&src).unwrap(), &VConfig::default(), &MemoryImage::new(), &opts());
        let fits = head as u64 + n.div_ceil(32) <= 2048;
        match res {
            Ok(_) => prop_assert!(fits),
            Err(e) => {
                prop_assert!(!fits);
                let is_bounds = matches!(e.kind, SimErrorKind::Trap(t) if matches!(t.cause, TrapCause::RegisterBounds { .. }));
                prop_assert!(is_bounds);
            }
        }
    }

    #[test]
    fn vsetvli_clamps_to_vlmax(avl in 0u64..5000, vlen in prop::sample::select(vec![128u32, 256, 512, 1024]), e in vew(), l in lmul()) {
        let cfg = RvvConfig::new(vlen, e, l).unwrap();
        let vlmax = (vlen / e.bits() * l.factor()) as u64;
        prop_assert_eq!(vsetvli(avl, &cfg), avl.min(vlmax));
        prop_assert_eq!(strip_mine_iterations(avl, &cfg), avl.div_ceil(vlmax));
        if avl > 0 {
            let vl = vsetvli(avl, &cfg);
            let u = rvv_utilization(vl, &cfg).unwrap();
            prop_assert!(u > 0.0 && u <= 1.0);
            prop_assert_eq!(u, vl as f64 / vlmax as f64);
        }
    }

    #[test]
    fn rvv_strip_loop_counts_match_formula(n in 1u64..1000, l in lmul()) {
        let cfg = RvvConfig::new(512, Vew::E16, l).unwrap();
        let src = format!(
            "li x10, {n}\nli x12, 0x1000\nloop:\nrvv.vsetvli x5, x10, e16, {l}\nrvv.vle v0, x12\nrvv.vadd.vx v0, v0, x10\n\
             rvv.vse v0, x12\nslli x6, x5, 1\nadd x12, x12, x6\nsub x10, x10, x5\nbne x10, x0, loop"
        );
        let p: Program = assemble(&src).unwrap();
        let (_, stats) = run_rvv(&p, &cfg, &MemoryImage::new(), &opts()).unwrap();
        let iters = strip_mine_iterations(n, &cfg);
        prop_assert_eq!(stats.strip_iterations, iters);
        prop_assert_eq!(stats.dynamic_count, 2 + 8 * iters);
    }
}

#[test]
fn zero_avl_is_counted_but_inert() {
    let p = assemble("li x1, 0\nli x2, 0x100\nvload v0, x2, x1\nvstore v0, x2, x1").unwrap();
    let mut img = MemoryImage::new();
    img.put_i16s(0x100, &[5, 6]);
    let (s, stats) = run(&p, &VConfig::default(), &img, &opts()).unwrap();
    assert_eq!(stats.dynamic_count, 4);
    assert_eq!(stats.per_class.vector_mem, 2);
    assert_eq!(s.core.mem.read_i16s(0x100, 2).unwrap(), vec![5, 6]);
    assert!(s.vregs.as_bytes().iter().all(|&b| b == 0));
}

#[test]
fn step_budget_stops_loops() {
    let p = assemble("l: jal x0, l").unwrap();
    let err = run(&p, &VConfig::default(), &MemoryImage::new(), &RunOptions { max_steps: 50, ..opts() }).unwrap_err();
    assert_eq!(err.kind, SimErrorKind::Timeout { max_steps: 50 });
    assert_eq!(err.stats.dynamic_count, 50);
}
