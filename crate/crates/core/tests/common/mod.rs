#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zoozve::compiler::{IrModule, OpKind, ValueId};
use zoozve::isa::{BranchCond, Instruction, Lmul, Program, ScalarOp, VConfig, VOp, VReg, Vew, XReg};
use zoozve::sim::{HazardEdge, HazardKind, Memory, MemoryImage};

pub fn xreg() -> impl Strategy<Value = XReg> {
    (0u8..32).prop_map(XReg)
}

pub fn zreg() -> impl Strategy<Value = VReg> {
    (0u16..8192).prop_map(VReg)
}

pub fn rreg() -> impl Strategy<Value = VReg> {
    (0u16..32).prop_map(VReg)
}

pub fn vop() -> impl Strategy<Value = VOp> {
    prop::sample::select(VOp::ALL.to_vec())
}

/// Every instruction form with fields drawn over their full encodable
/// ranges. Branch targets are left small; [`program`] rewrites them.
pub fn instruction() -> impl Strategy<Value = Instruction> {
    use Instruction::*;
    prop_oneof![
        (zreg(), xreg(), xreg()).prop_map(|(vd, rs_addr, rs_avl)| VLoad { vd, rs_addr, rs_avl }),
        (zreg(), xreg(), xreg()).prop_map(|(vs3, rs_addr, rs_avl)| VStore { vs3, rs_addr, rs_avl }),
        (vop(), zreg(), zreg(), zreg(), xreg()).prop_map(|(op, vd, vs1, vs2, rs_avl)| VArithVV { op, vd, vs1, vs2, rs_avl }),
        (vop(), zreg(), zreg(), xreg(), xreg()).prop_map(|(op, vd, vs2, rs2, rs_avl)| VArithVX { op, vd, vs2, rs2, rs_avl }),
        (zreg(), zreg(), xreg()).prop_map(|(vd, vs2, rs_avl)| VRedSum { vd, vs2, rs_avl }),
        (zreg(), zreg(), zreg(), xreg()).prop_map(|(vd, vs1, vs2, rs_avl)| VGather { vd, vs1, vs2, rs_avl }),
        (zreg(), zreg(), zreg(), xreg()).prop_map(|(vd, vs1, vs2, rs_avl)| VScatter { vd, vs1, vs2, rs_avl }),
        (0u8..2, xreg()).prop_map(|(csr, rs_value)| VSetCsr { csr, rs_value }),
        (xreg(), any::<i32>()).prop_map(|(rd, imm)| Li { rd, imm }),
        (prop::sample::select(ScalarOp::ALL.to_vec()), xreg(), xreg(), xreg())
            .prop_map(|(op, rd, rs1, rs2)| Alu { op, rd, rs1, rs2 }),
        (xreg(), xreg(), 0u8..64).prop_map(|(rd, rs1, shamt)| Slli { rd, rs1, shamt }),
        (prop::sample::select(vec![BranchCond::Ne, BranchCond::Ge]), xreg(), xreg(), any::<u32>())
            .prop_map(|(cond, rs1, rs2, target)| Branch { cond, rs1, rs2, target }),
        (xreg(), any::<u32>()).prop_map(|(rd, target)| Jal { rd, target }),
        (xreg(), xreg(), any::<i32>()).prop_map(|(rd, rs1, offset)| Lw { rd, rs1, offset }),
        (xreg(), xreg(), any::<i32>()).prop_map(|(rs2, rs1, offset)| Sw { rs2, rs1, offset }),
        (xreg(), xreg(), prop::sample::select(Vew::ALL.to_vec()), prop::sample::select(Lmul::ALL.to_vec()))
            .prop_map(|(rd, rs_avl, vew, lmul)| VSetVli { rd, rs_avl, vew, lmul }),
        (rreg(), xreg()).prop_map(|(vd, rs_addr)| RvvLoad { vd, rs_addr }),
        (rreg(), xreg()).prop_map(|(vs3, rs_addr)| RvvStore { vs3, rs_addr }),
        (vop(), rreg(), rreg(), rreg()).prop_map(|(op, vd, vs1, vs2)| RvvArithVV { op, vd, vs1, vs2 }),
        (vop(), rreg(), rreg(), xreg()).prop_map(|(op, vd, vs2, rs2)| RvvArithVX { op, vd, vs2, rs2 }),
        (rreg(), rreg(), rreg()).prop_map(|(vd, vs2, vs1)| RvvRedSum { vd, vs2, vs1 }),
        (rreg(), rreg(), rreg()).prop_map(|(vd, vs2, vs1)| VRGatherVV { vd, vs2, vs1 }),
    ]
}

/// Instruction with any branch target clamped into `[0, 2^31)`.
pub fn encodable_instruction() -> impl Strategy<Value = Instruction> {
    instruction().prop_map(|i| match i.branch_target() {
        Some(t) => i.with_branch_target(t & 0x7fff_ffff),
        None => i,
    })
}

/// A program whose branch targets all land inside it or just past its end.
pub fn program(max_len: usize) -> impl Strategy<Value = Program> {
    prop::collection::vec(instruction(), 1..=max_len).prop_map(|instrs| {
        let len = instrs.len() as u32 + 1;
        let mut lmul = 1u16;
        let instrs = instrs
            .into_iter()
            .map(|i| {
                if let Instruction::VSetVli { lmul: l, .. } = i {
                    lmul = l.factor() as u16;
                }
                let i = align_rvv(i, lmul);
                match i.branch_target() {
                    Some(t) => i.with_branch_target(t % len),
                    None => i,
                }
            })
            .collect();
        Program::new(instrs)
    })
}

/// Rounds baseline register operands down to a multiple of `lmul`.
fn align_rvv(i: Instruction, lmul: u16) -> Instruction {
    use Instruction::*;
    let a = |r: VReg| VReg(r.0 - r.0 % lmul);
    match i {
        RvvLoad { vd, rs_addr } => RvvLoad { vd: a(vd), rs_addr },
        RvvStore { vs3, rs_addr } => RvvStore { vs3: a(vs3), rs_addr },
        RvvArithVV { op, vd, vs1, vs2 } => RvvArithVV { op, vd: a(vd), vs1: a(vs1), vs2: a(vs2) },
        RvvArithVX { op, vd, vs2, rs2 } => RvvArithVX { op, vd: a(vd), vs2: a(vs2), rs2 },
        RvvRedSum { vd, vs2, vs1 } => RvvRedSum { vd, vs2: a(vs2), vs1 },
        VRGatherVV { vd, vs2, vs1 } => VRGatherVV { vd: a(vd), vs2: a(vs2), vs1: a(vs1) },
        other => other,
    }
}

/// A random verified straight-line module together with memory contents
/// under which every gather and scatter index stays inside its data.
pub struct RandomModule {
    pub module: IrModule,
    pub image: MemoryImage,
    pub config: VConfig,
}

struct Builder {
    rng: ChaCha8Rng,
    m: IrModule,
    image: MemoryImage,
    next_addr: u64,
    live: Vec<ValueId>,
    names: usize,
}

impl Builder {
    fn name(&mut self) -> String {
        self.names += 1;
        format!("v{}", self.names)
    }

    fn alloc(&mut self, elems: u64) -> (String, u64) {
        let addr = self.next_addr;
        self.next_addr += (elems * self.m.vew.bytes() as u64).div_ceil(64) * 64 + 64;
        (format!("b{}", self.m.buffers.len()), addr)
    }

    fn raw(&mut self, values: &[u64]) -> Vec<u8> {
        let w = self.m.vew.bytes() as usize;
        values.iter().flat_map(|v| v.to_le_bytes()[..w].to_vec()).collect()
    }

    /// A fresh buffer holding `values`, loaded from a random offset.
    fn load_values(&mut self, values: Vec<u64>) -> ValueId {
        let len = values.len() as u64;
        let offset = self.rng.gen_range(0..4u64);
        let mut data: Vec<u64> = (0..offset).map(|_| self.rng.gen()).collect();
        data.extend(values);
        let (bname, addr) = self.alloc(offset + len);
        let bytes = self.raw(&data);
        self.image.put_bytes(addr, bytes);
        let buf = self.m.buffer(&bname, offset + len, addr);
        let name = self.name();
        self.m.load(&name, buf, offset, len)
    }

    fn load_random(&mut self, len: u64) -> ValueId {
        let values = (0..len).map(|_| self.rng.gen()).collect();
        let v = self.load_values(values);
        self.live.push(v);
        v
    }

    fn len_of(&self, v: ValueId) -> u64 {
        self.m.value(v).len
    }

    fn pick(&mut self) -> ValueId {
        *self.live.choose(&mut self.rng).expect("live value")
    }

    fn max_index_len(&self) -> u64 {
        if self.m.vew == Vew::E8 {
            128
        } else {
            400
        }
    }

    fn store(&mut self, v: ValueId) {
        let len = self.len_of(v);
        let (bname, addr) = self.alloc(len);
        let buf = self.m.buffer(&bname, len, addr);
        self.m.store(v, buf, 0);
    }
}

pub fn random_module(seed: u64) -> RandomModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vew = *Vew::ALL.choose(&mut rng).unwrap();
    let vlen = *[128u32, 256, 512].choose(&mut rng).unwrap();
    let config = VConfig::new(vlen, VConfig::DEFAULT_VREGS, vew).unwrap();
    let mut b = Builder { rng, m: IrModule::new(vew), image: MemoryImage::new(), next_addr: 0x1000, live: Vec::new(), names: 0 };
    let ops = b.rng.gen_range(2..14);
    let len = b.rng.gen_range(1..=300u64);
    b.load_random(len);
    for _ in 0..ops {
        match b.rng.gen_range(0..10) {
            0 => {
                let len = b.rng.gen_range(1..=300u64);
                b.load_random(len);
            }
            1 | 2 => {
                let a = b.pick();
                let len = b.len_of(a);
                let same: Vec<ValueId> = b.live.iter().copied().filter(|&v| b.len_of(v) == len).collect();
                let other = if same.len() > 1 && b.rng.gen_bool(0.7) { *same.choose(&mut b.rng).unwrap() } else { b.load_random(len) };
                let op = *VOp::ALL.choose(&mut b.rng).unwrap();
                let name = b.name();
                let v = b.m.binary(&name, op, a, other);
                b.live.push(v);
            }
            3 | 4 => {
                let a = b.pick();
                let op = *VOp::ALL.choose(&mut b.rng).unwrap();
                let imm = if b.rng.gen_bool(0.2) { b.rng.gen() } else { b.rng.gen_range(-300..300) };
                let name = b.name();
                let v = b.m.binary_imm(&name, op, a, imm);
                b.live.push(v);
            }
            5 => {
                let a = b.pick();
                let name = b.name();
                let v = b.m.redsum(&name, a);
                b.live.push(v);
            }
            6 | 7 => {
                let data = b.pick();
                let dlen = b.len_of(data);
                if dlen > b.max_index_len() {
                    continue;
                }
                let n = b.rng.gen_range(1..=b.max_index_len());
                let idx_values = (0..n).map(|_| b.rng.gen_range(0..dlen)).collect();
                let idx = b.load_values(idx_values);
                let name = b.name();
                let v = b.m.gather(&name, data, idx);
                b.live.push(v);
            }
            8 => {
                let data = b.pick();
                let n = b.len_of(data);
                if n > b.max_index_len() {
                    continue;
                }
                let mut perm: Vec<u64> = (0..n).collect();
                perm.shuffle(&mut b.rng);
                let idx = b.load_values(perm);
                let name = b.name();
                let v = b.m.scatter(&name, data, idx, n);
                b.live.push(v);
            }
            _ => {
                let v = b.pick();
                b.store(v);
            }
        }
    }
    let tail: Vec<ValueId> = b.live.iter().rev().take(2).copied().collect();
    for v in tail {
        b.store(v);
    }
    b.m.verify().expect("generated module verifies");
    RandomModule { module: b.m, image: b.image, config }
}

/// Reference evaluation of an unsplit module straight from its
/// definition, returning the final memory.
pub fn interpret(m: &IrModule, image: &MemoryImage, mem_bytes: usize) -> Memory {
    let mut mem = Memory::from_image(image, mem_bytes).expect("image fits");
    let vew = m.vew;
    let w = vew.bytes() as u64;
    let bits = vew.bits();
    let wrap = |x: i64| -> i64 {
        let s = 64 - bits;
        (x << s) >> s
    };
    let mut vals: BTreeMap<ValueId, Vec<i64>> = BTreeMap::new();
    for op in &m.ops {
        let arg = |k: usize| vals[&op.operands[k][0]].clone();
        let result = match op.kind {
            OpKind::Load { buf, offset } => {
                let b = m.buffer_ref(buf);
                let len = m.value(op.results[0]).len;
                let bytes = mem.slice(b.addr + offset * w, len * w, 1).unwrap();
                Some(
                    bytes
                        .chunks(w as usize)
                        .map(|c| {
                            let mut x = [0u8; 8];
                            x[..c.len()].copy_from_slice(c);
                            wrap(i64::from_le_bytes(x))
                        })
                        .collect(),
                )
            }
            OpKind::Store { buf, offset } => {
                let b = m.buffer_ref(buf);
                let v = arg(0);
                let dst = mem.slice_mut(b.addr + offset * w, v.len() as u64 * w, 1).unwrap();
                for (i, x) in v.iter().enumerate() {
                    dst[i * w as usize..(i + 1) * w as usize].copy_from_slice(&x.to_le_bytes()[..w as usize]);
                }
                None
            }
            OpKind::Binary(o) => Some(arg(0).iter().zip(arg(1)).map(|(&a, b)| wrap(elementwise(o, a, b, bits))).collect()),
            OpKind::BinaryImm(o, imm) => Some(arg(0).iter().map(|&a| wrap(elementwise(o, a, imm as i64, bits))).collect()),
            OpKind::RedSum => Some(vec![wrap(arg(0).iter().fold(0i64, |s, &x| s.wrapping_add(x)))]),
            OpKind::Gather => {
                let (data, idx) = (arg(0), arg(1));
                Some(idx.iter().map(|&i| data[(i as u64 & vew.mask()) as usize]).collect())
            }
            OpKind::Scatter => {
                let (data, idx) = (arg(0), arg(1));
                let mut out = vec![0; m.value(op.results[0]).len as usize];
                for (x, &i) in data.iter().zip(&idx) {
                    out[(i as u64 & vew.mask()) as usize] = *x;
                }
                Some(out)
            }
            OpKind::Delimiter { .. } => None,
        };
        if let Some(r) = result {
            vals.insert(op.results[0], r);
        }
    }
    mem
}

fn elementwise(op: VOp, a: i64, b: i64, bits: u32) -> i64 {
    let sh = (b as u64 % bits as u64) as u32;
    match op {
        VOp::Add => a.wrapping_add(b),
        VOp::Sub => a.wrapping_sub(b),
        VOp::Mul => a.wrapping_mul(b),
        VOp::And => a & b,
        VOp::Or => a | b,
        VOp::Xor => a ^ b,
        VOp::Sra => a >> sh,
        VOp::Sll => a.wrapping_shl(sh),
    }
}

/// Small machine so random heads collide often.
pub fn hazard_config() -> VConfig {
    VConfig::new(128, 64, Vew::E16).unwrap()
}

/// A straight-line program of `n` instructions mixing vector operations
/// with the `li`/`add`/`slli` and `vsetcsr` instructions that determine
/// their avl and element width.
pub fn random_hazard_program(seed: u64, n: usize, config: &VConfig) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instrs = Vec::with_capacity(n);
    let x = |r: u8| XReg(r);
    let nregs = config.num_vregs as u16;
    for r in 1..6 {
        instrs.push(Instruction::Li { rd: x(r), imm: rng.gen_range(0..40) });
    }
    while instrs.len() < n {
        let reg = |rng: &mut ChaCha8Rng| VReg(rng.gen_range(0..nregs));
        let avl = x(rng.gen_range(1..6));
        let i = match rng.gen_range(0..12) {
            0 | 1 => Instruction::Li { rd: x(rng.gen_range(1..6)), imm: rng.gen_range(0..40) },
            2 => Instruction::Alu { op: ScalarOp::Add, rd: x(rng.gen_range(1..6)), rs1: x(rng.gen_range(0..6)), rs2: x(rng.gen_range(0..6)) },
            3 => Instruction::Slli { rd: x(rng.gen_range(1..6)), rs1: x(rng.gen_range(0..6)), shamt: rng.gen_range(0..3) },
            4 => {
                instrs.push(Instruction::Li { rd: x(9), imm: rng.gen_range(0..3) });
                Instruction::VSetCsr { csr: 0, rs_value: x(9) }
            }
            5 => Instruction::VLoad { vd: reg(&mut rng), rs_addr: x(10), rs_avl: avl },
            6 => Instruction::VStore { vs3: reg(&mut rng), rs_addr: x(10), rs_avl: avl },
            7 => Instruction::VArithVV { op: VOp::Add, vd: reg(&mut rng), vs1: reg(&mut rng), vs2: reg(&mut rng), rs_avl: avl },
            8 => Instruction::VArithVX { op: VOp::Mul, vd: reg(&mut rng), vs2: reg(&mut rng), rs2: x(11), rs_avl: avl },
            9 => Instruction::VRedSum { vd: reg(&mut rng), vs2: reg(&mut rng), rs_avl: avl },
            10 => Instruction::VGather { vd: reg(&mut rng), vs1: reg(&mut rng), vs2: reg(&mut rng), rs_avl: avl },
            _ => Instruction::VScatter { vd: reg(&mut rng), vs1: reg(&mut rng), vs2: reg(&mut rng), rs_avl: avl },
        };
        instrs.push(i);
    }
    instrs.truncate(n);
    Program::new(instrs)
}

/// Expands every vector access into the individual elements it touches and
/// maps each element to its register, then compares the resulting register
/// sets pairwise.
pub fn expanded_hazards(program: &Program, config: &VConfig) -> Vec<HazardEdge> {
    let mut xregs = [0i64; 32];
    let mut vew_bits = config.vew.bits() as u64;
    let regs_of = |head: VReg, elems: u64, ew: u64| -> BTreeSet<u32> {
        let per = config.vlen_bits as u64 / ew;
        (0..elems.min(per * config.num_vregs as u64)).map(|e| head.0 as u32 + (e / per) as u32).filter(|&r| r < config.num_vregs).collect()
    };
    let mut sets: Vec<(BTreeSet<u32>, BTreeSet<u32>)> = Vec::new();
    for instr in &program.instrs {
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        let ew = vew_bits;
        let to_end = |r: VReg| -> BTreeSet<u32> { (r.0 as u32..config.num_vregs).collect() };
        let avl = |r: XReg| xregs[r.0 as usize].max(0) as u64;
        use Instruction::*;
        match *instr {
            Li { rd, imm } => xregs[rd.0 as usize] = imm as i64,
            Alu { rd, rs1, rs2, .. } => xregs[rd.0 as usize] = xregs[rs1.0 as usize] + xregs[rs2.0 as usize],
            Slli { rd, rs1, shamt } => xregs[rd.0 as usize] = xregs[rs1.0 as usize] << shamt,
            VSetCsr { csr: 0, rs_value } => vew_bits = 8 << xregs[rs_value.0 as usize],
            VLoad { vd, rs_avl, .. } => writes = regs_of(vd, avl(rs_avl), ew),
            VStore { vs3, rs_avl, .. } => reads = regs_of(vs3, avl(rs_avl), ew),
            VArithVV { vd, vs1, vs2, rs_avl, .. } => {
                reads = &regs_of(vs1, avl(rs_avl), ew) | &regs_of(vs2, avl(rs_avl), ew);
                writes = regs_of(vd, avl(rs_avl), ew);
            }
            VArithVX { vd, vs2, rs_avl, .. } => {
                reads = regs_of(vs2, avl(rs_avl), ew);
                writes = regs_of(vd, avl(rs_avl), ew);
            }
            VRedSum { vd, vs2, rs_avl } => {
                let n = avl(rs_avl);
                reads = regs_of(vs2, n, ew);
                writes = regs_of(vd, n.min(1), ew);
            }
            VGather { vd, vs1, vs2, rs_avl } => {
                let n = avl(rs_avl);
                if n > 0 {
                    reads = &to_end(vs1) | &regs_of(vs2, n, ew);
                }
                writes = regs_of(vd, n, ew);
            }
            VScatter { vd, vs1, vs2, rs_avl } => {
                let n = avl(rs_avl);
                reads = &regs_of(vs1, n, ew) | &regs_of(vs2, n, ew);
                if n > 0 {
                    writes = to_end(vd);
                }
            }
            _ => {}
        }
        xregs[0] = 0;
        sets.push((reads, writes));
    }
    let mut edges = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (ri, wi) = &sets[i];
            let (rj, wj) = &sets[j];
            if !wi.is_disjoint(rj) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::Raw });
            }
            if !ri.is_disjoint(wj) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::War });
            }
            if !wi.is_disjoint(wj) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::Waw });
            }
        }
    }
    edges
}
