use crate::isa::{Instruction, VConfig, Vew, XReg};

use super::lower::{AsmLine, KnownRegs, LineTag};

/// A non-setup instruction together with the scalar values it reads.
#[derive(Debug, Clone)]
struct Bundle {
    instr: Instruction,
    tag: LineTag,
    reqs: Vec<(XReg, i64)>,
    vew: Vew,
}

fn scalar_reads(instr: &Instruction) -> Vec<XReg> {
    use Instruction::*;
    match *instr {
        Alu { rs1, rs2, .. } | Branch { rs1, rs2, .. } | Sw { rs1, rs2, .. } => vec![rs1, rs2],
        Slli { rs1, .. } | Lw { rs1, .. } => vec![rs1],
        VSetVli { rs_avl, .. } => vec![rs_avl],
        RvvLoad { rs_addr, .. } | RvvStore { rs_addr, .. } => vec![rs_addr],
        RvvArithVX { rs2, .. } => vec![rs2],
        _ => {
            let mut regs = instr.zoozve_scalar_operands();
            regs.extend(instr.zoozve_avl());
            regs
        }
    }
}

fn mem_addr_reg(instr: &Instruction) -> Option<XReg> {
    match *instr {
        Instruction::VLoad { rs_addr, .. } | Instruction::VStore { rs_addr, .. } => Some(rs_addr),
        _ => None,
    }
}

fn is_elementwise(instr: &Instruction) -> bool {
    matches!(
        instr,
        Instruction::VLoad { .. } | Instruction::VStore { .. } | Instruction::VArithVV { .. } | Instruction::VArithVX { .. }
    )
}

/// Whether `next` continues the run ending in `last`: same group and
/// operation, every vector register one higher, `last` filling its whole
/// register, equal scalar operands, and contiguous memory.
fn extends(last: &Bundle, next: &Bundle, config: &VConfig) -> bool {
    let (
        LineTag::Split { group: g1, elems: e1, addr: a1 },
        LineTag::Split { group: g2, addr: a2, .. },
    ) = (last.tag, next.tag)
    else {
        return false;
    };
    if g1 != g2 || last.vew != next.vew || !is_elementwise(&last.instr) {
        return false;
    }
    if last.instr.opcode_key() != next.instr.opcode_key() {
        return false;
    }
    if e1 != (config.vlen_bits / last.vew.bits()) as u64 {
        return false;
    }
    let (f1, f2) = (last.instr.vector_fields(), next.instr.vector_fields());
    if f1.len() != f2.len() || f1.iter().zip(&f2).any(|(a, b)| a.0 as u32 + 1 != b.0 as u32) {
        return false;
    }
    let avl = last.instr.zoozve_avl();
    let addr = mem_addr_reg(&last.instr);
    if avl.is_some() && avl == addr {
        return false;
    }
    if last.reqs.len() != next.reqs.len() {
        return false;
    }
    for (&(r1, v1), &(r2, v2)) in last.reqs.iter().zip(&next.reqs) {
        if r1 != r2 {
            return false;
        }
        if Some(r1) == avl {
            continue;
        }
        if Some(r1) == addr {
            if a1.map(|a| a + e1 * last.vew.bytes() as u64) != a2 || a2 != Some(v2 as u64) {
                return false;
            }
            continue;
        }
        if v1 != v2 {
            return false;
        }
    }
    true
}

/// Merges runs of per-register instructions back into single wide
/// instructions and regenerates the scratch-register setup.
pub fn coalesce(lines: &[AsmLine], config: &VConfig) -> Vec<AsmLine> {
    let mut known = KnownRegs::new();
    let mut vew = config.vew;
    let mut bundles: Vec<Bundle> = Vec::new();
    for line in lines {
        if line.tag != LineTag::Setup {
            let reqs = scalar_reads(&line.instr)
                .into_iter()
                .filter(|r| r.0 != 0)
                .filter_map(|r| known.get(r).map(|v| (r, v)))
                .collect();
            bundles.push(Bundle { instr: line.instr, tag: line.tag, reqs, vew });
            if let Instruction::VSetCsr { csr: 0, rs_value } = line.instr {
                if let Some(sel) = known.get(rs_value).and_then(|v| Vew::from_selector(v as u64)) {
                    vew = sel;
                }
            }
        }
        known.observe(&line.instr);
    }

    let mut merged: Vec<Bundle> = Vec::new();
    let mut last: Option<Bundle> = None;
    for b in bundles {
        if let (Some(head), Some(prev)) = (merged.last_mut(), last.as_ref()) {
            if extends(prev, &b, config) {
                let LineTag::Split { group, elems, addr } = head.tag else { unreachable!() };
                let LineTag::Split { elems: more, .. } = b.tag else { unreachable!() };
                let total = elems + more;
                head.tag = LineTag::Split { group, elems: total, addr };
                let avl = head.instr.zoozve_avl();
                for req in head.reqs.iter_mut() {
                    if Some(req.0) == avl {
                        req.1 = total as i64;
                    }
                }
                last = Some(b);
                continue;
            }
        }
        last = Some(b.clone());
        merged.push(b);
    }

    let mut out = Vec::new();
    let mut known = KnownRegs::new();
    for b in merged {
        for &(r, v) in &b.reqs {
            known.ensure(r, v, &mut out);
        }
        known.observe(&b.instr);
        out.push(AsmLine { instr: b.instr, tag: b.tag });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{VOp, VReg};

    const X5: XReg = XReg(5);

    fn li(r: u8, v: i32) -> AsmLine {
        AsmLine { instr: Instruction::Li { rd: XReg(r), imm: v }, tag: LineTag::Setup }
    }

    fn add(vd: u16, vs1: u16, vs2: u16, group: u32) -> AsmLine {
        AsmLine {
            instr: Instruction::VArithVV { op: VOp::Add, vd: VReg(vd), vs1: VReg(vs1), vs2: VReg(vs2), rs_avl: X5 },
            tag: LineTag::Split { group, elems: 32, addr: None },
        }
    }

    #[test]
    fn consecutive_pair_merges() {
        let out = coalesce(&[li(5, 32), add(0, 4, 8, 1), add(1, 5, 9, 1)], &VConfig::default());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].instr, Instruction::Li { rd: X5, imm: 64 });
        assert_eq!(out[1].instr, add(0, 4, 8, 1).instr);
    }

    #[test]
    fn non_consecutive_destination_kept() {
        let lines = [li(5, 32), add(0, 4, 8, 1), add(2, 5, 9, 1)];
        let out = coalesce(&lines, &VConfig::default());
        assert_eq!(out, lines.to_vec());
    }

    #[test]
    fn different_groups_kept_apart() {
        let lines = [li(5, 32), add(0, 4, 8, 1), add(1, 5, 9, 2)];
        assert_eq!(coalesce(&lines, &VConfig::default()).len(), 3);
    }

    #[test]
    fn partial_member_ends_run() {
        let mut short = add(0, 4, 8, 1);
        short.tag = LineTag::Split { group: 1, elems: 5, addr: None };
        let lines = [li(5, 5), short, li(5, 32), add(1, 5, 9, 1)];
        assert_eq!(coalesce(&lines, &VConfig::default()).len(), 4);
    }
}
