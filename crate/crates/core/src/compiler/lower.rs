use std::fmt::Write as _;

use crate::isa::{self, Instruction, Program, VConfig, VReg, XReg};

use super::ir::{IrModule, OpKind, ValueId};
use super::regalloc::Assignment;

/// Scratch register holding the element count.
pub const AVL_REG: XReg = XReg(5);
/// Scratch register holding a memory address.
pub const ADDR_REG: XReg = XReg(6);
/// Scratch register holding a vector-scalar operand.
pub const SCALAR_REG: XReg = XReg(7);
/// Scratch register holding the element-width selector.
pub const CSR_REG: XReg = XReg(8);

/// Where an emitted line came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTag {
    /// Loads a scratch register; regenerated after coalescing.
    Setup,
    Plain,
    /// Vector instruction belonging to delimiter group `group`, covering
    /// `elems` elements; memory operations carry their byte address.
    Split { group: u32, elems: u64, addr: Option<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsmLine {
    pub instr: Instruction,
    pub tag: LineTag,
}

/// Scalar registers whose contents are known constants.
#[derive(Debug, Clone)]
pub(crate) struct KnownRegs([Option<i64>; 32]);

impl KnownRegs {
    pub(crate) fn new() -> Self {
        let mut k = [None; 32];
        k[0] = Some(0);
        Self(k)
    }

    pub(crate) fn get(&self, r: XReg) -> Option<i64> {
        self.0[r.index()]
    }

    /// Emits `li r, value` unless `r` already holds it.
    pub(crate) fn ensure(&mut self, r: XReg, value: i64, out: &mut Vec<AsmLine>) {
        if self.get(r) != Some(value) {
            out.push(AsmLine { instr: Instruction::Li { rd: r, imm: value as i32 }, tag: LineTag::Setup });
            self.0[r.index()] = Some(value);
        }
    }

    pub(crate) fn observe(&mut self, instr: &Instruction) {
        if let Some(rd) = instr.scalar_dest() {
            if rd.0 != 0 {
                self.0[rd.index()] = match *instr {
                    Instruction::Li { imm, .. } => Some(imm as i64),
                    _ => None,
                };
            }
        }
    }
}

/// Translates an allocated split module into one Zoozve instruction per
/// operation, preceded by the element-width setup and any scratch-register
/// loads each instruction needs.
pub fn lower(m: &IrModule, a: &Assignment) -> Vec<AsmLine> {
    let bytes = m.vew.bytes() as u64;
    let mut out = Vec::new();
    let mut known = KnownRegs::new();
    known.ensure(CSR_REG, m.vew.selector() as i64, &mut out);
    out.push(AsmLine { instr: Instruction::VSetCsr { csr: 0, rs_value: CSR_REG }, tag: LineTag::Plain });

    let reg = |v: ValueId| VReg(a.reg(v) as u16);
    let mut group = 0;
    for op in &m.ops {
        let (instr, elems, addr) = match op.kind {
            OpKind::Delimiter { group: g, .. } => {
                group = g;
                continue;
            }
            OpKind::Load { buf, offset } | OpKind::Store { buf, offset } => {
                let is_load = matches!(op.kind, OpKind::Load { .. });
                let v = if is_load { op.results[0] } else { op.operands[0][0] };
                let n = m.value(v).len;
                let addr = m.buffer_ref(buf).addr + offset * bytes;
                known.ensure(ADDR_REG, addr as i64, &mut out);
                let instr = if is_load {
                    Instruction::VLoad { vd: reg(v), rs_addr: ADDR_REG, rs_avl: AVL_REG }
                } else {
                    Instruction::VStore { vs3: reg(v), rs_addr: ADDR_REG, rs_avl: AVL_REG }
                };
                (instr, n, Some(addr))
            }
            OpKind::Binary(vop) => {
                let instr = Instruction::VArithVV {
                    op: vop,
                    vd: reg(op.results[0]),
                    vs1: reg(op.operands[0][0]),
                    vs2: reg(op.operands[1][0]),
                    rs_avl: AVL_REG,
                };
                (instr, m.value(op.results[0]).len, None)
            }
            OpKind::BinaryImm(vop, imm) => {
                known.ensure(SCALAR_REG, imm as i64, &mut out);
                let instr = Instruction::VArithVX {
                    op: vop,
                    vd: reg(op.results[0]),
                    vs2: reg(op.operands[0][0]),
                    rs2: SCALAR_REG,
                    rs_avl: AVL_REG,
                };
                (instr, m.value(op.results[0]).len, None)
            }
            OpKind::RedSum => {
                let instr =
                    Instruction::VRedSum { vd: reg(op.results[0]), vs2: reg(op.operands[0][0]), rs_avl: AVL_REG };
                (instr, m.operand_len(&op.operands[0]), None)
            }
            OpKind::Gather | OpKind::Scatter => {
                let (vd, vs1, vs2) = (reg(op.results[0]), reg(op.operands[0][0]), reg(op.operands[1][0]));
                if op.kind == OpKind::Gather {
                    (Instruction::VGather { vd, vs1, vs2, rs_avl: AVL_REG }, m.operand_len(&op.operands[1]), None)
                } else {
                    (Instruction::VScatter { vd, vs1, vs2, rs_avl: AVL_REG }, m.operand_len(&op.operands[0]), None)
                }
            }
        };
        known.ensure(AVL_REG, elems as i64, &mut out);
        out.push(AsmLine { instr, tag: LineTag::Split { group, elems, addr } });
    }
    out
}

pub fn lines_to_program(lines: &[AsmLine]) -> Program {
    Program::new(lines.iter().map(|l| l.instr).collect())
}

/// Assembly text for a line sequence. Group lines carry a trailing comment
/// with their group and element count.
pub fn format_lines(lines: &[AsmLine]) -> String {
    let mut s = String::new();
    for l in lines {
        let text = isa::format_instruction(&l.instr, &|t| format!(".L{t}"));
        match l.tag {
            LineTag::Split { group, elems, .. } => {
                let _ = writeln!(s, "    {text:<36}# group {group}, {elems} elements");
            }
            _ => {
                let _ = writeln!(s, "    {text}");
            }
        }
    }
    s
}

/// Placement check used before lowering: every value fits the machine.
pub(crate) fn check_assignment(a: &Assignment, config: &VConfig) -> Result<(), String> {
    match a.vregs.values().max() {
        Some(&r) if r >= config.num_vregs.min(isa::HEAD_FIELD_REGS) => {
            Err(format!("register v{r} is beyond the {}-register file", config.num_vregs))
        }
        _ => Ok(()),
    }
}
