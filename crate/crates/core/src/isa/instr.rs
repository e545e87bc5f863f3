use std::fmt;

use serde::Serialize;

use super::config::{Lmul, Vew};

/// Scalar register `x0..x31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XReg(pub u8);

impl XReg {
    pub const ZERO: XReg = XReg(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for XReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Vector register index. Zoozve heads span 13 bits, RVV registers 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VReg(pub u16);

impl VReg {
    pub fn index(self) -> u32 {
        self.0 as u32
    }
}

impl fmt::Display for VReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Element-wise vector operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Sra,
    Sll,
}

impl VOp {
    pub const ALL: [VOp; 8] = [VOp::Add, VOp::Sub, VOp::Mul, VOp::And, VOp::Or, VOp::Xor, VOp::Sra, VOp::Sll];

    pub fn name(self) -> &'static str {
        match self {
            VOp::Add => "add",
            VOp::Sub => "sub",
            VOp::Mul => "mul",
            VOp::And => "and",
            VOp::Or => "or",
            VOp::Xor => "xor",
            VOp::Sra => "sra",
            VOp::Sll => "sll",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Applies the operation to two sign-extended elements and returns the
    /// result truncated to `vew`. Shifts use the low log2(vew) bits of `b`.
    pub fn apply(self, vew: Vew, a: i64, b: i64) -> u64 {
        let shamt = (b as u64 & (vew.bits() as u64 - 1)) as u32;
        let r = match self {
            VOp::Add => a.wrapping_add(b),
            VOp::Sub => a.wrapping_sub(b),
            VOp::Mul => a.wrapping_mul(b),
            VOp::And => a & b,
            VOp::Or => a | b,
            VOp::Xor => a ^ b,
            VOp::Sra => a >> shamt,
            VOp::Sll => a << shamt,
        };
        r as u64 & vew.mask()
    }
}

/// Scalar register-register operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarOp {
    Add,
    Sub,
    Mul,
}

impl ScalarOp {
    pub const ALL: [ScalarOp; 3] = [ScalarOp::Add, ScalarOp::Sub, ScalarOp::Mul];

    pub fn name(self) -> &'static str {
        match self {
            ScalarOp::Add => "add",
            ScalarOp::Sub => "sub",
            ScalarOp::Mul => "mul",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchCond {
    Ne,
    Ge,
}

impl BranchCond {
    pub fn name(self) -> &'static str {
        match self {
            BranchCond::Ne => "bne",
            BranchCond::Ge => "bge",
        }
    }
}

/// Dynamic instruction class used by the trace statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstrClass {
    VectorMem,
    VectorArith,
    VectorControl,
    Scalar,
}

impl InstrClass {
    pub const ALL: [InstrClass; 4] =
        [InstrClass::VectorMem, InstrClass::VectorArith, InstrClass::VectorControl, InstrClass::Scalar];

    pub fn name(self) -> &'static str {
        match self {
            InstrClass::VectorMem => "vector-mem",
            InstrClass::VectorArith => "vector-arith",
            InstrClass::VectorControl => "vector-control",
            InstrClass::Scalar => "scalar",
        }
    }
}

/// One machine instruction: Zoozve vector ops, the scalar subset, and the
/// RVV baseline subset. Branch and jump targets are absolute instruction
/// indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    // Zoozve
    VLoad { vd: VReg, rs_addr: XReg, rs_avl: XReg },
    VStore { vs3: VReg, rs_addr: XReg, rs_avl: XReg },
    VArithVV { op: VOp, vd: VReg, vs1: VReg, vs2: VReg, rs_avl: XReg },
    VArithVX { op: VOp, vd: VReg, vs2: VReg, rs2: XReg, rs_avl: XReg },
    VRedSum { vd: VReg, vs2: VReg, rs_avl: XReg },
    VGather { vd: VReg, vs1: VReg, vs2: VReg, rs_avl: XReg },
    VScatter { vd: VReg, vs1: VReg, vs2: VReg, rs_avl: XReg },
    VSetCsr { csr: u8, rs_value: XReg },

    // Scalar subset
    Li { rd: XReg, imm: i32 },
    Alu { op: ScalarOp, rd: XReg, rs1: XReg, rs2: XReg },
    Slli { rd: XReg, rs1: XReg, shamt: u8 },
    Branch { cond: BranchCond, rs1: XReg, rs2: XReg, target: u32 },
    Jal { rd: XReg, target: u32 },
    Lw { rd: XReg, rs1: XReg, offset: i32 },
    Sw { rs2: XReg, rs1: XReg, offset: i32 },

    // RVV baseline subset
    VSetVli { rd: XReg, rs_avl: XReg, vew: Vew, lmul: Lmul },
    RvvLoad { vd: VReg, rs_addr: XReg },
    RvvStore { vs3: VReg, rs_addr: XReg },
    RvvArithVV { op: VOp, vd: VReg, vs1: VReg, vs2: VReg },
    RvvArithVX { op: VOp, vd: VReg, vs2: VReg, rs2: XReg },
    /// `vd[0] = vs1[0] + sum(vs2[0..vl])`
    RvvRedSum { vd: VReg, vs2: VReg, vs1: VReg },
    /// `vd[i] = vs1[i] < vlmax ? vs2[vs1[i]] : 0` for `i < vl`
    VRGatherVV { vd: VReg, vs2: VReg, vs1: VReg },
}

impl Instruction {
    pub fn class(&self) -> InstrClass {
        use Instruction::*;
        match self {
            VLoad { .. } | VStore { .. } | RvvLoad { .. } | RvvStore { .. } => InstrClass::VectorMem,
            VArithVV { .. }
            | VArithVX { .. }
            | VRedSum { .. }
            | VGather { .. }
            | VScatter { .. }
            | RvvArithVV { .. }
            | RvvArithVX { .. }
            | RvvRedSum { .. }
            | VRGatherVV { .. } => InstrClass::VectorArith,
            VSetCsr { .. } | VSetVli { .. } => InstrClass::VectorControl,
            Li { .. } | Alu { .. } | Slli { .. } | Branch { .. } | Jal { .. } | Lw { .. } | Sw { .. } => {
                InstrClass::Scalar
            }
        }
    }

    pub fn is_zoozve_vector(&self) -> bool {
        use Instruction::*;
        matches!(
            self,
            VLoad { .. }
                | VStore { .. }
                | VArithVV { .. }
                | VArithVX { .. }
                | VRedSum { .. }
                | VGather { .. }
                | VScatter { .. }
                | VSetCsr { .. }
        )
    }

    pub fn is_rvv(&self) -> bool {
        use Instruction::*;
        matches!(
            self,
            VSetVli { .. }
                | RvvLoad { .. }
                | RvvStore { .. }
                | RvvArithVV { .. }
                | RvvArithVX { .. }
                | RvvRedSum { .. }
                | VRGatherVV { .. }
        )
    }

    pub fn is_scalar(&self) -> bool {
        self.class() == InstrClass::Scalar
    }

    pub fn branch_target(&self) -> Option<u32> {
        match self {
            Instruction::Branch { target, .. } | Instruction::Jal { target, .. } => Some(*target),
            _ => None,
        }
    }

    pub fn with_branch_target(self, new_target: u32) -> Self {
        match self {
            Instruction::Branch { cond, rs1, rs2, .. } => Instruction::Branch { cond, rs1, rs2, target: new_target },
            Instruction::Jal { rd, .. } => Instruction::Jal { rd, target: new_target },
            other => other,
        }
    }

    /// Scalar register written by this instruction, if any.
    pub fn scalar_dest(&self) -> Option<XReg> {
        use Instruction::*;
        match *self {
            Li { rd, .. } | Alu { rd, .. } | Slli { rd, .. } | Jal { rd, .. } | Lw { rd, .. } | VSetVli { rd, .. } => {
                Some(rd)
            }
            _ => None,
        }
    }

    /// Vector register fields in operand order, used by the coalescer to
    /// test register consecutiveness.
    pub fn vector_fields(&self) -> Vec<VReg> {
        use Instruction::*;
        match *self {
            VLoad { vd, .. } => vec![vd],
            VStore { vs3, .. } => vec![vs3],
            VArithVV { vd, vs1, vs2, .. } => vec![vd, vs1, vs2],
            VArithVX { vd, vs2, .. } => vec![vd, vs2],
            VRedSum { vd, vs2, .. } => vec![vd, vs2],
            VGather { vd, vs1, vs2, .. } | VScatter { vd, vs1, vs2, .. } => vec![vd, vs1, vs2],
            RvvLoad { vd, .. } => vec![vd],
            RvvStore { vs3, .. } => vec![vs3],
            RvvArithVV { vd, vs1, vs2, .. } => vec![vd, vs1, vs2],
            RvvArithVX { vd, vs2, .. } => vec![vd, vs2],
            RvvRedSum { vd, vs2, vs1 } | VRGatherVV { vd, vs2, vs1 } => vec![vd, vs2, vs1],
            _ => Vec::new(),
        }
    }

    /// Rewrites every vector register field by adding `delta`.
    pub fn shift_vector_fields(self, delta: i32) -> Self {
        use Instruction::*;
        let s = |r: VReg| VReg((r.0 as i32 + delta) as u16);
        match self {
            VLoad { vd, rs_addr, rs_avl } => VLoad { vd: s(vd), rs_addr, rs_avl },
            VStore { vs3, rs_addr, rs_avl } => VStore { vs3: s(vs3), rs_addr, rs_avl },
            VArithVV { op, vd, vs1, vs2, rs_avl } => VArithVV { op, vd: s(vd), vs1: s(vs1), vs2: s(vs2), rs_avl },
            VArithVX { op, vd, vs2, rs2, rs_avl } => VArithVX { op, vd: s(vd), vs2: s(vs2), rs2, rs_avl },
            VRedSum { vd, vs2, rs_avl } => VRedSum { vd: s(vd), vs2: s(vs2), rs_avl },
            VGather { vd, vs1, vs2, rs_avl } => VGather { vd: s(vd), vs1: s(vs1), vs2: s(vs2), rs_avl },
            VScatter { vd, vs1, vs2, rs_avl } => VScatter { vd: s(vd), vs1: s(vs1), vs2: s(vs2), rs_avl },
            other => other,
        }
    }

    /// Scalar registers read by a Zoozve vector instruction other than its
    /// avl register.
    pub fn zoozve_scalar_operands(&self) -> Vec<XReg> {
        use Instruction::*;
        match *self {
            VLoad { rs_addr, .. } | VStore { rs_addr, .. } => vec![rs_addr],
            VArithVX { rs2, .. } => vec![rs2],
            VSetCsr { rs_value, .. } => vec![rs_value],
            _ => Vec::new(),
        }
    }

    pub fn zoozve_avl(&self) -> Option<XReg> {
        use Instruction::*;
        match *self {
            VLoad { rs_avl, .. }
            | VStore { rs_avl, .. }
            | VArithVV { rs_avl, .. }
            | VArithVX { rs_avl, .. }
            | VRedSum { rs_avl, .. }
            | VGather { rs_avl, .. }
            | VScatter { rs_avl, .. } => Some(rs_avl),
            _ => None,
        }
    }

    /// Returns a copy with the avl register replaced (Zoozve vector ops only).
    pub fn with_avl(self, reg: XReg) -> Self {
        use Instruction::*;
        match self {
            VLoad { vd, rs_addr, .. } => VLoad { vd, rs_addr, rs_avl: reg },
            VStore { vs3, rs_addr, .. } => VStore { vs3, rs_addr, rs_avl: reg },
            VArithVV { op, vd, vs1, vs2, .. } => VArithVV { op, vd, vs1, vs2, rs_avl: reg },
            VArithVX { op, vd, vs2, rs2, .. } => VArithVX { op, vd, vs2, rs2, rs_avl: reg },
            VRedSum { vd, vs2, .. } => VRedSum { vd, vs2, rs_avl: reg },
            VGather { vd, vs1, vs2, .. } => VGather { vd, vs1, vs2, rs_avl: reg },
            VScatter { vd, vs1, vs2, .. } => VScatter { vd, vs1, vs2, rs_avl: reg },
            other => other,
        }
    }

    /// Discriminant plus operation, ignoring register operands.
    pub fn opcode_key(&self) -> (u8, Option<VOp>) {
        use Instruction::*;
        let tag = match self {
            VLoad { .. } => 0,
            VStore { .. } => 1,
            VArithVV { .. } => 2,
            VArithVX { .. } => 3,
            VRedSum { .. } => 4,
            VGather { .. } => 5,
            VScatter { .. } => 6,
            VSetCsr { .. } => 7,
            Li { .. } => 8,
            Alu { .. } => 9,
            Slli { .. } => 10,
            Branch { .. } => 11,
            Jal { .. } => 12,
            Lw { .. } => 13,
            Sw { .. } => 14,
            VSetVli { .. } => 15,
            RvvLoad { .. } => 16,
            RvvStore { .. } => 17,
            RvvArithVV { .. } => 18,
            RvvArithVX { .. } => 19,
            RvvRedSum { .. } => 20,
            VRGatherVV { .. } => 21,
        };
        let op = match *self {
            VArithVV { op, .. } | VArithVX { op, .. } | RvvArithVV { op, .. } | RvvArithVX { op, .. } => Some(op),
            _ => None,
        };
        (tag, op)
    }
}
