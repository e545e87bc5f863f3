//! Flat 64-bit instruction encoding.
//!
//! Every word starts with a 7-bit major opcode in bits `[0, 7)` and a 6-bit
//! function code in bits `[7, 13)`. The remaining bits follow one of three
//! formats chosen by the opcode:
//!
//! | format | bits `[13,26)` | `[26,39)` | `[39,52)` | `[52,57)` | `[57,62)` | `[62,64)` |
//! |--------|----------------|-----------|-----------|-----------|-----------|-----------|
//! | V      | vd / vs3 / csr | vs1       | vs2       | rs_a      | rs_b      | zero      |
//!
//! | format | `[13,18)` | `[18,23)` | `[23,28)` | `[28,32)` | `[32,64)`        |
//! |--------|-----------|-----------|-----------|-----------|------------------|
//! | S      | rd        | rs1       | rs2       | zero      | imm (i32)        |
//!
//! | format | `[13,18)` | `[18,23)` | `[23,28)` | `[28,33)` | `[33,38)` | `[38,40)` | `[40,42)` | `[42,64)` |
//! |--------|-----------|-----------|-----------|-----------|-----------|-----------|-----------|-----------|
//! | R      | vd / vs3  | vs1       | vs2       | rs1       | rd / rs2  | vew code  | lmul code | zero      |
//!
//! Unused fields must be zero; `decode` rejects any word that `encode`
//! could not have produced.

use super::config::{Lmul, Vew};
use super::instr::{BranchCond, Instruction, ScalarOp, VOp, VReg, XReg};
use super::IsaError;

pub const OPC_CUSTOM0: u32 = 0x0B;
pub const OPC_CUSTOM1: u32 = 0x2B;
pub const OPC_CUSTOM2: u32 = 0x5B;
pub const OPC_LUI: u32 = 0x37;
pub const OPC_OP: u32 = 0x33;
pub const OPC_OP_IMM: u32 = 0x13;
pub const OPC_BRANCH: u32 = 0x63;
pub const OPC_JAL: u32 = 0x6F;
pub const OPC_LOAD: u32 = 0x03;
pub const OPC_STORE: u32 = 0x23;
pub const OPC_OP_V: u32 = 0x57;
pub const OPC_LOAD_FP: u32 = 0x07;
pub const OPC_STORE_FP: u32 = 0x27;

pub const FUNCT_VX_BASE: u32 = 8;
pub const FUNCT_REDSUM: u32 = 16;
pub const FUNCT_GATHER: u32 = 17;
pub const FUNCT_SCATTER: u32 = 18;
pub const FUNCT_VSETVLI: u32 = 63;

const HEAD_MAX: u16 = (1 << 13) - 1;

#[derive(Clone, Copy)]
struct Field {
    lo: u32,
    width: u32,
}

const fn field(lo: u32, width: u32) -> Field {
    Field { lo, width }
}

const OPCODE: Field = field(0, 7);
const FUNCT: Field = field(7, 6);

const V_D: Field = field(13, 13);
const V_S1: Field = field(26, 13);
const V_S2: Field = field(39, 13);
const V_RA: Field = field(52, 5);
const V_RB: Field = field(57, 5);

const S_RD: Field = field(13, 5);
const S_RS1: Field = field(18, 5);
const S_RS2: Field = field(23, 5);
const S_IMM: Field = field(32, 32);

const R_D: Field = field(13, 5);
const R_S1: Field = field(18, 5);
const R_S2: Field = field(23, 5);
const R_X1: Field = field(28, 5);
const R_X2: Field = field(33, 5);
const R_VEW: Field = field(38, 2);
const R_LMUL: Field = field(40, 2);

const V_FIELDS: &[Field] = &[OPCODE, FUNCT, V_D, V_S1, V_S2, V_RA, V_RB];
const S_FIELDS: &[Field] = &[OPCODE, FUNCT, S_RD, S_RS1, S_RS2, S_IMM];
const R_FIELDS: &[Field] = &[OPCODE, FUNCT, R_D, R_S1, R_S2, R_X1, R_X2, R_VEW, R_LMUL];

impl Field {
    fn mask(self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            ((1u64 << self.width) - 1) << self.lo
        }
    }

    fn get(self, word: u64) -> u64 {
        (word & self.mask()) >> self.lo
    }
}

struct Word(u64);

impl Word {
    fn new(opcode: u32, funct: u32) -> Self {
        let mut w = Word(0);
        w.set(OPCODE, opcode as u64);
        w.set(FUNCT, funct as u64);
        w
    }

    fn set(&mut self, f: Field, value: u64) {
        self.0 |= (value << f.lo) & f.mask();
    }
}

fn head(r: VReg) -> Result<u64, IsaError> {
    if r.0 > HEAD_MAX {
        return Err(IsaError::Encode(format!("vector head {r} exceeds the 13-bit field")));
    }
    Ok(r.0 as u64)
}

fn rvv_reg(r: VReg) -> Result<u64, IsaError> {
    if r.0 >= 32 {
        return Err(IsaError::Encode(format!("rvv register {r} exceeds the 5-bit field")));
    }
    Ok(r.0 as u64)
}

fn xreg(r: XReg) -> Result<u64, IsaError> {
    if r.0 >= 32 {
        return Err(IsaError::Encode(format!("scalar register {r} out of range")));
    }
    Ok(r.0 as u64)
}

fn imm(v: i32) -> u64 {
    v as u32 as u64
}

fn target(t: u32) -> Result<u64, IsaError> {
    if t > i32::MAX as u32 {
        return Err(IsaError::Encode(format!("branch target {t} out of range")));
    }
    Ok(t as u64)
}

fn v_word(funct: u32, opcode: u32, d: u64, s1: u64, s2: u64, ra: u64, rb: u64) -> u64 {
    let mut w = Word::new(opcode, funct);
    w.set(V_D, d);
    w.set(V_S1, s1);
    w.set(V_S2, s2);
    w.set(V_RA, ra);
    w.set(V_RB, rb);
    w.0
}

fn s_word(opcode: u32, funct: u32, rd: u64, rs1: u64, rs2: u64, immediate: u64) -> u64 {
    let mut w = Word::new(opcode, funct);
    w.set(S_RD, rd);
    w.set(S_RS1, rs1);
    w.set(S_RS2, rs2);
    w.set(S_IMM, immediate);
    w.0
}

struct RFields {
    d: u64,
    s1: u64,
    s2: u64,
    x1: u64,
    x2: u64,
    vew: u64,
    lmul: u64,
}

const R_ZERO: RFields = RFields { d: 0, s1: 0, s2: 0, x1: 0, x2: 0, vew: 0, lmul: 0 };

fn r_word(opcode: u32, funct: u32, f: RFields) -> u64 {
    let mut w = Word::new(opcode, funct);
    w.set(R_D, f.d);
    w.set(R_S1, f.s1);
    w.set(R_S2, f.s2);
    w.set(R_X1, f.x1);
    w.set(R_X2, f.x2);
    w.set(R_VEW, f.vew);
    w.set(R_LMUL, f.lmul);
    w.0
}

fn vew_code(v: Vew) -> u64 {
    v.selector()
}

/// Encodes one instruction into its 64-bit word.
pub fn encode(instr: &Instruction) -> Result<u64, IsaError> {
    use Instruction::*;
    Ok(match *instr {
        VLoad { vd, rs_addr, rs_avl } => v_word(0, OPC_CUSTOM0, head(vd)?, 0, 0, xreg(rs_addr)?, xreg(rs_avl)?),
        VStore { vs3, rs_addr, rs_avl } => v_word(1, OPC_CUSTOM0, head(vs3)?, 0, 0, xreg(rs_addr)?, xreg(rs_avl)?),
        VArithVV { op, vd, vs1, vs2, rs_avl } => {
            v_word(op.code(), OPC_CUSTOM1, head(vd)?, head(vs1)?, head(vs2)?, 0, xreg(rs_avl)?)
        }
        VArithVX { op, vd, vs2, rs2, rs_avl } => v_word(
            FUNCT_VX_BASE + op.code(),
            OPC_CUSTOM1,
            head(vd)?,
            0,
            head(vs2)?,
            xreg(rs2)?,
            xreg(rs_avl)?,
        ),
        VRedSum { vd, vs2, rs_avl } => v_word(FUNCT_REDSUM, OPC_CUSTOM1, head(vd)?, 0, head(vs2)?, 0, xreg(rs_avl)?),
        VGather { vd, vs1, vs2, rs_avl } => {
            v_word(FUNCT_GATHER, OPC_CUSTOM1, head(vd)?, head(vs1)?, head(vs2)?, 0, xreg(rs_avl)?)
        }
        VScatter { vd, vs1, vs2, rs_avl } => {
            v_word(FUNCT_SCATTER, OPC_CUSTOM1, head(vd)?, head(vs1)?, head(vs2)?, 0, xreg(rs_avl)?)
        }
        VSetCsr { csr, rs_value } => {
            if csr > 1 {
                return Err(IsaError::Encode(format!("csr {csr} is not defined")));
            }
            v_word(0, OPC_CUSTOM2, csr as u64, 0, 0, xreg(rs_value)?, 0)
        }
        Li { rd, imm: v } => s_word(OPC_LUI, 0, xreg(rd)?, 0, 0, imm(v)),
        Alu { op, rd, rs1, rs2 } => {
            let funct = match op {
                ScalarOp::Add => 0,
                ScalarOp::Sub => 1,
                ScalarOp::Mul => 2,
            };
            s_word(OPC_OP, funct, xreg(rd)?, xreg(rs1)?, xreg(rs2)?, 0)
        }
        Slli { rd, rs1, shamt } => {
            if shamt > 63 {
                return Err(IsaError::Encode(format!("shift amount {shamt} exceeds 63")));
            }
            s_word(OPC_OP_IMM, 1, xreg(rd)?, xreg(rs1)?, 0, shamt as u64)
        }
        Branch { cond, rs1, rs2, target: t } => {
            let funct = match cond {
                BranchCond::Ne => 1,
                BranchCond::Ge => 5,
            };
            s_word(OPC_BRANCH, funct, 0, xreg(rs1)?, xreg(rs2)?, target(t)?)
        }
        Jal { rd, target: t } => s_word(OPC_JAL, 0, xreg(rd)?, 0, 0, target(t)?),
        Lw { rd, rs1, offset } => s_word(OPC_LOAD, 2, xreg(rd)?, xreg(rs1)?, 0, imm(offset)),
        Sw { rs2, rs1, offset } => s_word(OPC_STORE, 2, 0, xreg(rs1)?, xreg(rs2)?, imm(offset)),
        VSetVli { rd, rs_avl, vew, lmul } => r_word(
            OPC_OP_V,
            FUNCT_VSETVLI,
            RFields { x1: xreg(rs_avl)?, x2: xreg(rd)?, vew: vew_code(vew), lmul: lmul.log2() as u64, ..R_ZERO },
        ),
        RvvLoad { vd, rs_addr } => {
            r_word(OPC_LOAD_FP, 0, RFields { d: rvv_reg(vd)?, x1: xreg(rs_addr)?, ..R_ZERO })
        }
        RvvStore { vs3, rs_addr } => {
            r_word(OPC_STORE_FP, 0, RFields { d: rvv_reg(vs3)?, x1: xreg(rs_addr)?, ..R_ZERO })
        }
        RvvArithVV { op, vd, vs1, vs2 } => r_word(
            OPC_OP_V,
            op.code(),
            RFields { d: rvv_reg(vd)?, s1: rvv_reg(vs1)?, s2: rvv_reg(vs2)?, ..R_ZERO },
        ),
        RvvArithVX { op, vd, vs2, rs2 } => r_word(
            OPC_OP_V,
            FUNCT_VX_BASE + op.code(),
            RFields { d: rvv_reg(vd)?, s2: rvv_reg(vs2)?, x2: xreg(rs2)?, ..R_ZERO },
        ),
        RvvRedSum { vd, vs2, vs1 } => r_word(
            OPC_OP_V,
            FUNCT_REDSUM,
            RFields { d: rvv_reg(vd)?, s1: rvv_reg(vs1)?, s2: rvv_reg(vs2)?, ..R_ZERO },
        ),
        VRGatherVV { vd, vs2, vs1 } => r_word(
            OPC_OP_V,
            FUNCT_GATHER,
            RFields { d: rvv_reg(vd)?, s1: rvv_reg(vs1)?, s2: rvv_reg(vs2)?, ..R_ZERO },
        ),
    })
}

fn reserved_clear(word: u64, used: &[Field]) -> bool {
    let mask = used.iter().fold(0u64, |m, f| m | f.mask());
    word & !mask == 0
}

fn x(f: Field, word: u64) -> XReg {
    XReg(f.get(word) as u8)
}

fn v(f: Field, word: u64) -> VReg {
    VReg(f.get(word) as u16)
}

/// Decodes one 64-bit word. Words outside the image of [`encode`] are
/// rejected with the raw word attached.
pub fn decode(word: u64) -> Result<Instruction, IsaError> {
    use Instruction::*;
    let bad = || IsaError::Decode { word };
    let opcode = OPCODE.get(word) as u32;
    let funct = FUNCT.get(word) as u32;

    // Each arm decodes optimistically; the final re-encode check below
    // rejects any word carrying bits outside the decoded fields.
    let instr = match opcode {
        OPC_CUSTOM0 | OPC_CUSTOM1 | OPC_CUSTOM2 => {
            if !reserved_clear(word, V_FIELDS) {
                return Err(bad());
            }
            let (d, s1, s2, ra, rb) = (v(V_D, word), v(V_S1, word), v(V_S2, word), x(V_RA, word), x(V_RB, word));
            match (opcode, funct) {
                (OPC_CUSTOM0, 0) => VLoad { vd: d, rs_addr: ra, rs_avl: rb },
                (OPC_CUSTOM0, 1) => VStore { vs3: d, rs_addr: ra, rs_avl: rb },
                (OPC_CUSTOM1, f) if f < FUNCT_VX_BASE => {
                    VArithVV { op: VOp::from_code(f).ok_or_else(bad)?, vd: d, vs1: s1, vs2: s2, rs_avl: rb }
                }
                (OPC_CUSTOM1, f) if f < FUNCT_REDSUM => VArithVX {
                    op: VOp::from_code(f - FUNCT_VX_BASE).ok_or_else(bad)?,
                    vd: d,
                    vs2: s2,
                    rs2: ra,
                    rs_avl: rb,
                },
                (OPC_CUSTOM1, FUNCT_REDSUM) => VRedSum { vd: d, vs2: s2, rs_avl: rb },
                (OPC_CUSTOM1, FUNCT_GATHER) => VGather { vd: d, vs1: s1, vs2: s2, rs_avl: rb },
                (OPC_CUSTOM1, FUNCT_SCATTER) => VScatter { vd: d, vs1: s1, vs2: s2, rs_avl: rb },
                (OPC_CUSTOM2, 0) => VSetCsr { csr: d.0 as u8, rs_value: ra },
                _ => return Err(bad()),
            }
        }
        OPC_LUI | OPC_OP | OPC_OP_IMM | OPC_BRANCH | OPC_JAL | OPC_LOAD | OPC_STORE => {
            if !reserved_clear(word, S_FIELDS) {
                return Err(bad());
            }
            let (rd, rs1, rs2) = (x(S_RD, word), x(S_RS1, word), x(S_RS2, word));
            let raw_imm = S_IMM.get(word) as u32;
            let simm = raw_imm as i32;
            match (opcode, funct) {
                (OPC_LUI, 0) => Li { rd, imm: simm },
                (OPC_OP, 0) => Alu { op: ScalarOp::Add, rd, rs1, rs2 },
                (OPC_OP, 1) => Alu { op: ScalarOp::Sub, rd, rs1, rs2 },
                (OPC_OP, 2) => Alu { op: ScalarOp::Mul, rd, rs1, rs2 },
                (OPC_OP_IMM, 1) if raw_imm <= 63 => Slli { rd, rs1, shamt: raw_imm as u8 },
                (OPC_BRANCH, 1) if simm >= 0 => Branch { cond: BranchCond::Ne, rs1, rs2, target: raw_imm },
                (OPC_BRANCH, 5) if simm >= 0 => Branch { cond: BranchCond::Ge, rs1, rs2, target: raw_imm },
                (OPC_JAL, 0) if simm >= 0 => Jal { rd, target: raw_imm },
                (OPC_LOAD, 2) => Lw { rd, rs1, offset: simm },
                (OPC_STORE, 2) => Sw { rs2, rs1, offset: simm },
                _ => return Err(bad()),
            }
        }
        OPC_OP_V | OPC_LOAD_FP | OPC_STORE_FP => {
            if !reserved_clear(word, R_FIELDS) {
                return Err(bad());
            }
            let (d, s1, s2) = (v(R_D, word), v(R_S1, word), v(R_S2, word));
            let (x1, x2) = (x(R_X1, word), x(R_X2, word));
            match (opcode, funct) {
                (OPC_LOAD_FP, 0) => RvvLoad { vd: d, rs_addr: x1 },
                (OPC_STORE_FP, 0) => RvvStore { vs3: d, rs_addr: x1 },
                (OPC_OP_V, FUNCT_VSETVLI) => VSetVli {
                    rd: x2,
                    rs_avl: x1,
                    vew: Vew::from_selector(R_VEW.get(word)).ok_or_else(bad)?,
                    lmul: Lmul::from_log2(R_LMUL.get(word) as u32).ok_or_else(bad)?,
                },
                (OPC_OP_V, f) if f < FUNCT_VX_BASE => {
                    RvvArithVV { op: VOp::from_code(f).ok_or_else(bad)?, vd: d, vs1: s1, vs2: s2 }
                }
                (OPC_OP_V, f) if f < FUNCT_REDSUM => {
                    RvvArithVX { op: VOp::from_code(f - FUNCT_VX_BASE).ok_or_else(bad)?, vd: d, vs2: s2, rs2: x2 }
                }
                (OPC_OP_V, FUNCT_REDSUM) => RvvRedSum { vd: d, vs2: s2, vs1: s1 },
                (OPC_OP_V, FUNCT_GATHER) => VRGatherVV { vd: d, vs2: s2, vs1: s1 },
                _ => return Err(bad()),
            }
        }
        _ => return Err(bad()),
    };
    match encode(&instr) {
        Ok(w) if w == word => Ok(instr),
        _ => Err(bad()),
    }
}
