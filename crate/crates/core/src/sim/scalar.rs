use crate::isa::{BranchCond, Instruction, ScalarOp, XReg};

use super::memory::Memory;
use super::TrapCause;

/// Scalar register file plus memory, shared by both vector machines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarCore {
    xregs: [u64; 32],
    pub mem: Memory,
}

impl ScalarCore {
    pub fn new(mem: Memory) -> Self {
        Self { xregs: [0; 32], mem }
    }

    pub fn x(&self, r: XReg) -> u64 {
        if r.0 == 0 {
            0
        } else {
            self.xregs[r.index()]
        }
    }

    pub fn set_x(&mut self, r: XReg, value: u64) {
        if r.0 != 0 {
            self.xregs[r.index()] = value;
        }
    }

    pub fn xregs(&self) -> [u64; 32] {
        let mut regs = self.xregs;
        regs[0] = 0;
        regs
    }

    /// Element count held in an avl register; negative values trap.
    pub fn avl(&self, r: XReg) -> Result<u64, TrapCause> {
        let v = self.x(r) as i64;
        if v < 0 {
            return Err(TrapCause::NegativeAvl { reg: r, value: v });
        }
        Ok(v as u64)
    }

    /// Executes a scalar-subset instruction at `pc` and returns the next pc.
    pub fn exec(&mut self, instr: &Instruction, pc: u32) -> Result<u32, TrapCause> {
        use Instruction::*;
        match *instr {
            Li { rd, imm } => self.set_x(rd, imm as i64 as u64),
            Alu { op, rd, rs1, rs2 } => {
                let (a, b) = (self.x(rs1), self.x(rs2));
                let v = match op {
                    ScalarOp::Add => a.wrapping_add(b),
                    ScalarOp::Sub => a.wrapping_sub(b),
                    ScalarOp::Mul => a.wrapping_mul(b),
                };
                self.set_x(rd, v);
            }
            Slli { rd, rs1, shamt } => self.set_x(rd, self.x(rs1) << shamt),
            Branch { cond, rs1, rs2, target } => {
                let (a, b) = (self.x(rs1) as i64, self.x(rs2) as i64);
                let taken = match cond {
                    BranchCond::Ne => a != b,
                    BranchCond::Ge => a >= b,
                };
                if taken {
                    return Ok(target);
                }
            }
            Jal { rd, target } => {
                self.set_x(rd, pc as u64 + 1);
                return Ok(target);
            }
            Lw { rd, rs1, offset } => {
                let addr = self.x(rs1).wrapping_add(offset as i64 as u64);
                let v = self.mem.read_u32(addr)?;
                self.set_x(rd, v as i32 as i64 as u64);
            }
            Sw { rs2, rs1, offset } => {
                let addr = self.x(rs1).wrapping_add(offset as i64 as u64);
                self.mem.write_u32(addr, self.x(rs2) as u32)?;
            }
            _ => return Err(TrapCause::IllegalInstruction),
        }
        Ok(pc + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x0_is_hardwired() {
        let mut core = ScalarCore::new(Memory::new(64));
        core.exec(&Instruction::Li { rd: XReg(0), imm: 5 }, 0).unwrap();
        assert_eq!(core.x(XReg(0)), 0);
        assert_eq!(core.xregs()[0], 0);
    }

    #[test]
    fn load_store_sign_extends() {
        let mut core = ScalarCore::new(Memory::new(64));
        core.exec(&Instruction::Li { rd: XReg(1), imm: 8 }, 0).unwrap();
        core.exec(&Instruction::Li { rd: XReg(2), imm: -3 }, 1).unwrap();
        core.exec(&Instruction::Sw { rs2: XReg(2), rs1: XReg(1), offset: 4 }, 2).unwrap();
        core.exec(&Instruction::Lw { rd: XReg(3), rs1: XReg(1), offset: 4 }, 3).unwrap();
        assert_eq!(core.x(XReg(3)) as i64, -3);
        assert!(core.exec(&Instruction::Lw { rd: XReg(3), rs1: XReg(1), offset: 2 }, 4).is_err());
    }

    #[test]
    fn branches_compare_signed() {
        let mut core = ScalarCore::new(Memory::new(8));
        core.exec(&Instruction::Li { rd: XReg(1), imm: -1 }, 0).unwrap();
        let bge = Instruction::Branch { cond: BranchCond::Ge, rs1: XReg(1), rs2: XReg(0), target: 9 };
        assert_eq!(core.exec(&bge, 1).unwrap(), 2);
        let jal = Instruction::Jal { rd: XReg(5), target: 7 };
        assert_eq!(core.exec(&jal, 3).unwrap(), 7);
        assert_eq!(core.x(XReg(5)), 4);
    }
}
