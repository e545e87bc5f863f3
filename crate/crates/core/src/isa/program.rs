use std::collections::BTreeMap;

use super::{Instruction, IsaError, RvvConfig, VConfig, HEAD_FIELD_REGS};

/// An assembled instruction sequence with its label table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub instrs: Vec<Instruction>,
    pub labels: BTreeMap<String, u32>,
    pub entry: u32,
}

impl Program {
    pub fn new(instrs: Vec<Instruction>) -> Self {
        Self { instrs, labels: BTreeMap::new(), entry: 0 }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn has_branches(&self) -> bool {
        self.instrs.iter().any(|i| i.branch_target().is_some())
    }

    /// Checks that every branch target and label lands inside the program
    /// (the one-past-the-end index is a valid halt target).
    pub fn check_targets(&self) -> Result<(), IsaError> {
        let len = self.instrs.len() as u32;
        if self.entry > len {
            return Err(IsaError::Program(format!("entry {} outside program of length {len}", self.entry)));
        }
        for (idx, instr) in self.instrs.iter().enumerate() {
            if let Some(t) = instr.branch_target() {
                if t > len {
                    return Err(IsaError::Program(format!("instruction {idx} branches to {t}, past the end")));
                }
            }
        }
        for (name, &idx) in &self.labels {
            if idx > len {
                return Err(IsaError::Program(format!("label {name} points past the end")));
            }
        }
        Ok(())
    }

    /// Validates the program for a Zoozve machine: targets resolve and every
    /// vector head lies inside the register file.
    pub fn validate(&self, config: &VConfig) -> Result<(), IsaError> {
        self.check_targets()?;
        let limit = config.num_vregs.min(HEAD_FIELD_REGS);
        for (idx, instr) in self.instrs.iter().enumerate() {
            if instr.is_rvv() {
                return Err(IsaError::Program(format!("instruction {idx} is an rvv instruction")));
            }
            for r in instr.vector_fields() {
                if r.index() >= limit {
                    return Err(IsaError::Program(format!(
                        "instruction {idx} names {r}, beyond {limit} registers"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates the program for the RVV baseline machine.
    pub fn validate_rvv(&self, _config: &RvvConfig) -> Result<(), IsaError> {
        self.check_targets()?;
        for (idx, instr) in self.instrs.iter().enumerate() {
            if instr.is_zoozve_vector() {
                return Err(IsaError::Program(format!("instruction {idx} is a zoozve instruction")));
            }
            for r in instr.vector_fields() {
                if r.index() >= RvvConfig::NUM_VREGS {
                    return Err(IsaError::Program(format!("instruction {idx} names {r}, beyond 32 registers")));
                }
            }
        }
        Ok(())
    }
}
