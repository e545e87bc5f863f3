//! Instruction sets, encodings, register-group arithmetic and the
//! assembler.

mod asm;
mod binary;
mod config;
mod encoding;
mod group;
mod instr;
mod program;

use thiserror::Error;

pub use asm::{assemble, disassemble, format_instruction};
pub use binary::{read_binary, write_binary, BINARY_MAGIC, BINARY_VERSION};
pub use config::{Lmul, RvvConfig, VConfig, Vew, HEAD_FIELD_REGS};
pub use encoding::{decode, encode};
pub use group::{compute_group, group_size, RegisterGroup};
pub use instr::{BranchCond, InstrClass, Instruction, ScalarOp, VOp, VReg, XReg};
pub use program::Program;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("register group at v{head} needs {size} registers but the file has {num_vregs}")]
    Capacity { head: u32, size: u64, num_vregs: u32 },
    #[error("cannot encode instruction: {0}")]
    Encode(String),
    #[error("undefined instruction word {word:#018x}")]
    Decode { word: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed program binary: {0}")]
    Binary(String),
    #[error("invalid program: {0}")]
    Program(String),
}
