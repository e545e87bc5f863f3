//! Intrinsic IR compiler: split each vector operation per register, give
//! every split group a consecutive run of registers, lower to Zoozve
//! assembly and coalesce the pieces back into wide instructions.

mod coalesce;
mod ir;
mod liveness;
mod lower;
mod parse;
mod regalloc;
mod split;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::isa::{self, IsaError, Program, VConfig};

pub use coalesce::coalesce;
pub use ir::{BufId, Buffer, DelimKind, IrModule, IrOp, OpKind, Value, ValueId};
pub use liveness::{compute_live_intervals, force_groups, raw_live_intervals, LiveInterval};
pub use lower::{format_lines, lines_to_program, lower, AsmLine, LineTag, ADDR_REG, AVL_REG, CSR_REG, SCALAR_REG};
pub use parse::parse_ir;
pub use regalloc::{allocate_grouped, Assignment};
pub use split::split_intrinsics;

fn group_label(group: &Option<u32>) -> String {
    match group {
        Some(g) => format!("group {g}"),
        None => "an ungrouped value".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("op {op}: {msg}")]
    Verify { op: usize, msg: String },
    #[error("value %{value} needs {regs} registers but the file has {num_vregs}")]
    Capacity { value: String, regs: u64, num_vregs: u32 },
    #[error(
        "no run of {size} consecutive free registers for {} (pressure {pressure} of {num_vregs})",
        group_label(.group)
    )]
    Allocation { group: Option<u32>, size: u32, pressure: u32, num_vregs: u32 },
    #[error(transparent)]
    Isa(#[from] IsaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Verify,
    Split,
    Allocate,
    Lower,
    Coalesce,
    Emit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Verify => "verify",
            Stage::Split => "split",
            Stage::Allocate => "allocate",
            Stage::Lower => "lower",
            Stage::Coalesce => "coalesce",
            Stage::Emit => "emit",
        })
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{stage}: {error}")]
    Stage { stage: Stage, error: IrError },
    #[error("writing {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

fn at(stage: Stage) -> impl Fn(IrError) -> CompileError {
    move |error| CompileError::Stage { stage, error }
}

/// Every intermediate product of one compilation.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub module: IrModule,
    pub split: IrModule,
    pub intervals: Vec<LiveInterval>,
    pub assignment: Assignment,
    pub before_merge: Vec<AsmLine>,
    pub lines: Vec<AsmLine>,
    pub program: Program,
}

/// Runs the full pipeline on a module.
pub fn compile(m: &IrModule, config: &VConfig) -> Result<Compiled, CompileError> {
    m.verify().map_err(at(Stage::Verify))?;
    let split = split_intrinsics(m, config).map_err(at(Stage::Split))?;
    let intervals = compute_live_intervals(&split);
    let assignment = allocate_grouped(&intervals, config).map_err(at(Stage::Allocate))?;
    lower::check_assignment(&assignment, config)
        .map_err(|msg| at(Stage::Lower)(IrError::Verify { op: 0, msg }))?;
    let before_merge = lower(&split, &assignment);
    let lines = coalesce(&before_merge, config);
    let program = lines_to_program(&lines);
    program.validate(config).map_err(|e| at(Stage::Coalesce)(e.into()))?;
    Ok(Compiled { module: m.clone(), split, intervals, assignment, before_merge, lines, program })
}

impl Compiled {
    /// Writes the staged files `<name>.0.ir`, `<name>.split.ir`,
    /// `<name>_before_merge.s`, `<name>.s`, `<name>.bin` and
    /// `<name>_asm.txt` into `outdir` and returns their paths.
    pub fn write_artifacts(&self, outdir: &Path, name: &str) -> Result<Vec<PathBuf>, CompileError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CompileError::Io { path, source }
        };
        fs::create_dir_all(outdir).map_err(io(outdir))?;
        let bin = isa::write_binary(&self.program).map_err(|e| at(Stage::Emit)(e.into()))?;
        let decoded = isa::read_binary(&bin).map_err(|e| at(Stage::Emit)(e.into()))?;
        let files: Vec<(String, Vec<u8>)> = vec![
            (format!("{name}.0.ir"), self.module.to_string().into_bytes()),
            (format!("{name}.split.ir"), self.split.to_string().into_bytes()),
            (format!("{name}_before_merge.s"), format_lines(&self.before_merge).into_bytes()),
            (format!("{name}.s"), format_lines(&self.lines).into_bytes()),
            (format!("{name}.bin"), bin),
            (format!("{name}_asm.txt"), isa::disassemble(&decoded).into_bytes()),
        ];
        let mut paths = Vec::new();
        for (file, data) in files {
            let path = outdir.join(file);
            fs::write(&path, data).map_err(io(&path))?;
            paths.push(path);
        }
        Ok(paths)
    }
}
