//! Functional simulator for the Zoozve extension.
//!
//! Vector operands are register groups addressed by a head register and an
//! element count read from a scalar avl register. Every instruction reads
//! its inputs in full before writing, and destination elements past the
//! active count keep their old contents.

mod hazard;
mod memory;
mod scalar;
mod stats;
mod vregs;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use thiserror::Error;

use crate::isa::{self, group_size, Instruction, Program, VConfig, VReg, Vew, XReg};

pub use hazard::{
    build_hazard_graph, hazard_check, instruction_access, AccessSet, HazardEdge, HazardError, HazardGraph,
    HazardKind,
};
pub use memory::{Memory, MemoryImage, DEFAULT_MEM_BYTES};
pub use scalar::ScalarCore;
pub use stats::{ClassCounts, TraceStats};
pub use vregs::VRegFile;

/// Default step budget for a single run.
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

/// Why an instruction could not complete.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrapCause {
    #[error("register group at v{head} of {size} registers exceeds the {limit}-register file")]
    RegisterBounds { head: u64, size: u64, limit: u32 },
    #[error("memory access of {len} bytes at {addr:#x} is out of bounds")]
    MemoryBounds { addr: u64, len: u64 },
    #[error("address {addr:#x} is not aligned to {align} bytes")]
    MisalignedAccess { addr: u64, align: u64 },
    #[error("element index {index} is outside the register file")]
    IndexOutOfRange { index: u64 },
    #[error("avl register {reg} holds negative count {value}")]
    NegativeAvl { reg: XReg, value: i64 },
    #[error("csr {csr} cannot take value {value}")]
    BadCsr { csr: u8, value: u64 },
    #[error("register {reg} is not aligned to lmul {lmul}")]
    MisalignedGroup { reg: VReg, lmul: u32 },
    #[error("instruction not supported by this machine")]
    IllegalInstruction,
}

/// A trap raised at a specific instruction index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trap at instruction {index}: {cause}")]
pub struct Trap {
    pub index: u32,
    pub cause: TrapCause,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimErrorKind {
    #[error(transparent)]
    Trap(#[from] Trap),
    #[error("exceeded the {max_steps}-step budget")]
    Timeout { max_steps: u64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// A failed run, carrying the statistics gathered before the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct SimError {
    pub kind: SimErrorKind,
    pub stats: TraceStats,
}

impl SimError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self { kind: SimErrorKind::Invalid(msg.into()), stats: TraceStats::default() }
    }
}

/// Limits and options for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub max_steps: u64,
    pub mem_bytes: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS, mem_bytes: DEFAULT_MEM_BYTES }
    }
}

/// Complete architectural state of a Zoozve machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub config: VConfig,
    pub vregs: VRegFile,
    pub core: ScalarCore,
    pub csrs: BTreeMap<u8, u64>,
    pub pc: u32,
}

impl MachineState {
    pub fn new(config: VConfig, mem: Memory) -> Self {
        let mut csrs = BTreeMap::new();
        csrs.insert(0, config.vew.selector());
        csrs.insert(1, 0);
        Self { config, vregs: VRegFile::new(config.num_vregs, config.vlen_bits), core: ScalarCore::new(mem), csrs, pc: 0 }
    }

    /// Element width currently selected by CSR 0.
    pub fn vew(&self) -> Vew {
        Vew::from_selector(self.csrs[&0]).expect("csr 0 holds a valid selector")
    }

    fn head(&self, r: VReg) -> u64 {
        r.index() as u64 + (self.csrs[&1] << 13)
    }

    /// Checks that `count` elements starting at head `r` fit in the file and
    /// returns the index of the group's first element.
    fn group_base(&self, r: VReg, count: u64) -> Result<u64, TrapCause> {
        let vew = self.vew();
        let head = self.head(r);
        let size = group_size(count.max(1), vew.bits(), self.config.vlen_bits);
        if head + size > self.config.num_vregs as u64 {
            return Err(TrapCause::RegisterBounds { head, size, limit: self.config.num_vregs });
        }
        Ok(self.vregs.base(head as u32, vew))
    }

    fn read_elems(&self, base: u64, count: u64) -> Vec<i64> {
        let vew = self.vew();
        (0..count).map(|i| self.vregs.get_signed(base + i, vew)).collect()
    }

    /// Hex dump of `len` bytes of memory at `addr`.
    pub fn dump_mem(&self, addr: u64, len: u64) -> Result<String, TrapCause> {
        Ok(hex(self.core.mem.slice(addr, len, 1)?))
    }

    /// Hex dump of registers `[head, head + count)`.
    pub fn dump_vregs(&self, head: u32, count: u32) -> Result<String, TrapCause> {
        if head as u64 + count as u64 > self.config.num_vregs as u64 {
            return Err(TrapCause::RegisterBounds { head: head as u64, size: count as u64, limit: self.config.num_vregs });
        }
        Ok(hex(self.vregs.reg_bytes(head, count)))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Executes one instruction against `state` and advances the pc.
pub fn step(state: &mut MachineState, instr: &Instruction) -> Result<(), TrapCause> {
    use Instruction::*;
    if instr.is_scalar() {
        state.pc = state.core.exec(instr, state.pc)?;
        return Ok(());
    }
    let vew = state.vew();
    match *instr {
        VLoad { vd, rs_addr, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let base = state.group_base(vd, n)?;
                let addr = state.core.x(rs_addr);
                let src = state.core.mem.slice(addr, n * vew.bytes() as u64, vew.bytes() as u64)?;
                state.vregs.elem_bytes_mut(base, n, vew).copy_from_slice(src);
            }
        }
        VStore { vs3, rs_addr, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let base = state.group_base(vs3, n)?;
                let addr = state.core.x(rs_addr);
                let dst = state.core.mem.slice_mut(addr, n * vew.bytes() as u64, vew.bytes() as u64)?;
                dst.copy_from_slice(state.vregs.elem_bytes(base, n, vew));
            }
        }
        VArithVV { op, vd, vs1, vs2, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let a = state.read_elems(state.group_base(vs1, n)?, n);
                let b = state.read_elems(state.group_base(vs2, n)?, n);
                let d = state.group_base(vd, n)?;
                for i in 0..n as usize {
                    state.vregs.set(d + i as u64, vew, op.apply(vew, a[i], b[i]));
                }
            }
        }
        VArithVX { op, vd, vs2, rs2, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let a = state.read_elems(state.group_base(vs2, n)?, n);
                let s = state.core.x(rs2) as i64;
                let d = state.group_base(vd, n)?;
                for (i, &x) in a.iter().enumerate() {
                    state.vregs.set(d + i as u64, vew, op.apply(vew, x, s));
                }
            }
        }
        VRedSum { vd, vs2, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let sum = state.read_elems(state.group_base(vs2, n)?, n).into_iter().fold(0i64, i64::wrapping_add);
                let d = state.group_base(vd, 1)?;
                state.vregs.set(d, vew, sum as u64 & vew.mask());
            }
        }
        VGather { vd, vs1, vs2, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let idx_base = state.group_base(vs2, n)?;
                let data_base = state.group_base(vs1, 1)?;
                let limit = state.vregs.capacity(vew);
                let mut out = Vec::with_capacity(n as usize);
                for i in 0..n {
                    let idx = state.vregs.get(idx_base + i, vew);
                    let src = data_base + idx;
                    if src >= limit {
                        return Err(TrapCause::IndexOutOfRange { index: idx });
                    }
                    out.push(state.vregs.get(src, vew));
                }
                let d = state.group_base(vd, n)?;
                for (i, v) in out.into_iter().enumerate() {
                    state.vregs.set(d + i as u64, vew, v);
                }
            }
        }
        VScatter { vd, vs1, vs2, rs_avl } => {
            let n = state.core.avl(rs_avl)?;
            if n > 0 {
                let idx_base = state.group_base(vs2, n)?;
                let data_base = state.group_base(vs1, n)?;
                let dst_base = state.group_base(vd, 1)?;
                let limit = state.vregs.capacity(vew);
                let writes = (0..n)
                    .map(|i| {
                        let idx = state.vregs.get(idx_base + i, vew);
                        if dst_base + idx >= limit {
                            return Err(TrapCause::IndexOutOfRange { index: idx });
                        }
                        Ok((dst_base + idx, state.vregs.get(data_base + i, vew)))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                // Ascending i: a duplicated index keeps the highest i's value.
                for (dst, v) in writes {
                    state.vregs.set(dst, vew, v);
                }
            }
        }
        VSetCsr { csr, rs_value } => {
            let value = state.core.x(rs_value);
            match csr {
                0 if Vew::from_selector(value).is_some() => {}
                1 if value == 0 || (value < (1 << 16) && (value << 13) < state.config.num_vregs as u64) => {}
                _ => return Err(TrapCause::BadCsr { csr, value }),
            }
            state.csrs.insert(csr, value);
        }
        _ => return Err(TrapCause::IllegalInstruction),
    }
    state.pc += 1;
    Ok(())
}

/// Observer for executed instructions.
pub trait Tracer {
    fn on_step(&mut self, index: u32, instr: &Instruction);
}

/// Writes one `index<TAB>disassembly<TAB>class` line per instruction.
pub struct TextTracer<W: io::Write> {
    out: W,
    labels: BTreeMap<u32, String>,
    pub error: Option<io::Error>,
}

impl<W: io::Write> TextTracer<W> {
    pub fn new(out: W, program: &Program) -> Self {
        let labels = program.labels.iter().map(|(k, &v)| (v, k.clone())).collect();
        Self { out, labels, error: None }
    }
}

impl<W: io::Write> Tracer for TextTracer<W> {
    fn on_step(&mut self, index: u32, instr: &Instruction) {
        if self.error.is_some() {
            return;
        }
        let name = |t: u32| self.labels.get(&t).cloned().unwrap_or_else(|| format!(".L{t}"));
        let text = isa::format_instruction(instr, &name);
        if let Err(e) = writeln!(self.out, "{index}\t{text}\t{}", instr.class().name()) {
            self.error = Some(e);
        }
    }
}

/// Runs `program` to completion (pc reaching the end) or until a trap or
/// the step budget is exhausted.
pub fn run(
    program: &Program,
    config: &VConfig,
    image: &MemoryImage,
    opts: &RunOptions,
) -> Result<(MachineState, TraceStats), SimError> {
    run_traced(program, config, image, opts, None)
}

pub fn run_traced(
    program: &Program,
    config: &VConfig,
    image: &MemoryImage,
    opts: &RunOptions,
    tracer: Option<&mut dyn Tracer>,
) -> Result<(MachineState, TraceStats), SimError> {
    program.validate(config).map_err(|e| SimError::invalid(e.to_string()))?;
    let mem = Memory::from_image(image, opts.mem_bytes)
        .map_err(|e| SimError::invalid(format!("memory image does not fit: {e}")))?;
    let mut state = MachineState::new(*config, mem);
    state.pc = program.entry;
    let stats = execute(&mut state, program, opts.max_steps, tracer)?;
    Ok((state, stats))
}

/// Continues execution of `state` from its current pc.
pub fn execute(
    state: &mut MachineState,
    program: &Program,
    max_steps: u64,
    mut tracer: Option<&mut dyn Tracer>,
) -> Result<TraceStats, SimError> {
    let mut stats = TraceStats::default();
    let len = program.instrs.len() as u32;
    while state.pc < len {
        if stats.dynamic_count >= max_steps {
            return Err(SimError { kind: SimErrorKind::Timeout { max_steps }, stats });
        }
        let index = state.pc;
        let instr = &program.instrs[index as usize];
        if let Some(t) = tracer.as_deref_mut() {
            t.on_step(index, instr);
        }
        if let Err(cause) = step(state, instr) {
            return Err(SimError { kind: Trap { index, cause }.into(), stats });
        }
        stats.record(instr.class());
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    fn machine() -> MachineState {
        MachineState::new(VConfig::default(), Memory::new(1 << 16))
    }

    fn set_elems(s: &mut MachineState, head: u32, values: &[i64]) {
        let vew = s.vew();
        let base = s.vregs.base(head, vew);
        for (i, &v) in values.iter().enumerate() {
            s.vregs.set(base + i as u64, vew, v as u64 & vew.mask());
        }
    }

    fn elems(s: &MachineState, head: u32, n: usize) -> Vec<i64> {
        let vew = s.vew();
        let base = s.vregs.base(head, vew);
        (0..n as u64).map(|i| s.vregs.get_signed(base + i, vew)).collect()
    }

    fn exec(s: &mut MachineState, src: &str) {
        for i in assemble(src).unwrap().instrs {
            step(s, &i).unwrap();
        }
    }

    #[test]
    fn redsum_writes_element_zero() {
        let mut s = machine();
        set_elems(&mut s, 8, &[1, 2, 3, 4]);
        set_elems(&mut s, 0, &[0, 99]);
        exec(&mut s, "li x1, 4\nvredsum v0, v8, x1");
        assert_eq!(elems(&s, 0, 2), vec![10, 99]);
    }

    #[test]
    fn gather_length_follows_indices() {
        let mut s = machine();
        set_elems(&mut s, 8, &[10, 20, 30, 40]);
        set_elems(&mut s, 16, &[3, 0]);
        set_elems(&mut s, 0, &[-1, -1, -1]);
        exec(&mut s, "li x1, 2\nvgather v0, v8, v16, x1");
        assert_eq!(elems(&s, 0, 3), vec![40, 10, -1]);
    }

    #[test]
    fn scatter_leaves_other_elements() {
        let mut s = machine();
        set_elems(&mut s, 8, &[7, 9]);
        set_elems(&mut s, 16, &[2, 0]);
        set_elems(&mut s, 0, &[1, 1, 1, 1]);
        exec(&mut s, "li x1, 2\nvscatter v0, v8, v16, x1");
        assert_eq!(elems(&s, 0, 4), vec![9, 1, 7, 1]);
    }

    #[test]
    fn scatter_duplicate_index_last_wins() {
        let mut s = machine();
        set_elems(&mut s, 8, &[5, 6, 7]);
        set_elems(&mut s, 16, &[1, 1, 1]);
        exec(&mut s, "li x1, 3\nvscatter v0, v8, v16, x1");
        assert_eq!(elems(&s, 0, 2), vec![0, 7]);
    }

    #[test]
    fn vector_scalar_broadcast() {
        let mut s = machine();
        set_elems(&mut s, 4, &[1, 2, 3]);
        exec(&mut s, "li x1, 3\nli x2, 5\nvadd.vx v0, v4, x2, x1");
        assert_eq!(elems(&s, 0, 3), vec![6, 7, 8]);
    }

    #[test]
    fn wraparound_and_arithmetic_shift() {
        let mut s = machine();
        set_elems(&mut s, 4, &[32767, -32768, -7]);
        set_elems(&mut s, 8, &[1, -1, 1]);
        exec(&mut s, "li x1, 3\nvadd v0, v4, v8, x1\nli x2, 1\nvsra.vx v12, v4, x2, x1");
        assert_eq!(elems(&s, 0, 3), vec![-32768, 32767, -6]);
        assert_eq!(elems(&s, 12, 3), vec![16383, -16384, -4]);
    }

    #[test]
    fn zero_avl_is_noop() {
        let mut s = machine();
        set_elems(&mut s, 0, &[3]);
        let before = s.clone();
        exec(&mut s, "vadd v0, v4, v8, x0");
        assert_eq!(s.vregs, before.vregs);
        assert_eq!(s.pc, 1);
    }

    #[test]
    fn in_place_operation_reads_first() {
        let mut s = machine();
        // A 64-element add whose destination overlaps the second half of a source.
        let vals: Vec<i64> = (0..64).collect();
        set_elems(&mut s, 0, &vals);
        exec(&mut s, "li x1, 64\nvadd v1, v0, v0, x1");
        let expect: Vec<i64> = (0..64).map(|v| 2 * v).collect();
        assert_eq!(elems(&s, 1, 64), expect);
    }

    #[test]
    fn traps_are_reported() {
        let mut s = machine();
        let bad = assemble("li x1, 64\nvadd v2047, v0, v0, x1").unwrap();
        step(&mut s, &bad.instrs[0]).unwrap();
        assert!(matches!(step(&mut s, &bad.instrs[1]), Err(TrapCause::RegisterBounds { .. })));

        let mut s = machine();
        set_elems(&mut s, 16, &[40000]);
        let src = assemble("li x1, 1\nvgather v0, v2047, v16, x1").unwrap();
        step(&mut s, &src.instrs[0]).unwrap();
        assert!(matches!(step(&mut s, &src.instrs[1]), Err(TrapCause::IndexOutOfRange { .. })));

        let mut s = machine();
        let src = assemble("li x1, 4\nli x2, 1\nvload v0, x2, x1").unwrap();
        step(&mut s, &src.instrs[0]).unwrap();
        step(&mut s, &src.instrs[1]).unwrap();
        assert!(matches!(step(&mut s, &src.instrs[2]), Err(TrapCause::MisalignedAccess { .. })));

        let mut s = machine();
        let src = assemble("li x1, -1\nvadd v0, v1, v2, x1").unwrap();
        step(&mut s, &src.instrs[0]).unwrap();
        assert!(matches!(step(&mut s, &src.instrs[1]), Err(TrapCause::NegativeAvl { .. })));
    }

    #[test]
    fn vsetcsr_switches_element_width() {
        let mut s = machine();
        exec(&mut s, "li x1, 2\nvsetcsr 0, x1");
        assert_eq!(s.vew(), Vew::E32);
        let bad = assemble("li x1, 3\nvsetcsr 0, x1").unwrap();
        step(&mut s, &bad.instrs[0]).unwrap();
        assert!(matches!(step(&mut s, &bad.instrs[1]), Err(TrapCause::BadCsr { .. })));
    }

    #[test]
    fn run_counts_and_times_out() {
        let p = assemble("li x1, 3\nloop:\nli x2, 1\nsub x1, x1, x2\nbne x1, x0, loop\n").unwrap();
        let (_, stats) = run(&p, &VConfig::default(), &MemoryImage::new(), &RunOptions::default()).unwrap();
        assert_eq!(stats.dynamic_count, 1 + 3 * 3);
        assert_eq!(stats.per_class.scalar, 10);
        assert_eq!(stats.strip_iterations, 0);

        let spin = assemble("top:\njal x0, top\n").unwrap();
        let opts = RunOptions { max_steps: 50, ..RunOptions::default() };
        let err = run(&spin, &VConfig::default(), &MemoryImage::new(), &opts).unwrap_err();
        assert_eq!(err.kind, SimErrorKind::Timeout { max_steps: 50 });
        assert_eq!(err.stats.dynamic_count, 50);
    }

    #[test]
    fn trap_keeps_partial_stats() {
        let p = assemble("li x1, 4\nli x2, 3\nvload v0, x2, x1\n").unwrap();
        let err = run(&p, &VConfig::default(), &MemoryImage::new(), &RunOptions::default()).unwrap_err();
        assert_eq!(err.stats.dynamic_count, 2);
        assert!(matches!(err.kind, SimErrorKind::Trap(Trap { index: 2, .. })));
    }

    #[test]
    fn tracer_lines() {
        let p = assemble("li x1, 1\nvadd v0, v1, v2, x1\n").unwrap();
        let mut buf = Vec::new();
        {
            let mut t = TextTracer::new(&mut buf, &p);
            run_traced(&p, &VConfig::default(), &MemoryImage::new(), &RunOptions::default(), Some(&mut t)).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "0\tli x1, 1\tscalar\n1\tvadd v0, v1, v2, x1\tvector-arith\n");
    }
}
