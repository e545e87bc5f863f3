//! Simplified RVV-subset machine used as the strip-mining baseline.
//!
//! Thirty-two architectural registers grouped by a power-of-two LMUL, with
//! `vsetvli` choosing `vl = min(avl, vlmax)` for each strip.

use thiserror::Error;

use crate::isa::{Instruction, Lmul, Program, RvvConfig, VReg, Vew};
use crate::sim::{
    Memory, MemoryImage, RunOptions, ScalarCore, SimError, SimErrorKind, TraceStats, Tracer, Trap, TrapCause, VRegFile,
};

/// Element count selected by `vsetvli` for a requested `avl`.
pub fn vsetvli(avl: u64, config: &RvvConfig) -> u64 {
    avl.min(config.vlmax() as u64)
}

/// Number of strips the canonical strip-mine loop needs for `n` elements.
pub fn strip_mine_iterations(n: u64, config: &RvvConfig) -> u64 {
    n.div_ceil(config.vlmax() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("vl {vl} is outside 1..={vlmax}")]
pub struct UtilizationError {
    pub vl: u64,
    pub vlmax: u64,
}

/// Fraction of the register group a strip of `vl` elements occupies.
pub fn rvv_utilization(vl: u64, config: &RvvConfig) -> Result<f64, UtilizationError> {
    let vlmax = config.vlmax() as u64;
    if vl == 0 || vl > vlmax {
        return Err(UtilizationError { vl, vlmax });
    }
    Ok(vl as f64 / vlmax as f64)
}

/// Architectural state of the baseline machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RvvState {
    pub config: RvvConfig,
    pub vregs: VRegFile,
    pub core: ScalarCore,
    pub vl: u64,
    pub vtype: (Vew, Lmul),
    pub pc: u32,
}

impl RvvState {
    pub fn new(config: RvvConfig, mem: Memory) -> Self {
        Self {
            config,
            vregs: VRegFile::new(RvvConfig::NUM_VREGS, config.vlen_bits),
            core: ScalarCore::new(mem),
            vl: 0,
            vtype: (config.vew, config.lmul),
            pc: 0,
        }
    }

    pub fn vlmax(&self) -> u64 {
        (self.vtype.1.factor() * self.config.vlen_bits / self.vtype.0.bits()) as u64
    }

    /// First element of an lmul-aligned group.
    fn group(&self, r: VReg) -> Result<u64, TrapCause> {
        let lmul = self.vtype.1.factor();
        if !r.index().is_multiple_of(lmul) || r.index() + lmul > RvvConfig::NUM_VREGS {
            return Err(TrapCause::MisalignedGroup { reg: r, lmul });
        }
        Ok(self.vregs.base(r.index(), self.vtype.0))
    }

    /// First element of a single register operand.
    fn single(&self, r: VReg) -> Result<u64, TrapCause> {
        if r.index() >= RvvConfig::NUM_VREGS {
            return Err(TrapCause::MisalignedGroup { reg: r, lmul: 1 });
        }
        Ok(self.vregs.base(r.index(), self.vtype.0))
    }

    fn read(&self, base: u64, n: u64) -> Vec<i64> {
        (0..n).map(|i| self.vregs.get_signed(base + i, self.vtype.0)).collect()
    }

    pub fn dump_mem(&self, addr: u64, len: u64) -> Result<String, TrapCause> {
        Ok(crate::sim::hex(self.core.mem.slice(addr, len, 1)?))
    }

    pub fn dump_vregs(&self, head: u32, count: u32) -> Result<String, TrapCause> {
        if head as u64 + count as u64 > RvvConfig::NUM_VREGS as u64 {
            return Err(TrapCause::RegisterBounds { head: head as u64, size: count as u64, limit: RvvConfig::NUM_VREGS });
        }
        Ok(crate::sim::hex(self.vregs.reg_bytes(head, count)))
    }
}

/// Executes one instruction on the baseline machine and advances the pc.
/// Returns the vl chosen when the instruction is a `vsetvli`.
pub fn step_rvv(state: &mut RvvState, instr: &Instruction) -> Result<Option<u64>, TrapCause> {
    use Instruction::*;
    if instr.is_scalar() {
        state.pc = state.core.exec(instr, state.pc)?;
        return Ok(None);
    }
    let vew = state.vtype.0;
    let vl = state.vl;
    let mut chosen = None;
    match *instr {
        VSetVli { rd, rs_avl, vew, lmul } => {
            let avl = state.core.avl(rs_avl)?;
            state.vtype = (vew, lmul);
            state.vl = avl.min(state.vlmax());
            state.core.set_x(rd, state.vl);
            chosen = Some(state.vl);
        }
        RvvLoad { vd, rs_addr } => {
            let base = state.group(vd)?;
            if vl > 0 {
                let w = vew.bytes() as u64;
                let src = state.core.mem.slice(state.core.x(rs_addr), vl * w, w)?;
                state.vregs.elem_bytes_mut(base, vl, vew).copy_from_slice(src);
            }
        }
        RvvStore { vs3, rs_addr } => {
            let base = state.group(vs3)?;
            if vl > 0 {
                let w = vew.bytes() as u64;
                let addr = state.core.x(rs_addr);
                let dst = state.core.mem.slice_mut(addr, vl * w, w)?;
                dst.copy_from_slice(state.vregs.elem_bytes(base, vl, vew));
            }
        }
        RvvArithVV { op, vd, vs1, vs2 } => {
            let a = state.read(state.group(vs1)?, vl);
            let b = state.read(state.group(vs2)?, vl);
            let d = state.group(vd)?;
            for i in 0..vl as usize {
                state.vregs.set(d + i as u64, vew, op.apply(vew, a[i], b[i]));
            }
        }
        RvvArithVX { op, vd, vs2, rs2 } => {
            let a = state.read(state.group(vs2)?, vl);
            let s = state.core.x(rs2) as i64;
            let d = state.group(vd)?;
            for (i, &x) in a.iter().enumerate() {
                state.vregs.set(d + i as u64, vew, op.apply(vew, x, s));
            }
        }
        RvvRedSum { vd, vs2, vs1 } => {
            let src = state.group(vs2)?;
            let init = state.single(vs1)?;
            let d = state.single(vd)?;
            if vl > 0 {
                let acc = state.read(src, vl).into_iter().fold(state.vregs.get_signed(init, vew), i64::wrapping_add);
                state.vregs.set(d, vew, acc as u64 & vew.mask());
            }
        }
        VRGatherVV { vd, vs2, vs1 } => {
            let data = state.group(vs2)?;
            let idx = state.read(state.group(vs1)?, vl);
            let d = state.group(vd)?;
            let vlmax = state.vlmax();
            let out: Vec<u64> = idx
                .iter()
                .map(|&k| {
                    let k = k as u64 & vew.mask();
                    if k < vlmax {
                        state.vregs.get(data + k, vew)
                    } else {
                        0
                    }
                })
                .collect();
            for (i, v) in out.into_iter().enumerate() {
                state.vregs.set(d + i as u64, vew, v);
            }
        }
        _ => return Err(TrapCause::IllegalInstruction),
    }
    state.pc += 1;
    Ok(chosen)
}

pub fn run_rvv(
    program: &Program,
    config: &RvvConfig,
    image: &MemoryImage,
    opts: &RunOptions,
) -> Result<(RvvState, TraceStats), SimError> {
    run_rvv_traced(program, config, image, opts, None)
}

/// Runs to completion. `strip_iterations` counts `vsetvli` executions that
/// chose a non-zero vl.
pub fn run_rvv_traced(
    program: &Program,
    config: &RvvConfig,
    image: &MemoryImage,
    opts: &RunOptions,
    mut tracer: Option<&mut dyn Tracer>,
) -> Result<(RvvState, TraceStats), SimError> {
    program.validate_rvv(config).map_err(|e| SimError::invalid(e.to_string()))?;
    let mem = Memory::from_image(image, opts.mem_bytes)
        .map_err(|e| SimError::invalid(format!("memory image does not fit: {e}")))?;
    let mut state = RvvState::new(*config, mem);
    state.pc = program.entry;
    let mut stats = TraceStats::default();
    let len = program.instrs.len() as u32;
    while state.pc < len {
        if stats.dynamic_count >= opts.max_steps {
            return Err(SimError { kind: SimErrorKind::Timeout { max_steps: opts.max_steps }, stats });
        }
        let index = state.pc;
        let instr = &program.instrs[index as usize];
        if let Some(t) = tracer.as_deref_mut() {
            t.on_step(index, instr);
        }
        match step_rvv(&mut state, instr) {
            Ok(chosen) => {
                if chosen.is_some_and(|vl| vl > 0) {
                    stats.strip_iterations += 1;
                }
            }
            Err(cause) => return Err(SimError { kind: Trap { index, cause }.into(), stats }),
        }
        stats.record(instr.class());
    }
    Ok((state, stats))
}
