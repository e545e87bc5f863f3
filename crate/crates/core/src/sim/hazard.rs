//! Register-range hazard detection.
//!
//! Each vector instruction reads and writes register groups `[head, tail)`.
//! Two accesses conflict when their ranges overlap, which is what a bank of
//! head/tail comparators with OR-reduced outputs reports in hardware.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::isa::{group_size, Instruction, Program, RegisterGroup, ScalarOp, VConfig, VReg, Vew, XReg};

/// Half-open overlap test between two register groups.
pub fn hazard_check(a: &RegisterGroup, b: &RegisterGroup) -> bool {
    a.head < b.tail && b.head < a.tail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum HazardKind {
    Raw,
    War,
    Waw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HazardEdge {
    pub from: usize,
    pub to: usize,
    pub kind: HazardKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HazardGraph {
    pub nodes: usize,
    /// Sorted by `(from, to, kind)`.
    pub edges: Vec<HazardEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HazardError {
    #[error("program has branches; supply avl annotations for every vector instruction")]
    Branchy,
    #[error("avl of instruction {index} is not statically known")]
    UnknownAvl { index: usize },
    #[error("element width at instruction {index} is not statically known")]
    UnknownVew { index: usize },
}

/// Register groups read and written by one instruction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessSet {
    pub reads: Vec<RegisterGroup>,
    pub writes: Vec<RegisterGroup>,
}

/// Groups touched by a Zoozve vector instruction executing `avl` elements
/// at element width `vew`. Gather data reads and scatter writes may reach
/// any element from their head to the end of the file, so those groups
/// extend to `num_vregs`.
pub fn instruction_access(instr: &Instruction, avl: u64, vew: Vew, config: &VConfig) -> AccessSet {
    use Instruction::*;
    let mut acc = AccessSet::default();
    if avl == 0 {
        return acc;
    }
    let n = config.num_vregs;
    let g = |r: VReg, count: u64| {
        let size = group_size(count, vew.bits(), config.vlen_bits) as u32;
        RegisterGroup { head: r.index(), tail: (r.index() + size).min(n) }
    };
    let to_end = |r: VReg| RegisterGroup { head: r.index(), tail: n };
    match *instr {
        VLoad { vd, .. } => acc.writes.push(g(vd, avl)),
        VStore { vs3, .. } => acc.reads.push(g(vs3, avl)),
        VArithVV { vd, vs1, vs2, .. } => {
            acc.reads.extend([g(vs1, avl), g(vs2, avl)]);
            acc.writes.push(g(vd, avl));
        }
        VArithVX { vd, vs2, .. } => {
            acc.reads.push(g(vs2, avl));
            acc.writes.push(g(vd, avl));
        }
        VRedSum { vd, vs2, .. } => {
            acc.reads.push(g(vs2, avl));
            acc.writes.push(g(vd, 1));
        }
        VGather { vd, vs1, vs2, .. } => {
            acc.reads.extend([to_end(vs1), g(vs2, avl)]);
            acc.writes.push(g(vd, avl));
        }
        VScatter { vd, vs1, vs2, .. } => {
            acc.reads.extend([g(vs1, avl), g(vs2, avl)]);
            acc.writes.push(to_end(vd));
        }
        _ => {}
    }
    acc
}

/// Tracks scalar registers whose values are known constants along a
/// straight-line program.
#[derive(Default)]
struct ConstTracker {
    known: [Option<i64>; 32],
}

impl ConstTracker {
    fn get(&self, r: XReg) -> Option<i64> {
        if r.0 == 0 {
            Some(0)
        } else {
            self.known[r.index()]
        }
    }

    fn update(&mut self, instr: &Instruction) {
        use Instruction::*;
        let value = match *instr {
            Li { imm, .. } => Some(imm as i64),
            Alu { op, rs1, rs2, .. } => match (self.get(rs1), self.get(rs2)) {
                (Some(a), Some(b)) => Some(match op {
                    ScalarOp::Add => a.wrapping_add(b),
                    ScalarOp::Sub => a.wrapping_sub(b),
                    ScalarOp::Mul => a.wrapping_mul(b),
                }),
                _ => None,
            },
            Slli { rs1, shamt, .. } => self.get(rs1).map(|v| v << shamt),
            _ => None,
        };
        if let Some(rd) = instr.scalar_dest() {
            if rd.0 != 0 {
                self.known[rd.index()] = value;
            }
        }
    }
}

/// Builds the RAW/WAR/WAW graph for a program. Straight-line programs have
/// their avl values and element width derived from `li`/ALU constants;
/// `annotations` (instruction index to avl) override those and are required
/// for every vector instruction when the program branches.
pub fn build_hazard_graph(
    program: &Program,
    config: &VConfig,
    annotations: Option<&BTreeMap<usize, u64>>,
) -> Result<HazardGraph, HazardError> {
    let branchy = program.has_branches();
    let mut consts = ConstTracker::default();
    let mut vew = Some(config.vew);
    let mut accesses = Vec::with_capacity(program.len());
    for (index, instr) in program.instrs.iter().enumerate() {
        let access = match instr.zoozve_avl() {
            Some(avl_reg) => {
                let avl = match annotations.and_then(|a| a.get(&index)) {
                    Some(&v) => v,
                    None if branchy => return Err(HazardError::Branchy),
                    None => match consts.get(avl_reg) {
                        Some(v) if v >= 0 => v as u64,
                        _ => return Err(HazardError::UnknownAvl { index }),
                    },
                };
                let vew = vew.ok_or(HazardError::UnknownVew { index })?;
                instruction_access(instr, avl, vew, config)
            }
            None => {
                if let Instruction::VSetCsr { csr: 0, rs_value } = *instr {
                    vew = consts.get(rs_value).and_then(|v| Vew::from_selector(v as u64));
                }
                AccessSet::default()
            }
        };
        consts.update(instr);
        accesses.push(access);
    }

    let any = |xs: &[RegisterGroup], ys: &[RegisterGroup]| xs.iter().any(|a| ys.iter().any(|b| hazard_check(a, b)));
    let mut edges = Vec::new();
    for (i, a) in accesses.iter().enumerate() {
        for (j, b) in accesses.iter().enumerate().skip(i + 1) {
            if any(&a.writes, &b.reads) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::Raw });
            }
            if any(&a.reads, &b.writes) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::War });
            }
            if any(&a.writes, &b.writes) {
                edges.push(HazardEdge { from: i, to: j, kind: HazardKind::Waw });
            }
        }
    }
    Ok(HazardGraph { nodes: program.len(), edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    fn rg(head: u32, tail: u32) -> RegisterGroup {
        RegisterGroup { head, tail }
    }

    #[test]
    fn overlap_examples() {
        assert!(!hazard_check(&rg(0, 8), &rg(8, 16)));
        assert!(hazard_check(&rg(0, 8), &rg(4, 12)));
        assert!(hazard_check(&rg(5, 6), &rg(0, 2048)));
        assert!(hazard_check(&rg(3, 4), &rg(3, 4)));
    }

    // VLEN=512, VEW=16: 32 elements per register, so 128 elements = 4 registers.
    #[test]
    fn raw_edge_on_partial_overlap() {
        let p = assemble("li x1, 128\nvload v0, x2, x1\nvadd v10, v2, v20, x1\n").unwrap();
        let g = build_hazard_graph(&p, &VConfig::default(), None).unwrap();
        assert_eq!(g.edges, vec![HazardEdge { from: 1, to: 2, kind: HazardKind::Raw }]);
    }

    #[test]
    fn disjoint_writes_no_edge() {
        let p = assemble("li x1, 128\nvload v0, x2, x1\nvload v4, x3, x1\n").unwrap();
        let g = build_hazard_graph(&p, &VConfig::default(), None).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn branchy_needs_annotations() {
        let p = assemble("li x1, 32\ntop:\nvadd v0, v1, v2, x1\nbne x1, x0, top\n").unwrap();
        assert_eq!(build_hazard_graph(&p, &VConfig::default(), None), Err(HazardError::Branchy));
        let ann = BTreeMap::from([(1usize, 32u64)]);
        assert!(build_hazard_graph(&p, &VConfig::default(), Some(&ann)).is_ok());
    }

    #[test]
    fn unknown_avl_rejected() {
        let p = assemble("lw x1, 0(x0)\nvadd v0, v1, v2, x1\n").unwrap();
        assert_eq!(build_hazard_graph(&p, &VConfig::default(), None), Err(HazardError::UnknownAvl { index: 1 }));
    }

    #[test]
    fn gather_reads_to_end_of_file() {
        let cfg = VConfig::default();
        let g = Instruction::VGather { vd: VReg(0), vs1: VReg(100), vs2: VReg(50), rs_avl: XReg(1) };
        let acc = instruction_access(&g, 10, Vew::E16, &cfg);
        assert_eq!(acc.reads[0], rg(100, 2048));
        assert_eq!(acc.writes, vec![rg(0, 1)]);
    }
}
