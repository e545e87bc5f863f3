use crate::isa::{group_size, VConfig};

use super::ir::{DelimKind, IrModule, OpKind, ValueId};
use super::IrError;

/// Rewrites every operation into per-register pieces bracketed by
/// delimiters. Operation `i` of the input becomes delimiter group `i`.
/// Reductions, gathers and scatters keep whole-group operands and define all
/// members of their result at once.
pub fn split_intrinsics(m: &IrModule, config: &VConfig) -> Result<IrModule, IrError> {
    let vew = m.vew;
    let epr = (config.vlen_bits / vew.bits()) as u64;
    let mut out = IrModule::new(vew);
    out.vlen = Some(config.vlen_bits);
    out.buffers = m.buffers.clone();

    let mut members: Vec<Vec<ValueId>> = vec![Vec::new(); m.values.len()];
    for (i, op) in m.ops.iter().enumerate() {
        if let OpKind::Delimiter { .. } = op.kind {
            return Err(IrError::Verify { op: i, msg: "module is already split".into() });
        }
        let group = i as u32;
        out.push(OpKind::Delimiter { group, kind: DelimKind::Begin }, Vec::new(), Vec::new());

        let mut new_results = Vec::new();
        for &r in &op.results {
            let v = m.value(r);
            let regs = group_size(v.len, vew.bits(), config.vlen_bits);
            if regs > config.num_vregs as u64 {
                return Err(IrError::Capacity { value: v.name.clone(), regs, num_vregs: config.num_vregs });
            }
            let ids: Vec<ValueId> = (0..regs)
                .map(|j| out.new_value(&format!("{}.{j}", v.name), epr.min(v.len - j * epr)))
                .collect();
            members[r.0 as usize] = ids.clone();
            new_results.push(ids);
        }
        let operand = |k: usize| -> Vec<ValueId> { members[op.operands[k][0].0 as usize].clone() };

        match op.kind {
            OpKind::Load { buf, offset } => {
                for (j, &v) in new_results[0].iter().enumerate() {
                    out.push(OpKind::Load { buf, offset: offset + j as u64 * epr }, vec![v], Vec::new());
                }
            }
            OpKind::Store { buf, offset } => {
                for (j, v) in operand(0).into_iter().enumerate() {
                    out.push(OpKind::Store { buf, offset: offset + j as u64 * epr }, Vec::new(), vec![vec![v]]);
                }
            }
            OpKind::Binary(_) => {
                let (a, b) = (operand(0), operand(1));
                for (j, &v) in new_results[0].iter().enumerate() {
                    out.push(op.kind, vec![v], vec![vec![a[j]], vec![b[j]]]);
                }
            }
            OpKind::BinaryImm(..) => {
                let a = operand(0);
                for (j, &v) in new_results[0].iter().enumerate() {
                    out.push(op.kind, vec![v], vec![vec![a[j]]]);
                }
            }
            OpKind::RedSum | OpKind::Gather | OpKind::Scatter => {
                let operands = (0..op.operands.len()).map(operand).collect();
                out.push(op.kind, new_results.concat(), operands);
            }
            OpKind::Delimiter { .. } => unreachable!(),
        }
        out.push(OpKind::Delimiter { group, kind: DelimKind::End }, Vec::new(), Vec::new());
    }
    out.verify()?;
    Ok(out)
}
