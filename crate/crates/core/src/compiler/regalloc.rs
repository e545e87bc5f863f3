use std::collections::BTreeMap;

use crate::isa::{RegisterGroup, VConfig};

use super::ir::ValueId;
use super::liveness::LiveInterval;
use super::IrError;

/// Physical placement of every virtual register and delimiter group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub vregs: BTreeMap<ValueId, u32>,
    pub groups: BTreeMap<u32, RegisterGroup>,
}

impl Assignment {
    pub fn reg(&self, v: ValueId) -> u32 {
        self.vregs[&v]
    }
}

/// An allocation unit: a whole group, or a lone ungrouped value.
struct Unit {
    start: usize,
    end: usize,
    group: Option<u32>,
    members: Vec<(u32, ValueId)>,
}

/// Linear scan over units in start order. Each unit takes the lowest run
/// of consecutive registers free across its whole interval; a unit expires
/// once its interval ends strictly before the new start.
pub fn allocate_grouped(intervals: &[LiveInterval], config: &VConfig) -> Result<Assignment, IrError> {
    let mut by_group: BTreeMap<u32, Unit> = BTreeMap::new();
    let mut units = Vec::new();
    for iv in intervals {
        match iv.group_id {
            Some(g) => {
                let u = by_group.entry(g).or_insert(Unit { start: iv.start, end: iv.end, group: Some(g), members: Vec::new() });
                u.start = u.start.min(iv.start);
                u.end = u.end.max(iv.end);
                u.members.push((iv.group_rank, iv.vreg));
            }
            None => units.push(Unit { start: iv.start, end: iv.end, group: None, members: vec![(0, iv.vreg)] }),
        }
    }
    units.extend(by_group.into_values());
    units.sort_by_key(|u| (u.start, u.members.iter().map(|m| m.1).min()));

    let n = config.num_vregs;
    let mut out = Assignment::default();
    let mut active: Vec<(usize, RegisterGroup)> = Vec::new();
    let mut used: u32 = 0;
    for mut u in units {
        u.members.sort();
        let size = u.members.len() as u32;
        active.retain(|&(end, rg)| {
            let keep = end >= u.start;
            if !keep {
                used -= rg.len();
            }
            keep
        });
        let mut occupied: Vec<RegisterGroup> = active.iter().map(|a| a.1).collect();
        occupied.sort_by_key(|g| g.head);
        let mut head = 0u32;
        for g in &occupied {
            if g.head >= head + size {
                break;
            }
            head = head.max(g.tail);
        }
        if head + size > n {
            return Err(IrError::Allocation {
                group: u.group,
                size,
                pressure: used + size,
                num_vregs: n,
            });
        }
        let rg = RegisterGroup { head, tail: head + size };
        for (rank, v) in &u.members {
            out.vregs.insert(*v, head + rank);
        }
        if let Some(g) = u.group {
            out.groups.insert(g, rg);
        }
        used += size;
        active.push((u.end, rg));
    }
    Ok(out)
}
