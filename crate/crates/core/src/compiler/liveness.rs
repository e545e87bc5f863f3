use std::collections::BTreeMap;

use super::ir::{IrModule, ValueId};

/// Lifetime of one virtual register over split-module op indices,
/// inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiveInterval {
    pub vreg: ValueId,
    pub start: usize,
    pub end: usize,
    pub group_id: Option<u32>,
    pub group_rank: u32,
}

/// Raw `[definition, last use]` intervals for every value, tagged with the
/// delimiter group that defines it. Unused values end where they start.
pub fn raw_live_intervals(m: &IrModule) -> Vec<LiveInterval> {
    let mut span: Vec<Option<(usize, usize)>> = vec![None; m.values.len()];
    for (i, op) in m.ops.iter().enumerate() {
        for &r in &op.results {
            span[r.0 as usize] = Some((i, i));
        }
        for &v in op.operands.iter().flatten() {
            if let Some(s) = span[v.0 as usize].as_mut() {
                s.1 = s.1.max(i);
            }
        }
    }
    let mut membership = BTreeMap::new();
    for (g, vs) in m.groups() {
        for (rank, v) in vs.into_iter().enumerate() {
            membership.insert(v, (g, rank as u32));
        }
    }
    span.iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (start, end) = (*s)?;
            let vreg = ValueId(i as u32);
            let (group_id, group_rank) = match membership.get(&vreg) {
                Some(&(g, r)) => (Some(g), r),
                None => (None, 0),
            };
            Some(LiveInterval { vreg, start, end, group_id, group_rank })
        })
        .collect()
}

/// Widens every member of a group to the union of the group's intervals.
pub fn force_groups(intervals: &mut [LiveInterval]) {
    let mut union: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for iv in intervals.iter() {
        if let Some(g) = iv.group_id {
            let e = union.entry(g).or_insert((iv.start, iv.end));
            e.0 = e.0.min(iv.start);
            e.1 = e.1.max(iv.end);
        }
    }
    for iv in intervals.iter_mut() {
        if let Some(g) = iv.group_id {
            (iv.start, iv.end) = union[&g];
        }
    }
}

/// Raw intervals followed by group forcing.
pub fn compute_live_intervals(m: &IrModule) -> Vec<LiveInterval> {
    let mut ivs = raw_live_intervals(m);
    force_groups(&mut ivs);
    ivs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(vreg: u32, start: usize, end: usize, group: Option<u32>, rank: u32) -> LiveInterval {
        LiveInterval { vreg: ValueId(vreg), start, end, group_id: group, group_rank: rank }
    }

    #[test]
    fn forcing_takes_union() {
        let mut ivs = vec![
            iv(0, 3, 9, Some(1), 0),
            iv(1, 4, 9, Some(1), 1),
            iv(2, 5, 10, Some(1), 2),
            iv(3, 6, 10, Some(1), 3),
            iv(4, 2, 4, None, 0),
        ];
        force_groups(&mut ivs);
        assert!(ivs[..4].iter().all(|i| (i.start, i.end) == (3, 10)));
        assert_eq!((ivs[4].start, ivs[4].end), (2, 4));
        let once = ivs.clone();
        force_groups(&mut ivs);
        assert_eq!(ivs, once);
    }

    #[test]
    fn definitional_interval() {
        let text = "vew 16\nbuffer @a 32 0\n%a = load <32 x i16> @a\n%b = add <32 x i16> %a, %a\n\
                    %c = add <32 x i16> %b, %a\n";
        let m = super::super::parse_ir(text).unwrap();
        let ivs = raw_live_intervals(&m);
        assert_eq!((ivs[0].start, ivs[0].end), (0, 2));
        assert_eq!((ivs[2].start, ivs[2].end), (2, 2));
    }
}
