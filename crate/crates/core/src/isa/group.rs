use std::fmt;

use serde::Serialize;

use super::IsaError;

/// A run of consecutive physical vector registers, `[head, tail)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RegisterGroup {
    pub head: u32,
    pub tail: u32,
}

impl RegisterGroup {
    pub fn new(head: u32, tail: u32) -> Self {
        debug_assert!(head < tail, "empty register group [{head}, {tail})");
        Self { head, tail }
    }

    pub fn len(&self) -> u32 {
        self.tail - self.head
    }

    pub fn is_empty(&self) -> bool {
        self.tail <= self.head
    }

    pub fn contains(&self, reg: u32) -> bool {
        self.head <= reg && reg < self.tail
    }

    /// Half-open interval overlap, the comparator check used for hazards.
    pub fn overlaps(&self, other: &RegisterGroup) -> bool {
        self.head < other.tail && other.head < self.tail
    }
}

impl fmt::Display for RegisterGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v[{}, {})", self.head, self.tail)
    }
}

/// Registers needed to hold `elem_count` elements of `vew_bits` each.
pub fn group_size(elem_count: u64, vew_bits: u32, vlen_bits: u32) -> u64 {
    (elem_count * vew_bits as u64).div_ceil(vlen_bits as u64)
}

/// Register group holding `elem_count` elements starting at `head`:
/// `tail = head + ceil(elem_count * vew / vlen)`.
pub fn compute_group(
    head: u32,
    elem_count: u64,
    vew_bits: u32,
    vlen_bits: u32,
    num_vregs: u32,
) -> Result<RegisterGroup, IsaError> {
    if elem_count == 0 {
        return Err(IsaError::Config("register group must hold at least one element".into()));
    }
    if vew_bits == 0 || !vlen_bits.is_multiple_of(vew_bits) {
        return Err(IsaError::Config(format!("element width {vew_bits} does not divide vlen {vlen_bits}")));
    }
    let size = group_size(elem_count, vew_bits, vlen_bits);
    let tail = head as u64 + size;
    if tail > num_vregs as u64 {
        return Err(IsaError::Capacity { head, size, num_vregs });
    }
    Ok(RegisterGroup { head, tail: tail as u32 })
}
