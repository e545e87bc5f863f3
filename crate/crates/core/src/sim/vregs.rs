use crate::isa::Vew;

/// Vector register storage viewed as a flat element array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VRegFile {
    bytes: Vec<u8>,
    vlen_bytes: usize,
}

impl VRegFile {
    pub fn new(num_regs: u32, vlen_bits: u32) -> Self {
        let vlen_bytes = (vlen_bits / 8) as usize;
        Self { bytes: vec![0; num_regs as usize * vlen_bytes], vlen_bytes }
    }

    pub fn num_regs(&self) -> u32 {
        (self.bytes.len() / self.vlen_bytes) as u32
    }

    pub fn vlen_bytes(&self) -> usize {
        self.vlen_bytes
    }

    /// Total elements of width `vew` in the whole file.
    pub fn capacity(&self, vew: Vew) -> u64 {
        (self.bytes.len() / vew.bytes() as usize) as u64
    }

    /// Index of element 0 of register `reg`.
    pub fn base(&self, reg: u32, vew: Vew) -> u64 {
        reg as u64 * (self.vlen_bytes as u64 / vew.bytes() as u64)
    }

    pub fn get(&self, elem: u64, vew: Vew) -> u64 {
        let w = vew.bytes() as usize;
        let off = elem as usize * w;
        let mut buf = [0u8; 8];
        buf[..w].copy_from_slice(&self.bytes[off..off + w]);
        u64::from_le_bytes(buf)
    }

    pub fn get_signed(&self, elem: u64, vew: Vew) -> i64 {
        vew.sign_extend(self.get(elem, vew))
    }

    pub fn set(&mut self, elem: u64, vew: Vew, value: u64) {
        let w = vew.bytes() as usize;
        let off = elem as usize * w;
        self.bytes[off..off + w].copy_from_slice(&value.to_le_bytes()[..w]);
    }

    /// Raw bytes of `count` elements starting at element `first`.
    pub fn elem_bytes(&self, first: u64, count: u64, vew: Vew) -> &[u8] {
        let w = vew.bytes() as u64;
        &self.bytes[(first * w) as usize..((first + count) * w) as usize]
    }

    pub fn elem_bytes_mut(&mut self, first: u64, count: u64, vew: Vew) -> &mut [u8] {
        let w = vew.bytes() as u64;
        &mut self.bytes[(first * w) as usize..((first + count) * w) as usize]
    }

    /// Raw bytes of registers `[head, head + count)`.
    pub fn reg_bytes(&self, head: u32, count: u32) -> &[u8] {
        let start = head as usize * self.vlen_bytes;
        &self.bytes[start..start + count as usize * self.vlen_bytes]
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}
