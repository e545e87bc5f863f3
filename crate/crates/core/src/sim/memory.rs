use super::TrapCause;

/// Default simulated memory size.
pub const DEFAULT_MEM_BYTES: usize = 16 << 20;

/// Initial memory contents as a list of `(address, bytes)` segments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryImage {
    pub segments: Vec<(u64, Vec<u8>)>,
}

impl MemoryImage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_bytes(&mut self, addr: u64, bytes: Vec<u8>) -> &mut Self {
        self.segments.push((addr, bytes));
        self
    }

    pub fn put_i16s(&mut self, addr: u64, values: &[i16]) -> &mut Self {
        self.put_bytes(addr, values.iter().flat_map(|v| v.to_le_bytes()).collect())
    }

    pub fn put_i32s(&mut self, addr: u64, values: &[i32]) -> &mut Self {
        self.put_bytes(addr, values.iter().flat_map(|v| v.to_le_bytes()).collect())
    }

    pub fn put_u32s(&mut self, addr: u64, values: &[u32]) -> &mut Self {
        self.put_bytes(addr, values.iter().flat_map(|v| v.to_le_bytes()).collect())
    }

    /// One past the highest initialized byte.
    pub fn extent(&self) -> u64 {
        self.segments.iter().map(|(a, b)| a + b.len() as u64).max().unwrap_or(0)
    }
}

/// Flat, byte-addressable, little-endian memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    bytes: Vec<u8>,
}

impl Memory {
    pub fn new(size: usize) -> Self {
        Self { bytes: vec![0; size] }
    }

    pub fn from_image(image: &MemoryImage, size: usize) -> Result<Self, TrapCause> {
        let mut mem = Self::new(size);
        for (addr, data) in &image.segments {
            mem.slice_mut(*addr, data.len() as u64, 1)?.copy_from_slice(data);
        }
        Ok(mem)
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    fn check(&self, addr: u64, len: u64, align: u64) -> Result<std::ops::Range<usize>, TrapCause> {
        if align > 1 && !addr.is_multiple_of(align) {
            return Err(TrapCause::MisalignedAccess { addr, align });
        }
        let end = addr.checked_add(len).filter(|&e| e <= self.bytes.len() as u64);
        match end {
            Some(end) => Ok(addr as usize..end as usize),
            None => Err(TrapCause::MemoryBounds { addr, len }),
        }
    }

    pub fn slice(&self, addr: u64, len: u64, align: u64) -> Result<&[u8], TrapCause> {
        let r = self.check(addr, len, align)?;
        Ok(&self.bytes[r])
    }

    pub fn slice_mut(&mut self, addr: u64, len: u64, align: u64) -> Result<&mut [u8], TrapCause> {
        let r = self.check(addr, len, align)?;
        Ok(&mut self.bytes[r])
    }

    pub fn read_u32(&self, addr: u64) -> Result<u32, TrapCause> {
        let s = self.slice(addr, 4, 4)?;
        Ok(u32::from_le_bytes(s.try_into().expect("4 bytes")))
    }

    pub fn write_u32(&mut self, addr: u64, value: u32) -> Result<(), TrapCause> {
        self.slice_mut(addr, 4, 4)?.copy_from_slice(&value.to_le_bytes());
        Ok(())
    }

    pub fn read_i16s(&self, addr: u64, count: usize) -> Result<Vec<i16>, TrapCause> {
        let s = self.slice(addr, 2 * count as u64, 2)?;
        Ok(s.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect())
    }

    pub fn read_i32s(&self, addr: u64, count: usize) -> Result<Vec<i32>, TrapCause> {
        let s = self.slice(addr, 4 * count as u64, 4)?;
        Ok(s.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip() {
        let mut img = MemoryImage::new();
        img.put_i16s(0x10, &[1, -2, 3]).put_i32s(0x20, &[-7]);
        let mem = Memory::from_image(&img, 64).unwrap();
        assert_eq!(mem.read_i16s(0x10, 3).unwrap(), vec![1, -2, 3]);
        assert_eq!(mem.read_i32s(0x20, 1).unwrap(), vec![-7]);
        assert_eq!(img.extent(), 0x24);
    }

    #[test]
    fn bounds_and_alignment() {
        let mut mem = Memory::new(16);
        assert_eq!(mem.read_u32(2), Err(TrapCause::MisalignedAccess { addr: 2, align: 4 }));
        assert_eq!(mem.write_u32(16, 1), Err(TrapCause::MemoryBounds { addr: 16, len: 4 }));
        assert!(mem.slice(u64::MAX, 2, 1).is_err());
    }
}
