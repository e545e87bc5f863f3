//! Program image: `ZOOZ`, little-endian `u16` version, `u32` instruction
//! count, then one little-endian `u64` word per instruction.

use super::{decode, encode, IsaError, Program};

pub const BINARY_MAGIC: &[u8; 4] = b"ZOOZ";
pub const BINARY_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 4;

pub fn write_binary(program: &Program) -> Result<Vec<u8>, IsaError> {
    let count = u32::try_from(program.instrs.len())
        .map_err(|_| IsaError::Binary("too many instructions".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * program.instrs.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for instr in &program.instrs {
        out.extend_from_slice(&encode(instr)?.to_le_bytes());
    }
    Ok(out)
}

/// Parses a program image. Labels are not stored; the entry point is 0.
pub fn read_binary(bytes: &[u8]) -> Result<Program, IsaError> {
    if bytes.len() < HEADER_LEN {
        return Err(IsaError::Binary(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(IsaError::Binary("missing ZOOZ magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != BINARY_VERSION {
        return Err(IsaError::Binary(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 8 {
        return Err(IsaError::Binary(format!(
            "header declares {count} instructions but {} bytes follow",
            body.len()
        )));
    }
    let instrs = body
        .chunks_exact(8)
        .map(|c| decode(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect::<Result<Vec<_>, _>>()?;
    let program = Program::new(instrs);
    program.check_targets()?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    #[test]
    fn header_layout() {
        let p = assemble("li x1, 4\nvredsum v0, v8, x1\n").unwrap();
        let bytes = write_binary(&p).unwrap();
        assert_eq!(&bytes[..4], b"ZOOZ");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[2, 0, 0, 0]);
        assert_eq!(bytes.len(), 10 + 16);
        assert_eq!(read_binary(&bytes).unwrap().instrs, p.instrs);
    }

    #[test]
    fn truncated_and_corrupt_images_rejected() {
        let p = assemble("li x1, 4\n").unwrap();
        let bytes = write_binary(&p).unwrap();
        assert!(read_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_binary(&bad).is_err());
        let mut bad = bytes;
        bad[10] = 0x7f;
        assert!(matches!(read_binary(&bad), Err(IsaError::Decode { .. })));
    }
}
