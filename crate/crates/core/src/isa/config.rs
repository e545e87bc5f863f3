use std::fmt;

use serde::Serialize;

use super::IsaError;

/// Largest register count addressable by the 13-bit head fields.
pub const HEAD_FIELD_REGS: u32 = 1 << 13;

/// Vector element width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Vew {
    E8,
    E16,
    E32,
}

impl Vew {
    pub const ALL: [Vew; 3] = [Vew::E8, Vew::E16, Vew::E32];

    pub fn bits(self) -> u32 {
        match self {
            Vew::E8 => 8,
            Vew::E16 => 16,
            Vew::E32 => 32,
        }
    }

    pub fn bytes(self) -> u32 {
        self.bits() / 8
    }

    pub fn from_bits(bits: u32) -> Result<Self, IsaError> {
        match bits {
            8 => Ok(Vew::E8),
            16 => Ok(Vew::E16),
            32 => Ok(Vew::E32),
            other => Err(IsaError::Config(format!("element width {other} is not one of 8, 16, 32"))),
        }
    }

    /// Selector value written to CSR 0 by `vsetcsr`.
    pub fn selector(self) -> u64 {
        match self {
            Vew::E8 => 0,
            Vew::E16 => 1,
            Vew::E32 => 2,
        }
    }

    pub fn from_selector(sel: u64) -> Option<Self> {
        match sel {
            0 => Some(Vew::E8),
            1 => Some(Vew::E16),
            2 => Some(Vew::E32),
            _ => None,
        }
    }

    /// Sign-extends the low `bits()` bits of `raw`.
    pub fn sign_extend(self, raw: u64) -> i64 {
        let shift = 64 - self.bits();
        ((raw << shift) as i64) >> shift
    }

    pub fn mask(self) -> u64 {
        (1u64 << self.bits()) - 1
    }
}

impl fmt::Display for Vew {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.bits())
    }
}

/// RVV register-group multiplier (integral values only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Lmul {
    M1,
    M2,
    M4,
    M8,
}

impl Lmul {
    pub const ALL: [Lmul; 4] = [Lmul::M1, Lmul::M2, Lmul::M4, Lmul::M8];

    pub fn factor(self) -> u32 {
        1 << self.log2()
    }

    pub fn log2(self) -> u32 {
        match self {
            Lmul::M1 => 0,
            Lmul::M2 => 1,
            Lmul::M4 => 2,
            Lmul::M8 => 3,
        }
    }

    pub fn from_factor(factor: u32) -> Result<Self, IsaError> {
        match factor {
            1 => Ok(Lmul::M1),
            2 => Ok(Lmul::M2),
            4 => Ok(Lmul::M4),
            8 => Ok(Lmul::M8),
            other => Err(IsaError::Config(format!("lmul {other} is not one of 1, 2, 4, 8"))),
        }
    }

    pub fn from_log2(code: u32) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Lmul {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.factor())
    }
}

/// Zoozve machine parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct VConfig {
    pub vlen_bits: u32,
    pub num_vregs: u32,
    pub vew: Vew,
}

impl VConfig {
    pub const DEFAULT_VREGS: u32 = 2048;

    pub fn new(vlen_bits: u32, num_vregs: u32, vew: Vew) -> Result<Self, IsaError> {
        check_vlen(vlen_bits, vew)?;
        if num_vregs < 32 {
            return Err(IsaError::Config(format!("register count {num_vregs} is below the minimum of 32")));
        }
        // CSR 1 widens heads by 16 bits at most.
        if num_vregs > HEAD_FIELD_REGS << 16 {
            return Err(IsaError::Config(format!("register count {num_vregs} is not addressable")));
        }
        Ok(Self { vlen_bits, num_vregs, vew })
    }

    pub fn elements_per_register(&self) -> u32 {
        self.vlen_bits / self.vew.bits()
    }

    pub fn vlen_bytes(&self) -> u32 {
        self.vlen_bits / 8
    }

    pub fn with_vew(self, vew: Vew) -> Result<Self, IsaError> {
        Self::new(self.vlen_bits, self.num_vregs, vew)
    }
}

impl Default for VConfig {
    fn default() -> Self {
        Self { vlen_bits: 512, num_vregs: Self::DEFAULT_VREGS, vew: Vew::E16 }
    }
}

/// RVV baseline machine parameters. The register count is fixed at 32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RvvConfig {
    pub vlen_bits: u32,
    pub vew: Vew,
    pub lmul: Lmul,
}

impl RvvConfig {
    pub const NUM_VREGS: u32 = 32;

    pub fn new(vlen_bits: u32, vew: Vew, lmul: Lmul) -> Result<Self, IsaError> {
        check_vlen(vlen_bits, vew)?;
        Ok(Self { vlen_bits, vew, lmul })
    }

    /// Per-strip element capacity.
    pub fn vlmax(&self) -> u32 {
        self.lmul.factor() * self.vlen_bits / self.vew.bits()
    }

    pub fn vlen_bytes(&self) -> u32 {
        self.vlen_bits / 8
    }
}

impl Default for RvvConfig {
    fn default() -> Self {
        Self { vlen_bits: 512, vew: Vew::E16, lmul: Lmul::M1 }
    }
}

fn check_vlen(vlen_bits: u32, vew: Vew) -> Result<(), IsaError> {
    if vlen_bits < 8 || !vlen_bits.is_power_of_two() {
        return Err(IsaError::Config(format!(
            "vlen {vlen_bits} must be a power of two and a multiple of 8"
        )));
    }
    if vlen_bits < vew.bits() {
        return Err(IsaError::Config(format!("vlen {vlen_bits} is narrower than element width {}", vew.bits())));
    }
    Ok(())
}
