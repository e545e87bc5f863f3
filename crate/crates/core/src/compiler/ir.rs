//! SSA intrinsic IR.
//!
//! A module is a list of operations over vector values of a single element
//! width. Every value is defined once; operands name earlier values. After
//! splitting, operands of whole-group operations are lists of per-register
//! members and every operation sits between a pair of delimiters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::isa::{VOp, Vew};

use super::IrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BufId(pub u32);

/// A named memory region of `elems` elements starting at byte `addr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buffer {
    pub name: String,
    pub elems: u64,
    pub addr: u64,
}

/// A vector value of `len` elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Value {
    pub name: String,
    pub len: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DelimKind {
    Begin,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// Loads `len` elements from `buf` starting at element `offset`.
    Load { buf: BufId, offset: u64 },
    Store { buf: BufId, offset: u64 },
    Binary(VOp),
    /// Vector-scalar form with an immediate scalar operand.
    BinaryImm(VOp, i32),
    /// One-element result holding the wraparound sum of the operand.
    RedSum,
    /// `r[i] = data[idx[i]]`; the result has as many elements as `idx`.
    Gather,
    /// `r[idx[i]] = data[i]`; unwritten result elements are unspecified.
    Scatter,
    Delimiter { group: u32, kind: DelimKind },
}

impl OpKind {
    /// Whether the operation can be split into independent per-register
    /// pieces.
    pub fn is_splittable(&self) -> bool {
        matches!(self, OpKind::Load { .. } | OpKind::Store { .. } | OpKind::Binary(_) | OpKind::BinaryImm(..))
    }

    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Load { .. } => "load",
            OpKind::Store { .. } => "store",
            OpKind::Binary(op) | OpKind::BinaryImm(op, _) => op.name(),
            OpKind::RedSum => "redsum",
            OpKind::Gather => "gather",
            OpKind::Scatter => "scatter",
            OpKind::Delimiter { .. } => "delimiter",
        }
    }
}

/// One operation. Each operand is a list of values; the list has one entry
/// except for whole-group operands in a split module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrOp {
    pub kind: OpKind,
    pub results: Vec<ValueId>,
    pub operands: Vec<Vec<ValueId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrModule {
    pub vew: Vew,
    /// Register width the module was split for; absent before splitting.
    pub vlen: Option<u32>,
    pub buffers: Vec<Buffer>,
    pub values: Vec<Value>,
    pub ops: Vec<IrOp>,
}

impl IrModule {
    pub fn new(vew: Vew) -> Self {
        Self { vew, vlen: None, buffers: Vec::new(), values: Vec::new(), ops: Vec::new() }
    }

    pub fn value(&self, id: ValueId) -> &Value {
        &self.values[id.0 as usize]
    }

    pub fn buffer_ref(&self, id: BufId) -> &Buffer {
        &self.buffers[id.0 as usize]
    }

    pub fn find_value(&self, name: &str) -> Option<ValueId> {
        self.values.iter().position(|v| v.name == name).map(|i| ValueId(i as u32))
    }

    pub fn find_buffer(&self, name: &str) -> Option<BufId> {
        self.buffers.iter().position(|b| b.name == name).map(|i| BufId(i as u32))
    }

    /// Total element count of an operand list.
    pub fn operand_len(&self, operand: &[ValueId]) -> u64 {
        operand.iter().map(|&v| self.value(v).len).sum()
    }

    pub fn buffer(&mut self, name: &str, elems: u64, addr: u64) -> BufId {
        self.buffers.push(Buffer { name: name.into(), elems, addr });
        BufId(self.buffers.len() as u32 - 1)
    }

    pub fn new_value(&mut self, name: &str, len: u64) -> ValueId {
        self.values.push(Value { name: name.into(), len });
        ValueId(self.values.len() as u32 - 1)
    }

    pub fn push(&mut self, kind: OpKind, results: Vec<ValueId>, operands: Vec<Vec<ValueId>>) {
        self.ops.push(IrOp { kind, results, operands });
    }

    fn define(&mut self, name: &str, len: u64, kind: OpKind, operands: Vec<Vec<ValueId>>) -> ValueId {
        let v = self.new_value(name, len);
        self.push(kind, vec![v], operands);
        v
    }

    pub fn load(&mut self, name: &str, buf: BufId, offset: u64, len: u64) -> ValueId {
        self.define(name, len, OpKind::Load { buf, offset }, Vec::new())
    }

    pub fn store(&mut self, value: ValueId, buf: BufId, offset: u64) {
        self.push(OpKind::Store { buf, offset }, Vec::new(), vec![vec![value]]);
    }

    pub fn binary(&mut self, name: &str, op: VOp, a: ValueId, b: ValueId) -> ValueId {
        let len = self.value(a).len;
        self.define(name, len, OpKind::Binary(op), vec![vec![a], vec![b]])
    }

    pub fn binary_imm(&mut self, name: &str, op: VOp, a: ValueId, imm: i32) -> ValueId {
        let len = self.value(a).len;
        self.define(name, len, OpKind::BinaryImm(op, imm), vec![vec![a]])
    }

    pub fn redsum(&mut self, name: &str, a: ValueId) -> ValueId {
        self.define(name, 1, OpKind::RedSum, vec![vec![a]])
    }

    pub fn gather(&mut self, name: &str, data: ValueId, idx: ValueId) -> ValueId {
        let len = self.value(idx).len;
        self.define(name, len, OpKind::Gather, vec![vec![data], vec![idx]])
    }

    pub fn scatter(&mut self, name: &str, data: ValueId, idx: ValueId, len: u64) -> ValueId {
        self.define(name, len, OpKind::Scatter, vec![vec![data], vec![idx]])
    }

    /// Checks SSA form, operand shapes, element counts, buffer bounds and
    /// delimiter pairing.
    pub fn verify(&self) -> Result<(), IrError> {
        let err = |op: usize, msg: String| Err(IrError::Verify { op, msg });
        let mut names = BTreeSet::new();
        for v in &self.values {
            if !names.insert(v.name.as_str()) {
                return err(0, format!("value %{} is declared twice", v.name));
            }
        }
        let mut bufs = BTreeSet::new();
        let align = self.vew.bytes() as u64;
        for b in &self.buffers {
            if !bufs.insert(b.name.as_str()) {
                return err(0, format!("buffer @{} is declared twice", b.name));
            }
            if b.addr % align != 0 {
                return err(0, format!("buffer @{} address {:#x} is not {align}-byte aligned", b.name, b.addr));
            }
            if b.addr + b.elems * align > i32::MAX as u64 {
                return err(0, format!("buffer @{} lies beyond the addressable range", b.name));
            }
        }

        let mut defined = vec![false; self.values.len()];
        let mut open: Option<u32> = None;
        let mut seen_groups = BTreeSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            for operand in &op.operands {
                if operand.is_empty() {
                    return err(i, "empty operand list".into());
                }
                for &v in operand {
                    if !defined.get(v.0 as usize).copied().unwrap_or(false) {
                        return err(i, format!("%{} used before definition", self.name_of(v)));
                    }
                }
            }
            for &r in &op.results {
                match defined.get_mut(r.0 as usize) {
                    Some(d) if !*d => *d = true,
                    Some(_) => return err(i, format!("%{} defined twice", self.name_of(r))),
                    None => return err(i, format!("result id {} has no declaration", r.0)),
                }
                if self.value(r).len == 0 {
                    return err(i, format!("%{} has zero elements", self.name_of(r)));
                }
            }
            self.check_shape(i, op)?;
            if let OpKind::Delimiter { group, kind } = op.kind {
                match (kind, open) {
                    (DelimKind::Begin, None) if seen_groups.insert(group) => open = Some(group),
                    (DelimKind::End, Some(g)) if g == group => open = None,
                    _ => return err(i, format!("delimiter {group} is not properly paired")),
                }
            }
        }
        if let Some(g) = open {
            return err(self.ops.len(), format!("delimiter group {g} is never closed"));
        }
        if defined.iter().any(|d| !d) {
            return err(self.ops.len(), "a declared value is never defined".into());
        }
        Ok(())
    }

    fn name_of(&self, v: ValueId) -> &str {
        self.values.get(v.0 as usize).map(|v| v.name.as_str()).unwrap_or("?")
    }

    fn check_shape(&self, i: usize, op: &IrOp) -> Result<(), IrError> {
        let err = |msg: String| Err(IrError::Verify { op: i, msg });
        let (n_res, n_ops) = match op.kind {
            OpKind::Load { .. } => (1, 0),
            OpKind::Store { .. } => (0, 1),
            OpKind::Binary(_) => (1, 2),
            OpKind::BinaryImm(..) | OpKind::RedSum => (1, 1),
            OpKind::Gather | OpKind::Scatter => (usize::MAX, 2),
            OpKind::Delimiter { .. } => (0, 0),
        };
        if op.operands.len() != n_ops {
            return err(format!("{} takes {n_ops} operands", op.kind.name()));
        }
        if n_res == usize::MAX {
            if op.results.is_empty() {
                return err(format!("{} needs a result", op.kind.name()));
            }
        } else if op.results.len() != n_res {
            return err(format!("{} defines {n_res} results", op.kind.name()));
        }
        if op.kind.is_splittable() && op.operands.iter().any(|o| o.len() != 1) {
            return err(format!("{} operands must be single values", op.kind.name()));
        }
        let res_len: u64 = op.results.iter().map(|&r| self.value(r).len).sum();
        let opnd = |k: usize| self.operand_len(&op.operands[k]);
        match op.kind {
            OpKind::Load { buf, offset } | OpKind::Store { buf, offset } => {
                let Some(b) = self.buffers.get(buf.0 as usize) else {
                    return err("unknown buffer".into());
                };
                let len = if matches!(op.kind, OpKind::Load { .. }) { res_len } else { opnd(0) };
                if offset + len > b.elems {
                    return err(format!("access of {len} elements at @{}+{offset} exceeds its {} elements", b.name, b.elems));
                }
            }
            OpKind::Binary(_) => {
                if opnd(0) != res_len || opnd(1) != res_len {
                    return err(format!("operand lengths {} and {} differ from result length {res_len}", opnd(0), opnd(1)));
                }
            }
            OpKind::BinaryImm(..) => {
                if opnd(0) != res_len {
                    return err(format!("operand length {} differs from result length {res_len}", opnd(0)));
                }
            }
            OpKind::RedSum => {
                if res_len != 1 {
                    return err("redsum produces one element".into());
                }
            }
            OpKind::Gather => {
                if res_len != opnd(1) {
                    return err(format!("gather result length {res_len} must equal index length {}", opnd(1)));
                }
            }
            OpKind::Scatter => {
                if opnd(0) != opnd(1) {
                    return err(format!("scatter data length {} must equal index length {}", opnd(0), opnd(1)));
                }
            }
            OpKind::Delimiter { .. } => {}
        }
        Ok(())
    }

    /// Values defined between each delimiter pair, keyed by group id, in
    /// definition order.
    pub fn groups(&self) -> BTreeMap<u32, Vec<ValueId>> {
        let mut out = BTreeMap::new();
        let mut current = None;
        for op in &self.ops {
            match op.kind {
                OpKind::Delimiter { group, kind: DelimKind::Begin } => {
                    current = Some(group);
                    out.entry(group).or_insert_with(Vec::new);
                }
                OpKind::Delimiter { kind: DelimKind::End, .. } => current = None,
                _ => {
                    if let Some(g) = current {
                        out.entry(g).or_insert_with(Vec::new).extend(op.results.iter().copied());
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for IrModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.vew.bits();
        writeln!(f, "vew {w}")?;
        if let Some(vlen) = self.vlen {
            writeln!(f, "vlen {vlen}")?;
        }
        for b in &self.buffers {
            writeln!(f, "buffer @{} {} {:#x}", b.name, b.elems, b.addr)?;
        }
        let list = |vs: &[ValueId]| {
            let names: Vec<String> = vs.iter().map(|&v| format!("%{}", self.value(v).name)).collect();
            if names.len() == 1 {
                names[0].clone()
            } else {
                format!("{{{}}}", names.join(", "))
            }
        };
        let place = |buf: BufId, offset: u64| {
            let name = &self.buffer_ref(buf).name;
            if offset == 0 {
                format!("@{name}")
            } else {
                format!("@{name}+{offset}")
            }
        };
        for op in &self.ops {
            if let OpKind::Delimiter { group, kind } = op.kind {
                let k = if kind == DelimKind::Begin { "begin" } else { "end" };
                writeln!(f, "delimiter {k} {group}")?;
                continue;
            }
            if !op.results.is_empty() {
                let names: Vec<String> = op.results.iter().map(|&r| format!("%{}", self.value(r).name)).collect();
                write!(f, "{} = ", names.join(", "))?;
            }
            let len: u64 = match op.kind {
                OpKind::Store { .. } => self.operand_len(&op.operands[0]),
                _ => op.results.iter().map(|&r| self.value(r).len).sum(),
            };
            write!(f, "{} <{len} x i{w}>", op.kind.name())?;
            match op.kind {
                OpKind::Load { buf, offset } => write!(f, " {}", place(buf, offset))?,
                OpKind::Store { buf, offset } => write!(f, " {}, {}", list(&op.operands[0]), place(buf, offset))?,
                OpKind::BinaryImm(_, imm) => write!(f, " {}, {imm}", list(&op.operands[0]))?,
                _ => {
                    let ops: Vec<String> = op.operands.iter().map(|o| list(o)).collect();
                    write!(f, " {}", ops.join(", "))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IrModule {
        let mut m = IrModule::new(Vew::E16);
        let a = m.buffer("a", 64, 0x1000);
        let out = m.buffer("out", 64, 0x2000);
        let x = m.load("x", a, 0, 64);
        let y = m.binary_imm("y", VOp::Mul, x, 3);
        let z = m.binary("z", VOp::Add, x, y);
        m.store(z, out, 0);
        m
    }

    #[test]
    fn builder_module_verifies() {
        sample().verify().unwrap();
    }

    #[test]
    fn printed_form() {
        let text = sample().to_string();
        assert_eq!(
            text,
            "vew 16\nbuffer @a 64 0x1000\nbuffer @out 64 0x2000\n%x = load <64 x i16> @a\n\
             %y = mul <64 x i16> %x, 3\n%z = add <64 x i16> %x, %y\nstore <64 x i16> %z, @out\n"
        );
    }

    #[test]
    fn use_before_def_rejected() {
        let mut m = sample();
        m.ops.swap(0, 1);
        assert!(matches!(m.verify(), Err(IrError::Verify { op: 0, .. })));
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut m = sample();
        let b = m.find_buffer("a").unwrap();
        let short = m.load("s", b, 0, 8);
        let x = m.find_value("x").unwrap();
        m.binary("bad", VOp::Add, x, short);
        assert!(m.verify().is_err());
    }

    #[test]
    fn out_of_buffer_access_rejected() {
        let mut m = IrModule::new(Vew::E16);
        let a = m.buffer("a", 16, 0);
        m.load("x", a, 8, 16);
        assert!(m.verify().is_err());
    }
}
