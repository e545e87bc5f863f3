use std::collections::HashMap;

use crate::isa::{VOp, Vew};

use super::ir::{BufId, DelimKind, IrModule, OpKind, ValueId};
use super::IrError;

struct Parser {
    module: Option<IrModule>,
    names: HashMap<String, ValueId>,
    line: usize,
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, IrError> {
    Err(IrError::Parse { line, msg: msg.into() })
}

fn parse_u64(line: usize, s: &str) -> Result<u64, IrError> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.or_else(|_| perr(line, format!("expected a number, found `{s}`")))
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Splits on commas outside braces.
fn split_args(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

impl Parser {
    fn module(&mut self) -> Result<&mut IrModule, IrError> {
        let line = self.line;
        match self.module.as_mut() {
            Some(m) => Ok(m),
            None => perr(line, "`vew` must come before anything else"),
        }
    }

    fn value(&self, tok: &str) -> Result<ValueId, IrError> {
        let Some(name) = tok.strip_prefix('%') else {
            return perr(self.line, format!("expected a value, found `{tok}`"));
        };
        match self.names.get(name) {
            Some(&v) => Ok(v),
            None => perr(self.line, format!("%{name} is not defined")),
        }
    }

    fn list(&self, tok: &str) -> Result<Vec<ValueId>, IrError> {
        match tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
            Some(inner) => inner.split(',').map(|t| self.value(t.trim())).collect(),
            None => Ok(vec![self.value(tok)?]),
        }
    }

    fn place(&mut self, tok: &str) -> Result<(BufId, u64), IrError> {
        let line = self.line;
        let Some(rest) = tok.strip_prefix('@') else {
            return perr(line, format!("expected a buffer, found `{tok}`"));
        };
        let (name, offset) = match rest.split_once('+') {
            Some((n, o)) => (n.trim(), parse_u64(line, o)?),
            None => (rest, 0),
        };
        match self.module()?.find_buffer(name) {
            Some(b) => Ok((b, offset)),
            None => perr(line, format!("@{name} is not declared")),
        }
    }

    /// Parses `<L x iW>` and returns L and the rest of the line.
    fn ty<'a>(&mut self, s: &'a str) -> Result<(u64, &'a str), IrError> {
        let line = self.line;
        let Some(body) = s.strip_prefix('<') else {
            return perr(line, "expected a `<L x iW>` type");
        };
        let Some((ty, rest)) = body.split_once('>') else {
            return perr(line, "unterminated type");
        };
        let parts: Vec<&str> = ty.split_whitespace().collect();
        let [len, "x", elem] = parts[..] else {
            return perr(line, format!("malformed type `<{ty}>`"));
        };
        let len = parse_u64(line, len)?;
        let Some(bits) = elem.strip_prefix('i') else {
            return perr(line, format!("element type `{elem}` is not an integer"));
        };
        let bits = parse_u64(line, bits)?;
        let vew = self.module()?.vew;
        if bits != vew.bits() as u64 {
            return perr(line, format!("element width {bits} differs from the module width {}", vew.bits()));
        }
        if len == 0 {
            return perr(line, "vector types need at least one element");
        }
        Ok((len, rest.trim()))
    }

    fn directive(&mut self, text: &str) -> Result<bool, IrError> {
        let line = self.line;
        let words: Vec<&str> = text.split_whitespace().collect();
        match words[..] {
            ["vew", bits] => {
                if self.module.is_some() {
                    return perr(line, "`vew` given twice");
                }
                let vew = Vew::from_bits(parse_u64(line, bits)? as u32)
                    .or_else(|e| perr(line, e.to_string()))?;
                self.module = Some(IrModule::new(vew));
            }
            ["vlen", bits] => {
                let bits = parse_u64(line, bits)? as u32;
                if !bits.is_power_of_two() || bits < 8 {
                    return perr(line, format!("vlen {bits} is not a power of two"));
                }
                self.module()?.vlen = Some(bits);
            }
            ["buffer", name, elems, addr] => {
                let Some(name) = name.strip_prefix('@').filter(|n| is_ident(n)) else {
                    return perr(line, format!("bad buffer name `{name}`"));
                };
                let (elems, addr) = (parse_u64(line, elems)?, parse_u64(line, addr)?);
                let m = self.module()?;
                if m.find_buffer(name).is_some() {
                    return perr(line, format!("@{name} declared twice"));
                }
                m.buffer(name, elems, addr);
            }
            ["delimiter", kind, group] => {
                let kind = match kind {
                    "begin" => DelimKind::Begin,
                    "end" => DelimKind::End,
                    _ => return perr(line, format!("delimiter kind `{kind}` is not begin or end")),
                };
                let group = parse_u64(line, group)? as u32;
                self.module()?.push(OpKind::Delimiter { group, kind }, Vec::new(), Vec::new());
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn op(&mut self, text: &str) -> Result<(), IrError> {
        let line = self.line;
        let (lhs, rhs) = match text.split_once('=') {
            Some((l, r)) => (Some(l.trim()), r.trim()),
            None => (None, text),
        };
        let (mnemonic, rest) = rhs.split_once(char::is_whitespace).unwrap_or((rhs, ""));
        let (len, args) = self.ty(rest.trim())?;
        let args = split_args(args);
        let want = |n: usize| -> Result<(), IrError> {
            if args.len() == n {
                Ok(())
            } else {
                perr(line, format!("`{mnemonic}` takes {n} operands, found {}", args.len()))
            }
        };
        let (kind, operands) = match mnemonic {
            "load" => {
                want(1)?;
                let (buf, offset) = self.place(args[0])?;
                (OpKind::Load { buf, offset }, Vec::new())
            }
            "store" => {
                want(2)?;
                let v = self.list(args[0])?;
                let (buf, offset) = self.place(args[1])?;
                (OpKind::Store { buf, offset }, vec![v])
            }
            "redsum" => {
                want(1)?;
                if len != 1 {
                    return perr(line, "redsum has type <1 x iW>");
                }
                (OpKind::RedSum, vec![self.list(args[0])?])
            }
            "gather" | "scatter" => {
                want(2)?;
                let kind = if mnemonic == "gather" { OpKind::Gather } else { OpKind::Scatter };
                (kind, vec![self.list(args[0])?, self.list(args[1])?])
            }
            _ => {
                let Some(op) = VOp::from_name(mnemonic) else {
                    return perr(line, format!("unknown operation `{mnemonic}`"));
                };
                want(2)?;
                let a = self.list(args[0])?;
                if args[1].starts_with('%') || args[1].starts_with('{') {
                    (OpKind::Binary(op), vec![a, self.list(args[1])?])
                } else {
                    let imm: i32 =
                        args[1].parse().or_else(|_| perr(line, format!("bad immediate `{}`", args[1])))?;
                    (OpKind::BinaryImm(op, imm), vec![a])
                }
            }
        };

        let names: Vec<&str> = match lhs {
            Some(l) => l.split(',').map(str::trim).collect(),
            None => Vec::new(),
        };
        if matches!(kind, OpKind::Store { .. }) != names.is_empty() {
            return perr(line, "only store has no result");
        }
        let lens = if names.len() > 1 {
            let Some(vlen) = self.module()?.vlen else {
                return perr(line, "multi-result operations need a `vlen` header");
            };
            let epr = (vlen / self.module()?.vew.bits()) as u64;
            if len.div_ceil(epr) != names.len() as u64 {
                return perr(line, format!("{len} elements split into {} results", names.len()));
            }
            (0..names.len() as u64).map(|j| epr.min(len - j * epr)).collect()
        } else {
            vec![len; names.len()]
        };
        let mut results = Vec::new();
        for (name, len) in names.into_iter().zip(lens) {
            let Some(name) = name.strip_prefix('%').filter(|n| is_ident(n)) else {
                return perr(line, format!("bad result name `{name}`"));
            };
            if self.names.contains_key(name) {
                return perr(line, format!("%{name} defined twice"));
            }
            let v = self.module()?.new_value(name, len);
            self.names.insert(name.to_string(), v);
            results.push(v);
        }
        self.module()?.push(kind, results, operands);
        Ok(())
    }
}

/// Parses and verifies the textual IR.
pub fn parse_ir(text: &str) -> Result<IrModule, IrError> {
    let mut p = Parser { module: None, names: HashMap::new(), line: 0 };
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if !p.directive(t)? {
            p.op(t)?;
        }
    }
    let Some(m) = p.module else {
        return perr(p.line.max(1), "missing `vew` header");
    };
    m.verify()?;
    Ok(m)
}
