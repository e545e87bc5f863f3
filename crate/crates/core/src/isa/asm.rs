//! Text assembler and disassembler. The grammar is documented in
//! `docs/isa.md`: one instruction per line, optional `label:` prefixes,
//! `#` comments.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{BranchCond, Instruction, IsaError, Lmul, Program, ScalarOp, VOp, VReg, Vew, XReg};

const RVV_PREFIX: &str = "rvv.";

struct Line<'a> {
    number: usize,
    mnemonic: &'a str,
    operands: Vec<&'a str>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> IsaError {
    IsaError::Parse { line, msg: msg.into() }
}

fn is_label_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Assembles source text into a program with resolved labels.
pub fn assemble(text: &str) -> Result<Program, IsaError> {
    let mut labels: BTreeMap<String, u32> = BTreeMap::new();
    let mut lines = Vec::new();

    // Pass 1: strip comments, collect labels and instruction lines.
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let mut rest = raw.split('#').next().unwrap_or("").trim();
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_label_name(name) {
                break;
            }
            if labels.insert(name.to_string(), lines.len() as u32).is_some() {
                return Err(parse_err(number, format!("duplicate label `{name}`")));
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let (mnemonic, ops) = match rest.find(char::is_whitespace) {
            Some(sp) => (&rest[..sp], rest[sp..].trim()),
            None => (rest, ""),
        };
        let operands = if ops.is_empty() { Vec::new() } else { ops.split(',').map(str::trim).collect() };
        lines.push(Line { number, mnemonic, operands });
    }

    // Pass 2: encode operands, resolving labels and tracking the textual
    // lmul for the rvv alignment rule.
    let mut instrs = Vec::with_capacity(lines.len());
    let mut lmul = Lmul::M1;
    for line in &lines {
        let instr = parse_line(line, &labels)?;
        if let Instruction::VSetVli { lmul: l, .. } = instr {
            lmul = l;
        }
        if instr.is_rvv() {
            // The reduction's accumulator and destination are single registers.
            let groups = match instr {
                Instruction::RvvRedSum { vs2, .. } => vec![vs2],
                _ => instr.vector_fields(),
            };
            for r in groups {
                if r.index() % lmul.factor() != 0 {
                    return Err(parse_err(
                        line.number,
                        format!("{r} is not aligned to lmul {}", lmul.factor()),
                    ));
                }
            }
        }
        instrs.push(instr);
    }
    Ok(Program { instrs, labels, entry: 0 })
}

fn expect_count(line: &Line, n: usize) -> Result<(), IsaError> {
    if line.operands.len() != n {
        return Err(parse_err(
            line.number,
            format!("`{}` takes {n} operands, found {}", line.mnemonic, line.operands.len()),
        ));
    }
    Ok(())
}

fn xreg(line: &Line, s: &str) -> Result<XReg, IsaError> {
    s.strip_prefix('x')
        .and_then(|n| n.parse::<u8>().ok())
        .filter(|&n| n < 32)
        .map(XReg)
        .ok_or_else(|| parse_err(line.number, format!("expected scalar register, found `{s}`")))
}

fn vreg(line: &Line, s: &str, limit: u32) -> Result<VReg, IsaError> {
    s.strip_prefix('v')
        .and_then(|n| n.parse::<u32>().ok())
        .filter(|&n| n < limit)
        .map(|n| VReg(n as u16))
        .ok_or_else(|| parse_err(line.number, format!("expected vector register below v{limit}, found `{s}`")))
}

fn int(line: &Line, s: &str) -> Result<i64, IsaError> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let value = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16)
    } else {
        body.parse::<i64>()
    }
    .map_err(|_| parse_err(line.number, format!("expected integer, found `{s}`")))?;
    Ok(if neg { -value } else { value })
}

fn imm32(line: &Line, s: &str) -> Result<i32, IsaError> {
    let v = int(line, s)?;
    i32::try_from(v).map_err(|_| parse_err(line.number, format!("immediate {v} does not fit in 32 bits")))
}

fn label(line: &Line, s: &str, labels: &BTreeMap<String, u32>) -> Result<u32, IsaError> {
    labels.get(s).copied().ok_or_else(|| parse_err(line.number, format!("unresolved label `{s}`")))
}

/// `offset(xN)`
fn mem_operand(line: &Line, s: &str) -> Result<(i32, XReg), IsaError> {
    let open = s.find('(').ok_or_else(|| parse_err(line.number, format!("expected offset(reg), found `{s}`")))?;
    let close = s
        .strip_suffix(')')
        .ok_or_else(|| parse_err(line.number, format!("expected offset(reg), found `{s}`")))?;
    let off_text = s[..open].trim();
    let offset = if off_text.is_empty() { 0 } else { imm32(line, off_text)? };
    let base = xreg(line, close[open + 1..].trim())?;
    Ok((offset, base))
}

const ZOOZVE_HEADS: u32 = 1 << 13;
const RVV_REGS: u32 = 32;

fn parse_line(line: &Line, labels: &BTreeMap<String, u32>) -> Result<Instruction, IsaError> {
    use Instruction::*;
    let ops = &line.operands;
    let m = line.mnemonic;

    if let Some(rvv) = m.strip_prefix(RVV_PREFIX) {
        let v = |s: &str| vreg(line, s, RVV_REGS);
        return Ok(match rvv {
            "vsetvli" => {
                expect_count(line, 4)?;
                let vew = ops[2]
                    .strip_prefix('e')
                    .and_then(|b| b.parse::<u32>().ok())
                    .and_then(|b| Vew::from_bits(b).ok())
                    .ok_or_else(|| parse_err(line.number, format!("bad element width `{}`", ops[2])))?;
                let lmul = ops[3]
                    .strip_prefix('m')
                    .and_then(|b| b.parse::<u32>().ok())
                    .and_then(|b| Lmul::from_factor(b).ok())
                    .ok_or_else(|| parse_err(line.number, format!("bad lmul `{}`", ops[3])))?;
                VSetVli { rd: xreg(line, ops[0])?, rs_avl: xreg(line, ops[1])?, vew, lmul }
            }
            "vle" => {
                expect_count(line, 2)?;
                RvvLoad { vd: v(ops[0])?, rs_addr: xreg(line, ops[1])? }
            }
            "vse" => {
                expect_count(line, 2)?;
                RvvStore { vs3: v(ops[0])?, rs_addr: xreg(line, ops[1])? }
            }
            "vredsum" => {
                expect_count(line, 3)?;
                RvvRedSum { vd: v(ops[0])?, vs2: v(ops[1])?, vs1: v(ops[2])? }
            }
            "vrgather" => {
                expect_count(line, 3)?;
                VRGatherVV { vd: v(ops[0])?, vs2: v(ops[1])?, vs1: v(ops[2])? }
            }
            other => {
                let (op, vx) = arith_mnemonic(other).ok_or_else(|| unknown(line))?;
                expect_count(line, 3)?;
                if vx {
                    RvvArithVX { op, vd: v(ops[0])?, vs2: v(ops[1])?, rs2: xreg(line, ops[2])? }
                } else {
                    RvvArithVV { op, vd: v(ops[0])?, vs1: v(ops[1])?, vs2: v(ops[2])? }
                }
            }
        });
    }

    let v = |s: &str| vreg(line, s, ZOOZVE_HEADS);
    Ok(match m {
        "vload" => {
            expect_count(line, 3)?;
            VLoad { vd: v(ops[0])?, rs_addr: xreg(line, ops[1])?, rs_avl: xreg(line, ops[2])? }
        }
        "vstore" => {
            expect_count(line, 3)?;
            VStore { vs3: v(ops[0])?, rs_addr: xreg(line, ops[1])?, rs_avl: xreg(line, ops[2])? }
        }
        "vredsum" => {
            expect_count(line, 3)?;
            VRedSum { vd: v(ops[0])?, vs2: v(ops[1])?, rs_avl: xreg(line, ops[2])? }
        }
        "vgather" => {
            expect_count(line, 4)?;
            VGather { vd: v(ops[0])?, vs1: v(ops[1])?, vs2: v(ops[2])?, rs_avl: xreg(line, ops[3])? }
        }
        "vscatter" => {
            expect_count(line, 4)?;
            VScatter { vd: v(ops[0])?, vs1: v(ops[1])?, vs2: v(ops[2])?, rs_avl: xreg(line, ops[3])? }
        }
        "vsetcsr" => {
            expect_count(line, 2)?;
            let csr = int(line, ops[0])?;
            if !(0..=1).contains(&csr) {
                return Err(parse_err(line.number, format!("csr {csr} is not defined")));
            }
            VSetCsr { csr: csr as u8, rs_value: xreg(line, ops[1])? }
        }
        "li" => {
            expect_count(line, 2)?;
            Li { rd: xreg(line, ops[0])?, imm: imm32(line, ops[1])? }
        }
        "add" | "sub" | "mul" => {
            expect_count(line, 3)?;
            let op = ScalarOp::ALL.into_iter().find(|o| o.name() == m).expect("matched above");
            Alu { op, rd: xreg(line, ops[0])?, rs1: xreg(line, ops[1])?, rs2: xreg(line, ops[2])? }
        }
        "slli" => {
            expect_count(line, 3)?;
            let shamt = int(line, ops[2])?;
            if !(0..=63).contains(&shamt) {
                return Err(parse_err(line.number, format!("shift amount {shamt} out of range")));
            }
            Slli { rd: xreg(line, ops[0])?, rs1: xreg(line, ops[1])?, shamt: shamt as u8 }
        }
        "bne" | "bge" => {
            expect_count(line, 3)?;
            let cond = if m == "bne" { BranchCond::Ne } else { BranchCond::Ge };
            Branch { cond, rs1: xreg(line, ops[0])?, rs2: xreg(line, ops[1])?, target: label(line, ops[2], labels)? }
        }
        "jal" => {
            expect_count(line, 2)?;
            Jal { rd: xreg(line, ops[0])?, target: label(line, ops[1], labels)? }
        }
        "lw" => {
            expect_count(line, 2)?;
            let (offset, rs1) = mem_operand(line, ops[1])?;
            Lw { rd: xreg(line, ops[0])?, rs1, offset }
        }
        "sw" => {
            expect_count(line, 2)?;
            let (offset, rs1) = mem_operand(line, ops[1])?;
            Sw { rs2: xreg(line, ops[0])?, rs1, offset }
        }
        other => {
            let (op, vx) = arith_mnemonic(other).ok_or_else(|| unknown(line))?;
            expect_count(line, 4)?;
            if vx {
                VArithVX { op, vd: v(ops[0])?, vs2: v(ops[1])?, rs2: xreg(line, ops[2])?, rs_avl: xreg(line, ops[3])? }
            } else {
                VArithVV { op, vd: v(ops[0])?, vs1: v(ops[1])?, vs2: v(ops[2])?, rs_avl: xreg(line, ops[3])? }
            }
        }
    })
}

fn unknown(line: &Line) -> IsaError {
    parse_err(line.number, format!("unknown mnemonic `{}`", line.mnemonic))
}

/// `vadd` / `vadd.vx` style mnemonics.
fn arith_mnemonic(m: &str) -> Option<(VOp, bool)> {
    let body = m.strip_prefix('v')?;
    let (name, vx) = match body.strip_suffix(".vx") {
        Some(n) => (n, true),
        None => (body, false),
    };
    VOp::from_name(name).map(|op| (op, vx))
}

/// Formats a single instruction. Branch targets are rendered through
/// `target_name`.
pub fn format_instruction(instr: &Instruction, target_name: &dyn Fn(u32) -> String) -> String {
    use Instruction::*;
    match *instr {
        VLoad { vd, rs_addr, rs_avl } => format!("vload {vd}, {rs_addr}, {rs_avl}"),
        VStore { vs3, rs_addr, rs_avl } => format!("vstore {vs3}, {rs_addr}, {rs_avl}"),
        VArithVV { op, vd, vs1, vs2, rs_avl } => format!("v{} {vd}, {vs1}, {vs2}, {rs_avl}", op.name()),
        VArithVX { op, vd, vs2, rs2, rs_avl } => format!("v{}.vx {vd}, {vs2}, {rs2}, {rs_avl}", op.name()),
        VRedSum { vd, vs2, rs_avl } => format!("vredsum {vd}, {vs2}, {rs_avl}"),
        VGather { vd, vs1, vs2, rs_avl } => format!("vgather {vd}, {vs1}, {vs2}, {rs_avl}"),
        VScatter { vd, vs1, vs2, rs_avl } => format!("vscatter {vd}, {vs1}, {vs2}, {rs_avl}"),
        VSetCsr { csr, rs_value } => format!("vsetcsr {csr}, {rs_value}"),
        Li { rd, imm } => format!("li {rd}, {imm}"),
        Alu { op, rd, rs1, rs2 } => format!("{} {rd}, {rs1}, {rs2}", op.name()),
        Slli { rd, rs1, shamt } => format!("slli {rd}, {rs1}, {shamt}"),
        Branch { cond, rs1, rs2, target } => format!("{} {rs1}, {rs2}, {}", cond.name(), target_name(target)),
        Jal { rd, target } => format!("jal {rd}, {}", target_name(target)),
        Lw { rd, rs1, offset } => format!("lw {rd}, {offset}({rs1})"),
        Sw { rs2, rs1, offset } => format!("sw {rs2}, {offset}({rs1})"),
        VSetVli { rd, rs_avl, vew, lmul } => format!("rvv.vsetvli {rd}, {rs_avl}, {vew}, {lmul}"),
        RvvLoad { vd, rs_addr } => format!("rvv.vle {vd}, {rs_addr}"),
        RvvStore { vs3, rs_addr } => format!("rvv.vse {vs3}, {rs_addr}"),
        RvvArithVV { op, vd, vs1, vs2 } => format!("rvv.v{} {vd}, {vs1}, {vs2}", op.name()),
        RvvArithVX { op, vd, vs2, rs2 } => format!("rvv.v{}.vx {vd}, {vs2}, {rs2}", op.name()),
        RvvRedSum { vd, vs2, vs1 } => format!("rvv.vredsum {vd}, {vs2}, {vs1}"),
        VRGatherVV { vd, vs2, vs1 } => format!("rvv.vrgather {vd}, {vs2}, {vs1}"),
    }
}

/// Renders a program back to assembly text. Branch targets without a label
/// get a generated `.L<index>` name.
pub fn disassemble(program: &Program) -> String {
    let mut by_index: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for (name, &idx) in &program.labels {
        by_index.entry(idx).or_default().push(name);
    }
    let mut generated: HashMap<u32, String> = HashMap::new();
    for instr in &program.instrs {
        if let Some(t) = instr.branch_target() {
            if !by_index.contains_key(&t) {
                generated.entry(t).or_insert_with(|| {
                    let mut name = format!(".L{t}");
                    while program.labels.contains_key(&name) {
                        name.push('_');
                    }
                    name
                });
            }
        }
    }
    let target_name = |t: u32| -> String {
        by_index
            .get(&t)
            .and_then(|names| names.first())
            .map(|s| s.to_string())
            .or_else(|| generated.get(&t).cloned())
            .unwrap_or_else(|| format!(".L{t}"))
    };

    let mut out = String::new();
    let emit_labels = |out: &mut String, idx: u32| {
        if let Some(names) = by_index.get(&idx) {
            for n in names {
                let _ = writeln!(out, "{n}:");
            }
        }
        if let Some(n) = generated.get(&idx) {
            let _ = writeln!(out, "{n}:");
        }
    };
    for (idx, instr) in program.instrs.iter().enumerate() {
        emit_labels(&mut out, idx as u32);
        let _ = writeln!(out, "    {}", format_instruction(instr, &target_name));
    }
    emit_labels(&mut out, program.instrs.len() as u32);
    out
}
