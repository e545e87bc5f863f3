//! Program generators for the three benchmark kernels on both machines.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compiler::{compile, IrModule};
use crate::isa::{assemble, Lmul, Program, RvvConfig, VConfig, VOp, Vew};
use crate::sim::MemoryImage;

use super::reference::{axpy_reference, bit_reverse, dot_reference, fft_reference, twiddles};
use super::{BenchError, Isa, Kernel};

pub const DOT_A: u64 = 0x1_0000;
pub const DOT_B: u64 = 0x2_0000;
pub const DOT_OUT: u64 = 0x3_0000;
pub const AXPY_X: u64 = 0x1_0000;
pub const AXPY_Y: u64 = 0x2_0000;
/// First byte of the FFT data area; tables follow in allocation order.
pub const FFT_BASE: u64 = 0x1_0000;

/// Q15 rounding constant added before the 15-bit shift.
const ROUND: i32 = 1 << 14;

/// Zoozve machine used for `kernel`.
pub fn zoozve_config(kernel: Kernel) -> VConfig {
    let vew = if kernel == Kernel::Fft { Vew::E32 } else { Vew::E16 };
    VConfig::new(512, VConfig::DEFAULT_VREGS, vew).expect("valid configuration")
}

/// RVV baseline machine used for `kernel`: 64-element strips for the dot
/// product, 256 for axpy, 64 for the FFT.
pub fn rvv_config(kernel: Kernel) -> RvvConfig {
    let (vew, lmul) = match kernel {
        Kernel::Dotproduct => (Vew::E16, Lmul::M2),
        Kernel::Axpy => (Vew::E16, Lmul::M8),
        Kernel::Fft => (Vew::E32, Lmul::M4),
    };
    RvvConfig::new(512, vew, lmul).expect("valid configuration")
}

/// A span of elements in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub addr: u64,
    pub len: usize,
    pub vew: Vew,
}

/// A ready-to-run program with its memory image and result regions.
#[derive(Debug, Clone)]
pub struct BuiltKernel {
    pub program: Program,
    pub image: MemoryImage,
    pub outputs: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelData {
    Dot { a: Vec<i16>, b: Vec<i16> },
    Axpy { alpha: i16, x: Vec<i16>, y: Vec<i16> },
    Fft { re: Vec<i32>, im: Vec<i32> },
}

impl KernelData {
    /// Random inputs of size `n` drawn from `seed`. FFT samples stay within
    /// half of full Q15 scale.
    pub fn random(kernel: Kernel, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match kernel {
            Kernel::Dotproduct => Self::Dot {
                a: (0..n).map(|_| rng.gen()).collect(),
                b: (0..n).map(|_| rng.gen()).collect(),
            },
            Kernel::Axpy => Self::Axpy {
                alpha: rng.gen(),
                x: (0..n).map(|_| rng.gen()).collect(),
                y: (0..n).map(|_| rng.gen()).collect(),
            },
            Kernel::Fft => Self::Fft {
                re: (0..n).map(|_| rng.gen_range(-16384..=16384)).collect(),
                im: (0..n).map(|_| rng.gen_range(-16384..=16384)).collect(),
            },
        }
    }

    pub fn kernel(&self) -> Kernel {
        match self {
            Self::Dot { .. } => Kernel::Dotproduct,
            Self::Axpy { .. } => Kernel::Axpy,
            Self::Fft { .. } => Kernel::Fft,
        }
    }

    /// Expected contents of each output region.
    pub fn expected(&self) -> Vec<Vec<i64>> {
        let widen16 = |v: &[i16]| v.iter().map(|&x| x as i64).collect::<Vec<_>>();
        let widen32 = |v: &[i32]| v.iter().map(|&x| x as i64).collect::<Vec<_>>();
        match self {
            Self::Dot { a, b } => vec![vec![dot_reference(a, b) as i64]],
            Self::Axpy { alpha, x, y } => vec![widen16(&axpy_reference(*alpha, x, y))],
            Self::Fft { re, im } => {
                let (r, i) = fft_reference(re, im);
                vec![widen32(&r), widen32(&i)]
            }
        }
    }
}

fn asm(text: &str) -> Result<Program, BenchError> {
    assemble(text).map_err(|e| BenchError::Generate(format!("generated assembly rejected: {e}")))
}

pub fn dot_ir(n: u64) -> IrModule {
    let mut m = IrModule::new(Vew::E16);
    let a = m.buffer("a", n, DOT_A);
    let b = m.buffer("b", n, DOT_B);
    let out = m.buffer("out", 1, DOT_OUT);
    let va = m.load("a", a, 0, n);
    let vb = m.load("b", b, 0, n);
    let p = m.binary("p", VOp::Mul, va, vb);
    let s = m.redsum("s", p);
    m.store(s, out, 0);
    m
}

pub fn axpy_ir(n: u64, alpha: i16) -> IrModule {
    let mut m = IrModule::new(Vew::E16);
    let x = m.buffer("x", n, AXPY_X);
    let y = m.buffer("y", n, AXPY_Y);
    let vx = m.load("x", x, 0, n);
    let vy = m.load("y", y, 0, n);
    let ax = m.binary_imm("ax", VOp::Mul, vx, alpha as i32);
    let r = m.binary("r", VOp::Add, ax, vy);
    m.store(r, y, 0);
    m
}

fn rvv_dot_asm(n: usize) -> String {
    format!(
        "    li x10, {n}
    li x11, {DOT_A:#x}
    li x12, {DOT_B:#x}
loop:
    rvv.vsetvli x5, x10, e16, m2
    rvv.vle v0, x11
    rvv.vle v2, x12
    rvv.vmul v4, v0, v2
    rvv.vredsum v6, v4, v6
    slli x6, x5, 1
    add x11, x11, x6
    add x12, x12, x6
    sub x10, x10, x5
    bne x10, x0, loop
    li x13, {DOT_OUT:#x}
    rvv.vse v6, x13
"
    )
}

fn rvv_axpy_asm(n: usize, alpha: i16) -> String {
    format!(
        "    li x10, {n}
    li x11, {AXPY_X:#x}
    li x12, {AXPY_Y:#x}
    li x7, {alpha}
loop:
    rvv.vsetvli x5, x10, e16, m8
    rvv.vle v0, x11
    rvv.vle v8, x12
    rvv.vmul.vx v16, v0, x7
    rvv.vadd v8, v16, v8
    rvv.vse v8, x12
    slli x6, x5, 1
    add x11, x11, x6
    add x12, x12, x6
    sub x10, x10, x5
    bne x10, x0, loop
"
    )
}

pub fn gen_dotproduct(a: &[i16], b: &[i16], isa: Isa) -> Result<BuiltKernel, BenchError> {
    let n = a.len();
    let program = match isa {
        Isa::Zoozve => compile(&dot_ir(n as u64), &zoozve_config(Kernel::Dotproduct))?.program,
        Isa::Rvv => asm(&rvv_dot_asm(n))?,
    };
    let mut image = MemoryImage::new();
    image.put_i16s(DOT_A, a).put_i16s(DOT_B, b);
    Ok(BuiltKernel { program, image, outputs: vec![Region { addr: DOT_OUT, len: 1, vew: Vew::E16 }] })
}

pub fn gen_axpy(alpha: i16, x: &[i16], y: &[i16], isa: Isa) -> Result<BuiltKernel, BenchError> {
    let n = x.len();
    let program = match isa {
        Isa::Zoozve => compile(&axpy_ir(n as u64, alpha), &zoozve_config(Kernel::Axpy))?.program,
        Isa::Rvv => asm(&rvv_axpy_asm(n, alpha))?,
    };
    let mut image = MemoryImage::new();
    image.put_i16s(AXPY_X, x).put_i16s(AXPY_Y, y);
    Ok(BuiltKernel { program, image, outputs: vec![Region { addr: AXPY_Y, len: n, vew: Vew::E16 }] })
}

/// Bump allocator for FFT tables, 64-byte aligned.
struct Layout {
    next: u64,
    image: MemoryImage,
}

impl Layout {
    fn new() -> Self {
        Self { next: FFT_BASE, image: MemoryImage::new() }
    }

    fn put(&mut self, values: &[i32]) -> u64 {
        let addr = self.next;
        self.image.put_i32s(addr, values);
        self.next = (addr + 4 * values.len() as u64).next_multiple_of(64);
        addr
    }

    fn reserve(&mut self, len: usize) -> u64 {
        self.put(&vec![0; len])
    }
}

/// Butterfly ordering used by the register-resident FFT: at stage `s` the
/// first half of the vector holds every butterfly's top input and the
/// second half the matching bottom inputs.
fn stage_layout(n: usize, s: u32) -> Vec<usize> {
    let m = 1usize << s;
    let half = n / 2;
    let mut order = vec![0; n];
    for b in 0..half {
        let top = (b / m) * 2 * m + b % m;
        order[b] = top;
        order[half + b] = top + m;
    }
    order
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (q, &p) in perm.iter().enumerate() {
        inv[p] = q;
    }
    inv
}

fn check_fft_size(n: usize, isa: Isa) -> Result<(), BenchError> {
    let epr = 512 / 32;
    if !n.is_power_of_two() || n < 2 * epr {
        return Err(BenchError::Size { kernel: Kernel::Fft, n: n as u64, msg: "must be a power of two of at least 32".into() });
    }
    let regs = 8 * n / epr;
    let limit = zoozve_config(Kernel::Fft).num_vregs as usize;
    if isa == Isa::Zoozve && regs > limit {
        return Err(BenchError::Size {
            kernel: Kernel::Fft,
            n: n as u64,
            msg: format!("needs {regs} registers but the file has {limit}"),
        });
    }
    Ok(())
}

fn zoozve_fft(re: &[i32], im: &[i32]) -> (String, Layout, Region, Region) {
    let n = re.len();
    let stages = n.trailing_zeros();
    let r = n / 16;
    let h = r / 2;
    let (xre, xim, yre, yim, g) = (0, r, 2 * r, 3 * r, 4 * r);
    let (wre, wim, p1, p2, p3, p4) = (5 * r, 5 * r + h, 6 * r, 6 * r + h, 7 * r, 7 * r + h);
    let (w_re, w_im) = twiddles(n);

    let mut mem = Layout::new();
    let in_re = mem.put(re);
    let in_im = mem.put(im);
    let out_re = mem.reserve(n);
    let out_im = mem.reserve(n);
    let layouts: Vec<Vec<usize>> = (0..stages).map(|s| stage_layout(n, s)).collect();
    let g_init: Vec<i32> = layouts[0].iter().map(|&p| bit_reverse(p, stages) as i32).collect();
    let g_init = mem.put(&g_init);

    let mut text = String::new();
    let mut emit = |line: String| {
        text.push_str("    ");
        text.push_str(&line);
        text.push('\n');
    };
    emit("li x8, 2".into());
    emit("vsetcsr 0, x8".into());
    emit(format!("li x10, {}", n / 2));
    emit(format!("li x11, {n}"));
    emit(format!("li x12, {ROUND}"));
    emit("li x13, 15".into());
    emit("li x14, 1".into());
    emit(format!("li x6, {in_re:#x}"));
    emit(format!("vload v{yre}, x6, x11"));
    emit(format!("li x6, {in_im:#x}"));
    emit(format!("vload v{yim}, x6, x11"));
    emit(format!("li x6, {g_init:#x}"));
    emit(format!("vload v{g}, x6, x11"));
    emit(format!("vgather v{xre}, v{yre}, v{g}, x11"));
    emit(format!("vgather v{xim}, v{yim}, v{g}, x11"));

    for s in 0..stages {
        let m = 1usize << s;
        let step = n / (2 * m);
        let wr: Vec<i32> = (0..n / 2).map(|b| w_re[(b % m) * step]).collect();
        let wi: Vec<i32> = (0..n / 2).map(|b| w_im[(b % m) * step]).collect();
        let here = inverse(&layouts[s as usize]);
        let next: Vec<i32> = if s + 1 < stages {
            layouts[s as usize + 1].iter().map(|&p| here[p] as i32).collect()
        } else {
            here.iter().map(|&q| q as i32).collect()
        };
        let (wr, wi, next) = (mem.put(&wr), mem.put(&wi), mem.put(&next));
        let (bre, bim) = (xre + h, xim + h);
        emit(format!("li x6, {wr:#x}"));
        emit(format!("vload v{wre}, x6, x10"));
        emit(format!("li x6, {wi:#x}"));
        emit(format!("vload v{wim}, x6, x10"));
        emit(format!("li x6, {next:#x}"));
        emit(format!("vload v{g}, x6, x11"));
        emit(format!("vmul v{p1}, v{bre}, v{wre}, x10"));
        emit(format!("vmul v{p2}, v{bim}, v{wim}, x10"));
        emit(format!("vsub v{p1}, v{p1}, v{p2}, x10"));
        emit(format!("vadd.vx v{p1}, v{p1}, x12, x10"));
        emit(format!("vsra.vx v{p1}, v{p1}, x13, x10"));
        emit(format!("vmul v{p3}, v{bre}, v{wim}, x10"));
        emit(format!("vmul v{p4}, v{bim}, v{wre}, x10"));
        emit(format!("vadd v{p3}, v{p3}, v{p4}, x10"));
        emit(format!("vadd.vx v{p3}, v{p3}, x12, x10"));
        emit(format!("vsra.vx v{p3}, v{p3}, x13, x10"));
        emit(format!("vadd v{yre}, v{xre}, v{p1}, x10"));
        emit(format!("vsub v{}, v{xre}, v{p1}, x10", yre + h));
        emit(format!("vadd v{yim}, v{xim}, v{p3}, x10"));
        emit(format!("vsub v{}, v{xim}, v{p3}, x10", yim + h));
        emit(format!("vsra.vx v{yre}, v{yre}, x14, x11"));
        emit(format!("vsra.vx v{yim}, v{yim}, x14, x11"));
        emit(format!("vgather v{xre}, v{yre}, v{g}, x11"));
        emit(format!("vgather v{xim}, v{yim}, v{g}, x11"));
    }
    emit(format!("li x6, {out_re:#x}"));
    emit(format!("vstore v{xre}, x6, x11"));
    emit(format!("li x6, {out_im:#x}"));
    emit(format!("vstore v{xim}, x6, x11"));
    let regions = (Region { addr: out_re, len: n, vew: Vew::E32 }, Region { addr: out_im, len: n, vew: Vew::E32 });
    (text, mem, regions.0, regions.1)
}

fn rvv_fft(re: &[i32], im: &[i32]) -> (String, Layout, Region, Region) {
    let n = re.len();
    let stages = n.trailing_zeros();
    let vlmax = rvv_config(Kernel::Fft).vlmax() as usize;
    let (w_re, w_im) = twiddles(n);

    let mut mem = Layout::new();
    let in_re = mem.put(re);
    let in_im = mem.put(im);
    let work_re = mem.reserve(n);
    let work_im = mem.reserve(n);
    let gather_path = n <= vlmax;
    let table: Vec<i32> = (0..n)
        .map(|i| {
            let src = bit_reverse(i, stages) as i32;
            if gather_path {
                src
            } else {
                4 * src
            }
        })
        .collect();
    let table = mem.put(&table);

    let mut t = String::new();
    t.push_str(&format!("    li x13, {ROUND}\n    li x14, 15\n    li x21, 1\n"));
    if gather_path {
        let _ = write!(
            t,
            "    li x10, {n}
    rvv.vsetvli x5, x10, e32, m4
    li x6, {table:#x}
    rvv.vle v0, x6
    li x6, {in_re:#x}
    rvv.vle v4, x6
    rvv.vrgather v8, v4, v0
    li x6, {work_re:#x}
    rvv.vse v8, x6
    li x6, {in_im:#x}
    rvv.vle v4, x6
    rvv.vrgather v8, v4, v0
    li x6, {work_im:#x}
    rvv.vse v8, x6
"
        );
    } else {
        let _ = write!(
            t,
            "    li x26, 0
    li x27, {}
    li x28, 4
bitrev:
    lw x29, {table}(x26)
    lw x30, {in_re}(x29)
    sw x30, {work_re}(x26)
    lw x30, {in_im}(x29)
    sw x30, {work_im}(x26)
    add x26, x26, x28
    bne x26, x27, bitrev
",
            4 * n
        );
    }

    for s in 0..stages {
        let m = 1usize << s;
        let step = n / (2 * m);
        let twr: Vec<i32> = (0..m).map(|j| w_re[j * step]).collect();
        let twi: Vec<i32> = (0..m).map(|j| w_im[j * step]).collect();
        let (twr, twi) = (mem.put(&twr), mem.put(&twi));
        let _ = write!(
            t,
            "    li x9, {blocks}
    li x15, {work_re:#x}
    li x16, {work_im:#x}
    li x24, {stride}
    li x25, {half}
block{s}:
    li x10, {m}
    add x11, x15, x0
    add x12, x16, x0
    add x17, x15, x25
    add x18, x16, x25
    li x19, {twr:#x}
    li x20, {twi:#x}
strip{s}:
    rvv.vsetvli x5, x10, e32, m4
    rvv.vle v0, x11
    rvv.vle v4, x12
    rvv.vle v8, x17
    rvv.vle v12, x18
    rvv.vle v16, x19
    rvv.vle v20, x20
    rvv.vmul v24, v8, v16
    rvv.vmul v28, v12, v20
    rvv.vsub v24, v24, v28
    rvv.vadd.vx v24, v24, x13
    rvv.vsra.vx v24, v24, x14
    rvv.vmul v28, v8, v20
    rvv.vmul v8, v12, v16
    rvv.vadd v28, v28, v8
    rvv.vadd.vx v28, v28, x13
    rvv.vsra.vx v28, v28, x14
    rvv.vadd v8, v0, v24
    rvv.vsub v0, v0, v24
    rvv.vadd v12, v4, v28
    rvv.vsub v4, v4, v28
    rvv.vsra.vx v8, v8, x21
    rvv.vsra.vx v0, v0, x21
    rvv.vsra.vx v12, v12, x21
    rvv.vsra.vx v4, v4, x21
    rvv.vse v8, x11
    rvv.vse v0, x17
    rvv.vse v12, x12
    rvv.vse v4, x18
    slli x6, x5, 2
    add x11, x11, x6
    add x12, x12, x6
    add x17, x17, x6
    add x18, x18, x6
    add x19, x19, x6
    add x20, x20, x6
    sub x10, x10, x5
    bne x10, x0, strip{s}
    add x15, x15, x24
    add x16, x16, x24
    sub x9, x9, x21
    bne x9, x0, block{s}
",
            blocks = n / (2 * m),
            stride = 8 * m,
            half = 4 * m,
        );
    }
    (t, mem, Region { addr: work_re, len: n, vew: Vew::E32 }, Region { addr: work_im, len: n, vew: Vew::E32 })
}

pub fn gen_fft(re: &[i32], im: &[i32], isa: Isa) -> Result<BuiltKernel, BenchError> {
    check_fft_size(re.len(), isa)?;
    let (text, mem, out_re, out_im) = match isa {
        Isa::Zoozve => zoozve_fft(re, im),
        Isa::Rvv => rvv_fft(re, im),
    };
    Ok(BuiltKernel { program: asm(&text)?, image: mem.image, outputs: vec![out_re, out_im] })
}

/// Builds the program for `data` on `isa`.
pub fn generate(data: &KernelData, isa: Isa) -> Result<BuiltKernel, BenchError> {
    match data {
        KernelData::Dot { a, b } => gen_dotproduct(a, b, isa),
        KernelData::Axpy { alpha, x, y } => gen_axpy(*alpha, x, y, isa),
        KernelData::Fft { re, im } => gen_fft(re, im, isa),
    }
}
