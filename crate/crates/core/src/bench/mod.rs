//! Benchmark harness: runs each kernel on both machines across a size
//! sweep, checks the results and derives the speedup and strip metrics.

mod kernels;
pub mod reference;
mod report;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::compiler::CompileError;
use crate::isa::{RvvConfig, VConfig};
use crate::rvv::run_rvv;
use crate::sim::{run, RunOptions, SimError, TraceStats, DEFAULT_MAX_STEPS};

pub use kernels::{
    axpy_ir, dot_ir, gen_axpy, gen_dotproduct, gen_fft, generate, rvv_config, zoozve_config, BuiltKernel, KernelData,
    Region, AXPY_X, AXPY_Y, DOT_A, DOT_B, DOT_OUT, FFT_BASE,
};
pub use report::{emit_csv, emit_plot, parse_csv, render_csv, render_svg, summary_table, CSV_HEADER, CSV_SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Fft,
    Dotproduct,
    Axpy,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Fft, Kernel::Dotproduct, Kernel::Axpy];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Fft => "fft",
            Kernel::Dotproduct => "dotproduct",
            Kernel::Axpy => "axpy",
        }
    }

    /// The sweep used when no sizes are given.
    pub fn default_sizes(self) -> Vec<u64> {
        match self {
            Kernel::Fft => (5..=11).map(|k| 1 << k).collect(),
            Kernel::Dotproduct | Kernel::Axpy => (9..=14).map(|k| 1 << k).collect(),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown kernel `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Isa {
    Zoozve,
    Rvv,
}

impl Isa {
    pub fn name(self) -> &'static str {
        match self {
            Isa::Zoozve => "zoozve",
            Isa::Rvv => "rvv",
        }
    }
}

impl fmt::Display for Isa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Isa {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zoozve" => Ok(Isa::Zoozve),
            "rvv" => Ok(Isa::Rvv),
            _ => Err(format!("unknown isa `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineConfig {
    Zoozve(VConfig),
    Rvv(RvvConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchCase {
    pub kernel: Kernel,
    pub n: u64,
    pub isa: Isa,
    pub config: MachineConfig,
    pub seed: u64,
}

impl BenchCase {
    /// A case on the machine configuration used for `kernel`.
    pub fn new(kernel: Kernel, n: u64, isa: Isa, seed: u64) -> Self {
        let config = match isa {
            Isa::Zoozve => MachineConfig::Zoozve(zoozve_config(kernel)),
            Isa::Rvv => MachineConfig::Rvv(rvv_config(kernel)),
        };
        Self { kernel, n, isa, config, seed }
    }

    fn label(&self) -> String {
        format!("{} n={} on {}", self.kernel, self.n, self.isa)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub case: BenchCase,
    pub stats: TraceStats,
    /// RVV count over Zoozve count for the same kernel and size.
    pub speedup: Option<f64>,
    pub correct: bool,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{kernel} size {n}: {msg}")]
    Size { kernel: Kernel, n: u64, msg: String },
    #[error("{0}")]
    Generate(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("{case}: {error}")]
    Run { case: String, error: SimError },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Simulates one case and returns its statistics and output regions.
pub fn run_case(case: &BenchCase, data: &KernelData, max_steps: u64) -> Result<(TraceStats, Vec<Vec<i64>>), BenchError> {
    let built = generate(data, case.isa)?;
    let opts = RunOptions { max_steps, ..RunOptions::default() };
    let run_err = |error| BenchError::Run { case: case.label(), error };
    let read = |mem: &crate::sim::Memory| -> Result<Vec<Vec<i64>>, BenchError> {
        built
            .outputs
            .iter()
            .map(|r| {
                let bytes = mem
                    .slice(r.addr, (r.len * r.vew.bytes() as usize) as u64, 1)
                    .map_err(|e| BenchError::Generate(format!("output region: {e}")))?;
                Ok(bytes
                    .chunks_exact(r.vew.bytes() as usize)
                    .map(|c| {
                        let mut buf = [0u8; 8];
                        buf[..c.len()].copy_from_slice(c);
                        r.vew.sign_extend(u64::from_le_bytes(buf))
                    })
                    .collect())
            })
            .collect()
    };
    match case.config {
        MachineConfig::Zoozve(cfg) => {
            let (state, stats) = run(&built.program, &cfg, &built.image, &opts).map_err(run_err)?;
            Ok((stats, read(&state.core.mem)?))
        }
        MachineConfig::Rvv(cfg) => {
            let (state, stats) = run_rvv(&built.program, &cfg, &built.image, &opts).map_err(run_err)?;
            Ok((stats, read(&state.core.mem)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
    pub max_steps: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { seed: 1, jobs: 0, max_steps: DEFAULT_MAX_STEPS }
    }
}

fn check_size(kernel: Kernel, n: u64) -> Result<(), BenchError> {
    let ok = match kernel {
        Kernel::Fft => n.is_power_of_two() && (32..=2048).contains(&n),
        Kernel::Dotproduct | Kernel::Axpy => n.is_power_of_two() && (512..=16384).contains(&n),
    };
    if ok {
        Ok(())
    } else {
        let range = if kernel == Kernel::Fft { "32..=2048" } else { "512..=16384" };
        Err(BenchError::Size { kernel, n, msg: format!("must be a power of two in {range}") })
    }
}

/// Runs every kernel at every size on both machines. `sizes` overrides
/// each kernel's default sweep. Results are ordered by kernel, size and
/// machine regardless of scheduling.
pub fn run_benchmark(kernels: &[Kernel], sizes: Option<&[u64]>, opts: &BenchOptions) -> Result<Vec<BenchResult>, BenchError> {
    let mut pairs = Vec::new();
    for &k in kernels {
        let ns = sizes.map(<[u64]>::to_vec).unwrap_or_else(|| k.default_sizes());
        for n in ns {
            check_size(k, n)?;
            pairs.push((k, n));
        }
    }
    pairs.sort();
    pairs.dedup();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let runs: Vec<Result<[BenchResult; 2], BenchError>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(kernel, n)| {
                let seed = opts.seed ^ (n << 8) ^ kernel as u64;
                let data = KernelData::random(kernel, n as usize, seed);
                let expected = data.expected();
                let z = BenchCase::new(kernel, n, Isa::Zoozve, seed);
                let r = BenchCase::new(kernel, n, Isa::Rvv, seed);
                let (zs, zout) = run_case(&z, &data, opts.max_steps)?;
                let (rs, rout) = run_case(&r, &data, opts.max_steps)?;
                let speedup = Some(rs.dynamic_count as f64 / zs.dynamic_count as f64);
                let agree = zout == rout;
                Ok([
                    BenchResult { case: z, stats: zs, speedup, correct: agree && zout == expected },
                    BenchResult { case: r, stats: rs, speedup, correct: agree && rout == expected },
                ])
            })
            .collect()
    });
    let mut out = Vec::with_capacity(2 * runs.len());
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_correct_and_deterministic() {
        let opts = BenchOptions { jobs: 2, ..BenchOptions::default() };
        let a = run_benchmark(&Kernel::ALL, Some(&[256]), &opts);
        assert!(a.is_err(), "256 is outside the blas sweep");
        let a = run_benchmark(&[Kernel::Dotproduct, Kernel::Axpy], Some(&[512, 1024]), &opts).unwrap();
        let b = run_benchmark(&[Kernel::Axpy, Kernel::Dotproduct], Some(&[1024, 512]), &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.correct));
        assert_eq!(a.len(), 8);
        assert_eq!(a[0].case.kernel, Kernel::Dotproduct);
    }

    #[test]
    fn fft_small_sizes_match_reference() {
        let r = run_benchmark(&[Kernel::Fft], Some(&[32, 64, 128]), &BenchOptions::default()).unwrap();
        assert!(r.iter().all(|r| r.correct), "{r:?}");
        let zoozve: Vec<u64> = r.iter().filter(|r| r.case.isa == Isa::Zoozve).map(|r| r.stats.dynamic_count).collect();
        assert_eq!(zoozve, vec![19 + 24 * 5, 19 + 24 * 6, 19 + 24 * 7]);
    }
}
