mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use zoozve::bench::{self, BenchOptions, Kernel};
use zoozve::compiler::{compile, parse_ir, CompileError};
use zoozve::isa::{self, Program, BINARY_MAGIC};
use zoozve::rvv::run_rvv_traced;
use zoozve::sim::{run_traced, MemoryImage, SimErrorKind, TextTracer, TraceStats, Tracer};

use config::{parse_u64, CliConfig, Overrides};

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: 1, msg: format!("{}: {e}", path.display()) }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Self { code: 1, msg: msg.into() }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zoozve", version, about = "Zoozve vector toolchain: assembler, simulators, compiler and benchmarks")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IsaArg {
    Zoozve,
    Rvv,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Assemble a source file into a binary
    Asm {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Disassemble a binary into a listing
    Disasm {
        input: PathBuf,
        /// Write the listing here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a program and print its statistics as one JSON line
    Run {
        /// Assembly source or binary
        input: PathBuf,
        #[arg(long, value_enum, default_value = "zoozve")]
        isa: IsaArg,
        /// Write one line per executed instruction to this file
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Load a file's bytes at an address before running
        #[arg(long, value_name = "ADDR:PATH")]
        mem_init: Vec<String>,
        /// Dump memory after the run
        #[arg(long, value_name = "ADDR:LEN")]
        dump_mem: Vec<String>,
        /// Dump vector registers after the run
        #[arg(long, value_name = "HEAD:COUNT")]
        dump_vregs: Vec<String>,
    },
    /// Compile an IR module and write the staged artifacts
    Compile {
        input: PathBuf,
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Artifact file stem; defaults to the input's stem
        #[arg(long)]
        name: Option<String>,
    },
    /// Run the kernel sweep on both machines
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "fft,dotproduct,axpy")]
        kernels: Vec<String>,
        /// Problem sizes; each kernel's default sweep when omitted
        #[arg(long, value_delimiter = ',', value_parser = parse_u64)]
        sizes: Option<Vec<u64>>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_parser = parse_u64)]
        seed: Option<u64>,
        /// Print one JSON line per result instead of the summary table
        #[arg(long)]
        json: bool,
    },
    /// Render a plot from a bench CSV report
    Plot {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = CliConfig::load(&cli.overrides)?;
    match cli.cmd {
        Cmd::Asm { input, output } => cmd_asm(&input, &output),
        Cmd::Disasm { input, output } => cmd_disasm(&input, output.as_deref()),
        Cmd::Run { input, isa, trace, mem_init, dump_mem, dump_vregs } => {
            if isa == IsaArg::Zoozve && cli.overrides.lmul.is_some() {
                return Err(CliError::usage("--lmul applies only to --isa rvv"));
            }
            if isa == IsaArg::Rvv && cli.overrides.vregs.is_some() {
                return Err(CliError::usage("--vregs applies only to --isa zoozve"));
            }
            let dumps = Dumps { mem: parse_pairs(&dump_mem, "--dump-mem")?, vregs: parse_pairs(&dump_vregs, "--dump-vregs")? };
            cmd_run(&cfg, &input, isa, trace.as_deref(), &mem_init, &dumps)
        }
        Cmd::Compile { input, outdir, name } => {
            let outdir = outdir.unwrap_or_else(|| cfg.outdir.clone());
            cmd_compile(&cfg, &input, &outdir, name)
        }
        Cmd::Bench { kernels, sizes, csv, plot, jobs, seed, json } => {
            let kernels = kernels.iter().map(|k| k.parse::<Kernel>().map_err(CliError::usage)).collect::<Result<Vec<_>, _>>()?;
            let opts = BenchOptions { seed: seed.unwrap_or(cfg.seed), jobs: jobs.unwrap_or(cfg.jobs), max_steps: cfg.max_steps };
            cmd_bench(&kernels, sizes.as_deref(), &opts, csv.as_deref(), plot.as_deref(), json)
        }
        Cmd::Plot { input, output } => cmd_plot(&input, &output),
    }
}

fn write_out(path: &Path, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|e| CliError::io(path, e))
}

fn read_source(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Assembly text or a binary, told apart by the binary's magic bytes.
fn load_program(path: &Path) -> Result<Program, CliError> {
    let bytes = read_source(path)?;
    let err = |e: isa::IsaError| CliError::input(format!("{}: {e}", path.display()));
    if bytes.starts_with(BINARY_MAGIC) {
        isa::read_binary(&bytes).map_err(err)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{}: not UTF-8 text", path.display())))?;
        isa::assemble(&text).map_err(err)
    }
}

fn cmd_asm(input: &Path, output: &Path) -> Result<(), CliError> {
    let program = load_program(input)?;
    let bin = isa::write_binary(&program).map_err(|e| CliError::input(e.to_string()))?;
    write_out(output, &bin)?;
    println!("{}", json!({ "output": output.display().to_string(), "instructions": program.len() }));
    Ok(())
}

fn cmd_disasm(input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let bytes = read_source(input)?;
    let program = isa::read_binary(&bytes).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let text = isa::disassemble(&program);
    match output {
        Some(p) => write_out(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_pairs(specs: &[String], flag: &str) -> Result<Vec<(u64, u64)>, CliError> {
    specs
        .iter()
        .map(|s| {
            let (a, b) = s.split_once(':').ok_or_else(|| CliError::usage(format!("{flag} expects A:B, got `{s}`")))?;
            let a = parse_u64(a).map_err(|e| CliError::usage(format!("{flag}: {e}")))?;
            let b = parse_u64(b).map_err(|e| CliError::usage(format!("{flag}: {e}")))?;
            Ok((a, b))
        })
        .collect()
}

fn mem_image(specs: &[String]) -> Result<MemoryImage, CliError> {
    let mut img = MemoryImage::new();
    for s in specs {
        let (addr, path) = s.split_once(':').ok_or_else(|| CliError::usage(format!("--mem-init expects ADDR:PATH, got `{s}`")))?;
        let addr = parse_u64(addr).map_err(|e| CliError::usage(format!("--mem-init: {e}")))?;
        let path = Path::new(path);
        img.put_bytes(addr, read_source(path)?);
    }
    Ok(img)
}

struct Dumps {
    mem: Vec<(u64, u64)>,
    vregs: Vec<(u64, u64)>,
}

fn stats_json(isa: &str, stats: &TraceStats) -> serde_json::Value {
    json!({ "isa": isa, "dynamic_count": stats.dynamic_count, "strip_iterations": stats.strip_iterations, "per_class": stats.per_class })
}

fn cmd_run(cfg: &CliConfig, input: &Path, isa: IsaArg, trace: Option<&Path>, mem_init: &[String], dumps: &Dumps) -> Result<(), CliError> {
    let program = load_program(input)?;
    let image = mem_image(mem_init)?;
    let opts = cfg.run_options();
    let mut tracer = match trace {
        Some(p) => Some(TextTracer::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?), &program)),
        None => None,
    };
    let dyn_tracer = tracer.as_mut().map(|t| t as &mut dyn Tracer);
    type DumpFn<'a> = Box<dyn Fn(bool, u64, u64) -> Result<String, String> + 'a>;
    let (name, result): (&str, Result<(TraceStats, DumpFn), _>) = match isa {
        IsaArg::Zoozve => (
            "zoozve",
            run_traced(&program, &cfg.zoozve()?, &image, &opts, dyn_tracer).map(|(state, stats)| {
                let f: DumpFn = Box::new(move |mem, a, b| {
                    if mem { state.dump_mem(a, b) } else { state.dump_vregs(a as u32, b as u32) }.map_err(|e| e.to_string())
                });
                (stats, f)
            }),
        ),
        IsaArg::Rvv => (
            "rvv",
            run_rvv_traced(&program, &cfg.rvv()?, &image, &opts, dyn_tracer).map(|(state, stats)| {
                let f: DumpFn = Box::new(move |mem, a, b| {
                    if mem { state.dump_mem(a, b) } else { state.dump_vregs(a as u32, b as u32) }.map_err(|e| e.to_string())
                });
                (stats, f)
            }),
        ),
    };
    if let Some(t) = tracer {
        if let Some(e) = t.error {
            return Err(CliError::io(trace.unwrap_or(Path::new("trace")), e));
        }
    }
    let (stats, dump) = match result {
        Ok(r) => r,
        Err(e) => {
            println!("{}", stats_json(name, &e.stats));
            let code = match e.kind {
                SimErrorKind::Invalid(_) => 1,
                _ => 4,
            };
            return Err(CliError { code, msg: e.to_string() });
        }
    };
    let mut out = io::stdout().lock();
    let w = |out: &mut io::StdoutLock, v: serde_json::Value| writeln!(out, "{v}").map_err(|e| CliError::input(e.to_string()));
    w(&mut out, stats_json(name, &stats))?;
    for &(addr, len) in &dumps.mem {
        let hex = dump(true, addr, len).map_err(|e| CliError::usage(format!("--dump-mem {addr:#x}:{len}: {e}")))?;
        w(&mut out, json!({ "mem": addr, "len": len, "hex": hex }))?;
    }
    for &(head, count) in &dumps.vregs {
        let hex = dump(false, head, count).map_err(|e| CliError::usage(format!("--dump-vregs {head}:{count}: {e}")))?;
        w(&mut out, json!({ "vregs": head, "count": count, "hex": hex }))?;
    }
    Ok(())
}

fn cmd_compile(cfg: &CliConfig, input: &Path, outdir: &Path, name: Option<String>) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let module = parse_ir(&text).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let machine = cfg.zoozve()?.with_vew(module.vew).map_err(|e| CliError::usage(e.to_string()))?;
    let compiled = compile(&module, &machine).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let stem = name.unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("out".into()));
    let paths = compiled.write_artifacts(outdir, &stem).map_err(|e| match e {
        CompileError::Io { path, source } => CliError::io(&path, source),
        other => CliError::input(other.to_string()),
    })?;
    let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    println!("{}", json!({ "files": files, "instructions": compiled.program.len() }));
    Ok(())
}

fn bench_err(e: bench::BenchError) -> CliError {
    match e {
        bench::BenchError::Size { .. } => CliError::usage(e.to_string()),
        bench::BenchError::Run { .. } => CliError { code: 4, msg: e.to_string() },
        _ => CliError::input(e.to_string()),
    }
}

fn cmd_bench(
    kernels: &[Kernel],
    sizes: Option<&[u64]>,
    opts: &BenchOptions,
    csv: Option<&Path>,
    plot: Option<&Path>,
    json_lines: bool,
) -> Result<(), CliError> {
    let results = bench::run_benchmark(kernels, sizes, opts).map_err(bench_err)?;
    if let Some(p) = csv {
        bench::emit_csv(&results, p).map_err(bench_err)?;
    }
    if let Some(p) = plot {
        bench::emit_plot(&results, p).map_err(bench_err)?;
    }
    if json_lines {
        for r in &results {
            let line = json!({
                "kernel": r.case.kernel,
                "n": r.case.n,
                "isa": r.case.isa,
                "dynamic_count": r.stats.dynamic_count,
                "strip_iterations": r.stats.strip_iterations,
                "speedup": r.speedup,
                "correct": r.correct,
            });
            println!("{line}");
        }
    } else {
        print!("{}", bench::summary_table(&results));
    }
    let bad: Vec<String> = results.iter().filter(|r| !r.correct).map(|r| format!("{} n={} {}", r.case.kernel, r.case.n, r.case.isa)).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError { code: 3, msg: format!("output mismatch: {}", bad.join(", ")) })
    }
}

fn cmd_plot(input: &Path, output: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let results = bench::parse_csv(&text).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    bench::emit_plot(&results, output).map_err(bench_err)?;
    println!("{}", json!({ "output": output.display().to_string(), "rows": results.len() }));
    Ok(())
}
