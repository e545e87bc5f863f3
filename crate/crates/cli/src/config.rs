use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use zoozve::isa::{Lmul, RvvConfig, VConfig, Vew};
use zoozve::sim::{RunOptions, DEFAULT_MAX_STEPS, DEFAULT_MEM_BYTES};

use crate::CliError;

/// Settings shared by all subcommands: a key=value file overlaid by flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub vlen: u32,
    pub vregs: u32,
    pub vew: u32,
    pub lmul: u32,
    pub mem_size: usize,
    pub max_steps: u64,
    pub seed: u64,
    pub jobs: usize,
    pub outdir: PathBuf,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            vlen: 512,
            vregs: VConfig::DEFAULT_VREGS,
            vew: 16,
            lmul: 1,
            mem_size: DEFAULT_MEM_BYTES,
            max_steps: DEFAULT_MAX_STEPS,
            seed: 1,
            jobs: 0,
            outdir: PathBuf::from("out"),
        }
    }
}

/// Flag values that override the file; `None` leaves the setting alone.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// key=value settings file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub vlen: Option<u32>,
    #[arg(long, global = true)]
    pub vregs: Option<u32>,
    #[arg(long, global = true)]
    pub vew: Option<u32>,
    #[arg(long, global = true)]
    pub lmul: Option<u32>,
    /// Simulated memory in bytes
    #[arg(long, global = true, value_parser = parse_usize)]
    pub mem_size: Option<usize>,
    #[arg(long, global = true, value_parser = parse_u64)]
    pub max_steps: Option<u64>,
}

pub fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("`{s}`: {e}"))
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    parse_u64(s).and_then(|v| usize::try_from(v).map_err(|e| e.to_string()))
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl CliConfig {
    /// Defaults, then the config file if given, then flags.
    pub fn load(flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = &flags.config {
            for (k, v) in read_file(path)? {
                cfg.set(&k, &v).map_err(|e| CliError::usage(format!("{}: {k}: {e}", path.display())))?;
            }
        }
        let set = |v: Option<u64>, slot: &mut u64| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        let (mut vlen, mut vregs, mut vew, mut lmul) = (cfg.vlen as u64, cfg.vregs as u64, cfg.vew as u64, cfg.lmul as u64);
        set(flags.vlen.map(u64::from), &mut vlen);
        set(flags.vregs.map(u64::from), &mut vregs);
        set(flags.vew.map(u64::from), &mut vew);
        set(flags.lmul.map(u64::from), &mut lmul);
        set(flags.max_steps, &mut cfg.max_steps);
        (cfg.vlen, cfg.vregs, cfg.vew, cfg.lmul) = (vlen as u32, vregs as u32, vew as u32, lmul as u32);
        if let Some(m) = flags.mem_size {
            cfg.mem_size = m;
        }
        cfg.zoozve()?;
        cfg.rvv()?;
        if cfg.mem_size == 0 {
            return Err(CliError::usage("mem-size must be positive"));
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = |v: &str| parse_u64(v);
        let small = |v: &str| num(v).and_then(|x| u32::try_from(x).map_err(|e| e.to_string()));
        match key {
            "vlen" => self.vlen = small(value)?,
            "vregs" => self.vregs = small(value)?,
            "vew" => self.vew = small(value)?,
            "lmul" => self.lmul = small(value)?,
            "mem_size" => self.mem_size = parse_usize(value)?,
            "max_steps" => self.max_steps = num(value)?,
            "seed" => self.seed = num(value)?,
            "jobs" => self.jobs = parse_usize(value)?,
            "outdir" => self.outdir = PathBuf::from(value),
            _ => return Err("unknown setting".into()),
        }
        Ok(())
    }

    pub fn zoozve(&self) -> Result<VConfig, CliError> {
        let vew = Vew::from_bits(self.vew).map_err(|e| CliError::usage(e.to_string()))?;
        VConfig::new(self.vlen, self.vregs, vew).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn rvv(&self) -> Result<RvvConfig, CliError> {
        let vew = Vew::from_bits(self.vew).map_err(|e| CliError::usage(e.to_string()))?;
        let lmul = Lmul::from_factor(self.lmul).map_err(|e| CliError::usage(e.to_string()))?;
        RvvConfig::new(self.vlen, vew, lmul).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { max_steps: self.max_steps, mem_bytes: self.mem_size }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.conf");
        fs::write(&path, "# machine\nvlen = 1024\nvew=32\nmax-steps = 0x100\nseed=9\n").unwrap();
        let flags = Overrides { config: Some(path), vew: Some(16), ..Overrides::default() };
        let cfg = CliConfig::load(&flags).unwrap();
        assert_eq!((cfg.vlen, cfg.vew, cfg.max_steps, cfg.seed), (1024, 16, 256, 9));
    }

    #[test]
    fn invalid_machine_is_rejected() {
        let flags = Overrides { lmul: Some(3), ..Overrides::default() };
        assert_eq!(CliConfig::load(&flags).unwrap_err().code, 2);
        let flags = Overrides { vlen: Some(100), ..Overrides::default() };
        assert_eq!(CliConfig::load(&flags).unwrap_err().code, 2);
    }
}
