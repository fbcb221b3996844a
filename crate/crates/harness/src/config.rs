//! Experiment configuration: a sectioned `key = value` file (TOML) with
//! command-line overrides applied on top.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use euler2d::analysis::constants::LOSING_C;
use euler2d::initial_data::{BumpDataParams, ContinuumDataParams};
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Thm11Sweep,
    Thm12Run,
    BcCalibration,
    LosingCheck,
    ViscousLimit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Thm11Sweep => "thm11-sweep",
            ExperimentKind::Thm12Run => "thm12-run",
            ExperimentKind::BcCalibration => "bc-calibration",
            ExperimentKind::LosingCheck => "losing-check",
            ExperimentKind::ViscousLimit => "viscous-limit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<u32>,
    pub tau_star: f64,
    /// The growth target M of the norm-inflation experiment.
    pub growth_target: f64,
    /// Grid size overrides per N; others use the smallest admissible size.
    pub grid_sizes: BTreeMap<u32, usize>,
    pub dt: f64,
    pub cfl_max: f64,
    pub record_every: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub continuum_grids: Vec<usize>,
    pub continuum_t_final: f64,
    pub deltas: Vec<f64>,
    pub wsp: Vec<(f64, f64)>,
    pub nu: Vec<f64>,
    pub losing_c: f64,
    pub bc_grids: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Thm11Sweep,
            n: vec![16, 32, 64, 128],
            tau_star: 1.0,
            growth_target: 2.0,
            grid_sizes: BTreeMap::new(),
            dt: 0.01,
            cfl_max: 0.5,
            record_every: 1,
            output: PathBuf::from("out"),
            seed: 0,
            alpha: 0.55,
            epsilon: 0.5,
            continuum_grids: vec![256, 512, 1024],
            continuum_t_final: 0.5,
            deltas: vec![0.01, 0.03, 0.1],
            wsp: vec![(0.8, 2.5), (0.5, 4.0), (1.2, 5.0 / 3.0), (1.9, 20.0 / 19.0)],
            nu: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1],
            losing_c: LOSING_C,
            bc_grids: vec![512, 1024],
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    continuum: ContinuumSection,
    #[serde(default)]
    viscous: ViscousSection,
    #[serde(default)]
    losing: LosingSection,
    #[serde(default)]
    bc: BcSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    kind: Option<ExperimentKind>,
    n: Option<Vec<u32>>,
    tau_star: Option<f64>,
    growth_target: Option<f64>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    /// Keys are N written as strings, e.g. `sizes = { "128" = 2048 }`.
    sizes: Option<BTreeMap<String, usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    dt: Option<f64>,
    cfl_max: Option<f64>,
    record_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContinuumSection {
    alpha: Option<f64>,
    epsilon: Option<f64>,
    grids: Option<Vec<usize>>,
    t_final: Option<f64>,
    deltas: Option<Vec<f64>>,
    wsp: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViscousSection {
    nu: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LosingSection {
    c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcSection {
    grids: Option<Vec<usize>>,
}

/// Command-line overrides; every flag that is given wins over the file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub kind: Option<ExperimentKind>,
    /// Comma-separated N list.
    #[arg(long = "n", value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    #[arg(long)]
    pub tau_star: Option<f64>,
    #[arg(long)]
    pub growth_target: Option<f64>,
    /// Grid size per N as N=M, comma-separated.
    #[arg(long = "grid", value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub cfl_max: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "continuum-grids", value_delimiter = ',')]
    pub continuum_grids: Option<Vec<usize>>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long = "nu", value_delimiter = ',')]
    pub nu: Option<Vec<f64>>,
    #[arg(long)]
    pub losing_c: Option<f64>,
    #[arg(long = "bc-grids", value_delimiter = ',')]
    pub bc_grids: Option<Vec<usize>>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_grid_key(k: &str) -> Result<u32> {
    k.trim()
        .parse()
        .map_err(|_| HarnessError::config(format!("grid size key '{k}' is not an integer N")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: FileConfig = toml::from_str(text)?;
        let mut c = ExperimentConfig::default();
        let e = f.experiment;
        set(&mut c.kind, e.kind);
        set(&mut c.n, e.n);
        set(&mut c.tau_star, e.tau_star);
        set(&mut c.growth_target, e.growth_target);
        set(&mut c.output, e.output);
        set(&mut c.seed, e.seed);
        if let Some(sizes) = f.grid.sizes {
            for (k, m) in sizes {
                c.grid_sizes.insert(parse_grid_key(&k)?, m);
            }
        }
        set(&mut c.dt, f.time.dt);
        set(&mut c.cfl_max, f.time.cfl_max);
        set(&mut c.record_every, f.time.record_every);
        let k = f.continuum;
        set(&mut c.alpha, k.alpha);
        set(&mut c.epsilon, k.epsilon);
        set(&mut c.continuum_grids, k.grids);
        set(&mut c.continuum_t_final, k.t_final);
        set(&mut c.deltas, k.deltas);
        set(&mut c.wsp, k.wsp.map(|v| v.into_iter().map(|[s, p]| (s, p)).collect()));
        set(&mut c.nu, f.viscous.nu);
        set(&mut c.losing_c, f.losing.c);
        set(&mut c.bc_grids, f.bc.grids);
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// File (if any), then overrides, then validation.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut c = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        c.apply(overrides)?;
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        set(&mut self.kind, o.kind);
        set(&mut self.n, o.n.clone());
        set(&mut self.tau_star, o.tau_star);
        set(&mut self.growth_target, o.growth_target);
        if let Some(pairs) = &o.grid {
            for p in pairs {
                let (n, m) = p
                    .split_once('=')
                    .ok_or_else(|| HarnessError::config(format!("grid override '{p}' is not N=M")))?;
                let m = m
                    .trim()
                    .parse()
                    .map_err(|_| HarnessError::config(format!("grid size '{m}' is not an integer")))?;
                self.grid_sizes.insert(parse_grid_key(n)?, m);
            }
        }
        set(&mut self.dt, o.dt);
        set(&mut self.cfl_max, o.cfl_max);
        set(&mut self.record_every, o.record_every);
        set(&mut self.output, o.output.clone());
        set(&mut self.seed, o.seed);
        set(&mut self.alpha, o.alpha);
        set(&mut self.epsilon, o.epsilon);
        set(&mut self.continuum_grids, o.continuum_grids.clone());
        set(&mut self.continuum_t_final, o.t_final);
        set(&mut self.nu, o.nu.clone());
        set(&mut self.losing_c, o.losing_c);
        set(&mut self.bc_grids, o.bc_grids.clone());
        Ok(())
    }

    /// Grid size for bump data at N: the override if set, else the smallest admissible.
    pub fn grid_size(&self, n: u32) -> Result<usize> {
        let need = BumpDataParams::new(n)?.required_grid_size();
        match self.grid_sizes.get(&n) {
            Some(&m) if m < need => Err(HarnessError::config(format!(
                "grid size {m} for N={n} is below the required {need}"
            ))),
            Some(&m) => Ok(m),
            None => Ok(need),
        }
    }

    /// t*(tau, N) = tau ln ln N / ln N.
    pub fn t_star(&self, n: u32) -> f64 {
        let l = (n as f64).ln();
        self.tau_star * l.ln() / l
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::config(m));
        if self.n.is_empty() {
            return bad("empty N list".into());
        }
        for &n in &self.n {
            self.grid_size(n)?;
        }
        for &n in self.grid_sizes.keys() {
            BumpDataParams::new(n)?;
        }
        if !(self.tau_star >= 0.0 && self.tau_star.is_finite()) {
            return bad(format!("tau_star {} must be >= 0", self.tau_star));
        }
        if !(self.growth_target > 1.0) {
            return bad(format!("growth target {} must exceed 1", self.growth_target));
        }
        if !(self.dt > 0.0 && self.cfl_max > 0.0) || self.record_every == 0 {
            return bad("dt, cfl_max and record_every must be positive".into());
        }
        match self.kind {
            ExperimentKind::Thm12Run => {
                if !(self.alpha > 0.5 && self.alpha < 0.6) {
                    return bad(format!("alpha {} must lie in (1/2, 3/5)", self.alpha));
                }
                ContinuumDataParams::new(self.alpha, self.epsilon)?;
                if self.continuum_grids.is_empty() || !(self.continuum_t_final >= 0.0) {
                    return bad("continuum run needs grids and t_final >= 0".into());
                }
                if self.deltas.iter().any(|d| !(*d > 0.0)) {
                    return bad("annulus radii must be positive".into());
                }
            }
            ExperimentKind::ViscousLimit => {
                if self.nu.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return bad("viscosities must be finite and >= 0".into());
                }
                let pos: Vec<f64> = self.nu.iter().copied().filter(|v| *v > 0.0).collect();
                let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = pos.iter().copied().fold(0.0, f64::max);
                if pos.len() < 2 || hi / lo < 100.0 * (1.0 - 1e-12) {
                    return bad(format!("viscosity list {:?} must span at least two decades", self.nu));
                }
            }
            ExperimentKind::LosingCheck => {
                if !(self.losing_c > 0.0) {
                    return bad(format!("losing constant {} must be positive", self.losing_c));
                }
            }
            ExperimentKind::BcCalibration => {
                if self.bc_grids.is_empty() {
                    return bad("bc calibration needs at least one grid".into());
                }
            }
            ExperimentKind::Thm11Sweep => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[experiment]
kind = "viscous-limit"
n = [16]
seed = 7

[grid]
sizes = { "16" = 512 }

[time]
dt = 0.005

[viscous]
nu = [0.0, 1e-3, 1e-1]
"#;

    #[test]
    fn file_values_and_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.kind, ExperimentKind::ViscousLimit);
        assert_eq!(c.n, vec![16]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid_size(16).unwrap(), 512);
        assert_eq!(c.dt, 0.005);
        assert_eq!(c.cfl_max, 0.5);
        c.validate().unwrap();
    }

    #[test]
    fn flags_win() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.apply(&Overrides {
            dt: Some(0.02),
            grid: Some(vec!["16=1024".into()]),
            seed: Some(3),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(c.dt, 0.02);
        assert_eq!(c.seed, 3);
        assert_eq!(c.grid_size(16).unwrap(), 1024);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("[experiment]\nbogus = 1").is_err());
        let mut c = ExperimentConfig::default();
        c.grid_sizes.insert(16, 128);
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c = ExperimentConfig {
            kind: ExperimentKind::ViscousLimit,
            nu: vec![1e-3, 1e-2],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            kind: ExperimentKind::Thm12Run,
            alpha: 0.7,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_grid_is_sixteen_n() {
        let c = ExperimentConfig::default();
        assert_eq!(c.grid_size(16).unwrap(), 256);
        assert_eq!(c.grid_size(128).unwrap(), 2048);
        assert!((c.t_star(16) - 16f64.ln().ln() / 16f64.ln()).abs() < 1e-15);
    }
}
