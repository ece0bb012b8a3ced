//! Flat `key = value` run configuration.
//!
//! ```text
//! # gas
//! stats = bose
//! z = 0.5
//! M = 10
//! # sweep
//! q = 0.5, 1, 2
//! p_dir = 0, 1, 0
//! ```
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated;
//! vectors are three comma-separated numbers. Keys are case sensitive (`m` is
//! the gas mass, `M` the test mass). Command-line flags are applied as the
//! same key/value pairs after the file, so they take precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fokker_planck::CHI_QD;
use crate::statistics::Statistics;
use crate::structure_factor::{FormFactor, GasParameters, SFMode};
use crate::vector::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Kinetic Monte Carlo of the master equation.
    Jump,
    /// Closed-form Fokker-Planck moments.
    Fp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub engine: Engine,
    pub particles: usize,
    /// `None`: five relaxation times of the kernel.
    pub t_final: Option<f64>,
    pub steps: usize,
    pub seed: u64,
    pub p0: Vector3,
    pub bins: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            engine: Engine::Jump,
            particles: 10_000,
            t_final: None,
            steps: 10,
            seed: 42,
            p0: Vector3::new(5.0, 0.0, 0.0),
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: GasParameters,
    pub ff: FormFactor,
    pub mode: SFMode,
    pub chi: f64,
    /// Relative quadrature tolerance.
    pub tol: f64,
    /// `|q|` values of a structure-factor sweep, along `q_dir`.
    pub q: Vec<f64>,
    /// `|p|` values of a sweep, along `p_dir`.
    pub p: Vec<f64>,
    pub q_dir: Vector3,
    pub p_dir: Vector3,
    /// Fugacities of a sweep; empty means the single value `z`.
    pub z_sweep: Vec<f64>,
    /// Mass ratios `m/M` of a sweep at fixed `M`; empty means `m/M`.
    pub alpha_sweep: Vec<f64>,
    pub simulation: SimulationSettings,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Also write a JSON copy next to CSV output.
    pub mirror: bool,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: GasParameters::default(),
            ff: FormFactor::default(),
            mode: SFMode::EXACT,
            chi: CHI_QD,
            tol: 1e-9,
            q: vec![1.0],
            p: vec![0.0],
            q_dir: Vector3::new(1.0, 0.0, 0.0),
            p_dir: Vector3::new(1.0, 0.0, 0.0),
            z_sweep: Vec::new(),
            alpha_sweep: Vec::new(),
            simulation: SimulationSettings::default(),
            output: None,
            format: Format::Csv,
            mirror: false,
            threads: None,
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "stats", "z", "m", "M", "beta", "n", "g2", "qc", "mode", "chi", "tol", "q", "p", "q_dir", "p_dir",
    "z_sweep", "alpha_sweep", "engine", "particles", "t_final", "steps", "seed", "p0", "bins", "output",
    "format", "mirror", "threads",
];

fn number(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("`{}` is not a number", v.trim()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{}` is not finite", v.trim()))
    }
}

fn integer<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a nonnegative integer", v.trim()))
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(number).collect()
}

fn vector(v: &str) -> std::result::Result<Vector3, String> {
    let xs = list(v)?;
    match xs.as_slice() {
        &[x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected three components, got {}", xs.len())),
    }
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting; the error is a bare message.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "stats" => self.params.stats = v.parse::<Statistics>().map_err(|e| e.to_string())?,
            "z" => self.params.fugacity = number(v)?,
            "m" => self.params.gas_mass = number(v)?,
            "M" => self.params.test_mass = number(v)?,
            "beta" => self.params.beta = number(v)?,
            "n" => self.params.density = number(v)?,
            "g2" => {
                self.ff = FormFactor::GaussianCutoff {
                    coupling: number(v)?,
                    cutoff: self.ff.cutoff(),
                }
            }
            "qc" => {
                self.ff = FormFactor::GaussianCutoff {
                    coupling: self.ff.coupling(),
                    cutoff: number(v)?,
                }
            }
            "mode" => self.mode = v.parse::<SFMode>().map_err(|e| e.to_string())?,
            "chi" => self.chi = number(v)?,
            "tol" => self.tol = number(v)?,
            "q" => self.q = list(v)?,
            "p" => self.p = list(v)?,
            "q_dir" => self.q_dir = vector(v)?,
            "p_dir" => self.p_dir = vector(v)?,
            "z_sweep" => self.z_sweep = list(v)?,
            "alpha_sweep" => self.alpha_sweep = list(v)?,
            "engine" => {
                self.simulation.engine = match v {
                    "jump" => Engine::Jump,
                    "fp" => Engine::Fp,
                    other => return Err(format!("unknown engine `{other}` (expected jump or fp)")),
                }
            }
            "particles" => self.simulation.particles = integer(v)?,
            "t_final" => self.simulation.t_final = Some(number(v)?),
            "steps" => self.simulation.steps = integer(v)?,
            "seed" => self.simulation.seed = integer(v)?,
            "p0" => self.simulation.p0 = vector(v)?,
            "bins" => self.simulation.bins = integer(v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("unknown format `{other}` (expected csv or json)")),
                }
            }
            "mirror" => self.mirror = boolean(v)?,
            "threads" => self.threads = Some(integer(v)?),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Checks every embedded invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.ff.validate()?;
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::parameter(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("chi", self.chi)?;
        positive("tol", self.tol)?;
        if self.q.is_empty() || self.p.is_empty() {
            return Err(Error::parameter("q", "sweep grids must be nonempty"));
        }
        if let Some(&bad) = self.q.iter().find(|&&q| !(q > 0.0)) {
            return Err(Error::parameter("q", format!("|q| values must be > 0, got {bad}")));
        }
        if let Some(&bad) = self.p.iter().find(|&&p| !(p >= 0.0)) {
            return Err(Error::parameter("p", format!("|p| values must be >= 0, got {bad}")));
        }
        if self.q_dir.norm() == 0.0 {
            return Err(Error::parameter("q_dir", "direction must be nonzero"));
        }
        if self.p_dir.norm() == 0.0 {
            return Err(Error::parameter("p_dir", "direction must be nonzero"));
        }
        for &z in &self.z_sweep {
            self.params.stats.check_fugacity(z)?;
        }
        for &a in &self.alpha_sweep {
            positive("alpha_sweep", a)?;
        }
        let sim = &self.simulation;
        if sim.particles < 2 {
            return Err(Error::parameter("particles", "need at least 2 particles"));
        }
        if let Some(t) = sim.t_final {
            if !(t >= 0.0) {
                return Err(Error::parameter("t_final", format!("must be >= 0, got {t}")));
            }
        }
        if sim.steps == 0 {
            return Err(Error::parameter("steps", "must be >= 1"));
        }
        if sim.bins == 0 {
            return Err(Error::parameter("bins", "must be >= 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::parameter("threads", "must be >= 1"));
        }
        Ok(())
    }

    /// Fugacities swept by `dsf`.
    pub fn fugacities(&self) -> Vec<f64> {
        if self.z_sweep.is_empty() {
            vec![self.params.fugacity]
        } else {
            self.z_sweep.clone()
        }
    }

    /// Mass ratios swept by `dsf`.
    pub fn alphas(&self) -> Vec<f64> {
        if self.alpha_sweep.is_empty() {
            vec![self.params.alpha()]
        } else {
            self.alpha_sweep.clone()
        }
    }
}

/// `(key, value, line)` triples of a configuration file.
pub(crate) fn parse_entries(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {line_no}: missing key")));
        }
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {line_no}: unknown key `{key}`")));
        }
        if let Some((_, _, first)) = entries.iter().find(|(k, _, _)| k == key) {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key `{key}` (first set on line {first})"
            )));
        }
        entries.push((key.to_string(), value.trim().to_string(), line_no));
    }
    Ok(entries)
}

/// Builds a configuration from file entries followed by overrides.
pub(crate) fn assemble(
    entries: &[(String, String, usize)],
    overrides: &[(&str, String)],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (key, value, line) in entries {
        cfg.set(key, value)
            .map_err(|e| Error::Config(format!("line {line}: `{key}`: {e}")))?;
    }
    for (key, value) in overrides {
        cfg.set(key, value)
            .map_err(|e| Error::Config(format!("flag for `{key}`: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    assemble(&parse_entries(&text)?, &[])
}
