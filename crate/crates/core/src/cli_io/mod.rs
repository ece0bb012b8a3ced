//! Command-line front end: `dsf`, `verify`, `simulate` and `coeffs`.
//!
//! Every subcommand reads an optional `--config` file (see [`config`]) and
//! then applies its flags as overrides; a flag `--q-dir` sets the key
//! `q_dir`, and so on. Exit codes: 0 on success, 1 for invalid input,
//! 2 for a numerical failure or a failed verification check.

pub mod config;
pub mod output;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use config::{load_config, Engine, Format, RunConfig, SimulationSettings};
pub use output::{Cell, Table};

use crate::error::{Error, Result};
use crate::fokker_planck::{compute_coefficients, evolve_moments, friction_for_statistics, lindblad_decomposition};
use crate::master_equation::{friction_rate, CollisionKernel, EnsembleState, JumpProcess};
use crate::statistics::{zeta_factor, Statistics};
use crate::structure_factor::{energy_transfer, s_eval, GasParameters};
use crate::vector::Vector3;

/// Default worker count for parallel sweeps and ensembles.
pub const THREADS_ENV: &str = "RAYLEIGH_GAS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rayleigh-gas", version, about = "Test particle in an ideal quantum gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate or sweep the dynamic structure factor.
    Dsf(DsfArgs),
    /// Run the property checks.
    Verify(VerifyArgs),
    /// Evolve a momentum ensemble and write moments and histograms.
    Simulate(SimulateArgs),
    /// Print drift-diffusion coefficients and Lindblad weights.
    Coeffs(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mb, bose or fermi.
    #[arg(long)]
    stats: Option<String>,
    #[arg(long)]
    z: Option<String>,
    /// Gas-particle mass.
    #[arg(long)]
    m: Option<String>,
    /// Test-particle mass.
    #[arg(long = "M")]
    big_m: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Form-factor coupling.
    #[arg(long)]
    g2: Option<String>,
    /// Form-factor cutoff.
    #[arg(long)]
    qc: Option<String>,
    /// exact, exact-sym, brownian or brownian-sym.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    chi: Option<String>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Also write a JSON copy of CSV output.
    #[arg(long)]
    mirror: bool,
    #[arg(long)]
    threads: Option<String>,
}

#[derive(Debug, Args)]
struct DsfArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated |q| values.
    #[arg(long)]
    q: Option<String>,
    /// Comma-separated |p| values.
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "q-dir", allow_hyphen_values = true)]
    q_dir: Option<String>,
    #[arg(long = "p-dir", allow_hyphen_values = true)]
    p_dir: Option<String>,
    #[arg(long = "z-sweep")]
    z_sweep: Option<String>,
    #[arg(long = "alpha-sweep")]
    alpha_sweep: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Include the Monte Carlo ensemble checks.
    #[arg(long)]
    all: bool,
    /// Run only checks whose name contains this text.
    #[arg(long)]
    only: Option<String>,
    /// List check names and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// jump or fp.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    particles: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Initial momentum, `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    #[arg(long)]
    bins: Option<String>,
}

type Overrides = Vec<(&'static str, String)>;

fn push(out: &mut Overrides, key: &'static str, value: &Option<String>) {
    if let Some(v) = value {
        out.push((key, v.clone()));
    }
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        let mut out = Vec::new();
        push(&mut out, "stats", &self.stats);
        push(&mut out, "z", &self.z);
        push(&mut out, "m", &self.m);
        push(&mut out, "M", &self.big_m);
        push(&mut out, "beta", &self.beta);
        push(&mut out, "n", &self.n);
        push(&mut out, "g2", &self.g2);
        push(&mut out, "qc", &self.qc);
        push(&mut out, "mode", &self.mode);
        push(&mut out, "chi", &self.chi);
        push(&mut out, "tol", &self.tol);
        push(&mut out, "output", &self.output);
        push(&mut out, "format", &self.format);
        push(&mut out, "threads", &self.threads);
        if self.mirror {
            out.push(("mirror", "true".into()));
        }
        out
    }

    fn resolve(&self, extra: Overrides) -> Result<RunConfig> {
        let entries = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                config::parse_entries(&text)?
            }
            None => Vec::new(),
        };
        let mut overrides = self.overrides();
        overrides.extend(extra);
        config::assemble(&entries, &overrides)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run_command(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (cfg, list) = match &cli.command {
        Command::Dsf(a) => {
            let mut extra = Vec::new();
            push(&mut extra, "q", &a.q);
            push(&mut extra, "p", &a.p);
            push(&mut extra, "q_dir", &a.q_dir);
            push(&mut extra, "p_dir", &a.p_dir);
            push(&mut extra, "z_sweep", &a.z_sweep);
            push(&mut extra, "alpha_sweep", &a.alpha_sweep);
            (a.common.resolve(extra)?, false)
        }
        Command::Verify(a) => (a.common.resolve(Vec::new())?, a.list),
        Command::Simulate(a) => {
            let mut extra = Vec::new();
            push(&mut extra, "engine", &a.engine);
            push(&mut extra, "particles", &a.particles);
            push(&mut extra, "t_final", &a.t_final);
            push(&mut extra, "steps", &a.steps);
            push(&mut extra, "seed", &a.seed);
            push(&mut extra, "p0", &a.p0);
            push(&mut extra, "bins", &a.bins);
            (a.common.resolve(extra)?, false)
        }
        Command::Coeffs(a) => (a.resolve(Vec::new())?, false),
    };
    if list {
        for name in verify::check_names() {
            println!("{name}");
        }
        return Ok(0);
    }
    let pool = thread_pool(cfg.threads)?;
    pool.install(|| match cli.command {
        Command::Dsf(_) => {
            emit(&[("", dsf_table(&cfg)?)], &cfg)?;
            Ok(0)
        }
        Command::Verify(a) => run_verify(&cfg, a.all, a.only.as_deref()),
        Command::Simulate(_) => {
            let (series, hist) = simulate(&cfg)?;
            let mut tables = vec![("", series)];
            tables.extend(hist.map(|h| ("hist", h)));
            emit(&tables, &cfg)?;
            Ok(0)
        }
        Command::Coeffs(_) => {
            emit(&[("", coeffs_table(&cfg)?)], &cfg)?;
            Ok(0)
        }
    })
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = match threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => n,
                _ => return Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
            },
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Writes each `(tag, table)` to stdout or to the output path; a nonempty
/// tag selects the sibling file `stem.tag.ext`.
fn emit(tables: &[(&str, Table)], cfg: &RunConfig) -> Result<()> {
    match &cfg.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            for (i, (_, table)) in tables.iter().enumerate() {
                if i > 0 {
                    let _ = writeln!(stdout);
                }
                let _ = stdout.write_all(table.render(cfg.format).as_bytes());
            }
        }
        Some(path) => {
            for (tag, table) in tables {
                let target = tagged(path, tag);
                output::write_file(&target, &table.render(cfg.format))?;
                if cfg.mirror && cfg.format == Format::Csv {
                    output::write_file(&target.with_extension("json"), &table.to_json())?;
                }
            }
        }
    }
    Ok(())
}

fn tagged(path: &Path, tag: &str) -> PathBuf {
    if tag.is_empty() {
        path.to_path_buf()
    } else {
        output::sibling(path, tag)
    }
}

fn unit(v: Vector3) -> Vector3 {
    v * (1.0 / v.norm())
}

/// One row per `(alpha, z, |q|, |p|)`, in that nesting order.
pub fn dsf_table(cfg: &RunConfig) -> Result<Table> {
    let (q_hat, p_hat) = (unit(cfg.q_dir), unit(cfg.p_dir));
    let mut points = Vec::new();
    for &alpha in &cfg.alphas() {
        for &z in &cfg.fugacities() {
            for &q in &cfg.q {
                for &p in &cfg.p {
                    let params = GasParameters {
                        gas_mass: alpha * cfg.params.test_mass,
                        fugacity: z,
                        ..cfg.params
                    };
                    points.push((params, q_hat * q, p_hat * p, alpha));
                }
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|&(params, q, p, alpha)| {
            params.validate()?;
            let s = s_eval(q, p, &params, cfg.mode)?;
            let e = energy_transfer(q, p, params.test_mass);
            Ok(vec![
                q.x.into(),
                q.y.into(),
                q.z.into(),
                p.x.into(),
                p.y.into(),
                p.z.into(),
                e.into(),
                s.into(),
                cfg.mode.label().into(),
                params.stats.name().into(),
                params.fugacity.into(),
                alpha.into(),
            ])
        })
        .collect::<Result<Vec<Vec<Cell>>>>()?;
    let mut table = Table::new(&["qx", "qy", "qz", "px", "py", "pz", "E", "S", "mode", "stats", "z", "alpha"]);
    table.rows = rows;
    Ok(table)
}

fn run_verify(cfg: &RunConfig, all: bool, only: Option<&str>) -> Result<i32> {
    let checks = verify::run_checks(all, only, |c| {
        if cfg.output.is_some() {
            println!("{}", c.line());
        } else {
            eprintln!("{}", c.line());
        }
    });
    if checks.is_empty() {
        return Err(Error::Config(format!("no check matches `{}`", only.unwrap_or(""))));
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let table = verify::checks_table(&checks);
    match cfg.output {
        Some(_) => emit(&[("", table)], cfg)?,
        None => print!("{}", table.render(cfg.format)),
    }
    eprintln!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { 0 } else { 2 })
}

/// Relaxation rate used for the default duration: the kernel's linear
/// friction rate for `jump`, `2 zeta gamma` for `fp`.
fn relaxation_rate(cfg: &RunConfig, kernel: &CollisionKernel) -> Result<f64> {
    match cfg.simulation.engine {
        Engine::Jump => friction_rate(kernel, cfg.tol.max(1e-6)),
        Engine::Fp => {
            let c = compute_coefficients(&cfg.params, &cfg.ff, cfg.tol)?;
            Ok(2.0 * friction_for_statistics(c.gamma, cfg.params.fugacity, cfg.params.stats)?)
        }
    }
}

/// Moment time series and, for the jump engine, final histograms.
pub fn simulate(cfg: &RunConfig) -> Result<(Table, Option<Table>)> {
    let sim = &cfg.simulation;
    let kernel = CollisionKernel::new(cfg.params, cfg.ff, cfg.mode)?;
    let t_final = match sim.t_final {
        Some(t) => t,
        None => {
            let rate = relaxation_rate(cfg, &kernel)?;
            if !(rate > 0.0) {
                return Err(Error::parameter("t_final", "no relaxation at this fugacity; set t_final"));
            }
            5.0 / rate
        }
    };
    let times: Vec<f64> = (0..=sim.steps).map(|k| t_final * k as f64 / sim.steps as f64).collect();
    let mut series = Table::new(&["t", "mean_x", "mean_y", "mean_z", "var_x", "var_y", "var_z"]);
    let mut row = |t: f64, mean: Vector3, var: Vector3| {
        let mut cells: Vec<Cell> = vec![t.into()];
        cells.extend(mean.to_array().map(Cell::Num));
        cells.extend(var.to_array().map(Cell::Num));
        series.push(cells);
    };
    match sim.engine {
        Engine::Jump => {
            let mut state = EnsembleState::uniform(sim.particles, sim.p0, sim.seed)?;
            let process = JumpProcess::for_state(kernel, &state, 1e-6)?;
            for &t in &times {
                state = process.evolve(&state, t)?;
                let m = state.moments();
                row(t, m.mean, m.variance);
            }
            Ok((series, Some(histograms(&state.momenta, sim.bins))))
        }
        Engine::Fp => {
            let coeffs = compute_coefficients(&cfg.params, &cfg.ff, cfg.tol)?;
            for &t in &times {
                let (mean, var) =
                    evolve_moments(sim.p0, Vector3::ZERO, &coeffs, cfg.params.fugacity, cfg.params.stats, t)?;
                row(t, mean, var);
            }
            Ok((series, None))
        }
    }
}

/// Per-component histograms over each component's sample range.
pub fn histograms(momenta: &[Vector3], bins: usize) -> Table {
    let mut table = Table::new(&["component", "lo", "hi", "count"]);
    for (axis, name) in ["x", "y", "z"].into_iter().enumerate() {
        let values: Vec<f64> = momenta.iter().map(|p| p.to_array()[axis]).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        for (i, count) in counts.into_iter().enumerate() {
            let edge = |k: usize| if k == bins { hi } else { lo + width * k as f64 };
            table.push(vec![name.into(), edge(i).into(), edge(i + 1).into(), Cell::Int(count)]);
        }
    }
    table
}

pub fn coeffs_table(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params;
    let coeffs = compute_coefficients(&params, &cfg.ff, cfg.tol)?;
    let lindblad = lindblad_decomposition(cfg.chi, &coeffs, &params)?;
    let z = params.fugacity;
    let mut table = Table::new(&["quantity", "value"]);
    let mut add = |name: &str, value: Cell| table.push(vec![name.into(), value]);
    add("D_pp", coeffs.d_pp.into());
    add("D_xx", coeffs.d_xx.into());
    add("gamma", coeffs.gamma.into());
    add("lambda_M", coeffs.lambda_m.into());
    add("chi", cfg.chi.into());
    add("zeta", zeta_factor(z, params.stats)?.into());
    add("gamma_stats", friction_for_statistics(coeffs.gamma, z, params.stats)?.into());
    add("gamma_MB", friction_for_statistics(coeffs.gamma, z, Statistics::MaxwellBoltzmann)?.into());
    // The Bose value exists only below condensation.
    if let Ok(g) = friction_for_statistics(coeffs.gamma, z, Statistics::Bose) {
        add("gamma_B", g.into());
    }
    add("gamma_F", friction_for_statistics(coeffs.gamma, z, Statistics::Fermi)?.into());
    add("w_plus", lindblad.w_plus.into());
    add("w_minus", lindblad.w_minus.into());
    add("kappa", lindblad.kappa.into());
    add("completely_positive", Cell::Bool(lindblad.completely_positive));
    if let Some(single) = lindblad.single_generator {
        add("dissipator_weight", single.dissipator_weight.into());
        add("ladder_commutator", single.ladder_commutator.into());
    }
    Ok(table)
}
