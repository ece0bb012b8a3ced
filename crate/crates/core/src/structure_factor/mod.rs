//! Dynamic structure factor of an ideal gas seen by a test particle.
//!
//! All closed forms share the shape
//!
//! ```text
//! S = C(q) * F(A, B),   C(q) = m^2 / (4 pi^2 n beta q)
//! ```
//!
//! where `A = z exp(-beta sigma^2 / 2m)` and `B = z exp(-beta (sigma - q)^2 / 2m)`
//! are the two Boltzmann-like factors of the gas, with `B = A exp(beta E)`.
//! In the Brownian limit the exponents keep only the terms linear in the
//! energy transfer: `A = z exp(-beta q^2/8m - beta E/2)`, `B = A exp(beta E)`.
//!
//! * Maxwell-Boltzmann: `F = A`.
//! * Bose (`s = +1`) / Fermi (`s = -1`), logarithmic form:
//!   `F = s ln(1 + s (B - A)/(1 - s B)) / expm1(beta E)`.
//! * Same, inverse-hyperbolic form:
//!   `F = 2A / (2 - s(A + B)) * artanh(y) / y`, `y = s (B - A) / (2 - s(A + B))`.
//!
//! The second form has no removable singularity at `E = 0`, which is why it
//! carries the small-`E` branch.

mod oracle;

pub use oracle::s_oracle;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistics::Statistics;
use crate::vector::Vector3;

/// Below this `|beta E|` the Bose/Fermi forms switch to the analytic branch.
pub const SMALL_ENERGY_THRESHOLD: f64 = 1e-6;

/// Thermodynamic and mechanical parameters (natural units, hbar = k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParameters {
    /// Mass `m` of a gas particle.
    pub gas_mass: f64,
    /// Mass `M` of the test particle.
    pub test_mass: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Fugacity `z = exp(beta mu)`.
    pub fugacity: f64,
    /// Number density of the gas.
    pub density: f64,
    pub stats: Statistics,
}

impl Default for GasParameters {
    fn default() -> Self {
        GasParameters {
            gas_mass: 1.0,
            test_mass: 1.0,
            beta: 1.0,
            fugacity: 0.1,
            density: 1.0,
            stats: Statistics::MaxwellBoltzmann,
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::parameter(field, format!("must be finite and > 0, got {v}")))
    }
}

impl GasParameters {
    pub fn new(
        gas_mass: f64,
        test_mass: f64,
        beta: f64,
        fugacity: f64,
        density: f64,
        stats: Statistics,
    ) -> Result<Self> {
        let p = GasParameters {
            gas_mass,
            test_mass,
            beta,
            fugacity,
            density,
            stats,
        };
        p.validate()?;
        Ok(p)
    }

    /// `m = M = beta = n = 1` with the given fugacity and statistics.
    pub fn unit(fugacity: f64, stats: Statistics) -> Self {
        GasParameters {
            fugacity,
            stats,
            ..GasParameters::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("m", self.gas_mass)?;
        check_positive("M", self.test_mass)?;
        check_positive("beta", self.beta)?;
        check_positive("n", self.density)?;
        self.stats.check_fugacity(self.fugacity)?;
        let alpha = self.alpha();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::parameter("alpha", format!("m/M must be finite and > 0, got {alpha}")));
        }
        Ok(())
    }

    /// Mass ratio `alpha = m / M`.
    pub fn alpha(&self) -> f64 {
        self.gas_mass / self.test_mass
    }

    pub fn with_stats(mut self, stats: Statistics, fugacity: f64) -> Self {
        self.stats = stats;
        self.fugacity = fugacity;
        self
    }

    pub fn with_fugacity(mut self, fugacity: f64) -> Self {
        self.fugacity = fugacity;
        self
    }

    /// `m^2 / (4 pi^2 n beta)`: the `q`-independent part of every closed form.
    pub(crate) fn prefactor(&self) -> f64 {
        self.gas_mass * self.gas_mass / (4.0 * PI * PI * self.density * self.beta)
    }
}

/// Exact expressions or their heavy-particle (Brownian) limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Exact,
    BrownianLimit,
}

/// The structure factor itself, or `exp(beta E / 2) S`, which is even under
/// `(q, E) -> (-q, -E)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrization {
    Plain,
    Symmetrized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SFMode {
    pub regime: Regime,
    pub symmetrization: Symmetrization,
}

impl SFMode {
    pub const EXACT: SFMode = SFMode::new(Regime::Exact, Symmetrization::Plain);
    pub const BROWNIAN: SFMode = SFMode::new(Regime::BrownianLimit, Symmetrization::Plain);
    pub const EXACT_SYMMETRIZED: SFMode = SFMode::new(Regime::Exact, Symmetrization::Symmetrized);
    pub const BROWNIAN_SYMMETRIZED: SFMode =
        SFMode::new(Regime::BrownianLimit, Symmetrization::Symmetrized);

    pub const fn new(regime: Regime, symmetrization: Symmetrization) -> Self {
        SFMode {
            regime,
            symmetrization,
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.regime, self.symmetrization) {
            (Regime::Exact, Symmetrization::Plain) => "exact",
            (Regime::Exact, Symmetrization::Symmetrized) => "exact-sym",
            (Regime::BrownianLimit, Symmetrization::Plain) => "brownian",
            (Regime::BrownianLimit, Symmetrization::Symmetrized) => "brownian-sym",
        }
    }
}

impl fmt::Display for SFMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SFMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(SFMode::EXACT),
            "exact-sym" | "exact-symmetrized" => Ok(SFMode::EXACT_SYMMETRIZED),
            "brownian" => Ok(SFMode::BROWNIAN),
            "brownian-sym" | "brownian-symmetrized" => Ok(SFMode::BROWNIAN_SYMMETRIZED),
            other => Err(Error::parameter(
                "mode",
                format!("unknown mode `{other}` (expected exact, exact-sym, brownian or brownian-sym)"),
            )),
        }
    }
}

/// Squared Fourier transform of the two-body T matrix, `|t(q)|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FormFactor {
    /// `g2 * exp(-q^2 / cutoff^2)`.
    GaussianCutoff { coupling: f64, cutoff: f64 },
}

impl Default for FormFactor {
    fn default() -> Self {
        FormFactor::GaussianCutoff {
            coupling: 1.0,
            cutoff: 2.0,
        }
    }
}

impl FormFactor {
    pub fn gaussian(coupling: f64, cutoff: f64) -> Result<Self> {
        let ff = FormFactor::GaussianCutoff { coupling, cutoff };
        ff.validate()?;
        Ok(ff)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FormFactor::GaussianCutoff { coupling, cutoff } => {
                if !(coupling.is_finite() && coupling >= 0.0) {
                    return Err(Error::parameter("g2", format!("coupling must be >= 0, got {coupling}")));
                }
                check_positive("qc", cutoff)
            }
        }
    }

    pub fn value(&self, q: f64) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { coupling, cutoff } => {
                coupling * (-(q * q) / (cutoff * cutoff)).exp()
            }
        }
    }

    pub fn coupling(&self) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { coupling, .. } => coupling,
        }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { cutoff, .. } => cutoff,
        }
    }

    /// Momentum beyond which `q^2 |t(q)|^2` stays below `rel` times its peak.
    pub fn truncation_radius(&self, rel: f64) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { cutoff, .. } => {
                // u = q^2/qc^2: solve u exp(1 - u) = rel for u > 1.
                let target = -rel.ln();
                let mut u = 1.0 + target;
                for _ in 0..60 {
                    let g = u - 1.0 - u.ln() - target;
                    let dg = 1.0 - 1.0 / u;
                    let step = g / dg;
                    u -= step;
                    if step.abs() < 1e-15 * u {
                        break;
                    }
                }
                cutoff * u.sqrt()
            }
        }
    }
}

/// Energy gained by the test particle when its momentum changes from `p` to
/// `p + q`.
pub fn energy_transfer(q: Vector3, p: Vector3, test_mass: f64) -> f64 {
    (q.norm_squared() / 2.0 + p.dot(q)) / test_mass
}

/// Momentum parallel to `q` that realizes energy transfer `energy`.
pub fn momentum_for_energy(q: Vector3, energy: f64, test_mass: f64) -> Vector3 {
    let q2 = q.norm_squared();
    q * ((test_mass * energy - q2 / 2.0) / q2)
}

/// `sigma(q, p) = (q^2 + 2 alpha M E) / (2 |q|)`.
pub fn sigma(q: Vector3, p: Vector3, params: &GasParameters) -> Result<f64> {
    let q_norm = q.norm();
    if q_norm == 0.0 {
        return Err(Error::DegenerateMomentum("sigma requires |q| > 0"));
    }
    let e = energy_transfer(q, p, params.test_mass);
    Ok(sigma_from_transfer(q_norm, e, params))
}

fn sigma_from_transfer(q_norm: f64, energy: f64, params: &GasParameters) -> f64 {
    (q_norm * q_norm + 2.0 * params.gas_mass * energy) / (2.0 * q_norm)
}

/// The pair `(A, B)` of gas Boltzmann factors; `B = A exp(beta E)`.
pub(crate) fn boltzmann_factors(
    q_norm: f64,
    energy: f64,
    params: &GasParameters,
    regime: Regime,
) -> (f64, f64) {
    let z = params.fugacity;
    let m = params.gas_mass;
    let beta = params.beta;
    match regime {
        Regime::Exact => {
            let s = sigma_from_transfer(q_norm, energy, params);
            let a = z * (-beta * s * s / (2.0 * m)).exp();
            let d = s - q_norm;
            let b = z * (-beta * d * d / (2.0 * m)).exp();
            (a, b)
        }
        Regime::BrownianLimit => {
            let base = -beta * q_norm * q_norm / (8.0 * m);
            let half = beta * energy / 2.0;
            (z * (base - half).exp(), z * (base + half).exp())
        }
    }
}

/// `artanh(y) / y`, regular at `y = 0`.
pub(crate) fn artanh_ratio(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 + y2 * (1.0 / 3.0 + y2 * (1.0 / 5.0 + y2 / 7.0))
    } else {
        y.atanh() / y
    }
}

fn check_bose_brownian(a: f64, b: f64, stats: Statistics) -> Result<()> {
    if stats == Statistics::Bose && (a >= 1.0 || b >= 1.0) {
        return Err(Error::domain(
            "z",
            format!(
                "Brownian-limit Bose form needs z exp(-beta q^2/8m +- beta E/2) < 1, got {:.6}",
                a.max(b)
            ),
        ));
    }
    Ok(())
}

/// Plain structure factor divided by `C(q)`, via the inverse-hyperbolic
/// representation.
fn reduced_arth(a: f64, b: f64, beta_e: f64, sign: f64) -> f64 {
    let denom = 2.0 - sign * (a + b);
    let y = sign * a * beta_e.exp_m1() / denom;
    2.0 * a / denom * artanh_ratio(y)
}

/// Plain structure factor divided by `C(q)`, via the logarithmic form, with
/// the analytic branch near `E = 0`.
fn reduced_log(a: f64, b: f64, beta_e: f64, sign: f64) -> f64 {
    if beta_e.abs() < SMALL_ENERGY_THRESHOLD {
        let denom = 2.0 - sign * (a + b);
        let y = sign * a * beta_e.exp_m1() / denom;
        let y2 = y * y;
        return 2.0 * a / denom * (1.0 + y2 / 3.0);
    }
    let e1 = beta_e.exp_m1();
    let x = sign * a * e1 / (1.0 - sign * b);
    if x.abs() <= 0.5 {
        sign * x.ln_1p() / e1
    } else {
        // 1 + x = (1 - sign a) / (1 - sign b); taking logs separately avoids
        // rounding 1 + x when it is tiny (degenerate Fermi at large E).
        sign * ((-sign * a).ln_1p() - (-sign * b).ln_1p()) / e1
    }
}

fn symmetrize(value: f64, energy: f64, params: &GasParameters, mode: SFMode) -> f64 {
    match mode.symmetrization {
        Symmetrization::Plain => value,
        Symmetrization::Symmetrized => value * (params.beta * energy / 2.0).exp(),
    }
}

/// Structure factor as a function of `|q|` and the energy transfer.
///
/// Parameters are assumed valid; `s_eval` is the checked entry point.
pub fn s_from_transfer(q_norm: f64, energy: f64, params: &GasParameters, mode: SFMode) -> Result<f64> {
    if !(q_norm > 0.0) {
        return Err(Error::DegenerateMomentum("structure factor requires |q| > 0"));
    }
    let (a, b) = boltzmann_factors(q_norm, energy, params, mode.regime);
    let sign = params.stats.sign();
    let reduced = match params.stats {
        Statistics::MaxwellBoltzmann => a,
        Statistics::Bose | Statistics::Fermi => {
            if mode.regime == Regime::BrownianLimit {
                check_bose_brownian(a, b, params.stats)?;
            }
            reduced_log(a, b, params.beta * energy, sign)
        }
    };
    let plain = params.prefactor() / q_norm * reduced;
    Ok(symmetrize(plain, energy, params, mode))
}

/// Dynamic structure factor `S(q, p)` in the requested mode.
///
/// ```
/// use rayleigh_gas::statistics::Statistics;
/// use rayleigh_gas::structure_factor::{s_eval, GasParameters, SFMode};
/// use rayleigh_gas::vector::Vector3;
///
/// let params = GasParameters::unit(1.0, Statistics::MaxwellBoltzmann);
/// let q = Vector3::new(1.0, 0.0, 0.0);
/// let s = s_eval(q, Vector3::ZERO, &params, SFMode::EXACT).unwrap();
/// let expected = (-0.5f64).exp() / (4.0 * std::f64::consts::PI.powi(2));
/// assert!((s - expected).abs() < 1e-15);
/// ```
pub fn s_eval(q: Vector3, p: Vector3, params: &GasParameters, mode: SFMode) -> Result<f64> {
    params.validate()?;
    let q_norm = q.norm();
    if q_norm == 0.0 {
        return Err(Error::DegenerateMomentum("structure factor requires q != 0"));
    }
    let energy = energy_transfer(q, p, params.test_mass);
    s_from_transfer(q_norm, energy, params, mode)
}

/// Bose/Fermi structure factor through the inverse-hyperbolic representation.
///
/// For a Fermi gas with `z > 1` the argument is assembled from
/// `w = z / (1 + z)`, which stays bounded as the gas degenerates.
pub fn s_arth(q_norm: f64, energy: f64, params: &GasParameters, regime: Regime) -> Result<f64> {
    params.validate()?;
    if params.stats == Statistics::MaxwellBoltzmann {
        return Err(Error::parameter("stats", "the artanh form applies to Bose or Fermi statistics"));
    }
    if !(q_norm > 0.0) {
        return Err(Error::DegenerateMomentum("structure factor requires |q| > 0"));
    }
    let (a, b) = boltzmann_factors(q_norm, energy, params, regime);
    if regime == Regime::BrownianLimit {
        check_bose_brownian(a, b, params.stats)?;
    }
    let beta_e = params.beta * energy;
    let z = params.fugacity;
    let reduced = if params.stats == Statistics::Fermi && z > 1.0 {
        let w = z / (1.0 + z);
        // Fugacity-free factors: a = A/z, b = B/z.
        let (a0, b0) = (a / z, b / z);
        let d = w * (2.0 - a0 - b0) - 2.0;
        let y = w * a0 * beta_e.exp_m1() / d;
        -2.0 * w * a0 / d * artanh_ratio(y)
    } else {
        reduced_arth(a, b, beta_e, params.stats.sign())
    };
    Ok(params.prefactor() / q_norm * reduced)
}

/// Partial sum `k <= k_max` of the fugacity expansion of the Brownian-limit
/// structure factor.
pub fn s_series(q_norm: f64, energy: f64, params: &GasParameters, k_max: usize) -> Result<f64> {
    params.validate()?;
    if !(q_norm > 0.0) {
        return Err(Error::DegenerateMomentum("structure factor requires |q| > 0"));
    }
    let mb = s_from_transfer(
        q_norm,
        energy,
        &params.with_stats(Statistics::MaxwellBoltzmann, params.fugacity),
        SFMode::BROWNIAN,
    )?;
    let sign = params.stats.sign();
    if sign == 0.0 || k_max == 0 {
        return Ok(mb);
    }
    let z = params.fugacity;
    let m = params.gas_mass;
    let x = (params.beta * energy / 2.0).abs();
    let damping = (-params.beta * q_norm * q_norm / (8.0 * m)).exp();
    let ratio = z * damping * x.exp();
    if ratio >= 1.0 {
        return Err(Error::Convergence { ratio });
    }
    let denom = (-2.0 * x).exp_m1();
    let mut sum = 1.0;
    let mut coefficient = 1.0; // (sign z damping)^k
    for k in 1..=k_max {
        coefficient *= sign * z * damping;
        let kk = k as f64;
        // sinh((k+1)x)/sinh(x), written to avoid overflow for large k x.
        let sinh_ratio = if x < 1e-300 {
            kk + 1.0
        } else {
            (kk * x).exp() * (-2.0 * (kk + 1.0) * x).exp_m1() / denom
        };
        sum += coefficient * sinh_ratio / (kk + 1.0);
    }
    Ok(mb * sum)
}

/// Double-differential cross-section per target particle for scattering
/// `p -> p_prime` (exact, plain structure factor).
pub fn cross_section(
    p: Vector3,
    p_prime: Vector3,
    params: &GasParameters,
    ff: &FormFactor,
) -> Result<f64> {
    params.validate()?;
    ff.validate()?;
    let p_norm = p.norm();
    if p_norm == 0.0 {
        return Err(Error::DegenerateMomentum("cross-section requires p != 0"));
    }
    let q = p_prime - p;
    let q_norm = q.norm();
    if q_norm == 0.0 {
        return Err(Error::DegenerateMomentum("cross-section requires p' != p"));
    }
    let s = s_eval(q, p, params, SFMode::EXACT)?;
    let two_pi = 2.0 * PI;
    let mass_factor = params.test_mass / two_pi;
    Ok(two_pi.powi(6) * mass_factor * mass_factor * (p_prime.norm() / p_norm) * ff.value(q_norm) * s)
}

#[cfg(test)]
mod tests;
