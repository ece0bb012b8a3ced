//! Bose-Einstein and Fermi-Dirac functions of integer order and the
//! statistics weight `zeta(z)` of the Brownian-limit generator.
//!
//! Orders `nu <= 0` are evaluated from closed rational forms, obtained from
//! `g_1(z) = -ln(1 - z)` by repeated application of `z d/dz`. Orders `nu >= 2`
//! are summed from the fugacity series `sum_k z^k / k^nu`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest fugacity accepted for a Bose gas.
pub const BOSE_Z_MAX: f64 = 1.0 - 1e-9;

/// Series terms below `SERIES_REL_TOL * partial_sum` end the summation.
pub const SERIES_REL_TOL: f64 = 1e-16;

const SERIES_MAX_TERMS: usize = 1_000_000;

/// Quantum statistics of the background gas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    #[serde(rename = "mb")]
    MaxwellBoltzmann,
    Bose,
    Fermi,
}

impl Statistics {
    pub const ALL: [Statistics; 3] = [
        Statistics::MaxwellBoltzmann,
        Statistics::Bose,
        Statistics::Fermi,
    ];

    /// `+1` for bosons, `-1` for fermions, `0` for the classical gas.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::MaxwellBoltzmann => 0.0,
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::MaxwellBoltzmann => "mb",
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
        }
    }

    /// Checks that `z` is an admissible fugacity for this statistics.
    pub fn check_fugacity(self, z: f64) -> Result<()> {
        if !z.is_finite() || z < 0.0 {
            return Err(Error::domain("z", format!("fugacity must be finite and >= 0, got {z}")));
        }
        if self == Statistics::Bose && z > BOSE_Z_MAX {
            return Err(Error::domain(
                "z",
                format!("Bose gas requires 0 <= z < 1 (max {BOSE_Z_MAX}), got {z}"),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mb" | "maxwell-boltzmann" | "maxwellboltzmann" | "classical" => {
                Ok(Statistics::MaxwellBoltzmann)
            }
            "bose" | "be" | "bose-einstein" => Ok(Statistics::Bose),
            "fermi" | "fd" | "fermi-dirac" => Ok(Statistics::Fermi),
            other => Err(Error::parameter(
                "stats",
                format!("unknown statistics `{other}` (expected mb, bose or fermi)"),
            )),
        }
    }
}

/// Rational closed forms of `g_nu` for `nu in {0, -1, -2}`, valid for any
/// `z != 1`. Fermi functions follow from `f_nu(z) = -g_nu(-z)`.
fn closed_form(nu: i32, z: f64) -> f64 {
    let w = 1.0 - z;
    match nu {
        0 => z / w,
        -1 => z / (w * w),
        -2 => (z + z * z) / (w * w * w),
        _ => unreachable!("closed form requested for nu = {nu}"),
    }
}

/// `sum_{k>=1} sign^(k-1) z^k / k^nu` for `0 <= z < 1`.
fn series(nu: i32, z: f64, sign: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut power = z;
    let mut alternation = 1.0;
    let mut sum = 0.0;
    for k in 1..=SERIES_MAX_TERMS {
        let term = alternation * power / (k as f64).powi(nu);
        sum += term;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            return Ok(sum);
        }
        power *= z;
        alternation *= sign;
    }
    Err(Error::Convergence { ratio: z })
}

// Cohen-Villegas-Zagier acceleration of sum_{k>=1} (-1)^(k-1) z^k / k^nu.
// The terms are completely monotone in k for 0 <= z <= 1, so the error
// falls like (3 + sqrt 8)^-n even at z = 1 where the plain series crawls.
fn alternating(nu: i32, z: f64) -> f64 {
    const N: i32 = 32;
    let d = (3.0 + 8f64.sqrt()).powi(N);
    let d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut sum = 0.0;
    for k in 0..N {
        c = b - c;
        let kk = (k + 1) as f64;
        sum += c * z.powi(k + 1) / kk.powi(nu);
        b *= f64::from((k + N) * (k - N)) / ((f64::from(k) + 0.5) * kk);
    }
    sum / d
}

fn check_order(nu: i32) -> Result<()> {
    if nu < -2 {
        Err(Error::UnsupportedOrder(nu))
    } else {
        Ok(())
    }
}

/// Analytic continuation of the Bose function used by identities such as
/// `f_n(z) = -g_n(-z)`: accepts any real `z < 1` for `nu <= 1` and
/// `|z| < 1` for `nu >= 2`.
pub fn bose_g_continued(nu: i32, z: f64) -> Result<f64> {
    check_order(nu)?;
    if !z.is_finite() || z >= 1.0 {
        return Err(Error::domain("z", format!("g_{nu}(z) diverges for z >= 1, got {z}")));
    }
    match nu {
        -2..=0 => Ok(closed_form(nu, z)),
        1 => Ok(-(-z).ln_1p()),
        _ if z.abs() < 1.0 => series(nu, z.abs(), z.signum()).map(|s| s * z.signum()),
        _ => Err(Error::domain("z", format!("series for g_{nu} requires |z| < 1, got {z}"))),
    }
}

/// Bose-Einstein function `g_nu(z)` on the physical domain `0 <= z < 1`.
///
/// ```
/// use rayleigh_gas::statistics::bose_g;
/// assert_eq!(bose_g(0, 0.5).unwrap(), 1.0);
/// assert_eq!(bose_g(-1, 0.5).unwrap(), 2.0);
/// ```
pub fn bose_g(nu: i32, z: f64) -> Result<f64> {
    check_order(nu)?;
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain("z", format!("Bose function requires z >= 0, got {z}")));
    }
    if z > BOSE_Z_MAX {
        return Err(Error::domain(
            "z",
            format!("Bose function diverges as z -> 1 (max {BOSE_Z_MAX}), got {z}"),
        ));
    }
    match nu {
        -2..=0 => Ok(closed_form(nu, z)),
        1 => Ok(-(-z).ln_1p()),
        _ => series(nu, z, 1.0),
    }
}

/// Fermi-Dirac function `f_nu(z)` for `z >= 0`.
///
/// Orders `nu <= 1` are valid for every `z >= 0`; higher orders use the
/// alternating fugacity series and are limited to `z <= 1`.
pub fn fermi_f(nu: i32, z: f64) -> Result<f64> {
    check_order(nu)?;
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain("z", format!("Fermi function requires z >= 0, got {z}")));
    }
    match nu {
        -2..=0 => Ok(-closed_form(nu, -z)),
        1 => Ok(z.ln_1p()),
        _ if z <= 1.0 => Ok(alternating(nu, z)),
        _ => Err(Error::domain(
            "z",
            format!("f_{nu} is only available for z <= 1, got {z}"),
        )),
    }
}

/// Weight of the quantum-dissipation generator: `z`, `z/(1-z)` or `z/(1+z)`.
pub fn zeta_factor(z: f64, stats: Statistics) -> Result<f64> {
    stats.check_fugacity(z)?;
    match stats {
        Statistics::MaxwellBoltzmann => Ok(z),
        Statistics::Bose => bose_g(0, z),
        Statistics::Fermi => fermi_f(0, z),
    }
}
