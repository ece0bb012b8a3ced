//! The test-particle master equation restricted to momentum-diagonal states.
//!
//! On diagonal states the master equation is a linear Boltzmann equation:
//! a particle at momentum `p` jumps to `p + q` with intensity
//!
//! ```text
//! w(q, p) d^3q = 2 pi (2 pi)^3 n |t(q)|^2 S(q, p) d^3q
//! ```
//!
//! so the loss rate is `R(p) = int w(q, p) d^3q`. Because `S` depends on `q`
//! and `p` only through `|q|` and the energy transfer, `R` depends on `|p|`
//! only and every integral reduces to two dimensions, `(|q|, cos theta)` with
//! `theta` measured from `p`.
//!
//! The forward point `q = 0` carries no weight and is excluded.

mod ensemble;
mod envelope;
mod rate_table;


pub use ensemble::{evolve_ensemble, EnsembleState, JumpProcess, Moments};
pub use rate_table::RateTable;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{try_integrate, Tolerance};
use crate::structure_factor::{s_from_transfer, FormFactor, GasParameters, SFMode};
use crate::vector::Vector3;

/// Relative level of `q^2 |t(q)|^2` at which the momentum-transfer domain is cut.
pub const TRUNCATION_LEVEL: f64 = 1e-12;

/// The jump intensity of the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernel {
    pub params: GasParameters,
    pub ff: FormFactor,
    pub mode: SFMode,
}

impl CollisionKernel {
    pub fn new(params: GasParameters, ff: FormFactor, mode: SFMode) -> Result<Self> {
        let kernel = CollisionKernel { params, ff, mode };
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.ff.validate()
    }

    /// `2 pi (2 pi)^3 n`.
    pub fn measure_constant(&self) -> f64 {
        2.0 * PI * (2.0 * PI).powi(3) * self.params.density
    }

    /// Largest momentum transfer kept in the measure.
    pub fn q_max(&self) -> f64 {
        self.ff.truncation_radius(TRUNCATION_LEVEL)
    }

    /// Energy gained in the jump `p -> p + q`, from `|q|`, `|p|` and the
    /// cosine of the angle between them.
    pub fn energy(&self, q_norm: f64, cos_theta: f64, p_norm: f64) -> f64 {
        (0.5 * q_norm * q_norm + p_norm * q_norm * cos_theta) / self.params.test_mass
    }

    /// `|t(q)|^2 S(q, E)`: the weight without the measure constant.
    pub(crate) fn reduced_weight(&self, q_norm: f64, energy: f64) -> Result<f64> {
        let t2 = self.ff.value(q_norm);
        if t2 == 0.0 {
            return Ok(0.0);
        }
        Ok(t2 * s_from_transfer(q_norm, energy, &self.params, self.mode)?)
    }

    /// Jump intensity `w(q, p)`.
    pub fn weight(&self, q: Vector3, p: Vector3) -> Result<f64> {
        let q_norm = q.norm();
        if q_norm == 0.0 {
            return Err(Error::DegenerateMomentum("the forward point q = 0 is excluded"));
        }
        let energy = (0.5 * q.norm_squared() + p.dot(q)) / self.params.test_mass;
        Ok(self.measure_constant() * self.reduced_weight(q_norm, energy)?)
    }

    /// Angular positions, for given `|q|` and `|p|`, where the exact factors
    /// `A` or `B` peak; used as quadrature breakpoints.
    fn breakpoints(&self, q_norm: f64, p_norm: f64) -> Vec<f64> {
        let mut points = vec![-1.0, 1.0];
        if p_norm > 0.0 {
            let alpha = self.params.alpha();
            // sigma = (1 + alpha) q / 2 + alpha p c, sigma - q = (alpha - 1) q / 2 + alpha p c
            for c in [
                -(1.0 + alpha) * q_norm / (2.0 * alpha * p_norm),
                (1.0 - alpha) * q_norm / (2.0 * alpha * p_norm),
            ] {
                for c in [c, -c] {
                    if c > -1.0 && c < 1.0 {
                        points.push(c);
                    }
                }
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// `int_0^qmax dq q^2 |t|^2 int_-1^1 dc f(q, c)`, with `f` given the
    /// energy transfer of the jump.
    fn radial_angular<F>(&self, p_norm: f64, tol: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64, f64, f64) -> Result<f64>,
    {
        let inner_tol = Tolerance::relative(0.1 * tol);
        let outer_tol = Tolerance::relative(tol).with_initial_pieces(8);
        let estimate = try_integrate(
            |q| {
                let t2 = self.ff.value(q);
                if t2 == 0.0 {
                    return Ok(0.0);
                }
                let points = self.breakpoints(q, p_norm);
                let mut inner = 0.0;
                for pair in points.windows(2) {
                    inner += try_integrate(|c| f(q, c, self.energy(q, c, p_norm)), pair[0], pair[1], &inner_tol)?
                        .value;
                }
                Ok(q * q * t2 * inner)
            },
            0.0,
            self.q_max(),
            &outer_tol,
        )?;
        Ok(2.0 * PI * self.measure_constant() * estimate.value)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::parameter("tol", format!("tolerance must be finite and > 0, got {tol}")))
    }
}

/// Loss rate `R(|p|)` by direct two-dimensional quadrature.
pub(crate) fn rate_at(p_norm: f64, kernel: &CollisionKernel, tol: f64) -> Result<f64> {
    kernel.radial_angular(p_norm, tol, |q, _, e| {
        s_from_transfer(q, e, &kernel.params, kernel.mode)
    })
}

/// Total jump rate `R(p) = int w(q, p) d^3q` to relative tolerance `tol`.
pub fn total_rate(p: Vector3, kernel: &CollisionKernel, tol: f64) -> Result<f64> {
    kernel.validate()?;
    check_tol(tol)?;
    rate_at(p.norm(), kernel, tol)
}

/// Mean momentum change per unit time along `p`, `int (q . p_hat) w(q, p) d^3q`.
pub fn mean_drift(p_norm: f64, kernel: &CollisionKernel, tol: f64) -> Result<f64> {
    kernel.validate()?;
    check_tol(tol)?;
    kernel.radial_angular(p_norm, tol, |q, c, e| {
        Ok(q * c * s_from_transfer(q, e, &kernel.params, kernel.mode)?)
    })
}

/// Decay rate of the mean momentum of a slightly displaced canonical
/// ensemble. Displacing `exp(-beta p^2/2M)` by `u` perturbs it by
/// `beta u.p / M` times itself, so linear response gives
///
/// ```text
/// eta = -(beta / 3M) < |p| drift(|p|) >_canonical
/// ```
///
/// When the drift is linear, `-eta p`, this is just `eta`; in the Brownian
/// limit it tends to `2 zeta gamma`.
pub fn friction_rate(kernel: &CollisionKernel, tol: f64) -> Result<f64> {
    kernel.validate()?;
    check_tol(tol)?;
    let thermal = (kernel.params.test_mass / kernel.params.beta).sqrt();
    // |p| = s * thermal; the canonical weight is s^2 exp(-s^2/2) / sqrt(pi/2).
    let moment = try_integrate(
        |s| {
            let p = s * thermal;
            Ok(s * s * (-0.5 * s * s).exp() * p * mean_drift(p, kernel, 0.1 * tol)?)
        },
        0.0,
        12.0,
        &Tolerance::relative(tol),
    )?;
    let average = moment.value * (2.0 / PI).sqrt();
    Ok(-kernel.params.beta / (3.0 * kernel.params.test_mass) * average)
}

/// Draws a momentum transfer with density `w(q, p) / R(p)`.
pub fn sample_collision<R: Rng + ?Sized>(
    p: Vector3,
    kernel: &CollisionKernel,
    rng: &mut R,
) -> Result<Vector3> {
    kernel.validate()?;
    let p_norm = p.norm();
    let env = envelope::Envelope::build(kernel, p_norm, p_norm)?;
    env.sample(kernel, p, rng)
}

// Gain and loss integrals at p for the canonical state exp(-beta p^2 / 2M):
// gain = int w(q, p - q) rho(p - q) / rho(p), loss = R(p).
fn gain_loss(p_norm: f64, kernel: &CollisionKernel, tol: f64) -> Result<(f64, f64)> {
    let params = &kernel.params;
    let loss = rate_at(p_norm, kernel, tol)?;
    let gain = kernel.radial_angular(p_norm, tol, |q, c, _| {
        // Jump from p - q to p: E = (-q^2/2 + p q c) / M, and
        // rho(p - q) / rho(p) = exp(beta E).
        let e = (-0.5 * q * q + p_norm * q * c) / params.test_mass;
        Ok(s_from_transfer(q, e, params, kernel.mode)? * (params.beta * e).exp())
    })?;
    Ok((gain, loss))
}

/// Relative imbalance of gain and loss at `p` for the canonical momentum
/// distribution, `(gain - loss) / loss`. It vanishes when the canonical
/// state is stationary.
pub fn stationarity_residual(p: Vector3, kernel: &CollisionKernel, tol: f64) -> Result<f64> {
    kernel.validate()?;
    check_tol(tol)?;
    let (gain, loss) = gain_loss(p.norm(), kernel, tol)?;
    if loss == 0.0 {
        return Ok(0.0);
    }
    Ok((gain - loss) / loss)
}

/// Unnormalized time derivative of `rho(p)` under the master equation for
/// `rho = scale * exp(-beta p^2 / 2M)`.
pub fn stationarity_balance(p: Vector3, kernel: &CollisionKernel, scale: f64, tol: f64) -> Result<f64> {
    kernel.validate()?;
    check_tol(tol)?;
    let (gain, loss) = gain_loss(p.norm(), kernel, tol)?;
    let rho = scale * (-kernel.params.beta * p.norm_squared() / (2.0 * kernel.params.test_mass)).exp();
    Ok(rho * (gain - loss))
}
