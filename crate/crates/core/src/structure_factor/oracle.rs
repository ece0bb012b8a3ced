//! Brute-force evaluation of the ideal-gas structure factor.
//!
//! The three-dimensional momentum integral over gas states collapses, after
//! the angular delta function is resolved, to
//!
//! ```text
//! int d^3k <n_k> delta(eta - 2 k.q) = (pi / q) int_{|eta|/2q}^inf k <n_k> dk
//! ```
//!
//! which is integrated numerically here instead of in closed form. For
//! Bose/Fermi gases the structure factor is the difference of two such
//! integrals at `eta = 2mE + q^2` and `eta = 2mE - q^2`, divided by
//! `1 - exp(beta E)`. Their difference is integrated directly over the
//! finite interval between the two lower limits.

use std::f64::consts::PI;

use super::{energy_transfer, GasParameters};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, Tolerance};
use crate::statistics::Statistics;
use crate::vector::Vector3;

fn occupation(k: f64, params: &GasParameters) -> f64 {
    let boltzmann = params.fugacity * (-params.beta * k * k / (2.0 * params.gas_mass)).exp();
    match params.stats {
        Statistics::MaxwellBoltzmann => boltzmann,
        Statistics::Bose => boltzmann / (1.0 - boltzmann),
        Statistics::Fermi => boltzmann / (1.0 + boltzmann),
    }
}

/// Structure factor by numerical quadrature of the reduced momentum
/// integrals, to relative tolerance `tol`.
pub fn s_oracle(q: Vector3, p: Vector3, params: &GasParameters, tol: f64) -> Result<f64> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::parameter("tol", format!("tolerance must be > 0, got {tol}")));
    }
    let q_norm = q.norm();
    if q_norm == 0.0 {
        return Err(Error::DegenerateMomentum("structure factor requires q != 0"));
    }
    let m = params.gas_mass;
    let energy = energy_transfer(q, p, params.test_mass);
    let q2 = q_norm * q_norm;
    let eta_plus = 2.0 * m * energy + q2;
    let eta_minus = 2.0 * m * energy - q2;
    let k_plus = eta_plus.abs() / (2.0 * q_norm);
    let k_minus = eta_minus.abs() / (2.0 * q_norm);
    let quad = Tolerance::relative(tol * 0.1).with_initial_pieces(8);
    let moment = |k: f64| k * occupation(k, params);
    // (1/n) (2m) (2 pi)^-3 (pi / q)
    let norm = 2.0 * m / (params.density * 8.0 * PI * PI * PI) * PI / q_norm;

    match params.stats {
        Statistics::MaxwellBoltzmann => {
            let tail = integrate_semi_infinite(moment, k_plus, &quad)?;
            Ok(norm * tail.value)
        }
        Statistics::Bose | Statistics::Fermi => {
            let beta_e = params.beta * energy;
            if beta_e == 0.0 {
                // Both limits coincide; the ratio tends to
                // k <n_k> (k_minus - k_plus) / (-beta E) with k_minus - k_plus = -2mE/q.
                let k = k_plus;
                return Ok(norm * moment(k) * 2.0 * m / (params.beta * q_norm));
            }
            let between = integrate(moment, k_plus, k_minus, &quad)?;
            Ok(norm * between.value / -beta_e.exp_m1())
        }
    }
}
