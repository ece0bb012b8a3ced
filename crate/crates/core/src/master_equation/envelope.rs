//! Rejection envelope for the jump density over `(|q|, cos theta)`.
//!
//! The target density is proportional to `q^2 |t(q)|^2 S(q, E)`. With
//! `S = C0 F / q`, and `F` bounded by closed-form maxima of the gas factors
//! over a cell, each `|q|` bin gets a constant bound valid for every angle and
//! every `|p|` in a given interval. The proposal is piecewise uniform in `|q|`
//! and uniform in `cos theta`.

use std::f64::consts::PI;

use rand::Rng;

use super::CollisionKernel;
use crate::error::{Error, Result};
use crate::statistics::Statistics;
use crate::structure_factor::{s_from_transfer, Regime, Symmetrization};
use crate::vector::Vector3;

const BINS: usize = 48;
const MAX_PROPOSALS: usize = 10_000_000;

#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    width: f64,
    bounds: Vec<f64>,
    cumulative: Vec<f64>,
}

// Smallest |k q + w c| over q in [lo, hi], c in [-1, 1].
fn min_abs_linear(k: f64, lo: f64, hi: f64, w: f64) -> f64 {
    let (a, b) = (k * lo, k * hi);
    let low = a.min(b) - w;
    let high = a.max(b) + w;
    if low <= 0.0 && high >= 0.0 {
        0.0
    } else {
        low.abs().min(high.abs())
    }
}

// Upper bound of F (plain or symmetrized) over the cell.
fn reduced_bound(kernel: &CollisionKernel, q_lo: f64, q_hi: f64, p_hi: f64) -> Result<f64> {
    let params = &kernel.params;
    let (m, big_m, beta, z) = (params.gas_mass, params.test_mass, params.beta, params.fugacity);
    let alpha = params.alpha();
    let damping = -beta * q_lo * q_lo / (8.0 * m);
    let (a_max, b_max, geometric) = match kernel.mode.regime {
        Regime::Exact => {
            let sa = min_abs_linear(0.5 * (1.0 + alpha), q_lo, q_hi, alpha * p_hi);
            let sb = min_abs_linear(0.5 * (alpha - 1.0), q_lo, q_hi, alpha * p_hi);
            // sqrt(A B) = z exp(-beta q^2/8m - beta m (E/q)^2 / 2)
            let eq = min_abs_linear(0.5 / big_m, q_lo, q_hi, p_hi / big_m);
            (
                z * (-beta * sa * sa / (2.0 * m)).exp(),
                z * (-beta * sb * sb / (2.0 * m)).exp(),
                z * (damping - 0.5 * beta * m * eq * eq).exp(),
            )
        }
        Regime::BrownianLimit => {
            let e_min = (0.5 * q_lo * q_lo - p_hi * q_hi) / big_m;
            let e_max = (0.5 * q_hi * q_hi + p_hi * q_hi) / big_m;
            (
                z * (damping - 0.5 * beta * e_min).exp(),
                z * (damping + 0.5 * beta * e_max).exp(),
                z * damping.exp(),
            )
        }
    };
    let lead = match kernel.mode.symmetrization {
        Symmetrization::Plain => a_max,
        Symmetrization::Symmetrized => geometric,
    };
    match params.stats {
        Statistics::MaxwellBoltzmann | Statistics::Fermi => Ok(lead),
        Statistics::Bose => {
            let top = a_max.max(b_max);
            if top >= 1.0 {
                return Err(Error::domain(
                    "z",
                    format!("Bose kernel unbounded near |q| = {q_lo:.4}: gas factor reaches {top:.6}"),
                ));
            }
            Ok(lead / (1.0 - top))
        }
    }
}

impl Envelope {
    /// Envelope valid for all `|p|` in `[p_lo, p_hi]`.
    pub(crate) fn build(kernel: &CollisionKernel, p_lo: f64, p_hi: f64) -> Result<Envelope> {
        debug_assert!(p_lo <= p_hi);
        let q_max = kernel.q_max();
        let width = q_max / BINS as f64;
        let c0 = kernel.params.gas_mass.powi(2)
            / (4.0 * PI * PI * kernel.params.density * kernel.params.beta);
        let mut bounds = Vec::with_capacity(BINS);
        let mut cumulative = Vec::with_capacity(BINS);
        let mut total = 0.0;
        for j in 0..BINS {
            let q_lo = width * j as f64;
            let q_hi = width * (j + 1) as f64;
            // q^2 * C0 / q = C0 q <= C0 q_hi; |t|^2 is decreasing.
            let f = reduced_bound(kernel, q_lo, q_hi, p_hi)?;
            let bound = c0 * q_hi * kernel.ff.value(q_lo) * f * (1.0 + 1e-12);
            bounds.push(bound);
            total += bound * width;
            cumulative.push(total);
        }
        Ok(Envelope {
            width,
            bounds,
            cumulative,
        })
    }

    /// Rejection-samples a momentum transfer at `p`.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        kernel: &CollisionKernel,
        p: Vector3,
        rng: &mut R,
    ) -> Result<Vector3> {
        let total = *self.cumulative.last().expect("nonempty envelope");
        if !(total > 0.0) {
            return Err(Error::parameter("z", "the jump rate vanishes; nothing to sample"));
        }
        let p_norm = p.norm();
        for _ in 0..MAX_PROPOSALS {
            let u = rng.random::<f64>() * total;
            let bin = self.cumulative.partition_point(|&c| c <= u).min(BINS - 1);
            let q = self.width * (bin as f64 + rng.random::<f64>());
            let c = 2.0 * rng.random::<f64>() - 1.0;
            if q == 0.0 {
                continue;
            }
            let energy = kernel.energy(q, c, p_norm);
            let density = q * q * kernel.ff.value(q) * s_from_transfer(q, energy, &kernel.params, kernel.mode)?;
            let ratio = density / self.bounds[bin];
            if ratio > 1.0 {
                return Err(Error::EnvelopeViolation { ratio });
            }
            if rng.random::<f64>() < ratio {
                let axis = if p_norm > 0.0 { p * (1.0 / p_norm) } else { Vector3::new(0.0, 0.0, 1.0) };
                let (e1, e2) = axis.orthonormal_frame();
                let phi = 2.0 * PI * rng.random::<f64>();
                let s = (1.0 - c * c).max(0.0).sqrt();
                return Ok(q * (c * axis + s * (phi.cos() * e1 + phi.sin() * e2)));
            }
        }
        Err(Error::EnvelopeViolation { ratio: 0.0 })
    }
}
