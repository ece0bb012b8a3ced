//! Kinetic Monte Carlo for an ensemble of independent test particles.
//!
//! Each particle waits an exponential time with the current rate `R(|p|)`,
//! then jumps by a transfer drawn from `w(q, p) / R(p)`. Particle `i` in
//! generation `g` draws from the ChaCha8 stream `i` keyed by
//! `seed + g * 0x9E3779B97F4A7C15` (wrapping), so results do not depend on
//! thread scheduling and consecutive calls use fresh randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::envelope::Envelope;
use super::{rate_at, CollisionKernel, RateTable};
use crate::error::{Error, Result};
use crate::vector::Vector3;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Momenta of independent test particles. There are no positions: the
/// dynamics is translation covariant and positions never feed back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub momenta: Vec<Vector3>,
    pub time: f64,
    pub seed: u64,
    /// Number of completed evolution calls; selects the RNG key.
    pub generation: u64,
}

/// Per-component sample moments of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vector3,
    pub variance: Vector3,
    pub excess_kurtosis: Vector3,
}

impl EnsembleState {
    pub fn new(momenta: Vec<Vector3>, seed: u64) -> Result<Self> {
        if momenta.iter().any(|p| !p.is_finite()) {
            return Err(Error::parameter("momenta", "all momenta must be finite"));
        }
        Ok(EnsembleState {
            momenta,
            time: 0.0,
            seed,
            generation: 0,
        })
    }

    /// `count` particles all at momentum `p`.
    pub fn uniform(count: usize, p: Vector3, seed: u64) -> Result<Self> {
        EnsembleState::new(vec![p; count], seed)
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn moments(&self) -> Moments {
        let n = self.momenta.len() as f64;
        let mut mean = [0.0; 3];
        for p in &self.momenta {
            for (m, v) in mean.iter_mut().zip(p.to_array()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut m2 = [0.0; 3];
        let mut m4 = [0.0; 3];
        for p in &self.momenta {
            for k in 0..3 {
                let d = p.to_array()[k] - mean[k];
                m2[k] += d * d;
                m4[k] += d * d * d * d;
            }
        }
        let mut variance = [0.0; 3];
        let mut kurtosis = [0.0; 3];
        for k in 0..3 {
            let pop = m2[k] / n;
            variance[k] = m2[k] / (n - 1.0);
            kurtosis[k] = m4[k] / n / (pop * pop) - 3.0;
        }
        Moments {
            mean: mean.into(),
            variance: variance.into(),
            excess_kurtosis: kurtosis.into(),
        }
    }
}

/// Precomputed rate table and rejection envelopes for one kernel.
#[derive(Debug, Clone)]
pub struct JumpProcess {
    kernel: CollisionKernel,
    table: RateTable,
    envelopes: Vec<Envelope>,
    tol: f64,
}

impl JumpProcess {
    /// Tabulates the process on `|p| <= p_max`; larger momenta fall back to
    /// direct quadrature.
    pub fn new(kernel: CollisionKernel, p_max: f64, tol: f64) -> Result<Self> {
        let table = RateTable::build(&kernel, p_max, tol)?;
        let envelopes = (0..table.intervals())
            .into_par_iter()
            .map(|i| Envelope::build(&kernel, table.momentum(i), table.momentum(i + 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(JumpProcess {
            kernel,
            table,
            envelopes,
            tol,
        })
    }

    /// Table range sized for `state`: well past both its largest momentum
    /// and the thermal momentum scale.
    pub fn for_state(kernel: CollisionKernel, state: &EnsembleState, tol: f64) -> Result<Self> {
        let thermal = (kernel.params.test_mass / kernel.params.beta).sqrt();
        let largest = state.momenta.iter().map(|p| p.norm()).fold(0.0, f64::max);
        JumpProcess::new(kernel, (1.5 * largest).max(8.0 * thermal), tol)
    }

    pub fn kernel(&self) -> &CollisionKernel {
        &self.kernel
    }

    pub fn table(&self) -> &RateTable {
        &self.table
    }

    pub fn rate(&self, p_norm: f64) -> Result<f64> {
        match self.table.rate(p_norm) {
            Some(r) => Ok(r.max(0.0)),
            None => rate_at(p_norm, &self.kernel, 1e-2 * self.tol),
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, p: Vector3, rng: &mut R) -> Result<Vector3> {
        let p_norm = p.norm();
        match self.table.interval(p_norm) {
            Some(i) => self.envelopes[i].sample(&self.kernel, p, rng),
            None => Envelope::build(&self.kernel, p_norm, p_norm)?.sample(&self.kernel, p, rng),
        }
    }

    fn advance(&self, mut p: Vector3, t0: f64, t_final: f64, rng: &mut ChaCha8Rng) -> Result<Vector3> {
        let mut t = t0;
        loop {
            let rate = self.rate(p.norm())?;
            if rate <= 0.0 {
                return Ok(p);
            }
            let wait: f64 = Exp1.sample(rng);
            t += wait / rate;
            if t > t_final {
                return Ok(p);
            }
            p += self.sample(p, rng)?;
        }
    }

    /// Advances every particle to `t_final`.
    pub fn evolve(&self, state: &EnsembleState, t_final: f64) -> Result<EnsembleState> {
        if !(t_final >= state.time) || !t_final.is_finite() {
            return Err(Error::parameter(
                "t_final",
                format!("must be finite and >= current time {}, got {t_final}", state.time),
            ));
        }
        if t_final == state.time {
            return Ok(state.clone());
        }
        let key = state.seed.wrapping_add(state.generation.wrapping_mul(GOLDEN_GAMMA));
        let momenta = state
            .momenta
            .par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                rng.set_stream(i as u64);
                self.advance(p, state.time, t_final, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleState {
            momenta,
            time: t_final,
            seed: state.seed,
            generation: state.generation + 1,
        })
    }
}

/// Evolves `state` to `t_final` under `kernel`, tabulating rates to 1e-6.
pub fn evolve_ensemble(state: &EnsembleState, kernel: &CollisionKernel, t_final: f64) -> Result<EnsembleState> {
    if t_final == state.time {
        return Ok(state.clone());
    }
    JumpProcess::for_state(*kernel, state, 1e-6)?.evolve(state, t_final)
}
