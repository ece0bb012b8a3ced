//! Tabulated loss rate `R(|p|)`.
//!
//! Nodes are uniform in `u = ln(1 + |p| / p_s)`, so they are dense near the
//! origin and geometric at large momentum. Values between nodes come from
//! four-point Lagrange interpolation in `u`; the grid is doubled until the
//! interpolant reproduces freshly computed midpoint values to the requested
//! relative tolerance.

use rayon::prelude::*;

use super::{rate_at, CollisionKernel};
use crate::error::{Error, Result};

const INITIAL_INTERVALS: usize = 16;
const MAX_INTERVALS: usize = 8192;

#[derive(Debug, Clone)]
pub struct RateTable {
    scale: f64,
    du: f64,
    values: Vec<f64>,
}

impl RateTable {
    /// Tabulates `R` on `[0, p_max]` to interpolation tolerance `tol`.
    pub fn build(kernel: &CollisionKernel, p_max: f64, tol: f64) -> Result<RateTable> {
        kernel.validate()?;
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::parameter("p_max", format!("must be finite and > 0, got {p_max}")));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::parameter("tol", format!("tolerance must be finite and > 0, got {tol}")));
        }
        let scale = 0.5 * (kernel.params.test_mass / kernel.params.beta).sqrt();
        let u_max = (p_max / scale).ln_1p();
        let quad_tol = 1e-2 * tol;
        let mut n = INITIAL_INTERVALS;
        let nodes: Vec<f64> = (0..=n).map(|i| u_max * i as f64 / n as f64).collect();
        let mut values = eval_all(kernel, scale, &nodes, quad_tol)?;
        loop {
            let du = u_max / n as f64;
            let table = RateTable {
                scale,
                du,
                values: values.clone(),
            };
            let mids: Vec<f64> = (0..n).map(|i| du * (i as f64 + 0.5)).collect();
            let exact = eval_all(kernel, scale, &mids, quad_tol)?;
            let worst = mids
                .iter()
                .zip(&exact)
                .map(|(&u, &r)| {
                    let diff = (table.interpolate(u) - r).abs();
                    if diff == 0.0 {
                        0.0
                    } else {
                        diff / r.abs()
                    }
                })
                .fold(0.0, f64::max);
            let mut merged = Vec::with_capacity(2 * n + 1);
            for i in 0..n {
                merged.push(values[i]);
                merged.push(exact[i]);
            }
            merged.push(values[n]);
            values = merged;
            n *= 2;
            if worst <= tol {
                return Ok(RateTable {
                    scale,
                    du: u_max / n as f64,
                    values,
                });
            }
            if n > MAX_INTERVALS {
                return Err(Error::Quadrature {
                    error: worst,
                    intervals: n,
                });
            }
        }
    }

    /// Largest tabulated momentum.
    pub fn p_max(&self) -> f64 {
        self.momentum(self.intervals())
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// Momentum of node `i`.
    pub fn momentum(&self, i: usize) -> f64 {
        self.scale * (self.du * i as f64).exp_m1()
    }

    /// Index of the interval containing `p_norm`, if tabulated.
    pub fn interval(&self, p_norm: f64) -> Option<usize> {
        let u = (p_norm / self.scale).ln_1p();
        let i = (u / self.du).floor();
        if !(i >= 0.0) {
            return None;
        }
        let i = i as usize;
        if i < self.intervals() {
            Some(i)
        } else if p_norm <= self.p_max() {
            Some(self.intervals() - 1)
        } else {
            None
        }
    }

    /// Interpolated rate at `p_norm`, or `None` beyond the table.
    pub fn rate(&self, p_norm: f64) -> Option<f64> {
        if !(p_norm >= 0.0) || p_norm > self.p_max() {
            return None;
        }
        Some(self.interpolate((p_norm / self.scale).ln_1p()))
    }

    fn interpolate(&self, u: f64) -> f64 {
        let n = self.intervals();
        let i = ((u / self.du).floor().max(0.0) as usize).min(n - 1);
        let start = i.saturating_sub(1).min(n.saturating_sub(3));
        let t = u / self.du;
        let mut sum = 0.0;
        for j in start..start + 4 {
            let mut basis = 1.0;
            for k in start..start + 4 {
                if k != j {
                    basis *= (t - k as f64) / (j as f64 - k as f64);
                }
            }
            sum += basis * self.values[j];
        }
        sum
    }
}

fn eval_all(kernel: &CollisionKernel, scale: f64, us: &[f64], tol: f64) -> Result<Vec<f64>> {
    us.par_iter()
        .map(|&u| rate_at(scale * u.exp_m1(), kernel, tol))
        .collect()
}
