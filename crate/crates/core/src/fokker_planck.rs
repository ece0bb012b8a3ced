//! Quantum Brownian limit: Fokker-Planck coefficients, their statistics
//! dependence, and the Lindblad structure of the dissipative generator.
//!
//! On momentum-diagonal states the generator `zeta(z) L_QD` reduces to the
//! drift-diffusion equation
//!
//! ```text
//! dW/dt = 2 gamma zeta div_p (p W) + zeta D_pp lap_p W
//! ```
//!
//! whose stationary solution is the Gaussian of variance `D_pp / 2 gamma =
//! M / beta` per component.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_semi_infinite, Tolerance};
use crate::statistics::{zeta_factor, Statistics};
use crate::structure_factor::{FormFactor, GasParameters};
use crate::vector::Vector3;

/// `chi` at which the quantum-dissipation generator sits, and the smallest
/// value compatible with complete positivity.
pub const CHI_QD: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FokkerPlanckCoefficients {
    /// Momentum diffusion.
    pub d_pp: f64,
    /// Position diffusion, `(beta / 4M)^2 D_pp`.
    pub d_xx: f64,
    /// Friction, `(beta / 2M) D_pp`.
    pub gamma: f64,
    /// Thermal wavelength of the test particle, `sqrt(beta / M)`.
    pub lambda_m: f64,
    pub chi: f64,
}

/// Brownian-limit coefficients for the given gas and form factor.
pub fn compute_coefficients(
    params: &GasParameters,
    ff: &FormFactor,
    tol: f64,
) -> Result<FokkerPlanckCoefficients> {
    params.validate()?;
    ff.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::parameter("tol", format!("tolerance must be finite and > 0, got {tol}")));
    }
    let (m, big_m, beta) = (params.gas_mass, params.test_mass, params.beta);
    let moment = integrate_semi_infinite(
        |q| q * q * q * ff.value(q) * (-beta * q * q / (8.0 * m)).exp(),
        0.0,
        &Tolerance::relative(tol),
    )?;
    let d_pp = 2.0 / 3.0 * PI * PI * m * m / beta * 4.0 * PI * moment.value;
    let ratio = beta / (4.0 * big_m);
    Ok(FokkerPlanckCoefficients {
        d_pp,
        d_xx: ratio * ratio * d_pp,
        gamma: beta / (2.0 * big_m) * d_pp,
        lambda_m: (beta / big_m).sqrt(),
        chi: CHI_QD,
    })
}

/// Friction felt in a gas of statistics `s`: `zeta(z) * gamma_qd`.
pub fn friction_for_statistics(gamma_qd: f64, z: f64, s: Statistics) -> Result<f64> {
    if !(gamma_qd.is_finite() && gamma_qd > 0.0) {
        return Err(Error::parameter("gamma", format!("must be finite and > 0, got {gamma_qd}")));
    }
    Ok(zeta_factor(z, s)? * gamma_qd)
}

/// Single-generator form available at `chi = 1/8`, with ladder operator
/// `a = x_coefficient * x + i p_coefficient * p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleGenerator {
    /// `D_pp lambda_M^2`, weight of the dissipator built on `a`.
    pub dissipator_weight: f64,
    /// `D_pp lambda_M^2 / 4`, weight of the `i[{x, p}, .]` term.
    pub hamiltonian_weight: f64,
    /// `sqrt(2) / lambda_M`.
    pub x_coefficient: f64,
    /// `sqrt(2) / lambda_M * lambda_M^2 / 4`.
    pub p_coefficient: f64,
    /// `[a, a^dagger] = 2 x_coefficient p_coefficient`; equals 1.
    pub ladder_commutator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladDecomposition {
    pub chi: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Mixing constant of the generators `x +- i kappa p`.
    pub kappa: f64,
    pub completely_positive: bool,
    pub single_generator: Option<SingleGenerator>,
}

/// Splits the Fokker-Planck generator with parameter `chi` into the two
/// Lindblad generators `L+- = x +- i kappa p`.
pub fn lindblad_decomposition(
    chi: f64,
    coeffs: &FokkerPlanckCoefficients,
    params: &GasParameters,
) -> Result<LindbladDecomposition> {
    if !(chi.is_finite() && chi > 0.0) {
        return Err(Error::parameter("chi", format!("must be finite and > 0, got {chi}")));
    }
    let (big_m, beta) = (params.test_mass, params.beta);
    let base = 2.0 * coeffs.gamma * big_m / beta;
    let root = (1.0 / (8.0 * chi)).sqrt();
    let w_minus = base * (1.0 - root);
    let single_generator = (chi == CHI_QD).then(|| {
        let lambda2 = coeffs.lambda_m * coeffs.lambda_m;
        let x_coefficient = 2f64.sqrt() / coeffs.lambda_m;
        let p_coefficient = x_coefficient * lambda2 / 4.0;
        SingleGenerator {
            dissipator_weight: coeffs.d_pp * lambda2,
            hamiltonian_weight: coeffs.d_pp * lambda2 / 4.0,
            x_coefficient,
            p_coefficient,
            ladder_commutator: 2.0 * x_coefficient * p_coefficient,
        }
    });
    Ok(LindbladDecomposition {
        chi,
        w_plus: base * (1.0 + root),
        w_minus,
        kappa: beta / big_m * (chi / 2.0).sqrt(),
        completely_positive: w_minus >= 0.0,
        single_generator,
    })
}

/// Mean and per-component variance at time `t` under the drift-diffusion
/// reduction, starting from `(mean0, var0)`.
pub fn evolve_moments(
    mean0: Vector3,
    var0: Vector3,
    coeffs: &FokkerPlanckCoefficients,
    z: f64,
    s: Statistics,
    t: f64,
) -> Result<(Vector3, Vector3)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::parameter("t", format!("must be finite and >= 0, got {t}")));
    }
    if var0.to_array().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::parameter("var0", "variances must be finite and >= 0"));
    }
    let zeta = zeta_factor(z, s)?;
    let rate = 2.0 * coeffs.gamma * zeta;
    let mean = mean0 * (-rate * t).exp();
    let var_inf = coeffs.d_pp / (2.0 * coeffs.gamma);
    let relax = -(-2.0 * rate * t).exp_m1();
    let var: [f64; 3] = var0.to_array().map(|v| v + (var_inf - v) * relax);
    Ok((mean, var.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn standard() -> (GasParameters, FormFactor, FokkerPlanckCoefficients) {
        let params = GasParameters::unit(1.0, Statistics::MaxwellBoltzmann);
        let ff = FormFactor::default();
        let c = compute_coefficients(&params, &ff, 1e-12).unwrap();
        (params, ff, c)
    }

    #[test]
    fn gaussian_moment_oracle() {
        for &(m, beta, g2, qc) in &[(1.0, 1.0, 1.0, 2.0), (0.3, 2.0, 0.5, 0.7), (5.0, 0.1, 3.0, 4.0)] {
            let params = GasParameters {
                gas_mass: m,
                beta,
                ..GasParameters::default()
            };
            let ff = FormFactor::gaussian(g2, qc).unwrap();
            let c = compute_coefficients(&params, &ff, 1e-13).unwrap();
            let a = 1.0 / (qc * qc) + beta / (8.0 * m);
            let oracle = 8.0 * PI.powi(3) * m * m * g2 / (3.0 * beta) / (2.0 * a * a);
            assert!((c.d_pp / oracle - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_relations() {
        let params = GasParameters {
            test_mass: 7.0,
            beta: 0.4,
            ..GasParameters::default()
        };
        let c = compute_coefficients(&params, &FormFactor::default(), 1e-12).unwrap();
        assert!((c.gamma / c.d_pp - 0.4 / 14.0).abs() < 1e-14 * 0.4 / 14.0);
        assert!((c.d_xx / c.d_pp - (0.4f64 / 28.0).powi(2)).abs() < 1e-14 * (0.4f64 / 28.0).powi(2));
        assert_eq!(c.lambda_m, (0.4f64 / 7.0).sqrt());
        assert_eq!(c.chi, 0.125);
    }

    #[test]
    fn friction_ratios() {
        let g = 3.0;
        let mb = friction_for_statistics(g, 0.5, Statistics::MaxwellBoltzmann).unwrap();
        assert_eq!(mb, 1.5);
        assert_eq!(friction_for_statistics(g, 0.5, Statistics::Bose).unwrap(), 2.0 * mb);
        assert!((friction_for_statistics(g, 0.5, Statistics::Fermi).unwrap() - 2.0 / 3.0 * mb).abs() < 1e-15);
        for s in Statistics::ALL {
            assert_eq!(friction_for_statistics(g, 0.0, s).unwrap(), 0.0);
        }
        assert!(friction_for_statistics(g, 1.0, Statistics::Bose).is_err());
        assert!(friction_for_statistics(0.0, 0.5, Statistics::Bose).is_err());
    }

    #[test]
    fn lindblad_weights() {
        let (params, _, c) = standard();
        let base = 2.0 * c.gamma;
        let qd = lindblad_decomposition(0.125, &c, &params).unwrap();
        assert_eq!(qd.w_minus, 0.0);
        assert!(qd.completely_positive);
        assert_eq!(qd.w_plus, 2.0 * base);
        let sg = qd.single_generator.unwrap();
        assert!((sg.ladder_commutator - 1.0).abs() < 1e-15);
        // At chi = 1/8 the mixing constant is lambda_M^2 / 4.
        assert!((qd.kappa - c.lambda_m.powi(2) / 4.0).abs() < 1e-15);
        // a = x_coefficient * L+, so the a-dissipator reproduces w+.
        let via_l = sg.dissipator_weight * sg.x_coefficient.powi(2);
        assert!((via_l - qd.w_plus).abs() < 1e-12 * qd.w_plus);
        assert!((sg.hamiltonian_weight - c.gamma / 2.0).abs() < 1e-12 * c.gamma);

        let low = lindblad_decomposition(1.0 / 16.0, &c, &params).unwrap();
        assert!(low.w_minus < 0.0 && !low.completely_positive);
        assert!(low.single_generator.is_none());

        let half = lindblad_decomposition(0.5, &c, &params).unwrap();
        assert!((half.w_plus - base * 1.5).abs() < 1e-14 * base);
        assert!((half.w_minus - base * 0.5).abs() < 1e-14 * base);

        assert!(lindblad_decomposition(0.0, &c, &params).is_err());
    }

    #[test]
    fn positivity_boundary_by_bisection() {
        let (params, _, c) = standard();
        let w = |chi: f64| lindblad_decomposition(chi, &c, &params).unwrap().w_minus;
        let (mut lo, mut hi) = (0.01, 1.0);
        assert!(w(lo) < 0.0 && w(hi) > 0.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if w(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - CHI_QD).abs() < 1e-12);
    }

    #[test]
    fn moment_evolution() {
        let (params, _, c) = standard();
        let mean0 = Vector3::new(2.0, -1.0, 0.5);
        let var0 = Vector3::new(0.1, 3.0, 0.0);
        let (m, v) = evolve_moments(mean0, var0, &c, 0.5, Statistics::MaxwellBoltzmann, 0.0).unwrap();
        assert_eq!((m, v), (mean0, var0));
        let zeta = 0.5;
        let half_life = 2f64.ln() / (2.0 * c.gamma * zeta);
        let (m, _) = evolve_moments(mean0, var0, &c, 0.5, Statistics::MaxwellBoltzmann, half_life).unwrap();
        assert!((m - mean0 * 0.5).norm() < 1e-14);
        let (m, v) = evolve_moments(mean0, var0, &c, 0.5, Statistics::Fermi, 1e3).unwrap();
        assert_eq!(m, Vector3::ZERO);
        for k in v.to_array() {
            assert!((k - params.test_mass / params.beta).abs() < 1e-12);
        }
        assert!(evolve_moments(mean0, var0, &c, 0.5, Statistics::Fermi, -1.0).is_err());
        assert!(evolve_moments(mean0, -var0, &c, 0.5, Statistics::Fermi, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn statistics_only_rescale_time(z in 0.0..0.95f64, t in 0.0..0.05f64) {
            let (_, _, c) = standard();
            let mean0 = Vector3::new(1.0, 2.0, -3.0);
            let var0 = Vector3::new(0.2, 1.0, 5.0);
            let zmb = zeta_factor(z, Statistics::MaxwellBoltzmann).unwrap();
            prop_assume!(zmb > 0.0);
            for s in [Statistics::Bose, Statistics::Fermi] {
                let scaled = t * zeta_factor(z, s).unwrap() / zmb;
                let a = evolve_moments(mean0, var0, &c, z, s, t).unwrap();
                let b = evolve_moments(mean0, var0, &c, z, Statistics::MaxwellBoltzmann, scaled).unwrap();
                prop_assert!((a.0 - b.0).norm() < 1e-12);
                prop_assert!((a.1 - b.1).norm() < 1e-12);
            }
        }

        #[test]
        fn stationary_variance_is_locked_to_temperature(
            m in 0.1..10.0f64, big_m in 0.1..100.0f64, beta in 0.1..10.0f64,
            g2 in 0.01..10.0f64, qc in 0.1..10.0f64, z in 0.01..0.99f64,
        ) {
            let params = GasParameters { gas_mass: m, test_mass: big_m, beta, ..GasParameters::unit(z, Statistics::Bose) };
            let ff = FormFactor::gaussian(g2, qc).unwrap();
            let c = compute_coefficients(&params, &ff, 1e-10).unwrap();
            let (_, v) = evolve_moments(Vector3::ZERO, Vector3::ZERO, &c, z, Statistics::Bose, 1e9).unwrap();
            for k in v.to_array() {
                prop_assert!((k / (big_m / beta) - 1.0).abs() < 1e-12);
            }
        }
    }
}
