use super::*;
use crate::vector::Rotation;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn x(v: f64) -> Vector3 {
    Vector3::new(v, 0.0, 0.0)
}

const ALL_MODES: [SFMode; 4] = [
    SFMode::EXACT,
    SFMode::BROWNIAN,
    SFMode::EXACT_SYMMETRIZED,
    SFMode::BROWNIAN_SYMMETRIZED,
];

#[test]
fn energy_transfer_examples() {
    assert_eq!(energy_transfer(x(1.0), Vector3::ZERO, 1.0), 0.5);
    assert_eq!(energy_transfer(x(1.0), x(-0.5), 1.0), 0.0);
}

#[test]
fn energy_transfer_is_a_rotational_scalar() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = Vector3::new(0.3, -1.2, 0.7);
    let p = Vector3::new(2.0, 0.4, -0.9);
    let e = energy_transfer(q, p, 1.7);
    for _ in 0..50 {
        let r = Rotation::random(&mut rng);
        assert!((energy_transfer(r.apply(q), r.apply(p), 1.7) - e).abs() < 1e-14);
    }
}

#[test]
fn sigma_examples() {
    let params = GasParameters::unit(1.0, Statistics::MaxwellBoltzmann);
    assert_eq!(sigma(x(2.0), Vector3::ZERO, &params).unwrap(), 2.0);
    let perp = Vector3::new(0.0, 3.0, -1.0);
    assert!((sigma(x(2.0), perp, &params).unwrap() - 2.0).abs() < 1e-15);
    let light = GasParameters {
        gas_mass: 1e-12,
        ..params
    };
    assert!((sigma(x(2.0), Vector3::ZERO, &light).unwrap() - 1.0).abs() < 1e-11);
    assert!(matches!(
        sigma(Vector3::ZERO, x(1.0), &params),
        Err(Error::DegenerateMomentum(_))
    ));
}

#[test]
fn maxwell_boltzmann_reference_value() {
    let params = GasParameters::unit(1.0, Statistics::MaxwellBoltzmann);
    let s = s_eval(x(1.0), Vector3::ZERO, &params, SFMode::EXACT).unwrap();
    assert!((s - 0.015_363_6).abs() < 1e-7);
    let oracle = s_oracle(x(1.0), Vector3::ZERO, &params, 1e-10).unwrap();
    assert!(rel(s, oracle) < 1e-8);
}

#[test]
fn bose_matches_oracle() {
    let params = GasParameters::unit(0.5, Statistics::Bose);
    let s = s_eval(x(1.0), Vector3::ZERO, &params, SFMode::EXACT).unwrap();
    let oracle = s_oracle(x(1.0), Vector3::ZERO, &params, 1e-10).unwrap();
    assert!(rel(s, oracle) < 1e-8, "{s} vs {oracle}");
}

#[test]
fn zero_fugacity_vanishes_everywhere() {
    for stats in Statistics::ALL {
        let params = GasParameters::unit(0.0, stats);
        for mode in ALL_MODES {
            let s = s_eval(Vector3::new(0.4, 1.0, 0.0), x(0.7), &params, mode).unwrap();
            assert_eq!(s, 0.0, "{stats} {mode}");
        }
        assert_eq!(s_oracle(x(1.0), x(0.3), &params, 1e-8).unwrap(), 0.0);
    }
}

#[test]
fn zero_momentum_transfer_is_rejected() {
    let params = GasParameters::unit(0.5, Statistics::Bose);
    assert!(matches!(
        s_eval(Vector3::ZERO, x(1.0), &params, SFMode::EXACT),
        Err(Error::DegenerateMomentum(_))
    ));
    assert!(s_oracle(Vector3::ZERO, x(1.0), &params, 1e-8).is_err());
}

#[test]
fn fugacity_domain_is_enforced() {
    let params = GasParameters::unit(1.2, Statistics::Bose);
    assert!(matches!(
        s_eval(x(1.0), Vector3::ZERO, &params, SFMode::EXACT),
        Err(Error::Domain { field: "z", .. })
    ));
}

#[test]
fn statistics_ordering_at_high_fugacity() {
    let q = Vector3::new(0.8, 0.3, 0.0);
    let p = Vector3::new(-0.2, 1.1, 0.4);
    let bose = s_oracle(q, p, &GasParameters::unit(0.9, Statistics::Bose), 1e-9).unwrap();
    let mb = s_oracle(q, p, &GasParameters::unit(0.9, Statistics::MaxwellBoltzmann), 1e-9).unwrap();
    let fermi = s_oracle(q, p, &GasParameters::unit(0.9, Statistics::Fermi), 1e-9).unwrap();
    assert!(bose > mb && mb > fermi, "{bose} {mb} {fermi}");
}

#[test]
fn oracle_handles_zero_energy_transfer() {
    let params = GasParameters::unit(0.6, Statistics::Fermi);
    let q = x(1.0);
    let p = x(-0.5);
    let s = s_eval(q, p, &params, SFMode::EXACT).unwrap();
    let o = s_oracle(q, p, &params, 1e-10).unwrap();
    assert!(rel(s, o) < 1e-9);
}

#[test]
fn series_leading_term_is_maxwell_boltzmann() {
    for stats in [Statistics::Bose, Statistics::Fermi] {
        let params = GasParameters::unit(0.5, stats);
        let series = s_series(1.3, 0.4, &params, 0).unwrap();
        let mb = s_from_transfer(
            1.3,
            0.4,
            &params.with_stats(Statistics::MaxwellBoltzmann, 0.5),
            SFMode::BROWNIAN,
        )
        .unwrap();
        assert_eq!(series, mb);
    }
}

#[test]
fn series_converges_to_closed_brownian_form() {
    let params = GasParameters::unit(0.5, Statistics::Bose);
    let series = s_series(1.0, 0.2, &params, 60).unwrap();
    let closed = s_from_transfer(1.0, 0.2, &params, SFMode::BROWNIAN).unwrap();
    assert!(rel(series, closed) < 1e-12);
    let fermi = params.with_stats(Statistics::Fermi, 0.5);
    let series = s_series(1.0, 0.2, &fermi, 60).unwrap();
    let closed = s_from_transfer(1.0, 0.2, &fermi, SFMode::BROWNIAN).unwrap();
    assert!(rel(series, closed) < 1e-12);
}

#[test]
fn series_first_correction_alternates_with_statistics() {
    let bose = GasParameters::unit(0.5, Statistics::Bose);
    let fermi = GasParameters::unit(0.5, Statistics::Fermi);
    let db = s_series(1.0, 0.2, &bose, 1).unwrap() - s_series(1.0, 0.2, &bose, 0).unwrap();
    let df = s_series(1.0, 0.2, &fermi, 1).unwrap() - s_series(1.0, 0.2, &fermi, 0).unwrap();
    assert!(db > 0.0 && df < 0.0);
}

#[test]
fn series_reports_divergence() {
    let params = GasParameters::unit(0.9, Statistics::Bose);
    assert!(matches!(
        s_series(0.1, 10.0, &params, 10),
        Err(Error::Convergence { .. })
    ));
}

#[test]
fn series_geometric_convergence() {
    let params = GasParameters::unit(0.7, Statistics::Bose);
    let closed = s_from_transfer(0.9, -0.3, &params, SFMode::BROWNIAN).unwrap();
    let errs: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&k| (s_series(0.9, -0.3, &params, k).unwrap() - closed).abs())
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1]);
}

#[test]
fn arth_zero_energy_limit() {
    let q = 1.0;
    for stats in [Statistics::Bose, Statistics::Fermi] {
        let params = GasParameters::unit(0.5, stats);
        let s = s_arth(q, 0.0, &params, Regime::BrownianLimit).unwrap();
        let zb = 0.5 * (-q * q / 8.0f64).exp();
        let sign = stats.sign();
        let expected = params.prefactor() / q * zb / (1.0 - sign * zb);
        assert!(rel(s, expected) < 1e-15);
        // s_eval takes the analytic branch at E = 0.
        let e = s_from_transfer(q, 0.0, &params, SFMode::BROWNIAN).unwrap();
        assert!(rel(e, expected) < 1e-15);
    }
}

#[test]
fn arth_agrees_with_log_form_for_degenerate_fermi() {
    let params = GasParameters::unit(2.0, Statistics::Fermi);
    let (q, e) = (1.0, 0.3);
    for regime in [Regime::Exact, Regime::BrownianLimit] {
        let stable = s_arth(q, e, &params, regime).unwrap();
        // Direct printed logarithmic form.
        let (a, b) = boltzmann_factors(q, e, &params, regime);
        let direct = params.prefactor() / q / (1.0 - (params.beta * e).exp())
            * ((1.0 + a).ln() - (1.0 + b).ln());
        assert!(rel(stable, direct) < 1e-10, "{regime:?} {stable} {direct}");
    }
    // Second printed large-z rearrangement, Brownian regime.
    let w = 2.0 / 3.0;
    let damp = (-1.0f64 / 8.0).exp();
    let half = 0.15f64;
    let log_form = -params.prefactor() / 2.0 / q * (-half).exp() / half.sinh()
        * ((1.0 - w * (1.0 - damp * (-half).exp())) / (1.0 - w * (1.0 - damp * half.exp()))).ln();
    let stable = s_arth(q, e, &params, Regime::BrownianLimit).unwrap();
    assert!(rel(stable, log_form) < 1e-10, "{stable} {log_form}");
}

#[test]
fn symmetrized_brownian_mb_forgets_p() {
    let params = GasParameters::unit(0.7, Statistics::MaxwellBoltzmann);
    let q = Vector3::new(0.4, -0.2, 1.0);
    let reference = s_eval(q, Vector3::ZERO, &params, SFMode::BROWNIAN_SYMMETRIZED).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = Vector3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let s = s_eval(q, p, &params, SFMode::BROWNIAN_SYMMETRIZED).unwrap();
        assert!(rel(s, reference) < 1e-14);
    }
}

/// Relative deviation of the Brownian-limit form from the exact one at
/// `m = alpha`, `M = 1`, so that `E` stays fixed as `alpha` varies.
fn brownian_deviation(alpha: f64, stats: Statistics, z: f64) -> f64 {
    let params = GasParameters {
        gas_mass: alpha,
        ..GasParameters::unit(z, stats)
    };
    let q = x(0.5);
    let p = Vector3::new(1.0, 0.3, 0.0);
    let exact = s_eval(q, p, &params, SFMode::EXACT).unwrap();
    let brownian = s_eval(q, p, &params, SFMode::BROWNIAN).unwrap();
    ((exact - brownian) / exact).abs()
}

#[test]
fn brownian_limit_error_is_linear_in_alpha() {
    for (stats, z) in [
        (Statistics::MaxwellBoltzmann, 1.0),
        (Statistics::Bose, 0.5),
        (Statistics::Fermi, 0.5),
    ] {
        let r1 = brownian_deviation(0.1, stats, z) / brownian_deviation(0.01, stats, z);
        let r2 = brownian_deviation(0.01, stats, z) / brownian_deviation(0.001, stats, z);
        assert!((5.0..=20.0).contains(&r1), "{stats}: {r1}");
        assert!((5.0..=20.0).contains(&r2), "{stats}: {r2}");
    }
}

#[test]
fn cross_section_properties() {
    let params = GasParameters::unit(1.0, Statistics::MaxwellBoltzmann);
    let p = x(1.0);
    let pp = Vector3::new(0.0, 1.0, 0.0);
    let ff1 = FormFactor::gaussian(1.0, 10.0).unwrap();
    let ff2 = FormFactor::gaussian(2.0, 10.0).unwrap();
    let c1 = cross_section(p, pp, &params, &ff1).unwrap();
    let c2 = cross_section(p, pp, &params, &ff2).unwrap();
    assert!(rel(c2, 2.0 * c1) < 1e-15);

    // Composition with the quadrature oracle; E = 0 here since |p'| = |p|.
    let q = pp - p;
    let s = s_oracle(q, p, &params, 1e-10).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    let expected = two_pi.powi(6) / (two_pi * two_pi) * (-2.0f64 / 100.0).exp() * s;
    assert!(rel(c1, expected) < 1e-8);

    let empty = params.with_fugacity(0.0);
    assert_eq!(cross_section(p, pp, &empty, &ff1).unwrap(), 0.0);
    assert!(cross_section(Vector3::ZERO, pp, &params, &ff1).is_err());
    assert!(cross_section(p, p, &params, &ff1).is_err());
}

#[test]
fn truncation_radius_matches_definition() {
    let ff = FormFactor::gaussian(3.0, 2.0).unwrap();
    let r = ff.truncation_radius(1e-12);
    let peak = 4.0 * ff.value(2.0);
    assert!(rel(r * r * ff.value(r), 1e-12 * peak) < 1e-9);
    assert!(r > 2.0);
}

fn stats_and_z() -> impl Strategy<Value = (Statistics, f64)> {
    prop_oneof![
        (0.05f64..1.0).prop_map(|z| (Statistics::MaxwellBoltzmann, z)),
        (0.05f64..0.9).prop_map(|z| (Statistics::Bose, z)),
        (0.05f64..3.0).prop_map(|z| (Statistics::Fermi, z)),
    ]
}

fn vec3(r: f64) -> impl Strategy<Value = Vector3> {
    (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

proptest! {
    #[test]
    fn detailed_balance_exact((stats, z) in stats_and_z(), q in vec3(3.0), p in vec3(3.0)) {
        prop_assume!(q.norm() > 0.05);
        let params = GasParameters::unit(z, stats);
        let e = energy_transfer(q, p, 1.0);
        let forward = s_eval(q, p, &params, SFMode::EXACT).unwrap();
        let reverse = s_eval(-q, p + q, &params, SFMode::EXACT).unwrap();
        prop_assert!((energy_transfer(-q, p + q, 1.0) + e).abs() < 1e-12 * (1.0 + e.abs()));
        prop_assert!(rel(forward, (-e).exp() * reverse) < 1e-12);
    }

    #[test]
    fn detailed_balance_brownian((stats, z) in stats_and_z(), q in vec3(1.0), p in vec3(1.0)) {
        prop_assume!(q.norm() > 0.05);
        let params = GasParameters::unit(z, stats);
        let e = energy_transfer(q, p, 1.0);
        if let Ok(forward) = s_eval(q, p, &params, SFMode::BROWNIAN) {
            let reverse = s_eval(-q, p + q, &params, SFMode::BROWNIAN).unwrap();
            prop_assert!(rel(forward, (-e).exp() * reverse) < 1e-12);
        }
    }

    #[test]
    fn symmetrized_parity((stats, z) in stats_and_z(), q in vec3(3.0), p in vec3(3.0)) {
        prop_assume!(q.norm() > 0.05);
        let params = GasParameters::unit(z, stats);
        let forward = s_eval(q, p, &params, SFMode::EXACT_SYMMETRIZED).unwrap();
        let reverse = s_eval(-q, p + q, &params, SFMode::EXACT_SYMMETRIZED).unwrap();
        prop_assert!(rel(forward, reverse) < 1e-12);
    }

    #[test]
    fn rotational_invariance((stats, z) in stats_and_z(), q in vec3(3.0), p in vec3(3.0), seed in any::<u64>()) {
        prop_assume!(q.norm() > 0.05);
        let params = GasParameters::unit(z, stats);
        let r = Rotation::random(&mut ChaCha8Rng::seed_from_u64(seed));
        for mode in [SFMode::EXACT, SFMode::EXACT_SYMMETRIZED] {
            let s = s_eval(q, p, &params, mode).unwrap();
            let sr = s_eval(r.apply(q), r.apply(p), &params, mode).unwrap();
            prop_assert!(rel(sr, s) < 1e-12);
        }
    }

    #[test]
    fn arth_equals_log_form((stats, z) in prop_oneof![
            (0.05f64..0.9).prop_map(|z| (Statistics::Bose, z)),
            (0.05f64..3.0).prop_map(|z| (Statistics::Fermi, z)),
        ], q in 0.1f64..5.0, e in -5.0f64..5.0) {
        let params = GasParameters::unit(z, stats);
        let a = s_arth(q, e, &params, Regime::Exact).unwrap();
        let l = s_from_transfer(q, e, &params, SFMode::EXACT).unwrap();
        prop_assert!(rel(a, l) < 1e-12);
    }

    #[test]
    fn positivity((stats, z) in stats_and_z(), q in vec3(4.0), p in vec3(4.0)) {
        prop_assume!(q.norm() > 0.01);
        let params = GasParameters::unit(z, stats);
        for mode in ALL_MODES {
            if let Ok(s) = s_eval(q, p, &params, mode) {
                prop_assert!(s >= 0.0);
            }
        }
    }

    #[test]
    fn small_fugacity_reduces_to_maxwell_boltzmann(q in vec3(3.0), p in vec3(3.0)) {
        prop_assume!(q.norm() > 0.05);
        let z = 1e-3;
        let mb = s_eval(q, p, &GasParameters::unit(z, Statistics::MaxwellBoltzmann), SFMode::EXACT).unwrap();
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let s = s_eval(q, p, &GasParameters::unit(z, stats), SFMode::EXACT).unwrap();
            prop_assert!((s / mb - 1.0).abs() <= 2.0 * z);
        }
    }

    #[test]
    fn small_energy_branch_is_continuous((stats, z) in prop_oneof![
            (0.05f64..0.9).prop_map(|z| (Statistics::Bose, z)),
            (0.05f64..3.0).prop_map(|z| (Statistics::Fermi, z)),
        ], q in 0.1f64..3.0, e in -1e-5f64..1e-5) {
        let params = GasParameters::unit(z, stats);
        for regime in [Regime::Exact, Regime::BrownianLimit] {
            let mode = SFMode::new(regime, Symmetrization::Plain);
            let a = s_arth(q, e, &params, regime).unwrap();
            let l = s_from_transfer(q, e, &params, mode).unwrap();
            prop_assert!(rel(a, l) < 1e-12);
        }
    }
}
