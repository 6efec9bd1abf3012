mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use siegel::model::*;
use siegel_core::arithmetic::{double_mod1, ContinuedFraction};
use siegel_core::circle::rotation_number;

use common::{golden, golden_file, GOLDEN};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn traced_domain_is_anchored_at_the_critical_points() {
    let d = &golden_file().domain;
    let m = d.boundary.len();
    assert_eq!(d.boundary[0], c(FRAC_PI_2, 0.0));
    assert_eq!(d.critical_markers, [0, m / 2]);
    assert!((d.boundary[m / 2] + FRAC_PI_2).norm() < 1e-12);
    assert!(d.sine_defect() < 1e-12);
    assert!(d.is_simple());
    // Oddness: the boundary over −z is minus the boundary over z.
    for k in (0..m / 2).step_by(97) {
        assert!((d.boundary[k] + d.boundary[k + m / 2]).norm() < 1e-12, "k = {k}");
    }
}

#[test]
fn traced_arc_length_converges() {
    let a = trace_domain_d(1024).unwrap().arc_length();
    let b = trace_domain_d(2048).unwrap().arc_length();
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    assert!(matches!(trace_domain_d(100), Err(ModelError::TooFewSamples { .. })));
}

#[test]
fn disk_of_radius_half_pi_is_recovered_exactly() {
    let d = DomainD::disk(FRAC_PI_2, 1024);
    let psi = fit_exterior_map(&d, 16, 1024, 1e-10).unwrap();
    assert!((psi.c - c(FRAC_PI_2, 0.0)).norm() < 1e-12);
    assert!(psi.coeffs.iter().all(|a| a.norm() < 1e-12));
    assert!(psi.beta.iter().all(|b| b.abs() < 1e-12));
    let w = c(1.3, -0.4);
    assert!((psi.psi(w) - FRAC_PI_2 * w).norm() < 1e-12);
}

#[test]
fn reversed_boundary_is_rejected() {
    let d = DomainD::disk(1.0, 1024).reversed();
    assert!(matches!(fit_exterior_map(&d, 16, 1024, 1e-6), Err(ModelError::FitDiverged { .. })));
    let d = trace_domain_d(4096).unwrap().reversed();
    assert!(matches!(fit_exterior_map(&d, 48, 4096, 1e-6), Err(ModelError::FitDiverged { .. })));
}

#[test]
fn fit_preconditions() {
    let d = DomainD::disk(1.0, 256);
    assert_eq!(fit_exterior_map(&d, 1, 256, 1e-6).unwrap_err(), ModelError::DegreeTooSmall(1));
    assert_eq!(fit_exterior_map(&d, 32, 256, 1e-6).unwrap_err(), ModelError::TooFewSamples { min: 272, got: 256 });
}

#[test]
fn low_degree_fit_diverges() {
    let d = trace_domain_d(4096).unwrap();
    assert!(matches!(fit_exterior_map(&d, 4, 4096, DEFAULT_FIT_TOL), Err(ModelError::FitDiverged { .. })));
}

#[test]
fn default_fit_meets_the_residual_target() {
    let psi = &golden().psi;
    assert!(psi.degree <= 64);
    assert!(psi.fit_residual < 1e-6, "residual {}", psi.fit_residual);
    assert!(psi.min_derivative > 0.0);
    assert!((psi.psi(c(1.0, 0.0)) - FRAC_PI_2).norm() < 1e-6);
    assert!((psi.g(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-12);
}

#[test]
fn circle_is_invariant() {
    let psi = &golden().psi;
    let worst = (0..10_000)
        .map(|k| (psi.g(Complex64::from_polar(1.0, TAU * k as f64 / 10_000.0)).unwrap().norm() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "max ||G| − 1| = {worst}");
}

#[test]
fn region_split_is_nearly_continuous() {
    let psi = &golden().psi;
    for k in 0..64 {
        let u = Complex64::from_polar(1.0, TAU * (k as f64 + 0.3) / 64.0);
        for r in [OUTER_SPLIT, 1.0 / OUTER_SPLIT] {
            let jump = (psi.g(u * r * (1.0 + 1e-12)).unwrap() - psi.g(u * r * (1.0 - 1e-12)).unwrap()).norm();
            assert!(jump < 1e-5, "r = {r}, k = {k}: {jump}");
        }
    }
    assert_eq!(psi.g(c(0.0, 0.0)), Err(ModelError::OriginPole));
}

#[test]
fn rotated_map_has_golden_rotation_number() {
    let model = golden();
    let est = rotation_number(&model.circle_lift(), 100_000).unwrap();
    assert!((est.value - GOLDEN).abs() < 1e-5, "ρ = {}", est.value);
}

#[test]
fn quotient_map_rotates_by_twice_theta() {
    let model = golden();
    let est = rotation_number(&model.quotient_lift(), 100_000).unwrap();
    assert!((est.value - double_mod1(GOLDEN)).abs() < 2e-5, "ρ = {}", est.value);
}

#[test]
fn solver_recovers_a_forward_computed_parameter() {
    let psi = &golden().psi;
    let t0 = 0.3;
    let quotients = rotation_quotients(&RotatedLift { map: psi, t: t0 }, 10_000_000);
    let theta = ContinuedFraction::from_quotients(&quotients).unwrap();
    let sol = solve_rotation_parameter(psi, &theta, 1e-13, 10_000_000).unwrap();
    assert!((sol.t - t0).abs() < 1e-10, "t = {}", sol.t);
    assert!(sol.warning.is_none());
}

#[test]
fn degenerate_tolerance_returns_the_midpoint() {
    let psi = &golden().psi;
    let theta = ContinuedFraction::from_quotients(&[1; 20]).unwrap();
    let sol = solve_rotation_parameter(psi, &theta, 1.0, 1000).unwrap();
    assert_eq!(sol.t, 0.5);
    assert!(sol.warning.is_some());
}

#[test]
fn square_map_is_independent_of_the_root() {
    let model = golden();
    for z in [c(2.0, 0.5), c(-0.3, 0.2), c(0.1, -4.0), c(1.0, 0.0)] {
        let r = z.sqrt();
        let a = model.eval_g_theta(r).unwrap();
        let b = model.eval_g_theta(-r).unwrap();
        assert!((a * a - b * b).norm() < 1e-10 * (1.0 + a.norm_sqr()));
        assert!((model.eval_g(z).unwrap() - a * a).norm() < 1e-12 * (1.0 + a.norm_sqr()));
    }
    assert_eq!(model.eval_g(c(0.0, 0.0)), Err(ModelError::OriginPole));
}

#[test]
fn model_round_trips_through_json() {
    let file = golden_file();
    let dir = std::env::temp_dir().join(format!("siegel-model-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    siegel::io::write_json(&path, file).unwrap();
    let back = siegel::pipeline::ModelFile::load(&path).unwrap();
    assert_eq!(back.model.t(), file.model.t());
    let w = c(0.7, 0.9);
    assert_eq!(back.model.eval_g(w), file.model.eval_g(w));
    assert_eq!(back.model.psi.gamma_derivative(0.4), file.model.psi.gamma_derivative(0.4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sine_preimages_are_round_away_from_critical_values() {
    let report = sine_preimage_roundness(c(0.0, 0.3), 0.01, 2.0, 512).unwrap();
    assert!(!report.folded);
    assert!(report.distortion < 1.5 && report.tau >= 2.0 * 0.99, "{report:?}");
    // Near-affine branch: the inner disk is about r |arcsin'(a)|.
    let scale = 0.01 / (1.0 - c(0.0, 0.3) * c(0.0, 0.3)).sqrt().norm();
    assert!((report.inner_radius / scale - 1.0).abs() < 0.05);
}

#[test]
fn critical_value_gives_a_folded_preimage() {
    let report = sine_preimage_roundness(c(1.0, 0.0), 0.01, 2.0, 512).unwrap();
    assert!(report.folded);
    // sin(π/2 + u) ≈ 1 − u²/2: the preimages are disks of radius √(2r) and
    // √(2Mr) about π/2, so τ = √M.
    assert!((report.center - FRAC_PI_2).norm() < 1e-3);
    assert!((report.inner_radius / 0.02f64.sqrt() - 1.0).abs() < 0.01, "{report:?}");
    assert!((report.tau - 2f64.sqrt()).abs() < 0.02, "{report:?}");
}

#[test]
fn roundness_preconditions() {
    assert!(matches!(sine_preimage_roundness(c(1.5, 0.0), 0.3, 2.0, 64), Err(ModelError::Precondition(_))));
    assert!(matches!(sine_preimage_roundness(c(0.0, 0.0), 0.1, 1.0, 64), Err(ModelError::Precondition(_))));
    assert!(matches!(sine_preimage_roundness(c(0.0, 0.0), 0.1, 2.0, 8), Err(ModelError::TooFewSamples { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn big_g_is_odd(r in 0.2f64..4.0, a in 0.0f64..1.0) {
        let z = Complex64::from_polar(r, TAU * a);
        let psi = &golden().psi;
        let s = psi.g(z).unwrap() + psi.g(-z).unwrap();
        prop_assert!(s.norm() < 1e-9 * (1.0 + psi.g(z).unwrap().norm()), "{s}");
    }

    #[test]
    fn big_g_commutes_with_circle_reflection(r in 0.2f64..4.0, a in 0.0f64..1.0) {
        let z = Complex64::from_polar(r, TAU * a);
        let psi = &golden().psi;
        let lhs = psi.g(z.conj().inv()).unwrap().conj().inv();
        let rhs = psi.g(z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-5 * (1.0 + rhs.norm()), "{lhs} vs {rhs}");
    }

    #[test]
    fn big_g_has_real_coefficients(r in 0.2f64..4.0, a in 0.0f64..1.0) {
        let z = Complex64::from_polar(r, PI * a);
        let psi = &golden().psi;
        let d = psi.g(z.conj()).unwrap() - psi.g(z).unwrap().conj();
        prop_assert!(d.norm() < 1e-9 * (1.0 + psi.g(z).unwrap().norm()));
    }
}
