use std::sync::OnceLock;

use proptest::prelude::*;
use siegel_core::arithmetic::{named, ContinuedFraction};
use siegel_core::circle::*;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_map() -> &'static CriticalStandardMap {
    static MAP: OnceLock<CriticalStandardMap> = OnceLock::new();
    MAP.get_or_init(|| CriticalStandardMap::tuned(&named::golden(40), 100_000))
}

fn golden_table(level: usize) -> OrbitTable {
    critical_preimages(golden_map(), level, &returns_of(&named::golden(40))).unwrap()
}

/// Lift with a dip: not a homeomorphism.
struct Folded;

impl CircleMap for Folded {
    fn lift(&self, x: f64) -> f64 {
        x + 0.3 - 0.4 * (2.0 * std::f64::consts::PI * x).sin() / (2.0 * std::f64::consts::PI) * 3.0
    }
}

#[test]
fn rigid_quarter_turn_has_rotation_number_one_quarter() {
    let est = rotation_number(&RigidRotation { alpha: 0.25 }, 1000).unwrap();
    assert!((est.value - 0.25).abs() < 1e-3);
    assert_eq!(est.error_bound, 1e-3);
}

#[test]
fn tuned_standard_map_has_golden_rotation_number() {
    let est = rotation_number(golden_map(), 100_000).unwrap();
    assert!((est.value - GOLDEN).abs() < 1e-5, "ρ = {}", est.value);
}

#[test]
fn rotation_number_needs_a_hundred_iterations() {
    assert_eq!(rotation_number(&RigidRotation { alpha: 0.1 }, 99), Err(CircleError::TooFewIterations(99)));
}

#[test]
fn folded_lift_is_rejected() {
    assert!(matches!(rotation_number(&Folded, 1000), Err(CircleError::NonMonotoneLift { .. })));
    assert!(matches!(critical_preimages(&Folded, 2, &[1, 1, 2, 3, 5]), Err(CircleError::NonMonotoneLift { .. })));
}

#[test]
fn rigid_preimages_match_the_closed_form() {
    let theta = named::golden(30);
    let returns = returns_of(&theta);
    let table = critical_preimages(&RigidRotation { alpha: GOLDEN }, 6, &returns).unwrap();
    assert_eq!(table.backward_len(), (returns[6] + returns[7]) as usize + 1);
    for i in 0..table.backward_len() {
        let closed = (-(i as f64) * GOLDEN).rem_euclid(1.0);
        assert!(circle_dist(table.x(i as i64), closed) < 1e-12, "i = {i}");
    }
    assert!(circle_dist(table.critical_value(), GOLDEN) < 1e-15);
}

#[test]
fn level_zero_table_holds_only_the_critical_point() {
    let table = critical_preimages(&RigidRotation { alpha: GOLDEN }, 0, &[1, 1]).unwrap();
    assert_eq!(table.backward_len(), 1);
    assert_eq!(table.x(0), 0.0);
}

#[test]
fn missing_denominators_are_reported() {
    assert_eq!(
        critical_preimages(&RigidRotation { alpha: GOLDEN }, 4, &[1, 1, 2]).unwrap_err(),
        CircleError::MissingDenominators { need: 6, got: 3 }
    );
}

#[test]
fn standard_map_preimages_return_to_the_critical_point() {
    let table = golden_table(8);
    let n = table.backward_len();
    assert!(table.residual(golden_map(), 0..n) < 1e-8);
    assert!(table.step_residual(golden_map()).1 < 1e-12);
}

#[test]
fn standard_map_orbit_is_ordered_like_the_golden_rotation() {
    let table = golden_table(8);
    verify_combinatorics(&table, GOLDEN, table.backward_len()).unwrap();
}

#[test]
fn partition_sizes_follow_the_denominators() {
    // Golden denominators 1, 1, 2, 3, 5, 8, ...: |Π_2| = 2 + 3 + ... = q_2 + q_3.
    let table = golden_table(6);
    let pi = dynamical_partition(&table, 2).unwrap();
    assert_eq!(pi.arcs.len(), 5);
    for n in 1..=6 {
        let pi = dynamical_partition(&table, n).unwrap();
        let xi = cell_partition(&table, n).unwrap();
        assert_eq!(pi.arcs.len(), table.pi_size(n));
        assert_eq!(xi.arcs.len(), table.q(n + 1) as usize);
        assert!((pi.total_length() - 1.0).abs() < 1e-12);
        assert!((xi.total_length() - 1.0).abs() < 1e-12);
    }
    assert_eq!(dynamical_partition(&table, 7).unwrap_err(), CircleError::LevelTooLow { have: 6, need: 7 });
}

#[test]
fn silver_dynamical_partition_at_level_two_has_seventeen_arcs() {
    // Silver denominators 1, 2, 5, 12, 29: |Π_2| = 5 + 12.
    let theta = named::silver(20);
    let table = rigid_table(2f64.sqrt() - 1.0, 3, &returns_of(&theta)).unwrap();
    assert_eq!(dynamical_partition(&table, 2).unwrap().arcs.len(), 17);
}

#[test]
fn lemmas_hold_for_the_rigid_rotation() {
    let theta = named::golden(30);
    let f = RigidRotation { alpha: GOLDEN };
    let table = critical_preimages(&f, 6, &returns_of(&theta)).unwrap();
    let report = partition_lemmas_check(&f, &table, 3).unwrap();
    assert_eq!(report.cell_arcs, 5);
}

#[test]
fn lemmas_hold_for_the_tuned_standard_map() {
    let table = golden_table(9);
    for n in 2..=6 {
        let report = partition_lemmas_check(golden_map(), &table, n).unwrap();
        // Counting oracle: q_{n+1} cells, of which q_n are unions of two arcs.
        assert_eq!(report.single + report.double, table.q(n + 1) as usize);
        assert_eq!(report.double, table.q(n) as usize);
        assert_eq!(report.dynamical_arcs, report.single + 2 * report.double);
        // Every quotient is 1, so cells [x_j, x_{j+q_n}] persist.
        assert!(report.persistent > 0);
        assert!(report.delta_emp < 1.0);
    }
}

#[test]
fn lemmas_for_a_quotient_two_map() {
    let theta = ContinuedFraction::from_quotients(&[2; 14]).unwrap();
    let f = CriticalStandardMap::tuned(&theta, 20_000);
    let table = critical_preimages(&f, 7, &returns_of(&theta)).unwrap();
    for n in 2..=5 {
        let report = partition_lemmas_check(&f, &table, n).unwrap();
        assert_eq!(report.double, table.q(n) as usize);
        // a_{n+2} = 2: nothing persists.
        assert_eq!(report.persistent, 0);
    }
}

#[test]
fn perturbed_orbit_violates_the_lemmas() {
    let mut table = golden_table(7);
    table.perturb(1, 1e-3);
    assert!(matches!(
        partition_lemmas_check(golden_map(), &table, 3),
        Err(CircleError::LemmaViolation { .. })
    ));
}

#[test]
fn rigid_golden_first_ratio_is_the_golden_mean() {
    // |q_n θ − p_n| = g^{n+1}; both points sit on the same side of 1, so the
    // ratio is (g^{n+1} − g^{n+2}) / g^{n+2} = g.
    let theta = named::golden(30);
    let table = rigid_table(GOLDEN, 12, &returns_of(&theta)).unwrap();
    let rows = real_bounds_report(&table, 1..=12).unwrap();
    for row in &rows {
        assert!((row.ratio_first - GOLDEN).abs() < 1e-6, "level {}: {}", row.level, row.ratio_first);
    }
}

#[test]
fn real_bounds_of_the_standard_map_are_bounded_and_settle() {
    let table = golden_table(10);
    let rows = real_bounds_report(&table, 0..=10).unwrap();
    assert!(rows[0].pre_asymptotic && rows[1].pre_asymptotic && !rows[2].pre_asymptotic);
    for row in &rows[2..] {
        for r in row.ratios() {
            assert!((0.05..=20.0).contains(&r), "level {}: {r}", row.level);
        }
        assert!(row.adjacent <= 20.0);
    }
    let var = ratio_variation(&rows[2..]);
    let (head, tail) = (var[0], var[var.len() - 1]);
    assert!(tail < head, "variation {var:?}");
}

#[test]
fn gaps_and_distances() {
    assert_eq!(frac(-0.25), 0.75);
    assert_eq!(frac(-1e-20), 0.0);
    assert!((signed_gap(0.9, 0.1) - 0.2).abs() < 1e-15);
    assert!((signed_gap(0.1, 0.9) + 0.2).abs() < 1e-15);
    assert!((circle_dist(0.95, 0.05) - 0.1).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rigid_rotation_number_is_within_the_bound(alpha in 0.0f64..1.0, iters in 100usize..5000) {
        let est = rotation_number(&RigidRotation { alpha }, iters).unwrap();
        prop_assert!((est.value - alpha).abs() <= est.error_bound);
    }

    #[test]
    fn standard_map_rotation_number_is_monotone_in_omega(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r = |omega| rotation_number(&CriticalStandardMap { omega }, 2000).unwrap().value;
        prop_assert!(r(lo) <= r(hi) + 2.0 / 2000.0);
    }

    #[test]
    fn inversion_is_a_right_inverse(omega in 0.0f64..1.0, y in 0.0f64..1.0) {
        let f = CriticalStandardMap { omega };
        let x = invert(&f, y).unwrap();
        prop_assert!(circle_dist(frac(f.lift(x)), y) < 1e-12);
    }
}
