use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siegel_core::measure::*;

fn unit_plane(resolution: usize) -> GridField {
    GridField::new(Chart::Plane, 1.0, 1.0, resolution)
}

/// Field on the closed unit disk with `area{v > 1 − ε} = law(ε)` up to one pixel.
fn synthetic(law_inverse: impl Fn(f64) -> Option<f64>) -> GridField {
    let mut fields = [unit_plane(1024)];
    radial_sublevel_field(&mut fields, law_inverse);
    let [f] = fields;
    f
}

/// Spherical area of the disk `|z − c| < r` (real `c ≥ r`), from the
/// angular radius of its stereographic cap.
fn cap_area(c: f64, r: f64) -> f64 {
    let rho = (c + r).atan() - (c - r).atan();
    0.5 * PI * (1.0 - rho.cos())
}

#[test]
fn atlas_weights_cover_the_sphere() {
    let atlas = Atlas::new(4.0, 1024);
    assert!((atlas.total_weight() - PI).abs() < 0.01 * PI, "{}", atlas.total_weight());
    // The closed unit disk is half the sphere.
    let mut atlas = atlas;
    atlas.fill(|z| if z.norm() <= 1.0 { 1.0 } else { 0.0 });
    let (disk, _) = atlas.area_where(|v| v > 0.5);
    assert!((disk - 0.5 * PI).abs() < 0.01 * PI);
}

#[test]
fn exponential_law_recovers_its_exponent() {
    // area = e^{−2/ε}  ⇔  ε = 2 / ln(1/area)
    let field = synthetic(|w| Some(2.0 / (1.0 / w).ln()));
    let eps = log_spaced(0.22, 0.5, 12);
    let fit = david_condition_fit(&[&field], &eps).unwrap();
    assert!((fit.alpha_fit - 2.0).abs() < 0.1, "α = {}", fit.alpha_fit);
    assert!(fit.r_squared > 0.99);
    assert!(fit.pass);
    for p in fit.points.iter().filter(|p| p.used) {
        let exact = (-2.0 / p.epsilon).exp();
        assert!((p.area - exact).abs() <= 4e-6 + 1e-3 * exact, "ε = {}", p.epsilon);
    }
}

#[test]
fn power_law_fails_the_exponential_fit() {
    let field = synthetic(|w| Some(w));
    let eps = log_spaced(0.02, 0.5, 12);
    let fit = david_condition_fit(&[&field], &eps).unwrap();
    assert!(!fit.pass);
    assert!(fit.curvature_flag || fit.r_squared <= 0.9);
}

#[test]
fn zero_field_is_vacuous() {
    let field = unit_plane(64);
    assert_eq!(david_condition_fit(&[&field], &log_spaced(0.02, 0.5, 8)), Err(MeasureError::AllBelowThreshold));
}

#[test]
fn fit_rejects_bad_thresholds() {
    let field = unit_plane(16);
    assert!(matches!(david_condition_fit(&[&field], &[0.1, 0.2]), Err(MeasureError::TooFewEpsilons { .. })));
    assert!(matches!(
        david_condition_fit(&[&field], &[0.1, 0.2, 0.3, 0.4, 1.5]),
        Err(MeasureError::EpsilonOutOfRange(_))
    ));
}

#[test]
fn coarse_grids_are_underresolved() {
    let mut fields = [unit_plane(16)];
    radial_sublevel_field(&mut fields, |w| Some(2.0 / (1.0 / w).ln()));
    assert!(matches!(
        david_condition_fit(&[&fields[0]], &log_spaced(0.1, 0.5, 8)),
        Err(MeasureError::Underresolved { .. })
    ));
}

#[test]
fn linear_fit_recovers_a_line() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    assert!((a + 2.0).abs() < 1e-14 && (b - 3.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
}

#[test]
fn right_angle_neighbourhood_is_the_orthogonal_disk() {
    // Meeting 𝕋 at a right angle through e^{±iφ}: centre sec φ, radius tan φ.
    for &len in &[0.01, 0.05, 0.2] {
        let phi = PI * len;
        let h = HyperbolicNbhd::new(-0.5 * len, len, 0.5 * PI).unwrap();
        let (c, r) = (1.0 / phi.cos(), phi.tan());
        assert!((h.euclidean_area() - PI * r * r).abs() < 1e-12 * (1.0 + PI * r * r));
        assert!((h.spherical_area() - cap_area(c, r)).abs() < 1e-9);
        // For short arcs it is the disk on the chord as diameter.
        if len < 0.1 {
            let chord = 2.0 * phi.sin();
            assert!((h.euclidean_area() / (PI * 0.25 * chord * chord) - 1.0).abs() < 1.1 * phi * phi);
        }
    }
}

#[test]
fn boundary_quadrature_matches_pixel_counts() {
    let h = HyperbolicNbhd::new(0.1, 0.08, 1.0).unwrap();
    let field = GridField::new(Chart::Plane, 2.0, 2.0, 2048);
    let (mut euclid, mut sph) = (0.0, 0.0);
    let px = field.pixel_size() * field.pixel_size();
    for idx in 0..field.len() {
        if h.contains(field.coord(idx)) {
            euclid += px;
            sph += field.weights[idx];
        }
    }
    assert!((euclid - h.euclidean_area()).abs() < 1e-4, "{euclid} vs {}", h.euclidean_area());
    assert!((sph - h.spherical_area()).abs() < 1e-4);
    assert!((h.exterior_spherical_area() - 0.5 * h.spherical_area()).abs() < 1e-15);
}

#[test]
fn angle_must_lie_in_the_open_interval() {
    assert_eq!(HyperbolicNbhd::new(0.0, 0.1, 0.0), Err(MeasureError::AngleOutOfRange(0.0)));
    assert!(HyperbolicNbhd::new(0.0, 0.1, PI).is_err());
}

#[test]
fn unit_disk_pullback_ratio() {
    let atlas = Atlas::new(2.0, 512);
    let fields: Vec<&GridField> = atlas.charts.iter().collect();
    let in_disk = |c: usize, i: usize| c == 0 && fields[c].coord(i).norm() < 1.0;
    let ratio = sqrt_area_pullback_check(&fields, in_disk);
    assert!((ratio - (PI / 2.0).sqrt()).abs() < 0.01, "ratio {ratio}");
    assert_eq!(sqrt_area_pullback_check(&fields, |_, _| false), 0.0);
}

#[test]
fn pullback_ratio_is_uniformly_bounded() {
    // The pullback density relative to the spherical element peaks at 0 and
    // ∞; the extremal set is a pair of polar caps, with ratio √(2π).
    let atlas = Atlas::new(2.0, 256);
    let fields: Vec<&GridField> = atlas.charts.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let disks: Vec<(usize, Complex64, f64)> = (0..rng.random_range(1..6))
            .map(|_| {
                let chart = rng.random_range(0..2);
                let w = fields[chart].half_width;
                let c = Complex64::new(rng.random_range(-w..w), rng.random_range(-w..w));
                (chart, c, rng.random_range(0.01..0.5) * w)
            })
            .collect();
        let set = |c: usize, i: usize| disks.iter().any(|&(k, z, r)| k == c && (fields[c].coord(i) - z).norm() < r);
        let ratio = sqrt_area_pullback_check(&fields, set);
        worst = worst.max(ratio);
    }
    assert!(worst > 0.0 && worst <= (2.0 * PI).sqrt() * 1.02, "worst {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn neighbourhoods_shrink_as_the_angle_grows(
        start in 0.0f64..1.0,
        len in 0.01f64..0.3,
        a in 0.1f64..1.4,
        extra in 0.05f64..1.0,
        r in 0.3f64..3.0,
        t in 0.0f64..1.0,
    ) {
        let fat = HyperbolicNbhd::new(start, len, a).unwrap();
        let thin = HyperbolicNbhd::new(start, len, a + extra).unwrap();
        let z = Complex64::from_polar(r, 2.0 * PI * t);
        if thin.contains(z) {
            prop_assert!(fat.contains(z));
        }
        prop_assert!(thin.spherical_area() <= fat.spherical_area() + 1e-12);
    }

    #[test]
    fn neighbourhoods_are_symmetric_about_the_circle(
        start in 0.0f64..1.0,
        len in 0.01f64..0.3,
        a in 0.1f64..3.0,
        r in 0.3f64..3.0,
        t in 0.0f64..1.0,
    ) {
        let h = HyperbolicNbhd::new(start, len, a).unwrap();
        let z = Complex64::from_polar(r, 2.0 * PI * t);
        let mirror = z.conj().inv();
        // Points within rounding of the boundary can land on either side.
        let dz = 1e-9 * Complex64::from_polar(1.0, 2.0 * PI * t);
        if h.contains(z + dz) == h.contains(z - dz) {
            prop_assert_eq!(h.contains(z), h.contains(mirror));
        }
    }
}
