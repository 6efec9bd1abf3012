use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use siegel::render::*;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_256() -> &'static RenderResult {
    static R: OnceLock<RenderResult> = OnceLock::new();
    R.get_or_init(|| render_siegel(GOLDEN, &RenderConfig { resolution: 256, ..RenderConfig::default() }).unwrap())
}

#[test]
fn both_critical_points_sit_on_the_boundary() {
    let r = golden_256();
    assert!(r.boundary_hits.iter().all(|&d| d <= 2.0), "{:?}", r.boundary_hits);
    assert!(r.warnings.is_empty());
}

#[test]
fn critical_orbit_traces_the_boundary() {
    let r = golden_256();
    assert_eq!(r.critical_orbit.len(), CRITICAL_ORBIT_LEN);
    assert!(r.orbit_to_boundary <= 3.0, "{}", r.orbit_to_boundary);
    assert!(r.boundary_to_orbit <= 4.0, "{}", r.boundary_to_orbit);
    // The orbit stays away from the origin and never exceeds the critical value.
    let (lo, hi) = r.critical_orbit.iter().fold((f64::MAX, 0.0f64), |(a, b), z| (a.min(z.norm()), b.max(z.norm())));
    assert!(lo > 0.5 && hi <= FRAC_PI_2 + 1e-9, "{lo} {hi}");
}

#[test]
fn disk_is_odd_symmetric() {
    let r = golden_256();
    assert!(r.symmetry_defect <= 1.0);
    let n = r.config.resolution;
    let disk: Vec<bool> = r.classes.iter().map(|&c| c == DISK).collect();
    let mismatched = (0..n * n).filter(|&i| disk[i] != disk[n * n - 1 - i]).count();
    assert!(mismatched * 1000 <= r.disk_pixels, "{mismatched} of {}", r.disk_pixels);
}

#[test]
fn disk_contains_the_origin_and_is_bounded() {
    let r = golden_256();
    let n = r.config.resolution;
    assert_eq!(r.classes[(n / 2) * n + n / 2], DISK);
    assert_eq!(r.classes.len(), n * n);
    assert_eq!(r.classes.iter().filter(|&&c| c == DISK).count(), r.disk_pixels);
    // Pixel area of the disk against the window: between the inscribed
    // radius-1 disk and the square of side π.
    let h = 2.0 * r.config.half_width / n as f64;
    let area = r.disk_pixels as f64 * h * h;
    assert!(area > PI && area < PI * PI, "area {area}");
}

#[test]
fn ppm_has_a_p6_header() {
    let r = render_siegel(GOLDEN, &RenderConfig { resolution: 32, iters: 200, ..RenderConfig::default() }).unwrap();
    let ppm = r.to_ppm();
    let header = b"P6\n32 32\n255\n";
    assert_eq!(&ppm[..header.len()], header);
    assert_eq!(ppm.len(), header.len() + 3 * 32 * 32);
}

#[test]
fn rational_rotation_is_flagged() {
    assert!(looks_rational(1.0 / 3.0));
    assert!(looks_rational(0.5));
    assert!(looks_rational(355.0 / 1000.0));
    assert!(!looks_rational(GOLDEN));
    assert!(!looks_rational(2f64.sqrt() - 1.0));
    let r = render_siegel(1.0 / 3.0, &RenderConfig { resolution: 32, iters: 200, ..RenderConfig::default() }).unwrap();
    assert_eq!(r.warnings.len(), 1);
    assert!(r.warnings[0].starts_with("NonIrrational"));
}

#[test]
fn render_preconditions() {
    let cfg = RenderConfig { resolution: 8, ..RenderConfig::default() };
    assert_eq!(render_siegel(GOLDEN, &cfg).unwrap_err(), RenderError::ResolutionTooSmall(8));
    let cfg = RenderConfig { half_width: 1.5, resolution: 32, ..RenderConfig::default() };
    assert!(matches!(render_siegel(GOLDEN, &cfg), Err(RenderError::WindowTooSmall { .. })));
}
