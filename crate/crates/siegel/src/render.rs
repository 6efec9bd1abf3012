//! Pixel classification of the Siegel disk of `f_θ(z) = e^{2πiθ} sin z`.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use siegel_core::arithmetic::{cf_expand, ArithmeticError};

/// Orbits leaving this disk count as unbounded.
pub const BOUND: f64 = 50.0;
pub const CRITICAL_ORBIT_LEN: usize = 100_000;
/// Quotients beyond this within the certified expansion mark `θ` as
/// numerically rational.
const RATIONAL_QUOTIENT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("window [{lo}, {hi}]² does not contain ±π/2")]
    WindowTooSmall { lo: f64, hi: f64 },
    #[error("resolution {0} is below 16")]
    ResolutionTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Square window `[−half_width, half_width]²`.
    pub half_width: f64,
    pub resolution: usize,
    pub iters: usize,
    /// Erosion radius in pixels used to cut pinches before the flood fill.
    pub erosion: usize,
    /// A pixel counts as recurrent when its orbit returns within this many
    /// pixels of its start.
    pub recurrence: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { half_width: PI + 0.25, resolution: 1024, iters: 2000, erosion: 1, recurrence: 2.0 }
    }
}

/// Pixel class codes in [`RenderResult::classes`].
pub const UNBOUNDED: u8 = 0;
pub const BOUNDED: u8 = 1;
pub const DISK: u8 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderResult {
    pub theta: f64,
    pub config: RenderConfig,
    /// Row-major, row 0 at the bottom.
    pub classes: Vec<u8>,
    pub critical_orbit: Vec<Complex64>,
    /// Euclidean pixel distance from `π/2` and `−π/2` to the disk boundary.
    pub boundary_hits: [f64; 2],
    /// Largest pixel distance from a critical-orbit point to the boundary.
    pub orbit_to_boundary: f64,
    /// Largest pixel distance from a boundary pixel to the critical orbit.
    pub boundary_to_orbit: f64,
    /// Largest Chebyshev distance from a pixel where the disk and its point
    /// reflection disagree to the disk boundary; 0 for an exactly odd image.
    pub symmetry_defect: f64,
    pub disk_pixels: usize,
    pub warnings: Vec<String>,
}

/// `e^{2πiθ} sin z` with one exponential and one `sin_cos`.
fn f_theta(rot: Complex64, z: Complex64) -> Complex64 {
    let (s, c) = z.re.sin_cos();
    let e = z.im.exp();
    let ei = 1.0 / e;
    rot * Complex64::new(0.5 * s * (e + ei), 0.5 * c * (e - ei))
}

/// Whether `θ` looks rational at binary64 precision.
pub fn looks_rational(theta: f64) -> bool {
    // A quotient of at least RATIONAL_QUOTIENT right after a small
    // denominator puts θ within 1/(a q²) of that convergent.
    let (quotients, ended) = match cf_expand(theta, 40) {
        Ok(cf) => (cf.quotients, false),
        Err(ArithmeticError::RationalInput { quotients } | ArithmeticError::PrecisionExhausted { quotients }) => {
            (quotients, true)
        }
        Err(_) => return false,
    };
    let (mut q_prev, mut q) = (0u64, 1u64);
    for &a in &quotients {
        if q > RATIONAL_QUOTIENT {
            return false;
        }
        if a >= RATIONAL_QUOTIENT {
            return true;
        }
        (q_prev, q) = (q, a.saturating_mul(q).saturating_add(q_prev));
    }
    ended && q <= RATIONAL_QUOTIENT
}

struct Grid {
    n: usize,
    lo: f64,
    h: f64,
}

impl Grid {
    fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let c = ((z.re - self.lo) / self.h).floor();
        let r = ((z.im - self.lo) / self.h).floor();
        (c >= 0.0 && r >= 0.0 && c < self.n as f64 && r < self.n as f64).then_some((r as usize, c as usize))
    }

    fn center(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.lo + (col as f64 + 0.5) * self.h, self.lo + (row as f64 + 0.5) * self.h)
    }

    fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = ((idx / self.n) as i64, (idx % self.n) as i64);
        let n = self.n as i64;
        [(-1, 0), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .map(move |(dr, dc)| (r + dr, c + dc))
            .filter(move |&(r, c)| r >= 0 && c >= 0 && r < n && c < n)
            .map(move |(r, c)| (r * n + c) as usize)
    }
}

/// Chebyshev erosion of `mask` by `radius` pixels.
fn erode(mask: &[bool], n: usize, radius: usize) -> Vec<bool> {
    let rad = radius as i64;
    let ni = n as i64;
    // Separable: rows, then columns.
    let pass = |src: &[bool], horizontal: bool| -> Vec<bool> {
        let mut out = vec![false; n * n];
        for r in 0..ni {
            for c in 0..ni {
                let keep = (-rad..=rad).all(|d| {
                    let (rr, cc) = if horizontal { (r, c + d) } else { (r + d, c) };
                    rr >= 0 && cc >= 0 && rr < ni && cc < ni && src[(rr * ni + cc) as usize]
                });
                out[(r * ni + c) as usize] = keep;
            }
        }
        out
    };
    let h = pass(mask, true);
    pass(&h, false)
}

/// Multi-source BFS distance, in pixels, to the nearest seed, using the
/// nearest seed's coordinates for a Euclidean value.
fn distance_map(seeds: &[usize], grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let mut nearest = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for &s in seeds {
        nearest[s] = s;
        queue.push_back(s);
    }
    let dist = |a: usize, b: usize| {
        let (ra, ca) = ((a / n) as f64, (a % n) as f64);
        let (rb, cb) = ((b / n) as f64, (b % n) as f64);
        ((ra - rb).powi(2) + (ca - cb).powi(2)).sqrt()
    };
    while let Some(p) = queue.pop_front() {
        let src = nearest[p];
        for q in grid.neighbours(p) {
            if nearest[q] == usize::MAX || dist(q, src) < dist(q, nearest[q]) {
                let was_unset = nearest[q] == usize::MAX;
                nearest[q] = src;
                if was_unset {
                    queue.push_back(q);
                }
            }
        }
    }
    (0..n * n).map(|i| if nearest[i] == usize::MAX { f64::INFINITY } else { dist(i, nearest[i]) }).collect()
}

/// Marks everything 4-connected to `seeds` through pixels with `open(q)`.
fn flood(mark: &mut [bool], seeds: &[usize], grid: &Grid, open: impl Fn(usize) -> bool) {
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    while let Some(p) = queue.pop_front() {
        for q in grid.neighbours(p) {
            if !mark[q] && open(q) {
                mark[q] = true;
                queue.push_back(q);
            }
        }
    }
}

/// Renders the bounded-orbit component of 0 for `f_θ`.
pub fn render_siegel(theta: f64, cfg: &RenderConfig) -> Result<RenderResult, RenderError> {
    if cfg.resolution < 16 {
        return Err(RenderError::ResolutionTooSmall(cfg.resolution));
    }
    if !(cfg.half_width > FRAC_PI_2) {
        return Err(RenderError::WindowTooSmall { lo: -cfg.half_width, hi: cfg.half_width });
    }
    let mut warnings = Vec::new();
    if looks_rational(theta) {
        warnings.push(format!("NonIrrational: θ = {theta} is rational at working precision"));
    }
    let n = cfg.resolution;
    let grid = Grid { n, lo: -cfg.half_width, h: 2.0 * cfg.half_width / n as f64 };
    let rot = Complex64::from_polar(1.0, 2.0 * PI * theta);

    // Points of the disk lie on invariant curves and come back close to
    // themselves; preimage components touching it at critical points do not.
    let tol = (cfg.recurrence * grid.h).powi(2);
    let mut bounded = vec![false; n * n];
    let mut recurrent = vec![false; n * n];
    for idx in 0..n * n {
        let z0 = grid.center(idx / n, idx % n);
        let mut z = z0;
        let mut ok = true;
        let mut back = false;
        for _ in 0..cfg.iters {
            z = f_theta(rot, z);
            if !(z.norm_sqr() < BOUND * BOUND) {
                ok = false;
                break;
            }
            back |= (z - z0).norm_sqr() < tol;
        }
        bounded[idx] = ok;
        recurrent[idx] = ok && back;
    }

    // Erode to cut pinches, flood from 0, then grow back inside the mask.
    let eroded = erode(&recurrent, n, cfg.erosion);
    let start = grid.pixel_of(Complex64::new(0.0, 0.0)).map(|(r, c)| r * n + c).expect("origin inside window");
    let mut disk = vec![false; n * n];
    if eroded[start] {
        disk[start] = true;
        flood(&mut disk, &[start], &grid, |q| eroded[q]);
    }
    let mut frontier: Vec<usize> = (0..n * n).filter(|&i| disk[i]).collect();
    for _ in 0..cfg.erosion {
        let mut next = Vec::new();
        for &p in &frontier {
            let (r, c) = ((p / n) as i64, (p % n) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= n as i64 || cc >= n as i64 {
                        continue;
                    }
                    let q = (rr * n as i64 + cc) as usize;
                    if recurrent[q] && !disk[q] {
                        disk[q] = true;
                        next.push(q);
                    }
                }
            }
        }
        frontier = next;
    }

    // Orbits from the core trace invariant curves of the disk. Next to the
    // boundary they return too slowly to pass the recurrence test, so the
    // pixels they cross are added, then holes are filled and only the
    // component of 0 is kept.
    // The core is eroded once more so that no orbit starts on the fringe,
    // where bounded chaotic points near the Julia set can pass the test.
    let core = erode(&disk, n, 1);
    for idx in (0..n * n).filter(|&i| core[i]) {
        let mut z = grid.center(idx / n, idx % n);
        for _ in 0..cfg.iters {
            z = f_theta(rot, z);
            if let Some((r, c)) = grid.pixel_of(z) {
                disk[r * n + c] = true;
            }
        }
    }
    let edge: Vec<usize> = (0..n * n)
        .filter(|&i| !disk[i] && (i / n == 0 || i % n == 0 || i / n == n - 1 || i % n == n - 1))
        .collect();
    let mut outside = vec![false; n * n];
    for &i in &edge {
        outside[i] = true;
    }
    flood(&mut outside, &edge, &grid, |q| !disk[q]);
    let mut disk = vec![false; n * n];
    if !outside[start] {
        disk[start] = true;
        flood(&mut disk, &[start], &grid, |q| !outside[q]);
    }

    let classes: Vec<u8> = (0..n * n)
        .map(|i| if disk[i] { DISK } else if bounded[i] { BOUNDED } else { UNBOUNDED })
        .collect();
    let boundary: Vec<usize> = (0..n * n).filter(|&i| disk[i] && grid.neighbours(i).any(|q| !disk[q])).collect();
    let to_boundary = distance_map(&boundary, &grid);

    let dist_at = |z: Complex64| match grid.pixel_of(z) {
        Some((r, c)) => to_boundary[r * n + c],
        None => f64::INFINITY,
    };
    let boundary_hits = [dist_at(Complex64::new(FRAC_PI_2, 0.0)), dist_at(Complex64::new(-FRAC_PI_2, 0.0))];

    let mut critical_orbit = Vec::with_capacity(CRITICAL_ORBIT_LEN);
    let mut z = Complex64::new(FRAC_PI_2, 0.0);
    let mut orbit_pixels = Vec::new();
    let mut orbit_to_boundary: f64 = 0.0;
    for _ in 0..CRITICAL_ORBIT_LEN {
        z = f_theta(rot, z);
        critical_orbit.push(z);
        orbit_to_boundary = orbit_to_boundary.max(dist_at(z));
        if let Some((r, c)) = grid.pixel_of(z) {
            orbit_pixels.push(r * n + c);
        }
    }
    orbit_pixels.sort_unstable();
    orbit_pixels.dedup();
    let to_orbit = distance_map(&orbit_pixels, &grid);
    let boundary_to_orbit = boundary.iter().map(|&i| to_orbit[i]).fold(0.0, f64::max);

    // Point reflection through 0 maps pixel (r, c) to (n−1−r, n−1−c).
    let mut symmetry_defect: f64 = 0.0;
    for i in 0..n * n {
        let j = n * n - 1 - i;
        if disk[i] != disk[j] {
            let (r, c) = ((i / n) as i64, (i % n) as i64);
            let near = boundary
                .iter()
                .map(|&b| ((b / n) as i64 - r).abs().max(((b % n) as i64 - c).abs()))
                .min()
                .unwrap_or(i64::MAX);
            symmetry_defect = symmetry_defect.max(near as f64);
        }
    }

    Ok(RenderResult {
        theta,
        config: *cfg,
        classes,
        critical_orbit,
        boundary_hits,
        orbit_to_boundary,
        boundary_to_orbit,
        symmetry_defect,
        disk_pixels: disk.iter().filter(|&&d| d).count(),
        warnings,
    })
}

impl RenderResult {
    /// P6 image: disk, other bounded pixels, unbounded pixels, critical orbit.
    pub fn to_ppm(&self) -> Vec<u8> {
        let n = self.config.resolution;
        let mut rgb = vec![0u8; 3 * n * n];
        let paint = |rgb: &mut [u8], row: usize, col: usize, c: [u8; 3]| {
            // Image rows run top to bottom.
            let k = 3 * ((n - 1 - row) * n + col);
            rgb[k..k + 3].copy_from_slice(&c);
        };
        for (i, &cl) in self.classes.iter().enumerate() {
            let c = match cl {
                DISK => [238, 196, 72],
                BOUNDED => [70, 110, 170],
                _ => [16, 16, 24],
            };
            paint(&mut rgb, i / n, i % n, c);
        }
        let grid = Grid { n, lo: -self.config.half_width, h: 2.0 * self.config.half_width / n as f64 };
        for &z in &self.critical_orbit {
            if let Some((r, c)) = grid.pixel_of(z) {
                paint(&mut rgb, r, c, [200, 30, 30]);
            }
        }
        let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
        out.extend_from_slice(&rgb);
        out
    }
}
