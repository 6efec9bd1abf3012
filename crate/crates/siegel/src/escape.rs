//! First entry of exterior orbits of `g_θ` into `Δ`, the sets `X_n`, the
//! Beltrami moduli `|ν|` and `|μ|`, and the `Z_n` enclosures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use siegel_core::cells::{beltrami, ExtensionH};
use siegel_core::circle::{signed_gap, OrbitTable};
use siegel_core::measure::{linear_fit, Atlas, GridField, HyperbolicNbhd, MeasureError};

use crate::model::{ConformalModel, ModelError};

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const OVERFLOW_RADIUS: f64 = 1e15;
/// Levels resolved by fewer pixels are left out of the decay fit.
pub const MIN_LEVEL_PIXELS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EscapeError {
    #[error("z = {0} is not in the exterior of the closed unit disk")]
    NotExterior(Complex64),
    #[error("only {resolved} levels have at least {MIN_LEVEL_PIXELS} pixels")]
    InsufficientSamples { resolved: usize },
    #[error("level {level} needs an orbit table of level ≥ {level}, have {have}")]
    LevelBeyondTable { level: usize, have: usize },
    #[error("max_iter must be positive")]
    ZeroIterations,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeConfig {
    pub max_iter: usize,
    pub overflow: f64,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        EscapeConfig { max_iter: DEFAULT_MAX_ITER, overflow: OVERFLOW_RADIUS }
    }
}

/// Where a landing point sits among the cell annuli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Landing {
    Level(usize),
    /// Inside the innermost polygon.
    Core,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EscapeInfo {
    Escaping { k: usize, landing: Complex64, level: Landing },
    /// No entry within `max_iter`; `overflow` marks orbits that left through
    /// the magnitude cutoff.
    NonEscaping { iterations: usize, overflow: bool },
}

impl EscapeInfo {
    pub fn level(&self) -> Option<Landing> {
        match self {
            EscapeInfo::Escaping { level, .. } => Some(*level),
            EscapeInfo::NonEscaping { .. } => None,
        }
    }
}

/// Iterates `g_θ` from `|z| > 1` until the orbit enters `Δ`.
pub fn first_entry(
    model: &ConformalModel,
    ext: &ExtensionH,
    z: Complex64,
    cfg: &EscapeConfig,
) -> Result<EscapeInfo, EscapeError> {
    if !(z.norm() > 1.0) {
        return Err(EscapeError::NotExterior(z));
    }
    if cfg.max_iter == 0 {
        return Err(EscapeError::ZeroIterations);
    }
    let mut w = z;
    for k in 1..=cfg.max_iter {
        w = model.eval_g(w)?;
        let r = w.norm();
        if r < 1.0 {
            let level = ext.landing_level(w).map_or(Landing::Core, Landing::Level);
            return Ok(EscapeInfo::Escaping { k, landing: w, level });
        }
        if !(r <= cfg.overflow) {
            return Ok(EscapeInfo::NonEscaping { iterations: k, overflow: true });
        }
    }
    Ok(EscapeInfo::NonEscaping { iterations: cfg.max_iter, overflow: false })
}

/// `|ν_H(w)|` for `w ∈ Δ` at a step of `10⁻⁴` times the local cell size;
/// `None` where the discrete Jacobian degenerates.
pub fn interior_nu(ext: &ExtensionH, w: Complex64) -> Option<f64> {
    beltrami(ext, w, 1e-4 * ext.local_scale(w)).map(|mu| mu.norm())
}

/// `|ν(z)|`: the interior modulus for `z ∈ Δ`, its pullback along the first
/// entry for exterior `z`, and 0 off the pullback set.
pub fn nu_magnitude(
    model: &ConformalModel,
    ext: &ExtensionH,
    z: Complex64,
    cfg: &EscapeConfig,
) -> Result<f64, EscapeError> {
    if z.norm() < 1.0 {
        return Ok(interior_nu(ext, z).unwrap_or(0.0));
    }
    match first_entry(model, ext, z, cfg)? {
        EscapeInfo::Escaping { landing, .. } => Ok(interior_nu(ext, landing).unwrap_or(0.0)),
        EscapeInfo::NonEscaping { .. } => Ok(0.0),
    }
}

/// `|μ(z)| = |ν(z²)|`.
pub fn mu_magnitude(
    model: &ConformalModel,
    ext: &ExtensionH,
    z: Complex64,
    cfg: &EscapeConfig,
) -> Result<f64, EscapeError> {
    nu_magnitude(model, ext, z * z, cfg)
}

/// Per-pixel classes over a two-chart atlas. Codes: level `n ≥ 0`, [`CORE`],
/// [`NON_ESCAPING`], [`INTERIOR`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeGrid {
    pub atlas: Atlas,
    pub config: EscapeConfig,
    /// `|ν|` at each pixel, 0 where undefined.
    pub nu: [Vec<f64>; 2],
}

pub const CORE: f64 = -1.0;
pub const NON_ESCAPING: f64 = -2.0;
pub const INTERIOR: f64 = -3.0;

impl EscapeGrid {
    /// Classifies every weighted pixel of an atlas with plane radius `radius`.
    pub fn sample(
        model: &ConformalModel,
        ext: &ExtensionH,
        radius: f64,
        resolution: usize,
        cfg: &EscapeConfig,
    ) -> Result<Self, EscapeError> {
        let mut atlas = Atlas::new(radius, resolution);
        let mut nu = [vec![0.0; resolution * resolution], vec![0.0; resolution * resolution]];
        for (field, nu) in atlas.charts.iter_mut().zip(nu.iter_mut()) {
            for idx in 0..field.len() {
                if field.weights[idx] == 0.0 {
                    continue;
                }
                let z = field.point(idx);
                if !(z.norm() > 1.0) {
                    field.values[idx] = INTERIOR;
                    continue;
                }
                field.values[idx] = match first_entry(model, ext, z, cfg)? {
                    EscapeInfo::Escaping { landing, level, .. } => {
                        nu[idx] = interior_nu(ext, landing).unwrap_or(0.0);
                        match level {
                            Landing::Level(n) => n as f64,
                            Landing::Core => CORE,
                        }
                    }
                    EscapeInfo::NonEscaping { .. } => NON_ESCAPING,
                };
            }
        }
        Ok(EscapeGrid { atlas, config: *cfg, nu })
    }

    /// Spherical area and pixel count of `X_n`.
    pub fn level_area(&self, n: usize) -> (f64, usize) {
        self.atlas.area_where(|v| v == n as f64)
    }

    /// Spherical area of all exterior points that enter `Δ`.
    pub fn escaping_area(&self) -> (f64, usize) {
        self.atlas.area_where(|v| v >= 0.0 || v == CORE)
    }

    /// Fraction of plane-chart exterior pixels that enter `Δ`.
    pub fn escaping_fraction(&self) -> f64 {
        let f = &self.atlas.charts[0];
        let ext = f.values.iter().zip(&f.weights).filter(|(v, w)| **w > 0.0 && **v != INTERIOR);
        let (mut all, mut esc) = (0usize, 0usize);
        for (v, _) in ext {
            all += 1;
            if *v >= 0.0 || *v == CORE {
                esc += 1;
            }
        }
        if all == 0 { 0.0 } else { esc as f64 / all as f64 }
    }

    /// The `|ν|` samples as grid fields, for the David fit.
    pub fn nu_fields(&self) -> [GridField; 2] {
        let mut out = self.atlas.charts.clone();
        for (f, nu) in out.iter_mut().zip(&self.nu) {
            f.values.clone_from(nu);
        }
        out
    }
}

/// Samples `|μ(z)| = |ν(z²)|` over an atlas; interior pixels use `H` directly.
pub fn mu_field(
    model: &ConformalModel,
    ext: &ExtensionH,
    radius: f64,
    resolution: usize,
    cfg: &EscapeConfig,
) -> Result<Atlas, EscapeError> {
    let mut atlas = Atlas::new(radius, resolution);
    for field in atlas.charts.iter_mut() {
        for idx in 0..field.len() {
            if field.weights[idx] == 0.0 {
                continue;
            }
            let z = field.point(idx);
            let w = z * z;
            if (w.norm() - 1.0).abs() < 1e-12 {
                continue;
            }
            field.values[idx] = mu_magnitude(model, ext, z, cfg)?;
        }
    }
    Ok(atlas)
}

/// `log y ≈ log c + n log rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub c: f64,
    pub rate: f64,
    pub r_squared: f64,
}

impl GeometricFit {
    pub fn from_points(points: &[(usize, f64)]) -> Option<Self> {
        let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(n, a)| (n as f64, a.ln())).collect();
        if pts.len() < 2 {
            return None;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
        Some(GeometricFit { c: intercept.exp(), rate: slope.exp(), r_squared })
    }

    pub fn at(&self, n: usize) -> f64 {
        self.c * self.rate.powi(n as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    pub pixels: usize,
    pub area: f64,
    /// Enough pixels to enter the fit.
    pub resolved: bool,
}

/// One instance of `area(X_{n+2}) ≤ C ε^n + δ area(X_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionRow {
    pub level: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDecayReport {
    pub rows: Vec<LevelRow>,
    pub fit: GeometricFit,
    pub delta_fit: f64,
    pub strictly_decreasing: bool,
    pub recursion: Vec<RecursionRow>,
    pub recursion_holds: bool,
    pub escaping_fraction: f64,
    pub max_iter: usize,
}

/// Tabulates `area(X_n)` for `n` in `levels`, fits `C δ^n` over the resolved
/// levels and tests the two-step recursion with `δ²` and the enclosure bound
/// `z_bound(n)` for the `C ε^n` term.
pub fn area_decay_experiment(
    grid: &EscapeGrid,
    levels: std::ops::RangeInclusive<usize>,
    z_bound: impl Fn(usize) -> f64,
) -> Result<AreaDecayReport, EscapeError> {
    let rows: Vec<LevelRow> = levels
        .map(|n| {
            let (area, pixels) = grid.level_area(n);
            LevelRow { level: n, pixels, area, resolved: pixels >= MIN_LEVEL_PIXELS }
        })
        .collect();
    let used: Vec<(usize, f64)> = rows.iter().filter(|r| r.resolved).map(|r| (r.level, r.area)).collect();
    if used.len() < 3 {
        return Err(EscapeError::InsufficientSamples { resolved: used.len() });
    }
    let fit = GeometricFit::from_points(&used).ok_or(EscapeError::InsufficientSamples { resolved: used.len() })?;
    let strictly_decreasing = used.windows(2).all(|w| w[1].1 < w[0].1);
    let delta2 = fit.rate * fit.rate;
    let recursion: Vec<RecursionRow> = used
        .iter()
        .filter_map(|&(n, a)| {
            let next = used.iter().find(|p| p.0 == n + 2)?;
            let rhs = z_bound(n) + delta2 * a;
            Some(RecursionRow { level: n, lhs: next.1, rhs, holds: next.1 <= rhs })
        })
        .collect();
    let recursion_holds = recursion.iter().all(|r| r.holds);
    Ok(AreaDecayReport {
        rows,
        fit,
        delta_fit: fit.rate,
        strictly_decreasing,
        recursion,
        recursion_holds,
        escaping_fraction: grid.escaping_fraction(),
        max_iter: grid.config.max_iter,
    })
}

/// Which family of `Z_n` constituents a region encloses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnclosureKind {
    /// `H_α(I^i_{n+1})`, `0 ≤ i ≤ q_n`.
    Return,
    /// `H_α([x_i, x_{i−q_{n+1}}])`, `0 ≤ i ≤ q_{n+1}`.
    Straddle,
    /// `H_β([x_{q_n+i}, x_{i−q_{n+1}}])`, `0 ≤ i < q_{n+1}`.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub kind: EnclosureKind,
    pub index: usize,
    pub region: HyperbolicNbhd,
    pub exterior_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZEnclosure {
    pub level: usize,
    pub alpha: f64,
    pub beta: f64,
    pub regions: Vec<Enclosure>,
    /// Sum of the exterior spherical areas: an upper bound for the union.
    pub area_bound: f64,
}

impl ZEnclosure {
    /// Spherical area of the union outside `Δ̄`, by pixel counting.
    pub fn union_area(&self, field: &GridField) -> f64 {
        (0..field.len())
            .filter(|&i| field.weights[i] > 0.0)
            .filter(|&i| {
                let z = field.point(i);
                z.norm() > 1.0 && self.regions.iter().any(|e| e.region.contains(z))
            })
            .map(|i| field.weights[i])
            .sum()
    }
}

fn nbhd(table: &OrbitTable, a: i64, b: i64, angle: f64) -> Result<HyperbolicNbhd, MeasureError> {
    let (xa, xb) = (table.x(a), table.x(b));
    let gap = signed_gap(xa, xb);
    let (start, length) = if gap >= 0.0 { (xa, gap) } else { (xb, -gap) };
    HyperbolicNbhd::new(start, length, angle)
}

/// The enclosures of the constituents of `Z_n` from the orbit table of
/// `g_θ|𝕋`, with angles `0 < β < α < π/3`.
pub fn z_set_enclosure(table: &OrbitTable, n: usize, alpha: f64, beta: f64) -> Result<ZEnclosure, EscapeError> {
    if !(beta < alpha) {
        return Err(MeasureError::AngleOrder { alpha, beta }.into());
    }
    if !(beta > 0.0 && alpha < std::f64::consts::FRAC_PI_3) {
        return Err(MeasureError::AngleOutOfRange(if beta > 0.0 { alpha } else { beta }).into());
    }
    if n > table.level {
        return Err(EscapeError::LevelBeyondTable { level: n, have: table.level });
    }
    let qn = table.q(n) as i64;
    let qn1 = table.q(n + 1) as i64;
    let mut regions = Vec::new();
    let mut push = |kind, index: i64, a: i64, b: i64, angle| -> Result<(), MeasureError> {
        let region = nbhd(table, a, b, angle)?;
        regions.push(Enclosure { kind, index: index as usize, region, exterior_area: region.exterior_spherical_area() });
        Ok(())
    };
    for i in 0..=qn {
        push(EnclosureKind::Return, i, i, i + qn1, alpha)?;
    }
    for i in 0..=qn1 {
        push(EnclosureKind::Straddle, i, i, i - qn1, alpha)?;
    }
    for i in 0..qn1 {
        push(EnclosureKind::Gap, i, qn + i, i - qn1, beta)?;
    }
    let area_bound = regions.iter().map(|e| e.exterior_area).sum();
    Ok(ZEnclosure { level: n, alpha, beta, regions, area_bound })
}
