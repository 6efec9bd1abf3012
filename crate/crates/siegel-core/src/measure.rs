//! Spherical area on pixel grids, David-condition fitting, hyperbolic
//! neighbourhoods of arcs of 𝕋, and the square-root pullback estimate.
//!
//! The spherical element is `dA = dx dy / (1 + |z|²)²`, for which the whole
//! sphere has area `π` and the unit disk `π/2`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("need at least {need} epsilon values, got {got}")]
    TooFewEpsilons { need: usize, got: usize },
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("no sample exceeds 1 − ε₀")]
    AllBelowThreshold,
    #[error("only {used} thresholds are resolved by the grid (need 3)")]
    Underresolved { used: usize },
    #[error("inner angle {beta} must be below outer angle {alpha}")]
    AngleOrder { alpha: f64, beta: f64 },
    #[error("angle {0} outside (0, π)")]
    AngleOutOfRange(f64),
}

/// `z`-plane chart, or the chart `ζ = 1/z` around infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Chart {
    Plane,
    Inverted,
}

impl Chart {
    pub fn id(self) -> u8 {
        match self {
            Chart::Plane => 0,
            Chart::Inverted => 1,
        }
    }
}

/// Scalar samples at the pixel centres of the square `[−w, w]²` of a chart.
/// Pixels outside the chart's disk of validity carry weight 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridField {
    pub chart: Chart,
    pub half_width: f64,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GridField {
    /// A zero field whose weights cover `|coord| ≤ cutoff` (plane) or
    /// `|coord| < cutoff` (inverted).
    pub fn new(chart: Chart, half_width: f64, cutoff: f64, resolution: usize) -> Self {
        let mut field = GridField {
            chart,
            half_width,
            resolution,
            values: alloc::vec![0.0; resolution * resolution],
            weights: Vec::with_capacity(resolution * resolution),
        };
        let h = field.pixel_size();
        for idx in 0..resolution * resolution {
            let c = field.coord(idx);
            let r = c.norm();
            let inside = match chart {
                Chart::Plane => r <= cutoff,
                Chart::Inverted => r < cutoff,
            };
            let w = if inside { h * h / (1.0 + r * r).powi(2) } else { 0.0 };
            field.weights.push(w);
        }
        field
    }

    pub fn pixel_size(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// Chart coordinate of the centre of pixel `idx` (row-major, row 0 at the
    /// bottom).
    pub fn coord(&self, idx: usize) -> Complex64 {
        let h = self.pixel_size();
        let (row, col) = (idx / self.resolution, idx % self.resolution);
        Complex64::new(-self.half_width + (col as f64 + 0.5) * h, -self.half_width + (row as f64 + 0.5) * h)
    }

    /// The point of the sphere at pixel `idx`, in the `z`-plane.
    pub fn point(&self, idx: usize) -> Complex64 {
        let c = self.coord(idx);
        match self.chart {
            Chart::Plane => c,
            Chart::Inverted => c.inv(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spherical area of the pixels satisfying `pred(value)`.
    pub fn area_where(&self, pred: impl Fn(f64) -> bool) -> (f64, usize) {
        let mut area = 0.0;
        let mut count = 0;
        for (v, w) in self.values.iter().zip(&self.weights) {
            if *w > 0.0 && pred(*v) {
                area += w;
                count += 1;
            }
        }
        (area, count)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Two-chart cover of the sphere: `|z| ≤ R` and `|1/z| < 1/R`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atlas {
    pub radius: f64,
    pub charts: [GridField; 2],
}

impl Atlas {
    pub fn new(radius: f64, resolution: usize) -> Self {
        let plane = GridField::new(Chart::Plane, radius, radius, resolution);
        let inverted = GridField::new(Chart::Inverted, 1.0 / radius, 1.0 / radius, resolution);
        Atlas { radius, charts: [plane, inverted] }
    }

    pub fn total_weight(&self) -> f64 {
        self.charts.iter().map(GridField::total_weight).sum()
    }

    pub fn area_where(&self, pred: impl Fn(f64) -> bool + Copy) -> (f64, usize) {
        self.charts.iter().map(|f| f.area_where(pred)).fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    }

    /// Fills every weighted pixel with `f(z)`.
    pub fn fill(&mut self, f: impl Fn(Complex64) -> f64) {
        for field in &mut self.charts {
            for idx in 0..field.len() {
                if field.weights[idx] > 0.0 {
                    field.values[idx] = f(field.point(idx));
                }
            }
        }
    }
}

/// Assigns values so that `area{value > 1 − ε}` equals `area_of(ε)` up to one
/// pixel, for every `ε` in the range of `eps_of`. Pixels are ordered by
/// `|z|`; pixel `k` gets `1 − eps_of(W_k)` where `W_k` is the cumulative
/// weight through `k`, or 0 when `eps_of` returns `None`.
pub fn radial_sublevel_field(fields: &mut [GridField], eps_of: impl Fn(f64) -> Option<f64>) {
    let mut order: Vec<(f64, usize, usize)> = Vec::new();
    for (c, f) in fields.iter().enumerate() {
        for idx in 0..f.len() {
            if f.weights[idx] > 0.0 {
                order.push((f.point(idx).norm(), c, idx));
            }
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut cum = 0.0;
    for (_, c, idx) in order {
        cum += fields[c].weights[idx];
        fields[c].values[idx] = match eps_of(cum) {
            Some(e) if e > 0.0 && e < 1.0 => 1.0 - e,
            _ => 0.0,
        };
    }
}

/// Default upper end `ε₀` of the threshold range.
pub const EPSILON_MAX: f64 = 0.5;

/// Thresholds resolved by fewer pixels are left out of the fit.
pub const MIN_PIXELS: usize = 20;

/// `count` log-spaced values in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DavidPoint {
    pub epsilon: f64,
    pub area: f64,
    pub pixels: usize,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DavidFit {
    pub points: Vec<DavidPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `−slope`, the exponent in `area ≤ M e^{−α/ε}`.
    pub alpha_fit: f64,
    pub m_fit: f64,
    /// Quadratic coefficient of the fit in `1/ε`, scaled by the squared
    /// span over the spread of `log area`.
    pub curvature: f64,
    pub curvature_flag: bool,
    pub pass: bool,
}

/// Curvature above this marks a law that bends away from exponential.
pub const CURVATURE_LIMIT: f64 = 0.05;

/// Fits `log area{|μ| > 1 − ε}` against `1/ε`. The fit passes when the slope
/// is negative, `R² > 0.9`, and no upward curvature is detected.
pub fn david_condition_fit(fields: &[&GridField], epsilons: &[f64]) -> Result<DavidFit, MeasureError> {
    if epsilons.len() < 5 {
        return Err(MeasureError::TooFewEpsilons { need: 5, got: epsilons.len() });
    }
    if let Some(&e) = epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(MeasureError::EpsilonOutOfRange(e));
    }
    let eps0 = epsilons.iter().copied().fold(0.0, Float::max);
    let area_at = |e: f64| {
        fields
            .iter()
            .map(|f| f.area_where(|v| v > 1.0 - e))
            .fold((0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    if area_at(eps0).1 == 0 {
        return Err(MeasureError::AllBelowThreshold);
    }
    let points: Vec<DavidPoint> = epsilons
        .iter()
        .map(|&epsilon| {
            let (area, pixels) = area_at(epsilon);
            DavidPoint { epsilon, area, pixels, used: pixels >= MIN_PIXELS }
        })
        .collect();
    let xs: Vec<f64> = points.iter().filter(|p| p.used).map(|p| 1.0 / p.epsilon).collect();
    let ys: Vec<f64> = points.iter().filter(|p| p.used).map(|p| p.area.ln()).collect();
    if xs.len() < 3 {
        return Err(MeasureError::Underresolved { used: xs.len() });
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    let c2 = quadratic_coefficient(&xs, &ys);
    let span = xs.iter().copied().fold(f64::NEG_INFINITY, Float::max) - xs.iter().copied().fold(f64::INFINITY, Float::min);
    let spread = ys.iter().copied().fold(f64::NEG_INFINITY, Float::max) - ys.iter().copied().fold(f64::INFINITY, Float::min);
    let curvature = if spread > 0.0 { c2 * span * span / spread } else { 0.0 };
    let curvature_flag = curvature > CURVATURE_LIMIT;
    let pass = slope < 0.0 && r_squared > 0.9 && !curvature_flag;
    Ok(DavidFit {
        points,
        slope,
        intercept,
        r_squared,
        alpha_fit: -slope,
        m_fit: intercept.exp(),
        curvature,
        curvature_flag,
        pass,
    })
}

/// Least-squares line `y = a x + b`, returning `(a, b, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}

/// Coefficient of `x²` in the least-squares quadratic through the points.
fn quadratic_coefficient(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    // Centre x for conditioning; normal equations on (1, t, t²).
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for (x, y) in xs.iter().zip(ys) {
        let t = x - mx;
        let mut p = 1.0;
        for k in 0..5 {
            s[k] += p;
            if k < 3 {
                r[k] += p * y;
            }
            p *= t;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 {
        return 0.0;
    }
    let mut m2 = m;
    for (row, rhs) in m2.iter_mut().zip(r) {
        row[2] = rhs;
    }
    det(m2) / d
}

/// `H_α(I)`: the points seen from the arc `I` under angle `> α`, the region
/// between the two circular arcs through the endpoints of `I` meeting 𝕋 at
/// exterior angle `α`. Small angles give fat regions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperbolicNbhd {
    /// Counter-clockwise arc from `start` of the given `length`, both in turns.
    pub start: f64,
    pub length: f64,
    pub angle: f64,
}

/// A circular arc from `from` to `to` on the circle `center + radius·e^{iφ}`,
/// sweeping the signed angle `sweep` from `phi0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleArc {
    pub center: Complex64,
    pub radius: f64,
    pub phi0: f64,
    pub sweep: f64,
}

impl CircleArc {
    pub fn at(&self, s: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, self.phi0 + s * self.sweep)
    }

    /// `½∮ (x dy − y dx)` along the arc, in closed form.
    pub fn green_euclidean(&self) -> f64 {
        let (c, rho) = (self.center, self.radius);
        let e0 = Complex64::from_polar(1.0, self.phi0);
        let e1 = Complex64::from_polar(1.0, self.phi0 + self.sweep);
        let cross = (c.conj() * (e1 - e0) / Complex64::new(0.0, 1.0)).re;
        0.5 * (rho * rho * self.sweep + rho * cross)
    }

    /// `∮ F(|z|) d(arg z)` with `F(ρ) = ρ²/(2(1 + ρ²))`, the spherical
    /// counterpart of [`Self::green_euclidean`], by composite Simpson.
    pub fn green_spherical(&self, panels: usize) -> f64 {
        let n = panels + panels % 2;
        let f = |s: f64| {
            let z = self.at(s);
            let dz = Complex64::new(0.0, self.radius * self.sweep) * Complex64::from_polar(1.0, self.phi0 + s * self.sweep);
            // F(|z|) d(arg z) = F(|z|) Im(dz / z)
            let r2 = z.norm_sqr();
            if r2 == 0.0 {
                return 0.0;
            }
            let big_f = r2 / (2.0 * (1.0 + r2));
            big_f * (dz / z).im
        };
        let h = 1.0 / n as f64;
        let mut sum = f(0.0) + f(1.0);
        for k in 1..n {
            sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let tau = 2.0 * PI;
    let r = x - tau * Float::floor(x / tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

fn circle_through(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, f64) {
    let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
    let (a2, b2, c2) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr());
    let ux = (a2 * (b.im - c.im) + b2 * (c.im - a.im) + c2 * (a.im - b.im)) / d;
    let uy = (a2 * (c.re - b.re) + b2 * (a.re - c.re) + c2 * (b.re - a.re)) / d;
    let center = Complex64::new(ux, uy);
    (center, (a - center).norm())
}

/// Arc of the circle through `a`, `mid`, `b`, traversed from `a` via `mid`.
fn arc_via(a: Complex64, mid: Complex64, b: Complex64) -> CircleArc {
    let (center, radius) = circle_through(a, mid, b);
    let ang = |p: Complex64| (p - center).arg();
    let (pa, pm, pb) = (ang(a), ang(mid), ang(b));
    let ccw = |from: f64, to: f64| wrap_angle(to - from);
    let sweep = if ccw(pa, pm) <= ccw(pa, pb) { ccw(pa, pb) } else { -(2.0 * PI - ccw(pa, pb)) };
    CircleArc { center, radius, phi0: pa, sweep }
}

impl HyperbolicNbhd {
    pub fn new(start: f64, length: f64, angle: f64) -> Result<Self, MeasureError> {
        if !(angle > 0.0 && angle < PI) {
            return Err(MeasureError::AngleOutOfRange(angle));
        }
        Ok(HyperbolicNbhd { start, length, angle })
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (
            Complex64::from_polar(1.0, 2.0 * PI * self.start),
            Complex64::from_polar(1.0, 2.0 * PI * (self.start + self.length)),
        )
    }

    pub fn midpoint(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * (self.start + 0.5 * self.length))
    }

    fn mobius(&self, z: Complex64) -> Complex64 {
        let (a, b) = self.endpoints();
        (z - a) / (z - b)
    }

    fn axis(&self) -> Complex64 {
        let d = self.mobius(self.midpoint());
        d / d.norm()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let w = self.mobius(z);
        if !w.is_finite() {
            return false;
        }
        if w.norm() == 0.0 {
            return false;
        }
        (w / self.axis()).arg().abs() < PI - self.angle
    }

    /// Whether the region contains `∞`.
    pub fn contains_infinity(&self) -> bool {
        (Complex64::new(1.0, 0.0) / self.axis()).arg().abs() < PI - self.angle
    }

    /// The two boundary arcs, oriented so that together they run once around
    /// the bounded component counter-clockwise or clockwise.
    pub fn boundary(&self) -> [CircleArc; 2] {
        let (a, b) = self.endpoints();
        let d = self.axis();
        let inv = |w: Complex64| (b * w - a) / (w - 1.0);
        let half = PI - self.angle;
        let p_plus = inv(d * Complex64::from_polar(1.0, half));
        let p_minus = inv(d * Complex64::from_polar(1.0, -half));
        [arc_via(a, p_plus, b), arc_via(b, p_minus, a)]
    }

    /// Euclidean area of the region from the circular-segment formula;
    /// infinite when the region contains `∞`.
    pub fn euclidean_area(&self) -> f64 {
        if self.contains_infinity() {
            return f64::INFINITY;
        }
        let [c1, c2] = self.boundary();
        (c1.green_euclidean() + c2.green_euclidean()).abs()
    }

    /// Spherical area by integrating the boundary.
    pub fn spherical_area(&self) -> f64 {
        let [c1, c2] = self.boundary();
        let bounded = (c1.green_spherical(2048) + c2.green_spherical(2048)).abs();
        if self.contains_infinity() {
            PI - bounded
        } else {
            bounded
        }
    }

    /// Spherical area outside the closed unit disk: half the total, by the
    /// symmetry `z ↦ 1/z̄`.
    pub fn exterior_spherical_area(&self) -> f64 {
        0.5 * self.spherical_area()
    }
}

/// `∫_{Φ⁻¹(E)} dA` for `Φ(z) = z²`, as a weighted sum over `E`: the pullback
/// density is `1/(2|z|(1 + |z|)²)` per unit Euclidean area in either chart.
pub fn sqrt_pullback_area(fields: &[&GridField], indicator: impl Fn(usize, usize) -> bool) -> f64 {
    let mut total = 0.0;
    for (c, f) in fields.iter().enumerate() {
        let h = f.pixel_size();
        for idx in 0..f.len() {
            if f.weights[idx] > 0.0 && indicator(c, idx) {
                let r = f.coord(idx).norm();
                total += h * h / (2.0 * r * (1.0 + r) * (1.0 + r));
            }
        }
    }
    total
}

/// `area(Φ⁻¹(E)) / area(E)^{1/2}`; 0 for empty `E`.
pub fn sqrt_area_pullback_check(fields: &[&GridField], indicator: impl Fn(usize, usize) -> bool + Copy) -> f64 {
    let area: f64 = fields
        .iter()
        .enumerate()
        .map(|(c, f)| (0..f.len()).filter(|&i| indicator(c, i)).map(|i| f.weights[i]).sum::<f64>())
        .sum();
    if area == 0.0 {
        return 0.0;
    }
    sqrt_pullback_area(fields, indicator) / area.sqrt()
}
