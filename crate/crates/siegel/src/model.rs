//! The model map. `D` is the component of `sin⁻¹(Δ)` containing 0, `ψ` the
//! exterior Riemann map of `D` with `ψ(1) = π/2`, and `G = sin ∘ ψ` outside
//! the unit disk, extended by reflection inside. The boundary correspondence
//! is written `G(e^{iφ}) = e^{iγ(φ)}` with
//!
//! `γ(φ) = φ + Σ_{j=1}^{J} β_j sin(2jφ)`,
//!
//! which keeps `G` odd and `|G| = 1` on 𝕋 by construction. The `β_j` are
//! chosen so that `arcsin(e^{iγ})` has no positive Fourier modes beyond the
//! first, i.e. extends holomorphically to `|w| > 1` with a simple pole at ∞.
//!
//! `G_θ = e^{2πit} G` and `g_θ(z) = G_θ(√z)²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use siegel_core::arithmetic::{ArithmeticError, ContinuedFraction};
use siegel_core::circle::{self, CircleError, CircleMap, OrbitTable, RotationEstimate};

const TAU: f64 = 2.0 * PI;

/// Radius beyond which `G` is evaluated as `sin ∘ ψ`.
pub const OUTER_SPLIT: f64 = 1.5;

/// Default fit degree: the number of constrained Fourier modes, `2J`.
pub const DEFAULT_DEGREE: usize = 48;

/// Smallest accepted fit degree.
pub const MIN_DEGREE: usize = 2;

/// Default sample count on 𝕋 for the fit.
pub const DEFAULT_GRID: usize = 1 << 15;

/// Default residual tolerance of the fit.
pub const DEFAULT_FIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("continuation of sin⁻¹ broke down near s = {s}")]
    ContinuationBreak { s: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("degree {0} is below the minimum {MIN_DEGREE}")]
    DegreeTooSmall(usize),
    #[error("fit residual {residual:e} exceeds tolerance {tol:e}")]
    FitDiverged { residual: f64, tol: f64 },
    #[error("z = 0 is not in the domain")]
    OriginPole,
    #[error("ρ(0) = {low} and ρ(1) = {high} do not straddle θ = {theta}")]
    BracketFailure { low: f64, high: f64, theta: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no V-component lies inside the chosen U-component")]
    ComponentMismatch,
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error(transparent)]
    Circle(#[from] CircleError),
}

/// Which curve a [`DomainD`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// The component of `sin⁻¹(Δ)` through 0, via the principal `arcsin`.
    SineComponent,
    /// The disk `|z| < radius`.
    Circle { radius: f64 },
}

/// The boundary of `D` as a closed polyline, plus an exact evaluator of the
/// boundary point over `e^{iγ} ∈ 𝕋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainD {
    pub kind: DomainKind,
    /// Orientation flag; a reversed domain is a negative control for the fit.
    pub reversed: bool,
    /// `boundary[k]` lies over `e^{2πik/M}`.
    pub boundary: Vec<Complex64>,
    /// Indices of `π/2` and `−π/2` on the polyline.
    pub critical_markers: [usize; 2],
}

impl DomainD {
    pub fn disk(radius: f64, m: usize) -> Self {
        let boundary = (0..m).map(|k| Complex64::from_polar(radius, TAU * k as f64 / m as f64)).collect();
        DomainD { kind: DomainKind::Circle { radius }, reversed: false, boundary, critical_markers: [0, m / 2] }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self.boundary[1..].reverse();
        self
    }

    /// The boundary point of `D` over `z ∈ 𝕋`.
    pub fn point_over(&self, z: Complex64) -> Complex64 {
        let z = if self.reversed { z.conj() } else { z };
        match self.kind {
            DomainKind::SineComponent => z.asin(),
            DomainKind::Circle { radius } => z * radius,
        }
    }

    fn point_derivative(&self, z: Complex64, b: Complex64) -> Complex64 {
        // d/dγ of point_over(e^{iγ}).
        let i = Complex64::new(0.0, 1.0);
        match (self.kind, self.reversed) {
            (DomainKind::SineComponent, false) => i * z / b.cos(),
            (DomainKind::SineComponent, true) => -i * z.conj() / b.cos(),
            (DomainKind::Circle { radius }, false) => i * z * radius,
            (DomainKind::Circle { radius }, true) => -i * z.conj() * radius,
        }
    }

    pub fn arc_length(&self) -> f64 {
        let n = self.boundary.len();
        (0..n).map(|k| (self.boundary[(k + 1) % n] - self.boundary[k]).norm()).sum()
    }

    /// Largest `||sin z| − 1|` over the samples.
    pub fn sine_defect(&self) -> f64 {
        self.boundary.iter().map(|z| (z.sin().norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Whether non-adjacent edges of the polyline are disjoint.
    pub fn is_simple(&self) -> bool {
        let n = self.boundary.len();
        let p = &self.boundary;
        let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
        for i in 0..n {
            let (a, b) = (p[i], p[(i + 1) % n]);
            let (xa0, xa1) = (a.re.min(b.re), a.re.max(b.re));
            let (ya0, ya1) = (a.im.min(b.im), a.im.max(b.im));
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (p[j], p[(j + 1) % n]);
                if c.re.max(d.re) < xa0 || c.re.min(d.re) > xa1 || c.im.max(d.im) < ya0 || c.im.min(d.im) > ya1 {
                    continue;
                }
                let d1 = cross(a, b, c);
                let d2 = cross(a, b, d);
                let d3 = cross(c, d, a);
                let d4 = cross(c, d, b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// One Newton solve of `sin w = z` from `w`.
fn newton_asin(mut w: Complex64, z: Complex64) -> Option<Complex64> {
    for _ in 0..40 {
        let f = w.sin() - z;
        if f.norm() < 1e-14 {
            return Some(w);
        }
        let d = w.cos();
        if d.norm() == 0.0 {
            return None;
        }
        let step = f / d;
        w -= step;
        if step.norm() < 1e-16 * (1.0 + w.norm()) {
            return ((w.sin() - z).norm() < 1e-12).then_some(w);
        }
    }
    ((w.sin() - z).norm() < 1e-12).then_some(w)
}

/// Continues `w(s)` with `sin w(s) = z(s)` from `(s0, w0)` to `s1`, keeping
/// steps below a quarter of the distance from `z` to the critical values.
fn continue_asin(
    z: impl Fn(f64) -> Complex64,
    s0: f64,
    w0: Complex64,
    s1: f64,
    dz_ds: f64,
) -> Result<Complex64, ModelError> {
    let mut s = s0;
    let mut w = w0;
    while s != s1 {
        let zc = z(s);
        let dist = (zc - 1.0).norm().min((zc + 1.0).norm());
        let mut step = (0.25 * dist / dz_ds).max(1e-300);
        let mut halvings = 0;
        loop {
            let next = if (s1 - s).abs() <= step { s1 } else { s + step * (s1 - s).signum() };
            let zn = z(next);
            let guess = w + (zn - zc) / w.cos();
            if let Some(wn) = newton_asin(guess, zn).filter(|wn| (wn - w).norm() < 0.5) {
                s = next;
                w = wn;
                break;
            }
            halvings += 1;
            if halvings > 20 {
                return Err(ModelError::ContinuationBreak { s: next });
            }
            step *= 0.5;
        }
    }
    Ok(w)
}

/// Traces `∂D` over `e^{2πis}` by continuing the inverse branch of `sin`
/// through `sin(i·asinh 1) = i`, sampled at `s = k/M`.
pub fn trace_domain_d(m: usize) -> Result<DomainD, ModelError> {
    if m < 256 {
        return Err(ModelError::TooFewSamples { min: 256, got: m });
    }
    if m % 2 != 0 {
        return Err(ModelError::Precondition("sample count must be even".into()));
    }
    let z = |s: f64| Complex64::from_polar(1.0, TAU * s);
    let start = Complex64::new(0.0, 1.0f64.asinh());
    let half = m / 2;
    let mut boundary = vec![Complex64::new(0.0, 0.0); m];
    // Outward from s = 1/4 in both directions over [0, 1/2].
    let k0 = (m as f64 / 4.0).floor() as usize;
    let mut w = continue_asin(z, 0.25, start, k0 as f64 / m as f64, TAU)?;
    boundary[k0] = w;
    for k in (1..k0).rev() {
        w = continue_asin(z, (k + 1) as f64 / m as f64, w, k as f64 / m as f64, TAU)?;
        boundary[k] = w;
    }
    w = boundary[k0];
    for k in k0 + 1..half {
        w = continue_asin(z, (k - 1) as f64 / m as f64, w, k as f64 / m as f64, TAU)?;
        boundary[k] = w;
    }
    boundary[0] = Complex64::new(PI / 2.0, 0.0);
    boundary[half] = Complex64::new(-PI / 2.0, 0.0);
    for k in half + 1..m {
        boundary[k] = -boundary[k - half];
    }
    Ok(DomainD { kind: DomainKind::SineComponent, reversed: false, boundary, critical_markers: [0, half] })
}

/// Sums `Σ_{j=1}^{n} a_j sin(jx)` and `Σ a_j cos(jx)` by Clenshaw's recurrence.
fn clenshaw(a: &[f64], x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let two_c = 2.0 * c;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ak in a.iter().rev() {
        let b0 = ak + two_c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    (b1 * s, b1 * c - b2)
}

/// The fitted exterior map and boundary correspondence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorRiemannMap {
    /// Number of constrained odd modes `3, 5, …, 2·degree + 1`.
    pub degree: usize,
    /// `β_1..β_J` with `J = degree/2`.
    pub beta: Vec<f64>,
    pub grid: usize,
    /// `Σ |B̂_k|` over odd `3 ≤ k < M/4`, `B = ψ|𝕋`.
    pub fit_residual: f64,
    pub iterations: usize,
    /// `min γ'` on the grid.
    pub min_derivative: f64,
    /// `ψ(w) = c·w + Σ_m c_{2m+1} w^{−(2m+1)}`.
    pub c: Complex64,
    /// `coeffs[m]` multiplies `w^{−(2m+1)}`.
    pub coeffs: Vec<Complex64>,
    /// `2jβ_j`, cached for `γ'`.
    #[serde(skip)]
    dbeta: Vec<f64>,
}

impl ExteriorRiemannMap {
    fn from_parts(degree: usize, beta: Vec<f64>, grid: usize, iterations: usize) -> Self {
        let dbeta = beta.iter().enumerate().map(|(j, b)| 2.0 * (j + 1) as f64 * b).collect();
        ExteriorRiemannMap {
            degree,
            beta,
            grid,
            fit_residual: 0.0,
            iterations,
            min_derivative: 0.0,
            c: Complex64::new(0.0, 0.0),
            coeffs: Vec::new(),
            dbeta,
        }
    }

    /// Restores cached data after deserialization.
    pub fn rehydrate(&mut self) {
        self.dbeta = self.beta.iter().enumerate().map(|(j, b)| 2.0 * (j + 1) as f64 * b).collect();
    }

    pub fn gamma(&self, phi: f64) -> f64 {
        phi + clenshaw(&self.beta, 2.0 * phi).0
    }

    pub fn gamma_derivative(&self, phi: f64) -> f64 {
        1.0 + clenshaw(&self.dbeta, 2.0 * phi).1
    }

    /// `ψ(w)` for `|w| ≥ 1` from the stored series.
    pub fn psi(&self, w: Complex64) -> Complex64 {
        let r = w.norm();
        let u = (w * w).inv();
        let terms = if r > 1.0 {
            let need = (40.0 / (2.0 * r.ln())).ceil();
            if need.is_finite() { (need as usize).min(self.coeffs.len()) } else { self.coeffs.len() }
        } else {
            self.coeffs.len()
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs[..terms].iter().rev() {
            acc = acc * u + a;
        }
        self.c * w + acc / w
    }

    /// `G(w) = w·exp(½ Σ β_j (w^{2j} − w^{−2j}))`, the holomorphic extension
    /// of `e^{iγ}` off 𝕋.
    pub fn g_closed_form(&self, w: Complex64) -> Complex64 {
        let v = w * w;
        let vi = v.inv();
        let (mut p, mut q) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &b in self.beta.iter().rev() {
            p = (p + b) * v;
            q = (q + b) * vi;
        }
        w * ((p - q) * 0.5).exp()
    }

    /// `G(w)` with the region split described in the module docs.
    pub fn g(&self, w: Complex64) -> Result<Complex64, ModelError> {
        let r = w.norm();
        if r == 0.0 {
            return Err(ModelError::OriginPole);
        }
        Ok(if r > OUTER_SPLIT {
            self.psi(w).sin()
        } else if r >= 1.0 / OUTER_SPLIT {
            if (r - 1.0).abs() < 1e-15 {
                Complex64::from_polar(1.0, self.gamma(w.arg()))
            } else {
                self.g_closed_form(w)
            }
        } else {
            self.psi(w.conj().inv()).sin().conj().inv()
        })
    }
}

/// Fits the boundary correspondence of `D` with `degree/2` harmonics on a
/// grid of `grid` points, then expands `ψ` from the boundary values.
pub fn fit_exterior_map(d: &DomainD, degree: usize, grid: usize, tol: f64) -> Result<ExteriorRiemannMap, ModelError> {
    if degree < MIN_DEGREE {
        return Err(ModelError::DegreeTooSmall(degree));
    }
    if grid < 8 * degree + 16 {
        return Err(ModelError::TooFewSamples { min: 8 * degree + 16, got: grid });
    }
    let jn = degree / 2;
    let m = grid;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ks: Vec<usize> = (0..degree).map(|l| 2 * l + 3).collect();
    let phi: Vec<f64> = (0..m).map(|l| TAU * (l as f64 + 0.5) / m as f64).collect();
    // Coefficient k of samples on the offset grid: (1/M) Σ f_l e^{−ikφ_l}.
    let spectrum = |vals: &mut Vec<Complex64>| {
        fft.process(vals);
        let inv = 1.0 / m as f64;
        for v in vals.iter_mut() {
            *v *= inv;
        }
    };
    let coef = |spec: &[Complex64], k: i64| -> Complex64 {
        let idx = k.rem_euclid(m as i64) as usize;
        spec[idx] * Complex64::from_polar(1.0, -(k as f64) * PI / m as f64)
    };

    let mut map = ExteriorRiemannMap::from_parts(degree, vec![0.0; jn], m, 0);
    if matches!(d.kind, DomainKind::SineComponent) {
        map.beta[0] = -0.5;
    }
    map.rehydrate();

    let residuals = |map: &ExteriorRiemannMap| -> (Vec<f64>, Vec<Complex64>, Vec<Complex64>) {
        let mut b = Vec::with_capacity(m);
        let mut db = Vec::with_capacity(m);
        for &p in &phi {
            let z = Complex64::from_polar(1.0, map.gamma(p));
            let bv = d.point_over(z);
            db.push(d.point_derivative(z, bv));
            b.push(bv);
        }
        let mut bs = b.clone();
        spectrum(&mut bs);
        let r: Vec<f64> = ks.iter().map(|&k| coef(&bs, k as i64).re).collect();
        (r, bs, db)
    };
    let min_derivative = |map: &ExteriorRiemannMap| -> f64 {
        let on_grid = phi.iter().map(|&p| map.gamma_derivative(p)).fold(f64::INFINITY, f64::min);
        on_grid.min(map.gamma_derivative(0.0))
    };

    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mut r, _, mut db) = residuals(&map);
    let mut iterations = 0;
    for _ in 0..80 {
        let n0 = norm(&r);
        if n0 < 1e-15 {
            break;
        }
        iterations += 1;
        let mut ds = db.clone();
        spectrum(&mut ds);
        // ∂B̂_k/∂β_j = (D_{k−2j} − D_{k+2j}) / 2i, D the spectrum of dB/dγ.
        let jac = DMatrix::from_fn(ks.len(), jn, |row, col| {
            let k = ks[row] as i64;
            let j2 = 2 * (col as i64 + 1);
            ((coef(&ds, k - j2) - coef(&ds, k + j2)) / Complex64::new(0.0, 2.0)).re
        });
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|x| -x));
        let step = match jac.svd(true, true).solve(&rhs, 1e-13) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-6 {
            let mut trial = map.clone();
            for (b, s) in trial.beta.iter_mut().zip(step.iter()) {
                *b += lambda * s;
            }
            trial.rehydrate();
            if min_derivative(&trial) > -1e-12 {
                let (r2, _, db2) = residuals(&trial);
                if norm(&r2) < n0 {
                    accepted = Some((trial, r2, db2));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((t, r2, db2)) => {
                let gain = norm(&r2) / n0;
                map = t;
                r = r2;
                db = db2;
                if gain > 0.999 {
                    break;
                }
            }
            None => break,
        }
    }
    map.iterations = iterations;
    map.min_derivative = min_derivative(&map);

    // Boundary values on the regular grid for ψ's coefficients and residual.
    let mut b: Vec<Complex64> = (0..m)
        .map(|l| d.point_over(Complex64::from_polar(1.0, map.gamma(TAU * l as f64 / m as f64))))
        .collect();
    let winding = winding_number(&b);
    fft.process(&mut b);
    for v in b.iter_mut() {
        *v /= m as f64;
    }
    map.fit_residual = (3..m / 4).step_by(2).map(|k| b[k].norm()).sum();
    map.c = b[1];
    map.coeffs = (0..m / 4).map(|i| b[m - (2 * i + 1)]).collect();
    // A boundary traversed clockwise can only be matched by an interior map.
    if winding != 1 {
        map.fit_residual = f64::INFINITY;
    }
    if !(map.fit_residual <= tol) || map.min_derivative < -1e-12 {
        return Err(ModelError::FitDiverged { residual: map.fit_residual, tol });
    }
    Ok(map)
}

/// Winding number of a closed polyline about 0.
fn winding_number(pts: &[Complex64]) -> i64 {
    let n = pts.len();
    let turn: f64 = (0..n).map(|k| (pts[(k + 1) % n] / pts[k]).arg()).sum();
    (turn / TAU).round() as i64
}

/// `x ↦ γ(2πx)/2π + t`, the lift of `G_θ|𝕋`.
#[derive(Debug, Clone, Copy)]
pub struct RotatedLift<'a> {
    pub map: &'a ExteriorRiemannMap,
    pub t: f64,
}

impl CircleMap for RotatedLift<'_> {
    fn lift(&self, x: f64) -> f64 {
        self.map.gamma(TAU * x) / TAU + self.t
    }
    fn lift_derivative(&self, x: f64) -> Option<f64> {
        Some(self.map.gamma_derivative(TAU * x))
    }
}

/// `x ↦ γ(πx)/π + (2t mod 1)`, the lift of `g_θ|𝕋`.
#[derive(Debug, Clone, Copy)]
pub struct QuotientLift<'a> {
    pub map: &'a ExteriorRiemannMap,
    pub t: f64,
}

impl CircleMap for QuotientLift<'_> {
    fn lift(&self, x: f64) -> f64 {
        self.map.gamma(PI * x) / PI + (2.0 * self.t).fract()
    }
    fn lift_derivative(&self, x: f64) -> Option<f64> {
        Some(self.map.gamma_derivative(PI * x))
    }
}

/// Orbit `F^n(0)` as winding plus fraction, for `n ≤ len`.
struct Orbit<'a, F: CircleMap> {
    f: &'a F,
    n: u64,
    winding: i64,
    x: f64,
}

impl<'a, F: CircleMap> Orbit<'a, F> {
    fn new(f: &'a F) -> Self {
        Orbit { f, n: 0, winding: 0, x: 0.0 }
    }

    fn advance_to(&mut self, n: u64) {
        while self.n < n {
            let y = self.f.lift(self.x);
            let fl = y.floor();
            self.winding += fl as i64;
            self.x = y - fl;
            self.n += 1;
        }
    }

    /// `F^n(0) − p`.
    fn excess(&self, p: u128) -> f64 {
        (self.winding as i128 - p as i128) as f64 + self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Low,
    High,
    Inside,
}

/// Compares `ρ(F)` with `θ` through the convergents of `θ` up to `max_q`.
fn side_of(f: &impl CircleMap, theta: &ContinuedFraction, max_q: u64) -> Side {
    let mut orbit = Orbit::new(f);
    for n in 0..=theta.depth() {
        let q = theta.q(n);
        if q > max_q as u128 {
            break;
        }
        orbit.advance_to(q as u64);
        let e = orbit.excess(theta.p(n));
        // Even convergents lie below θ, odd ones above.
        if n % 2 == 1 && e >= 0.0 {
            return Side::High;
        }
        if n % 2 == 0 && e <= 0.0 {
            return Side::Low;
        }
    }
    Side::Inside
}

/// Continued fraction of `ρ(F)` read off the orbit of 0 by Stern–Brocot
/// descent, stopping before denominators exceed `max_q`. The last, possibly
/// incomplete, run is dropped.
pub fn rotation_quotients(f: &impl CircleMap, max_q: u64) -> Vec<u64> {
    // Denominators only grow along the descent, so one forward pass suffices.
    let mut orbit = Orbit::new(f);
    let (mut lp, mut lq, mut up, mut uq) = (0u64, 1u64, 1u64, 1u64);
    let mut runs: Vec<u64> = Vec::new();
    let mut last: Option<bool> = Some(false);
    let mut count = 1u64;
    loop {
        let (mp, mq) = (lp + up, lq + uq);
        if mq > max_q {
            break;
        }
        orbit.advance_to(mq);
        let above = orbit.excess(mp as u128) > 0.0;
        if above {
            lp = mp;
            lq = mq;
        } else {
            up = mp;
            uq = mq;
        }
        if last == Some(above) {
            count += 1;
        } else {
            runs.push(count);
            count = 1;
            last = Some(above);
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSolution {
    pub t: f64,
    /// Half-width of the `t`-interval consistent with the convergent tests.
    pub error_bound: f64,
    /// Largest denominator used.
    pub max_q: u64,
    pub certified: RotationEstimate,
    /// Set when the tolerance was degenerate and no search was performed.
    pub warning: Option<String>,
}

/// Finds `t` with `ρ(e^{2πit}G|𝕋) = θ` by bisection on the sign of
/// `F_t^{q_n}(0) − p_n` over the convergents of `θ` with `q_n ≤ max_q`.
pub fn solve_rotation_parameter(
    map: &ExteriorRiemannMap,
    theta: &ContinuedFraction,
    tol: f64,
    max_q: u64,
) -> Result<RotationSolution, ModelError> {
    let certify = |t: f64, iters: usize| circle::rotation_number(&RotatedLift { map, t }, iters.max(100));
    if tol >= 1.0 {
        return Ok(RotationSolution {
            t: 0.5,
            error_bound: 0.5,
            max_q,
            certified: certify(0.5, 400)?,
            warning: Some("tolerance ≥ 1: returned the bracket midpoint".into()),
        });
    }
    let side = |t: f64| side_of(&RotatedLift { map, t }, theta, max_q);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if side(lo) != Side::Low || side(hi) != Side::High {
        return Err(ModelError::BracketFailure {
            low: certify(lo, 1000)?.value,
            high: certify(hi, 1000)?.value,
            theta: theta.value,
        });
    }
    let floor = tol.max(4.0 * f64::EPSILON);
    let mut inside = None;
    while hi - lo > floor {
        let mid = 0.5 * (lo + hi);
        match side(mid) {
            Side::Low => lo = mid,
            Side::High => hi = mid,
            Side::Inside => {
                inside = Some(mid);
                break;
            }
        }
    }
    if let Some(mid) = inside {
        // Shrink onto the interval where the tests cannot decide.
        let (mut a, mut b) = (lo, mid);
        while b - a > floor * 0.25 && b - a > 4.0 * f64::EPSILON {
            let c = 0.5 * (a + b);
            if side(c) == Side::Low { a = c } else { b = c }
        }
        lo = a;
        let (mut a, mut b) = (mid, hi);
        while b - a > floor * 0.25 && b - a > 4.0 * f64::EPSILON {
            let c = 0.5 * (a + b);
            if side(c) == Side::High { b = c } else { a = c }
        }
        hi = b;
    }
    let t = 0.5 * (lo + hi);
    let iters = (4 * max_q as usize).max(100_000);
    Ok(RotationSolution { t, error_bound: 0.5 * (hi - lo), max_q, certified: certify(t, iters)?, warning: None })
}

/// Fitted map together with its rotation parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalModel {
    pub psi: ExteriorRiemannMap,
    pub theta: f64,
    pub theta_quotients: Vec<u64>,
    pub solution: RotationSolution,
}

impl ConformalModel {
    pub fn new(psi: ExteriorRiemannMap, theta: &ContinuedFraction, solution: RotationSolution) -> Self {
        ConformalModel { psi, theta: theta.value, theta_quotients: theta.quotients.clone(), solution }
    }

    pub fn t(&self) -> f64 {
        self.solution.t
    }

    pub fn eval_big_g(&self, w: Complex64) -> Result<Complex64, ModelError> {
        self.psi.g(w)
    }

    /// `G_θ = e^{2πit} G`.
    pub fn eval_g_theta(&self, w: Complex64) -> Result<Complex64, ModelError> {
        Ok(Complex64::from_polar(1.0, TAU * self.t()) * self.psi.g(w)?)
    }

    /// `g_θ(z) = G_θ(w)²` with `w² = z`.
    pub fn eval_g(&self, z: Complex64) -> Result<Complex64, ModelError> {
        if z.norm() == 0.0 {
            return Err(ModelError::OriginPole);
        }
        let g = self.eval_g_theta(z.sqrt())?;
        Ok(g * g)
    }

    pub fn circle_lift(&self) -> RotatedLift<'_> {
        RotatedLift { map: &self.psi, t: self.t() }
    }

    pub fn quotient_lift(&self) -> QuotientLift<'_> {
        QuotientLift { map: &self.psi, t: self.t() }
    }

    pub fn theta_cf(&self) -> Result<ContinuedFraction, ModelError> {
        Ok(ContinuedFraction::from_quotients(&self.theta_quotients)?)
    }

    /// Continued fraction of `α = 2θ mod 1`, the rotation number of `g_θ|𝕋`.
    pub fn alpha_cf(&self) -> Result<ContinuedFraction, ModelError> {
        Ok(self.theta_cf()?.double_mod1()?)
    }

    /// Orbit table of the critical point of `g_θ|𝕋` at `level`.
    pub fn orbit_table(&self, level: usize) -> Result<OrbitTable, ModelError> {
        let alpha = self.alpha_cf()?;
        Ok(circle::critical_preimages(&self.quotient_lift(), level, &circle::returns_of(&alpha))?)
    }

    /// Orbit table of the rigid rotation by `α` at `level`.
    pub fn rigid_table(&self, level: usize) -> Result<OrbitTable, ModelError> {
        let alpha = self.alpha_cf()?;
        Ok(circle::rigid_table(alpha.value, level, &circle::returns_of(&alpha))?)
    }
}

/// Roundness of one pair of nested preimage components of `sin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundnessReport {
    pub center: Complex64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `outer_radius / inner_radius`.
    pub tau: f64,
    /// `τ / M`, the excess over the ratio of the two disks.
    pub distortion: f64,
    /// Whether the disks contain a critical value and the preimage curves
    /// double-cover their images.
    pub folded: bool,
}

/// Preimage under `sin` of the circle `|z − a| = ρ`, on the component whose
/// branch passes through `arcsin(a)` (the principal branch, shifted slightly
/// off a critical point when `a = ±1`).
fn preimage_curve(a: Complex64, rho: f64, samples: usize) -> Result<(Vec<Complex64>, bool), ModelError> {
    let folded = (a - 1.0).norm() < rho || (a + 1.0).norm() < rho;
    let loops = if folded { 2 } else { 1 };
    let z = |s: f64| a + Complex64::from_polar(rho, TAU * s);
    let mut w = z(0.0).asin();
    let mut pts = Vec::with_capacity(samples * loops);
    pts.push(w);
    let total = samples * loops;
    for k in 1..total {
        w = continue_asin(z, (k - 1) as f64 / samples as f64, w, k as f64 / samples as f64, TAU * rho)?;
        pts.push(w);
    }
    Ok((pts, folded))
}

fn point_in_polygon(p: Complex64, poly: &[Complex64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if p.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_polyline(p: Complex64, poly: &[Complex64]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let e = b - a;
            let t = (((p - a) * e.conj()).re / e.norm_sqr()).clamp(0.0, 1.0);
            (a + e * t - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Best `τ` with `B_{r'}(a') ⊂ V ⊂ U ⊂ B_{τr'}(a')` over a grid of
/// candidate centres, where `U`, `V` are the preimage components of
/// `B_{Mr}(a)` and `B_r(a)` through `arcsin(a)`.
pub fn sine_preimage_roundness(a: Complex64, r: f64, m: f64, samples: usize) -> Result<RoundnessReport, ModelError> {
    if !(m > 1.0) || !(r > 0.0) {
        return Err(ModelError::Precondition("need r > 0 and M > 1".into()));
    }
    if a.norm() + m * r > 2.0 {
        return Err(ModelError::Precondition("B_{Mr}(a) must lie in B_2(0)".into()));
    }
    if samples < 16 {
        return Err(ModelError::TooFewSamples { min: 16, got: samples });
    }
    let (u, folded) = preimage_curve(a, m * r, samples)?;
    let (v, _) = preimage_curve(a, r, samples)?;
    if !v.iter().all(|p| point_in_polygon(*p, &u)) {
        return Err(ModelError::ComponentMismatch);
    }
    let centroid = v.iter().sum::<Complex64>() / v.len() as f64;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &v {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let score = |c: Complex64| -> Option<(f64, f64, f64)> {
        if !point_in_polygon(c, &v) {
            return None;
        }
        let inner = dist_to_polyline(c, &v);
        let outer = u.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
        Some((outer / inner, inner, outer))
    };
    let mut best = (f64::INFINITY, 0.0, 0.0, centroid);
    let consider = |best: &mut (f64, f64, f64, Complex64), c: Complex64| {
        if let Some((tau, inner, outer)) = score(c) {
            if tau < best.0 {
                *best = (tau, inner, outer, c);
            }
        }
    };
    consider(&mut best, centroid);
    consider(&mut best, a.asin());
    const GRID: usize = 24;
    for i in 0..=GRID {
        for j in 0..=GRID {
            let c = Complex64::new(x0 + (x1 - x0) * i as f64 / GRID as f64, y0 + (y1 - y0) * j as f64 / GRID as f64);
            consider(&mut best, c);
        }
    }
    // Local refinement around the best grid point.
    let mut h = ((x1 - x0).max(y1 - y0)) / GRID as f64;
    for _ in 0..30 {
        let c0 = best.3;
        for d in [Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h)] {
            consider(&mut best, c0 + d);
        }
        if best.3 == c0 {
            h *= 0.5;
        }
    }
    let (tau, inner, outer, center) = best;
    if !tau.is_finite() {
        return Err(ModelError::ComponentMismatch);
    }
    Ok(RoundnessReport { center, inner_radius: inner, outer_radius: outer, tau, distortion: tau / m, folded })
}
