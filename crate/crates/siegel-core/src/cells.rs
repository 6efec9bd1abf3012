//! Cell decompositions of the unit disk attached to the cell partitions `Ξ_n`,
//! and a concrete extension `H: Δ → Δ` of the boundary conjugacy.
//!
//! A cell of level `n` is bounded by the arc `[x_i, x_r]` of `Ξ_n`, the radial
//! segments `[x_i, y_i]`, `[x_r, y_r]` and the chord `[y_i, y_r]`, where `y_i`
//! sits at depth `d(x_l, x_r)/2` (arc length, radians) below `x_i`.
//!
//! The extension is built in polar coordinates `(x, u)` with `x` in turns and
//! `u = 1 − |z|`. Each level carries a depth profile `D_n(x)`, the piecewise
//! linear interpolation of the vertex depths. Profiles are nested
//! (`D_{n+1} ≤ D_n`), and the layer between `D_{n+1}` and `D_n` is mapped to
//! the corresponding layer of the rigid rotation by interpolating the two
//! boundary correspondences `h_n` and `h_{n+1}`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::circle::{frac, signed_gap, CircleError, OrbitTable};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CellError {
    #[error("level {level}: arc of length {arc} rad is not below 1")]
    ArcTooLarge { level: usize, arc: f64 },
    #[error("level {level}: source has {source_count} cells, target has {target_count}")]
    CellMismatch { level: usize, source_count: usize, target_count: usize },
    #[error("level {level}: vertex order differs at position {position}")]
    OrderMismatch { level: usize, position: usize },
    #[error("no usable level up to {max_level}")]
    NoUsableLevel { max_level: usize },
    #[error(transparent)]
    Circle(#[from] CircleError),
}

/// A vertex of `Ξ_n` with its depth `|y_i − x_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vertex {
    pub index: i64,
    /// Position in turns.
    pub pos: f64,
    pub depth: f64,
}

impl Vertex {
    pub fn x(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.pos)
    }

    pub fn y(&self) -> Complex64 {
        Complex64::from_polar(1.0 - self.depth, TAU * self.pos)
    }
}

/// Side lengths of one cell, counter-clockwise from `x_left` to `x_right`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    pub left: i64,
    pub right: i64,
    pub outer: f64,
    pub inner: f64,
    pub radial_left: f64,
    pub radial_right: f64,
}

impl Cell {
    pub fn sides(&self) -> [f64; 4] {
        [self.outer, self.inner, self.radial_left, self.radial_right]
    }

    /// Smallest `K` with all four sides pairwise `K`-commensurable.
    pub fn commensurability(&self) -> f64 {
        let s = self.sides();
        let max = s.iter().copied().fold(0.0, Float::max);
        let min = s.iter().copied().fold(f64::INFINITY, Float::min);
        max / min
    }
}

/// The annulus `Y_n`: union of the level-`n` cells.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellAnnulus {
    pub level: usize,
    /// Sorted by position; the first vertex is `x_0 = 0`.
    pub vertices: Vec<Vertex>,
    /// `cells[k]` spans `vertices[k]` to `vertices[k + 1]` (cyclically).
    pub cells: Vec<Cell>,
    pub commensurability: f64,
}

/// Builds the cells of level `n` from the backward orbit in `table`.
pub fn build_cells(table: &OrbitTable, n: usize) -> Result<CellAnnulus, CellError> {
    if table.level < n {
        return Err(CircleError::LevelTooLow { have: table.level, need: n }.into());
    }
    let count = table.xi_size(n);
    let mut pts: Vec<(f64, i64)> = (0..count as i64).map(|i| (table.x(i), i)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = pts.len();
    // gaps[k]: arc from vertex k to vertex k+1, radians.
    let gaps: Vec<f64> = (0..m)
        .map(|k| {
            let g = if k + 1 < m { pts[k + 1].0 - pts[k].0 } else { 1.0 + pts[0].0 - pts[k].0 };
            TAU * g
        })
        .collect();
    let worst = gaps.iter().copied().fold(0.0, Float::max);
    if m < 3 || worst >= 1.0 {
        return Err(CellError::ArcTooLarge { level: n, arc: worst });
    }
    let vertices: Vec<Vertex> = (0..m)
        .map(|k| Vertex {
            index: pts[k].1,
            pos: pts[k].0,
            depth: 0.5 * (gaps[(k + m - 1) % m] + gaps[k]),
        })
        .collect();
    let cells: Vec<Cell> = (0..m)
        .map(|k| {
            let (a, b) = (&vertices[k], &vertices[(k + 1) % m]);
            Cell {
                left: a.index,
                right: b.index,
                outer: gaps[k],
                inner: (a.y() - b.y()).norm(),
                radial_left: a.depth,
                radial_right: b.depth,
            }
        })
        .collect();
    let commensurability = cells.iter().map(Cell::commensurability).fold(1.0, Float::max);
    Ok(CellAnnulus { level: n, vertices, cells, commensurability })
}

impl CellAnnulus {
    /// Index of the vertex starting the arc that contains `x` (turns).
    fn sector(&self, x: f64) -> usize {
        let x = frac(x);
        self.vertices.partition_point(|v| v.pos <= x).saturating_sub(1)
    }

    fn arc_end(&self, k: usize) -> f64 {
        if k + 1 < self.vertices.len() {
            self.vertices[k + 1].pos
        } else {
            1.0 + self.vertices[0].pos
        }
    }

    /// Radius of the inner boundary (the polygon through the `y_i`) along the
    /// ray at angle `x` (turns).
    pub fn inner_radius(&self, x: f64) -> f64 {
        let k = self.sector(x);
        let a = self.vertices[k].y();
        let b = self.vertices[(k + 1) % self.vertices.len()].y();
        let dir = Complex64::from_polar(1.0, TAU * frac(x));
        // Solve s·dir = a + t(b − a) for s.
        let e = b - a;
        let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
        cross(a, e) / cross(dir, e)
    }

    /// Whether `z` lies in the closed annulus `Y_n`.
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        if r > 1.0 {
            return false;
        }
        let x = z.arg() / TAU;
        r >= self.inner_radius(x)
    }

    /// Piecewise linear interpolation of the vertex depths at `x` (turns).
    pub fn depth_profile(&self, x: f64) -> f64 {
        let x = frac(x);
        let k = self.sector(x);
        let a = &self.vertices[k];
        let b = &self.vertices[(k + 1) % self.vertices.len()];
        let end = self.arc_end(k);
        let t = (x - a.pos) / (end - a.pos);
        a.depth + t * (b.depth - a.depth)
    }
}

/// How cells of level `n+2` sit inside cells of level `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContainmentReport {
    pub coarse_level: usize,
    pub fine_cells: usize,
    /// Fine cells whose four vertices lie in their host cell.
    pub contained: usize,
    /// Largest ratio of a fine side to the corresponding host side.
    pub sigma_emp: f64,
}

pub fn containment_report(coarse: &CellAnnulus, fine: &CellAnnulus) -> ContainmentReport {
    let mut contained = 0;
    let mut sigma: f64 = 0.0;
    let m = fine.vertices.len();
    for (k, cell) in fine.cells.iter().enumerate() {
        let (a, b) = (&fine.vertices[k], &fine.vertices[(k + 1) % m]);
        let mid = a.pos + 0.5 * frac(b.pos - a.pos);
        let h = coarse.sector(mid);
        let host = &coarse.cells[h];
        let start = coarse.vertices[h].pos;
        let span = coarse.arc_end(h) - start;
        let on_arc = |p: f64| frac(p - start) <= span * (1.0 + 1e-12) || frac(p - start) >= 1.0 - 1e-12;
        let inside = on_arc(a.pos)
            && on_arc(b.pos)
            && 1.0 - a.depth >= coarse.inner_radius(a.pos) - 1e-12
            && 1.0 - b.depth >= coarse.inner_radius(b.pos) - 1e-12;
        contained += inside as usize;
        let ratios = [
            cell.outer / host.outer,
            cell.inner / host.inner,
            cell.radial_left / host.radial_left,
            cell.radial_right / host.radial_right,
        ];
        sigma = ratios.iter().copied().fold(sigma, Float::max);
    }
    ContainmentReport { coarse_level: coarse.level, fine_cells: fine.cells.len(), contained, sigma_emp: sigma }
}

/// Least `n ≤ max_level` from which every level up to `max_level` passes the
/// arc-size gate in `table`.
pub fn first_usable_level(table: &OrbitTable, max_level: usize) -> Result<usize, CellError> {
    let mut n0 = None;
    for n in (0..=max_level).rev() {
        match build_cells(table, n) {
            Ok(_) => n0 = Some(n),
            Err(CellError::ArcTooLarge { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    n0.ok_or(CellError::NoUsableLevel { max_level })
}

/// Extension of the boundary conjugacy `h` (source orbit ↦ rigid orbit) to
/// the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtensionH {
    pub first_level: usize,
    pub max_level: usize,
    pub source: Vec<CellAnnulus>,
    pub target: Vec<CellAnnulus>,
}

impl ExtensionH {
    /// Builds `H` on levels `n0..=max_level`, where `n0` is the first level
    /// passing the arc-size gate in both tables.
    pub fn build(source: &OrbitTable, target: &OrbitTable, max_level: usize) -> Result<Self, CellError> {
        let n0 = first_usable_level(source, max_level)?.max(first_usable_level(target, max_level)?);
        Self::build_from(source, target, n0, max_level)
    }

    pub fn build_from(
        source: &OrbitTable,
        target: &OrbitTable,
        first_level: usize,
        max_level: usize,
    ) -> Result<Self, CellError> {
        let mut src = Vec::new();
        let mut tgt = Vec::new();
        for n in first_level..=max_level {
            let (s, t) = (build_cells(source, n)?, build_cells(target, n)?);
            if s.cells.len() != t.cells.len() {
                return Err(CellError::CellMismatch {
                    level: n,
                    source_count: s.cells.len(),
                    target_count: t.cells.len(),
                });
            }
            if let Some(position) = s.vertices.iter().zip(&t.vertices).position(|(a, b)| a.index != b.index) {
                return Err(CellError::OrderMismatch { level: n, position });
            }
            src.push(s);
            tgt.push(t);
        }
        Ok(ExtensionH { first_level, max_level, source: src, target: tgt })
    }

    fn layer(&self, n: usize) -> (&CellAnnulus, &CellAnnulus) {
        let k = n - self.first_level;
        (&self.source[k], &self.target[k])
    }

    /// Boundary correspondence `h_n`: piecewise linear on `Ξ_n`, sending each
    /// source vertex to the matching rigid vertex.
    pub fn boundary_map(&self, n: usize, x: f64) -> f64 {
        let (s, t) = self.layer(n);
        let x = frac(x);
        let k = s.sector(x);
        let a = s.vertices[k].pos;
        let u = (x - a) / (s.arc_end(k) - a);
        let ta = t.vertices[k].pos;
        frac(ta + u * (t.arc_end(k) - ta))
    }

    /// Evaluates `H(z)` for `|z| ≤ 1`; `None` outside the closed disk.
    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        let r = z.norm();
        if !(r <= 1.0) {
            return None;
        }
        if r == 0.0 {
            return Some(Complex64::new(0.0, 0.0));
        }
        let x = frac(z.arg() / TAU);
        let u = 1.0 - r;
        let (n0, top) = (self.first_level, self.max_level);
        let (s0, t0) = self.layer(n0);
        let d0 = s0.depth_profile(x);
        if u > d0 {
            // Radial closure of the central disk.
            let lambda = r / (1.0 - d0);
            let xx = self.boundary_map(n0, x);
            let rr = lambda * (1.0 - t0.depth_profile(xx));
            return Some(Complex64::from_polar(rr, TAU * xx));
        }
        // Deepest level whose profile still lies below u.
        let mut m = n0;
        while m < top && self.layer(m + 1).0.depth_profile(x) >= u {
            m += 1;
        }
        let (xx, uu) = if m == top {
            let (s, t) = self.layer(top);
            let d = s.depth_profile(x);
            let xx = self.boundary_map(top, x);
            let v = if d > 0.0 { u / d } else { 0.0 };
            (xx, v * t.depth_profile(xx))
        } else {
            let (s_hi, t_hi) = self.layer(m);
            let (s_lo, t_lo) = self.layer(m + 1);
            let (dh, dl) = (s_hi.depth_profile(x), s_lo.depth_profile(x));
            let v = if dh > dl { (dh - u) / (dh - dl) } else { 1.0 };
            let a = self.boundary_map(m, x);
            let b = self.boundary_map(m + 1, x);
            let xx = frac(a + v * signed_gap(a, b));
            let uu = (1.0 - v) * t_hi.depth_profile(xx) + v * t_lo.depth_profile(xx);
            (xx, uu)
        };
        Some(Complex64::from_polar(1.0 - uu, TAU * xx))
    }

    /// The highest level `n` with `z ∈ Y_n` (straight-segment cells), or
    /// `None` when `z` is inside the innermost polygon.
    pub fn landing_level(&self, z: Complex64) -> Option<usize> {
        let (s0, _) = self.layer(self.first_level);
        if !s0.contains(z) {
            return None;
        }
        let mut m = self.first_level;
        while m < self.max_level && self.layer(m + 1).0.contains(z) {
            m += 1;
        }
        Some(m)
    }

    /// Size of the layer piece around `z ∈ Δ`: the smaller of its radial
    /// thickness and the width of its sub-arc, in radians.
    pub fn local_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let x = frac(z.arg() / TAU);
        let u = 1.0 - r;
        let (n0, top) = (self.first_level, self.max_level);
        let d0 = self.layer(n0).0.depth_profile(x);
        if u > d0 {
            return 1.0 - d0;
        }
        let mut m = n0;
        while m < top && self.layer(m + 1).0.depth_profile(x) >= u {
            m += 1;
        }
        let s = self.layer(m).0;
        let k = s.sector(x);
        let width = TAU * (s.arc_end(k) - s.vertices[k].pos) * r.max(1e-3);
        let thick = if m == top {
            s.depth_profile(x)
        } else {
            s.depth_profile(x) - self.layer(m + 1).0.depth_profile(x)
        };
        width.min(thick).max(1e-12)
    }
}

/// Beltrami coefficient `∂̄H/∂H` of `H` at `z` by central differences with
/// step `h`; `None` where the discrete Jacobian is not positive.
pub fn beltrami(map: &ExtensionH, z: Complex64, h: f64) -> Option<Complex64> {
    let e = |w: Complex64| map.eval(w);
    let dx = (e(z + h)? - e(z - h)?) / (2.0 * h);
    let dy = (e(z + Complex64::new(0.0, h))? - e(z - Complex64::new(0.0, h))?) / (2.0 * h);
    let i = Complex64::new(0.0, 1.0);
    let hz = (dx - i * dy) * 0.5;
    let hzb = (dx + i * dy) * 0.5;
    let jac = hz.norm_sqr() - hzb.norm_sqr();
    if !(jac > 0.0) || !jac.is_finite() {
        return None;
    }
    Some(hzb / hz)
}

/// Dilatation quotient `(1 + |μ|)/(1 − |μ|)`.
pub fn dilatation(mu: f64) -> f64 {
    (1.0 + mu) / (1.0 - mu)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DilatationRow {
    pub level: usize,
    pub samples: usize,
    pub degenerate: usize,
    pub max_mu: f64,
    pub max_dilatation: f64,
    /// `a_{n+2}` of the rotation number, when known.
    pub quotient: Option<u64>,
    /// `max_dilatation / (1 + (log a_{n+2})²)`.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DilatationReport {
    pub rows: Vec<DilatationRow>,
    /// Positive-Jacobian fraction over all samples.
    pub orientation: f64,
}

const FRACTIONS: [f64; 3] = [0.15, 0.5, 0.85];

/// Samples each layer `Y_n \ Y_{n+1}` (`n0 ≤ n < N`) at a 3×3 pattern inside
/// every sub-arc of level `n+1`. `quotient(n)` supplies `a_{n+2}` if known.
pub fn dilatation_report(map: &ExtensionH, quotient: impl Fn(usize) -> Option<u64>) -> DilatationReport {
    let mut rows = Vec::new();
    let (mut total, mut bad) = (0usize, 0usize);
    for n in map.first_level..map.max_level {
        let (s_hi, _) = map.layer(n);
        let (s_lo, _) = map.layer(n + 1);
        let mut row = DilatationRow {
            level: n,
            samples: 0,
            degenerate: 0,
            max_mu: 0.0,
            max_dilatation: 1.0,
            quotient: quotient(n),
            normalized: None,
        };
        for k in 0..s_lo.vertices.len() {
            let a = s_lo.vertices[k].pos;
            let len = s_lo.arc_end(k) - a;
            for &fx in &FRACTIONS {
                let x = frac(a + fx * len);
                let (dh, dl) = (s_hi.depth_profile(x), s_lo.depth_profile(x));
                let thick = dh - dl;
                if thick <= 1e-12 {
                    continue;
                }
                for &fv in &FRACTIONS {
                    let u = dh - fv * thick;
                    let z = Complex64::from_polar(1.0 - u, TAU * x);
                    let size = thick.min(TAU * len * (1.0 - u));
                    row.samples += 1;
                    match beltrami(map, z, 1e-4 * size) {
                        Some(mu) => row.max_mu = row.max_mu.max(mu.norm()),
                        None => row.degenerate += 1,
                    }
                }
            }
        }
        row.max_dilatation = dilatation(row.max_mu);
        row.normalized = row.quotient.map(|a| {
            let l = (a as f64).ln();
            row.max_dilatation / (1.0 + l * l)
        });
        total += row.samples;
        bad += row.degenerate;
        rows.push(row);
    }
    let orientation = if total == 0 { 1.0 } else { 1.0 - bad as f64 / total as f64 };
    DilatationReport { rows, orientation }
}
