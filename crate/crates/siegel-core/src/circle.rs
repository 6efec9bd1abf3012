//! Circle homeomorphisms with one critical point: rotation numbers, backward
//! critical orbits, the dynamical and cell partitions, and their checks.
//!
//! Points of 𝕋 are handled in turns, `x ∈ [0, 1)` standing for `e^{2πix}`;
//! the critical point `1 ∈ 𝕋` is `x = 0`.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::arithmetic::ContinuedFraction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircleError {
    #[error("lift is not increasing near x = {at}")]
    NonMonotoneLift { at: f64 },
    #[error("bisection stalled while inverting at index {index}")]
    BisectionStall { index: usize },
    #[error("need at least {need} closest-return denominators, got {got}")]
    MissingDenominators { need: usize, got: usize },
    #[error("orbit order disagrees with the rigid rotation at position {position}")]
    OrderMismatch { position: usize },
    #[error("{lemma} violated at arc ({j}, {k})")]
    LemmaViolation { lemma: &'static str, j: i64, k: i64 },
    #[error("too few iterations: {0} (need ≥ 100)")]
    TooFewIterations(usize),
    #[error("table level {have} is below the required level {need}")]
    LevelTooLow { have: usize, need: usize },
}

/// An orientation-preserving circle homeomorphism given by its lift.
pub trait CircleMap {
    /// Lift `F: ℝ → ℝ` in turns with `F(x + 1) = F(x) + 1`.
    fn lift(&self, x: f64) -> f64;

    /// `F'(x)` when cheaply available; used only to speed up inversion.
    fn lift_derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        let x = z.arg() / (2.0 * core::f64::consts::PI);
        Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * self.lift(x))
    }
}

impl<T: CircleMap + ?Sized> CircleMap for &T {
    fn lift(&self, x: f64) -> f64 {
        (**self).lift(x)
    }
    fn lift_derivative(&self, x: f64) -> Option<f64> {
        (**self).lift_derivative(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidRotation {
    pub alpha: f64,
}

impl CircleMap for RigidRotation {
    fn lift(&self, x: f64) -> f64 {
        x + self.alpha
    }
    fn lift_derivative(&self, _x: f64) -> Option<f64> {
        Some(1.0)
    }
}

/// `x + ω − sin(2πx)/(2π)`: analytic, with a cubic critical point at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalStandardMap {
    pub omega: f64,
}

impl CircleMap for CriticalStandardMap {
    fn lift(&self, x: f64) -> f64 {
        let tau = 2.0 * core::f64::consts::PI;
        x + self.omega - Float::sin(tau * x) / tau
    }
    fn lift_derivative(&self, x: f64) -> Option<f64> {
        Some(1.0 - Float::cos(2.0 * core::f64::consts::PI * x))
    }
}

impl CriticalStandardMap {
    /// The unique `ω` whose map has rotation number `theta`, located by
    /// bisection on the signs of `F^{q_n}(0) − p_n` along the convergents.
    /// Only convergents with `q_n ≤ max_q` are consulted.
    pub fn tuned(theta: &ContinuedFraction, max_q: u64) -> Self {
        let depth = (1..=theta.depth()).take_while(|&n| theta.q(n) <= max_q as u128).last().unwrap_or(0);
        // +1: ω too large, −1: too small, 0: consistent through `depth`.
        let side = |omega: f64| -> i32 {
            let f = CriticalStandardMap { omega };
            for n in 0..=depth {
                let (w, x) = iterate(&f, 0.0, theta.q(n) as usize);
                let s = (w - theta.p(n) as i64) as f64 + x;
                let above = n % 2 == 1;
                if above && s >= 0.0 {
                    return 1;
                }
                if !above && s <= 0.0 {
                    return -1;
                }
            }
            0
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match side(mid) {
                1 => hi = mid,
                -1 => lo = mid,
                _ => {
                    // Inside the target interval; keep shrinking towards the
                    // side that deeper convergents would pick.
                    let (a, b) = (side(0.5 * (lo + mid)), side(0.5 * (mid + hi)));
                    if a == 0 && b == 0 {
                        break;
                    }
                    if a != 0 {
                        lo = 0.5 * (lo + mid);
                    } else {
                        hi = 0.5 * (mid + hi);
                    }
                }
            }
        }
        CriticalStandardMap { omega: 0.5 * (lo + hi) }
    }
}

/// Reduces to `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed displacement from `a` to `b` in `(-1/2, 1/2]`.
pub fn signed_gap(a: f64, b: f64) -> f64 {
    let d = frac(b - a);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Circle distance in turns.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    signed_gap(a, b).abs()
}

fn check_monotone(f: &impl CircleMap) -> Result<(), CircleError> {
    const SAMPLES: usize = 256;
    let mut prev = f.lift(0.0);
    for k in 1..=SAMPLES {
        let x = k as f64 / SAMPLES as f64;
        let y = f.lift(x);
        if !(y > prev) {
            return Err(CircleError::NonMonotoneLift { at: x });
        }
        prev = y;
    }
    let wrap = f.lift(1.0) - f.lift(0.0);
    if (wrap - 1.0).abs() > 1e-9 {
        return Err(CircleError::NonMonotoneLift { at: 1.0 });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationEstimate {
    pub value: f64,
    pub error_bound: f64,
}

/// `F^N(0)/N`, accurate to `1/N` for any circle homeomorphism.
pub fn rotation_number(f: &impl CircleMap, iters: usize) -> Result<RotationEstimate, CircleError> {
    if iters < 100 {
        return Err(CircleError::TooFewIterations(iters));
    }
    check_monotone(f)?;
    let (winding, x) = iterate(f, 0.0, iters);
    Ok(RotationEstimate {
        value: (winding as f64 + x) / iters as f64,
        error_bound: 1.0 / iters as f64,
    })
}

/// `F^n(x0)` split into an integer winding and a fractional position.
pub fn iterate(f: &impl CircleMap, x0: f64, n: usize) -> (i64, f64) {
    let mut winding = 0i64;
    let mut x = x0;
    for _ in 0..n {
        let y = f.lift(x);
        let fl = y.floor();
        winding += fl as i64;
        x = y - fl;
    }
    (winding, x)
}

/// The `x ∈ [0, 1)` with `F(x) ≡ y (mod 1)`.
pub fn invert(f: &impl CircleMap, y: f64) -> Option<f64> {
    let c = f.lift(0.0);
    let target = y + (c - y).ceil();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = 0.5;
    for _ in 0..200 {
        let fx = f.lift(x) - target;
        if fx == 0.0 {
            return Some(frac(x));
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            return Some(frac(if fx < 0.0 { hi } else { lo }));
        }
        let newton = f.lift_derivative(x).filter(|d| *d > 0.0).map(|d| x - fx / d);
        x = match newton {
            Some(n) if n > lo && n < hi => n,
            _ => 0.5 * (lo + hi),
        };
        if x <= lo || x >= hi {
            return Some(frac(0.5 * (lo + hi)));
        }
    }
    None
}

/// Backward critical orbit `x_i` (`F^i(x_i) ≡ 0`) and forward orbit
/// `x_{-i} = F^i(0)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitTable {
    pub level: usize,
    /// `q_0, q_1, ...` of the rotation number, at least through `q_{level+1}`.
    pub returns: Vec<u64>,
    backward: Vec<f64>,
    forward: Vec<f64>,
}

impl OrbitTable {
    /// `x_i` for `-(len_forward) < i < len_backward`.
    pub fn x(&self, i: i64) -> f64 {
        if i >= 0 {
            self.backward[i as usize]
        } else {
            self.forward[(-i) as usize]
        }
    }

    pub fn q(&self, n: usize) -> u64 {
        self.returns[n]
    }

    /// `q_n + q_{n+1}`, the size of `Π_n`.
    pub fn pi_size(&self, n: usize) -> usize {
        (self.returns[n] + self.returns[n + 1]) as usize
    }

    /// `q_{n+1}`, the size of `Ξ_n`.
    pub fn xi_size(&self, n: usize) -> usize {
        self.returns[n + 1] as usize
    }

    pub fn backward_len(&self) -> usize {
        self.backward.len()
    }

    pub fn forward_len(&self) -> usize {
        self.forward.len()
    }

    /// The critical value `v = f(1)`.
    pub fn critical_value(&self) -> f64 {
        self.forward[1]
    }

    /// Replaces `x_i`; intended for negative controls.
    pub fn perturb(&mut self, i: usize, delta: f64) {
        self.backward[i] = frac(self.backward[i] + delta);
    }

    /// Largest `|f^i(x_i) − 1|` (circle distance, turns) over `i` in `indices`.
    pub fn residual(&self, f: &impl CircleMap, indices: impl Iterator<Item = usize>) -> f64 {
        indices
            .map(|i| {
                let (_, y) = iterate(f, self.backward[i], i);
                circle_dist(y, 0.0)
            })
            .fold(0.0, Float::max)
    }

    /// Largest one-step mismatch `|f(x_i) − x_{i−1}|`.
    pub fn step_residual(&self, f: &impl CircleMap) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for i in 1..self.backward.len() {
            let d = circle_dist(frac(f.lift(self.backward[i])), self.backward[i - 1]);
            if d > worst.1 {
                worst = (i, d);
            }
        }
        worst
    }
}

/// Denominators `q_0..` of a rotation number, as `u64`.
pub fn returns_of(cf: &ContinuedFraction) -> Vec<u64> {
    cf.denominators().into_iter().map(|q| q.min(u64::MAX as u128) as u64).collect()
}

/// Builds the orbit table of level `n`: `x_i` for `0 ≤ i ≤ q_n + q_{n+1}` and
/// `x_{−i}` for `0 ≤ i ≤ q_n + q_{n+1} + 1` (level 0 holds `x_0` and `v`). Each `x_i` is obtained from `x_{i−1}`
/// by inverting `f` once on its monotone lift.
pub fn critical_preimages(
    f: &impl CircleMap,
    level: usize,
    returns: &[u64],
) -> Result<OrbitTable, CircleError> {
    if returns.len() < level + 2 {
        return Err(CircleError::MissingDenominators { need: level + 2, got: returns.len() });
    }
    check_monotone(f)?;
    // One point beyond Π_n so that x_{q_n+q_{n+1}} is available.
    let count = if level == 0 { 1 } else { (returns[level] + returns[level + 1]) as usize + 1 };
    let mut backward = Vec::with_capacity(count);
    backward.push(0.0);
    for i in 1..count {
        let x = invert(f, backward[i - 1]).ok_or(CircleError::BisectionStall { index: i })?;
        backward.push(x);
    }
    let mut forward = Vec::with_capacity(count + 1);
    forward.push(0.0);
    let mut x = 0.0;
    for _ in 0..count.max(1) {
        x = frac(f.lift(x));
        forward.push(x);
    }
    Ok(OrbitTable { level, returns: returns.to_vec(), backward, forward })
}

/// Orbit table of the rigid rotation by `alpha`, in closed form:
/// `x_i = −iα mod 1`.
pub fn rigid_table(alpha: f64, level: usize, returns: &[u64]) -> Result<OrbitTable, CircleError> {
    if returns.len() < level + 2 {
        return Err(CircleError::MissingDenominators { need: level + 2, got: returns.len() });
    }
    let count = if level == 0 { 1 } else { (returns[level] + returns[level + 1]) as usize + 1 };
    let backward = (0..count).map(|i| frac(-(i as f64) * alpha)).collect();
    let forward = (0..=count.max(1)).map(|i| frac(i as f64 * alpha)).collect();
    Ok(OrbitTable { level, returns: returns.to_vec(), backward, forward })
}

/// Checks that the cyclic order of `x_0..x_{N−1}` matches that of the rigid
/// rotation by `alpha` (whose backward orbit is `−iα`).
pub fn verify_combinatorics(table: &OrbitTable, alpha: f64, count: usize) -> Result<(), CircleError> {
    let mut ours: Vec<usize> = (0..count).collect();
    ours.sort_by(|&a, &b| table.backward[a].total_cmp(&table.backward[b]));
    let rigid_pos = |i: usize| frac(-(i as f64) * alpha);
    let mut rigid: Vec<usize> = (0..count).collect();
    rigid.sort_by(|&a, &b| rigid_pos(a).total_cmp(&rigid_pos(b)));
    // Both orders start at x_0 = 0.
    for (pos, (a, b)) in ours.iter().zip(rigid.iter()).enumerate() {
        if a != b {
            return Err(CircleError::OrderMismatch { position: pos });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PartitionKind {
    Dynamical,
    Cell,
}

/// Counter-clockwise arc from `x_start` to `x_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Arc {
    pub start: i64,
    pub end: i64,
    pub start_pos: f64,
    /// In turns.
    pub length: f64,
}

impl Arc {
    /// Endpoint indices as `(min, max)`.
    pub fn indices(&self) -> (i64, i64) {
        (self.start.min(self.end), self.start.max(self.end))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    pub kind: PartitionKind,
    pub level: usize,
    pub arcs: Vec<Arc>,
}

impl Partition {
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }

    /// Largest ratio between the lengths of neighbouring arcs.
    pub fn adjacent_ratio(&self) -> f64 {
        let n = self.arcs.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.arcs[i].length, self.arcs[(i + 1) % n].length);
                a.max(b) / a.min(b)
            })
            .fold(1.0, Float::max)
    }
}

/// Arcs between cyclically consecutive points of `{x_i : i ∈ indices}`.
pub fn partition_from_points(table: &OrbitTable, indices: &[i64], kind: PartitionKind, level: usize) -> Partition {
    let mut pts: Vec<(f64, i64)> = indices.iter().map(|&i| (table.x(i), i)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let arcs = (0..n)
        .map(|k| {
            let (p, i) = pts[k];
            let (pn, j) = pts[(k + 1) % n];
            let mut length = frac(pn - p);
            if n == 1 || (length == 0.0 && k + 1 == n) {
                length = 1.0;
            }
            Arc { start: i, end: j, start_pos: p, length }
        })
        .collect();
    Partition { kind, level, arcs }
}

/// `Π_n`: arcs between consecutive points of `{x_i : 0 ≤ i < q_n + q_{n+1}}`.
pub fn dynamical_partition(table: &OrbitTable, n: usize) -> Result<Partition, CircleError> {
    if table.level < n {
        return Err(CircleError::LevelTooLow { have: table.level, need: n });
    }
    let idx: Vec<i64> = (0..table.pi_size(n) as i64).collect();
    Ok(partition_from_points(table, &idx, PartitionKind::Dynamical, n))
}

/// `Ξ_n`: arcs between consecutive points of `{x_i : 0 ≤ i < q_{n+1}}`.
pub fn cell_partition(table: &OrbitTable, n: usize) -> Result<Partition, CircleError> {
    if table.level < n {
        return Err(CircleError::LevelTooLow { have: table.level, need: n });
    }
    let idx: Vec<i64> = (0..table.xi_size(n) as i64).collect();
    Ok(partition_from_points(table, &idx, PartitionKind::Cell, n))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LemmaReport {
    pub level: usize,
    pub dynamical_arcs: usize,
    pub cell_arcs: usize,
    /// Cell arcs that are a single dynamical arc / the union of two.
    pub single: usize,
    pub double: usize,
    pub persistent: usize,
    pub delta_emp: f64,
    pub orbit_residual: f64,
}

/// Lemmas on the partitions at level `n`: the dynamical arcs are the intervals
/// `[x_i, x_{i+q_n}]` and `[x_j, x_{j+q_{n+1}}]`; every cell arc is one or two
/// dynamical arcs; a cell arc persists to level `n+1` exactly when
/// `a_{n+2} = 1`, `k = j + q_n`, `0 ≤ j ≤ q_{n+1} − q_n`; every cell arc of
/// level `n+2` lies inside one of level `n`, with ratio `δ_emp`.
pub fn partition_lemmas_check(
    f: &impl CircleMap,
    table: &OrbitTable,
    n: usize,
) -> Result<LemmaReport, CircleError> {
    if table.level < n + 2 || table.returns.len() < n + 4 {
        return Err(CircleError::LevelTooLow { have: table.level, need: n + 2 });
    }
    // The lemmas are about the orbit of f; reject tables that are not.
    let (i, res) = table.step_residual(f);
    if res > 1e-9 {
        return Err(CircleError::LemmaViolation { lemma: "orbit relation f(x_i) = x_(i-1)", j: i as i64, k: i as i64 - 1 });
    }
    let q = |m: usize| table.q(m) as i64;

    let dynamical = dynamical_partition(table, n)?;
    for arc in &dynamical.arcs {
        let (j, k) = arc.indices();
        let named = (k == j + q(n) && j < q(n + 1)) || (k == j + q(n + 1) && j < q(n));
        if !named {
            return Err(CircleError::LemmaViolation { lemma: "dynamical partition", j, k });
        }
    }

    // Count dynamical points strictly inside each cell arc.
    let cells = cell_partition(table, n)?;
    let mut sorted_pi: Vec<f64> = (0..table.pi_size(n) as i64).map(|i| table.x(i)).collect();
    sorted_pi.sort_by(f64::total_cmp);
    let (mut single, mut double) = (0, 0);
    for arc in &cells.arcs {
        let inside = count_inside(&sorted_pi, arc);
        match inside {
            0 => single += 1,
            1 => double += 1,
            _ => {
                let (j, k) = arc.indices();
                return Err(CircleError::LemmaViolation { lemma: "cell arc is one or two dynamical arcs", j, k });
            }
        }
    }

    // Persistence to level n+1.
    let next = cell_partition(table, n + 1)?;
    let mut next_arcs: Vec<(i64, i64)> = next.arcs.iter().map(Arc::indices).collect();
    next_arcs.sort_unstable();
    let a_n2 = (q(n + 2) - q(n)) / q(n + 1);
    let mut persistent = 0;
    for arc in &cells.arcs {
        let (j, k) = arc.indices();
        let persists = next_arcs.binary_search(&(j, k)).is_ok();
        let predicted = a_n2 == 1 && k == j + q(n) && j <= q(n + 1) - q(n);
        if persists != predicted {
            return Err(CircleError::LemmaViolation { lemma: "persistence rule", j, k });
        }
        persistent += persists as usize;
    }

    // Containment two levels down.
    let fine = cell_partition(table, n + 2)?;
    let mut starts: Vec<(f64, usize)> = cells.arcs.iter().enumerate().map(|(i, a)| (a.start_pos, i)).collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut delta_emp: f64 = 0.0;
    for arc in &fine.arcs {
        let host = host_arc(&starts, arc.start_pos + 0.5 * arc.length);
        let h = &cells.arcs[host];
        let inside = frac(arc.start_pos - h.start_pos) + arc.length <= h.length * (1.0 + 1e-12);
        if !inside {
            let (j, k) = arc.indices();
            return Err(CircleError::LemmaViolation { lemma: "nested cell arcs", j, k });
        }
        delta_emp = delta_emp.max(arc.length / h.length);
    }
    if delta_emp >= 1.0 {
        return Err(CircleError::LemmaViolation { lemma: "strict nesting", j: 0, k: 0 });
    }

    Ok(LemmaReport {
        level: n,
        dynamical_arcs: dynamical.arcs.len(),
        cell_arcs: cells.arcs.len(),
        single,
        double,
        persistent,
        delta_emp,
        orbit_residual: res,
    })
}

fn count_inside(sorted: &[f64], arc: &Arc) -> usize {
    let a = arc.start_pos;
    let b = a + arc.length;
    let count_range = |lo: f64, hi: f64| -> usize {
        // strictly between lo and hi
        let l = sorted.partition_point(|&v| v <= lo);
        let h = sorted.partition_point(|&v| v < hi);
        h.saturating_sub(l)
    };
    if b <= 1.0 {
        count_range(a, b)
    } else {
        count_range(a, 1.0) + count_range(-1.0, b - 1.0)
    }
}

/// Index of the arc of `part` containing `pos`, given arcs sorted by start.
fn host_arc(starts: &[(f64, usize)], pos: f64) -> usize {
    let p = frac(pos);
    let k = starts.partition_point(|s| s.0 <= p);
    if k == 0 {
        starts[starts.len() - 1].1
    } else {
        starts[k - 1].1
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RealBoundsRow {
    pub level: usize,
    /// `|[x_{q_n}, x_{−q_{n+1}}]| / |[x_{−q_{n+1}}, 1]|`
    pub ratio_first: f64,
    /// `|[x_{q_n}, x_{q_n+q_{n+1}}]| / |[x_{q_n+q_{n+1}}, 1]|`
    pub ratio_second: f64,
    /// `|[x_{q_n+q_{n+1}−1}, v]| / |[v, x_{q_{n+1}−1}]|`
    pub ratio_third: f64,
    /// Largest ratio of adjacent arcs of `Π_n`.
    pub adjacent: f64,
    pub pre_asymptotic: bool,
}

impl RealBoundsRow {
    pub fn ratios(&self) -> [f64; 3] {
        [self.ratio_first, self.ratio_second, self.ratio_third]
    }
}

/// Levels below this are flagged pre-asymptotic in [`real_bounds_report`].
pub const PRE_ASYMPTOTIC_LEVEL: usize = 2;

/// Comparability ratios of adjacent intervals near the critical point and
/// the critical value, one row per level. `table` must reach `levels.end()`.
pub fn real_bounds_report(
    table: &OrbitTable,
    levels: core::ops::RangeInclusive<usize>,
) -> Result<Vec<RealBoundsRow>, CircleError> {
    let mut rows = Vec::new();
    for n in levels {
        if table.level < n {
            return Err(CircleError::LevelTooLow { have: table.level, need: n });
        }
        let q = |m: usize| table.q(m) as i64;
        let one = 0.0;
        let v = table.critical_value();
        let len = |a: f64, b: f64| circle_dist(a, b);
        let x_qn = table.x(q(n));
        let x_mq = table.x(-q(n + 1));
        let x_sum = table.x(q(n) + q(n + 1));
        let ratio_first = len(x_qn, x_mq) / len(x_mq, one);
        let ratio_second = len(x_qn, x_sum) / len(x_sum, one);
        let ratio_third = len(table.x(q(n) + q(n + 1) - 1), v) / len(v, table.x(q(n + 1) - 1));
        let adjacent = dynamical_partition(table, n)?.adjacent_ratio();
        rows.push(RealBoundsRow {
            level: n,
            ratio_first,
            ratio_second,
            ratio_third,
            adjacent,
            pre_asymptotic: n < PRE_ASYMPTOTIC_LEVEL,
        });
    }
    Ok(rows)
}

/// Level-to-level spread `max_k |log r_{n+1,k} − log r_{n,k}|` of the three
/// ratios, one entry per consecutive pair of rows.
pub fn ratio_variation(rows: &[RealBoundsRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| {
            let (a, b) = (w[0].ratios(), w[1].ratios());
            (0..3).map(|k| (b[k].ln() - a[k].ln()).abs()).fold(0.0, Float::max)
        })
        .collect()
}
