//! Families of nested disk pairs `B_{r_i}(x_i) ⊂ V_i ⊂ U_i ⊂ B_{K r_i}(x_i)`,
//! the selection of a disjoint subfamily of maximal area, and the covering
//! `⋃ U_i ⊂ ⋃_{j∈σ₀} B_{L r_j}(x_j)` with `L = 8K + 9`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::measure::{wrap_angle, CircleArc};

/// Margin used by every disk comparison.
pub const MARGIN: f64 = 1e-12;

/// Branch-and-bound is used up to this many maximal disks.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoveringError {
    #[error("empty family")]
    Empty,
    #[error("roundness constant {0} must exceed 1")]
    BadRoundness(f64),
    #[error("pair {0} violates B_r ⊂ V ⊂ U ⊂ B_Kr")]
    BadPair(usize),
    #[error("members {0} and {1} of the subfamily intersect")]
    NotDisjoint(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Disk { center, radius }
    }

    /// Open disks meet unless their centres are separated by the radius sum
    /// plus the margin.
    pub fn meets(&self, other: &Disk) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius + MARGIN
    }

    pub fn contains_disk(&self, other: &Disk) -> bool {
        (self.center - other.center).norm() + other.radius <= self.radius + MARGIN
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiskPair {
    pub center: Complex64,
    pub radius: f64,
    pub v: Disk,
    pub u: Disk,
}

impl DiskPair {
    pub fn inner(&self) -> Disk {
        Disk::new(self.center, self.radius)
    }

    pub fn is_valid(&self, k: f64) -> bool {
        let outer = Disk::new(self.center, k * self.radius);
        self.radius > 0.0 && self.v.contains_disk(&self.inner()) && self.u.contains_disk(&self.v) && outer.contains_disk(&self.u)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoveringFamily {
    pub k: f64,
    pub pairs: Vec<DiskPair>,
}

impl CoveringFamily {
    pub fn new(k: f64, pairs: Vec<DiskPair>) -> Result<Self, CoveringError> {
        if pairs.is_empty() {
            return Err(CoveringError::Empty);
        }
        if !(k > 1.0) {
            return Err(CoveringError::BadRoundness(k));
        }
        if let Some(i) = pairs.iter().position(|p| !p.is_valid(k)) {
            return Err(CoveringError::BadPair(i));
        }
        Ok(CoveringFamily { k, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `L = 8K + 9`.
    pub fn l(&self) -> f64 {
        8.0 * self.k + 9.0
    }

    /// Indices whose inner disk is not contained in another; of identical
    /// disks only the first is kept.
    pub fn maximal(&self) -> Vec<usize> {
        let b: Vec<Disk> = self.pairs.iter().map(DiskPair::inner).collect();
        (0..b.len())
            .filter(|&i| {
                !(0..b.len()).any(|j| j != i && b[j].contains_disk(&b[i]) && (!b[i].contains_disk(&b[j]) || j < i))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Subfamily {
    pub members: Vec<usize>,
    /// Sum of inner-disk areas, which is the union area since they are disjoint.
    pub area: f64,
    /// `false` when the greedy heuristic was used.
    pub exact: bool,
}

/// Disjoint subfamily of maximal inner disks with the largest total area:
/// exact by branch-and-bound up to [`EXACT_LIMIT`] maximal disks, greedy by
/// radius otherwise.
pub fn best_disjoint_subfamily(family: &CoveringFamily) -> Subfamily {
    let cand = family.maximal();
    if cand.len() <= EXACT_LIMIT {
        exact_subfamily(family, &cand)
    } else {
        greedy_subfamily(family)
    }
}

/// Largest-radius-first selection among the maximal disks.
pub fn greedy_subfamily(family: &CoveringFamily) -> Subfamily {
    let mut cand = family.maximal();
    cand.sort_by(|&a, &b| family.pairs[b].radius.total_cmp(&family.pairs[a].radius).then(a.cmp(&b)));
    let mut members: Vec<usize> = Vec::new();
    for i in cand {
        let d = family.pairs[i].inner();
        if members.iter().all(|&j| !family.pairs[j].inner().meets(&d)) {
            members.push(i);
        }
    }
    members.sort_unstable();
    let area = members.iter().map(|&i| family.pairs[i].inner().area()).sum();
    Subfamily { members, area, exact: false }
}

fn exact_subfamily(family: &CoveringFamily, cand: &[usize]) -> Subfamily {
    let mut order: Vec<usize> = cand.to_vec();
    order.sort_by(|&a, &b| family.pairs[b].radius.total_cmp(&family.pairs[a].radius).then(a.cmp(&b)));
    let disks: Vec<Disk> = order.iter().map(|&i| family.pairs[i].inner()).collect();
    let n = disks.len();
    let mut conflict = alloc::vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && disks[i].meets(&disks[j]) {
                conflict[i] |= 1 << j;
            }
        }
    }
    let weight: Vec<f64> = disks.iter().map(Disk::area).collect();
    let mut suffix = alloc::vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + weight[i];
    }
    struct Search<'a> {
        conflict: &'a [u32],
        weight: &'a [f64],
        suffix: &'a [f64],
        best: f64,
        best_set: u32,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, chosen: u32, blocked: u32, w: f64) {
            if w > self.best {
                self.best = w;
                self.best_set = chosen;
            }
            if i == self.weight.len() || w + self.suffix[i] <= self.best {
                return;
            }
            if blocked & (1 << i) == 0 {
                self.go(i + 1, chosen | (1 << i), blocked | self.conflict[i], w + self.weight[i]);
            }
            self.go(i + 1, chosen, blocked, w);
        }
    }
    let mut s = Search { conflict: &conflict, weight: &weight, suffix: &suffix, best: -1.0, best_set: 0 };
    s.go(0, 0, 0, 0.0);
    let mut members: Vec<usize> = (0..n).filter(|&k| s.best_set & (1 << k) != 0).map(|k| order[k]).collect();
    members.sort_unstable();
    Subfamily { members, area: s.best.max(0.0), exact: true }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoveringOutcome {
    pub pass: bool,
    /// First pair whose `U_i` escapes its assigned `B_{L r_j}(x_j)`, or that
    /// meets no member of the subfamily.
    pub witness: Option<usize>,
    pub l: f64,
    /// `assigned[i]`: the member of `σ₀` covering `U_i`.
    pub assigned: Vec<Option<usize>>,
    /// Largest `r_i / r_j` over maximal `i` and their assigned `j`.
    pub radius_ratio: f64,
}

/// Checks the covering along the proof's pairing: a maximal `B_i` goes to the
/// largest member of `σ₀` meeting it; a non-maximal one follows the largest
/// maximal disk containing it.
pub fn covering_check(family: &CoveringFamily, sub: &Subfamily) -> Result<CoveringOutcome, CoveringError> {
    let b: Vec<Disk> = family.pairs.iter().map(DiskPair::inner).collect();
    for (x, &i) in sub.members.iter().enumerate() {
        for &j in &sub.members[x + 1..] {
            if b[i].meets(&b[j]) {
                return Err(CoveringError::NotDisjoint(i, j));
            }
        }
    }
    let l = family.l();
    let maximal = family.maximal();
    let n = family.len();
    let mut assigned: Vec<Option<usize>> = alloc::vec![None; n];
    let mut radius_ratio: f64 = 0.0;
    for &i in &maximal {
        assigned[i] = if sub.members.contains(&i) {
            Some(i)
        } else {
            sub.members
                .iter()
                .copied()
                .filter(|&j| b[j].meets(&b[i]))
                .max_by(|&a, &c| b[a].radius.total_cmp(&b[c].radius).then(c.cmp(&a)))
        };
        if let Some(j) = assigned[i] {
            radius_ratio = radius_ratio.max(b[i].radius / b[j].radius);
        }
    }
    for i in 0..n {
        if assigned[i].is_some() || maximal.contains(&i) {
            continue;
        }
        let host = maximal
            .iter()
            .copied()
            .filter(|&k| b[k].contains_disk(&b[i]))
            .max_by(|&a, &c| b[a].radius.total_cmp(&b[c].radius).then(c.cmp(&a)));
        assigned[i] = host.and_then(|k| assigned[k]);
    }
    let mut witness = None;
    for i in 0..n {
        let ok = match assigned[i] {
            Some(j) => Disk::new(b[j].center, l * b[j].radius).contains_disk(&family.pairs[i].u),
            None => false,
        };
        if !ok {
            witness = Some(i);
            break;
        }
    }
    Ok(CoveringOutcome { pass: witness.is_none(), witness, l, assigned, radius_ratio })
}

/// Area measure used by [`union_area`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Measure {
    Euclidean,
    Spherical,
}

/// Area of a union of disks by Green's theorem on the uncovered boundary
/// arcs: `∮ F(|z|) d(arg z)` with `F(ρ) = ρ²/2` or `ρ²/(2(1 + ρ²))`.
pub fn union_area(disks: &[Disk], measure: Measure) -> f64 {
    let mut total = 0.0;
    for (i, d) in disks.iter().enumerate() {
        if d.radius <= 0.0 {
            continue;
        }
        let mut covered: Vec<(f64, f64)> = Vec::new();
        let mut swallowed = false;
        for (j, e) in disks.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = (d.center - e.center).norm();
            let same = dist == 0.0 && e.radius == d.radius;
            if (same && j < i) || (!same && dist + d.radius <= e.radius) {
                swallowed = true;
                break;
            }
            if dist >= d.radius + e.radius || dist + e.radius <= d.radius {
                continue;
            }
            // Angular half-width of the part of circle i inside disk j.
            let cos = (d.radius * d.radius + dist * dist - e.radius * e.radius) / (2.0 * d.radius * dist);
            let half = Float::acos(cos.clamp(-1.0, 1.0));
            let mid = (e.center - d.center).arg();
            covered.push((mid - half, mid + half));
        }
        if swallowed {
            continue;
        }
        for (a, b) in uncovered(&covered) {
            let arc = CircleArc { center: d.center, radius: d.radius, phi0: a, sweep: b - a };
            total += match measure {
                Measure::Euclidean => arc.green_euclidean(),
                Measure::Spherical => arc.green_spherical((((b - a) / (2.0 * PI)) * 2048.0).ceil().max(16.0) as usize),
            };
        }
    }
    total
}

/// Complement in `[0, 2π)` of a union of angular intervals.
fn uncovered(covered: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let tau = 2.0 * PI;
    let mut iv: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in covered {
        let (a, b) = (wrap_angle(a), wrap_angle(a) + (b - a));
        if b > tau {
            iv.push((a, tau));
            iv.push((0.0, b - tau));
        } else {
            iv.push((a, b));
        }
    }
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::new();
    let mut cur = 0.0;
    for (a, b) in iv {
        if a > cur {
            out.push((cur, a));
        }
        cur = cur.max(b);
    }
    if cur < tau {
        out.push((cur, tau));
    }
    out
}

/// `area(⋃ V_i) / area(⋃ U_i)` in the given measure.
pub fn area_ratio(family: &CoveringFamily, measure: Measure) -> f64 {
    let v: Vec<Disk> = family.pairs.iter().map(|p| p.v).collect();
    let u: Vec<Disk> = family.pairs.iter().map(|p| p.u).collect();
    union_area(&v, measure) / union_area(&u, measure)
}
