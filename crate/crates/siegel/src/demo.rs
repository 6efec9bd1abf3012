//! Seeded random corpora of disk pairs for the covering lemma.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use siegel_core::covering::{
    area_ratio, best_disjoint_subfamily, covering_check, greedy_subfamily, CoveringError, CoveringFamily, Disk,
    DiskPair, Measure,
};

/// Outer radius of the annulus `1 < |z| < R_CAP` holding every `U_i`.
pub const R_CAP: f64 = 3.0;

/// A random `K`-admissible family of `n` pairs with every `U_i` in the
/// annulus `1 < |z| < R_CAP`. `V_i` and `U_i` share a centre offset from `x_i`.
pub fn random_family(rng: &mut impl Rng, n: usize, k: f64) -> Result<CoveringFamily, CoveringError> {
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let r = rng.random_range(0.02..0.3);
        let c = Complex64::new(rng.random_range(-R_CAP..R_CAP), rng.random_range(-R_CAP..R_CAP));
        if c.norm() - k * r <= 1.0 || c.norm() + k * r >= R_CAP {
            continue;
        }
        let rv = rng.random_range(r..=0.5 * (1.0 + k) * r);
        let off = Complex64::from_polar(rng.random_range(0.0..=rv - r), rng.random_range(0.0..std::f64::consts::TAU));
        let ru = rng.random_range(rv..=(k * r - off.norm()).max(rv));
        pairs.push(DiskPair { center: c, radius: r, v: Disk::new(c + off, rv), u: Disk::new(c + off, ru) });
    }
    CoveringFamily::new(k, pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub n: usize,
    pub k: f64,
    pub exact: bool,
    pub exact_pass: bool,
    pub greedy_pass: bool,
    pub radius_ratio: f64,
    pub spherical_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringDemo {
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    /// Families where the greedy subfamily fails the covering check.
    pub counterexamples: Vec<CoveringFamily>,
    pub exact_pass_rate: f64,
    pub greedy_pass_rate: f64,
    pub min_spherical_ratio: f64,
}

/// Runs `trials` families of `n` pairs; trial `i` draws from its own stream
/// of the seeded generator so results do not depend on the trial count.
pub fn covering_demo(n: usize, k: f64, trials: usize, seed: u64) -> Result<CoveringDemo, CoveringError> {
    let mut rows = Vec::with_capacity(trials);
    let mut counterexamples = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let family = random_family(&mut rng, n, k)?;
        let exact = best_disjoint_subfamily(&family);
        let greedy = greedy_subfamily(&family);
        let e = covering_check(&family, &exact)?;
        let g = covering_check(&family, &greedy)?;
        if !g.pass {
            counterexamples.push(family.clone());
        }
        rows.push(TrialRow {
            trial,
            n,
            k,
            exact: exact.exact,
            exact_pass: e.pass,
            greedy_pass: g.pass,
            radius_ratio: e.radius_ratio,
            spherical_ratio: area_ratio(&family, Measure::Spherical),
        });
    }
    let rate = |f: fn(&TrialRow) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / rows.len().max(1) as f64;
    Ok(CoveringDemo {
        seed,
        exact_pass_rate: rate(|r| r.exact_pass),
        greedy_pass_rate: rate(|r| r.greedy_pass),
        min_spherical_ratio: rows.iter().map(|r| r.spherical_ratio).fold(f64::INFINITY, f64::min),
        rows,
        counterexamples,
    })
}
