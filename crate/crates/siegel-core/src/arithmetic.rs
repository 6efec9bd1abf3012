//! Continued fractions, Diophantine classes and the doubling map `θ ↦ 2θ mod 1`.
//!
//! Indexing follows the usual convention `θ = [a_1, a_2, ...]` with
//! `p_0/q_0 = 0/1`, `p_{-1}/q_{-1} = 1/0`. Expansions are exact: a binary64
//! input is read as the dyadic rational it represents and expanded by integer
//! Euclid steps, so convergents never carry rounding error.

use alloc::vec::Vec;
use num_traits::Float;

/// Largest partial quotient accepted before the expansion is declared to be
/// resolving representation noise rather than the number itself.
pub const MAX_QUOTIENT: u64 = 1 << 40;

/// Default bounded-type threshold used by [`classify`].
pub const DEFAULT_BOUND: u64 = 100;

/// Minimum window for [`classify`] to return a verdict.
pub const MIN_CLASSIFY_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArithmeticError {
    #[error("precision exhausted after {} quotients", quotients.len())]
    PrecisionExhausted { quotients: Vec<u64> },
    #[error("rational input: expansion terminated after {} quotients", quotients.len())]
    RationalInput { quotients: Vec<u64> },
    #[error("convergent denominators overflow at depth {depth}")]
    ConvergentOverflow { depth: usize },
    #[error("depth {depth} is below the required minimum {min}")]
    DepthTooSmall { depth: usize, min: usize },
    #[error("value {0} is outside (0, 1)")]
    OutOfRange(f64),
    #[error("bracket straddles the discontinuity of the doubling map")]
    BracketStraddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Convergent {
    pub p: u128,
    pub q: u128,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuedFraction {
    pub value: f64,
    pub quotients: Vec<u64>,
    /// `convergents[k]` is `p_{k+1}/q_{k+1}`.
    pub convergents: Vec<Convergent>,
    /// Number of leading quotients shared by every real within half an ulp of
    /// `value` (only meaningful for binary64 input; equals the depth otherwise).
    pub certified_depth: usize,
}

impl ContinuedFraction {
    /// Builds the expansion from explicit partial quotients.
    pub fn from_quotients(quotients: &[u64]) -> Result<Self, ArithmeticError> {
        let convergents = convergents_of(quotients)?;
        let value = match convergents.last() {
            Some(c) => c.p as f64 / c.q as f64,
            None => 0.0,
        };
        Ok(Self {
            value,
            quotients: quotients.to_vec(),
            convergents,
            certified_depth: quotients.len(),
        })
    }

    /// Expands the exact rational `num/den` to `depth` quotients.
    pub fn from_ratio(num: u128, den: u128, depth: usize) -> Result<Self, ArithmeticError> {
        if num == 0 || num >= den {
            return Err(ArithmeticError::OutOfRange(num as f64 / den as f64));
        }
        let quotients = euclid(num, den, depth)?;
        let mut cf = Self::from_quotients(&quotients)?;
        cf.value = num as f64 / den as f64;
        Ok(cf)
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// Partial quotient `a_n`, `n ≥ 1`.
    pub fn a(&self, n: usize) -> u64 {
        self.quotients[n - 1]
    }

    /// Denominator `q_n` with `q_0 = 1`.
    pub fn q(&self, n: usize) -> u128 {
        if n == 0 {
            1
        } else {
            self.convergents[n - 1].q
        }
    }

    /// Numerator `p_n` with `p_0 = 0`.
    pub fn p(&self, n: usize) -> u128 {
        if n == 0 {
            0
        } else {
            self.convergents[n - 1].p
        }
    }

    /// `q_0, q_1, ..., q_N`.
    pub fn denominators(&self) -> Vec<u128> {
        (0..=self.depth()).map(|n| self.q(n)).collect()
    }

    /// Closed rational interval known to contain the number: the last
    /// convergent and the mediant with the one before it.
    pub fn bracket(&self) -> ((u128, u128), (u128, u128)) {
        let n = self.depth();
        let (p1, q1) = (self.p(n), self.q(n));
        let (p0, q0) = if n == 0 { (1, 0) } else { (self.p(n - 1), self.q(n - 1)) };
        let mediant = (p1 + p0, q1 + q0);
        if n % 2 == 0 {
            ((p1, q1), mediant)
        } else {
            (mediant, (p1, q1))
        }
    }

    /// Expansion of `2θ mod 1` valid for every number in [`Self::bracket`].
    pub fn double_mod1(&self) -> Result<Self, ArithmeticError> {
        let (lo, hi) = self.bracket();
        let dbl = |(p, q): (u128, u128)| -> (u128, u128) {
            let two_p = 2 * p;
            if two_p >= q {
                (two_p - q, q)
            } else {
                (two_p, q)
            }
        };
        // 2p ≥ q flips between the endpoints exactly when the bracket contains 1/2.
        if (2 * lo.0 >= lo.1) != (2 * hi.0 >= hi.1) {
            return Err(ArithmeticError::BracketStraddle);
        }
        let (a, b) = (dbl(lo), dbl(hi));
        let quotients = common_prefix(a, b);
        let mut cf = Self::from_quotients(&quotients)?;
        cf.value = double_mod1(self.value);
        Ok(cf)
    }

    /// Expansion of `θ/2`, valid on the whole bracket.
    pub fn halve(&self) -> Result<Self, ArithmeticError> {
        let (lo, hi) = self.bracket();
        let half = |(p, q): (u128, u128)| -> Result<(u128, u128), ArithmeticError> {
            q.checked_mul(2)
                .map(|q2| (p, q2))
                .ok_or(ArithmeticError::ConvergentOverflow { depth: self.depth() })
        };
        let quotients = common_prefix(half(lo)?, half(hi)?);
        let mut cf = Self::from_quotients(&quotients)?;
        cf.value = self.value / 2.0;
        Ok(cf)
    }
}

/// Expands a binary64 value in (0,1) to `depth` partial quotients.
pub fn cf_expand(x: f64, depth: usize) -> Result<ContinuedFraction, ArithmeticError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(ArithmeticError::OutOfRange(x));
    }
    let (mantissa, shift) = dyadic(x);
    if shift > 126 {
        return Err(ArithmeticError::PrecisionExhausted { quotients: Vec::new() });
    }
    let num = mantissa as u128;
    let den = 1u128 << shift;
    let quotients = euclid(num, den, depth)?;
    // Half-ulp neighbours, one bit finer.
    let lo = common_depth((2 * num - 1, 2 * den), (2 * num + 1, 2 * den), depth);
    let mut cf = ContinuedFraction::from_quotients(&quotients)?;
    cf.value = x;
    cf.certified_depth = lo.min(quotients.len());
    Ok(cf)
}

/// `2θ` if `θ < 1/2`, else `2θ − 1`. Exact in binary64.
pub fn double_mod1(theta: f64) -> f64 {
    if theta < 0.5 {
        2.0 * theta
    } else {
        2.0 * theta - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClassKind {
    BoundedType,
    DavidType,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationClass {
    pub kind: ClassKind,
    pub bound_b: u64,
    pub david_c: f64,
    pub window: usize,
}

pub fn classify(cf: &ContinuedFraction) -> RotationClass {
    classify_with_bound(cf, DEFAULT_BOUND)
}

pub fn classify_with_bound(cf: &ContinuedFraction, bound: u64) -> RotationClass {
    let window = cf.depth();
    let bound_b = cf.quotients.iter().copied().max().unwrap_or(0);
    let david_c = david_constant(&cf.quotients);
    let kind = if window < MIN_CLASSIFY_DEPTH {
        ClassKind::Indeterminate
    } else if bound_b <= bound {
        ClassKind::BoundedType
    } else {
        ClassKind::DavidType
    };
    RotationClass { kind, bound_b, david_c, window }
}

/// `max_n log(a_n)/√n`, the literal witness for `log a_n = O(√n)`.
pub fn david_constant(quotients: &[u64]) -> f64 {
    witness(quotients, 0.0)
}

/// `max_n log(a_n + 1)/√n`. Unlike [`david_constant`] this is positive for
/// every sequence, which makes ratios between two expansions meaningful.
pub fn shifted_david_constant(quotients: &[u64]) -> f64 {
    witness(quotients, 1.0)
}

fn witness(quotients: &[u64], shift: f64) -> f64 {
    quotients
        .iter()
        .enumerate()
        .map(|(i, &a)| (a as f64 + shift).ln() / ((i + 1) as f64).sqrt())
        .fold(0.0, Float::max)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterlacingRow {
    pub n: usize,
    /// `t_{n−4}`
    pub lower: u128,
    /// `t_{n+1}`
    pub upper: u128,
    /// `(k, q_k)` with `t_{n−4} < q_k < t_{n+1}`, if any.
    pub witness: Option<(usize, u128)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuotientBoundRow {
    pub k: usize,
    pub n: usize,
    pub log_a: f64,
    /// `Σ_{n−8 ≤ l ≤ n+1} log(b_l + 1)`
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterlacingReport {
    pub theta_denominators: Vec<u128>,
    pub alpha_quotients: Vec<u64>,
    pub alpha_denominators: Vec<u128>,
    pub rows: Vec<InterlacingRow>,
    pub quotient_bounds: Vec<QuotientBoundRow>,
    pub theta_constant: f64,
    pub alpha_constant: f64,
}

impl InterlacingReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.witness.is_some())
    }

    pub fn constant_ratio(&self) -> f64 {
        self.alpha_constant / self.theta_constant
    }
}

/// For each `4 ≤ n < depth`, looks for a denominator of `α = 2θ mod 1`
/// strictly between `t_{n−4}` and `t_{n+1}`.
pub fn denominator_interlacing_check(
    theta: &ContinuedFraction,
    depth: usize,
) -> Result<InterlacingReport, ArithmeticError> {
    if depth < 10 {
        return Err(ArithmeticError::DepthTooSmall { depth, min: 10 });
    }
    if theta.depth() < depth {
        return Err(ArithmeticError::DepthTooSmall { depth: theta.depth(), min: depth });
    }
    let alpha = theta.double_mod1()?;
    let t: Vec<u128> = (0..=depth).map(|n| theta.q(n)).collect();
    let q = alpha.denominators();

    let rows = (4..depth)
        .map(|n| {
            let (lower, upper) = (t[n - 4], t[n + 1]);
            let witness = q
                .iter()
                .enumerate()
                .find(|(_, &qk)| lower < qk && qk < upper)
                .map(|(k, &qk)| (k, qk));
            InterlacingRow { n, lower, upper, witness }
        })
        .collect();

    let mut quotient_bounds = Vec::new();
    for k in 1..=alpha.depth() {
        let qk = q[k];
        let Some(n) = (0..depth).find(|&n| qk < t[n + 1]) else { break };
        if n < 9 {
            continue;
        }
        let bound: f64 = (n - 8..=n + 1).map(|l| (theta.a(l) as f64 + 1.0).ln()).sum();
        let log_a = (alpha.a(k) as f64).ln();
        quotient_bounds.push(QuotientBoundRow { k, n, log_a, bound, holds: log_a <= bound });
    }

    let theta_window = &theta.quotients[..depth];
    let alpha_window: Vec<u64> =
        (1..=alpha.depth()).filter(|&k| q[k] <= t[depth]).map(|k| alpha.a(k)).collect();
    Ok(InterlacingReport {
        theta_denominators: t,
        alpha_quotients: alpha.quotients.clone(),
        alpha_denominators: alpha.denominators(),
        rows,
        quotient_bounds,
        theta_constant: shifted_david_constant(theta_window),
        alpha_constant: shifted_david_constant(&alpha_window),
    })
}

fn convergents_of(quotients: &[u64]) -> Result<Vec<Convergent>, ArithmeticError> {
    let (mut p_prev, mut q_prev) = (1u128, 0u128);
    let (mut p, mut q) = (0u128, 1u128);
    let mut out = Vec::with_capacity(quotients.len());
    for (i, &a) in quotients.iter().enumerate() {
        let overflow = ArithmeticError::ConvergentOverflow { depth: i + 1 };
        let a = a as u128;
        let pn = a.checked_mul(p).and_then(|v| v.checked_add(p_prev)).ok_or(overflow.clone())?;
        let qn = a.checked_mul(q).and_then(|v| v.checked_add(q_prev)).ok_or(overflow)?;
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        out.push(Convergent { p, q });
    }
    Ok(out)
}

fn euclid(mut num: u128, mut den: u128, depth: usize) -> Result<Vec<u64>, ArithmeticError> {
    let mut quotients = Vec::with_capacity(depth);
    while quotients.len() < depth {
        if num == 0 {
            return Err(ArithmeticError::RationalInput { quotients });
        }
        let a = den / num;
        if a > MAX_QUOTIENT as u128 {
            return Err(ArithmeticError::PrecisionExhausted { quotients });
        }
        quotients.push(a as u64);
        let r = den % num;
        den = num;
        num = r;
    }
    Ok(quotients)
}

/// Quotients shared by every number in the closed interval between `a` and `b`.
fn common_prefix(a: (u128, u128), b: (u128, u128)) -> Vec<u64> {
    let (mut na, mut da) = a;
    let (mut nb, mut db) = b;
    let mut out = Vec::new();
    loop {
        if na == 0 || nb == 0 {
            break;
        }
        let (qa, ra) = (da / na, da % na);
        let (qb, rb) = (db / nb, db % nb);
        if qa != qb || ra == 0 || rb == 0 || qa > MAX_QUOTIENT as u128 {
            break;
        }
        out.push(qa as u64);
        da = na;
        na = ra;
        db = nb;
        nb = rb;
    }
    out
}

fn common_depth(a: (u128, u128), b: (u128, u128), cap: usize) -> usize {
    common_prefix(a, b).len().min(cap)
}

/// `x = mantissa / 2^shift` exactly.
fn dyadic(x: f64) -> (u64, u32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    while m & 1 == 0 && m != 0 {
        m >>= 1;
        e += 1;
    }
    (m, (-e) as u32)
}

/// Closed forms of the named rotation numbers.
pub mod named {
    use super::*;

    pub fn golden(depth: usize) -> ContinuedFraction {
        let mut cf = ContinuedFraction::from_quotients(&alloc::vec![1; depth]).expect("golden convergents fit");
        cf.value = (5f64.sqrt() - 1.0) / 2.0;
        cf
    }

    pub fn silver(depth: usize) -> ContinuedFraction {
        let mut cf = ContinuedFraction::from_quotients(&alloc::vec![2; depth]).expect("silver convergents fit");
        cf.value = 2f64.sqrt() - 1.0;
        cf
    }

    /// `a_n = ⌈e^{√n}⌉`.
    pub fn david_quotient(n: usize) -> u64 {
        Float::ceil(Float::exp(Float::sqrt(n as f64))) as u64
    }

    pub fn david_demo(depth: usize) -> Result<ContinuedFraction, ArithmeticError> {
        let q: Vec<u64> = (1..=depth).map(david_quotient).collect();
        ContinuedFraction::from_quotients(&q)
    }
}
