//! Determinant-only bounds for strongly square free totally reflective genera: the mass
//! lower bound `M`, the reflective-mass upper bounds `Mref` and `Nref`, the prime count and
//! prime value tables, and the prime cutoff for Watson pre-images.

use crate::arith::{factor, is_prime, next_prime, rat, rat_int, Rational};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("dimension {0} not supported (3 or 4)")]
    BadDim(u32),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} repeated in shape")]
    Repeated(u64),
    #[error("malformed shape: {0}")]
    Malformed(String),
    #[error("exponent pattern of {0} is not strongly square free in dimension {1}")]
    NotStronglySquareFree(String, u32),
    #[error("witness check failed: {0}")]
    Witness(String),
}

fn check_dim(dim: u32) -> Result<(), BoundError> {
    if dim == 3 || dim == 4 {
        Ok(())
    } else {
        Err(BoundError::BadDim(dim))
    }
}

/// Factorization pattern of a determinant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetShape {
    factors: Vec<(u64, u32)>,
}

impl DetShape {
    pub fn from_det(d: u128) -> Self {
        DetShape { factors: factor(d) }
    }

    /// `p_1^2 ... p_r^2 q_1 ... q_s`.
    pub fn new(squared: &[u64], simple: &[u64]) -> Result<Self, BoundError> {
        let mut factors: Vec<(u64, u32)> =
            squared.iter().map(|&p| (p, 2)).chain(simple.iter().map(|&q| (q, 1))).collect();
        factors.sort();
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(BoundError::Repeated(w[0].0));
            }
        }
        if let Some(&(p, _)) = factors.iter().find(|(p, _)| !is_prime(*p)) {
            return Err(BoundError::NotPrime(p));
        }
        Ok(DetShape { factors })
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn det(&self) -> u128 {
        self.factors.iter().map(|&(p, e)| (p as u128).pow(e)).product()
    }

    pub fn squared(&self) -> Vec<u64> {
        self.factors.iter().filter(|f| f.1 == 2).map(|f| f.0).collect()
    }

    pub fn simple(&self) -> Vec<u64> {
        self.factors.iter().filter(|f| f.1 == 1).map(|f| f.0).collect()
    }

    pub fn r(&self) -> usize {
        self.factors.iter().filter(|f| f.1 == 2).count()
    }

    pub fn s(&self) -> usize {
        self.factors.iter().filter(|f| f.1 == 1).count()
    }

    /// `Ω(d)`.
    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|f| f.1).sum()
    }

    /// Determinant pattern allowed for a strongly square free lattice of this dimension.
    pub fn fits(&self, dim: u32) -> bool {
        let max = if dim == 3 { 1 } else { 2 };
        self.factors.iter().all(|f| f.1 >= 1 && f.1 <= max)
    }

    fn require_fit(&self, dim: u32) -> Result<(), BoundError> {
        check_dim(dim)?;
        if self.fits(dim) {
            Ok(())
        } else {
            Err(BoundError::NotStronglySquareFree(self.to_string(), dim))
        }
    }

    /// Number of divisors `x` with `Ω(x) = k`, for each `k`.
    fn omega_distribution(&self) -> Vec<u64> {
        let mut poly = vec![1u64];
        for &(_, e) in &self.factors {
            let mut next = vec![0u64; poly.len() + e as usize];
            for (i, &c) in poly.iter().enumerate() {
                for j in 0..=e as usize {
                    next[i + j] += c;
                }
            }
            poly = next;
        }
        poly
    }

    /// All divisors as `(x, Ω(x), ω(x), product over p | x of f(p, v_p(d)))`.
    fn divisors_with<F: Fn(u64, u32) -> f64>(&self, f: F) -> Vec<(f64, u32, u32, f64)> {
        let mut out = vec![(1.0f64, 0u32, 0u32, 1.0f64)];
        for &(p, e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for &(x, big, small, prod) in &out {
                next.push((x, big, small, prod));
                let mut pk = 1.0;
                for k in 1..=e {
                    pk *= p as f64;
                    next.push((x * pk, big + k, small + 1, prod * f(p, e)));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for DetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Accepts a plain determinant (`210`) or a factored form (`3^2*5*7`).
impl FromStr for DetShape {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(d) = s.parse::<u128>() {
            if d == 0 {
                return Err(BoundError::Malformed(s.into()));
            }
            return Ok(DetShape::from_det(d));
        }
        let mut factors: Vec<(u64, u32)> = Vec::new();
        for part in s.split('*') {
            let (p, e) = match part.split_once('^') {
                Some((p, e)) => (p.trim(), e.trim()),
                None => (part.trim(), "1"),
            };
            let p: u64 = p.parse().map_err(|_| BoundError::Malformed(s.into()))?;
            let e: u32 = e.parse().map_err(|_| BoundError::Malformed(s.into()))?;
            if !is_prime(p) {
                return Err(BoundError::NotPrime(p));
            }
            if factors.iter().any(|f| f.0 == p) {
                return Err(BoundError::Repeated(p));
            }
            if e > 0 {
                factors.push((p, e));
            }
        }
        factors.sort();
        Ok(DetShape { factors })
    }
}

/// A real number bracketed by `lower <= x <= upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub lower: f64,
    pub upper: f64,
}

/// Relative error allowance for f64 evaluation of sums of positive terms with logs and roots.
/// Each term carries at most a few dozen roundings, so 1e-12 is a wide margin.
const REL_ERR: f64 = 1e-12;

impl BoundValue {
    pub fn around(x: f64) -> Self {
        BoundValue { lower: x * (1.0 - REL_ERR), upper: x * (1.0 + REL_ERR) }
    }

    pub fn exact(q: &Rational) -> Self {
        BoundValue::around(to_f64(q))
    }

    /// Quotient of positive brackets, conservative on both sides.
    pub fn div(&self, o: &BoundValue) -> BoundValue {
        BoundValue { lower: self.lower / o.upper, upper: self.upper / o.lower }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12e}, {:.12e}]", self.lower, self.upper)
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    let (n, d) = (q.numer(), q.denom());
    // scale to keep both within range
    let shift = (n.bits().max(d.bits()) as i64 - 1000).max(0) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (d >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Squared per-prime factor of `M`: dimension 3 uses `(p-1)/2`, dimension 4 uses
/// `p^2 (p-1) / (2 (p+1))` for squared primes and `p^{3/2}/2` for simple ones. `p = 2` contributes 1.
fn m_factor_sq(p: u64, e: u32, dim: u32) -> Rational {
    if p == 2 {
        return Rational::one();
    }
    let pr = rat_int(p as i128);
    let f = match (dim, e) {
        (3, _) => (&pr - rat_int(1)) / rat_int(2),
        (_, 2) => &pr * &pr * (&pr - rat_int(1)) / (rat_int(2) * (&pr + rat_int(1))),
        _ => return &pr * &pr * &pr / rat_int(4),
    };
    &f * &f
}

fn m_constant(dim: u32) -> Rational {
    if dim == 3 {
        rat(1, 48)
    } else {
        rat(1, 2160)
    }
}

/// `ln` of the unsquared factor of `M` at `p`, in f64.
fn ln_m_factor(p: u64, e: u32, dim: u32) -> f64 {
    if p == 2 {
        return 0.0;
    }
    let x = p as f64;
    match (dim, e) {
        (3, _) => ((x - 1.0) / 2.0).ln(),
        (_, 2) => (x * x * (x - 1.0) / (2.0 * (x + 1.0))).ln(),
        _ => 1.5 * x.ln() - std::f64::consts::LN_2,
    }
}

/// `M(d)^2`, exact. In dimension 4 `M` itself may be irrational.
pub fn m_lower_sq(shape: &DetShape, dim: u32) -> Result<Rational, BoundError> {
    shape.require_fit(dim)?;
    let c = m_constant(dim);
    Ok(shape.factors.iter().fold(&c * &c, |acc, &(p, e)| acc * m_factor_sq(p, e, dim)))
}

/// Lower bound `M(d) <= m(L)` for strongly square free `L` of determinant `d`.
pub fn m_lower(shape: &DetShape, dim: u32) -> Result<BoundValue, BoundError> {
    let sq = m_lower_sq(shape, dim)?;
    Ok(BoundValue::around(to_f64(&sq).sqrt()))
}

/// `2^k/2 + 5/24`: the bound on `1/|O|`-weighted classes of 2-dimensional reflective lattices
/// of determinant with `Ω = k`.
fn two_dim_count(k: u32) -> Rational {
    rat_int(1i128 << k) / rat_int(2) + rat(5, 24)
}

/// Indecomposable 4-dimensional term.
fn n4_head(big: u32) -> Rational {
    let p = |b: i128| rat_int(b.pow(big));
    p(4) * rat(3, 16) + p(3) * rat(2, 32) + p(2) * rat(1, 72) + p(2) * rat(3, 96) + rat(53, 5760)
}

/// `Nref(d)`. With `extended`, the indecomposable 3- and 4-dimensional terms are added and any
/// determinant pattern is allowed.
pub fn nref_upper(shape: &DetShape, dim: u32, extended: bool) -> Result<Rational, BoundError> {
    check_dim(dim)?;
    if !extended {
        shape.require_fit(dim)?;
    }
    let dist = shape.omega_distribution();
    let big = shape.big_omega();
    let mut total = Rational::zero();
    if dim == 4 || extended {
        total += n4_head(big);
    }
    if extended {
        for (k, &c) in dist.iter().enumerate() {
            let k = k as u32;
            total += rat_int(c as i128)
                * (rat_int(3i128.pow(k)) * rat(2, 8) + rat_int(1i128 << k) / rat_int(16) + rat(1, 24));
        }
    }
    for (k, &c) in dist.iter().enumerate() {
        let k = k as u32;
        let term = if dim == 3 {
            two_dim_count(k) / rat_int(2)
        } else {
            two_dim_count(k) * two_dim_count(big - k) / rat_int(4)
        };
        total += rat_int(c as i128) * term;
    }
    Ok(total)
}

/// `Mref(d)`, evaluated in f64 and widened. Dimension 4 uses the product over all `p | d`
/// (the larger of the two readings, so still an upper bound).
pub fn mref_upper(shape: &DetShape, dim: u32) -> Result<BoundValue, BoundError> {
    shape.require_fit(dim)?;
    let two_over_pi = 2.0 / std::f64::consts::PI;
    let value = if dim == 3 {
        shape
            .divisors_with(|p, _| 0.5 * (p as f64).sqrt())
            .into_iter()
            .map(|(x, _, _, prod)| two_over_pi * prod * (1.0 + 0.5 * x.ln()))
            .sum::<f64>()
    } else {
        let c: f64 = shape
            .factors
            .iter()
            .map(|&(p, e)| {
                let p = p as f64;
                if e == 2 {
                    2.0 * p / (2.0 * p - 1.0)
                } else {
                    0.5 * p.sqrt()
                }
            })
            .product();
        let head = to_f64(&n4_head(shape.big_omega()));
        head + shape
            .divisors_with(|_, _| 1.0)
            .into_iter()
            .map(|(x, _, small, _)| 2f64.powi(small as i32 + 1) * 0.25 * two_over_pi * (1.0 + 0.5 * x.ln()) * c)
            .sum::<f64>()
    };
    Ok(BoundValue::around(value))
}

/// Exact test of the necessary condition `Nref(d) / M(d) >= 1`.
pub fn nref_condition(shape: &DetShape, dim: u32) -> Result<bool, BoundError> {
    let n = nref_upper(shape, dim, false)?;
    Ok(&n * &n >= m_lower_sq(shape, dim)?)
}

/// `Nref(d) / M(d)` as a bracket.
pub fn nref_ratio(shape: &DetShape, dim: u32) -> Result<BoundValue, BoundError> {
    let n = nref_upper(shape, dim, false)?;
    let ratio_sq = &n * &n / m_lower_sq(shape, dim)?;
    Ok(BoundValue::around(to_f64(&ratio_sq).sqrt()))
}

/// `Mref(d) / M(d)` as a conservative bracket.
pub fn mref_ratio(shape: &DetShape, dim: u32) -> Result<BoundValue, BoundError> {
    Ok(mref_upper(shape, dim)?.div(&m_lower(shape, dim)?))
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut p = 1;
    while out.len() < k {
        p = next_prime(p);
        out.push(p);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeCountBounds {
    pub dim: u32,
    /// Largest number of squared primes (always 0 in dimension 3).
    pub max_r: usize,
    /// `max_s[r]`: largest number of simple primes with `r` squared ones, `None` if `r` is impossible.
    pub max_s: Vec<Option<usize>>,
}

impl PrimeCountBounds {
    pub fn allows(&self, r: usize, s: usize) -> bool {
        r <= self.max_r && self.max_s.get(r).copied().flatten().is_some_and(|m| s <= m)
    }
}

/// Counts of prime factors. Dimension 3 uses the `Nref` ratio on the first primes; dimension 4
/// uses the `Mref` ratio, first on squares of the first primes for `r`, then over every
/// placement of `r` squared primes among the first `r + s` primes for `s`.
pub fn prime_count_bounds(dim: u32) -> Result<PrimeCountBounds, BoundError> {
    check_dim(dim)?;
    if dim == 3 {
        let mut s = 1;
        while nref_condition(&DetShape::new(&[], &first_primes(s))?, 3)? {
            s += 1;
        }
        return Ok(PrimeCountBounds { dim, max_r: 0, max_s: vec![Some(s - 1)] });
    }
    let mut r = 1;
    while mref_ratio(&DetShape::new(&first_primes(r), &[])?, 4)?.upper >= 1.0 {
        r += 1;
    }
    let max_r = r - 1;
    let mut max_s = Vec::with_capacity(max_r + 1);
    for r in 0..=max_r {
        let mut s = 0;
        loop {
            let pool = first_primes(r + s);
            let all_fail = placements(&pool, r).into_iter().try_fold(true, |acc, (sq, si)| {
                Ok::<bool, BoundError>(acc && mref_ratio(&DetShape::new(&sq, &si)?, 4)?.upper < 1.0)
            })?;
            if all_fail {
                break;
            }
            s += 1;
        }
        max_s.push(s.checked_sub(1));
    }
    Ok(PrimeCountBounds { dim, max_r, max_s })
}

/// Count bound for dimension 3 from the `Mref` ratio (weaker than the `Nref` one).
pub fn mref_count_bound_dim3() -> Result<usize, BoundError> {
    let mut s = 1;
    while mref_ratio(&DetShape::new(&[], &first_primes(s))?, 3)?.upper >= 1.0 {
        s += 1;
    }
    Ok(s - 1)
}

/// All ways to pick `r` of `pool` as squared primes, the rest simple.
fn placements(pool: &[u64], r: usize) -> Vec<(Vec<u64>, Vec<u64>)> {
    let n = pool.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != r {
            continue;
        }
        let (mut sq, mut si) = (Vec::new(), Vec::new());
        for (i, &p) in pool.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sq.push(p)
            } else {
                si.push(p)
            }
        }
        out.push((sq, si));
    }
    out
}

/// Re-evaluates the witness ratios that fix the prime counts; each must be below 1.
pub fn check_witnesses(dim: u32) -> Result<Vec<(String, BoundValue)>, BoundError> {
    check_dim(dim)?;
    let mut out = Vec::new();
    let mut need_below = |name: String, v: BoundValue| {
        if v.upper < 1.0 {
            out.push((name, v));
            Ok(())
        } else {
            Err(BoundError::Witness(format!("{name} = {v} is not below 1")))
        }
    };
    if dim == 3 {
        let ten = DetShape::new(&[], &first_primes(10))?;
        need_below(format!("Nref/M at {ten}"), nref_ratio(&ten, 3)?)?;
        let eleven = DetShape::new(&[], &first_primes(11))?;
        need_below(format!("Mref/M at {eleven}"), mref_ratio(&eleven, 3)?)?;
    } else {
        let ten = DetShape::new(&first_primes(10), &[])?;
        need_below(format!("Mref/M at {ten}"), mref_ratio(&ten, 4)?)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeValueTables {
    pub dim: u32,
    /// Upper bounds for `p_1 < p_2 < ...` (squared primes); empty in dimension 3.
    pub squared: Vec<u64>,
    /// Upper bounds for `q_1 < q_2 < ...` (simple primes).
    pub simple: Vec<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Slot {
    Squared,
    Simple,
}

/// Smallest `M^2` over shapes with `r` squared and `s` simple primes where the `i`-th prime
/// (0-based) of kind `slot` is `fixed`; `None` if no placement exists.
fn min_m_sq(dim: u32, r: usize, s: usize, slot: Slot, i: usize, fixed: u64) -> Option<(Vec<u64>, Vec<u64>)> {
    let (same_total, other_total) = match slot {
        Slot::Squared => (r, s),
        Slot::Simple => (s, r),
    };
    let below = i;
    let above = same_total - i - 1;
    // candidate pool: enough small primes and enough primes right above the fixed one
    let want = r + s + 1;
    let mut pool: Vec<u64> = first_primes(want).into_iter().filter(|&p| p != fixed).collect();
    let mut p = fixed;
    for _ in 0..want {
        p = next_prime(p);
        if !pool.contains(&p) {
            pool.push(p);
        }
    }
    pool.sort();
    let logf = |p: u64, kind: Slot| -> f64 {
        let e = if kind == Slot::Squared { 2 } else { 1 };
        to_f64(&m_factor_sq(p, e, dim)).ln()
    };
    let other_kind = if slot == Slot::Squared { Slot::Simple } else { Slot::Squared };
    // dp over (used below, used above, used other) -> (cost, choices)
    type State = Option<(f64, Vec<(u64, u8)>)>;
    let idx = |a: usize, b: usize, c: usize| (a * (above + 1) + b) * (other_total + 1) + c;
    let mut dp: Vec<State> = vec![None; (below + 1) * (above + 1) * (other_total + 1)];
    dp[idx(0, 0, 0)] = Some((0.0, Vec::new()));
    for &q in &pool {
        let mut next = dp.clone();
        for a in 0..=below {
            for b in 0..=above {
                for c in 0..=other_total {
                    let Some((cost, ch)) = &dp[idx(a, b, c)] else { continue };
                    let mut relax = |na: usize, nb: usize, nc: usize, add: f64, tag: u8| {
                        let cand = cost + add;
                        let slot = &mut next[idx(na, nb, nc)];
                        if slot.as_ref().is_none_or(|(c0, _)| cand < *c0) {
                            let mut v = ch.clone();
                            v.push((q, tag));
                            *slot = Some((cand, v));
                        }
                    };
                    if q < fixed && a < below {
                        relax(a + 1, b, c, logf(q, slot), 0);
                    }
                    if q > fixed && b < above {
                        relax(a, b + 1, c, logf(q, slot), 0);
                    }
                    if c < other_total {
                        relax(a, b, c + 1, logf(q, other_kind), 1);
                    }
                }
            }
        }
        dp = next;
    }
    let (_, choice) = dp[idx(below, above, other_total)].clone()?;
    let (mut sq, mut si) = (Vec::new(), Vec::new());
    let mut put = |p: u64, kind: Slot| if kind == Slot::Squared { sq.push(p) } else { si.push(p) };
    put(fixed, slot);
    for (q, tag) in choice {
        put(q, if tag == 0 { slot } else { other_kind });
    }
    Some((sq, si))
}

fn feasible(dim: u32, r: usize, s: usize, slot: Slot, i: usize, p: u64) -> bool {
    match min_m_sq(dim, r, s, slot, i, p) {
        Some((sq, si)) => DetShape::new(&sq, &si).and_then(|sh| nref_condition(&sh, dim)).unwrap_or(false),
        None => false,
    }
}

/// Largest prime `p` for the `i`-th slot with `Nref/M >= 1` when all other primes are as small as
/// allowed, or `None` if even the smallest admissible value fails.
fn largest_prime(dim: u32, r: usize, s: usize, slot: Slot, i: usize, primes: &[u64]) -> Option<u64> {
    let start = primes.iter().position(|_| true)?;
    let ok = |k: usize| feasible(dim, r, s, slot, i, primes[k]);
    // the i-th smallest prime is the least candidate
    let lo0 = start + i;
    if lo0 >= primes.len() || !ok(lo0) {
        return None;
    }
    let (mut lo, mut hi) = (lo0, primes.len() - 1);
    assert!(!ok(hi), "prime table too short for the value bound search");
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    Some(primes[lo])
}

/// Per-position prime bounds: for each slot, the largest prime keeping `Nref/M >= 1` with all
/// other primes minimal, maximized over admissible counts.
pub fn prime_value_bounds(dim: u32) -> Result<PrimeValueTables, BoundError> {
    let counts = prime_count_bounds(dim)?;
    let primes = crate::arith::primes_up_to(if dim == 3 { 20_000 } else { 200_000 });
    let table = |slot: Slot, positions: usize| -> Vec<u64> {
        (0..positions)
            .map(|i| {
                let mut best = 0;
                for r in 0..=counts.max_r {
                    let Some(ms) = counts.max_s[r] else { continue };
                    for s in 0..=ms {
                        let fits = match slot {
                            Slot::Squared => i < r,
                            Slot::Simple => i < s,
                        };
                        if fits {
                            if let Some(p) = largest_prime(dim, r, s, slot, i, &primes) {
                                best = best.max(p);
                            }
                        }
                    }
                }
                best
            })
            .collect()
    };
    let max_simple = counts.max_s.iter().flatten().copied().max().unwrap_or(0);
    let max_squared = (0..=counts.max_r).filter(|&r| counts.max_s[r].is_some()).max().unwrap_or(0);
    let squared = if dim == 3 { Vec::new() } else { table(Slot::Squared, max_squared) };
    let simple = table(Slot::Simple, max_simple);
    Ok(PrimeValueTables {
        dim,
        squared: squared.into_iter().take_while(|&p| p > 0).collect(),
        simple: simple.into_iter().take_while(|&p| p > 0).collect(),
    })
}

/// Lower bound on `m(K)/m(L)` for `K` a Watson pre-image of `L` at an odd prime `p ∤ det L`:
/// `(1 + 1/p)^{-2} p^2 (1 - p^{-2})` in dimension 3, `(1/5)(1 + 1/p)^{-2} p^3 (1 - p^{-2})` in dimension 4.
pub fn growth_factor(p: u64, dim: u32) -> Rational {
    let pr = rat_int(p as i128);
    let base = (&pr / (&pr + rat_int(1))).pow(2) * (&pr * &pr - rat_int(1));
    if dim == 3 {
        base
    } else {
        base * &pr / rat_int(5)
    }
}

/// Bound on `Nref(K)/Nref(L)` for the same pre-images.
pub fn nref_growth_constant(dim: u32) -> i128 {
    if dim == 3 {
        81
    } else {
        5103
    }
}

/// Largest odd prime `p ∤ det` at which a totally reflective Watson pre-image can still exist:
/// `C Nref(L) / m(L) >= growth(p)`. `None` when no odd prime qualifies.
pub fn watson_prime_cutoff(nref: &Rational, mass: &Rational, dim: u32, det: i128) -> Option<u64> {
    let limit = rat_int(nref_growth_constant(dim)) * nref / mass;
    let mut best = None;
    let mut p = 3;
    while growth_factor(p, dim) <= limit {
        if det % p as i128 != 0 {
            best = Some(p);
        }
        p = next_prime(p);
    }
    best
}

/// The odd primes `p ∤ det`, `p <= cutoff`, to be searched for Watson pre-images.
pub fn watson_primes(nref: &Rational, mass: &Rational, dim: u32, det: i128) -> Vec<u64> {
    let Some(cut) = watson_prime_cutoff(nref, mass, dim, det) else {
        return Vec::new();
    };
    crate::arith::primes_up_to(cut).into_iter().filter(|&p| p != 2 && det % p as i128 != 0).collect()
}

/// Fast exact test of `Nref/M >= 1` for a strongly square free shape given by its
/// squared and simple primes, with `Nref` taken from a precomputed table.
struct RatioTest {
    dim: u32,
    nref: Vec<Vec<(Rational, f64)>>,
}

impl RatioTest {
    fn new(dim: u32, max_r: usize, max_s: usize) -> Self {
        let nref = (0..=max_r)
            .map(|r| {
                (0..=max_s)
                    .map(|s| {
                        let sh = DetShape { factors: (0..r).map(|_| (0, 2)).chain((0..s).map(|_| (0, 1))).collect() };
                        let v = nref_upper(&sh, dim, false).expect("shape fits");
                        let lg = to_f64(&v).ln();
                        (v, lg)
                    })
                    .collect()
            })
            .collect();
        RatioTest { dim, nref }
    }

    fn holds(&self, sq: &[u64], si: &[u64]) -> bool {
        let (n, ln_n) = &self.nref[sq.len()][si.len()];
        let c = to_f64(&m_constant(self.dim)).ln();
        let lf = |p: u64, e: u32| ln_m_factor(p, e, self.dim);
        let ln_m = c + sq.iter().map(|&p| lf(p, 2)).sum::<f64>() + si.iter().map(|&p| lf(p, 1)).sum::<f64>();
        let gap = ln_n - ln_m;
        if gap.abs() > 1e-9 {
            return gap > 0.0;
        }
        let m_sq = DetShape::new(sq, si).and_then(|s| m_lower_sq(&s, self.dim)).expect("valid shape");
        n * n >= m_sq
    }
}

/// All determinants of strongly square free shapes within the prime-count bounds satisfying
/// `Nref/M >= 1`, sorted. Primes are assigned in increasing order; a partial assignment is kept
/// only if its cheapest completion (the next unused primes, squared slots first) passes, and
/// since the ratio falls in every prime, the first failing prime ends the loop at each level.
pub fn admissible_determinants(dim: u32) -> Result<Vec<u128>, BoundError> {
    let counts = prime_count_bounds(dim)?;
    let max_s_all = counts.max_s.iter().flatten().copied().max().unwrap_or(0);
    let test = RatioTest::new(dim, counts.max_r, max_s_all);
    let mut out = Vec::new();
    struct Search<'a> {
        dim: u32,
        counts: &'a PrimeCountBounds,
        test: &'a RatioTest,
        out: &'a mut Vec<u128>,
    }
    impl Search<'_> {
        fn completes(&self, sq: &[u64], si: &[u64], last: u64) -> bool {
            let mut extra = Vec::new();
            let mut p = last;
            for r2 in sq.len()..=self.counts.max_r {
                let Some(ms) = self.counts.max_s[r2] else { continue };
                for s2 in si.len()..=ms {
                    let need = (r2 - sq.len()) + (s2 - si.len());
                    while extra.len() < need {
                        p = next_prime(p);
                        extra.push(p);
                    }
                    let mut a = sq.to_vec();
                    a.extend_from_slice(&extra[..r2 - sq.len()]);
                    let mut b = si.to_vec();
                    b.extend_from_slice(&extra[r2 - sq.len()..need]);
                    if self.test.holds(&a, &b) {
                        return true;
                    }
                }
            }
            false
        }

        fn rec(&mut self, sq: &mut Vec<u64>, si: &mut Vec<u64>, last: u64) {
            if self.counts.allows(sq.len(), si.len()) && self.test.holds(sq, si) {
                let shape = DetShape::new(sq, si).expect("distinct primes");
                self.out.push(shape.det());
            }
            let kinds: &[bool] = if self.dim == 3 { &[false] } else { &[true, false] };
            for &squared in kinds {
                let mut p = last;
                loop {
                    p = next_prime(p);
                    let v = if squared { &mut *sq } else { &mut *si };
                    v.push(p);
                    let ok = sq.len() <= self.counts.max_r && self.completes(sq, si, p);
                    if ok {
                        self.rec(sq, si, p);
                    }
                    let v = if squared { &mut *sq } else { &mut *si };
                    v.pop();
                    if !ok {
                        break;
                    }
                }
            }
        }
    }
    let mut search = Search { dim, counts: &counts, test: &test, out: &mut out };
    search.rec(&mut Vec::new(), &mut Vec::new(), 1);
    out.sort();
    Ok(out)
}

/// `Ω`-free helper used by reports: the exact value of `M(d)` when rational (dimension 3 always).
pub fn m_lower_exact_dim3(shape: &DetShape) -> Result<Rational, BoundError> {
    shape.require_fit(3)?;
    Ok(shape.factors.iter().fold(m_constant(3), |acc, &(p, _)| {
        if p == 2 {
            acc
        } else {
            acc * Rational::new(BigInt::from(p - 1), BigInt::from(2))
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn m_lower_examples() {
        let s = DetShape::from_det(6);
        assert_eq!(m_lower_exact_dim3(&s).unwrap(), rat(1, 48));
        assert_eq!(m_lower_sq(&s, 3).unwrap(), rat(1, 48 * 48));
        assert_eq!(m_lower_sq(&DetShape::from_det(1), 4).unwrap(), rat(1, 2160 * 2160));
        assert_eq!(m_lower_sq(&DetShape::from_det(4), 4).unwrap(), rat(1, 2160 * 2160));
        // 3^2: (1/2) 9 (2/4) = 9/4
        assert_eq!(m_lower_sq(&DetShape::from_det(9), 4).unwrap(), rat(81, 16) / rat_int(2160 * 2160));
        assert!(m_lower_sq(&DetShape::from_det(9), 3).is_err());
    }

    #[test]
    fn nref_examples() {
        assert_eq!(nref_upper(&DetShape::from_det(1), 3, false).unwrap(), rat(17, 48));
        let head = rat(3, 16) + rat(2, 32) + rat(1, 72) + rat(3, 96) + rat(53, 5760);
        assert_eq!(n4_head(0), head);
        // d = 1: head + (1/4)(17/24)^2
        assert_eq!(nref_upper(&DetShape::from_det(1), 4, false).unwrap(), head.clone() + rat(289, 576) / rat_int(4));
        // d = p: (1/2)(17/24) + (1/2)(1 + 5/24)
        assert_eq!(nref_upper(&DetShape::from_det(5), 3, false).unwrap(), rat(17, 48) + rat(29, 48));
        let e = nref_upper(&DetShape::from_det(1), 3, true).unwrap();
        assert_eq!(e, rat(17, 48) + head + rat(2, 8) + rat(1, 16) + rat(1, 24));
    }

    #[test]
    fn mref_examples() {
        let v = mref_upper(&DetShape::from_det(1), 3).unwrap();
        assert!(v.contains(2.0 / std::f64::consts::PI));
        let head = to_f64(&n4_head(0));
        let v = mref_upper(&DetShape::from_det(1), 4).unwrap();
        assert!(v.contains(head + 2.0 * 0.25 * 2.0 / std::f64::consts::PI));
    }

    #[test]
    fn witnesses_hold() {
        assert_eq!(check_witnesses(3).unwrap().len(), 2);
        assert_eq!(check_witnesses(4).unwrap().len(), 1);
        assert_eq!(mref_count_bound_dim3().unwrap(), 10);
    }

    #[test]
    fn dim3_counts_and_values() {
        let c = prime_count_bounds(3).unwrap();
        assert_eq!(c.max_s, vec![Some(9)]);
        let t = prime_value_bounds(3).unwrap();
        assert_eq!(t.simple.len(), 9);
        // exact evaluation of the ratio at the table entries
        assert_eq!(t.simple[0], 89);
        assert_eq!(t.simple[8], 37);
    }

    #[test]
    fn growth_and_cutoff() {
        assert_eq!(growth_factor(3, 3), rat(9, 2));
        assert_eq!(growth_factor(3, 4), rat(27, 10));
        // tiny ratio: no odd prime qualifies
        assert_eq!(watson_prime_cutoff(&rat(1, 1), &rat(1000, 1), 3, 1), None);
        let cut = watson_prime_cutoff(&rat(1, 1), &rat(1, 1), 3, 1).unwrap();
        assert!(growth_factor(cut, 3) <= rat(81, 1) && growth_factor(next_prime(cut), 3) > rat(81, 1));
        assert!(!watson_primes(&rat(1, 1), &rat(1, 1), 3, 3).contains(&3));
    }

    #[test]
    fn shape_parsing() {
        let s: DetShape = "3^2*5*7".parse().unwrap();
        assert_eq!(s.det(), 315);
        assert_eq!((s.r(), s.s()), (1, 2));
        assert_eq!(s.to_string(), "3^2*5*7");
        assert_eq!("315".parse::<DetShape>().unwrap(), s);
        assert_eq!("4*5".parse::<DetShape>(), Err(BoundError::NotPrime(4)));
        assert_eq!("5*5".parse::<DetShape>(), Err(BoundError::Repeated(5)));
    }

    fn arb_shape(dim: u32) -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
        let max_sq: usize = if dim == 3 { 0 } else { 3 };
        (proptest::sample::subsequence(first_primes(12), 0..6), 0..=max_sq).prop_map(move |(ps, r): (Vec<u64>, usize)| {
            let r = r.min(ps.len());
            (ps[..r].to_vec(), ps[r..].to_vec())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]
        #[test]
        fn ratio_decreases_under_prime_increase((sq, si) in arb_shape(4), pick in 0usize..6) {
            let all: Vec<u64> = sq.iter().chain(si.iter()).copied().collect();
            prop_assume!(!all.is_empty());
            let k = pick % all.len();
            let mut q = next_prime(all[k]);
            while all.contains(&q) { q = next_prime(q); }
            let (mut sq2, mut si2) = (sq.clone(), si.clone());
            if k < sq.len() { sq2[k] = q } else { si2[k - sq.len()] = q }
            let a = DetShape::new(&sq, &si).unwrap();
            let b = DetShape::new(&sq2, &si2).unwrap();
            for dim in [3u32, 4] {
                if !a.fits(dim) { continue; }
                let ra = nref_upper(&a, dim, false).unwrap().pow(2) / m_lower_sq(&a, dim).unwrap();
                let rb = nref_upper(&b, dim, false).unwrap().pow(2) / m_lower_sq(&b, dim).unwrap();
                if all[k] == 2 { prop_assert!(rb <= ra) } else { prop_assert!(rb < ra) }
            }
        }

        #[test]
        fn nref_extended_dominates((sq, si) in arb_shape(4)) {
            let a = DetShape::new(&sq, &si).unwrap();
            for dim in [3u32, 4] {
                if !a.fits(dim) { continue; }
                prop_assert!(nref_upper(&a, dim, true).unwrap() > nref_upper(&a, dim, false).unwrap());
            }
        }
    }
}
