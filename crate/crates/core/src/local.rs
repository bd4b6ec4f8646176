//! p-adic invariants: Jordan decompositions, local and global genus symbols, the 2-adic
//! canonical form, the text grammar, and the partial dual and Watson transforms.

use crate::arith::{is_prime, kronecker, prime_divisors, valuation};
use crate::lattice::{lattice_from_generators, GramLattice, IMat, LatticeError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("malformed genus symbol: {0}")]
    Malformed(String),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDims(String),
    #[error("no such genus: {0}")]
    Nonexistent(String),
    #[error("rank cannot be inferred; pass it explicitly or include the 1-factor")]
    MissingRank,
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// One Jordan constituent `(p^scale)^{eps, dim}`; at 2 also its type and oddity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constituent {
    pub scale: u32,
    pub dim: u32,
    pub eps: i8,
    /// Type I (odd) at p = 2. Always false at odd primes.
    pub odd: bool,
    /// Oddity mod 8 at p = 2 for type I constituents, otherwise 0.
    pub oddity: u8,
}

impl Constituent {
    pub fn odd_p(scale: u32, dim: u32, eps: i8) -> Self {
        Constituent { scale, dim, eps, odd: false, oddity: 0 }
    }

    pub fn two(scale: u32, dim: u32, eps: i8, odd: bool, oddity: u8) -> Self {
        Constituent { scale, dim, eps, odd, oddity: if odd { oddity % 8 } else { 0 } }
    }

    /// Whether a 2-adic unimodular form with these invariants exists.
    pub fn is_valid_dyadic(&self) -> bool {
        if self.dim == 0 {
            return self.eps == 1 && !self.odd && self.oddity == 0;
        }
        if !self.odd {
            return self.dim % 2 == 0 && self.oddity == 0;
        }
        if self.oddity as u32 % 2 != self.dim % 2 {
            return false;
        }
        match (self.dim, self.eps) {
            (1, 1) => matches!(self.oddity, 1 | 7),
            (1, _) => matches!(self.oddity, 3 | 5),
            (2, 1) => matches!(self.oddity, 0 | 2 | 6),
            (2, _) => matches!(self.oddity, 2 | 4 | 6),
            _ => true,
        }
    }

    fn merge(a: Option<&Constituent>, b: Option<&Constituent>, scale: u32) -> Option<Constituent> {
        match (a, b) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(Constituent { scale, ..*x }),
            (Some(x), Some(y)) => Some(Constituent {
                scale,
                dim: x.dim + y.dim,
                eps: x.eps * y.eps,
                odd: x.odd || y.odd,
                oddity: (x.oddity + y.oddity) % 8,
            }),
        }
    }
}

/// All valid 2-adic unimodular constituents of the given dimension at the given scale.
pub fn dyadic_options(scale: u32, dim: u32) -> Vec<Constituent> {
    if dim == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    for eps in [1i8, -1] {
        if dim % 2 == 0 {
            out.push(Constituent::two(scale, dim, eps, false, 0));
        }
        for t in 0..8u8 {
            let c = Constituent::two(scale, dim, eps, true, t);
            if c.is_valid_dyadic() {
                out.push(c);
            }
        }
    }
    out
}

/// The Jordan constituents of a lattice at one prime, sorted by scale, zero-dimensional ones omitted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalSymbol {
    pub p: u64,
    pub constituents: Vec<Constituent>,
}

impl LocalSymbol {
    pub fn get(&self, scale: u32) -> Option<&Constituent> {
        self.constituents.iter().find(|c| c.scale == scale)
    }

    pub fn dim_at(&self, scale: u32) -> u32 {
        self.get(scale).map_or(0, |c| c.dim)
    }

    pub fn max_scale(&self) -> u32 {
        self.constituents.iter().map(|c| c.scale).max().unwrap_or(0)
    }

    pub fn min_scale(&self) -> u32 {
        self.constituents.iter().map(|c| c.scale).min().unwrap_or(0)
    }

    pub fn rank(&self) -> u32 {
        self.constituents.iter().map(|c| c.dim).sum()
    }

    /// Exponent of p in the determinant.
    pub fn det_exponent(&self) -> u32 {
        self.constituents.iter().map(|c| c.scale * c.dim).sum()
    }

    fn normalize(mut self) -> Self {
        self.constituents.retain(|c| c.dim > 0);
        self.constituents.sort();
        self
    }

    /// 2-adic oddity invariant: oddities plus 4 for every odd-power scale with sign -1.
    pub fn total_oddity(&self) -> u32 {
        self.constituents
            .iter()
            .map(|c| c.oddity as u32 + if c.scale % 2 == 1 && c.eps < 0 { 4 } else { 0 })
            .sum::<u32>()
            % 8
    }

    /// p-excess for odd p.
    pub fn excess(&self) -> u32 {
        let p8 = (self.p % 8) as u32;
        self.constituents
            .iter()
            .map(|c| {
                let q = (0..c.scale).fold(1u32, |a, _| a * p8 % 8);
                c.dim * ((q + 7) % 8) + if c.scale % 2 == 1 && c.eps < 0 { 4 } else { 0 }
            })
            .sum::<u32>()
            % 8
    }
}

/// Jordan blocks at p: for odd p all 1x1, at 2 also even 2x2 blocks `[[2a,b],[b,2c]]` with b odd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanChain {
    pub p: u64,
    pub blocks: Vec<JordanBlock>,
}

/// A p-adically unimodular block scaled by `p^scale`; `unit` holds the unit Gram modulo `p^precision`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanBlock {
    pub scale: u32,
    pub unit: Vec<i128>,
    pub precision: u32,
}

impl JordanBlock {
    pub fn size(&self) -> usize {
        if self.unit.len() == 1 {
            1
        } else {
            2
        }
    }
}

pub fn jordan_decompose(l: &GramLattice, p: u64) -> JordanChain {
    let n = l.rank();
    let pp = p as i128;
    let v_det = valuation(l.determinant(), p).0;
    // each even 2x2 pivot at scale v costs v bits of precision
    let k = if p == 2 { 2 * v_det + 3 } else { v_det + 1 };
    assert!((k as f64) * (p as f64).log2() < 125.0, "determinant too large for the Jordan decomposition");
    let m = pp.pow(k);
    // plain products while they fit, modular ones beyond
    let wide = (k as f64) * (p as f64).log2() >= 61.0;
    let mm = |x: i128, y: i128| if wide { mulmod(x, y, m) } else { x * y };
    let md = |x: i128| x.rem_euclid(m);
    let mut a: Vec<i128> = l.wide().into_iter().map(md).collect();
    let val = |x: i128| if x == 0 { k } else { valuation(x, p).0.min(k) };
    let mut live: Vec<usize> = (0..n).collect();
    let mut blocks = Vec::new();
    while !live.is_empty() {
        let mut best = (k + 1, 0usize, 0usize);
        for (ii, &i) in live.iter().enumerate() {
            for &j in &live[ii..] {
                let v = val(a[i * n + j]);
                // prefer diagonal pivots on ties
                if v < best.0 || (v == best.0 && i == j && best.1 != best.2) {
                    best = (v, i, j);
                }
            }
        }
        let (v, i, j) = best;
        assert!(v < k, "degenerate modulo {p}^{k}: {l:?}");
        let pv = pp.pow(v);
        if i == j || p != 2 {
            let i = if i != j {
                // odd p: e_i + e_j has norm of valuation v
                for r in 0..n {
                    a[i * n + r] = md(a[i * n + r] + a[j * n + r]);
                }
                for r in 0..n {
                    a[r * n + i] = md(a[r * n + i] + a[r * n + j]);
                }
                i
            } else {
                i
            };
            let u = a[i * n + i] / pv;
            for &r in &live {
                if r == i {
                    continue;
                }
                let f = a[r * n + i] / pv;
                // e_r <- u e_r - f e_i
                for c in 0..n {
                    a[r * n + c] = md(mm(u, a[r * n + c]) - mm(f, a[i * n + c]));
                }
                for c in 0..n {
                    a[c * n + r] = md(mm(u, a[c * n + r]) - mm(f, a[c * n + i]));
                }
            }
            blocks.push(JordanBlock { scale: v, unit: vec![u.rem_euclid(pp.pow(k - v))], precision: k - v });
            live.retain(|&x| x != i);
        } else {
            let (x, y, z) = (a[i * n + i], a[i * n + j], a[j * n + j]);
            let det_b = md(mm(x, z) - mm(y, y));
            let w = det_b / (pv * pv);
            for &r in &live {
                if r == i || r == j {
                    continue;
                }
                let (ri, rj) = (a[r * n + i], a[r * n + j]);
                let ci = md(mm(z, ri) - mm(y, rj)) / (pv * pv);
                let cj = md(mm(x, rj) - mm(y, ri)) / (pv * pv);
                // e_r <- w e_r - ci e_i - cj e_j
                for c in 0..n {
                    a[r * n + c] = md(mm(w, a[r * n + c]) - mm(ci, a[i * n + c]) - mm(cj, a[j * n + c]));
                }
                for c in 0..n {
                    a[c * n + r] = md(mm(w, a[c * n + r]) - mm(ci, a[c * n + i]) - mm(cj, a[c * n + j]));
                }
            }
            let q = pp.pow(k - v);
            blocks.push(JordanBlock {
                scale: v,
                unit: vec![(x / pv) % q, (y / pv) % q, (y / pv) % q, (z / pv) % q],
                precision: k - v,
            });
            live.retain(|&t| t != i && t != j);
        }
    }
    blocks.sort_by_key(|b| b.scale);
    JordanChain { p, blocks }
}

/// `x y mod m` for `0 < m < 2^126` without overflow.
fn mulmod(x: i128, y: i128, m: i128) -> i128 {
    let m = m as u128;
    let (mut x, mut y) = (x.rem_euclid(m as i128) as u128, y.rem_euclid(m as i128) as u128);
    let mut r = 0u128;
    while y > 0 {
        if y & 1 == 1 {
            r = (r + x) % m;
        }
        x = (x << 1) % m;
        y >>= 1;
    }
    r as i128
}

impl JordanChain {
    pub fn symbol(&self) -> LocalSymbol {
        let p = self.p;
        let mut cons: Vec<Constituent> = Vec::new();
        for b in &self.blocks {
            let (dim, unit_det, odd, oddity) = if b.size() == 1 {
                (1, b.unit[0], true, b.unit[0].rem_euclid(8) as u8)
            } else {
                (2, b.unit[0] * b.unit[3] - b.unit[1] * b.unit[2], false, 0)
            };
            let eps = kronecker(unit_det, p) as i8;
            let c = if p == 2 {
                Constituent::two(b.scale, dim, eps, odd, oddity)
            } else {
                Constituent::odd_p(b.scale, dim, eps)
            };
            match cons.last_mut() {
                Some(last) if last.scale == b.scale => {
                    *last = Constituent::merge(Some(last), Some(&c), b.scale).expect("nonempty");
                }
                _ => cons.push(c),
            }
        }
        LocalSymbol { p, constituents: cons }
    }
}

pub fn local_symbol(l: &GramLattice, p: u64) -> LocalSymbol {
    if p != 2 && l.determinant() % p as i128 != 0 {
        return LocalSymbol {
            p,
            constituents: vec![Constituent::odd_p(0, l.rank() as u32, kronecker(l.determinant(), p) as i8)],
        };
    }
    jordan_decompose(l, p).symbol()
}

/// Sign walking and oddity fusion; equal genera give equal output.
pub fn canonical_dyadic(raw: &[Constituent]) -> Vec<Constituent> {
    let mut sym: Vec<Constituent> = raw.iter().copied().filter(|c| c.dim > 0).collect();
    sym.sort();
    let r = sym.len();
    let mut compartments: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < r {
        if sym[i].odd {
            let mut v = sym[i].scale;
            let mut c = Vec::new();
            while i < r && sym[i].odd && sym[i].scale == v {
                c.push(i);
                i += 1;
                v += 1;
            }
            compartments.push(c);
        } else {
            i += 1;
        }
    }
    for c in &compartments {
        let total: u32 = c.iter().map(|&k| sym[k].oddity as u32).sum();
        for &k in c {
            sym[k].oddity = 0;
        }
        sym[c[0]].oddity = (total % 8) as u8;
    }
    if compartments.is_empty() {
        return sym;
    }
    let mut trains: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize];
    for i in 1..r {
        let (prev, c) = (&sym[i - 1], &sym[i]);
        let gap = c.scale - prev.scale;
        let split = gap > 2 || (gap == 2 && !(c.odd && prev.odd)) || (gap == 1 && !prev.odd && !c.odd);
        if split {
            trains.push(std::mem::take(&mut cur));
        }
        cur.push(i);
    }
    trains.push(cur);
    for train in &trains {
        for &t1 in train.iter().skip(1).rev() {
            if sym[t1].eps == -1 {
                sym[t1].eps = 1;
                sym[t1 - 1].eps = -sym[t1 - 1].eps;
                for c in &compartments {
                    if c.contains(&(t1 - 1)) || c.contains(&t1) {
                        sym[c[0]].oddity = (sym[c[0]].oddity + 4) % 8;
                    }
                }
            }
        }
    }
    sym
}

/// A global genus symbol of a positive definite lattice: local symbols at 2 and at every odd
/// prime dividing the determinant. The 2-adic part is stored as a valid Jordan realization;
/// `shown` is the 2-adic list used for printing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenusSymbol {
    rank: u32,
    locals: Vec<LocalSymbol>,
    shown: Vec<Constituent>,
    key: String,
}

impl PartialEq for GenusSymbol {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}
impl Eq for GenusSymbol {}
impl std::hash::Hash for GenusSymbol {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.key.hash(h)
    }
}
impl PartialOrd for GenusSymbol {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for GenusSymbol {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.rank, self.det(), &self.key).cmp(&(o.rank, o.det(), &o.key))
    }
}

fn det_of(locals: &[LocalSymbol]) -> i128 {
    locals
        .iter()
        .map(|l| (l.p as i128).pow(l.det_exponent()))
        .product()
}

impl GenusSymbol {
    /// Builds a symbol from valid local data, checking dimensions and the global conditions.
    pub fn new(rank: u32, locals: Vec<LocalSymbol>) -> Result<Self, SymbolError> {
        let locals = Self::tidy(rank, locals)?;
        Self::check(rank, &locals)?;
        Ok(Self::assemble(rank, locals))
    }

    fn tidy(rank: u32, locals: Vec<LocalSymbol>) -> Result<Vec<LocalSymbol>, SymbolError> {
        let mut out: Vec<LocalSymbol> = Vec::new();
        for l in locals {
            if !is_prime(l.p) {
                return Err(SymbolError::NotPrime(l.p));
            }
            let l = l.normalize();
            if l.rank() != rank {
                return Err(SymbolError::InconsistentDims(format!(
                    "dimensions at {} sum to {}, rank is {rank}",
                    l.p,
                    l.rank()
                )));
            }
            let trivial = l.p != 2 && l.max_scale() == 0;
            if !trivial {
                out.push(l);
            }
        }
        if !out.iter().any(|l| l.p == 2) {
            return Err(SymbolError::Malformed("missing 2-adic symbol".into()));
        }
        out.sort_by_key(|l| l.p);
        for w in out.windows(2) {
            if w[0].p == w[1].p {
                return Err(SymbolError::Malformed(format!("prime {} repeated", w[0].p)));
            }
        }
        Ok(out)
    }

    fn check(rank: u32, locals: &[LocalSymbol]) -> Result<(), SymbolError> {
        let det = det_of(locals);
        let mut excess = 0u32;
        for l in locals {
            let unit = valuation(det, l.p).1;
            let prod: i32 = l.constituents.iter().map(|c| c.eps as i32).product();
            if prod != kronecker(unit, l.p) {
                return Err(SymbolError::Nonexistent(format!("sign product fails at {}", l.p)));
            }
            if l.p == 2 {
                if let Some(c) = l.constituents.iter().find(|c| !c.is_valid_dyadic()) {
                    return Err(SymbolError::Nonexistent(format!("no 2-adic form {c:?}")));
                }
            } else {
                excess += l.excess();
            }
        }
        let two = locals.iter().find(|l| l.p == 2).expect("tidy guarantees 2");
        if (rank + excess) % 8 != two.total_oddity() {
            return Err(SymbolError::Nonexistent("oddity formula fails".into()));
        }
        Ok(())
    }

    fn assemble(rank: u32, locals: Vec<LocalSymbol>) -> Self {
        let two = &locals.iter().find(|l| l.p == 2).expect("2-adic").constituents;
        let canon = canonical_dyadic(two);
        let mut g = GenusSymbol { rank, locals, shown: canon, key: String::new() };
        g.key = format!("{}:{}", rank, g.render(&g.shown));
        g
    }

    pub fn from_lattice(l: &GramLattice) -> Self {
        let d = l.determinant();
        let mut primes: BTreeSet<u64> = prime_divisors(d as u128).into_iter().collect();
        primes.insert(2);
        let locals = primes.into_iter().map(|p| local_symbol(l, p)).collect();
        GenusSymbol::new(l.rank() as u32, locals).unwrap_or_else(|e| panic!("genus of {l:?}: {e}"))
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn det(&self) -> i128 {
        det_of(&self.locals)
    }

    pub fn locals(&self) -> &[LocalSymbol] {
        &self.locals
    }

    /// Local symbol at p; for p not dividing 2 det this is the implied unimodular symbol.
    pub fn local(&self, p: u64) -> LocalSymbol {
        if let Some(l) = self.locals.iter().find(|l| l.p == p) {
            return l.clone();
        }
        LocalSymbol {
            p,
            constituents: vec![Constituent::odd_p(0, self.rank, kronecker(self.det(), p) as i8)],
        }
    }

    pub fn two_adic(&self) -> &[Constituent] {
        &self.locals.iter().find(|l| l.p == 2).expect("2-adic").constituents
    }

    pub fn primes(&self) -> Vec<u64> {
        self.locals.iter().map(|l| l.p).collect()
    }

    /// Odd primes dividing the determinant.
    pub fn odd_primes(&self) -> Vec<u64> {
        self.locals.iter().map(|l| l.p).filter(|&p| p != 2).collect()
    }

    pub fn is_even(&self) -> bool {
        self.two_adic().iter().find(|c| c.scale == 0).map_or(true, |c| !c.odd)
    }

    pub fn is_primitive(&self) -> bool {
        self.locals.iter().all(|l| l.min_scale() == 0)
    }

    pub fn is_square_free(&self) -> bool {
        self.locals.iter().all(|l| l.max_scale() <= 1)
    }

    pub fn is_square_free_at(&self, p: u64) -> bool {
        self.local(p).max_scale() <= 1
    }

    pub fn is_strongly_square_free(&self) -> bool {
        self.is_square_free() && self.locals.iter().all(|l| l.dim_at(0) >= l.dim_at(1))
    }

    /// Canonical dedup key; equal iff the genera are equal.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// The canonical text form (printed without the rank).
    pub fn canonical_string(&self) -> String {
        self.render(&canonical_dyadic(self.two_adic()))
    }

    fn render(&self, two: &[Constituent]) -> String {
        let zero = two.iter().find(|c| c.scale == 0);
        let prefix = if zero.map_or(false, |c| c.odd) { "I" } else { "II" };
        let mut s = String::new();
        let sign = |e: i8| if e > 0 { '+' } else { '-' };
        for c in two.iter().filter(|c| c.scale > 0) {
            let sub = if c.odd { c.oddity.to_string() } else { "{II}".to_string() };
            s += &format!("{}_{}^{{{}{}}}", 1u128 << c.scale, sub, sign(c.eps), c.dim);
        }
        for l in self.locals.iter().filter(|l| l.p != 2) {
            for c in l.constituents.iter().filter(|c| c.scale > 0) {
                s += &format!("{}^{{{}{}}}", (l.p as u128).pow(c.scale), sign(c.eps), c.dim);
            }
        }
        if s.is_empty() {
            if let Some(c) = zero {
                let sub = if c.odd { c.oddity.to_string() } else { "{II}".to_string() };
                s = format!("1_{}^{{{}{}}}", sub, sign(c.eps), c.dim);
            }
        }
        format!("{prefix}({s})")
    }

    /// Parses the compact text form. `rank` may be omitted when the 1-factor is written out.
    pub fn parse(text: &str, rank: Option<u32>) -> Result<Self, SymbolError> {
        let spec = parse_text(text)?;
        let explicit_one = spec.factors.iter().any(|f| f.q == 1);
        let rank = match (rank, explicit_one) {
            (Some(r), _) => r,
            (None, true) => spec.factors.iter().filter(|f| f.p == 2 || f.q == 1).map(|f| f.dim).sum(),
            (None, false) => return Err(SymbolError::MissingRank),
        };
        if rank == 0 {
            return Err(SymbolError::InconsistentDims("rank must be positive".into()));
        }
        // group factors by prime
        let mut by_prime: std::collections::BTreeMap<u64, Vec<Constituent>> = Default::default();
        by_prime.entry(2).or_default();
        for f in &spec.factors {
            let c = if f.p == 2 || f.q == 1 {
                match f.sub {
                    Some(Sub::Odd(t)) => Constituent::two(f.scale, f.dim, f.eps, true, t),
                    Some(Sub::Even) => Constituent::two(f.scale, f.dim, f.eps, false, 0),
                    None => return Err(SymbolError::Malformed(format!("2-adic factor {} needs a subscript", f.q))),
                }
            } else {
                if f.sub.is_some() {
                    return Err(SymbolError::Malformed(format!("odd factor {} has a subscript", f.q)));
                }
                Constituent::odd_p(f.scale, f.dim, f.eps)
            };
            let p = if f.q == 1 { 2 } else { f.p };
            let list = by_prime.entry(p).or_default();
            if list.iter().any(|x| x.scale == c.scale) {
                return Err(SymbolError::Malformed(format!("scale {} repeated", f.q)));
            }
            list.push(c);
        }
        let det: i128 = by_prime
            .iter()
            .map(|(&p, cs)| (p as i128).pow(cs.iter().map(|c| c.scale * c.dim).sum::<u32>()))
            .product();
        let mut locals = Vec::new();
        let mut excess = 0u32;
        let mut implied_two = false;
        for (&p, cs) in by_prime.iter_mut() {
            let used: u32 = cs.iter().map(|c| c.dim).sum();
            if used > rank {
                return Err(SymbolError::InconsistentDims(format!("dimensions at {p} exceed rank {rank}")));
            }
            let unit = valuation(det, p).1;
            let prod: i32 = cs.iter().map(|c| c.eps as i32).product();
            let need = kronecker(unit, p);
            if cs.iter().any(|c| c.scale == 0) {
                if used != rank {
                    return Err(SymbolError::InconsistentDims(format!("dimensions at {p} do not sum to {rank}")));
                }
            } else if used < rank {
                let eps = (prod * need) as i8;
                cs.push(if p == 2 {
                    implied_two = true;
                    Constituent::two(0, rank - used, eps, spec.odd_type, 0)
                } else {
                    Constituent::odd_p(0, rank - used, eps)
                });
            }
            if cs.iter().map(|c| c.eps as i32).product::<i32>() != need {
                return Err(SymbolError::Nonexistent(format!("sign product fails at {p}")));
            }
            cs.sort();
            let l = LocalSymbol { p, constituents: cs.clone() };
            if p != 2 {
                excess += l.excess();
            }
            locals.push(l);
        }
        let two_idx = locals.iter().position(|l| l.p == 2).expect("2 present");
        let two = &mut locals[two_idx];
        let target = (rank + excess) % 8;
        if implied_two {
            // the unimodular oddity is whatever the oddity formula leaves over
            let rest = two.total_oddity();
            let t = ((target + 8 - rest) % 8) as u8;
            if spec.odd_type {
                two.constituents[0].oddity = t;
            } else if t != 0 {
                return Err(SymbolError::Nonexistent("even unimodular part violates the oddity formula".into()));
            }
        }
        if two.total_oddity() != target {
            return Err(SymbolError::Nonexistent("oddity formula fails".into()));
        }
        match two.get(0) {
            Some(z) if z.odd != spec.odd_type => {
                return Err(SymbolError::Malformed("type prefix disagrees with the unimodular part".into()))
            }
            None if spec.odd_type => {
                return Err(SymbolError::Malformed("type I needs a unimodular 2-adic part".into()))
            }
            _ => {}
        }
        for l in locals.iter_mut() {
            l.constituents.retain(|c| c.dim > 0);
        }
        let shown = locals[two_idx].constituents.clone();
        let realized = if shown.iter().all(|c| c.is_valid_dyadic()) {
            locals
        } else {
            realize_dyadic(rank, locals, two_idx)?
        };
        let mut g = GenusSymbol::new(rank, realized)?;
        let canon_shown = canonical_dyadic(&shown);
        if g.render(&canon_shown) != g.canonical_string() {
            return Err(SymbolError::Nonexistent("2-adic data is not realizable".into()));
        }
        g.shown = shown;
        Ok(g)
    }

    /// Symbol with one local part replaced, rechecked.
    fn with_local(&self, l: LocalSymbol) -> Result<GenusSymbol, SymbolError> {
        let mut locals: Vec<LocalSymbol> = self.locals.iter().filter(|x| x.p != l.p).cloned().collect();
        locals.push(l);
        GenusSymbol::new(self.rank, locals)
    }

    /// Multiplies the form by the prime c at every prime other than c (scales at c untouched).
    fn scale_units(locals: &mut [LocalSymbol], c: u64) {
        for l in locals.iter_mut() {
            if l.p == c {
                continue;
            }
            for x in l.constituents.iter_mut() {
                let k = kronecker(c as i128, l.p) as i8;
                if x.dim % 2 == 1 {
                    x.eps *= k;
                }
                if l.p == 2 && x.odd {
                    x.oddity = ((x.oddity as u64 * c) % 8) as u8;
                }
            }
        }
    }

    /// The partial dual at p, rescaled to be primitive.
    pub fn partial_dual(&self, p: u64) -> Result<GenusSymbol, SymbolError> {
        if !is_prime(p) {
            return Err(SymbolError::NotPrime(p));
        }
        let mut locals = self.locals.clone();
        if !locals.iter().any(|l| l.p == p) {
            locals.push(self.local(p));
        }
        for l in locals.iter_mut().filter(|l| l.p == p) {
            let old = l.constituents.clone();
            let at = |s: u32| old.iter().find(|c| c.scale == s);
            let mut new = Vec::new();
            if let Some(c) = at(1) {
                new.push(Constituent { scale: 0, ..*c });
            }
            if let Some(c) = Constituent::merge(at(0), at(2), 1) {
                new.push(c);
            }
            for c in old.iter().filter(|c| c.scale >= 3) {
                new.push(Constituent { scale: c.scale - 1, ..*c });
            }
            l.constituents = new;
        }
        Self::scale_units(&mut locals, p);
        let shift = locals.iter().find(|l| l.p == p).expect("present").min_scale();
        if shift > 0 {
            for l in locals.iter_mut().filter(|l| l.p == p) {
                for c in l.constituents.iter_mut() {
                    c.scale -= shift;
                }
            }
            if shift % 2 == 1 {
                Self::scale_units(&mut locals, p);
            }
        }
        GenusSymbol::new(self.rank, locals)
    }

    /// The Watson transform at p.
    pub fn watson(&self, p: u64) -> GenusSymbol {
        let l = self.local(p);
        let at = |s: u32| l.constituents.iter().find(|c| c.scale == s);
        let mut new = Vec::new();
        new.extend(Constituent::merge(at(0), at(2), 0));
        new.extend(Constituent::merge(at(1), at(3), 1));
        for c in l.constituents.iter().filter(|c| c.scale >= 4) {
            new.push(Constituent { scale: c.scale - 2, ..*c });
        }
        self.with_local(LocalSymbol { p, constituents: new })
            .expect("the Watson transform of a genus is a genus")
    }

    /// All primitive genera K with `K.watson(p) == self`, other than self.
    pub fn watson_preimages(&self, p: u64) -> Vec<GenusSymbol> {
        let l = self.local(p);
        let g0 = l.get(0).copied();
        let g1 = l.get(1).copied();
        let d0 = g0.map_or(0, |c| c.dim);
        let d1 = g1.map_or(0, |c| c.dim);
        let high: Vec<Constituent> = l
            .constituents
            .iter()
            .filter(|c| c.scale >= 2)
            .map(|c| Constituent { scale: c.scale + 2, ..*c })
            .collect();
        let mut out: BTreeSet<GenusSymbol> = BTreeSet::new();
        for n2 in 0..=d0 {
            for n3 in 0..=d1 {
                // with n2 = n3 = 0 only the shifted part differs, which is nothing without one
                if (n2 + n3 == 0 && high.is_empty()) || d0 - n2 == 0 {
                    continue;
                }
                let n0 = d0 - n2;
                let n1 = d1 - n3;
                if p == 2 {
                    let opts = |s, d| if d == 0 { vec![None] } else { dyadic_options(s, d).into_iter().map(Some).collect() };
                    // sign and oddity of the shifted constituents can walk too; only dim and type are fixed
                    let mut highs: Vec<Vec<Constituent>> = vec![vec![]];
                    for h in &high {
                        let same: Vec<Constituent> =
                            dyadic_options(h.scale, h.dim).into_iter().filter(|o| o.odd == h.odd).collect();
                        highs = highs
                            .iter()
                            .flat_map(|v| same.iter().map(move |o| v.iter().copied().chain([*o]).collect()))
                            .collect();
                    }
                    for a in opts(0, n0) {
                        for b in opts(1, n1) {
                            for c in opts(2, n2) {
                                for d in opts(3, n3) {
                                    for hs in &highs {
                                        let mut cons: Vec<Constituent> = [a, b, c, d].into_iter().flatten().collect();
                                        cons.extend(hs.iter().copied());
                                        if let Ok(k) = self.with_local(LocalSymbol { p, constituents: cons }) {
                                            if k.watson(2) == *self {
                                                out.insert(k);
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                } else {
                    let e0 = g0.map_or(1, |c| c.eps);
                    let e1 = g1.map_or(1, |c| c.eps);
                    for s0 in [1i8, -1] {
                        for s1 in [1i8, -1] {
                            let (s2, s3) = (s0 * e0, s1 * e1);
                            if (n1 == 0 && s1 != 1) || (n2 == 0 && s2 != 1) || (n3 == 0 && s3 != 1) {
                                continue;
                            }
                            let mut cons = vec![
                                Constituent::odd_p(0, n0, s0),
                                Constituent::odd_p(1, n1, s1),
                                Constituent::odd_p(2, n2, s2),
                                Constituent::odd_p(3, n3, s3),
                            ];
                            cons.extend(high.iter().copied());
                            let k = self
                                .with_local(LocalSymbol { p, constituents: cons })
                                .expect("odd preimages always exist");
                            out.insert(k);
                        }
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Finds a valid 2-adic Jordan realization with the same canonical form as the given data.
fn realize_dyadic(rank: u32, mut locals: Vec<LocalSymbol>, two_idx: usize) -> Result<Vec<LocalSymbol>, SymbolError> {
    let given = locals[two_idx].constituents.clone();
    let target = canonical_dyadic(&given);
    let mut choices: Vec<Vec<Constituent>> = Vec::new();
    for c in &given {
        choices.push(dyadic_options(c.scale, c.dim).into_iter().filter(|o| o.odd == c.odd).collect());
    }
    let mut idx = vec![0usize; given.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return Err(SymbolError::Nonexistent("no 2-adic realization".into()));
    }
    loop {
        let cand: Vec<Constituent> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
        if canonical_dyadic(&cand) == target {
            locals[two_idx].constituents = cand;
            if GenusSymbol::check(rank, &locals).is_ok() {
                return Ok(locals);
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Err(SymbolError::Nonexistent("no 2-adic realization".into()));
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

impl fmt::Display for GenusSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&self.shown))
    }
}

impl FromStr for GenusSymbol {
    type Err = SymbolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GenusSymbol::parse(s, None)
    }
}

#[derive(Clone, Debug)]
enum Sub {
    Odd(u8),
    Even,
}

#[derive(Clone, Debug)]
struct Factor {
    q: u128,
    p: u64,
    scale: u32,
    dim: u32,
    eps: i8,
    sub: Option<Sub>,
}

struct ParsedText {
    odd_type: bool,
    factors: Vec<Factor>,
}

fn parse_text(text: &str) -> Result<ParsedText, SymbolError> {
    let compact: String = text
        .replace("\\mathrm", "")
        .replace("\\rm", "")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .replace("{{II}}", "{II}");
    let bad = |m: &str| SymbolError::Malformed(format!("{m} in `{text}`"));
    let (odd_type, body) = if let Some(r) = compact.strip_prefix("II(") {
        (false, r)
    } else if let Some(r) = compact.strip_prefix("I(") {
        (true, r)
    } else {
        return Err(bad("expected I( or II("));
    };
    let body = body.strip_suffix(')').ok_or_else(|| bad("missing closing parenthesis"))?;
    let b = body.as_bytes();
    let mut i = 0;
    let mut factors = Vec::new();
    let group = |i: &mut usize| -> Result<String, SymbolError> {
        if *i < b.len() && b[*i] == b'{' {
            let end = body[*i..].find('}').ok_or_else(|| bad("unclosed brace"))? + *i;
            let s = body[*i + 1..end].to_string();
            *i = end + 1;
            Ok(s)
        } else if body[*i..].starts_with("II") {
            *i += 2;
            Ok("II".into())
        } else if *i < b.len() && (b[*i] as char).is_ascii_digit() {
            *i += 1;
            Ok((b[*i - 1] as char).to_string())
        } else {
            let mut j = *i;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            while j < b.len() && (b[j] as char).is_ascii_digit() {
                j += 1;
            }
            if j == *i {
                return Err(bad("expected a group"));
            }
            let s = body[*i..j].to_string();
            *i = j;
            Ok(s)
        }
    };
    while i < b.len() {
        let start = i;
        while i < b.len() && (b[i] as char).is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(bad("expected a prime power"));
        }
        let q: u128 = body[start..i].parse().map_err(|_| bad("prime power too large"))?;
        let (p, scale) = if q == 1 {
            (2, 0)
        } else {
            let p = prime_divisors(q)
                .first()
                .copied()
                .ok_or_else(|| bad("bad prime power"))?;
            let (v, rest) = valuation(q as i128, p);
            if rest != 1 {
                return Err(bad(&format!("{q} is not a prime power")));
            }
            (p, v)
        };
        let mut sub = None;
        if i < b.len() && b[i] == b'_' {
            i += 1;
            let g = group(&mut i)?;
            sub = Some(if g == "II" {
                Sub::Even
            } else {
                let t: u8 = g.parse().map_err(|_| bad("bad oddity"))?;
                if t > 7 {
                    return Err(bad("oddity must be below 8"));
                }
                Sub::Odd(t)
            });
        }
        if i >= b.len() || b[i] != b'^' {
            return Err(bad("expected ^"));
        }
        i += 1;
        let g = group(&mut i)?;
        let (eps, mag) = match g.as_bytes().first() {
            Some(b'+') => (1, &g[1..]),
            Some(b'-') => (-1, &g[1..]),
            _ => return Err(bad("exponent needs a sign")),
        };
        let dim: u32 = mag.parse().map_err(|_| bad("bad dimension"))?;
        if dim == 0 {
            return Err(bad("zero dimension"));
        }
        factors.push(Factor { q, p, scale, dim, eps, sub });
    }
    Ok(ParsedText { odd_type, factors })
}

/// All genus symbols of the given rank and determinant that are strongly square free.
pub fn ssf_symbols(rank: u32, det: u128) -> Vec<GenusSymbol> {
    let fac = crate::arith::factor(det);
    if fac.iter().any(|&(_, e)| e > rank / 2) {
        return vec![];
    }
    let mut odd_choices: Vec<Vec<LocalSymbol>> = Vec::new();
    for &(p, e) in fac.iter().filter(|&&(p, _)| p != 2) {
        let unit = (det / (p as u128).pow(e)) as i128;
        let need = kronecker(unit, p) as i8;
        let mut opts = Vec::new();
        for s1 in [1i8, -1] {
            opts.push(LocalSymbol {
                p,
                constituents: vec![Constituent::odd_p(0, rank - e, s1 * need), Constituent::odd_p(1, e, s1)],
            });
        }
        odd_choices.push(opts);
    }
    let e2 = fac.iter().find(|&&(p, _)| p == 2).map_or(0, |&(_, e)| e);
    let mut twos = Vec::new();
    for a in dyadic_options(0, rank - e2) {
        if e2 == 0 {
            twos.push(vec![a]);
            continue;
        }
        for b in dyadic_options(1, e2) {
            twos.push(vec![a, b]);
        }
    }
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; odd_choices.len()];
    loop {
        let mut locals: Vec<LocalSymbol> = idx.iter().zip(&odd_choices).map(|(&i, c)| c[i].clone()).collect();
        locals.push(LocalSymbol { p: 2, constituents: vec![] });
        let last = locals.len() - 1;
        for t in &twos {
            locals[last].constituents = t.clone();
            if let Ok(g) = GenusSymbol::new(rank, locals.clone()) {
                out.insert(g);
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out.into_iter().collect();
            }
            idx[k] += 1;
            if idx[k] < 2 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Lattice-level partial dual `^p((1/p)L ∩ L^#)`, rescaled to be primitive.
pub fn partial_dual_lattice(l: &GramLattice, p: u64) -> Result<GramLattice, LatticeError> {
    let b = l.level_sublattice(p as i128);
    Ok(l.transform_div(&b, p as i128)?.primitive_part())
}

/// Lattice-level Watson transform `L + ((1/p)L ∩ pL^#)`.
pub fn watson_lattice(l: &GramLattice, p: u64) -> Result<GramLattice, LatticeError> {
    let n = l.rank();
    let pp = p as i128;
    let lev = l.level_sublattice(pp * pp);
    let mut gens: Vec<Vec<i128>> = (0..n).map(|j| lev.column(j)).collect();
    for i in 0..n {
        let mut e = vec![0i128; n];
        e[i] = pp;
        gens.push(e);
    }
    let b: IMat = lattice_from_generators(&gens, n);
    l.transform_div(&b, pp * pp)
}
