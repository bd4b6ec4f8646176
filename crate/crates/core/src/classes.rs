//! Isometry classes in a genus: automorphism counts, isometry tests, Kneser neighbors,
//! representatives, and class enumeration certified by the mass.

use crate::arith::{factor, inv_mod, kronecker, random_prime_below, sqrt_mod, Rational};
use crate::lattice::{adjugate, bareiss_det, lattice_from_generators, GramLattice, IMat};
use crate::local::{GenusSymbol, SymbolError};
use crate::mass::{mass, MassError};
use crate::roots::{for_each_short_vector, is_reflective};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("class budget of {0} exhausted before the mass was reached")]
    Budget(usize),
    #[error("no representative found for {0} within the search budget")]
    NoRepresentative(String),
    #[error("class sum {found} exceeds the mass {mass}")]
    Overshoot { found: String, mass: String },
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Default cap on the number of classes explored per genus; override with `REFGEN_CLASS_BUDGET`.
pub const DEFAULT_CLASS_BUDGET: usize = 2000;

pub fn class_budget() -> usize {
    std::env::var("REFGEN_CLASS_BUDGET").ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_CLASS_BUDGET)
}

/// LLL-reduced copy with basis vectors sorted by norm.
pub fn reduce(l: &GramLattice) -> GramLattice {
    let (r, _) = l.lll();
    let n = r.rank();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| r.get(i, i));
    let mut g = Vec::with_capacity(n * n);
    for &i in &order {
        for &j in &order {
            g.push(r.get(i, j));
        }
    }
    GramLattice::new(n, g).expect("permuted reduced gram")
}

/// Counts bases `v_1..v_n` of `target` whose Gram matrix equals `source`, up to `limit`.
/// Both should be reduced; the last image is solved for rather than enumerated.
fn count_embeddings(target: &GramLattice, source: &GramLattice, limit: u64) -> u64 {
    let n = target.rank();
    if n != source.rank() || target.determinant() != source.determinant() {
        return 0;
    }
    if n == 1 {
        return if target.get(0, 0) == source.get(0, 0) { 2.min(limit) } else { 0 };
    }
    let wanted: HashSet<i128> = (0..n - 1).map(|i| source.get(i, i) as i128).collect();
    let bound = *wanted.iter().max().expect("n >= 2");
    let mut pool: HashMap<i128, Vec<Vec<i128>>> = HashMap::new();
    for_each_short_vector(target, bound, |v, nm| {
        if wanted.contains(&nm) {
            let e = pool.entry(nm).or_default();
            e.push(v.to_vec());
            e.push(v.iter().map(|x| -x).collect());
        }
    });
    let ctx = LastSolve::new(target, source);
    let mut chosen: Vec<Vec<i128>> = Vec::with_capacity(n);
    let mut count = 0u64;
    fn rec(
        level: usize,
        target: &GramLattice,
        source: &GramLattice,
        pool: &HashMap<i128, Vec<Vec<i128>>>,
        chosen: &mut Vec<Vec<i128>>,
        ctx: &LastSolve,
        count: &mut u64,
        limit: u64,
    ) {
        let n = target.rank();
        if level == n - 1 {
            *count += ctx.solutions(target, chosen);
            return;
        }
        let Some(cands) = pool.get(&(source.get(level, level) as i128)) else {
            return;
        };
        for v in cands {
            let ok = chosen
                .iter()
                .enumerate()
                .all(|(j, w)| target.inner(w, v) == source.get(j, level) as i128);
            if !ok {
                continue;
            }
            chosen.push(v.clone());
            rec(level + 1, target, source, pool, chosen, ctx, count, limit);
            chosen.pop();
            if *count >= limit {
                return;
            }
        }
    }
    rec(0, target, source, &pool, &mut chosen, &ctx, &mut count, limit);
    count.min(limit)
}

/// Closed form for the last basis image given the first `n-1`.
struct LastSolve {
    det: BigInt,
    det_lead: BigInt,
    adj_lead: Vec<i128>,
    col: Vec<i128>,
}

impl LastSolve {
    fn new(target: &GramLattice, source: &GramLattice) -> Self {
        let n = source.rank();
        let m = n - 1;
        let mut lead = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                lead.push(source.get(i, j) as i128);
            }
        }
        LastSolve {
            det: BigInt::from(target.determinant()),
            det_lead: BigInt::from(bareiss_det(&lead, m)),
            adj_lead: adjugate(&lead, m),
            col: (0..m).map(|i| source.get(i, n - 1) as i128).collect(),
        }
    }

    /// Number of integral `v` with the prescribed inner products with `w` and prescribed norm.
    fn solutions(&self, a: &GramLattice, w: &[Vec<i128>]) -> u64 {
        let n = a.rank();
        let m = n - 1;
        // rows of W^T A
        let rows: Vec<Vec<i128>> = w.iter().map(|v| a.apply(v)).collect();
        // generalized cross product spans the A-orthogonal complement of span(W)
        let mut k: Vec<BigInt> = Vec::with_capacity(n);
        for j in 0..n {
            let mut minor = Vec::with_capacity(m * m);
            for r in &rows {
                for (c, &x) in r.iter().enumerate() {
                    if c != j {
                        minor.push(x);
                    }
                }
            }
            let d = BigInt::from(bareiss_det(&minor, m));
            k.push(if j % 2 == 0 { d } else { -d });
        }
        let g = k.iter().fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
        if g.is_zero() {
            return 0;
        }
        let k: Vec<BigInt> = k.into_iter().map(|x| x / &g).collect();
        // y = adj(B') b, w0 = W y; the A-orthogonal part solves the norm equation
        let y: Vec<BigInt> = (0..m)
            .map(|i| (0..m).map(|j| BigInt::from(self.adj_lead[i * m + j]) * self.col[j]).sum())
            .collect();
        let num_w: Vec<BigInt> = (0..n)
            .map(|c| (0..m).map(|i| &y[i] * BigInt::from(w[i][c])).sum())
            .collect();
        let mut kak = BigInt::zero();
        for i in 0..n {
            for j in 0..n {
                kak += &k[i] * BigInt::from(a.get(i, j)) * &k[j];
            }
        }
        let s = &self.det * &self.det_lead * &kak;
        let r = s.sqrt();
        if &r * &r != s {
            return 0;
        }
        let den = &self.det_lead * &kak;
        let mut found = 0;
        for sign in [1i32, -1] {
            let ok = (0..n).all(|c| {
                let num = &num_w[c] * &kak + BigInt::from(sign) * &r * &k[c];
                (num % &den).is_zero()
            });
            if ok {
                found += 1;
            }
        }
        found
    }
}

/// `|O(L)|`, counting both signs.
pub fn aut_order(l: &GramLattice) -> u64 {
    let r = reduce(l);
    count_embeddings(&r, &r, u64::MAX)
}

pub fn is_isometric(a: &GramLattice, b: &GramLattice) -> bool {
    if a.rank() != b.rank() || a.determinant() != b.determinant() {
        return false;
    }
    count_embeddings(&reduce(a), &reduce(b), 1) > 0
}

/// Kneser p-neighbors for an odd prime p not dividing the determinant, one per isotropic line.
pub fn p_neighbors(l: &GramLattice, p: u64) -> Vec<GramLattice> {
    let n = l.rank();
    let pp = p as i128;
    assert!(p % 2 == 1 && l.determinant() % pp != 0, "p must be odd and prime to det");
    let mut out = Vec::new();
    let mut x = vec![0i128; n];
    let total = pp.pow(n as u32);
    for code in 1..total {
        let mut c = code;
        for xi in x.iter_mut() {
            *xi = c % pp;
            c /= pp;
        }
        // one representative per line: first nonzero coordinate equal to 1
        if x.iter().find(|&&v| v != 0) != Some(&1) {
            continue;
        }
        if l.norm(&x).rem_euclid(pp) != 0 {
            continue;
        }
        if let Some(nb) = neighbor_from(l, &x, p) {
            out.push(nb);
        }
    }
    out
}

fn neighbor_from(l: &GramLattice, x0: &[i128], p: u64) -> Option<GramLattice> {
    let n = l.rank();
    let pp = p as i128;
    let gx = l.apply(x0);
    let j = (0..n).find(|&j| gx[j].rem_euclid(pp) != 0)?;
    let mut x = x0.to_vec();
    let q = l.norm(&x);
    if q.rem_euclid(pp * pp) != 0 {
        let inv = inv_mod((2 * gx[j]).rem_euclid(pp), pp)?;
        let c = (-(q / pp) * inv).rem_euclid(pp);
        x[j] += pp * c;
    }
    let gx = l.apply(&x);
    let j = (0..n).find(|&j| gx[j].rem_euclid(pp) != 0)?;
    let inv = inv_mod(gx[j].rem_euclid(pp), pp)?;
    // generators of p * (L_x + Z x/p): p times a basis of L_x, and x
    let mut gens: Vec<Vec<i128>> = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut v = vec![0i128; n];
        if i == j {
            v[j] = pp * pp;
        } else {
            v[i] = pp;
            v[j] = -pp * (gx[i] * inv).rem_euclid(pp);
        }
        gens.push(v);
    }
    gens.push(x);
    let b = lattice_from_generators(&gens, n);
    let g = l.transform_div(&b, pp * pp).ok()?;
    Some(reduce(&g))
}

/// The smallest primes not dividing `2 det`, used for neighbor exploration.
pub fn neighbor_primes(det: i128, how_many: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 3u64;
    while out.len() < how_many {
        if crate::arith::is_prime(p) && det % p as i128 != 0 {
            out.push(p);
        }
        p += 2;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub gram: GramLattice,
    pub aut_order: u64,
    pub reflective: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenusClassSet {
    pub genus: GenusSymbol,
    pub classes: Vec<ClassRecord>,
    pub certified: bool,
    /// Set when exploration stopped at the first non-reflective class.
    pub stopped_early: bool,
}

impl GenusClassSet {
    pub fn class_sum(&self) -> Rational {
        self.classes.iter().map(|c| Rational::new(BigInt::one(), BigInt::from(c.aut_order))).sum()
    }

    pub fn all_reflective(&self) -> bool {
        self.classes.iter().all(|c| c.reflective)
    }
}

/// Sum of `1/|O(M)|` over the reflective classes.
pub fn reflective_mass(set: &GenusClassSet) -> Rational {
    set.classes
        .iter()
        .filter(|c| c.reflective)
        .map(|c| Rational::new(BigInt::one(), BigInt::from(c.aut_order)))
        .sum()
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    /// Stop at the first non-reflective class.
    pub stop_on_nonreflective: bool,
    pub budget: usize,
    /// How many neighbor primes to try before giving up.
    pub primes: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        // later primes only run while the mass is short; the first few can all lie in the
        // spinor kernel and never leave one spinor genus
        ExploreOptions { stop_on_nonreflective: false, budget: class_budget(), primes: 8 }
    }
}

/// Minimum and kissing number. The first reduced basis vector need not be a shortest vector.
fn fingerprint(l: &GramLattice) -> (i64, usize) {
    let r = reduce(l);
    let mut min = r.get(0, 0) as i128;
    let mut c = 0;
    for_each_short_vector(&r, min, |_, nm| {
        if nm < min {
            min = nm;
            c = 0;
        }
        if nm == min {
            c += 1;
        }
    });
    (min as i64, c)
}

/// Enumerates the classes of the genus of `start` until their mass sum reaches `target`.
pub fn explore_from(start: &GramLattice, target: &Rational, opts: ExploreOptions) -> Result<GenusClassSet, ClassError> {
    let genus = GenusSymbol::from_lattice(start);
    let start = reduce(start);
    let mut classes: Vec<ClassRecord> = Vec::new();
    let mut prints: Vec<(i64, usize)> = Vec::new();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut sum = Rational::zero();
    let add = |l: GramLattice,
                   classes: &mut Vec<ClassRecord>,
                   prints: &mut Vec<(i64, usize)>,
                   sum: &mut Rational|
     -> bool {
        let aut = aut_order(&l);
        let reflective = is_reflective(&l);
        *sum += Rational::new(BigInt::one(), BigInt::from(aut));
        prints.push(fingerprint(&l));
        classes.push(ClassRecord { gram: l, aut_order: aut, reflective });
        reflective
    };
    seen.insert(start.entries().to_vec());
    let refl = add(start.clone(), &mut classes, &mut prints, &mut sum);
    let done = |classes: Vec<ClassRecord>, certified: bool, stopped_early: bool| GenusClassSet {
        genus: genus.clone(),
        classes,
        certified,
        stopped_early,
    };
    if opts.stop_on_nonreflective && !refl {
        return Ok(done(classes, false, true));
    }
    if &sum == target {
        return Ok(done(classes, true, false));
    }
    for p in neighbor_primes(start.determinant(), opts.primes) {
        let mut queue: Vec<usize> = (0..classes.len()).collect();
        while let Some(ci) = queue.pop() {
            let base = classes[ci].gram.clone();
            for nb in p_neighbors(&base, p) {
                if !seen.insert(nb.entries().to_vec()) {
                    continue;
                }
                let fp = fingerprint(&nb);
                let known = (0..classes.len()).any(|k| prints[k] == fp && is_isometric(&classes[k].gram, &nb));
                if known {
                    continue;
                }
                if classes.len() >= opts.budget {
                    return Err(ClassError::Budget(opts.budget));
                }
                let refl = add(nb, &mut classes, &mut prints, &mut sum);
                queue.push(classes.len() - 1);
                if opts.stop_on_nonreflective && !refl {
                    return Ok(done(classes, false, true));
                }
                if &sum == target {
                    return Ok(done(classes, true, false));
                }
                if &sum > target {
                    return Err(ClassError::Overshoot { found: sum.to_string(), mass: target.to_string() });
                }
            }
        }
    }
    Ok(done(classes, false, false))
}

/// Certified class set of a genus.
pub fn genus_classes(g: &GenusSymbol, opts: ExploreOptions) -> Result<GenusClassSet, ClassError> {
    let target = mass(g)?.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(g));
    let rep = representative_with(g, &mut rng, 20_000)?;
    let set = explore_from(&rep, &target, opts)?;
    if !set.certified && !set.stopped_early {
        return Err(ClassError::Budget(set.classes.len()));
    }
    Ok(set)
}

/// Totally reflective: every class of the genus is reflective. Stops at the first counterexample.
pub fn is_totally_reflective(g: &GenusSymbol) -> Result<bool, ClassError> {
    let opts = ExploreOptions { stop_on_nonreflective: true, ..Default::default() };
    Ok(genus_classes(g, opts)?.all_reflective())
}

pub fn seed_for(g: &GenusSymbol) -> u64 {
    g.key().bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// A lattice in the genus, found by a steered random search (deterministic seed).
pub fn representative(g: &GenusSymbol) -> Result<GramLattice, ClassError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(g));
    representative_with(g, &mut rng, 20_000)
}

/// Randomized construction of a lattice in genus `g`. A Gram matrix is grown one row at a time:
/// given a leading block `A` of determinant `m`, the last row `(b, t)` gives determinant `d`
/// exactly when `adj(A)[b] = -d (mod m)`, which is solved prime by prime. The top leading
/// determinant is steered so its Legendre symbols match the unimodular signs at primes dividing
/// `d` once; everything else is left to chance and checked against `g`.
pub fn representative_with(g: &GenusSymbol, rng: &mut impl Rng, tries: usize) -> Result<GramLattice, ClassError> {
    representative_cached(g, rng, tries, &mut HashMap::new())
}

/// As `representative_with`, sharing work through `cache` (canonical key to lattice): every
/// lattice built along the way is filed under its own genus, so later calls for other genera of
/// the same determinant often find one waiting.
pub fn representative_cached(
    g: &GenusSymbol,
    rng: &mut impl Rng,
    tries: usize,
    cache: &mut HashMap<String, GramLattice>,
) -> Result<GramLattice, ClassError> {
    if let Some(l) = cache.get(g.key()) {
        return Ok(l.clone());
    }
    let n = g.rank() as usize;
    let d = g.det();
    let even = g.is_even();
    let fac = factor(d as u128);
    // Usually the last basis vector takes one dimension of the top scale at each prime and the
    // rest of the determinant stays in the leading block. Even 2-adic blocks do not split that
    // way, so other exponents are tried too.
    // At p with local form 1^{n-2} p^{2}, a leading minor of rank n - 2 prime to p splits off
    // as the unimodular constituent, so its Kronecker symbol fixes that sign; the rank n - 1
    // block then carries exactly one p, or 4 when the scale 2 part is even (a vector of norm
    // 2 * odd would make it odd). An odd unimodular part at 2 also has its oddity, left to chance.
    let inner: Vec<(u64, i8)> = fac
        .iter()
        .filter(|_| n >= 3)
        .filter(|&&(p, _)| g.local(p).dim_at(0) == n as u32 - 2 && g.local(p).dim_at(1) == 2)
        .map(|&(p, _)| (p, g.local(p).get(0).map_or(1, |c| c.eps)))
        .collect();
    let carry = |rng: &mut dyn rand::RngCore, steered: bool| -> i128 {
        fac.iter()
            .map(|&(p, e)| {
                let low = e.saturating_sub(g.local(p).max_scale());
                let high = if p == 2 { e + 2 } else { e };
                let a = if steered && inner.iter().any(|s| s.0 == p) {
                    if p == 2 && g.local(2).get(1).is_some_and(|c| !c.odd) {
                        2
                    } else {
                        1
                    }
                } else if e == 1 || rng.gen_bool(0.5) {
                    low
                } else {
                    rng.gen_range(0..=high)
                };
                (p as i128).pow(a)
            })
            .product()
    };
    let steer: Vec<(u64, i8)> = fac
        .iter()
        .filter(|&&(p, e)| p != 2 && e == 1)
        .map(|&(p, _)| (p, g.local(p).get(0).map_or(1, |c| c.eps)))
        .collect();
    let mut bound = 64u64;
    for attempt in 0..tries {
        if n == 1 {
            break;
        }
        if attempt % 256 == 255 && bound < 1 << 24 {
            bound *= 2;
        }
        // an unsteered attempt now and then, in case the shape above is not the only one
        let steered = attempt % 8 != 7;
        let mut c = carry(rng, steered);
        if even && (n - 1) % 2 == 1 && c % 2 == 1 {
            c *= 2;
        }
        let fits = |m: i128| steer.iter().all(|&(p, eps)| kronecker(m, p) == eps as i32);
        // draw q until the Legendre symbols fit; this is cheap next to building a lattice
        let q = if attempt % 8 == 0 && fits(c) {
            Some(1)
        } else {
            (0..256).map(|_| random_prime_below(bound, rng)).find(|&q| d % q as i128 != 0 && fits(c * q as i128))
        };
        let Some(q) = q else {
            continue;
        };
        let m = c * q as i128;
        let Some(lead) = build_with_det(n - 1, m, even, if steered { &inner } else { &[] }, rng) else {
            continue;
        };
        let Some(l) = complete_last_row(&lead, d, even, rng) else {
            continue;
        };
        let found = GenusSymbol::from_lattice(&l);
        if found == *g {
            return Ok(reduce(&l));
        }
        if l.is_primitive() {
            cache.entry(found.key().to_string()).or_insert_with(|| reduce(&l));
        }
    }
    if n == 1 {
        let l = GramLattice::new(1, vec![d as i64]).expect("positive");
        if GenusSymbol::from_lattice(&l) == *g {
            return Ok(l);
        }
    }
    Err(ClassError::NoRepresentative(g.to_string()))
}

/// A random positive definite lattice of rank `k` and determinant exactly `det` whose leading
/// minor of rank `k - 1` has the Legendre symbols in `steer`.
fn build_with_det(k: usize, det: i128, even: bool, steer: &[(u64, i8)], rng: &mut impl Rng) -> Option<GramLattice> {
    if k == 1 {
        return if even && det % 2 != 0 { None } else { GramLattice::new(1, vec![det as i64]).ok() };
    }
    let size = (det as f64).powf((k - 1) as f64 / k as f64).max(4.0) as u64 * 2;
    // a random divisor of det lets the leading block share its prime powers, as in diag(1, 2, 4)
    let part: i128 = factor(det as u128)
        .iter()
        .filter(|&&(p, _)| steer.iter().all(|s| s.0 != p))
        .map(|&(p, e)| (p as i128).pow(rng.gen_range(0..=e)))
        .product();
    let adjust = |m: i128| if even && (k - 1) % 2 == 1 && m % 2 == 1 { 2 * m } else { m };
    let fits = |m: i128| steer.iter().all(|&(p, eps)| kronecker(m, p) == eps as i32);
    let m = if rng.gen_bool(0.25) && fits(adjust(part)) {
        adjust(part)
    } else {
        (0..64 << steer.len().min(8)).map(|_| adjust(part * random_prime_below(size, rng) as i128)).find(|&m| fits(m))?
    };
    let lead = build_with_det(k - 1, m, even, &[], rng)?;
    complete_last_row(&lead, det, even, rng)
}

/// Extends a leading block by a row `(b, t)` so that the determinant is exactly `d`.
fn complete_last_row(lead: &GramLattice, d: i128, even: bool, rng: &mut impl Rng) -> Option<GramLattice> {
    let k = lead.rank();
    let dl = lead.determinant();
    let adj = adjugate(&lead.wide(), k);
    let modulus = if even { 2 * dl } else { dl };
    let b = solve_form_mod(&adj, k, -d, modulus, rng)?;
    // an attempt whose entries outgrow i128 is simply dropped
    let mut num = d;
    for i in 0..k {
        for j in 0..k {
            num = b[i].checked_mul(adj[i * k + j])?.checked_mul(b[j])?.checked_add(num)?;
        }
    }
    if num % dl != 0 {
        return None;
    }
    let t = num / dl;
    if t <= 0 || (even && t % 2 != 0) {
        return None;
    }
    let n = k + 1;
    let mut g = vec![0i128; n * n];
    for i in 0..k {
        for j in 0..k {
            g[i * n + j] = lead.get(i, j) as i128;
        }
        g[i * n + k] = b[i];
        g[k * n + i] = b[i];
    }
    g[n * n - 1] = t;
    GramLattice::from_i128(n, &g).ok()
}

/// A vector `b` (centered residues) with `b^T A b = target (mod modulus)`, found prime power by
/// prime power and glued with the Chinese remainder theorem.
fn solve_form_mod(a: &[i128], k: usize, target: i128, modulus: i128, rng: &mut impl Rng) -> Option<Vec<i128>> {
    let mut acc = vec![0i128; k];
    let mut acc_mod = 1i128;
    for (p, e) in factor(modulus as u128) {
        let (p, pe) = (p as i128, (p as i128).pow(e));
        let want = target.rem_euclid(pe);
        let small: Vec<i64> = if pe < 1 << 20 { a.iter().map(|x| x.rem_euclid(pe) as i64).collect() } else { Vec::new() };
        // b^T A b mod pe for b with entries in [0, pe)
        let form = |b: &[i128]| -> i128 {
            if !small.is_empty() {
                // partial sums stay below k * pe^3 < 2^63
                let m = pe as i64;
                let mut s = 0i64;
                for i in 0..k {
                    let row: i64 = (0..k).map(|j| small[i * k + j] * b[j] as i64).sum();
                    s += (row % m) * b[i] as i64;
                }
                return (s % m) as i128;
            }
            let mut s = 0i128;
            for i in 0..k {
                for j in 0..k {
                    s = (s + b[i] * (a[i * k + j] % pe) % pe * b[j]) % pe;
                }
            }
            s.rem_euclid(pe)
        };
        let sol = if (pe as f64).powi(k as i32) <= 4096.0 {
            // scan from a random offset; the first hit is random enough and nothing is allocated
            let total = pe.pow(k as u32);
            let start = rng.gen_range(0..total);
            let mut b = vec![0i128; k];
            let hit = (0..total).find(|i| {
                let mut c = (start + i) % total;
                for x in b.iter_mut() {
                    *x = c % pe;
                    c /= pe;
                }
                form(&b) == want
            });
            hit?;
            b
        } else if e == 1 {
            solve_prime(a, k, want, p, rng, &form)?
        } else {
            (0..512).map(|_| (0..k).map(|_| rng.gen_range(0..pe)).collect::<Vec<_>>()).find(|b| form(b) == want)?
        };
        // glue: x = acc (mod acc_mod), x = sol (mod pe)
        let inv = inv_mod(acc_mod, pe).expect("coprime moduli");
        for i in 0..k {
            let t = ((sol[i] - acc[i]).rem_euclid(pe) * inv) % pe;
            acc[i] += acc_mod * t;
        }
        acc_mod *= pe;
    }
    Some(acc.into_iter().map(|x| if x > acc_mod / 2 { x - acc_mod } else { x }).collect())
}

/// Solves `b^T A b = want (mod p)` for an odd prime `p` by fixing all but one coordinate
/// and taking a square root.
fn solve_prime(
    a: &[i128],
    k: usize,
    want: i128,
    p: i128,
    rng: &mut impl Rng,
    form: &impl Fn(&[i128]) -> i128,
) -> Option<Vec<i128>> {
    let pivots: Vec<usize> = (0..k).filter(|&i| a[i * k + i] % p != 0).collect();
    for _ in 0..64 {
        let mut b: Vec<i128> = (0..k).map(|_| rng.gen_range(0..p)).collect();
        if pivots.is_empty() {
            if form(&b) == want {
                return Some(b);
            }
            continue;
        }
        let i = pivots[rng.gen_range(0..pivots.len())];
        b[i] = 0;
        let aii = a[i * k + i].rem_euclid(p);
        let beta = (0..k).filter(|&j| j != i).fold(0, |s, j| (s + a[i * k + j].rem_euclid(p) * b[j]) % p);
        let gamma = form(&b);
        // aii x^2 + 2 beta x + gamma = want
        let disc = (beta * beta - aii * (gamma - want)).rem_euclid(p);
        let Some(r) = sqrt_mod(disc, p) else {
            continue;
        };
        let r = if rng.gen_bool(0.5) { r } else { (p - r) % p };
        let inv = inv_mod(aii, p)?;
        b[i] = ((r - beta).rem_euclid(p) * inv) % p;
        debug_assert_eq!(form(&b), want);
        return Some(b);
    }
    None
}

/// Searches sublattices `K` with `pM ⊆ K ⊆ M`, `M/K ≅ (Z/p)^k`, of the given lattices for one in genus `g`.
pub fn sublattice_representative(
    g: &GenusSymbol,
    supers: &[GramLattice],
    p: u64,
    k: usize,
    rng: &mut impl Rng,
    tries: usize,
) -> Option<GramLattice> {
    let pp = p as i128;
    for _ in 0..tries {
        let m = &supers[rng.gen_range(0..supers.len())];
        let n = m.rank();
        // random k x n matrix mod p; K is its kernel. Rows of the form y^T G vanish on the
        // radical of M/pM, which a pre-image has to contain in its unimodular-pairing part.
        let free = rng.gen_range(0..=k);
        let gram = m.wide();
        let c: Vec<Vec<i128>> = (0..k)
            .map(|i| {
                let y: Vec<i128> = (0..n).map(|_| rng.gen_range(0..pp)).collect();
                if i < free {
                    y
                } else {
                    (0..n).map(|r| (0..n).map(|c| gram[r * n + c] * y[c]).sum::<i128>().rem_euclid(pp)).collect()
                }
            })
            .collect();
        let Some(kernel) = kernel_mod_p(&c, n, pp) else {
            continue;
        };
        let mut gens = kernel;
        for i in 0..n {
            let mut e = vec![0i128; n];
            e[i] = pp;
            gens.push(e);
        }
        let b: IMat = lattice_from_generators(&gens, n);
        if b.det().abs() != pp.pow(k as u32) {
            continue;
        }
        let Ok(l) = m.transform(&b) else {
            continue;
        };
        if !l.is_primitive() {
            continue;
        }
        if GenusSymbol::from_lattice(&l) == *g {
            return Some(reduce(&l));
        }
    }
    None
}

/// Basis of the null space mod p of a full-rank matrix; `None` if the rank is deficient.
fn kernel_mod_p(c: &[Vec<i128>], n: usize, p: i128) -> Option<Vec<Vec<i128>>> {
    let mut a: Vec<Vec<i128>> = c.to_vec();
    let k = a.len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(r) = (row..k).find(|&r| a[r][col].rem_euclid(p) != 0) else {
            continue;
        };
        a.swap(row, r);
        let inv = inv_mod(a[row][col].rem_euclid(p), p)?;
        for x in a[row].iter_mut() {
            *x = (*x * inv).rem_euclid(p);
        }
        for r2 in 0..k {
            if r2 != row && a[r2][col] != 0 {
                let f = a[r2][col];
                for cc in 0..n {
                    a[r2][cc] = (a[r2][cc] - f * a[row][cc]).rem_euclid(p);
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == k {
            break;
        }
    }
    if row < k {
        return None;
    }
    let mut out = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0i128; n];
        v[free] = 1;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = (-a[r][free]).rem_euclid(p);
        }
        out.push(v);
    }
    Some(out)
}
