//! Integer and rational helpers: primes, Kronecker symbols, Bernoulli numbers
//! and exact values of the special L-values that show up in the mass formula.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i128) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pow_rat(x: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m <= 1 << 32 {
        return a % m * (b % m) % m;
    }
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // the first four bases are deterministic below 3,215,031,751
    let bases: &[u64] = if n < 3_215_031_751 { &[2, 3, 5, 7] } else { &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] };
    'witness: for &a in bases {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    let mut m = n + 1;
    while !is_prime(m) {
        m += 1;
    }
    m
}

/// A random prime below `bound`: uniform from a sieved table for `bound <= 2^22`,
/// otherwise the prime following a uniform integer.
pub fn random_prime_below(bound: u64, rng: &mut impl rand::Rng) -> u64 {
    static TABLE: std::sync::OnceLock<Vec<u64>> = std::sync::OnceLock::new();
    if bound > 1 << 22 {
        return next_prime(rng.gen_range(2..bound));
    }
    let t = TABLE.get_or_init(|| primes_up_to(1 << 22));
    t[rng.gen_range(0..t.partition_point(|&p| p < bound).max(1))]
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return vec![];
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

/// Factorization by trial division, stopping early once the cofactor is prime.
pub fn factor(n: u128) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let Ok(mut n) = u64::try_from(n) else {
        return factor_wide(n);
    };
    let mut p: u64 = 2;
    while p <= 1009 && p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let mut big = Vec::new();
        split(n, &mut big);
        big.sort_unstable();
        for q in big {
            match out.last_mut() {
                Some((r, e)) if *r == q => *e += 1,
                _ => out.push((q, 1)),
            }
        }
    }
    out
}

/// Prime factors (with repetition) of `n`, which has no factor below 1010.
fn split(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if n < 1010 * 1010 || is_prime(n) {
        out.push(n);
        return;
    }
    let r = isqrt(n as u128) as u64;
    if r * r == n {
        split(r, out);
        split(r, out);
        return;
    }
    let d = (1..).map(|c| rho(n, c)).find(|&d| d != n).expect("composite");
    split(d, out);
    split(n / d, out);
}

/// Brent's variant of Pollard's rho with `x^2 + c`; returns a nontrivial factor, or `n` on failure.
fn rho(n: u64, c: u64) -> u64 {
    let f = |x: u64| ((x as u128 * x as u128 + c as u128) % n as u128) as u64;
    let (mut x, mut y, mut q, mut g) = (2u64, 2u64, 1u64, 1u64);
    let mut ys = y;
    let mut r = 1u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..(r - k).min(128) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd_u64(q, n);
            k += 128;
        }
        r *= 2;
    }
    if g == n {
        // the batch overshot; step back one at a time
        loop {
            ys = f(ys);
            g = gcd_u64(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    g
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factor_wide(mut n: u128) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p: u128 = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
            if let Ok(small) = u64::try_from(n) {
                out.extend(factor(small as u128).into_iter().filter(|&(q, _)| q > 1));
                return out;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((u64::try_from(n).expect("prime factor exceeds 64 bits"), 1));
    }
    out
}

pub fn prime_divisors(n: u128) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

/// Returns `(v, u)` with `n = p^v * u` and `p` not dividing `u`. `n` must be nonzero.
pub fn valuation(mut n: i128, p: u64) -> (u32, i128) {
    assert!(n != 0, "valuation of zero");
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Extended gcd: returns `(g, x, y)` with `a x + b y = g >= 0`.
pub fn xgcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    let (g, x, _) = xgcd(a.rem_euclid(m), m);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m))
}

/// A square root of `a` modulo an odd prime `p` (Tonelli-Shanks), if `a` is a square.
pub fn sqrt_mod(a: i128, p: i128) -> Option<i128> {
    let a = a.rem_euclid(p);
    if a == 0 {
        return Some(0);
    }
    let pow = |mut b: i128, mut e: i128| {
        let mut r = 1i128;
        b %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    };
    if pow(a, (p - 1) / 2) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pow(z, (p - 1) / 2) == p - 1)?;
    let (mut m, mut c, mut t, mut r) = (s, pow(z, q), pow(a, q), pow(a, (q + 1) / 2));
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pow(c, 1 << (m - i - 1));
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r)
}

/// Kronecker symbol `(a / n)` for `n >= 1`.
pub fn kronecker(a: i128, n: u64) -> i32 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let twos = n.trailing_zeros();
    let mut n = n >> twos;
    let mut result = 1;
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    // Jacobi symbol (a / n) for odd n.
    let mut a = a.rem_euclid(n as i128) as u64;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        if z % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Squarefree kernel and square part: `n = core * s^2` with `core` squarefree (sign kept on core).
pub fn squarefree_decompose(n: i128) -> (i128, i128) {
    assert!(n != 0);
    let sign = n.signum();
    let mut core: i128 = 1;
    let mut sq: i128 = 1;
    for (p, e) in factor(n.unsigned_abs()) {
        let p = p as i128;
        sq *= p.pow(e / 2);
        if e % 2 == 1 {
            core *= p;
        }
    }
    (sign * core, sq)
}

/// Fundamental discriminant of `Q(sqrt(d))`; returns 1 when `d` is a square.
pub fn fundamental_discriminant(d: i128) -> i128 {
    let (core, _) = squarefree_decompose(d);
    if core == 1 {
        return 1;
    }
    if core.rem_euclid(4) == 1 {
        core
    } else {
        4 * core
    }
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rational::one());
            continue;
        }
        let mut acc = Rational::zero();
        let mut binom = BigInt::one();
        for k in 0..m {
            acc += Rational::from_integer(binom.clone()) * &b[k];
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// A real number of the form `coef * sqrt(rad) * pi^(half_pi / 2)` with `rad` squarefree.
#[derive(Clone, Debug, PartialEq)]
pub struct Surd {
    pub coef: Rational,
    pub rad: u64,
    pub half_pi: i32,
}

impl Surd {
    pub fn rational(q: Rational) -> Self {
        Surd { coef: q, rad: 1, half_pi: 0 }
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn sqrt_int(n: u64) -> Self {
        let (core, sq) = squarefree_decompose(n as i128);
        Surd { coef: rat_int(sq), rad: core as u64, half_pi: 0 }
    }

    pub fn pi_pow_half(half: i32) -> Self {
        Surd { coef: Rational::one(), rad: 1, half_pi: half }
    }

    pub fn mul(&self, o: &Surd) -> Surd {
        let g = (self.rad as u128).gcd(&(o.rad as u128));
        let rad = (self.rad as u128 / g) * (o.rad as u128 / g);
        Surd {
            coef: &self.coef * &o.coef * rat_int(g as i128),
            rad: rad as u64,
            half_pi: self.half_pi + o.half_pi,
        }
    }

    pub fn recip(&self) -> Surd {
        Surd {
            coef: self.coef.recip() / rat_int(self.rad as i128),
            rad: self.rad,
            half_pi: -self.half_pi,
        }
    }

    pub fn scale(&self, q: &Rational) -> Surd {
        Surd { coef: &self.coef * q, rad: self.rad, half_pi: self.half_pi }
    }

    /// Collapses to a rational; `None` if a surd or a power of pi survives.
    pub fn to_rational(&self) -> Option<Rational> {
        if self.rad == 1 && self.half_pi == 0 {
            Some(self.coef.clone())
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.coef.to_f64().unwrap_or(f64::NAN)
            * (self.rad as f64).sqrt()
            * std::f64::consts::PI.powf(self.half_pi as f64 / 2.0)
    }
}

/// `Gamma(j/2)` for `j >= 1`.
pub fn gamma_half(j: u32) -> Surd {
    if j % 2 == 0 {
        let k = j / 2;
        let mut f = BigInt::one();
        for i in 1..k {
            f *= BigInt::from(i);
        }
        Surd::rational(Rational::from_integer(f))
    } else {
        // Gamma(m + 1/2) = (2m)! / (4^m m!) sqrt(pi)
        let m = (j - 1) / 2;
        let mut num = BigInt::one();
        for i in 1..=(2 * m) {
            num *= BigInt::from(i);
        }
        let mut den = BigInt::one();
        for i in 1..=m {
            den *= BigInt::from(i);
        }
        den *= BigInt::from(4).pow(m);
        Surd { coef: Rational::new(num, den), rad: 1, half_pi: 1 }
    }
}

/// `zeta(2k)` for `k >= 1`.
pub fn zeta_even(k: u32) -> Surd {
    let two_k = 2 * k as usize;
    let b = bernoulli_numbers(two_k);
    let mut fact = BigInt::one();
    for i in 1..=two_k {
        fact *= BigInt::from(i);
    }
    // (-1)^(k+1) B_2k (2 pi)^2k / (2 (2k)!)
    let mut c = b[two_k].clone() * Rational::from_integer(BigInt::from(2).pow(two_k as u32))
        / Rational::from_integer(fact * 2);
    if k % 2 == 0 {
        c = -c;
    }
    Surd { coef: c, rad: 1, half_pi: 2 * two_k as i32 }
}

/// Generalized Bernoulli number `B_{k,chi}` for the primitive real character of
/// fundamental discriminant `disc` (conductor `|disc|`).
pub fn generalized_bernoulli(k: usize, disc: i128) -> Rational {
    // the sum is linear in |disc|, and genera of one determinant share it
    thread_local! {
        static RECENT: std::cell::RefCell<Vec<((usize, i128), Rational)>> = const { std::cell::RefCell::new(Vec::new()) };
    }
    if let Some(b) = RECENT.with(|r| r.borrow().iter().find(|e| e.0 == (k, disc)).map(|e| e.1.clone())) {
        return b;
    }
    let b = bernoulli_uncached(k, disc);
    RECENT.with(|r| {
        let mut r = r.borrow_mut();
        if r.len() == 8 {
            r.remove(0);
        }
        r.push(((k, disc), b.clone()));
    });
    b
}

fn bernoulli_uncached(k: usize, disc: i128) -> Rational {
    let f = disc.unsigned_abs() as u64;
    let bern = bernoulli_numbers(k);
    if f == 1 {
        let mut b = bern[k].clone();
        if k == 1 {
            b = -b;
        }
        return b;
    }
    // f^(k-1) sum_{a=1}^{f} chi(a) B_k(a/f), with B_k(x) expanded to keep this linear in f.
    // sum_a chi(a) B_k(a/f) = sum_j binom(k,j) B_j f^{-(k-j)} sum_a chi(a) a^(k-j).
    let mut power_sums = vec![BigInt::zero(); k + 1];
    let fits_i128 = (f as f64).powi(k as i32 + 1) < 1e37;
    if fits_i128 {
        let mut sums = vec![0i128; k + 1];
        for a in 1..=f {
            let c = kronecker(disc, a) as i128;
            if c == 0 {
                continue;
            }
            let mut ap = 1i128;
            for s in sums.iter_mut() {
                *s += c * ap;
                ap *= a as i128;
            }
        }
        power_sums = sums.into_iter().map(BigInt::from).collect();
    }
    for a in (1..=f).filter(|_| !fits_i128) {
        let c = kronecker(disc, a);
        if c == 0 {
            continue;
        }
        let mut ap = BigInt::one();
        for e in 0..=k {
            if c > 0 {
                power_sums[e] += &ap;
            } else {
                power_sums[e] -= &ap;
            }
            ap *= BigInt::from(a);
        }
    }
    let mut acc = Rational::zero();
    let mut binom = BigInt::one();
    for j in 0..=k {
        let e = k - j;
        let term = Rational::from_integer(binom.clone() * &power_sums[e]) * &bern[j]
            / Rational::from_integer(BigInt::from(f).pow(e as u32));
        acc += term;
        binom = binom * BigInt::from(k - j) / BigInt::from(j + 1);
    }
    acc * Rational::from_integer(BigInt::from(f).pow((k - 1) as u32))
}

/// `L(k, chi_disc)` for the primitive real character of fundamental discriminant `disc`,
/// valid when `k` has the parity of the character (even for `disc > 0`, odd for `disc < 0`).
pub fn l_value(k: u32, disc: i128) -> Surd {
    if disc == 1 {
        assert!(k % 2 == 0, "zeta(k) only for even k");
        return zeta_even(k / 2);
    }
    let delta = if disc < 0 { 1 } else { 0 };
    assert!((k as i32 - delta) % 2 == 0, "parity mismatch for L-value");
    let f = disc.unsigned_abs() as u64;
    let bkc = generalized_bernoulli(k as usize, disc);
    let mut fact = BigInt::one();
    for i in 1..=k {
        fact *= BigInt::from(i);
    }
    // (-1)^(1 + (k - delta)/2) sqrt(f)/2 (2 pi / f)^k B_{k,chi} / k!
    let mut c = bkc * Rational::from_integer(BigInt::from(2).pow(k))
        / Rational::from_integer(BigInt::from(f).pow(k) * fact * 2);
    if (1 + (k as i32 - delta) / 2) % 2 != 0 {
        c = -c;
    }
    Surd { coef: c, rad: 1, half_pi: 2 * k as i32 }.mul(&Surd::sqrt_int(f))
}

/// `zeta_D(s) = prod_p (1 - (D/p) p^-s)^-1` with the Kronecker symbol of `D` itself.
pub fn zeta_d(s: u32, d: i128) -> Surd {
    let d0 = fundamental_discriminant(d);
    let mut val = l_value(s, d0);
    let mut primes = prime_divisors((2 * d).unsigned_abs());
    primes.sort_unstable();
    let mut corr = Rational::one();
    for p in primes {
        let ps = rat_int((p as i128).pow(s));
        let chi0 = kronecker(d0, p);
        let chi = kronecker(d, p);
        let num = Rational::one() - rat_int(chi0 as i128) / &ps;
        let den = Rational::one() - rat_int(chi as i128) / &ps;
        corr = corr * num / den;
    }
    val.coef *= corr;
    val
}

pub fn is_perfect_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u128);
    (r * r) as i128 == n
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}
