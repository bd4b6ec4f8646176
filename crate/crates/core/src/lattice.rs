//! Integral Gram matrices and the exact integer linear algebra underneath them:
//! determinants, duals, Hermite and Smith forms, LLL, and sublattice constructions.

use crate::arith::{gcd_i128, rat_int, xgcd, Rational};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const MAX_RANK: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("rank {0} outside the supported range 1..=6")]
    BadRank(usize),
    #[error("expected {expected} entries, got {got}")]
    BadShape { expected: usize, got: usize },
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("scale factor must be nonzero")]
    InvalidScale,
    #[error("result is not integral")]
    NotIntegral,
    #[error("integer overflow in lattice arithmetic")]
    Overflow,
    #[error("malformed gram text: {0}")]
    Parse(String),
}

/// Square integer matrix stored row-major; used for bases and transforms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IMat {
    pub n: usize,
    pub a: Vec<i128>,
}

impl IMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        IMat { n, a }
    }

    pub fn from_columns(cols: &[Vec<i128>]) -> Self {
        let n = cols.len();
        let mut a = vec![0; n * n];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                a[i * n + j] = c[i];
            }
        }
        IMat { n, a }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> i128 {
        self.a[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<i128> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    pub fn mul(&self, o: &IMat) -> IMat {
        let n = self.n;
        let mut a = vec![0i128; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.at(i, k);
                if x == 0 {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += x * o.at(k, j);
                }
            }
        }
        IMat { n, a }
    }

    pub fn mul_vec(&self, v: &[i128]) -> Vec<i128> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    pub fn det(&self) -> i128 {
        bareiss_det(&self.a, self.n)
    }
}

/// Fraction-free determinant. Panics if the determinant itself does not fit in `i128`.
pub fn bareiss_det(m: &[i128], n: usize) -> i128 {
    checked_det(m, n).expect("determinant exceeds i128")
}

/// Fraction-free determinant, or `None` if it does not fit in `i128`. Intermediate products of
/// minors can overflow even when the result fits; those steps are redone with big integers.
pub fn checked_det(m: &[i128], n: usize) -> Option<i128> {
    bareiss(m, n, |x: &i128| Some(*x), |a, b, c, d, e| a.checked_mul(*b)?.checked_sub(c.checked_mul(*d)?).map(|x| x / e))
        .or_else(|| {
            let big: Vec<BigInt> = m.iter().map(|&x| BigInt::from(x)).collect();
            bareiss(&big, n, |x: &BigInt| x.to_i128(), |a, b, c, d, e| Some((a * b - c * d) / e))
        })
}

fn bareiss<T: Clone + Zero + One + std::ops::Neg<Output = T>>(
    m: &[T],
    n: usize,
    out: impl Fn(&T) -> Option<i128>,
    step: impl Fn(&T, &T, &T, &T, &T) -> Option<T>,
) -> Option<i128> {
    if n == 0 {
        return Some(1);
    }
    let mut a = m.to_vec();
    let mut negate = false;
    let mut prev = T::one();
    for k in 0..n - 1 {
        if a[k * n + k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !a[r * n + k].is_zero()) else {
                return Some(0);
            };
            for j in 0..n {
                a.swap(k * n + j, r * n + j);
            }
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = step(&a[i * n + j], &a[k * n + k], &a[i * n + k], &a[k * n + j], &prev)?;
            }
        }
        prev = a[k * n + k].clone();
    }
    let d = out(&a[n * n - 1])?;
    Some(if negate { -d } else { d })
}

/// A positive definite integral lattice given by its Gram matrix on a basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GramLattice {
    n: usize,
    gram: Vec<i64>,
    det: i128,
}

#[derive(Serialize, Deserialize)]
struct GramRecord {
    rank: usize,
    entries: Vec<i64>,
}

impl Serialize for GramLattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GramRecord { rank: self.n, entries: self.gram.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramLattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GramRecord::deserialize(d)?;
        GramLattice::new(r.rank, r.entries).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for GramLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GramLattice{:?}", self.rows())
    }
}

impl fmt::Display for GramLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl GramLattice {
    pub fn new(n: usize, gram: Vec<i64>) -> Result<Self, LatticeError> {
        if n == 0 || n > MAX_RANK {
            return Err(LatticeError::BadRank(n));
        }
        if gram.len() != n * n {
            return Err(LatticeError::BadShape { expected: n * n, got: gram.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i * n + j] != gram[j * n + i] {
                    return Err(LatticeError::NotSymmetric);
                }
            }
        }
        let wide: Vec<i128> = gram.iter().map(|&x| x as i128).collect();
        for k in 1..=n {
            let mut minor = Vec::with_capacity(k * k);
            for i in 0..k {
                minor.extend_from_slice(&wide[i * n..i * n + k]);
            }
            if checked_det(&minor, k).ok_or(LatticeError::Overflow)? <= 0 {
                return Err(LatticeError::NotPositiveDefinite);
            }
        }
        let det = checked_det(&wide, n).ok_or(LatticeError::Overflow)?;
        Ok(GramLattice { n, gram, det })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self, LatticeError> {
        let n = rows.len();
        let mut g = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(LatticeError::BadShape { expected: n, got: r.len() });
            }
            g.extend_from_slice(r);
        }
        Self::new(n, g)
    }

    pub fn from_i128(n: usize, g: &[i128]) -> Result<Self, LatticeError> {
        let mut out = Vec::with_capacity(n * n);
        for &x in g {
            out.push(i64::try_from(x).map_err(|_| LatticeError::Overflow)?);
        }
        Self::new(n, out)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1; n])
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let n = d.len();
        let mut g = vec![0; n * n];
        for i in 0..n {
            g[i * n + i] = d[i];
        }
        Self::new(n, g).expect("positive diagonal")
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.gram[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.gram
    }

    pub fn wide(&self) -> Vec<i128> {
        self.gram.iter().map(|&x| x as i128).collect()
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|i| self.gram[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn determinant(&self) -> i128 {
        self.det
    }

    pub fn norm(&self, v: &[i128]) -> i128 {
        let n = self.n;
        let mut s = 0i128;
        for i in 0..n {
            if v[i] == 0 {
                continue;
            }
            let mut r = 0i128;
            for j in 0..n {
                r += self.get(i, j) as i128 * v[j];
            }
            s += v[i] * r;
        }
        s
    }

    pub fn inner(&self, u: &[i128], v: &[i128]) -> i128 {
        let n = self.n;
        let mut s = 0i128;
        for i in 0..n {
            if u[i] == 0 {
                continue;
            }
            for j in 0..n {
                s += u[i] * self.get(i, j) as i128 * v[j];
            }
        }
        s
    }

    /// `G v`, the coordinates of `b(v, e_i)`.
    pub fn apply(&self, v: &[i128]) -> Vec<i128> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as i128 * v[j]).sum())
            .collect()
    }

    /// Gram matrix of the dual lattice on the dual basis.
    pub fn dual(&self) -> RationalGram {
        let n = self.n;
        let adj = adjugate(&self.wide(), n);
        let d = rat_int(self.det);
        RationalGram {
            n,
            gram: adj.into_iter().map(|x| rat_int(x) / &d).collect(),
        }
    }

    pub fn to_rational(&self) -> RationalGram {
        RationalGram { n: self.n, gram: self.gram.iter().map(|&x| rat_int(x as i128)).collect() }
    }

    pub fn rescale(&self, alpha: &Rational) -> Result<RationalGram, LatticeError> {
        self.to_rational().rescale(alpha)
    }

    pub fn scaled(&self, c: i64) -> Result<GramLattice, LatticeError> {
        if c <= 0 {
            return Err(LatticeError::InvalidScale);
        }
        let g = self
            .gram
            .iter()
            .map(|&x| x.checked_mul(c).ok_or(LatticeError::Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        GramLattice::new(self.n, g)
    }

    pub fn direct_sum(&self, o: &GramLattice) -> GramLattice {
        let n = self.n + o.n;
        let mut g = vec![0; n * n];
        for i in 0..self.n {
            for j in 0..self.n {
                g[i * n + j] = self.get(i, j);
            }
        }
        for i in 0..o.n {
            for j in 0..o.n {
                g[(self.n + i) * n + self.n + j] = o.get(i, j);
            }
        }
        GramLattice::new(n, g).expect("direct sum of positive definite lattices")
    }

    pub fn is_even(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i) % 2 == 0)
    }

    /// gcd of all Gram entries.
    pub fn content(&self) -> i64 {
        self.gram.iter().fold(0i128, |g, &x| gcd_i128(g, x as i128)) as i64
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    /// Divides out the content, giving the primitive rescaling.
    pub fn primitive_part(&self) -> GramLattice {
        let c = self.content();
        if c == 1 {
            return self.clone();
        }
        GramLattice::new(self.n, self.gram.iter().map(|&x| x / c).collect()).expect("rescaled")
    }

    /// Gram matrix `B^T G B / div` of the lattice spanned by the columns of `b`.
    pub fn transform_div(&self, b: &IMat, div: i128) -> Result<GramLattice, LatticeError> {
        GramLattice::from_i128(self.n, &self.transform_wide(b, div)?)
    }

    /// As `transform_div`, without narrowing the entries to `i64`.
    pub fn transform_wide(&self, b: &IMat, div: i128) -> Result<Vec<i128>, LatticeError> {
        let n = self.n;
        let g = self.wide();
        let mut gb = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i128;
                for k in 0..n {
                    s = s
                        .checked_add(g[i * n + k].checked_mul(b.at(k, j)).ok_or(LatticeError::Overflow)?)
                        .ok_or(LatticeError::Overflow)?;
                }
                gb[i * n + j] = s;
            }
        }
        let mut out = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0i128;
                for k in 0..n {
                    s = s
                        .checked_add(b.at(k, i).checked_mul(gb[k * n + j]).ok_or(LatticeError::Overflow)?)
                        .ok_or(LatticeError::Overflow)?;
                }
                if s % div != 0 {
                    return Err(LatticeError::NotIntegral);
                }
                out[i * n + j] = s / div;
            }
        }
        Ok(out)
    }

    pub fn transform(&self, b: &IMat) -> Result<GramLattice, LatticeError> {
        self.transform_div(b, 1)
    }

    /// Smith form data: invariant factors `s_1 | s_2 | ...` and a unimodular `Q` with `P G Q = diag(s)`.
    pub fn smith(&self) -> (Vec<i128>, IMat) {
        smith_form(&self.wide(), self.n)
    }

    /// Exponent of the discriminant group `L^# / L`.
    pub fn exponent(&self) -> i128 {
        // the denominator of G^-1 = adj(G) / det; the Smith transform can outgrow i128 here
        let g = adjugate(&self.wide(), self.n).into_iter().fold(0, gcd_i128);
        self.det / gcd_i128(self.det, g)
    }

    /// Basis (as columns) of `{ w : G w = 0 mod m }`, the vectors with `b(w, L) in mZ`.
    pub fn level_sublattice(&self, m: i128) -> IMat {
        let (s, q) = self.smith();
        let n = self.n;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let f = m / gcd_i128(m, s[j]);
            cols.push(q.column(j).into_iter().map(|x| x * f).collect::<Vec<_>>());
        }
        IMat::from_columns(&cols)
    }

    /// LLL-reduced isometric copy together with the basis change.
    pub fn lll(&self) -> (GramLattice, IMat) {
        let (g, t) = lll_gram(&self.wide(), self.n);
        (GramLattice::from_i128(self.n, &g).expect("reduced gram"), t)
    }

    pub fn parse_text(text: &str) -> Result<GramLattice, LatticeError> {
        let rows: Vec<Vec<i64>> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<i64>().map_err(|e| LatticeError::Parse(format!("{t}: {e}"))))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        if rows.len() == 1 && rows[0].len() > 1 {
            // single-line structured form: rank followed by the flattened entries
            let n = rows[0][0];
            if n < 1 || rows[0].len() as i64 != 1 + n * n {
                return Err(LatticeError::Parse("single line must be `rank e11 e12 ...`".into()));
            }
            return GramLattice::new(n as usize, rows[0][1..].to_vec());
        }
        GramLattice::from_rows(&rows)
    }
}

/// Symmetric matrix of rationals, e.g. the Gram matrix of a dual lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalGram {
    pub n: usize,
    pub gram: Vec<Rational>,
}

impl RationalGram {
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.gram[i * self.n + j]
    }

    pub fn rescale(&self, alpha: &Rational) -> Result<RationalGram, LatticeError> {
        if alpha.is_zero() {
            return Err(LatticeError::InvalidScale);
        }
        Ok(RationalGram { n: self.n, gram: self.gram.iter().map(|x| x * alpha).collect() })
    }

    /// Matrix inverse, i.e. the Gram of the dual of this rational lattice.
    pub fn inverse(&self) -> RationalGram {
        let n = self.n;
        let mut a = self.gram.clone();
        let mut inv: Vec<Rational> = (0..n * n)
            .map(|k| if k / n == k % n { Rational::one() } else { Rational::zero() })
            .collect();
        for c in 0..n {
            let p = (c..n).find(|&r| !a[r * n + c].is_zero()).expect("nonsingular");
            if p != c {
                for j in 0..n {
                    a.swap(p * n + j, c * n + j);
                    inv.swap(p * n + j, c * n + j);
                }
            }
            let piv = a[c * n + c].clone();
            for j in 0..n {
                a[c * n + j] = &a[c * n + j] / &piv;
                inv[c * n + j] = &inv[c * n + j] / &piv;
            }
            for r in 0..n {
                if r == c || a[r * n + c].is_zero() {
                    continue;
                }
                let f = a[r * n + c].clone();
                for j in 0..n {
                    let t = &f * &a[c * n + j];
                    a[r * n + j] -= t;
                    let t = &f * &inv[c * n + j];
                    inv[r * n + j] -= t;
                }
            }
        }
        RationalGram { n, gram: inv }
    }

    /// Converts to an integral lattice if every entry is an integer.
    pub fn to_integral(&self) -> Result<GramLattice, LatticeError> {
        let mut g = Vec::with_capacity(self.gram.len());
        for x in &self.gram {
            if !x.is_integer() {
                return Err(LatticeError::NotIntegral);
            }
            let v: i64 = x.to_integer().try_into().map_err(|_| LatticeError::Overflow)?;
            g.push(v);
        }
        GramLattice::new(self.n, g)
    }
}

pub fn adjugate(m: &[i128], n: usize) -> Vec<i128> {
    if n == 1 {
        return vec![1];
    }
    let mut adj = vec![0i128; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut minor = Vec::with_capacity((n - 1) * (n - 1));
            for r in 0..n {
                if r == i {
                    continue;
                }
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    minor.push(m[r * n + c]);
                }
            }
            let d = bareiss_det(&minor, n - 1);
            adj[j * n + i] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    adj
}

/// Echelon basis (rows) of the lattice generated by the given integer rows in `Z^n`.
/// The generators must span a full-rank lattice.
pub fn hnf_basis(gens: &[Vec<i128>], n: usize) -> Vec<Vec<i128>> {
    let mut rows: Vec<Vec<i128>> = gens.iter().filter(|r| r.iter().any(|&x| x != 0)).cloned().collect();
    let mut basis = Vec::with_capacity(n);
    for col in 0..n {
        // Combine all rows with nonzero entry in `col` into one pivot row.
        let mut pivot: Option<Vec<i128>> = None;
        let mut rest = Vec::with_capacity(rows.len());
        for r in rows.into_iter() {
            if r[col] == 0 {
                rest.push(r);
                continue;
            }
            match pivot.take() {
                None => pivot = Some(r),
                Some(p) => {
                    let (g, x, y) = xgcd(p[col], r[col]);
                    let a = p[col] / g;
                    let b = r[col] / g;
                    let np: Vec<i128> = (0..n).map(|k| x * p[k] + y * r[k]).collect();
                    let nr: Vec<i128> = (0..n).map(|k| a * r[k] - b * p[k]).collect();
                    if nr.iter().any(|&v| v != 0) {
                        rest.push(nr);
                    }
                    pivot = Some(np);
                }
            }
        }
        let mut p = pivot.expect("generators must span full rank");
        if p[col] < 0 {
            p.iter_mut().for_each(|x| *x = -*x);
        }
        basis.push(p);
        rows = rest;
    }
    // back-reduce entries above pivots
    for i in 0..n {
        for k in 0..i {
            let q = basis[k][i].div_euclid(basis[i][i]);
            if q != 0 {
                for c in 0..n {
                    basis[k][c] -= q * basis[i][c];
                }
            }
        }
    }
    basis
}

/// Basis matrix (columns) of the lattice generated by the given column vectors.
pub fn lattice_from_generators(gens: &[Vec<i128>], n: usize) -> IMat {
    let rows = hnf_basis(gens, n);
    IMat::from_columns(&rows)
}

/// Smith normal form of a square integer matrix. Returns the diagonal and a unimodular
/// column transform `Q` with `P M Q = diag` for some unimodular `P`.
pub fn smith_form(m: &[i128], n: usize) -> (Vec<i128>, IMat) {
    let mut a = m.to_vec();
    let mut q = IMat::identity(n);
    let at = |a: &Vec<i128>, i: usize, j: usize| a[i * n + j];
    for t in 0..n {
        loop {
            // pick the smallest nonzero entry in the lower-right block as pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    let v = at(&a, i, j);
                    if v != 0 && best.map_or(true, |(bi, bj)| v.abs() < at(&a, bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish_smith(a, q, n);
            };
            if pi != t {
                for j in 0..n {
                    a.swap(pi * n + j, t * n + j);
                }
            }
            if pj != t {
                for i in 0..n {
                    a.swap(i * n + pj, i * n + t);
                    q.a.swap(i * n + pj, i * n + t);
                }
            }
            let piv = at(&a, t, t);
            let mut clean = true;
            for i in t + 1..n {
                let f = at(&a, i, t).div_euclid(piv);
                if f != 0 {
                    for j in 0..n {
                        a[i * n + j] -= f * a[t * n + j];
                    }
                }
                if at(&a, i, t) != 0 {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let f = at(&a, t, j).div_euclid(piv);
                if f != 0 {
                    for i in 0..n {
                        a[i * n + j] -= f * a[i * n + t];
                        q.a[i * n + j] -= f * q.a[i * n + t];
                    }
                }
                if at(&a, t, j) != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility condition
            let mut bad = None;
            'search: for i in t + 1..n {
                for j in t + 1..n {
                    if at(&a, i, j) % piv != 0 {
                        bad = Some(i);
                        break 'search;
                    }
                }
            }
            match bad {
                None => break,
                Some(i) => {
                    for j in 0..n {
                        a[t * n + j] += a[i * n + j];
                    }
                }
            }
        }
    }
    finish_smith(a, q, n)
}

fn finish_smith(a: Vec<i128>, mut q: IMat, n: usize) -> (Vec<i128>, IMat) {
    let mut d: Vec<i128> = (0..n).map(|i| a[i * n + i]).collect();
    for i in 0..n {
        if d[i] < 0 {
            d[i] = -d[i];
            for r in 0..n {
                q.a[r * n + i] = -q.a[r * n + i];
            }
        }
    }
    (d, q)
}

/// LLL reduction (delta = 0.99) of a positive definite integral Gram matrix.
/// Returns the reduced Gram and the transform `T` (columns are the new basis).
pub fn lll_gram(g0: &[i128], n: usize) -> (Vec<i128>, IMat) {
    let mut g = g0.to_vec();
    let mut t = IMat::identity(n);
    if n == 1 {
        return (g, t);
    }
    let delta = 0.99;
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        assert!(guard < 100_000, "LLL did not terminate");
        // size reduce b_k against b_{k-1}, ..., b_0
        for j in (0..k).rev() {
            let (mu, _) = gso(&g, n);
            let r = mu[k * n + j].round();
            if r != 0.0 {
                let r = r as i128;
                sub_basis(&mut g, &mut t, n, k, j, r);
            }
        }
        let (mu, bstar) = gso(&g, n);
        let lhs = bstar[k];
        let rhs = (delta - mu[k * n + k - 1] * mu[k * n + k - 1]) * bstar[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            swap_basis(&mut g, &mut t, n, k, k - 1);
            k = k.max(2) - 1;
        }
    }
    (g, t)
}

fn gso(g: &[i128], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mu = vec![0f64; n * n];
    let mut b = vec![0f64; n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[i * n + j] as f64;
            for k in 0..j {
                s -= mu[j * n + k] * mu[i * n + k] * b[k];
            }
            mu[i * n + j] = s / b[j];
        }
        let mut s = g[i * n + i] as f64;
        for k in 0..i {
            s -= mu[i * n + k] * mu[i * n + k] * b[k];
        }
        b[i] = s;
    }
    (mu, b)
}

/// b_k <- b_k - r b_j, updating the Gram matrix exactly.
fn sub_basis(g: &mut [i128], t: &mut IMat, n: usize, k: usize, j: usize, r: i128) {
    for i in 0..n {
        t.a[i * n + k] -= r * t.a[i * n + j];
    }
    let gkk = g[k * n + k] - 2 * r * g[k * n + j] + r * r * g[j * n + j];
    for i in 0..n {
        if i == k {
            continue;
        }
        let v = g[k * n + i] - r * g[j * n + i];
        g[k * n + i] = v;
        g[i * n + k] = v;
    }
    g[k * n + k] = gkk;
}

fn swap_basis(g: &mut [i128], t: &mut IMat, n: usize, a: usize, b: usize) {
    for i in 0..n {
        t.a.swap(i * n + a, i * n + b);
    }
    for i in 0..n {
        g.swap(a * n + i, b * n + i);
    }
    for i in 0..n {
        g.swap(i * n + a, i * n + b);
    }
}
