//! Short vectors, roots, root-system types and reflectivity.

use crate::arith::{factor, gcd_i128, rat, Rational};
use crate::lattice::{adjugate, GramLattice};
use std::collections::BTreeMap;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RootError {
    #[error("norm bound must be positive")]
    ZeroBound,
    #[error("root component matches no irreducible type: {0}")]
    Unmatched(String),
    #[error("no order table entry for dimension {dim}, class ({label})")]
    NoTableEntry { dim: u32, label: char },
}

/// Visits every nonzero `x` with `x^T G x <= bound`, one of each `±x`, in the lattice's own basis.
/// Uses an LLL-reduced basis and a floating Cholesky with slack; norms are rechecked exactly.
pub fn for_each_short_vector(l: &GramLattice, bound: i128, mut f: impl FnMut(&[i128], i128)) {
    let n = l.rank();
    let (red, t) = l.lll();
    let mut q = vec![0f64; n * n];
    for i in 0..n {
        let mut d = red.get(i, i) as f64;
        for k in 0..i {
            d -= q[k * n + k] * q[k * n + i] * q[k * n + i];
        }
        q[i * n + i] = d;
        for j in i + 1..n {
            let mut s = red.get(i, j) as f64;
            for k in 0..i {
                s -= q[k * n + k] * q[k * n + i] * q[k * n + j];
            }
            q[i * n + j] = s / d;
        }
    }
    let slack = 1e-7 * (bound as f64).max(1.0) + 1e-7;
    let mut x = vec![0i128; n];
    let mut out = vec![0i128; n];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        n: usize,
        rem: f64,
        all_zero_above: bool,
        q: &[f64],
        x: &mut Vec<i128>,
        slack: f64,
        visit: &mut dyn FnMut(&[i128]),
    ) {
        let mut c = 0f64;
        for j in i + 1..n {
            c -= q[i * n + j] * x[j] as f64;
        }
        let r = ((rem + slack) / q[i * n + i]).max(0.0).sqrt();
        let mut lo = (c - r).ceil() as i128;
        let hi = (c + r).floor() as i128;
        if all_zero_above {
            lo = lo.max(0);
        }
        for v in lo..=hi {
            x[i] = v;
            let d = v as f64 - c;
            let left = rem - q[i * n + i] * d * d;
            if left < -slack {
                continue;
            }
            if i == 0 {
                if !(all_zero_above && v == 0) {
                    visit(x);
                }
            } else {
                rec(i - 1, n, left, all_zero_above && v == 0, q, x, slack, visit);
            }
        }
        x[i] = 0;
    }
    let mut visit = |y: &[i128]| {
        let nm = red.norm(y);
        if nm <= bound && nm > 0 {
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..n).map(|c| t.at(r, c) * y[c]).sum();
            }
            f(&out, nm);
        }
    };
    rec(n - 1, n, bound as f64, true, &q, &mut x, slack, &mut visit);
}

/// All nonzero vectors of norm at most `bound`, one of each `±v`.
pub fn short_vectors(l: &GramLattice, bound: i128) -> Result<Vec<(Vec<i128>, i128)>, RootError> {
    if bound <= 0 {
        return Err(RootError::ZeroBound);
    }
    let mut out = Vec::new();
    for_each_short_vector(l, bound, |v, nm| out.push((v.to_vec(), nm)));
    Ok(out)
}

/// A root `v`: primitive, and its reflection maps the lattice to itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Root {
    pub coords: Vec<i128>,
    pub norm: i128,
}

pub fn is_root(l: &GramLattice, v: &[i128]) -> bool {
    let nm = l.norm(v);
    if nm <= 0 {
        return false;
    }
    let g = v.iter().fold(0, |a, &x| gcd_i128(a, x));
    g == 1 && l.apply(v).iter().all(|&x| (2 * x) % nm == 0)
}

fn divisors(n: i128) -> Vec<i128> {
    let mut d = vec![1i128];
    for (p, e) in factor(n as u128) {
        let len = d.len();
        let mut pk = 1i128;
        for _ in 0..e {
            pk *= p as i128;
            for i in 0..len {
                d.push(d[i] * pk);
            }
        }
    }
    d.sort_unstable();
    d
}

/// Roots of norm exactly `norm`, one of each `±v`.
pub fn roots_of_norm(l: &GramLattice, norm: i128) -> Vec<Root> {
    roots_by_norm(l).remove(&norm).unwrap_or_default()
}

/// All roots, one of each `±v`, grouped by norm.
///
/// A root `v` of norm `N` has `w = 2v/N` in the dual lattice with norm `4/N`. Small norms are
/// found among short vectors of `L`, large ones among short vectors of the dual; the split point
/// minimizes the estimated size of the two enumerations.
pub fn roots_by_norm(l: &GramLattice) -> BTreeMap<i128, Vec<Root>> {
    let n = l.rank();
    let (red, t) = l.lll();
    let det = red.determinant();
    let e = red.exponent();
    let norms = root_norms(&red);
    // the scaled dual: H = e G^-1, integral
    let adj = adjugate(&red.wide(), n);
    // det / e divides every adjugate entry
    let h: Vec<i128> = adj.iter().map(|&x| x / (det / e)).collect();
    let dual = GramLattice::from_i128(n, &h).expect("scaled dual gram fits i64");
    let (gs_l, gs_d) = (gram_schmidt_norms(&red), gram_schmidt_norms(&dual.lll().0));
    let split = (0..=norms.len())
        .min_by(|&i, &j| {
            let cost = |i: usize| {
                let a = if i > 0 { box_count(&gs_l, norms[i - 1] as f64) } else { 0.0 };
                let b = if i < norms.len() { box_count(&gs_d, (4 * e / norms[i]) as f64) } else { 0.0 };
                a + b
            };
            cost(i).total_cmp(&cost(j))
        })
        .expect("nonempty range");
    let (small, large) = (norms[..split].to_vec(), norms[split..].to_vec());
    let mut out: BTreeMap<i128, Vec<Root>> = BTreeMap::new();
    let mut keep = |v: Vec<i128>, nm: i128| {
        if is_root(&red, &v) {
            let coords = normalize_sign(t.mul_vec(&v));
            out.entry(nm).or_default().push(Root { coords, norm: nm });
        }
    };
    if let Some(&top) = small.last() {
        for_each_short_vector(&red, top, |x, nm| {
            if small.binary_search(&nm).is_ok() {
                keep(x.to_vec(), nm);
            }
        });
    }
    if let Some(&low) = large.first() {
        for_each_short_vector(&dual, 4 * e / low, |y, ny| {
            if (4 * e) % ny != 0 {
                return;
            }
            let nm = 4 * e / ny;
            if large.binary_search(&nm).is_err() {
                return;
            }
            // v = (N/2) G^-1 y = N H y / (2e)
            let hy = dual.apply(y);
            if hy.iter().any(|&c| (c * nm) % (2 * e) != 0) {
                return;
            }
            let v: Vec<i128> = hy.iter().map(|&c| c * nm / (2 * e)).collect();
            if red.norm(&v) == nm {
                keep(v, nm);
            }
        });
    }
    for rs in out.values_mut() {
        rs.sort();
        rs.dedup();
    }
    out
}

/// Squared Gram-Schmidt lengths of the basis.
fn gram_schmidt_norms(l: &GramLattice) -> Vec<f64> {
    let n = l.rank();
    let mut q = vec![0f64; n * n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = l.get(i, i) as f64;
        for k in 0..i {
            d -= q[k * n + k] * q[k * n + i] * q[k * n + i];
        }
        q[i * n + i] = d;
        for j in i + 1..n {
            let mut s = l.get(i, j) as f64;
            for k in 0..i {
                s -= q[k * n + k] * q[k * n + i] * q[k * n + j];
            }
            q[i * n + j] = s / d;
        }
        out.push(d);
    }
    out
}

/// Rough count of the enumeration tree for vectors of norm at most `bound`.
fn box_count(gs: &[f64], bound: f64) -> f64 {
    gs.iter().map(|&b| 1.0 + 2.0 * (bound / b).sqrt()).product()
}

fn normalize_sign(mut v: Vec<i128>) -> Vec<i128> {
    if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Candidate root norms: divisors of twice the exponent of the discriminant group.
pub fn root_norms(l: &GramLattice) -> Vec<i128> {
    divisors(2 * l.exponent())
}

/// The full root set `R(L)`, both signs.
pub fn root_set(l: &GramLattice) -> Vec<Root> {
    let mut out = Vec::new();
    for rs in roots_by_norm(l).into_values() {
        for r in rs {
            let neg = Root { coords: r.coords.iter().map(|x| -x).collect(), norm: r.norm };
            out.push(r);
            out.push(neg);
        }
    }
    out.sort();
    out
}

/// Rank of the span of integer vectors (fraction-free elimination).
pub fn integer_rank(vs: &[Vec<i128>]) -> usize {
    let mut rows: Vec<Vec<i128>> = vs.iter().filter(|v| v.iter().any(|&x| x != 0)).cloned().collect();
    if rows.is_empty() {
        return 0;
    }
    let n = rows[0].len();
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            if r[col] == 0 {
                continue;
            }
            let (a, b) = (piv[col], r[col]);
            for c in 0..n {
                r[c] = a * r[c] - b * piv[c];
            }
            let g = r.iter().fold(0, |acc, &x| gcd_i128(acc, x));
            if g > 1 {
                r.iter_mut().for_each(|x| *x /= g);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Reflective: the roots span a sublattice of full rank.
pub fn is_reflective(l: &GramLattice) -> bool {
    let n = l.rank();
    let found: Vec<Vec<i128>> = roots_by_norm(l).into_values().flatten().map(|r| r.coords).collect();
    found.len() >= n && integer_rank(&found) == n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootType {
    A,
    B,
    C,
    D,
    E6,
    E7,
    E8,
    F4,
    G2,
}

/// One irreducible component `^alpha X_rank` of a root system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootComponent {
    pub kind: RootType,
    pub rank: usize,
    pub scale: Rational,
    pub roots: usize,
}

impl RootComponent {
    pub fn weyl_order(&self) -> u128 {
        let r = self.rank as u128;
        let fact = |k: u128| (1..=k).product::<u128>();
        match self.kind {
            RootType::A => fact(r + 1),
            RootType::B | RootType::C => (1u128 << r) * fact(r),
            RootType::D => (1u128 << (r - 1)) * fact(r),
            RootType::E6 => 51_840,
            RootType::E7 => 2_903_040,
            RootType::E8 => 696_729_600,
            RootType::F4 => 1152,
            RootType::G2 => 12,
        }
    }
}

impl fmt::Display for RootComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            RootType::A => format!("A{}", self.rank),
            RootType::B => format!("B{}", self.rank),
            RootType::C => format!("C{}", self.rank),
            RootType::D => format!("D{}", self.rank),
            k => format!("{k:?}"),
        };
        write!(f, "{name}^({})", self.scale)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSystemReport {
    pub components: Vec<RootComponent>,
    pub total_roots: usize,
    pub span_rank: usize,
    pub dim: usize,
}

impl RootSystemReport {
    pub fn is_reflective(&self) -> bool {
        self.span_rank == self.dim
    }

    /// Order of the Weyl group: the product over components.
    pub fn weyl_order(&self) -> u128 {
        self.components.iter().map(|c| c.weyl_order()).product()
    }
}

impl fmt::Display for RootSystemReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        let body = if parts.is_empty() { "(none)".to_string() } else { parts.join(" + ") };
        write!(f, "{body}, span {}/{}, reflective={}", self.span_rank, self.dim, self.is_reflective())
    }
}

/// Splits roots into components of the non-orthogonality graph and names each one.
pub fn classify_root_system(roots: &[Root], l: &GramLattice) -> Result<RootSystemReport, RootError> {
    let m = roots.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            if l.inner(&roots[i].coords, &roots[j].coords) != 0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..m {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut comps = Vec::new();
    for idx in groups.values() {
        let vs: Vec<Vec<i128>> = idx.iter().map(|&i| roots[i].coords.clone()).collect();
        let rank = integer_rank(&vs);
        let mut norms: Vec<i128> = idx.iter().map(|&i| roots[i].norm).collect();
        norms.sort_unstable();
        norms.dedup();
        comps.push(name_component(rank, idx.len(), &norms, idx.iter().map(|&i| roots[i].norm))?);
    }
    comps.sort_by(|a, b| (a.kind, a.rank, &a.scale).cmp(&(b.kind, b.rank, &b.scale)));
    let all: Vec<Vec<i128>> = roots.iter().map(|r| r.coords.clone()).collect();
    Ok(RootSystemReport { components: comps, total_roots: m, span_rank: integer_rank(&all), dim: l.rank() })
}

fn name_component(
    rank: usize,
    count: usize,
    norms: &[i128],
    each: impl Iterator<Item = i128>,
) -> Result<RootComponent, RootError> {
    let r = rank as i128;
    let c = count as i128;
    let half = |x: i128| rat(x as i64, 2);
    let bad = || RootError::Unmatched(format!("rank {rank}, {count} roots, norms {norms:?}"));
    let (kind, scale) = match norms {
        [nm] => {
            let kind = if c == r * (r + 1) {
                RootType::A
            } else if r >= 4 && c == 2 * r * (r - 1) {
                RootType::D
            } else if r == 6 && c == 72 {
                RootType::E6
            } else if r == 7 && c == 126 {
                RootType::E7
            } else if r == 8 && c == 240 {
                RootType::E8
            } else {
                return Err(bad());
            };
            (kind, half(*nm))
        }
        [short, long] if *long == 2 * short => {
            let n_short = each.filter(|x| x == short).count() as i128;
            if r == 4 && c == 48 {
                (RootType::F4, half(*long))
            } else if c == 2 * r * r && n_short == 2 * r {
                (RootType::B, half(*long))
            } else if c == 2 * r * r && c - n_short == 2 * r {
                (RootType::C, half(*short))
            } else {
                return Err(bad());
            }
        }
        [short, long] if *long == 3 * short && r == 2 && c == 12 => (RootType::G2, half(*short)),
        _ => return Err(bad()),
    };
    Ok(RootComponent { kind, rank, scale, roots: count })
}

pub fn root_system(l: &GramLattice) -> Result<RootSystemReport, RootError> {
    classify_root_system(&root_set(l), l)
}

/// Orders `|O(L)|` of indecomposable reflective lattices of dimension 2 to 4, keyed by the
/// combinatorial class label of the root system (labels are opaque here).
pub fn order_table(dim: u32, label: char) -> Result<u64, RootError> {
    let v = match (dim, label) {
        (2, 'a') | (2, 'c') => 4,
        (2, 'b') => 12,
        (2, 'd') => 8,
        (3, 'a') | (3, 'b') => 8,
        (3, 'c') => 16,
        (3, 'd') | (3, 'e') => 48,
        (4, 'a') | (4, 'b') | (4, 'c') => 16,
        (4, 'd') | (4, 'e') => 32,
        (4, 'f') | (4, 'g') | (4, 'i') => 96,
        (4, 'h') => 72,
        (4, 'j') | (4, 'k') => 240,
        (4, 'l') => 1152,
        _ => return Err(RootError::NoTableEntry { dim, label }),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a2() -> GramLattice {
        GramLattice::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap()
    }
    fn d4() -> GramLattice {
        GramLattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]]).unwrap()
    }

    #[test]
    fn short_vector_counts() {
        assert_eq!(short_vectors(&a2(), 2).unwrap().len(), 3);
        assert_eq!(short_vectors(&GramLattice::identity(4), 1).unwrap().len(), 4);
        assert_eq!(short_vectors(&d4(), 2).unwrap().len(), 12);
        assert_eq!(short_vectors(&a2(), 0), Err(RootError::ZeroBound));
    }

    #[test]
    fn root_sets() {
        let z2 = root_set(&GramLattice::identity(2));
        assert_eq!(z2.len(), 8);
        assert_eq!(z2.iter().filter(|r| r.norm == 1).count(), 4);
        // besides the 6 vectors of norm 2, the 6 of norm 6 (3 times the dual) also reflect A2
        let r = root_set(&a2());
        assert_eq!(r.len(), 12);
        assert_eq!(r.iter().filter(|x| x.norm == 2).count(), 6);
        let r = root_set(&a2().scaled(5).unwrap());
        assert!(r.len() == 12 && r.iter().all(|x| x.norm == 10 || x.norm == 30));
    }

    #[test]
    fn root_types() {
        let r = root_system(&GramLattice::identity(3)).unwrap();
        assert_eq!(r.total_roots, 18);
        assert_eq!(r.components.len(), 1);
        assert_eq!((r.components[0].kind, r.components[0].rank), (RootType::B, 3));
        // D4 is also reflected by its 24 vectors of norm 4, which lie in twice the dual
        let r = root_system(&d4()).unwrap();
        assert_eq!((r.components[0].kind, r.total_roots), (RootType::F4, 48));
        let a1 = GramLattice::diagonal(&[2]);
        let l = a1.direct_sum(&a1.scaled(3).unwrap()).direct_sum(&GramLattice::diagonal(&[1]));
        let r = root_system(&l).unwrap();
        assert_eq!(r.to_string(), "A1^(1/2) + A1^(1) + A1^(3), span 3/3, reflective=true");
        let l = a2().direct_sum(&a2().scaled(3).unwrap());
        let r = root_system(&l).unwrap();
        assert_eq!(r.components.len(), 2);
        assert!(r.components.iter().all(|c| c.kind == RootType::G2));
        let g2 = GramLattice::from_rows(&[vec![2, -3], vec![-3, 6]]).unwrap();
        assert_eq!(root_system(&g2).unwrap().components[0].kind, RootType::G2);
        let b3 = root_system(&GramLattice::from_rows(&[vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 1]]).unwrap()).unwrap();
        assert_eq!(b3.components[0].kind, RootType::B);
    }

    #[test]
    fn reflectivity_examples() {
        assert!(is_reflective(&a2()));
        assert!(is_reflective(&GramLattice::diagonal(&[1, 11])));
        for c in 1..=7 {
            assert!(is_reflective(&a2().scaled(c).unwrap()));
        }
        assert!(is_reflective(&d4()));
        // (-1, 2) has norm 22 and reflects [[2,1],[1,6]], so the span is full
        let l = GramLattice::from_rows(&[vec![2, 1], vec![1, 6]]).unwrap();
        assert_eq!(brute_roots(&l).len(), 4);
        assert!(is_reflective(&l));
        let l = GramLattice::from_rows(&[vec![3, 1], vec![1, 4]]).unwrap();
        assert!(brute_roots(&l).is_empty() && !is_reflective(&l));
    }

    #[test]
    fn order_tables() {
        assert_eq!(order_table(2, 'b'), Ok(12));
        assert_eq!(order_table(3, 'd'), Ok(48));
        assert_eq!(order_table(4, 'l'), Ok(1152));
        assert!(order_table(4, 'm').is_err());
        assert_eq!(root_system(&d4()).unwrap().weyl_order(), 1152);
        assert_eq!(root_system(&a2()).unwrap().weyl_order(), 12);
    }

    /// Coordinate-box root search; the box comes from the dual Gram diagonal.
    fn brute_roots(l: &GramLattice) -> Vec<Vec<i128>> {
        let n = l.rank();
        let bound = 2 * l.exponent();
        let dual = l.dual();
        let boxes: Vec<i128> = (0..n)
            .map(|i| {
                let d = dual.get(i, i);
                let v = (d * Rational::from_integer(bound.into())).to_integer();
                let v: i128 = v.try_into().unwrap();
                ((v as f64).sqrt().floor() as i128) + 1
            })
            .collect();
        let mut out = Vec::new();
        let mut x: Vec<i128> = boxes.iter().map(|b| -b).collect();
        loop {
            if is_root(l, &x) {
                out.push(x.clone());
            }
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                x[k] += 1;
                if x[k] <= boxes[k] {
                    break;
                }
                x[k] = -boxes[k];
                k += 1;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn roots_match_box_search(v in proptest::collection::vec(-2i64..=2, 9)) {
            let n = 3;
            let mut g = vec![0i64; 9];
            for i in 0..n { for j in 0..n {
                let mut s = if i == j { 1 } else { 0 };
                for k in 0..n { s += v[k * n + i] * v[k * n + j]; }
                g[i * n + j] = s;
            }}
            let l = GramLattice::new(3, g).unwrap();
            prop_assume!(l.determinant() <= 200);
            let mut a: Vec<Vec<i128>> = root_set(&l).into_iter().map(|r| r.coords).collect();
            let mut b = brute_roots(&l);
            a.sort(); b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn scaling_keeps_roots(c in 1i64..8) {
            let l = GramLattice::from_rows(&[vec![2, 1, 0], vec![1, 4, 1], vec![0, 1, 6]]).unwrap();
            let a: Vec<_> = root_set(&l).into_iter().map(|r| r.coords).collect();
            let b: Vec<_> = root_set(&l.scaled(c).unwrap()).into_iter().map(|r| r.coords).collect();
            prop_assert_eq!(a, b);
        }
    }
}
