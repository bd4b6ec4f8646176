//! Exact Minkowski–Siegel masses of genus symbols: a standard mass times local corrections
//! at the primes dividing twice the determinant.

use crate::arith::{gamma_half, kronecker, rat, rat_int, zeta_d, zeta_even, Rational, Surd};
use crate::local::{Constituent, GenusSymbol, LocalSymbol};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MassError {
    #[error("determinant must be nonzero")]
    ZeroDeterminant,
    #[error("rank {0} unsupported for masses")]
    BadRank(u32),
    #[error("mass did not collapse to a rational (residual sqrt {rad}, pi^{half_pi}/2)")]
    Irrational { rad: u64, half_pi: i32 },
}

/// The mass `sum 1/|O(M)|` of a genus, as an exact positive rational.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExactMass(pub Rational);

impl fmt::Display for ExactMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// `(-1)^s det` with `s = ceil(n/2)`.
pub fn signed_det(n: u32, det: i128) -> i128 {
    if n.div_ceil(2) % 2 == 1 {
        -det
    } else {
        det
    }
}

/// `std(n, D) = 2 pi^{-n(n+1)/4} prod Gamma(j/2) zeta(2) ... zeta(2s-2) [zeta_D(s) if n even]`.
pub fn standard_mass(n: u32, d: i128) -> Result<Surd, MassError> {
    if d == 0 {
        return Err(MassError::ZeroDeterminant);
    }
    if n == 0 || n > 6 {
        return Err(MassError::BadRank(n));
    }
    let s = n.div_ceil(2);
    let mut v = Surd::rational(rat(2, 1)).mul(&Surd::pi_pow_half(-((n * (n + 1)) as i32) / 2));
    for j in 1..=n {
        v = v.mul(&gamma_half(j));
    }
    for k in 1..s {
        v = v.mul(&zeta_even(k));
    }
    if n % 2 == 0 {
        v = v.mul(&zeta_d(s, d));
    }
    Ok(v)
}

/// `M_p` of a species number.
fn species_factor(species: i64, p: u64) -> Rational {
    if species == 0 {
        return Rational::one();
    }
    let n = species.unsigned_abs();
    let s = (n + 1) / 2;
    let pr = rat_int(p as i128);
    let mut mp = rat(2, 1);
    for k in 1..s {
        mp *= Rational::one() - crate::arith::pow_rat(&pr, -2 * k as i32);
    }
    if n % 2 == 0 {
        let t = crate::arith::pow_rat(&pr, -(s as i32));
        mp *= if species > 0 { Rational::one() - t } else { Rational::one() + t };
    }
    mp.recip()
}

/// Species numbers of the constituents of an odd-prime symbol.
pub fn odd_species(sym: &LocalSymbol) -> Vec<i64> {
    sym.constituents
        .iter()
        .map(|c| {
            let n = c.dim as i64;
            if n % 2 == 0 {
                let sign = if (n / 2) % 2 == 0 { 1 } else { -1 };
                if kronecker(sign, sym.p) != c.eps as i32 {
                    return -n;
                }
            }
            n
        })
        .collect()
}

/// Species numbers at 2, including the zero-dimensional forms around and between constituents.
pub fn dyadic_species(sym: &[Constituent]) -> Vec<i64> {
    let max = sym.iter().map(|c| c.scale).max().unwrap_or(0);
    // dense list from scale -2 to max + 2 (offset by 2)
    let blank = |s: u32| Constituent::two(s, 0, 1, false, 0);
    let dense: Vec<Constituent> = (0..max + 5)
        .map(|k| {
            if k < 2 {
                blank(k)
            } else {
                sym.iter().find(|c| c.scale == k - 2).copied().unwrap_or(blank(k))
            }
        })
        .collect();
    let mut out = Vec::new();
    for k in 1..dense.len() - 1 {
        let free = !dense[k - 1].odd && !dense[k + 1].odd;
        let c = dense[k];
        let n = c.dim as i64;
        let octane = (c.oddity as i64 + if c.eps < 0 { 4 } else { 0 }) % 8;
        let t = if !c.odd || n % 2 == 1 { n / 2 } else { n / 2 - 1 };
        let species = if free && matches!(octane, 0 | 1 | 7) {
            2 * t
        } else if free && matches!(octane, 3 | 4 | 5) {
            -2 * t
        } else {
            2 * t + 1
        };
        out.push(species);
    }
    out
}

/// Cross term `p^{(1/2) sum_{i<j} (s_j - s_i) n_i n_j}` as a surd.
fn cross_term(cons: &[Constituent], p: u64) -> Surd {
    let mut e = 0u64;
    for (i, a) in cons.iter().enumerate() {
        for b in &cons[i + 1..] {
            e += (b.scale.abs_diff(a.scale) as u64) * a.dim as u64 * b.dim as u64;
        }
    }
    let base = Surd::rational(rat_int((p as i128).pow((e / 2) as u32)));
    if e % 2 == 1 {
        base.mul(&Surd::sqrt_int(p))
    } else {
        base
    }
}

/// Local mass factor at an odd prime: species factors and cross term.
pub fn local_factor_odd(sym: &LocalSymbol) -> Surd {
    let m: Rational = odd_species(sym).into_iter().map(|s| species_factor(s, sym.p)).product();
    cross_term(&sym.constituents, sym.p).scale(&m)
}

/// Local mass factor at 2, from a valid Jordan realization.
pub fn local_factor_two(sym: &[Constituent]) -> Surd {
    let m: Rational = dyadic_species(sym).into_iter().map(|s| species_factor(s, 2)).product();
    let mut sorted = sym.to_vec();
    sorted.sort();
    let n_ii: u32 = sorted.iter().filter(|c| !c.odd).map(|c| c.dim).sum();
    let n_i_i = sorted.windows(2).filter(|w| w[0].odd && w[1].odd && w[1].scale == w[0].scale + 1).count() as i32;
    let two_pow = crate::arith::pow_rat(&rat(2, 1), n_i_i - n_ii as i32);
    cross_term(&sorted, 2).scale(&(m * two_pow))
}

/// Reciprocal of the standard local factor: `2 prod_{j<s} (1 - p^{-2j})`, times `(1 - (D/p) p^{-s})` for even n.
fn inverse_standard_factor(n: u32, d: i128, p: u64) -> Rational {
    let s = n.div_ceil(2);
    let pr = rat_int(p as i128);
    let mut v = rat(2, 1);
    for j in 1..s {
        v *= Rational::one() - crate::arith::pow_rat(&pr, -2 * j as i32);
    }
    if n % 2 == 0 {
        v *= Rational::one() - rat_int(kronecker(d, p) as i128) * crate::arith::pow_rat(&pr, -(s as i32));
    }
    v
}

pub fn mass(g: &GenusSymbol) -> Result<ExactMass, MassError> {
    let n = g.rank();
    if n == 1 {
        return Ok(ExactMass(rat(1, 2)));
    }
    let d = signed_det(n, g.det());
    let mut total = standard_mass(n, d)?;
    for p in g.primes() {
        let f = if p == 2 { local_factor_two(g.two_adic()) } else { local_factor_odd(&g.local(p)) };
        total = total.mul(&f).scale(&inverse_standard_factor(n, d, p));
    }
    match total.to_rational() {
        Some(q) if q.is_positive() => Ok(ExactMass(q)),
        Some(_) => unreachable!("mass must be positive"),
        None => Err(MassError::Irrational { rad: total.rad, half_pi: total.half_pi }),
    }
}

/// Constant in front of the product of [`local_weight`]s: the exact mass in rank 3 and the
/// L-value-free lower bound in rank 4.
pub fn weight_constant(n: u32) -> Rational {
    match n {
        3 => rat(1, 6),
        4 => rat(1, 90),
        _ => panic!("weights defined for rank 3 and 4"),
    }
}

/// Per-prime factor of the mass (rank 3) or of the rank-4 lower bound, for `p | 2d`.
pub fn local_weight(n: u32, p: u64, cons: &[Constituent]) -> Surd {
    let f = if p == 2 {
        local_factor_two(cons)
    } else {
        local_factor_odd(&LocalSymbol { p, constituents: cons.to_vec() })
    };
    let pr = rat_int(p as i128);
    match n {
        3 => f.scale(&inverse_standard_factor(3, -1, p)),
        4 => f.scale(&(rat(2, 1) * (Rational::one() - crate::arith::pow_rat(&pr, -2)))),
        _ => panic!("weights defined for rank 3 and 4"),
    }
}

/// Lower bound for the mass of a rank-4 genus that avoids the L-value:
/// `(1/90) prod_{p | 2d} 2 (1 - p^{-2}) m_p`, using `zeta_D(2) prod_{p | 2d}(1 - (D/p) p^{-2}) >= pi^2/15`.
/// The value may carry a square root, so it is returned as a surd.
pub fn mass_lower_bound_rank4(g: &GenusSymbol) -> Surd {
    assert_eq!(g.rank(), 4);
    let mut v = Surd::rational(rat(1, 90));
    for p in g.primes() {
        let f = if p == 2 { local_factor_two(g.two_adic()) } else { local_factor_odd(&g.local(p)) };
        let pr = rat_int(p as i128);
        v = v.mul(&f).scale(&(rat(2, 1) * (Rational::one() - crate::arith::pow_rat(&pr, -2))));
    }
    v
}

/// Exact comparison `x <= q` for a positive surd without pi and a positive rational.
pub fn surd_le(x: &Surd, q: &Rational) -> bool {
    assert_eq!(x.half_pi, 0, "comparison needs a pi-free surd");
    &x.coef * &x.coef * rat_int(x.rad as i128) <= q * q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GramLattice;

    fn m(l: &GramLattice) -> Rational {
        mass(&GenusSymbol::from_lattice(l)).unwrap().0
    }

    #[test]
    fn standard_mass_rank3_is_one_sixth() {
        for d in [1, 2, 7, 30] {
            assert_eq!(standard_mass(3, -d).unwrap().to_rational(), Some(rat(1, 6)));
        }
        assert_eq!(standard_mass(3, 0), Err(MassError::ZeroDeterminant));
    }

    #[test]
    fn small_masses() {
        assert_eq!(m(&GramLattice::identity(3)), rat(1, 48));
        assert_eq!(m(&GramLattice::identity(4)), rat(1, 384));
        assert_eq!(m(&GramLattice::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap()), rat(1, 12));
        let d4 = GramLattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]])
            .unwrap();
        assert_eq!(m(&d4), rat(1, 1152));
        assert_eq!(m(&GramLattice::identity(2)), rat(1, 8));
        assert_eq!(m(&GramLattice::identity(1)), rat(1, 2));
    }

    #[test]
    fn odd_species_signs() {
        // a 2-dimensional unimodular form at 3 of sign +: (-1/3) = -1, so species -2
        let s = LocalSymbol { p: 3, constituents: vec![Constituent::odd_p(0, 2, 1)] };
        assert_eq!(odd_species(&s), vec![-2]);
        let s = LocalSymbol { p: 5, constituents: vec![Constituent::odd_p(0, 2, 1)] };
        assert_eq!(odd_species(&s), vec![2]);
    }

    #[test]
    fn weights_reproduce_masses() {
        for l in [GramLattice::identity(3), GramLattice::diagonal(&[1, 2, 3]), GramLattice::diagonal(&[1, 5, 7])] {
            let g = GenusSymbol::from_lattice(&l);
            let mut w = Surd::rational(weight_constant(3));
            for p in g.primes() {
                let cons = if p == 2 { g.two_adic().to_vec() } else { g.local(p).constituents };
                w = w.mul(&local_weight(3, p, &cons));
            }
            assert_eq!(w.to_rational(), Some(mass(&g).unwrap().0));
        }
        let g = GenusSymbol::from_lattice(&GramLattice::diagonal(&[1, 1, 3, 5]));
        let mut w = Surd::rational(weight_constant(4));
        for p in g.primes() {
            let cons = if p == 2 { g.two_adic().to_vec() } else { g.local(p).constituents };
            w = w.mul(&local_weight(4, p, &cons));
        }
        assert_eq!(w, mass_lower_bound_rank4(&g));
    }

    #[test]
    fn lower_bound_below_mass() {
        for l in [
            GramLattice::identity(4),
            GramLattice::diagonal(&[1, 1, 1, 5]),
            GramLattice::diagonal(&[1, 1, 3, 3]),
            GramLattice::diagonal(&[1, 2, 3, 5]),
        ] {
            let g = GenusSymbol::from_lattice(&l);
            let exact = mass(&g).unwrap().0;
            let lb = mass_lower_bound_rank4(&g);
            assert!(surd_le(&lb, &exact), "{g}: {lb:?} > {exact}");
        }
    }
}
