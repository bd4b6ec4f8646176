//! Shared fixtures for the criterion benches.

use refgen_core::GramLattice;

pub fn d4() -> GramLattice {
    GramLattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]])
        .expect("D4 is positive definite")
}

/// A ternary lattice with several primes in its determinant.
pub fn mixed_ternary() -> GramLattice {
    GramLattice::from_rows(&[vec![3, 1, 0], vec![1, 5, 2], vec![0, 2, 14]]).expect("positive definite")
}

/// A quaternary lattice with a square in its determinant.
pub fn mixed_quaternary() -> GramLattice {
    GramLattice::from_rows(&[vec![2, 1, 0, 0], vec![1, 2, 0, 0], vec![0, 0, 6, 3], vec![0, 0, 3, 12]])
        .expect("positive definite")
}
