//! Seeded random operators for validation runs and tests.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{c, CMatrix, CVector, HermitianOperator, Superoperator, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Entries i.i.d. standard complex Gaussian.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    HermitianOperator::hermitize(&gaussian_matrix(rng, dim))
}

/// Haar-distributed unit vector.
pub fn haar_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v / c(n)
}

/// Random CPTP map with `n_kraus` Kraus operators, normalized through
/// `(Σ K†K)^{-1/2}`.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_kraus: usize) -> Superoperator {
    let kraus: Vec<CMatrix> = (0..n_kraus).map(|_| gaussian_matrix(rng, dim)).collect();
    let gram = kraus
        .iter()
        .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
    let eig = SymmetricEigen::new(gram);
    let inv_sqrt = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / l.sqrt())));
    let norm = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let kraus: Vec<CMatrix> = kraus.into_iter().map(|k| k * &norm).collect();
    Superoperator::from_map(dim, |x| {
        kraus
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k * x * k.adjoint())
    })
}
