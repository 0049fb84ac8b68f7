//! Dense operator arithmetic on a finite-dimensional Hilbert space.
//!
//! Operators are `D×D` complex matrices. Superoperators are `D²×D²` matrices
//! acting on column-stacked operators: the entry `(i, j)` of `X` sits at
//! position `i + j·D` of `vec(X)`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! Every superoperator and Choi matrix in the crate uses this one convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for Hermiticity checks.
pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
/// Default tolerance for orthonormality and rank checks.
pub const DEFAULT_ORTHONORMALITY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().sum()
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.norm()
}

/// Frobenius pairing `Tr(A† B)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "frobenius_inner: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `Tr(A B)` without the shape check, for hot loops on known-square operands.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn ensure_finite(a: &CMatrix, what: &str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Column-stacking vectorization.
pub fn vectorize(x: &CMatrix) -> Result<CVector> {
    ensure_square(x)?;
    // nalgebra storage is column-major, which is exactly column stacking.
    Ok(CVector::from_column_slice(x.as_slice()))
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &CVector, dim: usize) -> Result<CMatrix> {
    if v.len() != dim * dim {
        return Err(Error::Dimension(format!(
            "devectorize: length {} is not {}²",
            v.len(),
            dim
        )));
    }
    Ok(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// Matrix unit `|i⟩⟨j|`.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = c(1.0);
    m
}

/// Fixed Frobenius-orthonormal Hermitian basis: `I/√D` first, then for each
/// index pair `(j, k)` with `j ≤ k` in lexicographic order the diagonal unit
/// `|j⟩⟨j|`, or the symmetric and antisymmetric combinations
/// `(|j⟩⟨k| + |k⟩⟨j|)/√2` and `−i(|j⟩⟨k| − |k⟩⟨j|)/√2`.
///
/// The identity makes the list overcomplete by one element; it is meant to be
/// consumed by a pivoting Gram–Schmidt, not used as a basis directly.
pub fn canonical_hermitian_sequence(dim: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(dim * dim + 1);
    out.push(CMatrix::identity(dim, dim) * c(1.0 / (dim as f64).sqrt()));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for k in j..dim {
            if j == k {
                out.push(matrix_unit(dim, j, j));
            } else {
                let mut sym = CMatrix::zeros(dim, dim);
                sym[(j, k)] = c(s);
                sym[(k, j)] = c(s);
                out.push(sym);
                let mut anti = CMatrix::zeros(dim, dim);
                anti[(j, k)] = C64::new(0.0, -s);
                anti[(k, j)] = C64::new(0.0, s);
                out.push(anti);
            }
        }
    }
    out
}

/// A square matrix whose anti-Hermitian part is negligible.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_HERMITICITY_TOL)
    }

    /// Checks `‖M − M†‖_F ≤ tol·‖M‖_F`; the stored matrix is the exact
    /// Hermitian part `(M + M†)/2`.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m, "hermitian operator")?;
        let norm = m.norm();
        let defect = (&m - m.adjoint()).norm();
        if defect > tol * norm {
            return Err(Error::NotHermitian {
                defect: if norm > 0.0 { defect / norm } else { defect },
                tol,
            });
        }
        Ok(Self::hermitize(&m))
    }

    /// `(M + M†)/2`, unconditionally.
    pub fn hermitize(m: &CMatrix) -> Self {
        Self((m + m.adjoint()) * c(0.5))
    }

    pub fn zero(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for HermitianOperator {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Real-linear Gram–Schmidt under the Frobenius product.
///
/// Two orthogonalization passes per vector keep the Gram matrix at the
/// identity to roundoff. A vector whose residual falls below `tol` times its
/// original norm is reported as a rank deficiency.
pub fn orthonormalize_hermitian(
    basis: &[HermitianOperator],
    tol: f64,
) -> Result<Vec<HermitianOperator>> {
    let Some(first) = basis.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let mut out: Vec<CMatrix> = Vec::with_capacity(basis.len());
    for (idx, h) in basis.iter().enumerate() {
        if h.dim() != dim {
            return Err(Error::Dimension(format!(
                "orthonormalize_hermitian: element {idx} has dimension {}, expected {dim}",
                h.dim()
            )));
        }
        let norm0 = h.matrix().norm();
        let mut v = h.matrix().clone();
        for _ in 0..2 {
            for q in &out {
                let proj = trace_product(q, &v).re;
                v -= q * c(proj);
            }
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= tol * norm0 {
            return Err(Error::DegenerateBasis(format!(
                "element {idx} is linearly dependent on its predecessors (residual {:.3e})",
                if norm0 > 0.0 { norm / norm0 } else { 0.0 }
            )));
        }
        v /= c(norm);
        out.push(HermitianOperator::hermitize(&v).into_inner());
    }
    Ok(out.into_iter().map(HermitianOperator).collect())
}

/// Anything that maps operators to operators linearly.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> CMatrix;
}

/// A linear map on `D×D` operators, stored as its `D²×D²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "superoperator on dimension {dim} needs a {n}x{n} matrix, got {:?}",
                matrix.shape()
            )));
        }
        ensure_finite(&matrix, "superoperator")?;
        Ok(Self { dim, matrix })
    }

    /// Tabulates `f` on the matrix units.
    pub fn from_map(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&matrix_unit(dim, i, j));
                matrix
                    .column_mut(i + j * dim)
                    .copy_from_slice(image.as_slice());
            }
        }
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        let n = dim * dim;
        Self {
            dim,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zero(dim: usize) -> Self {
        let n = dim * dim;
        Self {
            dim,
            matrix: CMatrix::zeros(n, n),
        }
    }

    /// `X ↦ Xᵀ`, the standard example of a positive but not completely
    /// positive map.
    pub fn transpose_map(dim: usize) -> Self {
        Self::from_map(dim, |x| x.transpose())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// Adjoint under the Frobenius pairing: the conjugate transpose of the
    /// matrix.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "compose: dimension mismatch");
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `self + scale·other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        Self {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix * c(scale),
        }
    }

    /// Largest singular value of the matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Frobenius distance between two superoperator matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

impl LinearMap for Superoperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.shape(), (self.dim, self.dim), "apply: operator shape");
        let v = &self.matrix * CVector::from_column_slice(x.as_slice());
        CMatrix::from_column_slice(self.dim, self.dim, v.as_slice())
    }
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ S(|i⟩⟨j|)`, unnormalized: trace `D` for a
/// trace-preserving map.
pub fn choi_matrix(s: &Superoperator) -> CMatrix {
    let d = s.dim();
    let mut choi = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let col = s.matrix().column(i + j * d);
            for b in 0..d {
                for a in 0..d {
                    choi[(i * d + a, j * d + b)] = col[a + b * d];
                }
            }
        }
    }
    choi
}

/// Complete-positivity and trace-preservation figures of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpTpDiagnostics {
    /// Smallest eigenvalue of the Hermitized Choi matrix.
    pub min_choi_eigenvalue: f64,
    /// `max |Tr S(X) − Tr X| / ‖X‖_F` over the matrix-unit basis.
    pub trace_defect: f64,
}

pub fn cp_tp_diagnostics(s: &Superoperator) -> CpTpDiagnostics {
    let choi = choi_matrix(s);
    let herm = (&choi + choi.adjoint()) * c(0.5);
    let min_choi_eigenvalue = SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let d = s.dim();
    let mut trace_defect: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            let col = s.matrix().column(i + j * d);
            let tr: C64 = (0..d).map(|a| col[a + a * d]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            trace_defect = trace_defect.max((tr - c(expected)).norm());
        }
    }
    CpTpDiagnostics {
        min_choi_eigenvalue,
        trace_defect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(a: [[(f64, f64); 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| C64::new(a[i][j].0, a[i][j].1))
    }

    fn sx() -> CMatrix {
        m2([[(0., 0.), (1., 0.)], [(1., 0.), (0., 0.)]])
    }
    fn sy() -> CMatrix {
        m2([[(0., 0.), (0., -1.)], [(0., 1.), (0., 0.)]])
    }
    fn sz() -> CMatrix {
        m2([[(1., 0.), (0., 0.)], [(0., 0.), (-1., 0.)]])
    }
    fn sminus() -> CMatrix {
        matrix_unit(2, 0, 1)
    }

    #[test]
    fn frobenius_inner_examples() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), c(2.0));
        assert_eq!(frobenius_inner(&sx(), &sy()).unwrap(), c(0.0));
        assert_eq!(frobenius_inner(&sminus(), &sminus()).unwrap(), c(1.0));
        assert!(matches!(
            frobenius_inner(&i2, &CMatrix::identity(3, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let x = m2([[(1., 0.), (2., 0.)], [(3., 0.), (4., 0.)]]);
        let v = vectorize(&x).unwrap();
        let expected: Vec<C64> = [1., 3., 2., 4.].iter().map(|&r| c(r)).collect();
        assert_eq!(v.as_slice(), expected.as_slice());
        assert_eq!(devectorize(&v, 2).unwrap(), x);

        assert!(vectorize(&CMatrix::zeros(2, 2))
            .unwrap()
            .iter()
            .all(|z| *z == c(0.0)));
        let id = vectorize(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.as_slice(), &[c(1.), c(0.), c(0.), c(1.)]);

        assert!(matches!(
            vectorize(&CMatrix::zeros(2, 3)),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
        assert!(devectorize(&CVector::zeros(5), 2).is_err());
    }

    #[test]
    fn vec_of_sandwich_matches_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::gaussian_matrix(&mut rng, 3);
        let b = random::gaussian_matrix(&mut rng, 3);
        let x = random::gaussian_matrix(&mut rng, 3);
        let lhs = vectorize(&(&a * &x * &b)).unwrap();
        let rhs = b.transpose().kronecker(&a) * vectorize(&x).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn hermitian_check() {
        assert!(HermitianOperator::new(sy()).is_ok());
        assert!(matches!(
            HermitianOperator::new(sminus()),
            Err(Error::NotHermitian { .. })
        ));
        let mut bad = sx();
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(
            HermitianOperator::new(bad),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn orthonormalize_examples() {
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let h = |m: CMatrix| HermitianOperator::new(m).unwrap();

        let id_half = CMatrix::identity(2, 2) * c(r2);
        let out = orthonormalize_hermitian(&[h(id_half.clone())], 1e-10).unwrap();
        assert!((out[0].matrix() - &id_half).norm() < 1e-15);

        let out = orthonormalize_hermitian(&[h(CMatrix::identity(2, 2)), h(sz())], 1e-10).unwrap();
        assert!((out[0].matrix() - &id_half).norm() < 1e-15);
        assert!((out[1].matrix() - sz() * c(r2)).norm() < 1e-15);

        // {|g⟩⟨g|, I}: the second element becomes |e⟩⟨e|.
        let gg = matrix_unit(2, 0, 0);
        let out =
            orthonormalize_hermitian(&[h(gg.clone()), h(CMatrix::identity(2, 2))], 1e-10).unwrap();
        assert!((out[0].matrix() - &gg).norm() < 1e-15);
        assert!((out[1].matrix() - matrix_unit(2, 1, 1)).norm() < 1e-15);

        let err = orthonormalize_hermitian(&[h(sz()), h(sz() * c(2.0))], 1e-10);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn orthonormalize_random_gram_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis: Vec<_> = (0..9).map(|_| random::hermitian(&mut rng, 3)).collect();
        let out = orthonormalize_hermitian(&basis, 1e-10).unwrap();
        for (a, qa) in out.iter().enumerate() {
            for (b, qb) in out.iter().enumerate() {
                let g = frobenius_inner(qa.matrix(), qb.matrix()).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((g - c(expected)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn choi_of_identity_is_maximally_entangled_projector() {
        let choi = choi_matrix(&Superoperator::identity(2));
        let mut omega = CVector::zeros(4);
        omega[0] = c(1.0);
        omega[3] = c(1.0);
        let expected = &omega * omega.adjoint();
        assert_eq!(choi, expected);
        assert_abs_diff_eq!(trace(&choi).re, 2.0);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let t = Superoperator::transpose_map(2);
        let diag = cp_tp_diagnostics(&t);
        // Choi of the transpose is the swap, spectrum {1, 1, 1, -1}.
        assert_abs_diff_eq!(diag.min_choi_eigenvalue / 2.0, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.trace_defect, 0.0);
    }

    #[test]
    fn superoperator_from_map_agrees_with_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random::gaussian_matrix(&mut rng, 3);
        let f = |x: &CMatrix| &a * x * a.adjoint() - x * c(0.3);
        let s = Superoperator::from_map(3, f);
        for _ in 0..100 {
            let x = random::gaussian_matrix(&mut rng, 3);
            assert!((s.apply(&x) - f(&x)).norm() <= 1e-12 * x.norm() * (1.0 + a.norm().powi(2)));
        }
    }

    #[test]
    fn composition_of_channels_has_psd_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k1 = random::channel(&mut rng, 2, 3);
        let k2 = random::channel(&mut rng, 2, 2);
        let diag = cp_tp_diagnostics(&k1.compose(&k2));
        assert!(diag.min_choi_eigenvalue >= -1e-10);
        assert!(diag.trace_defect <= 1e-12);
    }

    #[test]
    fn canonical_sequence_is_orthonormal_after_identity() {
        let seq = canonical_hermitian_sequence(3);
        assert_eq!(seq.len(), 10);
        for (a, qa) in seq.iter().enumerate().skip(1) {
            assert!((qa - qa.adjoint()).norm() == 0.0);
            for (b, qb) in seq.iter().enumerate().skip(1) {
                let g = frobenius_inner(qa, qb).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((g - c(expected)).norm() < 1e-15);
            }
        }
    }
}
