//! GKSL generators in the Schrödinger and Heisenberg pictures.

use crate::error::{Error, Result};
use crate::operator::{
    c, ensure_finite, CMatrix, HermitianOperator, LinearMap, Superoperator, C64,
};

/// Hamiltonian plus collapse operators. Rates are carried by the collapse
/// amplitudes: `√κ·L` contributes `κ·D[L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    hamiltonian: HermitianOperator,
    collapse_ops: Vec<CMatrix>,
    // Σ_ν L_ν† L_ν
    decay_sum: CMatrix,
}

impl GeneratorSpec {
    pub fn new(hamiltonian: HermitianOperator, collapse_ops: Vec<CMatrix>) -> Result<Self> {
        let dim = hamiltonian.dim();
        for (k, l) in collapse_ops.iter().enumerate() {
            if l.shape() != (dim, dim) {
                return Err(Error::Dimension(format!(
                    "collapse operator {k} has shape {:?}, hamiltonian is {dim}x{dim}",
                    l.shape()
                )));
            }
            ensure_finite(l, "collapse operator")?;
        }
        let decay_sum = collapse_ops
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, l| acc + l.adjoint() * l);
        Ok(Self {
            hamiltonian,
            collapse_ops,
            decay_sum,
        })
    }

    /// The zero generator on dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            hamiltonian: HermitianOperator::zero(dim),
            collapse_ops: Vec::new(),
            decay_sum: CMatrix::zeros(dim, dim),
        }
    }

    pub fn hamiltonian_only(hamiltonian: HermitianOperator) -> Self {
        let dim = hamiltonian.dim();
        Self {
            hamiltonian,
            collapse_ops: Vec::new(),
            decay_sum: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[CMatrix] {
        &self.collapse_ops
    }

    pub fn is_zero(&self) -> bool {
        self.hamiltonian.matrix().norm() == 0.0 && self.collapse_ops.iter().all(|l| l.norm() == 0.0)
    }

    /// `ρ ↦ −i[H, ρ] + Σ_ν (L_ν ρ L_ν† − ½{L_ν† L_ν, ρ})`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian.matrix();
        let i = C64::new(0.0, 1.0);
        let mut out = (h * rho - rho * h) * (-i);
        for l in &self.collapse_ops {
            out += l * rho * l.adjoint();
        }
        out -= (&self.decay_sum * rho + rho * &self.decay_sum) * c(0.5);
        out
    }

    /// `W ↦ +i[H, W] + Σ_ν (L_ν† W L_ν − ½{L_ν† L_ν, W})`.
    pub fn apply_adjoint(&self, w: &CMatrix) -> CMatrix {
        let h = self.hamiltonian.matrix();
        let i = C64::new(0.0, 1.0);
        let mut out = (h * w - w * h) * i;
        for l in &self.collapse_ops {
            out += l.adjoint() * w * l;
        }
        out -= (&self.decay_sum * w + w * &self.decay_sum) * c(0.5);
        out
    }

    pub fn schrodinger(&self) -> Picture<'_> {
        Picture {
            spec: self,
            heisenberg: false,
        }
    }

    pub fn heisenberg(&self) -> Picture<'_> {
        Picture {
            spec: self,
            heisenberg: true,
        }
    }
}

/// Operator-level view of a generator, without forming the `D²×D²` matrix.
#[derive(Debug, Clone, Copy)]
pub struct Picture<'a> {
    spec: &'a GeneratorSpec,
    heisenberg: bool,
}

impl LinearMap for Picture<'_> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn apply(&self, x: &CMatrix) -> CMatrix {
        if self.heisenberg {
            self.spec.apply_adjoint(x)
        } else {
            self.spec.apply(x)
        }
    }
}

fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Matrix of the Schrödinger-picture generator under column stacking.
pub fn build_lindbladian(spec: &GeneratorSpec) -> Superoperator {
    let d = spec.dim();
    let id = identity(d);
    let h = spec.hamiltonian.matrix();
    let i = C64::new(0.0, 1.0);
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut m = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    for l in &spec.collapse_ops {
        m += l.conjugate().kronecker(l);
    }
    let k = &spec.decay_sum;
    m -= (id.kronecker(k) + k.transpose().kronecker(&id)) * c(0.5);
    Superoperator::new(d, m).expect("dimensions are consistent by construction")
}

/// Matrix of the Heisenberg-picture generator, assembled from the operators
/// rather than by conjugate-transposing [`build_lindbladian`].
pub fn build_adjoint_lindbladian(spec: &GeneratorSpec) -> Superoperator {
    let d = spec.dim();
    let id = identity(d);
    let h = spec.hamiltonian.matrix();
    let i = C64::new(0.0, 1.0);
    let mut m = (id.kronecker(h) - h.transpose().kronecker(&id)) * i;
    for l in &spec.collapse_ops {
        m += l.transpose().kronecker(&l.adjoint());
    }
    let k = &spec.decay_sum;
    m -= (id.kronecker(k) + k.transpose().kronecker(&id)) * c(0.5);
    Superoperator::new(d, m).expect("dimensions are consistent by construction")
}

/// Fast generator `L0`, perturbation `L1` and the perturbation strengths of
/// interest.
#[derive(Debug, Clone, PartialEq)]
pub struct GKSLModel {
    pub fast: GeneratorSpec,
    pub slow: GeneratorSpec,
    pub epsilon: Vec<f64>,
}

impl GKSLModel {
    pub fn new(fast: GeneratorSpec, slow: GeneratorSpec, epsilon: Vec<f64>) -> Result<Self> {
        if fast.dim() != slow.dim() {
            return Err(Error::Dimension(format!(
                "fast generator has dimension {}, slow generator {}",
                fast.dim(),
                slow.dim()
            )));
        }
        if let Some(bad) = epsilon.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive and finite, got {bad}"
            )));
        }
        Ok(Self {
            fast,
            slow,
            epsilon,
        })
    }

    pub fn dim(&self) -> usize {
        self.fast.dim()
    }
}

/// `L0 + eps·L1`.
pub fn total_generator(model: &GKSLModel, eps: f64) -> Result<Superoperator> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon must be nonnegative, got {eps}"
        )));
    }
    let l0 = build_lindbladian(&model.fast);
    if eps == 0.0 {
        return Ok(l0);
    }
    Ok(l0.add_scaled(eps, &build_lindbladian(&model.slow)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{matrix_unit, trace, trace_product};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sminus() -> CMatrix {
        matrix_unit(2, 0, 1)
    }

    fn sigma_z() -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]))
    }

    fn sigma_x() -> CMatrix {
        matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)
    }

    fn sigma_y() -> CMatrix {
        (matrix_unit(2, 0, 1) - matrix_unit(2, 1, 0)) * C64::new(0.0, -1.0)
    }

    fn damping() -> GeneratorSpec {
        GeneratorSpec::new(HermitianOperator::zero(2), vec![sminus()]).unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng, d: usize, n: usize) -> GeneratorSpec {
        let h = random::hermitian(rng, d);
        let ls = (0..n).map(|_| random::gaussian_matrix(rng, d)).collect();
        GeneratorSpec::new(h, ls).unwrap()
    }

    #[test]
    fn damping_moves_excited_to_ground() {
        let out = damping().apply(&matrix_unit(2, 1, 1));
        let expected = matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1);
        assert!((out - expected).norm() < 1e-15);
    }

    #[test]
    fn pauli_commutator() {
        let spec = GeneratorSpec::hamiltonian_only(HermitianOperator::new(sigma_z()).unwrap());
        let out = spec.apply(&sigma_x());
        assert!((out - sigma_y() * c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_damping_examples() {
        let spec = damping();
        assert!(spec.apply_adjoint(&CMatrix::identity(2, 2)).norm() < 1e-15);
        let out = spec.apply_adjoint(&matrix_unit(2, 1, 1));
        assert!((out + matrix_unit(2, 1, 1)).norm() < 1e-15);
    }

    #[test]
    fn matrices_agree_with_operator_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spec = random_spec(&mut rng, 3, 2);
        let l = build_lindbladian(&spec);
        let la = build_adjoint_lindbladian(&spec);
        for _ in 0..100 {
            let x = random::gaussian_matrix(&mut rng, 3);
            let scale = x.norm() * l.spectral_norm();
            assert!((l.apply(&x) - spec.apply(&x)).norm() <= 1e-12 * scale);
            assert!((la.apply(&x) - spec.apply_adjoint(&x)).norm() <= 1e-12 * scale);
        }
        assert!(la.distance(&l.adjoint()) < 1e-12 * l.spectral_norm());
    }

    #[test]
    fn trace_annihilation_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let spec = random_spec(&mut rng, 3, 3);
        for _ in 0..100 {
            let x = random::gaussian_matrix(&mut rng, 3);
            let lx = spec.apply(&x);
            assert!(trace(&lx).norm() <= 1e-11 * x.norm());
            let lxd = spec.apply(&x.adjoint());
            assert!((lxd - lx.adjoint()).norm() <= 1e-11 * x.norm());
        }
    }

    #[test]
    fn adjoint_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let spec = random_spec(&mut rng, 2, 1);
        for _ in 0..100 {
            let w = random::hermitian(&mut rng, 2);
            let x = random::hermitian(&mut rng, 2);
            let lhs = trace_product(w.matrix(), &spec.apply(x.matrix()));
            let rhs = trace_product(&spec.apply_adjoint(w.matrix()), x.matrix());
            assert!((lhs - rhs).norm() <= 1e-11);
        }
    }

    #[test]
    fn spectrum_in_left_half_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let spec = random_spec(&mut rng, 3, 2);
        let l = build_lindbladian(&spec);
        let norm = l.spectral_norm();
        let eig = nalgebra::Schur::new(l.matrix().clone())
            .eigenvalues()
            .unwrap();
        let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!(max_re <= 1e-9 * norm, "max Re = {max_re}");
    }

    #[test]
    fn total_generator_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let model = GKSLModel::new(
            random_spec(&mut rng, 2, 1),
            random_spec(&mut rng, 2, 1),
            vec![0.1],
        )
        .unwrap();
        let l0 = build_lindbladian(&model.fast);
        let l1 = build_lindbladian(&model.slow);
        assert_eq!(total_generator(&model, 0.0).unwrap(), l0);
        let t = total_generator(&model, 0.3).unwrap();
        assert!(t.distance(&l0.add_scaled(0.3, &l1)) == 0.0);
        assert!(total_generator(&model, -1.0).is_err());

        let no_slow =
            GKSLModel::new(model.fast.clone(), GeneratorSpec::zero(2), vec![1.0]).unwrap();
        assert_eq!(total_generator(&no_slow, 1.0).unwrap(), l0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = HermitianOperator::zero(2);
        assert!(matches!(
            GeneratorSpec::new(h, vec![CMatrix::zeros(3, 3)]),
            Err(Error::Dimension(_))
        ));
        assert!(GKSLModel::new(GeneratorSpec::zero(2), GeneratorSpec::zero(3), vec![0.1]).is_err());
        assert!(GKSLModel::new(GeneratorSpec::zero(2), GeneratorSpec::zero(2), vec![0.0]).is_err());
    }
}
