//! Slow/fast structure of the fast generator `L0`.
//!
//! The zero eigenvalue group of `L0` spans the quasi-equilibria `{S_d}`; the
//! rest of the spectrum must sit strictly in the left half-plane. From the
//! right and left kernels we form the spectral projector `K̄`, the invariant
//! operators `J_d = K̄*(S_d)` and the pseudo-resolvents `R`, `R*`.

use nalgebra::{DMatrix, DVector, Schur, SVD};

use crate::error::{Error, Result};
use crate::lindblad::{build_adjoint_lindbladian, build_lindbladian, GeneratorSpec};
use crate::operator::{
    c, canonical_hermitian_sequence, trace_product, CMatrix, CVector, HermitianOperator, LinearMap,
    Superoperator, C64, DEFAULT_HERMITICITY_TOL,
};

/// Relative size (in units of `‖L0‖₂`) below which an eigenvalue or singular
/// value counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub zero_tol: f64,
    pub hermiticity_tol: f64,
    /// Largest acceptable `|Tr(J_d S_d') − δ_{dd'}|`.
    pub biorthogonality_tol: f64,
    /// Largest acceptable residual of the resolvent solve, relative to
    /// `max(1, ‖L0‖₂·‖R‖_F)`.
    pub resolvent_tol: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            hermiticity_tol: DEFAULT_HERMITICITY_TOL,
            biorthogonality_tol: 1e-8,
            resolvent_tol: 1e-10,
        }
    }
}

/// Eigenvalues of `L0` split into the zero group and the decaying group.
#[derive(Debug, Clone)]
pub struct GapAnalysis {
    /// Eigenvalues with `|λ| ≤ zero_tol·‖L0‖₂`.
    pub zero_group: Vec<C64>,
    /// Remaining eigenvalues, slowest first.
    pub fast_group: Vec<C64>,
    /// `min −Re λ` over the fast group.
    pub gamma: f64,
    /// `‖L0‖₂`.
    pub norm: f64,
    // Orthonormal bases (as columns) of ker L0 and ker L0†.
    kernel: CMatrix,
    cokernel: CMatrix,
}

impl GapAnalysis {
    pub fn dbar(&self) -> usize {
        self.zero_group.len()
    }

    /// Orthonormal basis of `ker L0` as columns of vectorized operators.
    pub fn kernel(&self) -> &CMatrix {
        &self.kernel
    }

    /// Orthonormal basis of `ker L0*`.
    pub fn cokernel(&self) -> &CMatrix {
        &self.cokernel
    }
}

fn null_space(svd: &SVD<C64, nalgebra::Dyn, nalgebra::Dyn>, threshold: f64) -> CMatrix {
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    let idx: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= threshold)
        .map(|(i, _)| i)
        .collect();
    let mut out = CMatrix::zeros(v_t.ncols(), idx.len());
    for (col, &i) in idx.iter().enumerate() {
        out.set_column(col, &v_t.row(i).adjoint());
    }
    out
}

/// Partition the spectrum of `L0` and check the slow/fast hypothesis:
/// a semisimple zero eigenvalue and every other eigenvalue strictly
/// decaying.
pub fn spectral_gap_analysis(l0: &Superoperator, zero_tol: f64) -> Result<GapAnalysis> {
    let m = l0.matrix();
    let svd = SVD::new(m.clone(), false, true);
    let norm = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if norm == 0.0 {
        return Err(Error::HypothesisViolated(
            "no spectral gap: the fast generator vanishes".into(),
        ));
    }
    let threshold = zero_tol * norm;

    let eigenvalues = Schur::new(m.clone())
        .eigenvalues()
        .ok_or_else(|| Error::HypothesisViolated("Schur form did not triangularize".into()))?;

    let (mut zero_group, mut fast_group): (Vec<C64>, Vec<C64>) =
        eigenvalues.iter().partition(|z| z.norm() <= threshold);
    let by_key = |a: &C64, b: &C64| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im));
    zero_group.sort_by(by_key);
    fast_group.sort_by(by_key);

    if zero_group.is_empty() {
        return Err(Error::HypothesisViolated(
            "fast generator has a trivial kernel, no quasi-equilibria".into(),
        ));
    }
    if fast_group.is_empty() {
        return Err(Error::HypothesisViolated(
            "no spectral gap: every eigenvalue is zero".into(),
        ));
    }
    if let Some(bad) = fast_group.iter().find(|z| z.re >= -threshold) {
        let msg = if bad.re.abs() <= threshold {
            format!(
                "purely imaginary eigenvalue {:.6e}{:+.6e}i outside the kernel (rotating quasi-equilibria are unsupported)",
                bad.re, bad.im
            )
        } else {
            format!(
                "eigenvalue {:.6e}{:+.6e}i does not decay, no exponential convergence",
                bad.re, bad.im
            )
        };
        return Err(Error::HypothesisViolated(msg));
    }

    // Both null spaces come from right singular vectors: the left singular
    // vectors of a zero singular value are not reliably accurate.
    let kernel = null_space(&svd, threshold);
    let cokernel = null_space(&SVD::new(m.adjoint(), false, true), threshold);
    if kernel.ncols() != zero_group.len() || cokernel.ncols() != zero_group.len() {
        return Err(Error::NonSemisimpleKernel {
            algebraic: zero_group.len(),
            geometric: kernel.ncols(),
        });
    }

    let gamma = fast_group
        .iter()
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);

    Ok(GapAnalysis {
        zero_group,
        fast_group,
        gamma,
        norm,
        kernel,
        cokernel,
    })
}

/// Frobenius-orthonormal Hermitian basis of `ker L0`.
///
/// The canonical Hermitian sequence (identity first, then matrix-unit
/// combinations in lexicographic order) is projected orthogonally onto the
/// kernel and run through a pivoting Gram–Schmidt: a candidate is kept when
/// its residual norm clears a threshold, and the threshold is lowered in
/// steps until `dbar` elements are found. The result depends only on the
/// kernel, not on the phases of the computed null vectors.
pub fn compute_slow_basis(gap: &GapAnalysis, dim: usize) -> Result<Vec<HermitianOperator>> {
    let dbar = gap.dbar();
    let kernel = gap.kernel();
    let project = |x: &CMatrix| -> CMatrix {
        let v = CVector::from_column_slice(x.as_slice());
        let p = kernel * (kernel.adjoint() * v);
        let m = CMatrix::from_column_slice(dim, dim, p.as_slice());
        (&m + m.adjoint()) * c(0.5)
    };
    let candidates: Vec<CMatrix> = canonical_hermitian_sequence(dim)
        .iter()
        .map(project)
        .collect();

    let mut chosen: Vec<CMatrix> = Vec::with_capacity(dbar);
    let mut threshold = 0.25;
    while chosen.len() < dbar && threshold >= 1e-6 {
        for cand in &candidates {
            if chosen.len() == dbar {
                break;
            }
            let mut v = cand.clone();
            for _ in 0..2 {
                for q in &chosen {
                    let proj = trace_product(q, &v).re;
                    v -= q * c(proj);
                }
            }
            let norm = v.norm();
            if norm >= threshold {
                chosen.push(HermitianOperator::hermitize(&(v / c(norm))).into_inner());
            }
        }
        threshold /= 4.0;
    }
    if chosen.len() < dbar {
        return Err(Error::DegenerateKernel(format!(
            "Hermitian parts span {} of {dbar} kernel dimensions",
            chosen.len()
        )));
    }
    Ok(chosen
        .into_iter()
        .map(|m| HermitianOperator::hermitize(&m))
        .collect())
}

/// Spectral projector onto `ker L0` along the decaying subspace,
/// `K̄ = V (Wᴴ V)⁻¹ Wᴴ` for right/left kernel bases `V`, `W`.
pub fn compute_kbar(gap: &GapAnalysis, dim: usize) -> Result<Superoperator> {
    let v = gap.kernel();
    let w = gap.cokernel();
    let pairing = w.adjoint() * v;
    let sv = pairing.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    // Negated so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::IllConditionedSplit(smin));
    }
    let coeffs = pairing
        .lu()
        .solve(&w.adjoint())
        .ok_or(Error::IllConditionedSplit(smin))?;
    Superoperator::new(dim, v * coeffs)
}

/// `J_d = K̄*(S_d)`, the conserved quantities of the fast dynamics dual to
/// the slow basis.
pub fn compute_invariant_operators(
    kbar_adj: &Superoperator,
    slow_basis: &[HermitianOperator],
    biorthogonality_tol: f64,
) -> Result<Vec<HermitianOperator>> {
    let j: Vec<HermitianOperator> = slow_basis
        .iter()
        .map(|s| HermitianOperator::hermitize(&kbar_adj.apply(s.matrix())))
        .collect();
    let defect = biorthogonality_defect(&j, slow_basis);
    if defect > biorthogonality_tol {
        return Err(Error::IllConditionedSplit(defect));
    }
    Ok(j)
}

/// `max_{d,d'} |Tr(A_d B_d') − δ_{dd'}|`.
pub fn biorthogonality_defect(a: &[HermitianOperator], b: &[HermitianOperator]) -> f64 {
    let mut defect: f64 = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (k, bk) in b.iter().enumerate() {
            let expected = if i == k { 1.0 } else { 0.0 };
            defect = defect.max((trace_product(ai.matrix(), bk.matrix()) - c(expected)).norm());
        }
    }
    defect
}

/// Solves `gen(X) = P(W) − W` with `P(X) = 0` for every `W` at once:
/// `X = −(gen + P)⁻¹ (Id − P) W`, then re-projects `X ← (Id − P) X`.
fn pseudo_resolvent(
    generator: &Superoperator,
    projector: &Superoperator,
    tol: f64,
) -> Result<Superoperator> {
    let dim = generator.dim();
    let n = dim * dim;
    let id = CMatrix::identity(n, n);
    let complement = &id - projector.matrix();
    let shifted = generator.matrix() + projector.matrix();
    let rhs = -&complement;
    let solved = shifted
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularResolvent(f64::INFINITY))?;
    let r = &complement * solved;

    let residual = (generator.matrix() * &r - (projector.matrix() - &id)).norm();
    let scale = (generator.spectral_norm() * r.norm()).max(1.0);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(residual <= tol * scale) {
        return Err(Error::SingularResolvent(residual));
    }
    Superoperator::new(dim, r)
}

/// `R`: the solution of `L0(X) = K̄(W) − W` with `Tr(J_d X) = 0`.
pub fn resolvent(l0: &Superoperator, kbar: &Superoperator, tol: f64) -> Result<Superoperator> {
    pseudo_resolvent(l0, kbar, tol)
}

/// `R*`: the solution of `L0*(X) = K̄*(W) − W` with `Tr(S_d X) = 0`.
pub fn resolvent_adjoint(
    l0_adj: &Superoperator,
    kbar_adj: &Superoperator,
    tol: f64,
) -> Result<Superoperator> {
    pseudo_resolvent(l0_adj, kbar_adj, tol)
}

/// Everything derived from `L0` that the expansions need.
#[derive(Debug, Clone)]
pub struct FastSlowSplit {
    dim: usize,
    gap: GapAnalysis,
    slow_basis: Vec<HermitianOperator>,
    invariants: Vec<HermitianOperator>,
    l0: Superoperator,
    l0_adj: Superoperator,
    kbar: Superoperator,
    kbar_adj: Superoperator,
    resolvent: Superoperator,
    resolvent_adj: Superoperator,
}

/// Measured defects of the structural identities of a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDefects {
    /// `max |Tr(S_d S_d') − δ|`
    pub orthonormality: f64,
    /// `max |Tr(J_d S_d') − δ|`
    pub biorthogonality: f64,
    /// `max_d ‖L0(S_d)‖_F`
    pub kernel: f64,
    /// `max_d ‖L0*(J_d)‖_F`
    pub adjoint_kernel: f64,
    /// `‖K̄² − K̄‖_F`
    pub idempotence: f64,
    /// `‖L0 R − (K̄ − Id)‖_F`
    pub resolvent_identity: f64,
    /// `‖L0* R* − (K̄* − Id)‖_F`
    pub adjoint_resolvent_identity: f64,
}

impl FastSlowSplit {
    pub fn new(fast: &GeneratorSpec, cfg: &SplitConfig) -> Result<Self> {
        Self::from_superoperators(
            build_lindbladian(fast),
            build_adjoint_lindbladian(fast),
            cfg,
        )
    }

    /// Builds the split from a generator and its independently assembled
    /// adjoint.
    pub fn from_superoperators(
        l0: Superoperator,
        l0_adj: Superoperator,
        cfg: &SplitConfig,
    ) -> Result<Self> {
        let dim = l0.dim();
        if l0_adj.dim() != dim {
            return Err(Error::Dimension(
                "generator and adjoint differ in dimension".into(),
            ));
        }
        let gap = spectral_gap_analysis(&l0, cfg.zero_tol)?;
        let slow_basis = compute_slow_basis(&gap, dim)?;
        let kbar = compute_kbar(&gap, dim)?;
        let kbar_adj = kbar.adjoint();
        let invariants =
            compute_invariant_operators(&kbar_adj, &slow_basis, cfg.biorthogonality_tol)?;
        let resolvent = resolvent(&l0, &kbar, cfg.resolvent_tol)?;
        let resolvent_adj = resolvent_adjoint(&l0_adj, &kbar_adj, cfg.resolvent_tol)?;
        log::debug!(
            "split: dbar = {}, gap = {:.6e}, ‖L0‖₂ = {:.6e}",
            gap.dbar(),
            gap.gamma,
            gap.norm
        );
        Ok(Self {
            dim,
            gap,
            slow_basis,
            invariants,
            l0,
            l0_adj,
            kbar,
            kbar_adj,
            resolvent,
            resolvent_adj,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dbar(&self) -> usize {
        self.slow_basis.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gap.gamma
    }

    pub fn gap(&self) -> &GapAnalysis {
        &self.gap
    }

    /// `{S_d}`
    pub fn slow_basis(&self) -> &[HermitianOperator] {
        &self.slow_basis
    }

    /// `{J_d}`
    pub fn invariants(&self) -> &[HermitianOperator] {
        &self.invariants
    }

    pub fn l0(&self) -> &Superoperator {
        &self.l0
    }

    pub fn l0_adj(&self) -> &Superoperator {
        &self.l0_adj
    }

    pub fn kbar(&self) -> &Superoperator {
        &self.kbar
    }

    pub fn kbar_adj(&self) -> &Superoperator {
        &self.kbar_adj
    }

    pub fn resolvent(&self) -> &Superoperator {
        &self.resolvent
    }

    pub fn resolvent_adj(&self) -> &Superoperator {
        &self.resolvent_adj
    }

    /// `x_d = Tr(J_d ρ)`.
    pub fn slow_coordinates(&self, rho: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.dbar(),
            self.invariants
                .iter()
                .map(|j| trace_product(j.matrix(), rho).re),
        )
    }

    /// `Σ_d x_d S_d`.
    pub fn lift(&self, x: &DVector<f64>) -> CMatrix {
        self.slow_basis
            .iter()
            .zip(x.iter())
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (s, &xd)| {
                acc + s.matrix() * c(xd)
            })
    }

    /// `Σ_{d,d'} M_{dd'} S_d Tr(J_d' ·)` for a real `dbar×dbar` matrix `M`.
    pub fn lift_matrix(&self, m: &DMatrix<f64>) -> Superoperator {
        let n = self.dim * self.dim;
        let s = CMatrix::from_fn(n, self.dbar(), |r, d| {
            self.slow_basis[d].matrix().as_slice()[r]
        });
        // Row d' of the functional block is vec(J_d')ᴴ, i.e. Tr(J_d' X) for Hermitian J_d'.
        let j = CMatrix::from_fn(self.dbar(), n, |d, r| {
            self.invariants[d].matrix().as_slice()[r].conj()
        });
        let mc = m.map(c);
        Superoperator::new(self.dim, s * mc * j).expect("shapes are consistent")
    }

    pub fn defects(&self) -> SplitDefects {
        let dbar = self.dbar();
        let mut orthonormality: f64 = 0.0;
        for a in 0..dbar {
            for b in 0..dbar {
                let g = trace_product(self.slow_basis[a].matrix(), self.slow_basis[b].matrix());
                let expected = if a == b { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((g - c(expected)).norm());
            }
        }
        let kernel = self
            .slow_basis
            .iter()
            .map(|s| self.l0.apply(s.matrix()).norm())
            .fold(0.0, f64::max);
        let adjoint_kernel = self
            .invariants
            .iter()
            .map(|j| self.l0_adj.apply(j.matrix()).norm())
            .fold(0.0, f64::max);
        let k = self.kbar.matrix();
        let idempotence = (k * k - k).norm();
        let n = self.dim * self.dim;
        let id = CMatrix::identity(n, n);
        let resolvent_identity = (self.l0.matrix() * self.resolvent.matrix() - (k - &id)).norm();
        let adjoint_resolvent_identity = (self.l0_adj.matrix() * self.resolvent_adj.matrix()
            - (self.kbar_adj.matrix() - &id))
            .norm();
        SplitDefects {
            orthonormality,
            biorthogonality: biorthogonality_defect(&self.invariants, &self.slow_basis),
            kernel,
            adjoint_kernel,
            idempotence,
            resolvent_identity,
            adjoint_resolvent_identity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::matrix_unit;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn damping(kappa: f64) -> GeneratorSpec {
        GeneratorSpec::new(
            HermitianOperator::zero(2),
            vec![matrix_unit(2, 0, 1) * c(kappa.sqrt())],
        )
        .unwrap()
    }

    fn dephasing() -> GeneratorSpec {
        let sz = matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1);
        GeneratorSpec::new(HermitianOperator::zero(2), vec![sz]).unwrap()
    }

    fn sigma_x() -> CMatrix {
        matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)
    }

    #[test]
    fn damping_gap() {
        let gap =
            spectral_gap_analysis(&build_lindbladian(&damping(1.0)), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(gap.dbar(), 1);
        assert!((gap.gamma - 0.5).abs() < 1e-12);
        // Coherences at κ/2 (twice), population at κ.
        assert_eq!(gap.fast_group.len(), 3);
        assert!((gap.fast_group[2].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_generator_violates_hypothesis() {
        let err = spectral_gap_analysis(&Superoperator::zero(2), DEFAULT_ZERO_TOL).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated(ref m) if m.contains("no spectral gap")));
    }

    #[test]
    fn dephasing_keeps_populations() {
        let gap =
            spectral_gap_analysis(&build_lindbladian(&dephasing()), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(gap.dbar(), 2);
        assert!((gap.gamma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pure_hamiltonian_is_rejected_as_oscillatory() {
        let sz = matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1);
        let spec = GeneratorSpec::hamiltonian_only(HermitianOperator::new(sz).unwrap());
        let err = spectral_gap_analysis(&build_lindbladian(&spec), DEFAULT_ZERO_TOL).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated(ref m) if m.contains("purely imaginary")));
    }

    #[test]
    fn jordan_block_is_rejected() {
        // A nilpotent superoperator: not GKSL, but exercises the multiplicity check.
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 1)] = c(1.0);
        m[(2, 2)] = c(-1.0);
        m[(3, 3)] = c(-2.0);
        let err = spectral_gap_analysis(&Superoperator::new(2, m).unwrap(), DEFAULT_ZERO_TOL)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::NonSemisimpleKernel {
                algebraic: 2,
                geometric: 1
            }
        ));
    }

    #[test]
    fn damping_split() {
        let split = FastSlowSplit::new(&damping(1.0), &SplitConfig::default()).unwrap();
        assert_eq!(split.dbar(), 1);
        assert!((split.slow_basis()[0].matrix() - matrix_unit(2, 0, 0)).norm() < 1e-12);
        assert!((split.invariants()[0].matrix() - CMatrix::identity(2, 2)).norm() < 1e-12);

        // K̄(ρ) = Tr(ρ)|g⟩⟨g|
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random::gaussian_matrix(&mut rng, 2);
        let expected = matrix_unit(2, 0, 0) * crate::operator::trace(&x);
        assert!((split.kbar().apply(&x) - expected).norm() < 1e-12);

        // R(σx) = 2σx/κ
        let r = split.resolvent().apply(&sigma_x());
        assert!((r - sigma_x() * c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn dephasing_basis_is_identity_then_sigma_z() {
        let split = FastSlowSplit::new(&dephasing(), &SplitConfig::default()).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let sz = matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1);
        assert!((split.slow_basis()[0].matrix() - CMatrix::identity(2, 2) * c(r2)).norm() < 1e-12);
        assert!((split.slow_basis()[1].matrix() - sz * c(r2)).norm() < 1e-12);
        // Dephasing is unital and self-adjoint: J_d = S_d.
        for (j, s) in split.invariants().iter().zip(split.slow_basis()) {
            assert!((j.matrix() - s.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn split_identities_hold() {
        for spec in [damping(1.0), damping(2.5), dephasing()] {
            let split = FastSlowSplit::new(&spec, &SplitConfig::default()).unwrap();
            let d = split.defects();
            assert!(d.orthonormality < 1e-10);
            assert!(d.biorthogonality < 1e-10);
            assert!(d.kernel < 1e-10);
            assert!(d.adjoint_kernel < 1e-10);
            assert!(d.idempotence < 1e-10);
            assert!(d.resolvent_identity < 1e-10);
            assert!(d.adjoint_resolvent_identity < 1e-10);
        }
    }

    #[test]
    fn kbar_expansion_and_kernel_invariance() {
        let split = FastSlowSplit::new(&dephasing(), &SplitConfig::default()).unwrap();
        let from_bases = split.lift_matrix(&DMatrix::identity(2, 2));
        assert!(from_bases.distance(split.kbar()) < 1e-12);
        for s in split.slow_basis() {
            assert!((split.kbar().apply(s.matrix()) - s.matrix()).norm() < 1e-11);
            assert!(split.resolvent().apply(s.matrix()).norm() < 1e-11);
        }
        for j in split.invariants() {
            assert!(split.resolvent_adj().apply(j.matrix()).norm() < 1e-11);
        }
    }

    #[test]
    fn resolvent_annihilates_and_is_annihilated_by_kbar() {
        let split = FastSlowSplit::new(&damping(1.0), &SplitConfig::default()).unwrap();
        assert!(split.resolvent().compose(split.kbar()).matrix().norm() < 1e-10);
        assert!(split.kbar().compose(split.resolvent()).matrix().norm() < 1e-10);
    }
}
