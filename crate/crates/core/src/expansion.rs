//! Order-by-order expansion of the slow dynamics and of the fast invariant
//! subspace.
//!
//! Slow side: `S_d(ε) = Σ εⁿ S_d⁽ⁿ⁾` spans the invariant slow subspace and
//! `F(ε) = Σ εⁿ F⁽ⁿ⁾` generates the motion of the coordinates
//! `x_d = Tr(J_d ρ)` on it. Fast side: `J_d(ε) = Σ εⁿ J_d⁽ⁿ⁾` cut out the
//! invariant decaying subspace through `Tr(J_d(ε) ρ) = 0`, with the
//! companion matrices `G⁽ⁿ⁾`.
//!
//! Both recursions share one shape. With `B` the basis being corrected,
//! `B̃` its dual, `A` the unperturbed generator, `P` the matching
//! pseudo-resolvent and `M` the perturbation:
//!
//! ```text
//! C⁽ⁿ⁾[d', d] = Tr(B̃_d' M(B_d⁽ⁿ⁻¹⁾))
//! B_d⁽ⁿ⁾      = P( M(B_d⁽ⁿ⁻¹⁾) − Σ_{d''} Σ_{r=1..n} C⁽ʳ⁾[d'', d] B_{d''}⁽ⁿ⁻ʳ⁾ )
//! ```
//!
//! `(B, B̃, A, P, M) = (S, J, L0, R, L1)` gives `F`, and
//! `(J, S, L0*, R*, L1*)` gives `G`. Matrices are stored with the corrected
//! basis index as the column, so `ẋ = F(ε) x` and `G⁽¹⁾ = F⁽¹⁾ᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::{c, trace_product, CMatrix, HermitianOperator, LinearMap, Superoperator};
use crate::spectral::FastSlowSplit;

pub const DEFAULT_MAX_ORDER: usize = 8;

/// Above this value of `ε‖L1‖₂/γ` results carry a validity warning.
pub const VALIDITY_WARNING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConfig {
    pub max_order: usize,
    /// Relative invariance residual allowed at every order.
    pub residual_tol: f64,
    /// Allowed `|Tr(B̃_d' B_d⁽ⁿ⁾)|`, relative to `max(1, ‖B_d⁽ⁿ⁾‖_F)`.
    pub gauge_tol: f64,
    /// Allowed imaginary part of a coefficient, relative to
    /// `max(1, ‖B̃_d'‖_F ‖M(B_d⁽ⁿ⁻¹⁾)‖_F)`.
    pub imag_tol: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            residual_tol: 1e-9,
            gauge_tol: 1e-10,
            imag_tol: 1e-10,
        }
    }
}

/// Result of one recursion: coefficient matrices and basis corrections for
/// orders `0..=order`, plus per-order diagnostics (index 0 unused).
#[derive(Debug, Clone)]
struct Series {
    coeffs: Vec<DMatrix<f64>>,
    corrections: Vec<Vec<HermitianOperator>>,
    residuals: Vec<f64>,
    gauge: Vec<f64>,
    imag: Vec<f64>,
}

impl Series {
    fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn truncate(&self, order: usize) -> Self {
        let keep = order.min(self.order()) + 1;
        Self {
            coeffs: self.coeffs[..keep].to_vec(),
            corrections: self.corrections[..keep].to_vec(),
            residuals: self.residuals[..keep].to_vec(),
            gauge: self.gauge[..keep].to_vec(),
            imag: self.imag[..keep].to_vec(),
        }
    }
}

fn recurse(
    basis: &[HermitianOperator],
    dual: &[HermitianOperator],
    generator: &Superoperator,
    resolvent: &Superoperator,
    perturbation: &dyn LinearMap,
    order: usize,
    cfg: &ExpansionConfig,
) -> Result<Series> {
    if order == 0 || order > cfg.max_order {
        return Err(Error::InvalidParams(format!(
            "expansion order must lie in 1..={}, got {order}",
            cfg.max_order
        )));
    }
    if perturbation.dim() != generator.dim() {
        return Err(Error::Dimension(format!(
            "perturbation acts on dimension {}, generator on {}",
            perturbation.dim(),
            generator.dim()
        )));
    }
    let dbar = basis.len();
    let dim = generator.dim();

    let mut series = Series {
        coeffs: vec![DMatrix::zeros(dbar, dbar)],
        corrections: vec![basis.to_vec()],
        residuals: vec![0.0],
        gauge: vec![0.0],
        imag: vec![0.0],
    };

    for n in 1..=order {
        // M(B⁽ⁿ⁻¹⁾) enters both the coefficient and the correction.
        let perturbed: Vec<CMatrix> = series.corrections[n - 1]
            .iter()
            .map(|b| perturbation.apply(b.matrix()))
            .collect();

        let mut coeff = DMatrix::zeros(dbar, dbar);
        let mut imag_defect: f64 = 0.0;
        for (d, mb) in perturbed.iter().enumerate() {
            let mb_norm = mb.norm();
            for (dp, bt) in dual.iter().enumerate() {
                let z = trace_product(bt.matrix(), mb);
                let scale = (bt.matrix().norm() * mb_norm).max(1.0);
                imag_defect = imag_defect.max(z.im.abs() / scale);
                coeff[(dp, d)] = z.re;
            }
        }
        if imag_defect > cfg.imag_tol {
            return Err(Error::RecursionInconsistency {
                order: n,
                what: "imaginary coefficient residue",
                value: imag_defect,
            });
        }
        series.coeffs.push(coeff);

        let mut next = Vec::with_capacity(dbar);
        let mut residual: f64 = 0.0;
        let mut gauge: f64 = 0.0;
        for (d, mb) in perturbed.iter().enumerate() {
            // Σ_{d''} Σ_{r=1..n} C⁽ʳ⁾[d'', d] B_{d''}⁽ⁿ⁻ʳ⁾
            let mut mixed = CMatrix::zeros(dim, dim);
            for r in 1..=n {
                let cr = &series.coeffs[r];
                for (dpp, b) in series.corrections[n - r].iter().enumerate() {
                    let w = cr[(dpp, d)];
                    if w != 0.0 {
                        mixed += b.matrix() * c(w);
                    }
                }
            }
            let rhs = mb - &mixed;
            let raw = resolvent.apply(&rhs);
            let correction = HermitianOperator::hermitize(&raw);

            // Σ C B − A(B⁽ⁿ⁾) − M(B⁽ⁿ⁻¹⁾) = 0
            let a_b = generator.apply(correction.matrix());
            let res = &mixed - &a_b - mb;
            // Unit floor: M(B) can vanish exactly (e.g. L1*(I) = 0), leaving
            // only roundoff in every term.
            let scale = (mixed.norm() + a_b.norm() + mb.norm()).max(1.0);
            residual = residual.max(res.norm() / scale);

            let cn = correction.matrix().norm().max(1.0);
            for bt in dual {
                gauge = gauge.max(trace_product(bt.matrix(), correction.matrix()).norm() / cn);
            }
            next.push(correction);
        }
        if residual > cfg.residual_tol {
            return Err(Error::RecursionInconsistency {
                order: n,
                what: "invariance residual",
                value: residual,
            });
        }
        if gauge > cfg.gauge_tol {
            return Err(Error::RecursionInconsistency {
                order: n,
                what: "gauge defect",
                value: gauge,
            });
        }
        series.corrections.push(next);
        series.residuals.push(residual);
        series.gauge.push(gauge);
        series.imag.push(imag_defect);
    }
    Ok(series)
}

/// Slow-manifold expansion: `F⁽ⁿ⁾` and `S_d⁽ⁿ⁾` for `n = 0..=order`.
#[derive(Debug, Clone)]
pub struct SlowExpansion(Series);

/// Fast-subspace expansion: `G⁽ⁿ⁾` and `J_d⁽ⁿ⁾` for `n = 0..=order`.
#[derive(Debug, Clone)]
pub struct FastExpansion(Series);

macro_rules! series_accessors {
    ($ty:ty) => {
        impl $ty {
            pub fn order(&self) -> usize {
                self.0.order()
            }

            pub fn dbar(&self) -> usize {
                self.0.corrections[0].len()
            }

            /// Coefficient matrix of order `n`; order 0 is the zero matrix.
            pub fn coefficient(&self, n: usize) -> &DMatrix<f64> {
                &self.0.coeffs[n]
            }

            pub fn coefficients(&self) -> &[DMatrix<f64>] {
                &self.0.coeffs
            }

            /// Basis corrections of order `n`, indexed by `d`.
            pub fn corrections(&self, n: usize) -> &[HermitianOperator] {
                &self.0.corrections[n]
            }

            /// Relative invariance residual of order `n ≥ 1`.
            pub fn residual(&self, n: usize) -> f64 {
                self.0.residuals[n]
            }

            /// Largest gauge pairing of order `n ≥ 1`.
            pub fn gauge_defect(&self, n: usize) -> f64 {
                self.0.gauge[n]
            }

            /// Largest discarded imaginary part at order `n ≥ 1`.
            pub fn imaginary_residue(&self, n: usize) -> f64 {
                self.0.imag[n]
            }

            /// The same expansion cut at a lower order.
            pub fn truncate(&self, order: usize) -> Self {
                Self(self.0.truncate(order))
            }

            /// Basis element `d` resummed at `ε`.
            pub fn resummed(&self, d: usize, eps: f64) -> CMatrix {
                let dim = self.0.corrections[0][d].dim();
                let mut acc = CMatrix::zeros(dim, dim);
                let mut p = 1.0;
                for corr in &self.0.corrections {
                    acc += corr[d].matrix() * c(p);
                    p *= eps;
                }
                acc
            }
        }
    };
}

series_accessors!(SlowExpansion);
series_accessors!(FastExpansion);

impl SlowExpansion {
    /// `F⁽ⁿ⁾`
    pub fn f(&self, n: usize) -> &DMatrix<f64> {
        self.coefficient(n)
    }
}

impl FastExpansion {
    /// `G⁽ⁿ⁾`
    pub fn g(&self, n: usize) -> &DMatrix<f64> {
        self.coefficient(n)
    }
}

/// Expands the slow dynamics under the Schrödinger-picture perturbation
/// `l1` (operator-level or matrix form).
pub fn expand_slow(
    split: &FastSlowSplit,
    l1: &dyn LinearMap,
    order: usize,
    cfg: &ExpansionConfig,
) -> Result<SlowExpansion> {
    recurse(
        split.slow_basis(),
        split.invariants(),
        split.l0(),
        split.resolvent(),
        l1,
        order,
        cfg,
    )
    .map(SlowExpansion)
}

/// Expands the invariant operators under the Heisenberg-picture perturbation
/// `l1_adj`.
pub fn expand_fast(
    split: &FastSlowSplit,
    l1_adj: &dyn LinearMap,
    order: usize,
    cfg: &ExpansionConfig,
) -> Result<FastExpansion> {
    recurse(
        split.invariants(),
        split.slow_basis(),
        split.l0_adj(),
        split.resolvent_adj(),
        l1_adj,
        order,
        cfg,
    )
    .map(FastExpansion)
}

/// `Σ_{n=1..N} εⁿ F⁽ⁿ⁾`.
pub fn truncated_f(slow: &SlowExpansion, eps: f64) -> DMatrix<f64> {
    let dbar = slow.dbar();
    let mut acc = DMatrix::zeros(dbar, dbar);
    let mut p = 1.0;
    for f in &slow.coefficients()[1..] {
        p *= eps;
        acc += f * p;
    }
    acc
}

/// `‖εⁿ F⁽ⁿ⁾‖_F` for `n = 1..=N`.
pub fn series_term_norms(slow: &SlowExpansion, eps: f64) -> Vec<f64> {
    slow.coefficients()[1..]
        .iter()
        .enumerate()
        .map(|(k, f)| eps.powi(k as i32 + 1) * f.norm())
        .collect()
}

/// True when the nonvanishing terms of the series shrink with the order.
/// Terms below `1e-14` of the largest one are treated as exact zeros, which
/// symmetric models produce at every other order.
pub fn series_terms_decrease(slow: &SlowExpansion, eps: f64) -> bool {
    let norms = series_term_norms(slow, eps);
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let live: Vec<f64> = norms.into_iter().filter(|t| *t > 1e-14 * top).collect();
    live.windows(2).all(|w| w[1] <= w[0])
}

/// `ε‖L1‖₂/γ`, the dimensionless small parameter of the expansion.
pub fn validity_parameter(eps: f64, l1_norm: f64, gamma: f64) -> f64 {
    eps * l1_norm / gamma
}

/// `E(ε)[d, d'] = Tr(J_d(ε) S_d'(ε))` from the truncated series, with an LU
/// factorization for solving `E z = x`.
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    pub eps: f64,
    pub order: usize,
    e: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Condition number beyond which `E(ε)` is treated as singular.
const PAIRING_CONDITION_LIMIT: f64 = 1e10;

pub fn pairing_matrix(
    slow: &SlowExpansion,
    fast: &FastExpansion,
    eps: f64,
) -> Result<PairingMatrix> {
    if slow.order() != fast.order() {
        return Err(Error::InvalidParams(format!(
            "slow expansion has order {}, fast expansion {}",
            slow.order(),
            fast.order()
        )));
    }
    let dbar = slow.dbar();
    let order = slow.order();
    let mut e = DMatrix::zeros(dbar, dbar);
    for n in 0..=order {
        for m in 0..=order {
            let w = eps.powi((n + m) as i32);
            if w == 0.0 {
                continue;
            }
            let jn = fast.corrections(n);
            let sm = slow.corrections(m);
            for d in 0..dbar {
                for dp in 0..dbar {
                    e[(d, dp)] += w * trace_product(jn[d].matrix(), sm[dp].matrix()).re;
                }
            }
        }
    }
    let sv = e.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 0.0 && smax / smin < PAIRING_CONDITION_LIMIT) {
        return Err(Error::RegimeExceeded(format!(
            "pairing matrix E(ε) is singular at ε = {eps} (σ_min = {smin:.3e})"
        )));
    }
    let lu = e.clone().lu();
    Ok(PairingMatrix { eps, order, e, lu })
}

impl PairingMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    /// `‖E(ε) − I‖_F`
    pub fn deviation(&self) -> f64 {
        let n = self.e.nrows();
        (&self.e - DMatrix::identity(n, n)).norm()
    }

    /// `E(ε)⁻¹ x` by LU solve.
    pub fn solve(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(x)
            .ok_or_else(|| Error::RegimeExceeded(format!("E(ε) singular at ε = {}", self.eps)))
    }
}
