//! Exact and reduced propagation, and the checks that tie them together.
//!
//! The exact oracle is `K_{ε,T} = K̄ ∘ e^{T(L0 + εL1)}`. The reduced
//! trajectory is `z(T) = e^{T F(ε)} E(ε)⁻¹ x(0)` from the truncated series.
//! Two checks compare them: exponential closeness of the slow coordinates
//! at fixed `ε`, and second-order accuracy (plus approximate complete
//! positivity and trace preservation) over the slow horizon `T̄/ε`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expansion::{pairing_matrix, truncated_f, FastExpansion, PairingMatrix, SlowExpansion};
use crate::fit;
use crate::lindblad::{total_generator, GKSLModel};
use crate::operator::{
    c, cp_tp_diagnostics, trace, CMatrix, CpTpDiagnostics, LinearMap, Superoperator,
};
use crate::random;
use crate::spectral::FastSlowSplit;

/// Values at or below this are treated as roundoff when fitting decay rates
/// over a time grid.
pub const RATE_FIT_FLOOR: f64 = 1e-12;
/// Values at or below this are treated as roundoff in ε sweeps.
pub const SWEEP_FLOOR: f64 = 1e-11;
/// A fitted decay rate must reach this fraction of the spectral gap.
pub const RATE_FRACTION: f64 = 0.8;
/// Accepted log–log slope band for second-order quantities.
pub const SECOND_ORDER_SLOPE: (f64, f64) = (1.7, 2.3);

// `t·‖S‖₁` beyond which the exponential is refused.
const EXPONENT_LIMIT: f64 = 1e12;

/// `e^{tS}` as a superoperator.
pub fn propagator(s: &Superoperator, t: f64) -> Result<Superoperator> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Range(format!(
            "propagation time must be ≥ 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(Superoperator::identity(s.dim()));
    }
    let scaled = s.matrix() * c(t);
    let norm1 = scaled
        .column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm1 > EXPONENT_LIMIT {
        return Err(Error::Range(format!(
            "t·‖S‖₁ = {norm1:.3e} is beyond the supported range"
        )));
    }
    let e = scaled.exp();
    Superoperator::new(s.dim(), e).map_err(|_| Error::Range("exponential overflowed".into()))
}

/// `e^{tS}(X)`.
pub fn matrix_exponential_apply(s: &Superoperator, t: f64, x: &CMatrix) -> Result<CMatrix> {
    if x.shape() != (s.dim(), s.dim()) {
        return Err(Error::Dimension(format!(
            "operator {:?} does not match superoperator dimension {}",
            x.shape(),
            s.dim()
        )));
    }
    Ok(propagator(s, t)?.apply(x))
}

/// Real matrix exponential for the reduced generators.
pub fn expm_real(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm1 = m
        .column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm1 > EXPONENT_LIMIT {
        return Err(Error::Range(format!("‖M‖₁ = {norm1:.3e} out of range")));
    }
    let e = m.clone().exp();
    if e.iter().all(|v| v.is_finite()) {
        Ok(e)
    } else {
        Err(Error::Range("exponential overflowed".into()))
    }
}

/// `K̄ ∘ e^{T(L0 + εL1)}`, the exact slow map.
pub fn full_slow_map(
    model: &GKSLModel,
    split: &FastSlowSplit,
    eps: f64,
    t: f64,
) -> Result<Superoperator> {
    let generator = total_generator(model, eps)?;
    Ok(split.kbar().compose(&propagator(&generator, t)?))
}

/// Slow coordinates at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowState {
    pub x: DVector<f64>,
    pub time: f64,
}

impl SlowState {
    pub fn new(x: DVector<f64>, time: f64) -> Result<Self> {
        if !x.iter().all(|v| v.is_finite()) || !(time.is_finite() && time >= 0.0) {
            return Err(Error::NonFinite("slow state".into()));
        }
        Ok(Self { x, time })
    }
}

/// `z(T) = e^{T F(ε)} E(ε)⁻¹ x(0)`.
pub fn reduced_trajectory(
    slow: &SlowExpansion,
    pairing: &PairingMatrix,
    x0: &SlowState,
    eps: f64,
    t: f64,
) -> Result<SlowState> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Range(format!(
            "propagation time must be ≥ 0, got {t}"
        )));
    }
    let z0 = pairing.solve(&x0.x)?;
    let g = expm_real(&(truncated_f(slow, eps) * t))?;
    SlowState::new(g * z0, x0.time + t)
}

/// Propagator of the second-order slow dynamics over `T̄/ε`.
#[derive(Debug, Clone)]
pub struct SecondOrderMap {
    /// `e^{(T̄/ε)(εF⁽¹⁾ + ε²F⁽²⁾)}`
    pub matrix: DMatrix<f64>,
    /// `Σ_{d,d'} matrix[d,d'] S_d Tr(J_d' ·)` on the full operator space.
    pub lifted: Superoperator,
}

pub fn second_order_reduced_map(
    split: &FastSlowSplit,
    slow: &SlowExpansion,
    eps: f64,
    tbar: f64,
) -> Result<SecondOrderMap> {
    if slow.order() < 2 {
        return Err(Error::InvalidParams(format!(
            "second-order map needs an expansion of order ≥ 2, got {}",
            slow.order()
        )));
    }
    if !(eps > 0.0 && tbar >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "need ε > 0 and T̄ ≥ 0, got ε = {eps}, T̄ = {tbar}"
        )));
    }
    // (T̄/ε)(εF1 + ε²F2) = T̄(F1 + εF2)
    let generator = (slow.f(1) + slow.f(2) * eps) * tbar;
    let matrix = expm_real(&generator)?;
    let lifted = split.lift_matrix(&matrix);
    Ok(SecondOrderMap { matrix, lifted })
}

/// Haar-random pure state projected orthogonally onto `span{S_d}` and
/// renormalized to unit trace (unit Frobenius norm if the projection is
/// traceless).
pub fn default_initial_state(split: &FastSlowSplit, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = random::haar_pure_state(&mut rng, split.dim());
    let rho = &psi * psi.adjoint();
    let projected =
        split
            .slow_basis()
            .iter()
            .fold(CMatrix::zeros(split.dim(), split.dim()), |acc, s| {
                let w = crate::operator::trace_product(s.matrix(), &rho).re;
                acc + s.matrix() * c(w)
            });
    let tr = trace(&projected).re;
    let norm = projected.norm();
    if tr > 1e-8 * norm {
        projected / c(tr)
    } else if norm > 0.0 {
        projected / c(norm)
    } else {
        // Orthogonal to every S_d: fall back to the first basis element.
        split.slow_basis()[0].matrix().clone()
    }
}

/// `x_d = Tr(S_d X)` coordinates in the orthonormal slow basis.
fn basis_coordinates(split: &FastSlowSplit, x: &CMatrix) -> DVector<f64> {
    DVector::from_iterator(
        split.dbar(),
        split
            .slow_basis()
            .iter()
            .map(|s| crate::operator::trace_product(s.matrix(), x).re),
    )
}

/// `Σ_d |Tr(S_d K_{ε,T}(ρ0)) − z_d(T)|`.
pub fn slow_coordinate_error(
    model: &GKSLModel,
    split: &FastSlowSplit,
    slow: &SlowExpansion,
    pairing: &PairingMatrix,
    rho0: &CMatrix,
    eps: f64,
    t: f64,
) -> Result<f64> {
    let exact = full_slow_map(model, split, eps, t)?.apply(rho0);
    let exact_coords = basis_coordinates(split, &exact);
    let x0 = SlowState::new(split.slow_coordinates(rho0), 0.0)?;
    let z = reduced_trajectory(slow, pairing, &x0, eps, t)?;
    Ok((exact_coords - z.x).abs().sum())
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Every value sat at the numerical floor, so there was nothing to fit.
    PassAtFloor,
    Fail,
    /// Not enough data points to decide.
    Skipped,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassAtFloor)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PassAtFloor => "pass_at_floor",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosenessReport {
    pub eps: f64,
    pub order: usize,
    pub gamma: f64,
    /// `(T, err(T))` pairs.
    pub records: Vec<(f64, f64)>,
    /// `√Tr(ρ0²)`
    pub state_norm: f64,
    pub fitted_rate: Option<f64>,
    /// Envelope prefactor taken from the first grid point.
    pub prefactor: Option<f64>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

/// Checks that the slow-coordinate error decays exponentially at a rate of
/// at least `0.8γ` over `t_grid`, and stays under the envelope
/// `M e^{−0.8γT}` anchored at the first grid point.
pub fn validate_closeness(
    model: &GKSLModel,
    split: &FastSlowSplit,
    slow: &SlowExpansion,
    fast: &FastExpansion,
    eps: f64,
    rho0: &CMatrix,
    t_grid: &[f64],
) -> Result<ClosenessReport> {
    let pairing = pairing_matrix(slow, fast, eps)?;
    let mut records = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let err = slow_coordinate_error(model, split, slow, &pairing, rho0, eps, t)?;
        records.push((t, err));
    }
    let state_norm = trace(&(rho0 * rho0)).re.max(0.0).sqrt();
    let gamma = split.gamma();
    let min_rate = RATE_FRACTION * gamma;
    let mut warnings = Vec::new();

    let normalized: Vec<(f64, f64)> = records
        .iter()
        .map(|(t, e)| (*t, if state_norm > 0.0 { e / state_norm } else { *e }))
        .collect();
    let ts: Vec<f64> = normalized.iter().map(|p| p.0).collect();
    let es: Vec<f64> = normalized.iter().map(|p| p.1).collect();

    let above_floor = es.iter().filter(|e| **e > RATE_FIT_FLOOR).count();
    let (fitted_rate, prefactor, verdict) = if t_grid.len() < 2 {
        let msg = "time grid has a single point, decay-rate fit skipped".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
        (None, None, Verdict::Skipped)
    } else if above_floor < 2 {
        (None, None, Verdict::PassAtFloor)
    } else {
        let (rate, _) =
            fit::exponential_rate(&ts, &es, RATE_FIT_FLOOR).expect("two points above the floor");
        let (t0, e0) = normalized[0];
        let m = e0 * (min_rate * t0).exp();
        // One part in 1e6 of slack for roundoff in the anchor point itself.
        let enveloped = normalized
            .iter()
            .all(|(t, e)| *e <= RATE_FIT_FLOOR || *e <= m * (-min_rate * t).exp() * (1.0 + 1e-6));
        let ok = rate >= min_rate && enveloped;
        (
            Some(rate),
            Some(m),
            if ok { Verdict::Pass } else { Verdict::Fail },
        )
    };
    Ok(ClosenessReport {
        eps,
        order: slow.order(),
        gamma,
        records,
        state_norm,
        fitted_rate,
        prefactor,
        verdict,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderRecord {
    pub eps: f64,
    /// `‖K_{ε,T̄/ε}(ρ0) − Σ_d x_d(T̄/ε) S_d‖_F`
    pub state_error: f64,
    pub diagnostics: CpTpDiagnostics,
}

impl SecondOrderRecord {
    /// `max(0, −min Choi eigenvalue)`
    pub fn choi_negativity(&self) -> f64 {
        (-self.diagnostics.min_choi_eigenvalue).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SecondOrderReport {
    pub tbar: f64,
    pub records: Vec<SecondOrderRecord>,
    pub state_slope: Option<f64>,
    pub choi_slope: Option<f64>,
    pub trace_slope: Option<f64>,
    pub state_verdict: Verdict,
    pub choi_verdict: Verdict,
    pub trace_verdict: Verdict,
    pub warnings: Vec<String>,
}

impl SecondOrderReport {
    pub fn passed(&self) -> bool {
        self.state_verdict.passed() && self.choi_verdict.passed() && self.trace_verdict.passed()
    }
}

/// Verdict for a quantity expected to vanish at least like `ε^min_slope`.
fn scaling_verdict(
    eps: &[f64],
    values: &[f64],
    band: (f64, f64),
    warnings: &mut Vec<String>,
    what: &str,
) -> (Option<f64>, Verdict) {
    if values.iter().all(|v| *v <= SWEEP_FLOOR) {
        return (None, Verdict::PassAtFloor);
    }
    match fit::loglog_slope(eps, values, SWEEP_FLOOR) {
        Some(s) => (
            Some(s),
            if s >= band.0 && s <= band.1 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        ),
        None => {
            let msg = format!("{what}: fewer than two ε values above the floor, slope fit skipped");
            log::warn!("{msg}");
            warnings.push(msg);
            (None, Verdict::Skipped)
        }
    }
}

/// Second-order accuracy over the slow horizon `T̄/ε` for each `ε`, with
/// the complete-positivity and trace-preservation defects of the lifted
/// second-order map.
pub fn validate_second_order(
    model: &GKSLModel,
    split: &FastSlowSplit,
    slow: &SlowExpansion,
    eps_grid: &[f64],
    tbar: f64,
    rho0: &CMatrix,
) -> Result<SecondOrderReport> {
    let x0 = split.slow_coordinates(rho0);
    let mut records = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let reduced = second_order_reduced_map(split, slow, eps, tbar)?;
        let exact = full_slow_map(model, split, eps, tbar / eps)?.apply(rho0);
        let approx = split.lift(&(&reduced.matrix * &x0));
        records.push(SecondOrderRecord {
            eps,
            state_error: (exact - approx).norm(),
            diagnostics: cp_tp_diagnostics(&reduced.lifted),
        });
    }
    let eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    let mut warnings = Vec::new();
    let state: Vec<f64> = records.iter().map(|r| r.state_error).collect();
    let choi: Vec<f64> = records.iter().map(|r| r.choi_negativity()).collect();
    let tdef: Vec<f64> = records.iter().map(|r| r.diagnostics.trace_defect).collect();

    let (state_slope, state_verdict) = scaling_verdict(
        &eps,
        &state,
        SECOND_ORDER_SLOPE,
        &mut warnings,
        "state error",
    );
    let (choi_slope, choi_verdict) = scaling_verdict(
        &eps,
        &choi,
        (SECOND_ORDER_SLOPE.0, f64::INFINITY),
        &mut warnings,
        "Choi negativity",
    );
    let (trace_slope, trace_verdict) = scaling_verdict(
        &eps,
        &tdef,
        (SECOND_ORDER_SLOPE.0, f64::INFINITY),
        &mut warnings,
        "trace defect",
    );
    Ok(SecondOrderReport {
        tbar,
        records,
        state_slope,
        choi_slope,
        trace_slope,
        state_verdict,
        choi_verdict,
        trace_verdict,
        warnings,
    })
}
