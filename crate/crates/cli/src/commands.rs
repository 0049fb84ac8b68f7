//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use slowfast_core::expansion::{
    expand_fast, expand_slow, pairing_matrix, series_terms_decrease, truncated_f,
    validity_parameter, ExpansionConfig, FastExpansion, SlowExpansion, VALIDITY_WARNING_THRESHOLD,
};
use slowfast_core::lindblad::{build_lindbladian, GKSLModel};
use slowfast_core::operator::{cp_tp_diagnostics, CMatrix, LinearMap};
use slowfast_core::propagate::{
    default_initial_state, expm_real, full_slow_map, slow_coordinate_error, validate_closeness,
    validate_second_order, Verdict,
};
use slowfast_core::spectral::{FastSlowSplit, SplitConfig};
use slowfast_core::zoo::{zoo_build, zoo_entries, zoo_entry};
use slowfast_core::Error;

use crate::model_file::{ModelFile, ParseError};
use crate::report::{
    model_digest, to_precise_json, ClosenessRecord, Criterion, DefectsEcho, EpsilonRecord,
    ExpansionSummary, OrderRecord, Report, SecondOrderPoint, SecondOrderSummary, SettingsEcho,
    SplitSummary, ToolInfo, ValidationSummary,
};

/// Structural identities are checked to this bound, scaled by `max(1, ‖L0‖₂)`
/// where the identity involves `L0`.
const STRUCTURAL_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(ParseError),
    Io(String),
    Core(Error),
}

impl CliError {
    /// 1 for input and usage problems, 2 when the fast generator does not
    /// satisfy the hypotheses of the reduction, 3 when the recursion fails
    /// its own consistency checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                Error::HypothesisViolated(_)
                | Error::NonSemisimpleKernel { .. }
                | Error::DegenerateKernel(_)
                | Error::IllConditionedSplit(_)
                | Error::SingularResolvent(_),
            ) => 2,
            CliError::Core(Error::RecursionInconsistency { .. }) => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(e) => write!(f, "parse error: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Command-line overrides; `None` defers to the model file, then defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub order: Option<usize>,
    pub seed: Option<u64>,
    pub max_order: Option<usize>,
    pub zero_tol: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub order: usize,
    pub seed: u64,
    pub split: SplitConfig,
    pub expansion: ExpansionConfig,
}

impl Settings {
    pub fn resolve(file: &ModelFile, flags: &Overrides) -> CliResult<Self> {
        let t = file.tolerances.clone().unwrap_or_default();
        let sd = SplitConfig::default();
        let ed = ExpansionConfig::default();
        let order = flags.order.unwrap_or(file.order);
        let split = SplitConfig {
            zero_tol: flags.zero_tol.or(t.zero_tol).unwrap_or(sd.zero_tol),
            hermiticity_tol: t.hermiticity_tol.unwrap_or(sd.hermiticity_tol),
            biorthogonality_tol: t.biorthogonality_tol.unwrap_or(sd.biorthogonality_tol),
            resolvent_tol: t.resolvent_tol.unwrap_or(sd.resolvent_tol),
        };
        let expansion = ExpansionConfig {
            max_order: flags.max_order.unwrap_or(ed.max_order),
            residual_tol: flags
                .residual_tol
                .or(t.residual_tol)
                .unwrap_or(ed.residual_tol),
            gauge_tol: t.gauge_tol.unwrap_or(ed.gauge_tol),
            imag_tol: t.imag_tol.unwrap_or(ed.imag_tol),
        };
        for (name, v) in [
            ("zero-tol", split.zero_tol),
            ("residual-tol", expansion.residual_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!(
                    "--{name} must be positive, got {v}"
                )));
            }
        }
        if order == 0 {
            return Err(CliError::Usage("--order must be at least 1".into()));
        }
        Ok(Self {
            order,
            seed: flags.seed.unwrap_or(file.seed),
            split,
            expansion,
        })
    }

    fn echo(&self) -> SettingsEcho {
        SettingsEcho {
            order: self.order,
            max_order: self.expansion.max_order,
            seed: self.seed,
            zero_tol: self.split.zero_tol,
            hermiticity_tol: self.split.hermiticity_tol,
            biorthogonality_tol: self.split.biorthogonality_tol,
            resolvent_tol: self.split.resolvent_tol,
            residual_tol: self.expansion.residual_tol,
            gauge_tol: self.expansion.gauge_tol,
            imag_tol: self.expansion.imag_tol,
        }
    }
}

pub fn read_model(path: &Path) -> CliResult<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ModelFile::parse(&text).map_err(CliError::Parse)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Split and both expansions for one model file.
pub struct Pipeline {
    pub file: ModelFile,
    pub settings: Settings,
    pub model: GKSLModel,
    pub split: FastSlowSplit,
    pub slow: SlowExpansion,
    pub fast: FastExpansion,
}

impl Pipeline {
    pub fn run(file: ModelFile, settings: Settings) -> CliResult<Self> {
        let model = file.to_model()?;
        let split = FastSlowSplit::new(&model.fast, &settings.split)?;
        let slow = expand_slow(
            &split,
            &model.slow.schrodinger(),
            settings.order,
            &settings.expansion,
        )?;
        let fast = expand_fast(
            &split,
            &model.slow.heisenberg(),
            settings.order,
            &settings.expansion,
        )?;
        Ok(Self {
            file,
            settings,
            model,
            split,
            slow,
            fast,
        })
    }

    fn split_summary(&self) -> SplitSummary {
        let gap = self.split.gap();
        let pairs = |v: &[slowfast_core::operator::C64]| v.iter().map(|z| [z.re, z.im]).collect();
        let d = self.split.defects();
        SplitSummary {
            dim: self.split.dim(),
            dbar: self.split.dbar(),
            gamma: self.split.gamma(),
            norm: gap.norm,
            zero_eigenvalues: pairs(&gap.zero_group),
            fast_eigenvalues: pairs(&gap.fast_group),
            defects: DefectsEcho {
                orthonormality: d.orthonormality,
                biorthogonality: d.biorthogonality,
                kernel: d.kernel,
                adjoint_kernel: d.adjoint_kernel,
                idempotence: d.idempotence,
                resolvent_identity: d.resolvent_identity,
                adjoint_resolvent_identity: d.adjoint_resolvent_identity,
            },
        }
    }

    fn expansion_summary(&self, warnings: &mut Vec<String>) -> CliResult<ExpansionSummary> {
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| m.row(i).iter().cloned().collect())
                .collect()
        };
        let orders = (1..=self.settings.order)
            .map(|n| OrderRecord {
                n,
                f: rows(self.slow.f(n)),
                g: rows(self.fast.g(n)),
                slow_residual: self.slow.residual(n),
                fast_residual: self.fast.residual(n),
                slow_gauge: self.slow.gauge_defect(n),
                fast_gauge: self.fast.gauge_defect(n),
                slow_imaginary: self.slow.imaginary_residue(n),
                fast_imaginary: self.fast.imaginary_residue(n),
            })
            .collect();
        let l1_norm = build_lindbladian(&self.model.slow).spectral_norm();
        let mut per_epsilon = Vec::new();
        for &eps in &self.model.epsilon {
            let validity = validity_parameter(eps, l1_norm, self.split.gamma());
            let decreasing = series_terms_decrease(&self.slow, eps);
            if validity > VALIDITY_WARNING_THRESHOLD {
                warnings.push(format!(
                    "ε = {eps}: ε‖L1‖/γ = {validity:.3} exceeds {VALIDITY_WARNING_THRESHOLD}"
                ));
            }
            if !decreasing {
                warnings.push(format!(
                    "ε = {eps}: series terms do not decrease with order"
                ));
            }
            per_epsilon.push(EpsilonRecord {
                epsilon: eps,
                validity_parameter: validity,
                series_terms_decrease: decreasing,
                pairing_deviation: pairing_matrix(&self.slow, &self.fast, eps)?.deviation(),
            });
        }
        Ok(ExpansionSummary {
            order: self.settings.order,
            orders,
            per_epsilon,
        })
    }

    fn structural_criteria(&self) -> Vec<Criterion> {
        let d = self.split.defects();
        let scale = self.split.gap().norm.max(1.0);
        let structural = [
            d.orthonormality,
            d.biorthogonality,
            d.idempotence,
            d.kernel / scale,
            d.adjoint_kernel / scale,
            d.resolvent_identity / scale,
            d.adjoint_resolvent_identity / scale,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let order = self.settings.order;
        let gauge = (1..=order)
            .map(|n| self.slow.gauge_defect(n).max(self.fast.gauge_defect(n)))
            .fold(0.0, f64::max);
        let residual = (1..=order)
            .map(|n| self.slow.residual(n).max(self.fast.residual(n)))
            .fold(0.0, f64::max);
        vec![
            criterion(
                "structural_identities",
                structural <= STRUCTURAL_TOL,
                format!("max defect {structural:.3e}"),
            ),
            criterion(
                "gauge_conditions",
                gauge <= self.settings.expansion.gauge_tol,
                format!("max gauge pairing {gauge:.3e}"),
            ),
            criterion(
                "recursion_residuals",
                residual <= self.settings.expansion.residual_tol,
                format!("max relative residual {residual:.3e}"),
            ),
        ]
    }

    fn report(&self, command: &str) -> CliResult<Report> {
        let mut warnings = Vec::new();
        let expansion = self.expansion_summary(&mut warnings)?;
        Ok(Report {
            tool: ToolInfo::current(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.to_string(),
            model: self.file.clone(),
            model_sha256: model_digest(&self.file),
            settings: self.settings.echo(),
            split: self.split_summary(),
            expansion,
            validation: None,
            criteria: self.structural_criteria(),
            warnings,
        })
    }
}

fn criterion(name: &str, passed: bool, detail: String) -> Criterion {
    let verdict = if passed { Verdict::Pass } else { Verdict::Fail };
    verdict_criterion(name, verdict, detail)
}

fn verdict_criterion(name: &str, verdict: Verdict, detail: String) -> Criterion {
    Criterion {
        name: name.to_string(),
        verdict: verdict.as_str().to_string(),
        passed: verdict.passed(),
        detail,
    }
}

pub fn cmd_reduce(model: &Path, flags: &Overrides, out: Option<&Path>) -> CliResult<Report> {
    let file = read_model(model)?;
    let settings = Settings::resolve(&file, flags)?;
    let pipeline = Pipeline::run(file, settings)?;
    let report = pipeline.report("reduce")?;
    write_output(out, &to_precise_json(&report))?;
    Ok(report)
}

/// Default closeness grid: ten points from `2/γ` to `20/γ`.
pub fn default_time_grid(gamma: f64) -> Vec<f64> {
    (0..10).map(|k| (2.0 + 2.0 * k as f64) / gamma).collect()
}

pub fn cmd_validate(
    model: &Path,
    flags: &Overrides,
    tbar: f64,
    tgrid: Option<&[f64]>,
    out: Option<&Path>,
) -> CliResult<Report> {
    if !(tbar.is_finite() && tbar > 0.0) {
        return Err(CliError::Usage(format!(
            "--tbar must be positive, got {tbar}"
        )));
    }
    if let Some(g) = tgrid {
        if g.is_empty() || g.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Usage(
                "--tgrid needs non-negative finite times".into(),
            ));
        }
    }
    let file = read_model(model)?;
    let settings = Settings::resolve(&file, flags)?;
    let p = Pipeline::run(file, settings)?;
    let mut report = p.report("validate")?;

    let rho0 = default_initial_state(&p.split, p.settings.seed);
    let grid = tgrid
        .map(|g| g.to_vec())
        .unwrap_or_else(|| default_time_grid(p.split.gamma()));
    let mut closeness = Vec::new();
    let mut close_verdict = Verdict::PassAtFloor;
    for &eps in &p.model.epsilon {
        let r = validate_closeness(&p.model, &p.split, &p.slow, &p.fast, eps, &rho0, &grid)?;
        report
            .warnings
            .extend(r.warnings.iter().map(|w| format!("ε = {eps}: {w}")));
        close_verdict = merge(close_verdict, r.verdict);
        closeness.push(ClosenessRecord {
            epsilon: eps,
            order: r.order,
            gamma: r.gamma,
            state_norm: r.state_norm,
            points: r.records.iter().map(|(t, e)| [*t, *e]).collect(),
            fitted_rate: r.fitted_rate,
            prefactor: r.prefactor,
            verdict: r.verdict.as_str().to_string(),
        });
    }
    report.criteria.push(verdict_criterion(
        "exponential_closeness",
        close_verdict,
        format!("{} ε value(s), {} time points", closeness.len(), grid.len()),
    ));

    let second_order = if p.settings.order < 2 {
        let msg = "second-order check needs order ≥ 2, skipped".to_string();
        log::warn!("{msg}");
        report.warnings.push(msg.clone());
        report
            .criteria
            .push(verdict_criterion("second_order_map", Verdict::Skipped, msg));
        None
    } else {
        let r = validate_second_order(&p.model, &p.split, &p.slow, &p.model.epsilon, tbar, &rho0)?;
        report.warnings.extend(r.warnings.iter().cloned());
        let verdict = [r.state_verdict, r.choi_verdict, r.trace_verdict]
            .into_iter()
            .fold(Verdict::PassAtFloor, merge);
        report.criteria.push(verdict_criterion(
            "second_order_map",
            verdict,
            format!(
                "state slope {}, Choi {}, trace {}",
                r.state_slope.map_or("n/a".into(), |s| format!("{s:.3}")),
                r.choi_verdict.as_str(),
                r.trace_verdict.as_str()
            ),
        ));
        Some(SecondOrderSummary {
            tbar,
            points: r
                .records
                .iter()
                .map(|x| SecondOrderPoint {
                    epsilon: x.eps,
                    state_error: x.state_error,
                    min_choi_eigenvalue: x.diagnostics.min_choi_eigenvalue,
                    trace_defect: x.diagnostics.trace_defect,
                })
                .collect(),
            state_slope: r.state_slope,
            choi_slope: r.choi_slope,
            trace_slope: r.trace_slope,
            state_verdict: r.state_verdict.as_str().to_string(),
            choi_verdict: r.choi_verdict.as_str().to_string(),
            trace_verdict: r.trace_verdict.as_str().to_string(),
        })
    };
    report.validation = Some(ValidationSummary {
        time_grid: grid,
        closeness,
        second_order,
    });
    write_output(out, &to_precise_json(&report))?;
    Ok(report)
}

/// Worst of two verdicts: fail, then skipped, then pass, then pass at floor.
fn merge(a: Verdict, b: Verdict) -> Verdict {
    let rank = |v: Verdict| match v {
        Verdict::Fail => 0,
        Verdict::Skipped => 1,
        Verdict::Pass => 2,
        Verdict::PassAtFloor => 3,
    };
    if rank(a) <= rank(b) {
        a
    } else {
        b
    }
}

/// One `(ε, N)` sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub order: usize,
    /// `Σ_d |Tr(S_d K_{ε,T}(ρ0)) − z_d(T)|` at the fixed horizon.
    pub slow_coord_error: f64,
    /// `‖K_{ε,T̄/ε}(ρ0) − Σ_d x_d S_d‖_F` with `x = e^{(T̄/ε)F_N(ε)} x(0)`.
    pub state_error: f64,
    /// Of the lifted order-`N` map over `T̄/ε`.
    pub min_choi_eig: f64,
    pub trace_defect: f64,
    /// Closeness decay rate over the default grid; empty at the floor.
    pub fitted_rate: Option<f64>,
}

pub struct SweepOptions {
    pub epsilons: Option<Vec<f64>>,
    pub orders: Option<Vec<usize>>,
    pub horizon: Option<f64>,
    pub tbar: f64,
    pub jobs: Option<usize>,
}

pub fn run_sweep(
    file: ModelFile,
    flags: &Overrides,
    opts: &SweepOptions,
) -> CliResult<Vec<SweepRecord>> {
    let epsilons = opts
        .epsilons
        .clone()
        .unwrap_or_else(|| file.epsilon.to_vec());
    if epsilons.is_empty() {
        return Err(CliError::Usage("epsilon list is empty".into()));
    }
    if let Some(bad) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(CliError::Usage(format!(
            "epsilon must be positive, got {bad}"
        )));
    }
    let mut settings = Settings::resolve(&file, flags)?;
    let orders = opts.orders.clone().unwrap_or_else(|| vec![settings.order]);
    if orders.is_empty() || orders.contains(&0) {
        return Err(CliError::Usage(
            "orders must be a non-empty list of positive integers".into(),
        ));
    }
    if !(opts.tbar.is_finite() && opts.tbar > 0.0) {
        return Err(CliError::Usage(format!(
            "--tbar must be positive, got {}",
            opts.tbar
        )));
    }
    if opts.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    settings.order = *orders.iter().max().expect("non-empty");
    let p = Pipeline::run(file, settings)?;
    let horizon = opts.horizon.unwrap_or(20.0 / p.split.gamma());
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(CliError::Usage(format!(
            "--horizon must be non-negative, got {horizon}"
        )));
    }
    let rho0 = default_initial_state(&p.split, p.settings.seed);
    let grid = default_time_grid(p.split.gamma());

    let points: Vec<(f64, usize)> = epsilons
        .iter()
        .flat_map(|&e| orders.iter().map(move |&n| (e, n)))
        .collect();
    let eval = |&(eps, n): &(f64, usize)| sweep_point(&p, &rho0, &grid, horizon, opts.tbar, eps, n);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    // Indexed collect keeps ε-major, order-minor row order.
    let results: Vec<CliResult<SweepRecord>> =
        pool.install(|| points.par_iter().map(eval).collect());
    results.into_iter().collect()
}

fn sweep_point(
    p: &Pipeline,
    rho0: &CMatrix,
    grid: &[f64],
    horizon: f64,
    tbar: f64,
    eps: f64,
    n: usize,
) -> CliResult<SweepRecord> {
    let slow = p.slow.truncate(n);
    let fast = p.fast.truncate(n);
    let pairing = pairing_matrix(&slow, &fast, eps)?;
    let slow_coord_error =
        slow_coordinate_error(&p.model, &p.split, &slow, &pairing, rho0, eps, horizon)?;

    let t = tbar / eps;
    let reduced = expm_real(&(truncated_f(&slow, eps) * t))?;
    let lifted = p.split.lift_matrix(&reduced);
    let exact = full_slow_map(&p.model, &p.split, eps, t)?.apply(rho0);
    let approx = p.split.lift(&(&reduced * p.split.slow_coordinates(rho0)));
    let diag = cp_tp_diagnostics(&lifted);

    let closeness = validate_closeness(&p.model, &p.split, &slow, &fast, eps, rho0, grid)?;
    Ok(SweepRecord {
        epsilon: eps,
        order: n,
        slow_coord_error,
        state_error: (exact - approx).norm(),
        min_choi_eig: diag.min_choi_eigenvalue,
        trace_defect: diag.trace_defect,
        fitted_rate: closeness.fitted_rate,
    })
}

pub fn write_csv(records: &[SweepRecord], out: Option<&Path>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_output(out, &bytes)
}

pub fn cmd_sweep(
    model: &Path,
    flags: &Overrides,
    opts: &SweepOptions,
    csv_out: Option<&Path>,
) -> CliResult<Vec<SweepRecord>> {
    let file = read_model(model)?;
    let records = run_sweep(file, flags, opts)?;
    write_csv(&records, csv_out)?;
    Ok(records)
}

pub fn cmd_zoo_list() -> String {
    let mut out = String::new();
    for e in zoo_entries() {
        let z = zoo_build(e.name, &BTreeMap::new()).expect("defaults are valid");
        let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!(
            "{:<18} dbar={} gamma={} [{}]  {}\n",
            e.name,
            z.expected.dbar,
            z.expected.gamma.map_or("?".to_string(), |g| g.to_string()),
            params.join(", "),
            e.description
        ));
    }
    out
}

pub fn cmd_zoo_emit(
    name: &str,
    path: &Path,
    params: &[String],
    order: usize,
    seed: u64,
) -> CliResult<ModelFile> {
    zoo_entry(name)?;
    let mut overrides = BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {p:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--set {k}: not a number: {v:?}")))?;
        overrides.insert(k.trim().to_string(), v);
    }
    let zoo = zoo_build(name, &overrides)?;
    let file = ModelFile::from_zoo(&zoo, order, seed);
    let mut text = serde_json::to_vec_pretty(&file).map_err(|e| CliError::Io(e.to_string()))?;
    text.push(b'\n');
    write_output(Some(path), &text)?;
    Ok(file)
}
