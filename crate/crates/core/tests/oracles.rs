//! Independent oracles for the split, the resolvents and the series.

use std::collections::BTreeMap;

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slowfast_core::expansion::{expand_slow, truncated_f, ExpansionConfig};
use slowfast_core::fit;
use slowfast_core::lindblad::total_generator;
use slowfast_core::operator::{trace_product, CMatrix, LinearMap, Superoperator, C64};
use slowfast_core::propagate::propagator;
use slowfast_core::random;
use slowfast_core::spectral::{FastSlowSplit, SplitConfig};
use slowfast_core::zoo::{zoo_build, zoo_entries, ZooModel};

fn split_of(name: &str) -> (ZooModel, FastSlowSplit) {
    let z = zoo_build(name, &BTreeMap::new()).unwrap();
    let split = FastSlowSplit::new(&z.model.fast, &SplitConfig::default()).unwrap();
    (z, split)
}

fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim * dim, dim * dim)
}

#[test]
fn resolvent_matches_pseudo_inverse() {
    // R = (Id − K̄) L0⁺ (K̄ − Id) with the Moore–Penrose inverse.
    for e in zoo_entries() {
        let (_, split) = split_of(e.name);
        let l0 = split.l0().matrix().clone();
        let k = split.kbar().matrix();
        let id = identity(split.dim());
        let pinv = l0.pseudo_inverse(1e-9 * split.gap().norm).unwrap();
        let oracle = (&id - k) * pinv * (k - &id);
        let err = (split.resolvent().matrix() - oracle).norm();
        assert!(err < 1e-9, "{}: {err:e}", e.name);
    }
}

#[test]
fn resolvent_matches_time_integral() {
    // R = ∫₀^∞ (e^{tL0} − K̄) dt, composite Simpson on [0, 40/γ].
    for name in ["damped_qubit", "dephased_qubit", "lambda_system"] {
        let (_, split) = split_of(name);
        let t_max = 40.0 / split.gamma();
        let steps = 4000;
        let h = t_max / steps as f64;
        let step = propagator(split.l0(), h).unwrap();
        let k = split.kbar().matrix();
        let mut p = identity(split.dim());
        let mut acc = CMatrix::zeros(p.nrows(), p.ncols());
        for i in 0..=steps {
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += (&p - k) * C64::new(w * h / 3.0, 0.0);
            p = step.matrix() * p;
        }
        let err = (split.resolvent().matrix() - acc).norm();
        assert!(err < 1e-7, "{name}: {err:e}");
    }
}

#[test]
fn kbar_is_the_long_time_limit() {
    for e in zoo_entries() {
        let (_, split) = split_of(e.name);
        let late = propagator(split.l0(), 40.0 / split.gamma()).unwrap();
        let err = late.distance(split.kbar());
        assert!(err < 1e-12, "{}: {err:e}", e.name);
    }
}

#[test]
fn fast_relaxation_rate_reaches_the_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for e in zoo_entries() {
        let (_, split) = split_of(e.name);
        let gamma = split.gamma();
        let x = random::gaussian_matrix(&mut rng, split.dim());
        let ts: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|s| s / gamma).collect();
        let errs: Vec<f64> = ts
            .iter()
            .map(|&t| {
                (propagator(split.l0(), t).unwrap().apply(&x) - split.kbar().apply(&x)).norm()
                    / x.norm()
            })
            .collect();
        match fit::exponential_rate(&ts, &errs, 1e-12) {
            Some((rate, _)) => assert!(rate >= 0.8 * gamma, "{}: {rate} < 0.8·{gamma}", e.name),
            None => assert!(errs.iter().all(|v| *v <= 1e-12)),
        }
    }
}

#[test]
fn resolvent_adjoint_pairing() {
    // Tr(R*(V) W) = Tr(V R(W)) for Hermitian V, W.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for e in zoo_entries() {
        let (_, split) = split_of(e.name);
        for _ in 0..5 {
            let v = random::hermitian(&mut rng, split.dim()).into_inner();
            let w = random::hermitian(&mut rng, split.dim()).into_inner();
            let lhs = trace_product(&split.resolvent_adj().apply(&v), &w);
            let rhs = trace_product(&v, &split.resolvent().apply(&w));
            assert!(
                (lhs - rhs).norm() < 1e-10 * v.norm() * w.norm(),
                "{}",
                e.name
            );
        }
    }
}

fn sorted_by_rate(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    v
}

#[test]
fn slow_spectrum_matches_full_generator() {
    // The eigenvalues of Σ εⁿF⁽ⁿ⁾ are the dbar slowest eigenvalues of
    // L0 + εL1, up to the O(ε^{N+1}) truncation.
    let eps = 0.02;
    let cfg = ExpansionConfig {
        max_order: 12,
        ..ExpansionConfig::default()
    };
    for e in zoo_entries() {
        let (z, split) = split_of(e.name);
        let slow = expand_slow(&split, &z.model.slow.schrodinger(), 12, &cfg).unwrap();
        let reduced = truncated_f(&slow, eps).complex_eigenvalues();
        let full: Superoperator = total_generator(&z.model, eps).unwrap();
        let all = sorted_by_rate(
            nalgebra::Schur::new(full.matrix().clone())
                .eigenvalues()
                .unwrap()
                .iter()
                .cloned()
                .collect(),
        );
        let slowest = &all[..split.dbar()];
        for a in &reduced {
            let err = slowest
                .iter()
                .map(|b| (a - b).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(err < 1e-12, "{}: {a} unmatched ({err:e})", e.name);
        }
    }
}

#[test]
fn purcell_rate_series_matches_closed_form() {
    // Slow population decay of the exchange-coupled damped pair:
    // (κ/2)(1 − √(1 − 16g²ε²/κ²)).
    let (z, split) = split_of("purcell_two_qubit");
    let (kappa, g) = (z.params["kappa"], z.params["g"]);
    let cfg = ExpansionConfig {
        max_order: 16,
        ..ExpansionConfig::default()
    };
    let slow = expand_slow(&split, &z.model.slow.schrodinger(), 16, &cfg).unwrap();
    for eps in [0.01, 0.02, 0.05] {
        let exact = 0.5 * kappa * (1.0 - (1.0 - 16.0 * g * g * eps * eps / (kappa * kappa)).sqrt());
        let fastest = truncated_f(&slow, eps)
            .complex_eigenvalues()
            .iter()
            .map(|l| -l.re)
            .fold(0.0, f64::max);
        assert!(
            (fastest - exact).abs() < 1e-9 * exact,
            "{eps}: {fastest} vs {exact}"
        );
    }
}
