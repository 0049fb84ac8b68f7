//! Benchmark models with known reductions.
//!
//! Every builder takes named parameters with defaults (fast rates default to
//! 1 so that `ε` alone sets the time-scale separation) and returns the model
//! together with the facts it is expected to reproduce.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lindblad::{GKSLModel, GeneratorSpec};
use crate::operator::{c, matrix_unit, CMatrix, HermitianOperator};
use crate::spectral::{spectral_gap_analysis, DEFAULT_ZERO_TOL};

/// A named benchmark and its tunable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// `(name, default)` pairs.
    pub params: &'static [(&'static str, f64)],
    /// Default perturbation strengths written into emitted model files.
    pub epsilon: &'static [f64],
}

/// Facts a zoo model is built to reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedFacts {
    pub dbar: usize,
    pub gamma: Option<f64>,
    /// Second-order effective decay rate per unit `ε²`, where one exists.
    pub effective_rate: Option<f64>,
    /// How the values were obtained.
    pub source: &'static str,
}

#[derive(Debug, Clone)]
pub struct ZooModel {
    pub name: &'static str,
    pub params: BTreeMap<String, f64>,
    pub model: GKSLModel,
    pub expected: ExpectedFacts,
}

const ENTRIES: &[ZooEntry] = &[
    ZooEntry {
        name: "damped_qubit",
        description: "qubit with fast amplitude damping, perturbed by a transverse drive",
        params: &[("kappa", 1.0), ("omega", 1.0)],
        epsilon: &[0.05],
    },
    ZooEntry {
        name: "dephased_qubit",
        description: "qubit with fast dephasing, perturbed by a drive and a detuning",
        params: &[("kappa", 1.0), ("omega", 1.0), ("delta", 0.5)],
        epsilon: &[0.05],
    },
    ZooEntry {
        name: "lambda_system",
        description: "three-level lambda system, excited state decays to both grounds; weak drives and a ground detuning",
        params: &[
            ("gamma0", 1.0),
            ("gamma1", 1.0),
            ("omega0", 1.0),
            ("omega1", 0.7),
            ("delta", 0.5),
        ],
        epsilon: &[0.01, 0.02, 0.04, 0.08],
    },
    ZooEntry {
        name: "purcell_two_qubit",
        description: "qubit exchange-coupled to a strongly damped qubit",
        params: &[("kappa", 1.0), ("g", 1.0)],
        epsilon: &[0.02, 0.04, 0.08, 0.16],
    },
    ZooEntry {
        name: "two_photon_loss",
        description: "truncated oscillator with fast two-photon loss, weak single-photon loss and detuning",
        params: &[
            ("n_max", 6.0),
            ("kappa2", 1.0),
            ("kappa1", 1.0),
            ("delta", 0.5),
        ],
        epsilon: &[0.05],
    },
];

pub fn zoo_entries() -> &'static [ZooEntry] {
    ENTRIES
}

pub fn zoo_entry(name: &str) -> Result<&'static ZooEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))
}

fn resolve_params(
    entry: &ZooEntry,
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>> {
    let mut params: BTreeMap<String, f64> = entry
        .params
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    for (k, v) in overrides {
        match params.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                return Err(Error::InvalidParams(format!(
                    "{} has no parameter '{k}'",
                    entry.name
                )))
            }
        }
    }
    if let Some((k, v)) = params.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("{k} = {v} is not finite")));
    }
    Ok(params)
}

fn positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = params[key];
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!(
            "{key} must be positive, got {v}"
        )))
    }
}

fn herm(m: CMatrix) -> HermitianOperator {
    HermitianOperator::hermitize(&m)
}

fn sigma_minus() -> CMatrix {
    // |g⟩ = index 0, |e⟩ = index 1
    matrix_unit(2, 0, 1)
}

fn sigma_x() -> CMatrix {
    matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)
}

fn sigma_z() -> CMatrix {
    matrix_unit(2, 0, 0) - matrix_unit(2, 1, 1)
}

/// Annihilation operator on the first `n` Fock states.
pub fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    a
}

/// Builds a zoo model, applying `overrides` on top of the defaults.
pub fn zoo_build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ZooModel> {
    let entry = zoo_entry(name)?;
    let params = resolve_params(entry, overrides)?;
    let epsilon = entry.epsilon.to_vec();
    let (model, expected) = match entry.name {
        "damped_qubit" => {
            let kappa = positive(&params, "kappa")?;
            let omega = params["omega"];
            let fast = GeneratorSpec::new(
                HermitianOperator::zero(2),
                vec![sigma_minus() * c(kappa.sqrt())],
            )?;
            let slow = GeneratorSpec::hamiltonian_only(herm(sigma_x() * c(omega)));
            (
                GKSLModel::new(fast, slow, epsilon)?,
                ExpectedFacts {
                    dbar: 1,
                    gamma: Some(kappa / 2.0),
                    effective_rate: None,
                    source: "hand diagonalization: coherences decay at kappa/2",
                },
            )
        }
        "dephased_qubit" => {
            let kappa = positive(&params, "kappa")?;
            let fast = GeneratorSpec::new(
                HermitianOperator::zero(2),
                vec![sigma_z() * c((kappa / 2.0).sqrt())],
            )?;
            let h1 = sigma_x() * c(params["omega"]) + sigma_z() * c(params["delta"]);
            let slow = GeneratorSpec::hamiltonian_only(herm(h1));
            (
                GKSLModel::new(fast, slow, epsilon)?,
                ExpectedFacts {
                    dbar: 2,
                    gamma: Some(kappa),
                    effective_rate: None,
                    source: "dephasing keeps the diagonal, coherences decay at kappa",
                },
            )
        }
        "lambda_system" => {
            let g0 = positive(&params, "gamma0")?;
            let g1 = positive(&params, "gamma1")?;
            // |g0⟩ = 0, |g1⟩ = 1, |e⟩ = 2
            let fast = GeneratorSpec::new(
                HermitianOperator::zero(3),
                vec![
                    matrix_unit(3, 0, 2) * c(g0.sqrt()),
                    matrix_unit(3, 1, 2) * c(g1.sqrt()),
                ],
            )?;
            let h1 = (matrix_unit(3, 2, 0) + matrix_unit(3, 0, 2)) * c(params["omega0"])
                + (matrix_unit(3, 2, 1) + matrix_unit(3, 1, 2)) * c(params["omega1"])
                + matrix_unit(3, 1, 1) * c(params["delta"]);
            let slow = GeneratorSpec::hamiltonian_only(herm(h1));
            (
                GKSLModel::new(fast, slow, epsilon)?,
                ExpectedFacts {
                    dbar: 4,
                    gamma: Some((g0 + g1) / 2.0),
                    effective_rate: None,
                    source: "ground-state block is stationary, excited coherences decay at (gamma0+gamma1)/2",
                },
            )
        }
        "purcell_two_qubit" => {
            let kappa = positive(&params, "kappa")?;
            let g = params["g"];
            let id2 = CMatrix::identity(2, 2);
            // qubit 1 ⊗ qubit 2, qubit 2 is damped
            let fast = GeneratorSpec::new(
                HermitianOperator::zero(4),
                vec![id2.kronecker(&sigma_minus()) * c(kappa.sqrt())],
            )?;
            let sp = sigma_minus().adjoint();
            let h1 = (sp.kronecker(&sigma_minus()) + sigma_minus().kronecker(&sp)) * c(g);
            let slow = GeneratorSpec::hamiltonian_only(herm(h1));
            (
                GKSLModel::new(fast, slow, epsilon)?,
                ExpectedFacts {
                    dbar: 4,
                    gamma: Some(kappa / 2.0),
                    effective_rate: Some(4.0 * g * g / kappa),
                    source: "Purcell decay 4 g^2 / kappa, confirmed by fitting exact propagation",
                },
            )
        }
        "two_photon_loss" => {
            let n_raw = params["n_max"];
            if n_raw.fract() != 0.0 || n_raw < 4.0 {
                return Err(Error::InvalidParams(format!(
                    "n_max must be an integer ≥ 4, got {n_raw}"
                )));
            }
            let n = n_raw as usize;
            let kappa2 = positive(&params, "kappa2")?;
            let kappa1 = params["kappa1"];
            if kappa1 < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "kappa1 must be nonnegative, got {kappa1}"
                )));
            }
            let a = annihilation(n);
            let fast =
                GeneratorSpec::new(HermitianOperator::zero(n), vec![&a * &a * c(kappa2.sqrt())])?;
            let number = a.adjoint() * &a;
            let slow = GeneratorSpec::new(
                herm(number * c(params["delta"])),
                vec![a * c(kappa1.sqrt())],
            )?;
            (
                GKSLModel::new(fast, slow, epsilon)?,
                ExpectedFacts {
                    dbar: 4,
                    gamma: Some(kappa2),
                    effective_rate: None,
                    source: "kernel is the {|0>, |1>} block; slowest decay is |0><2| at kappa2",
                },
            )
        }
        _ => unreachable!("entry table and builders are in sync"),
    };
    Ok(ZooModel {
        name: entry.name,
        params,
        model,
        expected,
    })
}

/// Kernel dimension of the two-photon-loss generator at `n_max` and
/// `n_max + 2` Fock states; equal values mean the truncation does not
/// inflate the slow manifold.
pub fn two_photon_truncation_check(n_max: usize, kappa2: f64) -> Result<(usize, usize)> {
    let dbar_at = |n: usize| -> Result<usize> {
        let mut o = BTreeMap::new();
        o.insert("n_max".to_string(), n as f64);
        o.insert("kappa2".to_string(), kappa2);
        let zm = zoo_build("two_photon_loss", &o)?;
        let l0 = crate::lindblad::build_lindbladian(&zm.model.fast);
        Ok(spectral_gap_analysis(&l0, DEFAULT_ZERO_TOL)?.dbar())
    };
    Ok((dbar_at(n_max)?, dbar_at(n_max + 2)?))
}
