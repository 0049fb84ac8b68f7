//! Model files: JSON with complex entries as `[re, im]` pairs.

use std::fmt;

use serde::{Deserialize, Serialize};
use slowfast_core::lindblad::{GKSLModel, GeneratorSpec};
use slowfast_core::operator::{CMatrix, HermitianOperator, C64, DEFAULT_HERMITICITY_TOL};
use slowfast_core::zoo::ZooModel;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub hamiltonian: JsonMatrix,
    #[serde(default)]
    pub collapse: Vec<JsonMatrix>,
}

/// A single value or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Optional tolerance overrides; absent fields fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hermiticity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biorthogonality_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag_tol: Option<f64>,
}

impl Tolerances {
    fn values(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("zero_tol", self.zero_tol),
            ("hermiticity_tol", self.hermiticity_tol),
            ("biorthogonality_tol", self.biorthogonality_tol),
            ("resolvent_tol", self.resolvent_tol),
            ("residual_tol", self.residual_tol),
            ("gauge_tol", self.gauge_tol),
            ("imag_tol", self.imag_tol),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dim: usize,
    pub fast: GeneratorFile,
    pub slow: GeneratorFile,
    pub epsilon: OneOrMany,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_order() -> usize {
    2
}

fn default_seed() -> u64 {
    42
}

/// Why a model file was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    /// Malformed JSON or a field of the wrong type.
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed JSON describing an invalid model.
    Invalid(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            ParseError::Invalid(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for ParseError {}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<(), ParseError> {
        let invalid = |m: String| Err(ParseError::Invalid(m));
        if self.dim == 0 {
            return invalid("dim must be at least 1".into());
        }
        for (side, g) in [("fast", &self.fast), ("slow", &self.slow)] {
            check_matrix(&g.hamiltonian, self.dim, &format!("{side}.hamiltonian"))?;
            for (k, l) in g.collapse.iter().enumerate() {
                check_matrix(l, self.dim, &format!("{side}.collapse[{k}]"))?;
            }
        }
        let eps = self.epsilon.to_vec();
        if eps.is_empty() {
            return invalid("epsilon list is empty".into());
        }
        if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return invalid(format!("epsilon must be positive and finite, got {bad}"));
        }
        if self.order == 0 {
            return invalid("order must be at least 1".into());
        }
        if let Some(t) = &self.tolerances {
            for (name, v) in t.values() {
                if let Some(v) = v {
                    if !(v.is_finite() && v > 0.0) {
                        return invalid(format!("tolerances.{name} must be positive, got {v}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn hermiticity_tol(&self) -> f64 {
        self.tolerances
            .as_ref()
            .and_then(|t| t.hermiticity_tol)
            .unwrap_or(DEFAULT_HERMITICITY_TOL)
    }

    /// Builds the model, checking Hermiticity of both Hamiltonians.
    pub fn to_model(&self) -> slowfast_core::Result<GKSLModel> {
        let tol = self.hermiticity_tol();
        let build = |g: &GeneratorFile| -> slowfast_core::Result<GeneratorSpec> {
            let h = HermitianOperator::with_tolerance(to_cmatrix(&g.hamiltonian), tol)?;
            GeneratorSpec::new(h, g.collapse.iter().map(to_cmatrix).collect())
        };
        GKSLModel::new(
            build(&self.fast)?,
            build(&self.slow)?,
            self.epsilon.to_vec(),
        )
    }

    pub fn from_zoo(zoo: &ZooModel, order: usize, seed: u64) -> Self {
        let gen = |g: &GeneratorSpec| GeneratorFile {
            hamiltonian: from_cmatrix(g.hamiltonian().matrix()),
            collapse: g.collapse_ops().iter().map(from_cmatrix).collect(),
        };
        let eps = zoo.model.epsilon.clone();
        ModelFile {
            dim: zoo.model.dim(),
            fast: gen(&zoo.model.fast),
            slow: gen(&zoo.model.slow),
            epsilon: if eps.len() == 1 {
                OneOrMany::One(eps[0])
            } else {
                OneOrMany::Many(eps)
            },
            order,
            tolerances: None,
            seed,
        }
    }
}

fn check_matrix(m: &JsonMatrix, dim: usize, what: &str) -> Result<(), ParseError> {
    if m.len() != dim {
        return Err(ParseError::Invalid(format!(
            "{what} has {} rows, expected {dim}",
            m.len()
        )));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != dim {
            return Err(ParseError::Invalid(format!(
                "{what} row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        if let Some(j) = row
            .iter()
            .position(|z| !(z[0].is_finite() && z[1].is_finite()))
        {
            return Err(ParseError::Invalid(format!(
                "{what} entry ({i}, {j}) is not finite"
            )));
        }
    }
    Ok(())
}

pub fn to_cmatrix(m: &JsonMatrix) -> CMatrix {
    let n = m.len();
    CMatrix::from_fn(n, n, |i, j| C64::new(m[i][j][0], m[i][j][1]))
}

pub fn from_cmatrix(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}
