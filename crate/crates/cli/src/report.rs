//! Report documents and their serialization.
//!
//! Floats are written as `{:.16e}` (17 significant digits) so that every
//! value survives a write/read cycle bit for bit.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::model_file::ModelFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Effective settings after applying flags, file tolerances and defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsEcho {
    pub order: usize,
    pub max_order: usize,
    pub seed: u64,
    pub zero_tol: f64,
    pub hermiticity_tol: f64,
    pub biorthogonality_tol: f64,
    pub resolvent_tol: f64,
    pub residual_tol: f64,
    pub gauge_tol: f64,
    pub imag_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectsEcho {
    pub orthonormality: f64,
    pub biorthogonality: f64,
    pub kernel: f64,
    pub adjoint_kernel: f64,
    pub idempotence: f64,
    pub resolvent_identity: f64,
    pub adjoint_resolvent_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub dim: usize,
    pub dbar: usize,
    pub gamma: f64,
    pub norm: f64,
    /// `[re, im]` pairs.
    pub zero_eigenvalues: Vec<[f64; 2]>,
    /// `[re, im]` pairs, slowest first.
    pub fast_eigenvalues: Vec<[f64; 2]>,
    pub defects: DefectsEcho,
}

/// Coefficients of one order. Matrices are row-major with `f[d'][d]` the
/// coefficient of `S_d'` in the evolution of `x_d`, so `ẋ = F x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub n: usize,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub slow_residual: f64,
    pub fast_residual: f64,
    pub slow_gauge: f64,
    pub fast_gauge: f64,
    pub slow_imaginary: f64,
    pub fast_imaginary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    /// `ε‖L1‖₂/γ`
    pub validity_parameter: f64,
    pub series_terms_decrease: bool,
    /// `‖E(ε) − I‖_F`
    pub pairing_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    pub order: usize,
    pub orders: Vec<OrderRecord>,
    pub per_epsilon: Vec<EpsilonRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRecord {
    pub epsilon: f64,
    pub order: usize,
    pub gamma: f64,
    pub state_norm: f64,
    /// `[T, err(T)]` pairs.
    pub points: Vec<[f64; 2]>,
    pub fitted_rate: Option<f64>,
    pub prefactor: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderPoint {
    pub epsilon: f64,
    pub state_error: f64,
    pub min_choi_eigenvalue: f64,
    pub trace_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderSummary {
    pub tbar: f64,
    pub points: Vec<SecondOrderPoint>,
    pub state_slope: Option<f64>,
    pub choi_slope: Option<f64>,
    pub trace_slope: Option<f64>,
    pub state_verdict: String,
    pub choi_verdict: String,
    pub trace_verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub time_grid: Vec<f64>,
    pub closeness: Vec<ClosenessRecord>,
    pub second_order: Option<SecondOrderSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub verdict: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub timestamp: String,
    pub command: String,
    pub model: ModelFile,
    pub model_sha256: String,
    pub settings: SettingsEcho,
    pub split: SplitSummary,
    pub expansion: ExpansionSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSummary>,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
}

/// Pretty JSON with fixed 17-significant-digit floats; non-finite values
/// become `null`.
struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_precise_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    out.push(b'\n');
    out
}

/// SHA-256 of the model's canonical serialization, as lowercase hex.
pub fn model_digest(model: &ModelFile) -> String {
    let digest = Sha256::digest(to_precise_json(model));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Sample {
        values: Vec<f64>,
        missing: Option<f64>,
    }

    #[test]
    fn floats_round_trip_bit_for_bit() {
        let s = Sample {
            values: vec![
                0.1,
                1.0 / 3.0,
                -2.5e-300,
                6.02214076e23,
                0.0,
                -0.0,
                f64::MIN_POSITIVE,
            ],
            missing: None,
        };
        let text = to_precise_json(&s);
        let back: Sample = serde_json::from_slice(&text).unwrap();
        for (a, b) in s.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(to_precise_json(&back), text);
        assert!(String::from_utf8(text)
            .unwrap()
            .contains("3.3333333333333331e-1"));
    }

    #[test]
    fn non_finite_becomes_null() {
        let text = to_precise_json(&vec![f64::NAN, 1.0]);
        let s = String::from_utf8(text).unwrap();
        assert!(s.contains("null"));
    }
}
