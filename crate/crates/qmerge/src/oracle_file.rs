//! JSON oracle descriptions.
//!
//! Two forms are accepted. A matrix oracle lists the 2^n x 2^n unitary row
//! by row as `[re, im]` pairs:
//!
//! ```json
//! {"n": 1, "matrix": [[0.7071, 0], [0.7071, 0], [0.7071, 0], [-0.7071, 0]]}
//! ```
//!
//! A circuit oracle acts on `n` data wires followed by `ancillas` internal
//! wires and must return the ancillas to 0 on the all-zero input:
//!
//! ```json
//! {"n": 2, "ancillas": 1, "gates": [
//!   {"gate": "h", "target": 0},
//!   {"gate": "x", "target": 1, "controls": [0]},
//!   {"gate": "phase", "theta": 1.5708, "target": 1, "controls": [{"wire": 0, "value": 0}]},
//!   {"gate": "u", "matrix": [[0, 0], [1, 0], [1, 0], [0, 0]], "target": 2}
//! ]}
//! ```
//!
//! Gate vocabulary: `x`, `y`, `z`, `h`, `phase` (diag(1, e^{i theta})) and `u`
//! (any 2x2 unitary, row-major). A control is a wire index (fires on 1) or
//! `{"wire": w, "value": 0|1}`. An optional `"label"` names the oracle.

use std::path::Path;
use std::sync::Arc;

use qmerge_core::{c64, BlackBoxUnitary, CMatrix, Circuit, Control, Matrix2, QubitLayout, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest data register a matrix oracle file may describe.
pub const MAX_MATRIX_ORACLE_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleSpec {
    Matrix(MatrixOracle),
    Gates(GateOracle),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixOracle {
    pub n: usize,
    pub matrix: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateOracle {
    pub n: usize,
    #[serde(default)]
    pub ancillas: usize,
    pub gates: Vec<GateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(flatten)]
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<ControlSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Phase { theta: f64 },
    U { matrix: [[f64; 2]; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSpec {
    On(usize),
    Valued { wire: usize, value: u8 },
}

impl ControlSpec {
    fn control(&self) -> std::result::Result<Control, String> {
        match *self {
            Self::On(wire) => Ok(Control::on(wire)),
            Self::Valued { wire, value: 0 } => Ok(Control::off(wire)),
            Self::Valued { wire, value: 1 } => Ok(Control::on(wire)),
            Self::Valued { value, .. } => Err(format!("control value must be 0 or 1, got {value}")),
        }
    }
}

impl GateKind {
    fn matrix(&self) -> Matrix2 {
        match self {
            Self::X => Matrix2::x(),
            Self::Y => Matrix2::new(c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)),
            Self::Z => Matrix2::z(),
            Self::H => Matrix2::h(),
            Self::Phase { theta } => Matrix2::phase(*theta),
            Self::U { matrix: m } => {
                let e = |i: usize| c64(m[i][0], m[i][1]);
                Matrix2::new(e(0), e(1), e(2), e(3))
            }
        }
    }
}

impl OracleSpec {
    /// Reads and parses an oracle file; failures name the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|message| CliError::Parse { path: path.to_owned(), message })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let object = value.as_object().ok_or("oracle description must be a JSON object")?;
        // Dispatch on the distinguishing key so errors point at the right form.
        let spec = match (object.contains_key("matrix"), object.contains_key("gates")) {
            (true, false) => serde_json::from_value(value).map(Self::Matrix),
            (false, true) => serde_json::from_value(value).map(Self::Gates),
            _ => return Err("oracle description needs exactly one of \"matrix\" or \"gates\"".into()),
        };
        spec.map_err(|e| e.to_string())
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Matrix(m) => m.n,
            Self::Gates(g) => g.n,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Self::Matrix(m) => m.label.as_deref(),
            Self::Gates(g) => g.label.as_deref(),
        }
    }

    /// Matrix form of a dense unitary.
    pub fn from_matrix(matrix: &CMatrix, label: Option<String>) -> Self {
        let dim = matrix.nrows();
        let n = dim.trailing_zeros() as usize;
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let z = matrix[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self::Matrix(MatrixOracle { n, matrix: entries, label })
    }

    /// Builds a fresh oracle with zeroed query counters.
    pub fn instantiate(&self, default_label: &str) -> Result<Arc<BlackBoxUnitary>> {
        let label = self.label().unwrap_or(default_label).to_owned();
        match self {
            Self::Matrix(m) => {
                if m.n == 0 || m.n > MAX_MATRIX_ORACLE_QUBITS {
                    return Err(crate::error::config(format!("matrix oracle n = {} outside 1..={MAX_MATRIX_ORACLE_QUBITS}", m.n)));
                }
                let dim = 1usize << m.n;
                if m.matrix.len() != dim * dim {
                    return Err(crate::error::config(format!("matrix oracle with n = {} needs {} entries, got {}", m.n, dim * dim, m.matrix.len())));
                }
                let entries: Vec<C64> = m.matrix.iter().map(|[re, im]| c64(*re, *im)).collect();
                Ok(BlackBoxUnitary::from_matrix(label, CMatrix::from_row_slice(dim, dim, &entries))?)
            }
            Self::Gates(g) => {
                if g.n == 0 {
                    return Err(crate::error::config("circuit oracle needs n >= 1"));
                }
                let width = g.n + g.ancillas;
                let mut c = Circuit::new(width, QubitLayout::new(g.n, g.ancillas))?;
                for (i, gate) in g.gates.iter().enumerate() {
                    let controls = gate
                        .controls
                        .iter()
                        .map(ControlSpec::control)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| crate::error::config(format!("gate {i}: {e}")))?;
                    let matrix = gate.kind.matrix();
                    matrix.check_unitary(1e-9).map_err(|e| crate::error::config(format!("gate {i}: {e}")))?;
                    c.gate(matrix, gate.target, &controls).map_err(|e| crate::error::config(format!("gate {i}: {e}")))?;
                }
                Ok(BlackBoxUnitary::from_circuit(label, g.n, c)?)
            }
        }
    }
}
