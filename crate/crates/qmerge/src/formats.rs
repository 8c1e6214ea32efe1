//! JSON encodings of circuits and merge reports. Every document carries a
//! top-level `"version": 1`.

use std::collections::HashMap;
use std::sync::Arc;

use qmerge_core::merge::{AngleEstimate, MergePath, MergeReport};
use qmerge_core::{AccessMode, BlackBoxUnitary, Circuit, CircuitOp, Control, QubitLayout, QueryCounts, C64};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

fn controls(cs: &[Control]) -> Value {
    Value::Array(cs.iter().map(|c| json!({"wire": c.wire, "value": u8::from(c.value)})).collect())
}

fn layout(l: &QubitLayout) -> Value {
    json!({
        "main": [l.main.start, l.main.end],
        "ancillas": [l.ancillas.start, l.ancillas.end],
        "controls": [l.controls.start, l.controls.end],
    })
}

/// Shared preparers and oracles are written once and referenced by index.
#[derive(Default)]
struct Tables {
    preparers: Vec<Value>,
    preparer_index: HashMap<*const Circuit, usize>,
    oracles: Vec<Value>,
    oracle_index: HashMap<*const BlackBoxUnitary, usize>,
}

impl Tables {
    fn oracle(&mut self, o: &Arc<BlackBoxUnitary>) -> usize {
        if let Some(&i) = self.oracle_index.get(&Arc::as_ptr(o)) {
            return i;
        }
        let i = self.oracles.len();
        self.oracles.push(json!({"label": o.label(), "n": o.num_qubits(), "ancillas": o.num_ancillas()}));
        self.oracle_index.insert(Arc::as_ptr(o), i);
        i
    }

    fn preparer(&mut self, p: &Arc<Circuit>) -> usize {
        if let Some(&i) = self.preparer_index.get(&Arc::as_ptr(p)) {
            return i;
        }
        // Nested preparers land before this one.
        let body = json!({"num_qubits": p.num_qubits(), "layout": layout(p.layout()), "ops": self.ops(p)});
        let i = self.preparers.len();
        self.preparers.push(body);
        self.preparer_index.insert(Arc::as_ptr(p), i);
        i
    }

    fn ops(&mut self, c: &Circuit) -> Value {
        Value::Array(c.ops().iter().map(|op| self.op(op)).collect())
    }

    fn op(&mut self, op: &CircuitOp) -> Value {
        match op {
            CircuitOp::Gate { matrix, target, controls: cs } => {
                let m = &matrix.0;
                json!({
                    "op": "gate",
                    "matrix": [complex(m[0][0]), complex(m[0][1]), complex(m[1][0]), complex(m[1][1])],
                    "target": target,
                    "controls": controls(cs),
                })
            }
            CircuitOp::ZeroControl { register, target, controls: cs } => {
                json!({"op": "zero_control", "register": register, "target": target, "controls": controls(cs)})
            }
            CircuitOp::Rotation { alpha, beta, adjoint, target, controls: cs } => json!({
                "op": "rotation",
                "alpha": complex(*alpha),
                "beta": complex(*beta),
                "adjoint": adjoint,
                "target": target,
                "controls": controls(cs),
            }),
            CircuitOp::OracleCall { oracle, adjoint, register, controls: cs } => {
                let mode = AccessMode::new(*adjoint, !cs.is_empty());
                json!({
                    "op": "oracle_call",
                    "oracle": self.oracle(oracle),
                    "mode": mode.name(),
                    "register": register,
                    "controls": controls(cs),
                })
            }
            CircuitOp::StateControl { preparer, register, targets, controls: cs } => json!({
                "op": "state_control",
                "preparer": self.preparer(preparer),
                "register": register,
                "targets": targets,
                "controls": controls(cs),
            }),
        }
    }
}

/// Op list with wire indices, access-mode tags and rotation parameters.
/// `state_control` ops reference an entry of `preparers` (itself a circuit
/// body) and `oracle_call` ops an entry of `oracles`.
pub fn circuit_json(c: &Circuit) -> Value {
    let mut tables = Tables::default();
    let ops = tables.ops(c);
    json!({
        "version": SCHEMA_VERSION,
        "num_qubits": c.num_qubits(),
        "layout": layout(c.layout()),
        "oracles": tables.oracles,
        "preparers": tables.preparers,
        "ops": ops,
    })
}

pub fn query_json(q: &QueryCounts) -> Value {
    json!({
        "apply": q.apply,
        "adjoint": q.adjoint,
        "controlled_apply": q.controlled_apply,
        "controlled_adjoint": q.controlled_adjoint,
        "total": q.total(),
    })
}

fn estimate_json(e: &AngleEstimate) -> Value {
    json!({
        "cos_squared": e.cos_squared,
        "cos_abs": e.cos_abs,
        "sign": e.sign.name(),
        "signed_cos": e.signed_cos(),
        "mode": e.mode.name(),
        "samples_used": e.samples_used,
    })
}

pub fn path_json(path: &MergePath) -> Value {
    match path {
        MergePath::Exact(case) => json!({"kind": "exact", "case": case.name()}),
        MergePath::Aligned => json!({"kind": "aligned"}),
        MergePath::General => json!({"kind": "general"}),
    }
}

pub fn report_json(r: &MergeReport) -> Value {
    json!({
        "version": SCHEMA_VERSION,
        "epsilon": r.epsilon,
        "path": path_json(&r.path),
        "distance_psi": r.distance_psi,
        "distance_phi": r.distance_phi,
        "max_leakage": r.max_leakage,
        "leakage_trials": r.leakage_trials,
        "queries": {"u": query_json(&r.queries_u), "v": query_json(&r.queries_v)},
        "estimation_queries": {"u": query_json(&r.estimation_queries_u), "v": query_json(&r.estimation_queries_v)},
        "iterations_k": r.iterations_k,
        "estimate": r.estimate.as_ref().map(estimate_json),
        "sign_trials": r.sign_trials,
        "residual_amplitude": r.residual_amplitude,
        "total_qubits": r.total_qubits,
        "truncation_error": r.truncation_error,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmerge_core::exact::build_swap_orthogonal;
    use qmerge_core::{c64, CMatrix};

    fn x_oracle() -> Arc<BlackBoxUnitary> {
        let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        BlackBoxUnitary::from_matrix("V", m).unwrap()
    }

    #[test]
    fn swap_circuit_shares_preparers() {
        let u = BlackBoxUnitary::from_matrix("U", CMatrix::identity(2, 2)).unwrap();
        let c = build_swap_orthogonal(&u, &x_oracle()).unwrap();
        let v = circuit_json(&c);
        assert_eq!(v["version"], 1);
        assert_eq!(v["ops"].as_array().unwrap().len(), c.ops().len());
        let labels: Vec<&str> = v["oracles"].as_array().unwrap().iter().map(|o| o["label"].as_str().unwrap()).collect();
        assert_eq!(labels, ["U", "V"]);
        // Each state_control references an existing table entry.
        for op in v["ops"].as_array().unwrap() {
            if op["op"] == "state_control" {
                assert!(op["preparer"].as_u64().unwrap() < v["preparers"].as_array().unwrap().len() as u64);
            }
        }
        assert_eq!(to_text(&v), to_text(&circuit_json(&c)));
    }
}
