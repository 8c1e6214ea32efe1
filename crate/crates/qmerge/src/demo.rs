//! Worked examples printed step by step.

use std::fmt::Write as _;
use std::sync::Arc;

use qmerge_core::exact::build_superposition_prep;
use qmerge_core::exact::build_swap_orthogonal;
use qmerge_core::{c64, BlackBoxUnitary, CMatrix, Circuit, CircuitOp, PureState, SparseState, C64};

use crate::error::Result;

/// Amplitudes below this are left out of printed kets.
const SHOW: f64 = 1e-12;

fn amplitude(z: C64) -> String {
    if z.im.abs() < SHOW {
        format!("{:+.6}", z.re)
    } else if z.re.abs() < SHOW {
        format!("{:+.6}i", z.im)
    } else {
        format!("({:.6}{:+.6}i)", z.re, z.im)
    }
}

/// `amp|data>|ancillas>` terms, bits written qubit 0 first.
pub fn ket(state: &SparseState, main: usize) -> String {
    let total = state.num_qubits();
    let mut s = String::new();
    for (key, a) in state.iter() {
        if a.norm() < SHOW {
            continue;
        }
        let bits = |r: std::ops::Range<usize>| r.map(|w| if key.bit(w) { '1' } else { '0' }).collect::<String>();
        let _ = write!(s, " {}|{}>", amplitude(*a), bits(0..main));
        if total > main {
            let _ = write!(s, "|{}>", bits(main..total));
        }
    }
    if s.is_empty() {
        s.push_str(" 0");
    }
    s
}

fn describe(op: &CircuitOp) -> String {
    let wires = |ws: &[usize]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
    let ctl = if op.controls().is_empty() {
        String::new()
    } else {
        let cs: Vec<String> = op.controls().iter().map(|c| format!("{}={}", c.wire, u8::from(c.value))).collect();
        format!(" if {}", cs.join(","))
    };
    let body = match op {
        CircuitOp::Gate { target, .. } => format!("gate on {target}"),
        CircuitOp::ZeroControl { register, target, .. } => format!("flip {target} if [{}] = 0", wires(register)),
        CircuitOp::Rotation { target, adjoint, .. } => format!("rotation{} on {target}", if *adjoint { "^-1" } else { "" }),
        CircuitOp::OracleCall { oracle, adjoint, register, .. } => {
            format!("{}{} on [{}]", oracle.label(), if *adjoint { "^-1" } else { "" }, wires(register))
        }
        CircuitOp::StateControl { targets, register, .. } => format!("flip [{}] along prepared state of [{}]", wires(targets), wires(register)),
    };
    body + &ctl
}

/// Runs `c` op by op on `input`, one printed line per op.
fn trace(out: &mut String, c: &Circuit, input: SparseState, main: usize) -> Result<SparseState> {
    let _ = writeln!(out, "  start:{}", ket(&input, main));
    let mut state = input;
    for (i, op) in c.ops().iter().enumerate() {
        let mut step = Circuit::new(c.num_qubits(), c.layout().clone())?;
        step.push(op.clone())?;
        state = step.simulate_sparse(state)?;
        let _ = writeln!(out, "  {:>2}. {:<44}{}", i + 1, describe(op), ket(&state, main));
    }
    Ok(state)
}

fn matrix(n: usize, rows: &[[f64; 2]]) -> CMatrix {
    let dim = 1 << n;
    let entries: Vec<C64> = rows.iter().map(|[re, im]| c64(*re, *im)).collect();
    CMatrix::from_row_slice(dim, dim, &entries)
}

fn oracle(label: &str, m: CMatrix) -> Result<Arc<BlackBoxUnitary>> {
    Ok(BlackBoxUnitary::from_matrix(label, m)?)
}

/// Largest deviation of the two printed final states from the predicted ones.
#[derive(Debug, Clone, Copy)]
pub struct DemoCheck {
    pub swap_error: f64,
    pub superposition_error: f64,
    pub omega_error: f64,
}

fn max_gap(got: &SparseState, want: &SparseState) -> Result<f64> {
    Ok((got.inner_product(want)? - c64(1.0, 0.0)).norm().max(got.trace_distance(want)?))
}

/// Prints the swap with U = I, V = X on qubit 0 (n = 2), then the
/// superposition preparation with U = H, V = Z H (n = 1).
pub fn run_demo() -> Result<(String, DemoCheck)> {
    let mut out = String::new();

    // psi = |00>, phi = |10>, y = |01>.
    let u = oracle("U", CMatrix::identity(4, 4))?;
    let mut x0 = CMatrix::zeros(4, 4);
    for (r, c) in [(1, 0), (0, 1), (3, 2), (2, 3)] {
        x0[(r, c)] = c64(1.0, 0.0);
    }
    let v = oracle("V", x0)?;
    let (alpha, beta, gamma) = (0.6, 0.48, 0.64);
    let swap = build_swap_orthogonal(&u, &v)?;
    let total = swap.num_qubits();
    let input = PureState::from_real(&[alpha, beta, gamma, 0.0])?;
    let _ = writeln!(out, "swap of psi = |00> and phi = |10> (U = I, V = X on qubit 0), y = |01>");
    let _ = writeln!(out, "input alpha|psi> + beta|phi> + gamma|y> with alpha = {alpha}, beta = {beta}, gamma = {gamma}");
    let end = trace(&mut out, &swap, SparseState::from_dense(&input, total)?, 2)?;
    let want = SparseState::from_dense(&PureState::from_real(&[beta, alpha, gamma, 0.0])?, total)?;
    let swap_error = max_gap(&end, &want)?;
    let _ = writeln!(out, "final = (alpha|phi> + beta|psi> + gamma|y>)|0>, max deviation {swap_error:.3e}");
    let _ = writeln!(out);

    // psi = |+>, phi = |->.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = oracle("U", matrix(1, &[[h, 0.0], [h, 0.0], [h, 0.0], [-h, 0.0]]))?;
    let v = oracle("V", matrix(1, &[[h, 0.0], [h, 0.0], [-h, 0.0], [h, 0.0]]))?;
    let (a, b) = (c64(0.6, 0.0), c64(0.0, 0.8));
    let prep = build_superposition_prep(&u, &v, a, b)?;
    let total = prep.num_qubits();
    let _ = writeln!(out, "superposition of psi = |+> (U = H) and phi = |-> (V = Z H), alpha = 0.6, beta = 0.8i");
    let end = trace(&mut out, &prep, SparseState::zero(total)?, 1)?;
    let plus = [c64(h, 0.0), c64(h, 0.0)];
    let minus = [c64(h, 0.0), c64(-h, 0.0)];
    let combine = |x: C64, y: C64| -> Result<SparseState> {
        let amps = vec![x * plus[0] + y * minus[0], x * plus[1] + y * minus[1]];
        Ok(SparseState::from_dense(&PureState::from_amplitudes(amps)?, total)?)
    };
    let superposition_error = max_gap(&end, &combine(a, b)?)?;
    let _ = writeln!(out, "final = (alpha|psi> + beta|phi>)|0>, max deviation {superposition_error:.3e}");

    // omega = U^-1 V|0> = |1>; the preparation sends it to conj(beta) psi - conj(alpha) phi.
    let _ = writeln!(out, "same circuit on omega = U^-1 V|0> = |1>");
    let omega = SparseState::from_dense(&PureState::basis(1, 1)?, total)?;
    let end = trace(&mut out, &prep, omega, 1)?;
    let omega_error = max_gap(&end, &combine(b.conj(), -a.conj())?)?;
    let _ = writeln!(out, "final = (conj(beta)|psi> - conj(alpha)|phi>)|0>, max deviation {omega_error:.3e}");

    Ok((out, DemoCheck { swap_error, superposition_error, omega_error }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_final_lines_match_derivations() {
        let (text, check) = run_demo().unwrap();
        assert!(check.swap_error < 1e-12, "{check:?}");
        assert!(check.superposition_error < 1e-12, "{check:?}");
        assert!(check.omega_error < 1e-12, "{check:?}");
        assert!(text.contains("final = (alpha|phi> + beta|psi> + gamma|y>)|0>"));
    }

    #[test]
    fn ket_lists_terms_in_basis_order() {
        let s = SparseState::from_dense(&PureState::from_real(&[0.6, 0.0, 0.8, 0.0]).unwrap(), 3).unwrap();
        assert_eq!(ket(&s, 2), " +0.600000|00>|0> +0.800000|01>|0>");
    }
}
