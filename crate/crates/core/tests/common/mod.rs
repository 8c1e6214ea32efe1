#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qmerge_core::verify::preparation_unitary;
use qmerge_core::{BlackBoxUnitary, Circuit, Matrix2, PureState, QubitLayout};
use rand::Rng;

pub type Mat = DMatrix<Complex64>;

pub fn oracle_for<R: Rng>(label: &str, state: &PureState, real: bool, rng: &mut R) -> Arc<BlackBoxUnitary> {
    BlackBoxUnitary::from_matrix(label, preparation_unitary(state, real, rng).unwrap()).unwrap()
}

pub fn oracles_for<R: Rng>(psi: &PureState, phi: &PureState, real: bool, rng: &mut R) -> (Arc<BlackBoxUnitary>, Arc<BlackBoxUnitary>) {
    (oracle_for("U", psi, real, rng), oracle_for("V", phi, real, rng))
}

/// Outer-product construction of the swap of two orthogonal vectors,
/// written out independently of the library.
pub fn swap_reference(a: &[Complex64], b: &[Complex64]) -> Mat {
    let dim = a.len();
    let col = |v: &[Complex64]| Mat::from_column_slice(dim, 1, v);
    let (a, b) = (col(a), col(b));
    Mat::identity(dim, dim) - &a * a.adjoint() - &b * b.adjoint() + &a * b.adjoint() + &b * a.adjoint()
}

/// Runs `circuit` on every main-register basis input and returns the
/// ancilla-zero block together with the largest leaked norm.
pub fn block(circuit: &Circuit) -> (Mat, f64) {
    let n = circuit.layout().main.len();
    let dim = 1usize << n;
    let mut m = Mat::zeros(dim, dim);
    let mut leak: f64 = 0.0;
    for col in 0..dim {
        let out = circuit.apply_to_main(&PureState::basis(n, col).unwrap()).unwrap();
        let mut outside = 0.0;
        for (key, amp) in out.iter() {
            match key.to_index(n) {
                Some(row) => m[(row, col)] = *amp,
                None => outside += amp.norm_sqr(),
            }
        }
        leak = leak.max(outside.sqrt());
    }
    (m, leak)
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pure-state trace distance sqrt(1 - |<a|b>|^2) from raw amplitudes.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (1.0 - ip.norm_sqr()).max(0.0).sqrt()
}

/// Circuit-form oracle on n data wires and m ancillas preparing the real
/// state with amplitudes `target` from |0^n>, but leaving its first
/// ancilla set on every other input.
pub fn dirty_oracle(target: &[f64], n: usize, m: usize) -> Arc<BlackBoxUnitary> {
    assert!(m >= 1 && target.len() == 1 << n);
    let width = n + m;
    let data: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(width, QubitLayout::new(n, m)).unwrap();
    c.zero_control(&data, n, &[]).unwrap();
    c.gate(Matrix2::x(), n, &[]).unwrap();
    for extra in n + 1..width {
        c.gate(Matrix2::x(), extra, &[qmerge_core::Control::on(n)]).unwrap();
    }
    let clean = [qmerge_core::Control::off(n)];
    prepare_real(&mut c, target, n, &clean);
    BlackBoxUnitary::from_circuit("dirty", n, c).unwrap()
}

/// Appends a binary tree of controlled RY gates taking |0^n> to the real
/// state `target` (highest wire decided first).
pub fn prepare_real(c: &mut Circuit, target: &[f64], n: usize, extra: &[qmerge_core::Control]) {
    fn weight(t: &[f64]) -> f64 {
        t.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    fn rec(c: &mut Circuit, t: &[f64], wire: usize, prefix: &mut Vec<qmerge_core::Control>) {
        // t is the block of amplitudes indexed by the wires below and at `wire`.
        let half = t.len() / 2;
        let (lo, hi) = (&t[..half], &t[half..]);
        let (wl, wh) = (weight(lo), weight(hi));
        let mut angle = wh.atan2(wl);
        if half == 1 {
            angle = hi[0].atan2(lo[0]);
        }
        c.gate(Matrix2::ry(angle), wire, prefix).unwrap();
        if half > 1 {
            prefix.push(qmerge_core::Control::off(wire));
            rec(c, lo, wire - 1, prefix);
            prefix.pop();
            prefix.push(qmerge_core::Control::on(wire));
            rec(c, hi, wire - 1, prefix);
            prefix.pop();
        }
    }
    let mut prefix = extra.to_vec();
    rec(c, target, n - 1, &mut prefix);
}
