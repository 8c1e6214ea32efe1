//! Reference unitaries, circuit matrices and garbage sweeps.
//!
//! This is the only place that looks at full matrices of circuits; the
//! constructions themselves see oracles through their access modes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{argument, Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::sparse::{BasisKey, SparseState};
use crate::state::{check_dense_size, PureState, QubitLayout};
use crate::tolerance::{MAX_MATRIX_QUBITS, ORTHOGONALITY_ATOL};

/// A unitary pinned on a few basis inputs and completed deterministically.
#[derive(Debug, Clone)]
pub struct IdealTarget {
    pub n: usize,
    /// (basis input index, required output)
    pub pairs: Vec<(usize, PureState)>,
    pub completion: CMatrix,
}

/// Completes the pinned columns to a unitary. Free columns are filled in
/// increasing index order with Gram-Schmidt over e_0, e_1, ...
pub fn complete_unitary(n: usize, pairs: &[(usize, Vec<C64>)]) -> Result<CMatrix> {
    let dim = 1usize << n;
    let mut columns: Vec<Option<Vec<C64>>> = vec![None; dim];
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for (index, column) in pairs {
        if *index >= dim || column.len() != dim {
            return Err(argument!("pinned column {index} does not fit a {n}-qubit unitary"));
        }
        if columns[*index].is_some() {
            return Err(argument!("column {index} pinned twice"));
        }
        for b in &basis {
            let overlap = linalg::dot(b, column).norm();
            if overlap > ORTHOGONALITY_ATOL {
                return Err(argument!("pinned outputs overlap by {overlap:.3e}"));
            }
        }
        basis.push(column.clone());
        columns[*index] = Some(column.clone());
    }
    let mut candidate = 0;
    for slot in columns.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut e = vec![ZERO; dim];
            e[candidate] = linalg::c64(1.0, 0.0);
            candidate += 1;
            if let Some(v) = linalg::orthonormalize_against(e, &basis, 1e-6) {
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    let columns: Vec<Vec<C64>> = columns.into_iter().map(|c| c.expect("every column filled")).collect();
    linalg::matrix_from_columns(&columns)
}

/// Reference merge |0^n> -> psi, |10^(n-1)> -> phi.
pub fn build_ideal_merge(psi: &PureState, phi: &PureState) -> Result<IdealTarget> {
    let overlap = psi.inner_product(phi)?.norm();
    if overlap > ORTHOGONALITY_ATOL {
        return Err(argument!("targets overlap: |<psi|phi>| = {overlap:.3e}"));
    }
    let n = psi.num_qubits();
    let pairs = vec![(0, psi.clone()), (1, phi.clone())];
    let cols: Vec<(usize, Vec<C64>)> = pairs.iter().map(|(i, s)| (*i, s.amplitudes().to_vec())).collect();
    let completion = complete_unitary(n, &cols)?;
    Ok(IdealTarget { n, pairs, completion })
}

/// I - |a><a| - |b><b| + |b><a| + |a><b|: exchanges two orthogonal states
/// and fixes their complement.
pub fn ideal_swap(a: &PureState, b: &PureState) -> Result<CMatrix> {
    let overlap = a.inner_product(b)?.norm();
    if overlap > ORTHOGONALITY_ATOL {
        return Err(argument!("swap needs orthogonal states, overlap {overlap:.3e}"));
    }
    let dim = a.amplitudes().len();
    let (x, y) = (a.amplitudes(), b.amplitudes());
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        let id = if r == c { linalg::c64(1.0, 0.0) } else { ZERO };
        id - x[r] * x[c].conj() - y[r] * y[c].conj() + y[r] * x[c].conj() + x[r] * y[c].conj()
    }))
}

/// Columns of a circuit, optionally restricted to the ancilla-zero block.
#[derive(Debug, Clone)]
pub struct CircuitMatrix {
    pub matrix: CMatrix,
    /// Per column: norm of the output outside the block (empty for the full matrix).
    pub leakage: Vec<f64>,
}

impl CircuitMatrix {
    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }
}

/// Simulates every basis input. With `ancillas_zero` only main-register
/// inputs (all other wires 0) are used and outputs are projected back onto
/// all-other-wires 0, giving a 2^n x 2^n block.
pub fn circuit_to_matrix(circuit: &Circuit, ancillas_zero: bool) -> Result<CircuitMatrix> {
    let total = circuit.num_qubits();
    if total > MAX_MATRIX_QUBITS {
        return Err(Error::Resource(alloc::format!("{total} qubits exceeds the {MAX_MATRIX_QUBITS}-qubit matrix limit")));
    }
    check_dense_size(total)?;
    let layout = circuit.layout();
    if layout.main.start != 0 {
        return Err(argument!("main register must start at wire 0"));
    }
    let inputs = if ancillas_zero { 1usize << layout.main.len() } else { 1usize << total };
    let mut columns = Vec::with_capacity(inputs);
    let mut leakage = Vec::new();
    for index in 0..inputs {
        let out = circuit.simulate(&PureState::basis(total, index)?)?;
        let amps = out.into_amplitudes();
        if ancillas_zero {
            let tail: f64 = amps[inputs..].iter().map(|a| a.norm_sqr()).sum();
            leakage.push(libm::sqrt(tail));
            columns.push(amps[..inputs].to_vec());
        } else {
            columns.push(amps);
        }
    }
    Ok(CircuitMatrix { matrix: linalg::matrix_from_columns(&columns)?, leakage })
}

/// One random input of a garbage sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub leakage: f64,
    /// Trace distance to the reference output, when a reference was given.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarbageSweep {
    pub seed: u64,
    pub max_leakage: f64,
    pub max_distance: Option<f64>,
    /// Bound on the output error from amplitude truncation (0 when off).
    pub discarded: f64,
    pub records: Vec<TrialRecord>,
}

/// Ancilla leakage of `circuit` on `trials` random main-register inputs
/// (normalized complex Gaussian amplitudes, ancillas 0).
pub fn garbage_sweep(circuit: &Circuit, layout: &QubitLayout, trials: usize, seed: u64) -> Result<GarbageSweep> {
    garbage_sweep_against(circuit, layout, trials, seed, None)
}

/// As [`garbage_sweep`], also recording the trace distance between the
/// output and `reference * input` with ancillas 0.
///
/// Outputs are combined from the 2^n basis-input runs, which is exact by
/// linearity and keeps wide sparse circuits cheap.
pub fn garbage_sweep_against(circuit: &Circuit, layout: &QubitLayout, trials: usize, seed: u64, reference: Option<&CMatrix>) -> Result<GarbageSweep> {
    garbage_sweep_truncated(circuit, layout, trials, seed, reference, 0.0)
}

/// As [`garbage_sweep_against`], simulating with amplitudes at or below
/// `truncation` dropped (see [`crate::Simulator::with_truncation`]).
pub fn garbage_sweep_truncated(
    circuit: &Circuit,
    layout: &QubitLayout,
    trials: usize,
    seed: u64,
    reference: Option<&CMatrix>,
    truncation: f64,
) -> Result<GarbageSweep> {
    if trials == 0 {
        return Err(argument!("a garbage sweep needs at least one trial"));
    }
    layout.validate(circuit.num_qubits())?;
    if layout.main.start != 0 {
        return Err(argument!("main register must start at wire 0"));
    }
    let n = layout.main.len();
    check_dense_size(n)?;
    let dim = 1usize << n;
    if let Some(r) = reference {
        if r.nrows() != dim || r.ncols() != dim {
            return Err(argument!("reference is {}x{}, expected {dim}x{dim}", r.nrows(), r.ncols()));
        }
    }
    let total = circuit.num_qubits();
    let mut discarded = 0.0;
    let mut basis_outputs: Vec<SparseState> = Vec::with_capacity(dim);
    for x in 0..dim {
        let input = SparseState::from_dense(&PureState::basis(n, x)?, total)?;
        let (out, d) = circuit.simulate_truncated(input, truncation)?;
        discarded += d;
        basis_outputs.push(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let input = random_state(n, false, &mut rng)?;
        let mut combined: BTreeMap<BasisKey, C64> = BTreeMap::new();
        for (x, out) in basis_outputs.iter().enumerate() {
            let coeff = input.amplitude(x);
            for (k, a) in out.iter() {
                *combined.entry(*k).or_insert(ZERO) += coeff * a;
            }
        }
        let output = SparseState::from_map(total, combined);
        let leakage = output.ancilla_leakage(layout)?;
        let distance = match reference {
            Some(r) => {
                let expected: Vec<C64> = (0..dim).map(|row| (0..dim).map(|c| r[(row, c)] * input.amplitude(c)).sum()).collect();
                let expected = SparseState::from_dense(&PureState::from_raw(n, expected), total)?;
                Some(output.trace_distance(&expected)?)
            }
            None => None,
        };
        records.push(TrialRecord { trial, leakage, distance });
    }
    let max_leakage = records.iter().map(|r| r.leakage).fold(0.0, f64::max);
    let max_distance = reference.map(|_| records.iter().filter_map(|r| r.distance).fold(0.0, f64::max));
    Ok(GarbageSweep { seed, max_leakage, max_distance, discarded, records })
}

/// Normalized Gaussian amplitudes; real when `real` is set.
pub fn random_state<R: Rng + ?Sized>(n: usize, real: bool, rng: &mut R) -> Result<PureState> {
    PureState::random(n, real, rng)
}

/// A unitary whose first column is `state`, completed with random columns.
pub fn preparation_unitary<R: Rng + ?Sized>(state: &PureState, real: bool, rng: &mut R) -> Result<CMatrix> {
    let n = state.num_qubits();
    let mut columns = vec![state.amplitudes().to_vec()];
    while columns.len() < 1 << n {
        let v = random_state(n, real, rng)?.into_amplitudes();
        if let Some(v) = linalg::orthonormalize_against(v, &columns, 1e-6) {
            columns.push(v);
        }
    }
    linalg::matrix_from_columns(&columns)
}

/// Two random orthogonal states.
pub fn random_orthogonal_pair<R: Rng + ?Sized>(n: usize, real: bool, rng: &mut R) -> Result<(PureState, PureState)> {
    if n == 0 {
        return Err(argument!("need at least one qubit"));
    }
    let a = random_state(n, real, rng)?;
    loop {
        let b = random_state(n, real, rng)?.into_amplitudes();
        if let Some(b) = linalg::orthonormalize_against(b, &[a.amplitudes().to_vec()], 1e-6) {
            return Ok((a, PureState::from_raw(n, b)));
        }
    }
}
