//! Black-box unitaries reachable only through the four access modes.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign};
use core::sync::atomic::{AtomicU64, Ordering};

use crate::circuit::{Circuit, CircuitOp, Simulator};
use crate::error::{argument, contract, Error, Result};
use crate::linalg::{is_power_of_two_len, unitarity_deviation, CMatrix};
use crate::register::Register;
use crate::state::{Control, PureState, QubitLayout};
use crate::tolerance::{MAX_MATRIX_QUBITS, ORACLE_ATOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessMode {
    Apply,
    Adjoint,
    ControlledApply,
    ControlledAdjoint,
}

impl AccessMode {
    pub const ALL: [AccessMode; 4] = [Self::Apply, Self::Adjoint, Self::ControlledApply, Self::ControlledAdjoint];

    pub const fn new(adjoint: bool, controlled: bool) -> Self {
        match (adjoint, controlled) {
            (false, false) => Self::Apply,
            (true, false) => Self::Adjoint,
            (false, true) => Self::ControlledApply,
            (true, true) => Self::ControlledAdjoint,
        }
    }

    pub const fn is_adjoint(self) -> bool {
        matches!(self, Self::Adjoint | Self::ControlledAdjoint)
    }

    pub const fn is_controlled(self) -> bool {
        matches!(self, Self::ControlledApply | Self::ControlledAdjoint)
    }

    pub const fn name(self) -> &'static str {
        match self {
            Self::Apply => "apply",
            Self::Adjoint => "adjoint",
            Self::ControlledApply => "controlled_apply",
            Self::ControlledAdjoint => "controlled_adjoint",
        }
    }

    const fn index(self) -> usize {
        self as usize
    }
}

/// Invocation totals per access mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub apply: u64,
    pub adjoint: u64,
    pub controlled_apply: u64,
    pub controlled_adjoint: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.apply + self.adjoint + self.controlled_apply + self.controlled_adjoint
    }

    pub fn get(&self, mode: AccessMode) -> u64 {
        match mode {
            AccessMode::Apply => self.apply,
            AccessMode::Adjoint => self.adjoint,
            AccessMode::ControlledApply => self.controlled_apply,
            AccessMode::ControlledAdjoint => self.controlled_adjoint,
        }
    }

    pub fn add_mode(&mut self, mode: AccessMode, count: u64) {
        match mode {
            AccessMode::Apply => self.apply += count,
            AccessMode::Adjoint => self.adjoint += count,
            AccessMode::ControlledApply => self.controlled_apply += count,
            AccessMode::ControlledAdjoint => self.controlled_adjoint += count,
        }
    }

    /// Counts of the reversed circuit: apply and adjoint swap roles.
    pub fn inverted(&self) -> Self {
        Self {
            apply: self.adjoint,
            adjoint: self.apply,
            controlled_apply: self.controlled_adjoint,
            controlled_adjoint: self.controlled_apply,
        }
    }

    /// Componentwise difference, saturating at zero.
    pub fn since(&self, earlier: &QueryCounts) -> Self {
        Self {
            apply: self.apply.saturating_sub(earlier.apply),
            adjoint: self.adjoint.saturating_sub(earlier.adjoint),
            controlled_apply: self.controlled_apply.saturating_sub(earlier.controlled_apply),
            controlled_adjoint: self.controlled_adjoint.saturating_sub(earlier.controlled_adjoint),
        }
    }
}

impl Add for QueryCounts {
    type Output = QueryCounts;

    fn add(mut self, rhs: QueryCounts) -> QueryCounts {
        self += rhs;
        self
    }
}

impl AddAssign for QueryCounts {
    fn add_assign(&mut self, rhs: QueryCounts) {
        for mode in AccessMode::ALL {
            self.add_mode(mode, rhs.get(mode));
        }
    }
}

/// How an oracle is realized inside the simulator.
#[derive(Debug)]
pub enum Realization {
    /// A garbage-free unitary on the n data wires.
    Matrix { matrix: CMatrix, adjoint: CMatrix },
    /// A gate list on n data wires followed by `ancillas` internal wires.
    /// Only the |0...0> input is promised to return the ancillas clean.
    Circuit { ancillas: usize, circuit: Circuit },
}

/// An n-qubit unitary seen only through apply, adjoint, controlled apply
/// and controlled adjoint. Every invocation is counted.
pub struct BlackBoxUnitary {
    label: String,
    num_qubits: usize,
    realization: Realization,
    counters: [AtomicU64; 4],
}

impl fmt::Debug for BlackBoxUnitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxUnitary")
            .field("label", &self.label)
            .field("num_qubits", &self.num_qubits)
            .field("ancillas", &self.num_ancillas())
            .field("queries", &self.query_counts())
            .finish()
    }
}

impl BlackBoxUnitary {
    pub fn from_matrix(label: impl Into<String>, matrix: CMatrix) -> Result<Arc<Self>> {
        if !matrix.is_square() {
            return Err(argument!("oracle matrix is {}x{}, expected square", matrix.nrows(), matrix.ncols()));
        }
        let n = is_power_of_two_len(matrix.nrows())
            .filter(|&n| n >= 1)
            .ok_or_else(|| argument!("oracle matrix dimension {} is not 2^n with n >= 1", matrix.nrows()))?;
        if n > MAX_MATRIX_QUBITS {
            return Err(Error::Resource(alloc::format!("{n}-qubit oracle matrix exceeds the {MAX_MATRIX_QUBITS}-qubit limit")));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation.is_nan() || deviation > ORACLE_ATOL {
            return Err(Error::NotUnitary { deviation });
        }
        let adjoint = matrix.adjoint();
        Ok(Arc::new(Self::new(label.into(), n, Realization::Matrix { matrix, adjoint })))
    }

    /// Wraps a gate list on `num_qubits` data wires plus `circuit.num_qubits() - num_qubits`
    /// internal ancillas. Oracle calls and state controls are not allowed inside.
    pub fn from_circuit(label: impl Into<String>, num_qubits: usize, circuit: Circuit) -> Result<Arc<Self>> {
        if num_qubits == 0 || num_qubits > circuit.num_qubits() {
            return Err(argument!("oracle needs 1..={} data qubits, got {num_qubits}", circuit.num_qubits()));
        }
        if let Some(op) = circuit.ops().iter().find(|op| matches!(op, CircuitOp::OracleCall { .. } | CircuitOp::StateControl { .. })) {
            return Err(argument!("oracle circuits may only contain elementary gates, found {}", op.kind()));
        }
        let total = circuit.num_qubits();
        if total <= MAX_MATRIX_QUBITS {
            let mut columns = Vec::with_capacity(1 << total);
            let mut sim = Simulator::new();
            for index in 0..1usize << total {
                let mut state = PureState::basis(total, index)?;
                sim.run(&circuit, &mut state)?;
                columns.push(state.into_amplitudes());
            }
            let deviation = unitarity_deviation(&crate::linalg::matrix_from_columns(&columns)?);
            if deviation.is_nan() || deviation > ORACLE_ATOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        let ancillas = total - num_qubits;
        Ok(Arc::new(Self::new(label.into(), num_qubits, Realization::Circuit { ancillas, circuit })))
    }

    fn new(label: String, num_qubits: usize, realization: Realization) -> Self {
        Self { label, num_qubits, realization, counters: Default::default() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_ancillas(&self) -> usize {
        match &self.realization {
            Realization::Matrix { .. } => 0,
            Realization::Circuit { ancillas, .. } => *ancillas,
        }
    }

    /// Data wires plus internal ancillas: the register an invocation acts on.
    pub fn total_wires(&self) -> usize {
        self.num_qubits + self.num_ancillas()
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    /// Applies the oracle in `mode` to `register` (data wires then internal
    /// ancillas). `control` must be given exactly for the controlled modes.
    pub fn invoke(&self, mode: AccessMode, mut state: PureState, register: &[usize], control: Option<usize>) -> Result<PureState> {
        if register.len() != self.total_wires() {
            return Err(argument!("oracle {} acts on {} wires, register has {}", self.label, self.total_wires(), register.len()));
        }
        let controls: Vec<Control> = match (mode.is_controlled(), control) {
            (true, Some(wire)) => alloc::vec![Control::on(wire)],
            (false, None) => Vec::new(),
            (true, None) => return Err(argument!("{} needs a control wire", mode.name())),
            (false, Some(_)) => return Err(argument!("{} takes no control wire", mode.name())),
        };
        let n = state.num_qubits();
        let mut seen = 0u128;
        for &w in register.iter().chain(controls.iter().map(|c| &c.wire)) {
            if w >= n || w >= 128 {
                return Err(argument!("wire {w} out of range for a {n}-qubit state"));
            }
            if seen >> w & 1 == 1 {
                return Err(argument!("wire {w} appears twice"));
            }
            seen |= 1 << w;
        }
        self.record_mode(mode, 1);
        self.apply_to(&mut Simulator::new(), &mut state, register, mode.is_adjoint(), &controls)?;
        Ok(state)
    }

    /// U|0^n> with the internal ancillas checked clean. Counts one apply.
    pub fn prepared_state(&self) -> Result<PureState> {
        let total = self.total_wires();
        let register: Vec<usize> = (0..total).collect();
        let out = self.invoke(AccessMode::Apply, PureState::zero(total)?, &register, None)?;
        let leakage = out.ancilla_leakage(&QubitLayout::new(self.num_qubits, self.num_ancillas()))?;
        if leakage > ORACLE_ATOL {
            return Err(contract!("oracle {} leaves its ancillas dirty on |0>: leakage {leakage:.3e}", self.label));
        }
        PureState::normalized(out.project_low(self.num_qubits))
    }

    pub fn query_counts(&self) -> QueryCounts {
        let mut out = QueryCounts::default();
        for mode in AccessMode::ALL {
            out.add_mode(mode, self.counters[mode.index()].load(Ordering::Relaxed));
        }
        out
    }

    pub fn reset_counts(&self) {
        for c in &self.counters {
            c.store(0, Ordering::Relaxed);
        }
    }

    pub(crate) fn record_mode(&self, mode: AccessMode, count: u64) {
        self.counters[mode.index()].fetch_add(count, Ordering::Relaxed);
    }

    pub(crate) fn record(&self, counts: &QueryCounts) {
        for mode in AccessMode::ALL {
            let k = counts.get(mode);
            if k > 0 {
                self.record_mode(mode, k);
            }
        }
    }

    /// Applies the realization without touching the counters.
    pub(crate) fn apply_to<R: Register>(&self, sim: &mut Simulator, reg: &mut R, wires: &[usize], adjoint: bool, controls: &[Control]) -> Result<()> {
        match &self.realization {
            Realization::Matrix { matrix, adjoint: dagger } => {
                reg.apply_matrix(if adjoint { dagger } else { matrix }, wires, controls);
                Ok(())
            }
            Realization::Circuit { circuit, .. } => sim.run_mapped(circuit, reg, wires, adjoint, controls),
        }
    }
}
