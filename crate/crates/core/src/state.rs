//! Dense pure states.
//!
//! Qubit 0 is the least significant bit of the amplitude index. Ket labels in
//! docs and tests list qubit 0 first, so `|10>` on two qubits is index 1.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{argument, Error, Result};
use crate::linalg::{self, c64, Matrix2, C64, ONE, ZERO};
use crate::tolerance::{ATOL, MAX_DENSE_QUBITS};

/// A control wire and the bit value it fires on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Control {
    pub wire: usize,
    pub value: bool,
}

impl Control {
    pub const fn on(wire: usize) -> Self {
        Self { wire, value: true }
    }

    pub const fn off(wire: usize) -> Self {
        Self { wire, value: false }
    }
}

/// Partition of a circuit's wires into data, ancilla and control ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitLayout {
    pub main: Range<usize>,
    pub ancillas: Range<usize>,
    pub controls: Range<usize>,
}

impl QubitLayout {
    /// `main` data wires followed by `ancillas` work wires.
    pub fn new(main: usize, ancillas: usize) -> Self {
        Self {
            main: 0..main,
            ancillas: main..main + ancillas,
            controls: main + ancillas..main + ancillas,
        }
    }

    pub fn with_controls(main: usize, ancillas: usize, controls: usize) -> Self {
        let a = main + ancillas;
        Self { main: 0..main, ancillas: main..a, controls: a..a + controls }
    }

    pub fn total(&self) -> usize {
        self.main.len() + self.ancillas.len() + self.controls.len()
    }

    pub fn num_main(&self) -> usize {
        self.main.len()
    }

    pub fn num_ancillas(&self) -> usize {
        self.ancillas.len()
    }

    /// Ranges must be disjoint and tile `0..num_qubits`.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let mut ranges = [self.main.clone(), self.ancillas.clone(), self.controls.clone()];
        ranges.sort_by_key(|r| (r.start, r.end));
        let mut next = 0;
        for r in ranges.iter().filter(|r| !r.is_empty()) {
            if r.start != next || r.end < r.start {
                return Err(argument!("layout ranges {:?} are not disjoint and contiguous", self));
            }
            next = r.end;
        }
        if next != num_qubits {
            return Err(argument!("layout covers {next} wires but the circuit has {num_qubits}"));
        }
        Ok(())
    }

    pub(crate) fn ancilla_mask(&self) -> usize {
        self.ancillas.clone().fold(0usize, |m, w| m | (1 << w))
    }
}

/// Normalized amplitudes over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// |0...0>
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_dense_size(num_qubits)?;
        if index >= 1 << num_qubits {
            return Err(argument!("basis index {index} out of range for {num_qubits} qubits"));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps amplitudes that must already have unit norm (within [`ATOL`]).
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = linalg::is_power_of_two_len(amplitudes.len())
            .ok_or_else(|| argument!("amplitude count {} is not a power of two", amplitudes.len()))?;
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() > ATOL {
            return Err(argument!("amplitudes have norm {n}, expected 1"));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&amplitudes);
        if n.is_nan() || n <= 1e-300 {
            return Err(argument!("cannot normalize a zero vector"));
        }
        for a in amplitudes.iter_mut() {
            *a /= n;
        }
        Self::from_amplitudes(amplitudes)
    }

    /// Real amplitudes, normalized.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&v| c64(v, 0.0)).collect())
    }

    /// Gaussian amplitudes, normalized; with `real` set the imaginary parts are zero.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, real: bool, rng: &mut R) -> Result<Self> {
        check_dense_size(num_qubits)?;
        let amps = (0..1usize << num_qubits)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
                c64(re, im)
            })
            .collect();
        Self::normalized(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    /// Builds without the norm check; callers guarantee structure.
    pub(crate) fn from_raw(num_qubits: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        Self { num_qubits, amplitudes }
    }

    /// `self` on the low qubits, `high` on the following ones.
    pub fn tensor(&self, high: &PureState) -> Result<PureState> {
        check_dense_size(self.num_qubits + high.num_qubits)?;
        let mut amps = Vec::with_capacity(self.amplitudes.len() * high.amplitudes.len());
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amps.push(l * h);
            }
        }
        Ok(Self { num_qubits: self.num_qubits + high.num_qubits, amplitudes: amps })
    }

    /// Appends `extra` qubits in |0>.
    pub fn extend_zeros(&self, extra: usize) -> Result<PureState> {
        self.tensor(&PureState::zero(extra)?)
    }

    /// Amplitudes of the low `num_main` qubits given all higher qubits are 0
    /// (not renormalized).
    pub fn project_low(&self, num_main: usize) -> Vec<C64> {
        self.amplitudes[..1 << num_main].to_vec()
    }

    /// Applies a single-qubit gate to `target`.
    pub fn apply_single_qubit(mut self, gate: &Matrix2, target: usize) -> Result<Self> {
        gate.check_unitary(ATOL)?;
        self.check_wire(target)?;
        self.gate_in_place(gate, target, &[]);
        Ok(self)
    }

    /// Applies `gate` to `target` on the subspace where `control` equals `control_value`.
    pub fn apply_controlled(mut self, gate: &Matrix2, target: usize, control: usize, control_value: bool) -> Result<Self> {
        gate.check_unitary(ATOL)?;
        self.check_wire(target)?;
        self.check_wire(control)?;
        if control == target {
            return Err(argument!("control wire {control} overlaps the target"));
        }
        self.gate_in_place(gate, target, &[Control { wire: control, value: control_value }]);
        Ok(self)
    }

    /// <self|other>
    pub fn inner_product(&self, other: &PureState) -> Result<C64> {
        self.check_same_size(other)?;
        Ok(linalg::dot(&self.amplitudes, &other.amplitudes))
    }

    /// sqrt(1 - |<a|b>|^2), clamped to [0, 1].
    pub fn trace_distance(&self, other: &PureState) -> Result<f64> {
        let overlap = self.inner_product(other)?;
        Ok(linalg::pure_trace_distance(overlap, || {
            let phase = overlap.conj() / overlap.norm();
            self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - phase * b).norm_sqr()).sum()
        }))
    }

    /// L2 norm of the amplitude on configurations where some ancilla is 1.
    pub fn ancilla_leakage(&self, layout: &QubitLayout) -> Result<f64> {
        layout.validate(self.num_qubits)?;
        let mask = layout.ancilla_mask();
        let mass = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .fold(0.0, |acc, (_, a)| acc + a.norm_sqr());
        Ok(libm::sqrt(mass).min(1.0))
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            return Err(argument!("qubit index {wire} out of range for {} qubits", self.num_qubits));
        }
        Ok(())
    }

    fn check_same_size(&self, other: &PureState) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(argument!("state sizes differ: {} vs {} qubits", self.num_qubits, other.num_qubits));
        }
        Ok(())
    }

    pub(crate) fn gate_in_place(&mut self, gate: &Matrix2, target: usize, controls: &[Control]) {
        let (cmask, cval) = control_masks(controls);
        let bit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 || i & cmask != cval {
                continue;
            }
            let j = i | bit;
            let (a0, a1) = gate.apply(self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = a0;
            self.amplitudes[j] = a1;
        }
    }
}

pub(crate) fn control_masks(controls: &[Control]) -> (usize, usize) {
    controls.iter().fold((0, 0), |(m, v), c| (m | (1 << c.wire), v | ((c.value as usize) << c.wire)))
}

pub(crate) fn check_dense_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(argument!("a state needs at least one qubit"));
    }
    if num_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Resource(alloc::format!(
            "{num_qubits} qubits exceeds the dense simulator limit of {MAX_DENSE_QUBITS}"
        )));
    }
    Ok(())
}
