//! Sparse pure states for wide, mostly-empty registers.
//!
//! The general merge allocates one ancilla per chain step, so circuits reach
//! hundreds of wires while only a few thousand basis states are ever
//! populated. Amplitudes live in an ordered map so every reduction runs in the
//! same order and results are reproducible bit for bit.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{argument, Error, Result};
use crate::linalg::{self, C64, ONE};
use crate::state::{Control, PureState, QubitLayout};
use crate::tolerance::{MAX_DENSE_QUBITS, PRUNE};

const KEY_WORDS: usize = 8;

/// Widest register the sparse simulator can address.
pub const MAX_SPARSE_QUBITS: usize = KEY_WORDS * 64;

/// A computational-basis label with one bit per wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BasisKey([u64; KEY_WORDS]);

impl BasisKey {
    pub const ZERO: BasisKey = BasisKey([0; KEY_WORDS]);

    pub fn from_index(index: usize) -> Self {
        let mut k = Self::ZERO;
        k.0[0] = index as u64;
        k
    }

    /// The low bits as an index; `None` if any bit at or above `bits` is set.
    pub fn to_index(&self, bits: usize) -> Option<usize> {
        debug_assert!(bits < 64);
        if self.0[1..].iter().any(|&w| w != 0) || self.0[0] >> bits != 0 {
            return None;
        }
        Some(self.0[0] as usize)
    }

    #[inline]
    pub fn bit(&self, wire: usize) -> bool {
        (self.0[wire / 64] >> (wire % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, wire: usize, value: bool) {
        let (w, b) = (wire / 64, wire % 64);
        if value {
            self.0[w] |= 1 << b;
        } else {
            self.0[w] &= !(1 << b);
        }
    }

    #[inline]
    pub fn flipped(mut self, wire: usize) -> Self {
        self.0[wire / 64] ^= 1 << (wire % 64);
        self
    }

    pub fn mask(wires: &[usize]) -> Self {
        let mut m = Self::ZERO;
        for &w in wires {
            m.set(w, true);
        }
        m
    }

    #[inline]
    pub fn and(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0) {
            *a &= b;
        }
        out
    }

    #[inline]
    pub fn and_not(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0) {
            *a &= !b;
        }
        out
    }

    #[inline]
    pub fn or(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0) {
            *a |= b;
        }
        out
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Reads `wires` into a packed local label (wire `wires[i]` becomes bit i).
    pub fn gather(&self, wires: &[usize]) -> BasisKey {
        let mut out = Self::ZERO;
        for (i, &w) in wires.iter().enumerate() {
            if self.bit(w) {
                out.set(i, true);
            }
        }
        out
    }

    /// Inverse of [`gather`](Self::gather): places local bit i on wire `wires[i]`.
    pub fn scatter(&self, wires: &[usize]) -> BasisKey {
        let mut out = Self::ZERO;
        for (i, &w) in wires.iter().enumerate() {
            if self.bit(i) {
                out.set(w, true);
            }
        }
        out
    }

    pub fn gather_small(&self, wires: &[usize]) -> usize {
        wires.iter().enumerate().fold(0, |acc, (i, &w)| acc | ((self.bit(w) as usize) << i))
    }

    pub fn scatter_small(local: usize, wires: &[usize]) -> BasisKey {
        let mut out = Self::ZERO;
        for (i, &w) in wires.iter().enumerate() {
            if (local >> i) & 1 == 1 {
                out.set(w, true);
            }
        }
        out
    }
}

/// Precomputed control test: `key & mask == value`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ControlMask {
    mask: BasisKey,
    value: BasisKey,
}

impl ControlMask {
    pub(crate) fn new(controls: &[Control]) -> Self {
        let mut mask = BasisKey::ZERO;
        let mut value = BasisKey::ZERO;
        for c in controls {
            mask.set(c.wire, true);
            value.set(c.wire, c.value);
        }
        Self { mask, value }
    }

    #[inline]
    pub(crate) fn fires(&self, key: &BasisKey) -> bool {
        key.and(&self.mask) == self.value
    }
}

/// A pure state stored as a map from basis label to amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    num_qubits: usize,
    amplitudes: BTreeMap<BasisKey, C64>,
}

impl SparseState {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, BasisKey::ZERO)
    }

    pub fn basis(num_qubits: usize, key: BasisKey) -> Result<Self> {
        check_sparse_size(num_qubits)?;
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(key, ONE);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Embeds a dense state on the low wires of a `num_qubits` register.
    pub fn from_dense(state: &PureState, num_qubits: usize) -> Result<Self> {
        check_sparse_size(num_qubits)?;
        if state.num_qubits() > num_qubits {
            return Err(argument!("dense state has {} qubits, register only {num_qubits}", state.num_qubits()));
        }
        let amplitudes = state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, a)| (BasisKey::from_index(i), *a))
            .collect();
        Ok(Self { num_qubits, amplitudes })
    }

    /// Dense copy; fails if the register is too wide.
    pub fn to_dense(&self) -> Result<PureState> {
        if self.num_qubits > MAX_DENSE_QUBITS {
            return Err(Error::Resource(alloc::format!("{} qubits is too wide for a dense copy", self.num_qubits)));
        }
        let mut amps = alloc::vec![linalg::ZERO; 1 << self.num_qubits];
        for (k, a) in &self.amplitudes {
            amps[k.to_index(self.num_qubits).expect("key within register")] = *a;
        }
        Ok(PureState::from_raw(self.num_qubits, amps))
    }

    /// Sum of `coeff * state` over `terms`, not renormalized.
    pub fn linear_combination(terms: &[(C64, &SparseState)]) -> Result<Self> {
        let num_qubits = terms.first().map_or(0, |(_, s)| s.num_qubits);
        let mut amplitudes: BTreeMap<BasisKey, C64> = BTreeMap::new();
        for (coeff, state) in terms {
            if state.num_qubits != num_qubits {
                return Err(argument!("states on {} and {} qubits cannot be combined", num_qubits, state.num_qubits));
            }
            for (k, a) in &state.amplitudes {
                *amplitudes.entry(*k).or_insert(linalg::ZERO) += coeff * a;
            }
        }
        Ok(Self { num_qubits, amplitudes })
    }

    pub(crate) fn from_map(num_qubits: usize, amplitudes: BTreeMap<BasisKey, C64>) -> Self {
        Self { num_qubits, amplitudes }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of stored (non-pruned) amplitudes.
    pub fn support(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, key: &BasisKey) -> C64 {
        self.amplitudes.get(key).copied().unwrap_or(linalg::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisKey, &C64)> {
        self.amplitudes.iter()
    }

    pub(crate) fn map(&self) -> &BTreeMap<BasisKey, C64> {
        &self.amplitudes
    }

    pub(crate) fn map_mut(&mut self) -> &mut BTreeMap<BasisKey, C64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amplitudes.values().map(|a| a.norm_sqr()).sum())
    }

    pub fn inner_product(&self, other: &SparseState) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(argument!("state sizes differ: {} vs {} qubits", self.num_qubits, other.num_qubits));
        }
        Ok(self
            .amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum())
    }

    /// sqrt(1 - |<a|b>|^2) for normalized inputs.
    pub fn trace_distance(&self, other: &SparseState) -> Result<f64> {
        let overlap = self.inner_product(other)?;
        Ok(linalg::pure_trace_distance(overlap, || {
            let phase = overlap.conj() / overlap.norm();
            let mut d = 0.0;
            for (k, a) in &self.amplitudes {
                d += (a - phase * other.amplitude(k)).norm_sqr();
            }
            for (k, b) in &other.amplitudes {
                if !self.amplitudes.contains_key(k) {
                    d += b.norm_sqr();
                }
            }
            d
        }))
    }

    /// L2 norm of the amplitude on labels with any ancilla wire set.
    pub fn ancilla_leakage(&self, layout: &QubitLayout) -> Result<f64> {
        layout.validate(self.num_qubits)?;
        let ancillas: Vec<usize> = layout.ancillas.clone().collect();
        let mask = BasisKey::mask(&ancillas);
        let mass = self
            .amplitudes
            .iter()
            .filter(|(k, _)| !k.and(&mask).is_zero())
            .fold(0.0, |acc, (_, a)| acc + a.norm_sqr());
        Ok(libm::sqrt(mass).min(1.0))
    }

    /// Amplitudes of the `main` wires on the branch where every other wire is 0.
    pub fn main_block(&self, main: usize) -> Vec<C64> {
        let mut out = alloc::vec![linalg::ZERO; 1 << main];
        for (k, a) in &self.amplitudes {
            if let Some(i) = k.to_index(main) {
                out[i] = *a;
            }
        }
        out
    }

    pub(crate) fn prune(&mut self) {
        self.amplitudes.retain(|_, a| a.norm() > PRUNE);
    }
}

pub(crate) fn check_sparse_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(argument!("a state needs at least one qubit"));
    }
    if num_qubits > MAX_SPARSE_QUBITS {
        return Err(Error::Resource(alloc::format!(
            "{num_qubits} qubits exceeds the sparse simulator limit of {MAX_SPARSE_QUBITS}"
        )));
    }
    Ok(())
}
