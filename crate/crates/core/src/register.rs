//! The primitive operations every simulation backend provides.
//!
//! Circuits are executed against this trait so the same op list can run on
//! the dense [`PureState`] (small registers, matrix extraction) or the sparse
//! [`SparseState`] (wide registers in the general merge). Wire validity is the
//! caller's job; circuits check their ops at construction time.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, Matrix2, C64, ZERO};
use crate::sparse::{BasisKey, ControlMask, SparseState};
use crate::state::{control_masks, Control, PureState};
use crate::tolerance::PRUNE;

pub trait Register {
    fn num_qubits(&self) -> usize;

    /// 2x2 `gate` on `target` where all `controls` fire.
    fn apply_gate(&mut self, gate: &Matrix2, target: usize, controls: &[Control]);

    /// 2^r x 2^r `matrix` on `wires` (wire `wires[i]` is bit i of the row index).
    fn apply_matrix(&mut self, matrix: &CMatrix, wires: &[usize], controls: &[Control]);

    /// Flips `target` iff every wire in `register` is 0.
    fn flip_if_zero(&mut self, register: &[usize], target: usize, controls: &[Control]);

    /// Flips every wire in `targets` on the component along `reference`
    /// (a normalized state over `wires`, in local numbering), i.e. applies
    /// `(I - |q><q|) (x) I + |q><q| (x) X...X`.
    fn flip_along(&mut self, reference: &SparseState, wires: &[usize], targets: &[usize], controls: &[Control]);

    /// Drops amplitudes with modulus at most `threshold` and returns the
    /// norm removed. Dense registers keep everything.
    fn truncate(&mut self, threshold: f64) -> f64 {
        let _ = threshold;
        0.0
    }
}

fn dense_mask(wires: &[usize]) -> usize {
    wires.iter().fold(0, |m, &w| m | (1 << w))
}

fn dense_scatter(local: usize, wires: &[usize]) -> usize {
    wires.iter().enumerate().fold(0, |acc, (i, &w)| acc | (((local >> i) & 1) << w))
}

impl Register for PureState {
    fn num_qubits(&self) -> usize {
        PureState::num_qubits(self)
    }

    fn apply_gate(&mut self, gate: &Matrix2, target: usize, controls: &[Control]) {
        self.gate_in_place(gate, target, controls);
    }

    fn apply_matrix(&mut self, matrix: &CMatrix, wires: &[usize], controls: &[Control]) {
        let dim = 1usize << wires.len();
        debug_assert_eq!(matrix.nrows(), dim);
        let wmask = dense_mask(wires);
        let (cmask, cval) = control_masks(controls);
        let offsets: Vec<usize> = (0..dim).map(|j| dense_scatter(j, wires)).collect();
        let amps = self.amplitudes_mut();
        let mut local = vec![ZERO; dim];
        for base in 0..amps.len() {
            if base & wmask != 0 || base & cmask != cval {
                continue;
            }
            for (j, off) in offsets.iter().enumerate() {
                local[j] = amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, v) in local.iter().enumerate() {
                    acc += matrix[(r, c)] * v;
                }
                amps[base | off] = acc;
            }
        }
    }

    fn flip_if_zero(&mut self, register: &[usize], target: usize, controls: &[Control]) {
        let rmask = dense_mask(register);
        let tbit = 1usize << target;
        let (cmask, cval) = control_masks(controls);
        let amps = self.amplitudes_mut();
        for i in 0..amps.len() {
            if i & rmask == 0 && i & tbit == 0 && i & cmask == cval {
                amps.swap(i, i | tbit);
            }
        }
    }

    fn flip_along(&mut self, reference: &SparseState, wires: &[usize], targets: &[usize], controls: &[Control]) {
        let q: Vec<(usize, C64)> = reference
            .iter()
            .map(|(k, a)| (dense_scatter(k.to_index(wires.len()).expect("reference fits its wires"), wires), *a))
            .collect();
        let block = dense_mask(wires) | dense_mask(targets);
        let patterns = 1usize << targets.len();
        let full = patterns - 1;
        let toff: Vec<usize> = (0..patterns).map(|t| dense_scatter(t, targets)).collect();
        let (cmask, cval) = control_masks(controls);
        let amps = self.amplitudes_mut();
        let mut overlaps = vec![ZERO; patterns];
        for base in 0..amps.len() {
            if base & block != 0 || base & cmask != cval {
                continue;
            }
            for (t, c) in overlaps.iter_mut().enumerate() {
                *c = q.iter().map(|(off, qv)| qv.conj() * amps[base | off | toff[t]]).sum();
            }
            for t in 0..patterns {
                let d = overlaps[t ^ full] - overlaps[t];
                for (off, qv) in &q {
                    amps[base | off | toff[t]] += qv * d;
                }
            }
        }
    }
}

impl SparseState {
    fn insert_pruned(map: &mut BTreeMap<BasisKey, C64>, key: BasisKey, amp: C64) {
        if amp.norm() > PRUNE {
            map.insert(key, amp);
        }
    }
}

impl Register for SparseState {
    fn num_qubits(&self) -> usize {
        SparseState::num_qubits(self)
    }

    fn apply_gate(&mut self, gate: &Matrix2, target: usize, controls: &[Control]) {
        let fire = ControlMask::new(controls);
        let old = core::mem::take(self.map_mut());
        let mut out = BTreeMap::new();
        for (key, amp) in &old {
            if !fire.fires(key) {
                out.insert(*key, *amp);
                continue;
            }
            let (k0, a0, a1) = if key.bit(target) {
                let k0 = key.flipped(target);
                if old.contains_key(&k0) {
                    continue;
                }
                (k0, ZERO, *amp)
            } else {
                (*key, *amp, old.get(&key.flipped(target)).copied().unwrap_or(ZERO))
            };
            let (b0, b1) = gate.apply(a0, a1);
            Self::insert_pruned(&mut out, k0, b0);
            Self::insert_pruned(&mut out, k0.flipped(target), b1);
        }
        *self.map_mut() = out;
    }

    fn apply_matrix(&mut self, matrix: &CMatrix, wires: &[usize], controls: &[Control]) {
        let fire = ControlMask::new(controls);
        let wmask = BasisKey::mask(wires);
        let dim = 1usize << wires.len();
        let offsets: Vec<BasisKey> = (0..dim).map(|j| BasisKey::scatter_small(j, wires)).collect();
        let old = core::mem::take(self.map_mut());
        let mut out = BTreeMap::new();
        let mut blocks: BTreeMap<BasisKey, Vec<C64>> = BTreeMap::new();
        for (key, amp) in &old {
            if !fire.fires(key) {
                out.insert(*key, *amp);
                continue;
            }
            let base = key.and_not(&wmask);
            let local = key.gather_small(wires);
            blocks.entry(base).or_insert_with(|| vec![ZERO; dim])[local] = *amp;
        }
        for (base, v) in blocks {
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, x) in v.iter().enumerate() {
                    acc += matrix[(r, c)] * x;
                }
                Self::insert_pruned(&mut out, base.or(off), acc);
            }
        }
        *self.map_mut() = out;
    }

    fn flip_if_zero(&mut self, register: &[usize], target: usize, controls: &[Control]) {
        let fire = ControlMask::new(controls);
        let rmask = BasisKey::mask(register);
        let old = core::mem::take(self.map_mut());
        *self.map_mut() = old
            .into_iter()
            .map(|(k, a)| if fire.fires(&k) && k.and(&rmask).is_zero() { (k.flipped(target), a) } else { (k, a) })
            .collect();
    }

    fn flip_along(&mut self, reference: &SparseState, wires: &[usize], targets: &[usize], controls: &[Control]) {
        let fire = ControlMask::new(controls);
        let q: Vec<(BasisKey, C64)> = reference.iter().map(|(k, a)| (k.scatter(wires), *a)).collect();
        let qmap: BTreeMap<BasisKey, C64> = q.iter().copied().collect();
        let rmask = BasisKey::mask(wires);
        let block = rmask.or(&BasisKey::mask(targets));
        let patterns = 1usize << targets.len();
        let full = patterns - 1;
        let toff: Vec<BasisKey> = (0..patterns).map(|t| BasisKey::scatter_small(t, targets)).collect();

        let mut overlaps: BTreeMap<BasisKey, Vec<C64>> = BTreeMap::new();
        for (key, amp) in self.map() {
            if !fire.fires(key) {
                continue;
            }
            if let Some(qv) = qmap.get(&key.and(&rmask)) {
                let rest = key.and_not(&block);
                let t = key.gather_small(targets);
                overlaps.entry(rest).or_insert_with(|| vec![ZERO; patterns])[t] += qv.conj() * amp;
            }
        }
        let map = self.map_mut();
        for (rest, c) in overlaps {
            for t in 0..patterns {
                let d = c[t ^ full] - c[t];
                if d == ZERO {
                    continue;
                }
                for (z, qv) in &q {
                    let key = rest.or(z).or(&toff[t]);
                    *map.entry(key).or_insert(ZERO) += qv * d;
                }
            }
        }
        self.prune();
    }

    fn truncate(&mut self, threshold: f64) -> f64 {
        let mut dropped = 0.0;
        self.map_mut().retain(|_, a| {
            let keep = a.norm() > threshold;
            if !keep {
                dropped += a.norm_sqr();
            }
            keep
        });
        libm::sqrt(dropped)
    }
}
