//! Exact garbage-free constructions: zero and state controls, the orthogonal
//! swap, hardening, superposition preparation and the exactly solvable merges.
//!
//! Every builder takes black boxes and returns a [`Circuit`] whose low `n`
//! wires are the data register. Wires `n..width` hold the oracles' internal
//! ancillas (width = n + the larger ancilla count of the oracles involved),
//! followed by the construction's own work bits.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::circuit::Circuit;
use crate::error::{argument, contract, Result};
use crate::linalg::{Matrix2, C64};
use crate::oracle::BlackBoxUnitary;
use crate::sparse::{BasisKey, SparseState};
use crate::state::{Control, PureState, QubitLayout};
use crate::tolerance::{ATOL, ORTHOGONALITY_ATOL};

/// |x>|y> -> |x>|y xor [x = 0^n]> on n + 1 wires; the flag is the last wire.
pub fn build_zero_control(register_size: usize) -> Result<Circuit> {
    if register_size == 0 {
        return Err(argument!("zero control needs a register of at least one qubit"));
    }
    let mut c = Circuit::new(register_size + 1, QubitLayout::with_controls(register_size, 0, 1))?;
    c.zero_control(&(0..register_size).collect::<Vec<_>>(), register_size, &[])?;
    Ok(c)
}

/// Literal `U^-1`, zero control, `U`: flips the last wire on the component
/// along |psi> = U|0>. The zero control covers the oracle's internal
/// ancillas too.
pub fn build_state_control(oracle: &Arc<BlackBoxUnitary>) -> Result<Circuit> {
    let n = oracle.num_qubits();
    let wires: Vec<usize> = (0..oracle.total_wires()).collect();
    let flag = wires.len();
    let mut c = Circuit::new(flag + 1, QubitLayout::with_controls(n, oracle.num_ancillas(), 1))?;
    c.oracle(oracle, true, &wires, &[])?;
    c.zero_control(&wires, flag, &[])?;
    c.oracle(oracle, false, &wires, &[])?;
    Ok(c)
}

/// A preparer of `width` wires that applies `oracle` once.
pub fn oracle_preparer(oracle: &Arc<BlackBoxUnitary>, width: usize) -> Result<Arc<Circuit>> {
    Ok(Arc::new(Circuit::from_oracle(oracle, width)?))
}

/// The preparer with no gates: its image is |0...0>.
pub fn identity_preparer(num_data: usize, width: usize) -> Result<Arc<Circuit>> {
    Ok(Arc::new(Circuit::new(width, QubitLayout::new(num_data, width - num_data))?))
}

/// X on wire 0: prepares |10...0> (basis index 1).
pub fn flip_first_preparer(num_data: usize, width: usize) -> Result<Arc<Circuit>> {
    let mut c = Circuit::new(width, QubitLayout::new(num_data, width - num_data))?;
    c.gate(Matrix2::x(), 0, &[])?;
    Ok(Arc::new(c))
}

/// `U^-1 V`: prepares omega = U^-1|phi>.
pub fn relative_preparer(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, width: usize) -> Result<Arc<Circuit>> {
    let mut c = Circuit::new(width, QubitLayout::new(u.num_qubits(), width - u.num_qubits()))?;
    c.oracle(v, false, &(0..v.total_wires()).collect::<Vec<_>>(), &[])?;
    c.oracle(u, true, &(0..u.total_wires()).collect::<Vec<_>>(), &[])?;
    Ok(Arc::new(c))
}

/// Shared register width of two oracles on the same data register.
pub fn shared_width(u: &BlackBoxUnitary, v: &BlackBoxUnitary) -> Result<usize> {
    if u.num_qubits() != v.num_qubits() {
        return Err(argument!("oracles act on {} and {} qubits", u.num_qubits(), v.num_qubits()));
    }
    Ok(u.total_wires().max(v.total_wires()))
}

/// Appends the five-step swap of `src|0>` and `tgt|0>` on `data`, using
/// `anc` as the work bit. Both images must be orthogonal; every other state
/// orthogonal to both is left alone and `anc` ends at 0 on all inputs.
pub fn append_swap(c: &mut Circuit, src: &Arc<Circuit>, tgt: &Arc<Circuit>, data: &[usize], anc: usize) -> Result<()> {
    let on = [Control::on(anc)];
    c.state_control(src, data, &[anc], &[])?;
    c.append_mapped(src, data, true, &on)?;
    c.append_mapped(tgt, data, false, &on)?;
    c.state_control(tgt, data, &[anc], &[])?;
    c.append_mapped(tgt, data, true, &on)?;
    c.append_mapped(src, data, false, &on)?;
    c.state_control(src, data, &[anc], &[])
}

/// Appends the two-ancilla rotation protocol: |0> -> alpha|0> + beta|w>,
/// |w> -> conj(beta)|0> - conj(alpha)|w> with w = `prep|0>`, identity on the
/// rest. Requires w orthogonal to |0>.
pub fn append_superposition(c: &mut Circuit, prep: &Arc<Circuit>, alpha: C64, beta: C64, data: &[usize], a1: usize, a2: usize) -> Result<()> {
    let both = [Control::on(a1), Control::on(a2)];
    c.zero_control(data, a2, &[])?;
    c.state_control(prep, data, &[a1, a2], &[])?;
    c.append_mapped(prep, data, true, &both)?;
    c.rotation(alpha, beta, a1, &[Control::on(a2)])?;
    c.append_mapped(prep, data, false, &both)?;
    c.state_control(prep, data, &[a1, a2], &[])?;
    c.zero_control(data, a2, &[])
}

/// Image of a preparer on |0...0>, simulated (queries are counted).
pub fn prepared_image(prep: &Circuit) -> Result<SparseState> {
    prep.simulate_sparse(SparseState::zero(prep.num_qubits())?)
}

fn check_orthogonal(psi: &PureState, phi: &PureState) -> Result<()> {
    let overlap = psi.inner_product(phi)?.norm();
    if overlap > ORTHOGONALITY_ATOL {
        return Err(contract!("target states must be orthogonal, |<psi|phi>| = {overlap:.3e}"));
    }
    Ok(())
}

/// Swaps |psi> = U|0> and |phi> = V|0>, identity on their orthogonal
/// complement. One work bit (the last wire).
pub fn build_swap_orthogonal(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>) -> Result<Circuit> {
    let width = shared_width(u, v)?;
    check_orthogonal(&u.prepared_state()?, &v.prepared_state()?)?;
    let n = u.num_qubits();
    let data: Vec<usize> = (0..width).collect();
    let mut c = Circuit::new(width + 1, QubitLayout::new(n, width + 1 - n))?;
    append_swap(&mut c, &oracle_preparer(u, width)?, &oracle_preparer(v, width)?, &data, width)?;
    Ok(c)
}

/// Turns a preparation that is only clean on |0> into a unitary that swaps
/// |0> and |psi>, fixes everything orthogonal to both and restores all
/// ancillas. Requires |psi> orthogonal to |0>.
pub fn harden_clean_preparation(u: &Arc<BlackBoxUnitary>) -> Result<Circuit> {
    let psi = u.prepared_state()?;
    let overlap = psi.amplitude(0).norm();
    if overlap > ORTHOGONALITY_ATOL {
        return Err(contract!("hardening needs <0|psi> = 0, got |<0|psi>| = {overlap:.3e}"));
    }
    harden(&oracle_preparer(u, u.total_wires())?)
}

/// Hardening of an arbitrary preparer whose image is orthogonal to
/// |0...0> on all its wires. Adds one work bit (the last wire).
pub fn harden(prep: &Arc<Circuit>) -> Result<Circuit> {
    let width = prep.num_qubits();
    let main = prep.layout().main.len();
    let mut c = Circuit::new(width + 1, QubitLayout::new(main, width + 1 - main))?;
    let data: Vec<usize> = (0..width).collect();
    append_swap(&mut c, &identity_preparer(main, width)?, prep, &data, width)?;
    Ok(c)
}

/// Prepares alpha|psi> + beta|phi> from |0> with two work bits (the last
/// two wires); omega = U^-1|phi> goes to conj(beta)|psi> - conj(alpha)|phi>,
/// and U is applied to everything orthogonal to |0> and omega.
pub fn build_superposition_prep(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, alpha: C64, beta: C64) -> Result<Circuit> {
    let width = shared_width(u, v)?;
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > ATOL {
        return Err(contract!("|alpha|^2 + |beta|^2 = {norm}, expected 1"));
    }
    check_orthogonal(&u.prepared_state()?, &v.prepared_state()?)?;
    let n = u.num_qubits();
    let data: Vec<usize> = (0..width).collect();
    let mut c = Circuit::new(width + 2, QubitLayout::new(n, width + 2 - n))?;
    append_superposition(&mut c, &relative_preparer(u, v, width)?, alpha, beta, &data, width, width + 1)?;
    c.oracle(u, false, &(0..u.total_wires()).collect::<Vec<_>>(), &[])?;
    Ok(c)
}

/// Which exactly solvable configuration a pair of targets falls into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialCase {
    /// psi and phi are both orthogonal to |0^n> and |10^(n-1)>.
    OrthogonalToSources,
    /// span{psi, phi} = span{|0^n>, |10^(n-1)>}.
    SharedSpan,
    /// omega = U^-1 phi is `phase` times |10^(n-1)>.
    OmegaParallel { phase: C64 },
    /// omega is orthogonal to |10^(n-1)>.
    OmegaOrthogonal,
}

impl SpecialCase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OrthogonalToSources => "orthogonal_to_sources",
            Self::SharedSpan => "shared_span",
            Self::OmegaParallel { .. } => "omega_parallel",
            Self::OmegaOrthogonal => "omega_orthogonal",
        }
    }
}

#[derive(Debug, Clone)]
pub enum SpecialMerge {
    /// Circuit mapping |0^n> -> psi and |10^(n-1)> -> phi exactly.
    Exact { case: SpecialCase, circuit: Circuit },
    /// |<omega|10^(n-1)>| is strictly between 0 and 1: the general case.
    NotApplicable { overlap: f64 },
}

/// Norm of the part of `state` outside the basis states `inside`.
fn outside_norm(state: &PureState, inside: &[usize]) -> f64 {
    libm::sqrt(
        state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(i, _)| !inside.contains(i))
            .map(|(_, a)| a.norm_sqr())
            .sum(),
    )
}

/// Decides the special case by exact amplitude computation.
pub fn detect_special_case(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>) -> Result<core::result::Result<SpecialCase, f64>> {
    let width = shared_width(u, v)?;
    let psi = u.prepared_state()?;
    let phi = v.prepared_state()?;
    check_orthogonal(&psi, &phi)?;
    let tol = ORTHOGONALITY_ATOL;
    if [psi.amplitude(0), psi.amplitude(1), phi.amplitude(0), phi.amplitude(1)].iter().all(|a| a.norm() <= tol) {
        return Ok(Ok(SpecialCase::OrthogonalToSources));
    }
    if outside_norm(&psi, &[0, 1]) <= tol && outside_norm(&phi, &[0, 1]) <= tol {
        return Ok(Ok(SpecialCase::SharedSpan));
    }
    let omega = prepared_image(&*relative_preparer(u, v, width)?)?;
    let lambda = omega.amplitude(&BasisKey::from_index(1));
    let rest = libm::sqrt(omega.iter().filter(|(k, _)| **k != BasisKey::from_index(1)).map(|(_, a)| a.norm_sqr()).sum());
    if rest <= tol {
        return Ok(Ok(SpecialCase::OmegaParallel { phase: lambda / lambda.norm() }));
    }
    if lambda.norm() <= tol {
        return Ok(Ok(SpecialCase::OmegaOrthogonal));
    }
    Ok(Err(lambda.norm()))
}

/// Exact merge |0^n> -> psi, |10^(n-1)> -> phi when one of the special
/// cases holds, otherwise `NotApplicable`. Checked in the order
/// orthogonal-to-sources, shared span, omega parallel/orthogonal.
pub fn build_exact_merge_special(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>) -> Result<SpecialMerge> {
    let case = match detect_special_case(u, v)? {
        Ok(case) => case,
        Err(overlap) => return Ok(SpecialMerge::NotApplicable { overlap }),
    };
    let width = shared_width(u, v)?;
    let n = u.num_qubits();
    let data: Vec<usize> = (0..width).collect();
    let u_wires: Vec<usize> = (0..u.total_wires()).collect();
    let up = oracle_preparer(u, width)?;
    let vp = oracle_preparer(v, width)?;
    let e = flip_first_preparer(n, width)?;
    let circuit = match case {
        SpecialCase::OrthogonalToSources => {
            let mut c = Circuit::new(width + 1, QubitLayout::new(n, width + 1 - n))?;
            append_swap(&mut c, &identity_preparer(n, width)?, &up, &data, width)?;
            append_swap(&mut c, &e, &vp, &data, width)?;
            c
        }
        SpecialCase::SharedSpan => {
            let (a1, a2) = (width, width + 1);
            let mut c = Circuit::new(width + 2, QubitLayout::new(n, width + 2 - n))?;
            c.zero_control(&data, a1, &[])?;
            c.state_control(&e, &data, &[a2], &[])?;
            c.append_mapped(&up, &data, false, &[Control::on(a1)])?;
            c.gate(Matrix2::x(), 0, &[Control::on(a2)])?;
            c.append_mapped(&vp, &data, false, &[Control::on(a2)])?;
            c.state_control(&up, &data, &[a1], &[])?;
            c.state_control(&vp, &data, &[a2], &[])?;
            c
        }
        SpecialCase::OmegaParallel { phase } => {
            let mut c = Circuit::new(width + 1, QubitLayout::new(n, width + 1 - n))?;
            c.state_control(&e, &data, &[width], &[])?;
            c.gate(Matrix2::diag_phase(phase), width, &[])?;
            c.state_control(&e, &data, &[width], &[])?;
            c.oracle(u, false, &u_wires, &[])?;
            c
        }
        SpecialCase::OmegaOrthogonal => {
            let mut c = Circuit::new(width + 1, QubitLayout::new(n, width + 1 - n))?;
            append_swap(&mut c, &e, &relative_preparer(u, v, width)?, &data, width)?;
            c.oracle(u, false, &u_wires, &[])?;
            c
        }
    };
    Ok(SpecialMerge::Exact { case, circuit })
}
