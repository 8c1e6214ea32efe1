mod common;

use common::*;
use proptest::prelude::*;
use qmerge_core::exact::{build_superposition_prep, build_swap_orthogonal, harden_clean_preparation};
use qmerge_core::merge::{general_merge, EstimationMode, MergeOptions};
use qmerge_core::verify::{random_orthogonal_pair, random_state};
use qmerge_core::{c64, Circuit, Control, Matrix2, PureState, QubitLayout, SparseState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random circuit of gates, rotations and zero controls on `width` wires.
fn random_circuit(width: usize, len: usize, r: &mut ChaCha8Rng) -> Circuit {
    let mut c = Circuit::new(width, QubitLayout::new(width, 0)).unwrap();
    for _ in 0..len {
        let target = r.random_range(0..width);
        let others: Vec<usize> = (0..width).filter(|&w| w != target).collect();
        let mut controls = Vec::new();
        for &w in &others {
            if r.random_bool(0.3) {
                controls.push(Control { wire: w, value: r.random_bool(0.5) });
            }
        }
        match r.random_range(0..4) {
            0 => c.gate(Matrix2::h(), target, &controls).unwrap(),
            1 => c.gate(Matrix2::phase(r.random_range(0.0..6.3)), target, &controls).unwrap(),
            2 => {
                let a: f64 = r.random_range(0.0..1.0);
                let phase = r.random_range(0.0..6.3f64);
                let beta = c64((1.0 - a * a).sqrt() * phase.cos(), (1.0 - a * a).sqrt() * phase.sin());
                c.rotation(c64(a, 0.0), beta, target, &controls).unwrap()
            }
            _ if !others.is_empty() => c.zero_control(&others[..r.random_range(1..=others.len())], target, &[]).unwrap(),
            _ => c.gate(Matrix2::x(), target, &[]).unwrap(),
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn circuits_preserve_norm(seed in any::<u64>(), width in 1usize..5, len in 0usize..30) {
        let mut r = rng(seed);
        let c = random_circuit(width, len, &mut r);
        let input = random_state(width, false, &mut r).unwrap();
        let out = c.simulate(&input).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let sparse = c.simulate_sparse(SparseState::from_dense(&input, width).unwrap()).unwrap();
        prop_assert!((sparse.norm() - 1.0).abs() < 1e-12);
        prop_assert!(sparse.trace_distance(&SparseState::from_dense(&out, width).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn inverse_undoes_circuit(seed in any::<u64>(), width in 1usize..5, len in 0usize..30) {
        let mut r = rng(seed);
        let c = random_circuit(width, len, &mut r);
        let input = random_state(width, false, &mut r).unwrap();
        let back = c.inverse().simulate(&c.simulate(&input).unwrap()).unwrap();
        let diff: f64 = back.amplitudes().iter().zip(input.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10);
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let [a, b, c] = [0, 1, 2].map(|_| random_state(n, false, &mut r).unwrap());
        let ab = a.trace_distance(&b).unwrap();
        let bc = b.trace_distance(&c).unwrap();
        let ac = a.trace_distance(&c).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - b.trace_distance(&a).unwrap()).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(a.trace_distance(&a).unwrap() < 1e-7);
        prop_assert!((ab - distance(a.amplitudes(), b.amplitudes())).abs() < 1e-7);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let a = random_state(n, false, &mut r).unwrap();
        let b = random_state(n, false, &mut r).unwrap();
        let ab = a.inner_product(&b).unwrap();
        let ba = b.inner_product(&a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn swap_is_an_involution_and_clean(seed in any::<u64>(), n in 1usize..4, real in any::<bool>()) {
        let mut r = rng(seed);
        let (psi, phi) = random_orthogonal_pair(n, real, &mut r).unwrap();
        let (u, v) = oracles_for(&psi, &phi, real, &mut r);
        let c = build_swap_orthogonal(&u, &v).unwrap();
        let (m, leak) = block(&c);
        prop_assert!(leak < 1e-9);
        let dim = 1 << n;
        prop_assert!(max_diff(&(&m * &m), &Mat::identity(dim, dim)) < 1e-8);
        prop_assert!(max_diff(&(m.adjoint() * &m), &Mat::identity(dim, dim)) < 1e-8);
        prop_assert!(max_diff(&m, &swap_reference(psi.amplitudes(), phi.amplitudes())) < 1e-8);
    }

    #[test]
    fn swap_fixes_the_complement(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let (psi, phi) = random_orthogonal_pair(n, false, &mut r).unwrap();
        let (u, v) = oracles_for(&psi, &phi, false, &mut r);
        let c = build_swap_orthogonal(&u, &v).unwrap();
        let mut x = random_state(n, false, &mut r).unwrap().into_amplitudes();
        for s in [&psi, &phi] {
            let ip: num_complex::Complex64 = s.amplitudes().iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
            for (xi, si) in x.iter_mut().zip(s.amplitudes()) {
                *xi -= ip * si;
            }
        }
        let x = PureState::normalized(x).unwrap();
        let out = c.apply_to_main(&x).unwrap();
        let expected = SparseState::from_dense(&x, c.num_qubits()).unwrap();
        prop_assert!(out.trace_distance(&expected).unwrap() < 1e-8);
        prop_assert!((out.inner_product(&expected).unwrap() - c64(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn hardened_block_is_unitary(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mut real: Vec<f64> = random_state(n, true, &mut r).unwrap().amplitudes().iter().map(|a| a.re).collect();
        real[0] = 0.0;
        let target = PureState::from_real(&real).unwrap();
        let real: Vec<f64> = target.amplitudes().iter().map(|a| a.re).collect();
        let u = dirty_oracle(&real, n, m);
        let c = harden_clean_preparation(&u).unwrap();
        let (block, leak) = block(&c);
        prop_assert!(leak < 1e-9);
        let dim = 1 << n;
        prop_assert!(max_diff(&(block.adjoint() * &block), &Mat::identity(dim, dim)) < 1e-8);
        let mut zero = vec![c64(0.0, 0.0); dim];
        zero[0] = c64(1.0, 0.0);
        prop_assert!(max_diff(&block, &swap_reference(&zero, target.amplitudes())) < 1e-8);
    }

    #[test]
    fn superposition_block_is_unitary(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let (psi, phi) = random_orthogonal_pair(n, false, &mut r).unwrap();
        let (u, v) = oracles_for(&psi, &phi, false, &mut r);
        let t: f64 = r.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let c = build_superposition_prep(&u, &v, c64(t.cos(), 0.0), c64(0.0, t.sin())).unwrap();
        let (block, leak) = block(&c);
        prop_assert!(leak < 1e-9);
        let dim = 1 << n;
        prop_assert!(max_diff(&(block.adjoint() * &block), &Mat::identity(dim, dim)) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// T|0^n> = psi exactly on the general path; all approximation lands on phi.
    #[test]
    fn general_merge_hits_psi_exactly(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let (psi, phi) = random_orthogonal_pair(n, true, &mut r).unwrap();
        let (u, v) = oracles_for(&psi, &phi, true, &mut r);
        let opts = MergeOptions { mode: EstimationMode::ExactOracle, leakage_trials: 4, seed, force_general: true, ..Default::default() };
        let (_, report) = general_merge(&u, &v, 0.2, &opts).unwrap();
        prop_assert!(report.distance_psi < 1e-9);
        prop_assert!(report.distance_phi <= 10.0 * 0.2);
        prop_assert!(report.max_leakage <= 10.0 * 0.2);
    }
}
