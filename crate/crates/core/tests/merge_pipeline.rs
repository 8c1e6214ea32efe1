mod common;

use std::sync::Arc;

use common::*;
use qmerge_core::exact::{build_exact_merge_special, detect_special_case, SpecialCase, SpecialMerge};
use qmerge_core::merge::*;
use qmerge_core::verify::{complete_unitary, random_orthogonal_pair, random_state};
use qmerge_core::{c64, BlackBoxUnitary, Circuit, Error, Matrix2, PureState, QubitLayout, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Golden-section minimizer on [lo, hi].
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    while hi - lo > 1e-12 {
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
        a = hi - g * (hi - lo);
        b = lo + g * (hi - lo);
    }
    0.5 * (lo + hi)
}

#[test]
fn theta_prime_minimizes_cleanup_leakage() {
    for step in 1..=9 {
        let c = step as f64 / 10.0;
        for n in 1..=10 {
            // merged weight of the first n branches and the weight of branch n
            let merged = (0..n).map(|j| c.powi(2 * j)).sum::<f64>().sqrt();
            let next = c.powi(n);
            let leak = |t: f64| (t.cos() * merged - t.sin() * next).powi(2);
            let best = golden_min(leak, 0.0, std::f64::consts::FRAC_PI_2);
            let got = theta_prime(n as usize, c).unwrap();
            assert!((got - best).abs() < 1e-6, "c={c} n={n}: {got} vs {best}");
        }
    }
}

fn ry_oracle(angle: f64) -> Arc<BlackBoxUnitary> {
    BlackBoxUnitary::from_matrix("R", Matrix2::ry(angle).to_matrix()).unwrap()
}

#[test]
fn chain_leaves_exactly_the_power_residual() {
    for angle in [0.3, 0.7, 1.1, 2.0, 2.6] {
        let u = ry_oracle(angle);
        let c = angle.cos();
        let prep = Circuit::from_oracle(&u, 1).unwrap();
        for k in 1..=8 {
            let chain = build_chain(&prep, c, k).unwrap();
            let image = qmerge_core::exact::prepared_image(&chain).unwrap();
            let residual = chain_residual(&chain, 1).unwrap();
            assert!((residual - c.abs().powi(k as i32)).abs() < 1e-9);
            // everything else sits on |1> with all chain bits clear
            let clean = image.amplitude(&qmerge_core::BasisKey::from_index(1)).norm();
            assert!((clean * clean + residual * residual - 1.0).abs() < 1e-9, "angle {angle} k {k}");
        }
    }
}

#[test]
fn hoeffding_failure_rate_on_hadamard() {
    let h = BlackBoxUnitary::from_matrix("H", Matrix2::h().to_matrix()).unwrap();
    let (t, delta) = (0.05, 0.1);
    assert_eq!(hoeffding_samples(t, delta).unwrap(), 600);
    let trials = 500;
    let failures = (0..trials)
        .filter(|&seed| {
            let est = estimate_cos_squared(&h, t, delta, &EstimationMode::Sampled { seed, precision: t, failure: delta }).unwrap();
            assert_eq!(est.samples_used, 600);
            (est.cos_squared - 0.5).abs() > t
        })
        .count();
    assert!(failures as f64 / trials as f64 <= 0.13, "{failures} failures");
    assert_eq!(h.query_counts().apply, 600 * trials);
}

#[test]
fn literal_parameters_are_infeasible_at_small_epsilon() {
    let mode = EstimationMode::sampled_literal(0.1, 0);
    let h = BlackBoxUnitary::from_matrix("H", Matrix2::h().to_matrix()).unwrap();
    let prep = Circuit::from_oracle(&h, 1).unwrap();
    match estimate_cos_squared_of(&prep, &mode, 0.1) {
        Err(Error::Infeasible { required, limit }) => {
            assert!(required > 1e30);
            assert_eq!(limit, MAX_SAMPLES);
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
    assert_eq!(h.query_counts().total(), 0);
    let mode = EstimationMode::sampled_literal(0.9, 0);
    assert_eq!(estimate_cos_squared_of(&prep, &mode, 0.9).unwrap().samples_used, 21);
}

#[test]
fn sampled_sign_agrees_with_exact_sign() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let eps = 0.3;
    let mut checked = 0;
    let mut agree = 0;
    while checked < 40 {
        let angle = r.random_range(0.0..std::f64::consts::TAU);
        if angle.cos().abs() < eps {
            continue;
        }
        let u = ry_oracle(angle);
        let mode = EstimationMode::Sampled { seed: checked, precision: 0.05, failure: 0.1 };
        let got = estimate_sign(&u, angle.cos().abs(), eps, &mode).unwrap();
        let want = if angle.cos() > 0.0 { Sign::Positive } else { Sign::Negative };
        checked += 1;
        agree += (got.sign == want) as usize;
        assert_eq!(got.trials, sign_trials(eps));
    }
    assert!(agree >= 38, "{agree}/40");
}

fn random_real_oracles(n: usize, r: &mut ChaCha8Rng) -> (Arc<BlackBoxUnitary>, Arc<BlackBoxUnitary>) {
    let (psi, phi) = random_orthogonal_pair(n, true, r).unwrap();
    oracles_for(&psi, &phi, true, r)
}

#[test]
fn residual_is_the_power_of_the_exact_cosine() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=3 {
        for eps in [0.3, 0.2, 0.1] {
            for _ in 0..6 {
                let (u, v) = random_real_oracles(n, &mut r);
                let opts = MergeOptions { leakage_trials: 1, force_general: true, ..Default::default() };
                let (_, report) = general_merge(&u, &v, eps, &opts).unwrap();
                let Some(est) = report.estimate else { continue };
                if report.path != MergePath::General {
                    continue;
                }
                let expected = est.cos_abs.powi(report.iterations_k as i32);
                assert!((report.residual_amplitude - expected).abs() < 1e-9);
                assert!(report.residual_amplitude <= eps + 1e-9);
            }
        }
    }
}

#[test]
fn error_shrinks_with_epsilon() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let pairs: Vec<_> = (0..12).map(|_| random_real_oracles(2, &mut r)).collect();
    let mean = |eps: f64| {
        let opts = MergeOptions { leakage_trials: 4, force_general: true, ..Default::default() };
        pairs
            .iter()
            .map(|(u, v)| {
                let (_, rep) = general_merge(u, v, eps, &opts).unwrap();
                rep.distance_psi.max(rep.distance_phi)
            })
            .sum::<f64>()
            / pairs.len() as f64
    };
    let (e3, e2, e1) = (mean(0.3), mean(0.2), mean(0.1));
    assert!(e3 >= e2 && e2 >= e1, "{e3} {e2} {e1}");
    assert!(e1 < 0.1);
}

#[test]
fn access_goes_through_counted_modes_only() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let (u, v) = random_real_oracles(2, &mut r);
    let opts = MergeOptions { leakage_trials: 2, force_general: true, ..Default::default() };
    let build = build_general_merge(&u, &v, 0.2, &opts).unwrap();
    assert_eq!(u.query_counts(), build.estimation_queries_u);
    assert_eq!(v.query_counts(), build.estimation_queries_v);
    let oracles = build.circuit.query_counts();
    assert!(oracles.iter().all(|(o, _)| Arc::ptr_eq(o, &u) || Arc::ptr_eq(o, &v)));
    u.reset_counts();
    v.reset_counts();
    build.circuit.apply_to_main(&PureState::basis(2, 1).unwrap()).unwrap();
    assert_eq!(u.query_counts(), build.circuit.queries_of(&u));
    assert_eq!(v.query_counts(), build.circuit.queries_of(&v));
    assert!(u.query_counts().controlled_apply + u.query_counts().controlled_adjoint > 0);
}

fn with_columns(n: usize, first: &PureState, second: &PureState) -> Arc<BlackBoxUnitary> {
    let m = complete_unitary(n, &[(0, first.amplitudes().to_vec()), (1, second.amplitudes().to_vec())]).unwrap();
    BlackBoxUnitary::from_matrix("U", m).unwrap()
}

fn state(values: &[C64]) -> PureState {
    PureState::normalized(values.to_vec()).unwrap()
}

fn check_exact(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, want: &str) {
    let opts = MergeOptions { leakage_trials: 8, ..Default::default() };
    let (_, report) = general_merge(u, v, 0.1, &opts).unwrap();
    assert_eq!(report.path.name(), want);
    assert!(report.distance_psi <= 1e-9 && report.distance_phi <= 1e-9, "{report:?}");
    assert!(report.max_leakage <= 1e-9);
}

#[test]
fn special_case_instances() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let z = c64(0.0, 0.0);
    let g = |r: &mut ChaCha8Rng| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));

    // (a): both targets supported on |01>, |11> (indices 2, 3)
    let psi = state(&[z, z, g(&mut r), g(&mut r)]);
    let a = psi.amplitudes();
    let phi = state(&[z, z, -a[3].conj(), a[2].conj()]);
    let (u, v) = oracles_for(&psi, &phi, false, &mut r);
    assert_eq!(detect_special_case(&u, &v).unwrap(), Ok(SpecialCase::OrthogonalToSources));
    check_exact(&u, &v, "orthogonal_to_sources");

    // (b): both in span{|00>, |10>}
    let psi = state(&[g(&mut r), g(&mut r), z, z]);
    let a = psi.amplitudes();
    let phi = state(&[-a[1].conj(), a[0].conj(), z, z]);
    let (u, v) = oracles_for(&psi, &phi, false, &mut r);
    assert_eq!(detect_special_case(&u, &v).unwrap(), Ok(SpecialCase::SharedSpan));
    check_exact(&u, &v, "shared_span");

    // (c) parallel: U|10> = lambda phi
    let (psi, phi) = random_orthogonal_pair(2, false, &mut r).unwrap();
    let lambda = c64(0.6, 0.8);
    let scaled = state(&phi.amplitudes().iter().map(|x| lambda * x).collect::<Vec<_>>());
    let u = with_columns(2, &psi, &scaled);
    let v = oracle_for("V", &phi, false, &mut r);
    match detect_special_case(&u, &v).unwrap() {
        Ok(SpecialCase::OmegaParallel { phase }) => assert!((phase - lambda.conj()).norm() < 1e-9),
        other => panic!("{other:?}"),
    }
    check_exact(&u, &v, "omega_parallel");

    // (c) orthogonal: U|10> orthogonal to phi
    let (psi, phi) = random_orthogonal_pair(2, false, &mut r).unwrap();
    let mut third = random_state(2, false, &mut r).unwrap().into_amplitudes();
    for s in [&psi, &phi] {
        let ip: C64 = s.amplitudes().iter().zip(&third).map(|(a, b)| a.conj() * b).sum();
        third.iter_mut().zip(s.amplitudes()).for_each(|(x, y)| *x -= ip * y);
    }
    let u = with_columns(2, &psi, &state(&third));
    let v = oracle_for("V", &phi, false, &mut r);
    assert_eq!(detect_special_case(&u, &v).unwrap(), Ok(SpecialCase::OmegaOrthogonal));
    check_exact(&u, &v, "omega_orthogonal");
}

#[test]
fn mismatched_spans_are_not_special() {
    // psi inside span{|00>, |10>} while phi is not: neither (a) nor (b).
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = PureState::from_real(&[s, s, 0.0, 0.0]).unwrap();
    let phi = PureState::from_real(&[0.5, -0.5, 0.5, 0.5]).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let (u, v) = oracles_for(&psi, &phi, true, &mut r);
    match build_exact_merge_special(&u, &v).unwrap() {
        SpecialMerge::NotApplicable { overlap } => assert!(overlap > 1e-6 && overlap < 1.0 - 1e-6),
        SpecialMerge::Exact { case, .. } => panic!("detected {case:?}"),
    }
    // the shared-span circuit still maps the two sources correctly here but
    // leaves garbage on the complement
    let opts = MergeOptions { leakage_trials: 4, ..Default::default() };
    let (_, report) = general_merge(&u, &v, 0.1, &opts).unwrap();
    assert_eq!(report.path, MergePath::General);
    assert!(report.distance_phi <= 1.0);
    let wrong = shared_span_circuit(&u, &v);
    let out = wrong.apply_to_main(&PureState::basis(2, 1).unwrap()).unwrap();
    let want = qmerge_core::SparseState::from_dense(&phi, wrong.num_qubits()).unwrap();
    assert!(out.trace_distance(&want).unwrap() < 1e-9);
    let (_, leak) = block(&wrong);
    assert!(leak > 0.4);
    let sweep = qmerge_core::verify::garbage_sweep(&wrong, wrong.layout(), 20, 1).unwrap();
    assert!(sweep.max_leakage > 0.1);
}

/// The shared-span construction written out for an arbitrary pair.
fn shared_span_circuit(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>) -> Circuit {
    use qmerge_core::exact::{flip_first_preparer, oracle_preparer};
    use qmerge_core::Control;
    let data = [0, 1];
    let (a1, a2) = (2, 3);
    let mut c = Circuit::new(4, QubitLayout::new(2, 2)).unwrap();
    let up = oracle_preparer(u, 2).unwrap();
    let vp = oracle_preparer(v, 2).unwrap();
    c.zero_control(&data, a1, &[]).unwrap();
    c.state_control(&flip_first_preparer(2, 2).unwrap(), &data, &[a2], &[]).unwrap();
    c.append_mapped(&up, &data, false, &[Control::on(a1)]).unwrap();
    c.gate(Matrix2::x(), 0, &[Control::on(a2)]).unwrap();
    c.append_mapped(&vp, &data, false, &[Control::on(a2)]).unwrap();
    c.state_control(&up, &data, &[a1], &[]).unwrap();
    c.state_control(&vp, &data, &[a2], &[]).unwrap();
    c
}

#[test]
fn complex_pairs_are_rejected_on_the_general_path() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let (psi, phi) = random_orthogonal_pair(2, false, &mut r).unwrap();
    let (u, v) = oracles_for(&psi, &phi, false, &mut r);
    let opts = MergeOptions { force_general: true, ..Default::default() };
    assert!(matches!(general_merge(&u, &v, 0.2, &opts), Err(Error::Contract(_))));
}

#[test]
fn aligned_pairs_use_the_phase_fix() {
    // n = 1 real pairs always give chi = +-|0>
    let mut r = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..8 {
        let (u, v) = random_real_oracles(1, &mut r);
        let opts = MergeOptions { leakage_trials: 4, force_general: true, ..Default::default() };
        let (_, report) = general_merge(&u, &v, 0.2, &opts).unwrap();
        assert_eq!(report.path, MergePath::Aligned);
        assert!(report.distance_psi < 1e-9 && report.distance_phi < 1e-9 && report.max_leakage < 1e-9);
    }
}

fn closed_form(bins: &[(f64, bool, f64)], eps: f64) -> (f64, f64, f64) {
    let ov = |d: f64| (1.0 - d * d).sqrt();
    let first: f64 = bins.iter().map(|&(w, inr, d)| if inr { w } else { w * ov(d) }).sum();
    let second: f64 = bins.iter().map(|&(w, inr, d)| if inr { w * ov(d) } else { w }).sum();
    let k = bins.iter().filter(|b| b.1).map(|b| (b.2 / eps).powi(2)).fold(0.0, f64::max);
    (first, second, 2.0 * eps * (1.0 - eps * eps).sqrt() + k.sqrt() * eps)
}

#[test]
fn cleanup_bound_matches_closed_form() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    for eps in [0.3f64, 0.1] {
        for _ in 0..50 {
            let bins_n = r.random_range(2..8);
            let tail = r.random_range(0.0..eps * eps);
            let mut raw: Vec<(f64, bool, f64)> = (0..bins_n)
                .map(|i| (r.random_range(0.1..1.0), i > 0, r.random_range(0.0..(2.0 * eps).min(1.0))))
                .collect();
            raw[0].2 = r.random_range(0.0..1.0);
            let inside: f64 = raw[1..].iter().map(|b| b.0).sum();
            raw[0].0 = tail;
            for b in &mut raw[1..] {
                b.0 *= (1.0 - tail) / inside;
            }
            let bins: Vec<ThetaBin> = raw.iter().map(|&(weight, in_range, distance)| ThetaBin { weight, in_range, distance }).collect();
            let got = verify_theta_cleanup_bound(&bins, eps).unwrap();
            let (first, second, bound) = closed_form(&raw, eps);
            assert!((got.first_inner - first).abs() < 1e-12);
            assert!((got.second_inner - second).abs() < 1e-12);
            assert!((got.bound - bound).abs() < 1e-12);
            assert!(got.first_inner > 1.0 - 2.0 * eps * eps);
            assert!(got.second_inner >= got.second_threshold - 1e-12);
        }
    }
}
