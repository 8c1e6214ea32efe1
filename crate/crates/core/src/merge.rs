//! Approximate merge of two arbitrary orthogonal preparations.
//!
//! Pipeline: estimate the overlap c = <0|X_0 U^-1 V|0> (magnitude and sign),
//! build a chain circuit that prepares the normalized part of X_0 U^-1 V|0>
//! orthogonal to |0> up to a residual |c|^k, harden it into a swap, rotate
//! with the estimated (c, s), and finish with U.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{argument, contract, Error, Result};
use crate::exact::{self, SpecialCase, SpecialMerge};
use crate::linalg::{c64, Matrix2, C64};
use crate::oracle::{BlackBoxUnitary, QueryCounts};
use crate::sparse::{BasisKey, SparseState};
use crate::state::{Control, PureState, QubitLayout};
use crate::verify;

/// Largest sample count the sampled estimator will simulate.
pub const MAX_SAMPLES: u64 = 50_000_000;

/// Default amplitude truncation for merge simulations.
pub const DEFAULT_TRUNCATION: f64 = 1e-9;

/// Imaginary parts above this reject a pair for the general pipeline.
pub const REAL_ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimationMode {
    /// Repeated preparation and measurement with `precision` t and failure
    /// probability `failure` (Hoeffding).
    Sampled { seed: u64, precision: f64, failure: f64 },
    /// The exact overlap, from one simulated preparation.
    ExactOracle,
    /// The exact |cos| shifted by `offset` (clamped to [0, 1]).
    InjectedError { offset: f64 },
}

impl EstimationMode {
    /// Sampled estimation at t = eps^18, delta = eps^2.
    pub fn sampled_literal(epsilon: f64, seed: u64) -> Self {
        Self::Sampled { seed, precision: libm::pow(epsilon, 18.0), failure: epsilon * epsilon }
    }

    pub fn kind(&self) -> EstimationKind {
        match self {
            Self::Sampled { .. } => EstimationKind::Sampled,
            Self::ExactOracle => EstimationKind::ExactOracle,
            Self::InjectedError { .. } => EstimationKind::InjectedError,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationKind {
    Sampled,
    ExactOracle,
    InjectedError,
}

impl EstimationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sampled => "sampled",
            Self::ExactOracle => "exact_oracle",
            Self::InjectedError => "injected_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Undetermined,
}

impl Sign {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Positive => "+1",
            Self::Negative => "-1",
            Self::Undetermined => "undetermined",
        }
    }
}

/// Estimate of the angle theta with |<0|chi>| = |cos theta|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    pub cos_squared: f64,
    pub cos_abs: f64,
    pub sign: Sign,
    pub epsilon: f64,
    pub mode: EstimationKind,
    pub samples_used: u64,
}

impl AngleEstimate {
    /// cos theta with the sign applied. An undetermined sign gives 0: the
    /// magnitude is then below epsilon and guessing a sign could double the
    /// error.
    pub fn signed_cos(&self) -> f64 {
        match self.sign {
            Sign::Positive => self.cos_abs,
            Sign::Negative => -self.cos_abs,
            Sign::Undetermined => 0.0,
        }
    }
}

/// Hoeffding sample count ceil(-ln(delta/2) / (2 t^2)) as a real number.
pub fn hoeffding_requirement(precision: f64, failure: f64) -> Result<f64> {
    if !(precision > 0.0 && precision < 1.0) {
        return Err(argument!("precision t must lie in (0, 1), got {precision}"));
    }
    if !(failure > 0.0 && failure < 1.0) {
        return Err(argument!("failure probability must lie in (0, 1), got {failure}"));
    }
    Ok(libm::ceil(-libm::log(failure / 2.0) / (2.0 * precision * precision)))
}

/// The sample count, or an infeasibility error naming it.
pub fn hoeffding_samples(precision: f64, failure: f64) -> Result<u64> {
    let required = hoeffding_requirement(precision, failure)?;
    if !required.is_finite() || required > MAX_SAMPLES as f64 {
        return Err(Error::Infeasible { required, limit: MAX_SAMPLES });
    }
    Ok(required as u64)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(argument!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// <0...0| prep |0...0>, from one counted simulation.
fn zero_overlap(prep: &Circuit) -> Result<C64> {
    Ok(exact::prepared_image(prep)?.amplitude(&BasisKey::ZERO))
}

fn record_repeats(prep: &Circuit, repeats: u64, controlled: bool) {
    if repeats == 0 {
        return;
    }
    for (oracle, counts) in prep.query_counts() {
        let mut extra = QueryCounts::default();
        for mode in crate::oracle::AccessMode::ALL {
            let target = crate::oracle::AccessMode::new(mode.is_adjoint(), controlled || mode.is_controlled());
            extra.add_mode(target, counts.get(mode) * repeats);
        }
        oracle.record(&extra);
    }
}

/// Estimates |<0|prep|0>|^2 (only `cos_squared`/`cos_abs` are filled; the
/// sign is left undetermined).
///
/// The sampled mode measures N = ceil(-ln(delta/2)/(2t^2)) fresh
/// preparations. Preparation is deterministic, so it is simulated once and
/// the other N - 1 runs are drawn from the same outcome distribution; the
/// oracle counters still record all N.
pub fn estimate_cos_squared_of(prep: &Circuit, mode: &EstimationMode, epsilon: f64) -> Result<AngleEstimate> {
    let (cos_squared, samples_used) = match *mode {
        EstimationMode::Sampled { seed, precision, failure } => {
            let samples = hoeffding_samples(precision, failure)?;
            let p = zero_overlap(prep)?.norm_sqr().min(1.0);
            record_repeats(prep, samples - 1, false);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hits = (0..samples).filter(|_| rng.random::<f64>() < p).count() as u64;
            (hits as f64 / samples as f64, samples)
        }
        EstimationMode::ExactOracle => (zero_overlap(prep)?.norm_sqr().min(1.0), 0),
        EstimationMode::InjectedError { offset } => {
            let c = zero_overlap(prep)?.norm().min(1.0);
            let shifted = (c + offset).clamp(0.0, 1.0);
            (shifted * shifted, 0)
        }
    };
    Ok(AngleEstimate {
        cos_squared,
        cos_abs: libm::sqrt(cos_squared),
        sign: Sign::Undetermined,
        epsilon,
        mode: mode.kind(),
        samples_used,
    })
}

/// [`estimate_cos_squared_of`] for the oracle's own preparation.
pub fn estimate_cos_squared(oracle: &Arc<BlackBoxUnitary>, precision: f64, failure: f64, mode: &EstimationMode) -> Result<AngleEstimate> {
    let prep = Circuit::from_oracle(oracle, oracle.total_wires())?;
    let mode = match *mode {
        EstimationMode::Sampled { seed, .. } => EstimationMode::Sampled { seed, precision, failure },
        other => other,
    };
    hoeffding_requirement(precision, failure)?;
    estimate_cos_squared_of(&prep, &mode, precision)
}

/// Outcome of the sign protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignEstimate {
    pub sign: Sign,
    pub trials: u64,
    pub successes: u64,
    pub plus: u64,
}

/// Number of repetitions of the sign protocol, ceil(2 / eps^4).
pub fn sign_trials(epsilon: f64) -> u64 {
    libm::ceil(2.0 / libm::pow(epsilon, 4.0)) as u64
}

/// Sign of <0|prep|0>.
///
/// Below `epsilon` the sign is irrelevant and reported undetermined. In
/// sampled mode a control qubit is prepared in (|c||0> + |1>)/sqrt(1+c^2),
/// the preparation runs controlled on it, the data register is measured
/// against |0...0> and on success the control is measured in the +/- basis;
/// the majority over ceil(2/eps^4) trials decides.
pub fn estimate_sign_of(prep: &Circuit, cos_abs: f64, epsilon: f64, mode: &EstimationMode) -> Result<SignEstimate> {
    check_epsilon(epsilon)?;
    if !(0.0..=1.0).contains(&cos_abs) {
        return Err(argument!("|cos theta| estimate must lie in [0, 1], got {cos_abs}"));
    }
    let undetermined = SignEstimate { sign: Sign::Undetermined, trials: 0, successes: 0, plus: 0 };
    if cos_abs < epsilon {
        return Ok(undetermined);
    }
    let seed = match *mode {
        EstimationMode::Sampled { seed, .. } => seed ^ 0x5167_6e5f_7369_676e,
        _ => {
            let re = zero_overlap(prep)?.re;
            let sign = if re > 0.0 {
                Sign::Positive
            } else if re < 0.0 {
                Sign::Negative
            } else {
                Sign::Undetermined
            };
            return Ok(SignEstimate { sign, ..undetermined });
        }
    };
    let width = prep.num_qubits();
    let mut c = Circuit::new(width + 1, QubitLayout::with_controls(prep.layout().main.len(), width - prep.layout().main.len(), 1))?;
    c.gate(Matrix2::ry(libm::atan2(1.0, cos_abs)), width, &[])?;
    c.append_mapped(prep, &(0..width).collect::<Vec<_>>(), false, &[Control::on(width)])?;
    let out = c.simulate_sparse(SparseState::zero(width + 1)?)?;
    let a0 = out.amplitude(&BasisKey::ZERO);
    let a1 = out.amplitude(&BasisKey::ZERO.flipped(width));
    let success = (a0.norm_sqr() + a1.norm_sqr()).min(1.0);
    let plus_given_success = if success > 0.0 { ((a0 + a1).norm_sqr() / 2.0 / success).min(1.0) } else { 0.0 };
    let trials = sign_trials(epsilon);
    record_repeats(prep, trials - 1, true);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut successes, mut plus) = (0u64, 0u64);
    for _ in 0..trials {
        if rng.random::<f64>() < success {
            successes += 1;
            if rng.random::<f64>() < plus_given_success {
                plus += 1;
            }
        }
    }
    let minus = successes - plus;
    let sign = if plus > minus {
        Sign::Positive
    } else if minus > plus {
        Sign::Negative
    } else {
        Sign::Undetermined
    };
    Ok(SignEstimate { sign, trials, successes, plus })
}

/// [`estimate_sign_of`] for the oracle's own preparation.
pub fn estimate_sign(oracle: &Arc<BlackBoxUnitary>, cos_abs: f64, epsilon: f64, mode: &EstimationMode) -> Result<SignEstimate> {
    estimate_sign_of(&Circuit::from_oracle(oracle, oracle.total_wires())?, cos_abs, epsilon, mode)
}

/// Cleanup rotation angle at chain step `n`: acos(c^n / sqrt(sum_{j<=n} c^{2j})).
///
/// The chain leaves amplitudes s, sc, ..., sc^(n-1) on orthogonal ancilla
/// patterns; the first n have already been merged into one of norm
/// s sqrt(sum_{j<n} c^{2j}), and the rotation folds s c^n into it.
pub fn theta_prime(n: usize, cos_theta: f64) -> Result<f64> {
    if n == 0 {
        return Err(argument!("rotation index starts at 1"));
    }
    if !cos_theta.is_finite() || cos_theta.abs() >= 1.0 {
        return Err(Error::Singular(alloc::format!("theta_prime needs |cos theta| < 1, got {cos_theta}")));
    }
    let c2 = cos_theta * cos_theta;
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 0..=n {
        sum += term;
        term *= c2;
    }
    let top = libm::pow(cos_theta, n as f64);
    Ok(libm::acos((top / libm::sqrt(sum)).clamp(-1.0, 1.0)))
}

/// Worst-case chain length: the smallest k with (1 - eps^2)^(k/2) <= eps.
pub fn iteration_cap(epsilon: f64) -> usize {
    libm::ceil(libm::log(epsilon) / libm::log(libm::sqrt(1.0 - epsilon * epsilon))) as usize
}

/// Chain length max(1, min(ceil(ln eps / ln |c|), cap)).
pub fn iteration_count(cos_abs: f64, epsilon: f64) -> usize {
    let cap = iteration_cap(epsilon).max(1);
    if cos_abs <= 0.0 {
        return 1;
    }
    if cos_abs >= 1.0 {
        return cap;
    }
    let k = libm::ceil(libm::log(epsilon) / libm::log(cos_abs));
    if !k.is_finite() || k > cap as f64 {
        cap
    } else {
        (k as usize).max(1)
    }
}

/// The chain on `prep`'s wires plus `k` ancillas: prep, then for each
/// ancilla a zero control onto it and (except for the last) a controlled
/// prep; then the cleanup rotations with the signed estimate `cos_theta`.
///
/// On |0> it yields s sqrt(sum_{j<k} c^{2j}) |psi'>|0^k> + c^k |0>|0^(k-1)1>
/// when the estimate is exact, where psi' is the normalized part of
/// prep|0> orthogonal to |0>.
pub fn build_chain(prep: &Circuit, cos_theta: f64, k: usize) -> Result<Circuit> {
    if k == 0 {
        return Err(argument!("the chain needs at least one ancilla"));
    }
    let width = prep.num_qubits();
    let main = prep.layout().main.len();
    let data: Vec<usize> = (0..width).collect();
    let anc = |j: usize| width + j - 1;
    let mut c = Circuit::new(width + k, QubitLayout::new(main, width + k - main))?;
    c.append_mapped(prep, &data, false, &[])?;
    for j in 1..=k {
        c.zero_control(&data, anc(j), &[])?;
        if j < k {
            c.append_mapped(prep, &data, false, &[Control::on(anc(j))])?;
        }
    }
    for i in 1..k {
        let angle = theta_prime(i, cos_theta)?;
        let (s, co) = libm::sincos(angle);
        c.rotation(c64(s, 0.0), c64(co, 0.0), anc(i), &[Control::off(anc(i + 1))])?;
        c.gate(Matrix2::x(), anc(i), &[Control::on(anc(i + 1))])?;
    }
    Ok(c)
}

/// Circuit preparing (approximately) the part of U|0> orthogonal to |0>.
/// Empty when the estimated sine is below `epsilon`.
pub fn build_orthogonal_component(oracle: &Arc<BlackBoxUnitary>, estimate: &AngleEstimate, epsilon: f64) -> Result<Circuit> {
    let prep = Circuit::from_oracle(oracle, oracle.total_wires())?;
    build_orthogonal_component_of(&prep, estimate, epsilon)
}

pub fn build_orthogonal_component_of(prep: &Circuit, estimate: &AngleEstimate, epsilon: f64) -> Result<Circuit> {
    check_epsilon(epsilon)?;
    let sine = libm::sqrt((1.0 - estimate.cos_abs * estimate.cos_abs).max(0.0));
    if sine < epsilon {
        return Circuit::new(prep.num_qubits(), prep.layout().clone());
    }
    if estimate.sign == Sign::Undetermined && estimate.cos_abs >= epsilon {
        return Err(contract!("sign of cos theta is needed when |cos theta| = {} >= epsilon = {epsilon}", estimate.cos_abs));
    }
    let k = iteration_count(estimate.cos_abs, epsilon);
    build_chain(prep, estimate.signed_cos(), k)
}

/// Norm of the chain output left on |0> of the data wires.
pub fn chain_residual(chain: &Circuit, data_width: usize) -> Result<f64> {
    Ok(chain_residual_truncated(chain, data_width, 0.0)?.0)
}

/// [`chain_residual`] under amplitude truncation, with the discarded norm.
pub fn chain_residual_truncated(chain: &Circuit, data_width: usize, truncation: f64) -> Result<(f64, f64)> {
    let (image, discarded) = chain.simulate_truncated(SparseState::zero(chain.num_qubits())?, truncation)?;
    let mask = BasisKey::mask(&(0..data_width).collect::<Vec<_>>());
    let residual = libm::sqrt(image.iter().filter(|(k, _)| k.and(&mask).is_zero()).map(|(_, a)| a.norm_sqr()).sum());
    Ok((residual, discarded))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeOptions {
    pub mode: EstimationMode,
    /// Random inputs for the leakage sweep.
    pub leakage_trials: usize,
    pub seed: u64,
    /// Skip the exact special cases.
    pub force_general: bool,
    /// Simulation drops amplitudes at or below this modulus (0 keeps all).
    /// Under an estimation error the chain cleanup spreads a small leaked
    /// norm over up to 2^k ancilla patterns; truncation keeps that tractable.
    pub truncation: f64,
}

impl Default for MergeOptions {
    fn default() -> Self {
        Self { mode: EstimationMode::ExactOracle, leakage_trials: 50, seed: 0, force_general: false, truncation: DEFAULT_TRUNCATION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MergePath {
    Exact(SpecialCase),
    /// Estimated sine below epsilon: only a sign fix is applied.
    Aligned,
    General,
}

impl MergePath {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact(case) => case.name(),
            Self::Aligned => "aligned",
            Self::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub epsilon: f64,
    pub path: MergePath,
    /// Trace distance of T|0^n> from |psi> (ancillas 0).
    pub distance_psi: f64,
    /// Trace distance of T|10^(n-1)> from |phi> (ancillas 0).
    pub distance_phi: f64,
    pub max_leakage: f64,
    pub leakage_trials: usize,
    /// Queries one run of the circuit makes.
    pub queries_u: QueryCounts,
    pub queries_v: QueryCounts,
    /// Queries spent on checks, case detection and estimation.
    pub estimation_queries_u: QueryCounts,
    pub estimation_queries_v: QueryCounts,
    pub iterations_k: usize,
    pub estimate: Option<AngleEstimate>,
    pub sign_trials: u64,
    /// Norm left on |0> of the data wires by the chain.
    pub residual_amplitude: f64,
    pub total_qubits: usize,
    /// Bound on the state error every reported figure carries from
    /// amplitude truncation.
    pub truncation_error: f64,
}

/// A constructed merge before measurement.
#[derive(Debug, Clone)]
pub struct MergeBuild {
    pub circuit: Circuit,
    pub path: MergePath,
    pub chain: Option<Circuit>,
    pub estimate: Option<AngleEstimate>,
    pub sign_trials: u64,
    pub iterations_k: usize,
    pub estimation_queries_u: QueryCounts,
    pub estimation_queries_v: QueryCounts,
    pub psi: PureState,
    pub phi: PureState,
    pub data_width: usize,
}

fn check_real(state: &PureState, name: &str) -> Result<()> {
    let worst = state.amplitudes().iter().map(|a| a.im.abs()).fold(0.0, f64::max);
    if worst > REAL_ATOL {
        return Err(contract!("the general merge needs real amplitudes; {name} has imaginary part {worst:.3e}"));
    }
    Ok(())
}

/// Builds the merge without measuring it. All contact with U and V goes
/// through their access modes.
pub fn build_general_merge(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, epsilon: f64, options: &MergeOptions) -> Result<MergeBuild> {
    check_epsilon(epsilon)?;
    let width = exact::shared_width(u, v)?;
    let n = u.num_qubits();
    let (u0, v0) = (u.query_counts(), v.query_counts());
    let psi = u.prepared_state()?;
    let phi = v.prepared_state()?;
    let overlap = psi.inner_product(&phi)?.norm();
    if overlap > crate::tolerance::ORTHOGONALITY_ATOL {
        return Err(contract!("target states must be orthogonal, |<psi|phi>| = {overlap:.3e}"));
    }
    let spent = |path, circuit, chain, estimate, sign_trials, k| MergeBuild {
        circuit,
        path,
        chain,
        estimate,
        sign_trials,
        iterations_k: k,
        estimation_queries_u: u.query_counts().since(&u0),
        estimation_queries_v: v.query_counts().since(&v0),
        psi: psi.clone(),
        phi: phi.clone(),
        data_width: width,
    };
    if !options.force_general {
        if let SpecialMerge::Exact { case, circuit } = exact::build_exact_merge_special(u, v)? {
            return Ok(spent(MergePath::Exact(case), circuit, None, None, 0, 0));
        }
    }
    check_real(&psi, "psi")?;
    check_real(&phi, "phi")?;

    // chi = X_0 U^-1 V|0>; <0|chi> = <10...0|omega>.
    let mut a = (*exact::relative_preparer(u, v, width)?).clone();
    a.gate(Matrix2::x(), 0, &[])?;
    let mut estimate = estimate_cos_squared_of(&a, &options.mode, epsilon)?;
    let sign = estimate_sign_of(&a, estimate.cos_abs, epsilon, &options.mode)?;
    estimate.sign = sign.sign;
    let c_hat = estimate.signed_cos();
    let s_hat = libm::sqrt((1.0 - c_hat * c_hat).max(0.0));

    let data: Vec<usize> = (0..width).collect();
    let u_wires: Vec<usize> = (0..u.total_wires()).collect();
    if s_hat < epsilon {
        let anc = width;
        let mut t = Circuit::new(width + 1, QubitLayout::new(n, width + 1 - n))?;
        if c_hat < 0.0 {
            t.gate(Matrix2::x(), 0, &[])?;
            t.zero_control(&data, anc, &[])?;
            t.gate(Matrix2::z(), anc, &[])?;
            t.zero_control(&data, anc, &[])?;
            t.gate(Matrix2::x(), 0, &[])?;
        }
        t.oracle(u, false, &u_wires, &[])?;
        return Ok(spent(MergePath::Aligned, t, None, Some(estimate), sign.trials, 0));
    }
    if sign.sign == Sign::Undetermined && estimate.cos_abs >= epsilon {
        return Err(contract!("sign detection failed for |cos theta| = {:.6} >= epsilon", estimate.cos_abs));
    }
    let k = iteration_count(estimate.cos_abs, epsilon);
    let chain = build_chain(&a, c_hat, k)?;
    let hardened = Arc::new(exact::harden(&Arc::new(chain.clone()))?);
    let hw = hardened.num_qubits();
    let total = hw + 2;
    let mut t = Circuit::new(total, QubitLayout::new(n, total - n))?;
    t.gate(Matrix2::x(), 0, &[])?;
    exact::append_superposition(&mut t, &hardened, c64(c_hat, 0.0), c64(s_hat, 0.0), &(0..hw).collect::<Vec<_>>(), hw, hw + 1)?;
    t.gate(Matrix2::x(), 0, &[])?;
    t.oracle(u, false, &u_wires, &[])?;
    Ok(spent(MergePath::General, t, Some(chain), Some(estimate), sign.trials, k))
}

/// Measures a built merge: target distances, leakage sweep and residual.
pub fn measure_merge(build: &MergeBuild, u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, epsilon: f64, options: &MergeOptions) -> Result<MergeReport> {
    let t = &build.circuit;
    let total = t.num_qubits();
    let n = build.psi.num_qubits();
    let run = |index: usize, target: &PureState| -> Result<(f64, f64)> {
        let input = SparseState::from_dense(&PureState::basis(n, index)?, total)?;
        let (out, discarded) = t.simulate_truncated(input, options.truncation)?;
        Ok((out.trace_distance(&SparseState::from_dense(target, total)?)?, discarded))
    };
    let (distance_psi, d0) = run(0, &build.psi)?;
    let (distance_phi, d1) = run(1, &build.phi)?;
    let mut truncation_error = d0.max(d1);
    let max_leakage = if options.leakage_trials > 0 {
        let sweep = verify::garbage_sweep_truncated(t, t.layout(), options.leakage_trials, options.seed, None, options.truncation)?;
        truncation_error = truncation_error.max(sweep.discarded);
        sweep.max_leakage
    } else {
        0.0
    };
    let residual_amplitude = match &build.chain {
        Some(chain) => {
            let (r, d) = chain_residual_truncated(chain, build.data_width, options.truncation)?;
            truncation_error = truncation_error.max(d);
            r
        }
        None => 0.0,
    };
    Ok(MergeReport {
        epsilon,
        path: build.path,
        distance_psi,
        distance_phi,
        max_leakage,
        leakage_trials: options.leakage_trials,
        queries_u: t.queries_of(u),
        queries_v: t.queries_of(v),
        estimation_queries_u: build.estimation_queries_u,
        estimation_queries_v: build.estimation_queries_v,
        iterations_k: build.iterations_k,
        estimate: build.estimate,
        sign_trials: build.sign_trials,
        residual_amplitude,
        total_qubits: total,
        truncation_error,
    })
}

/// Builds T with T|0^n> ~ psi and T|10^(n-1)> ~ phi within O(epsilon) and
/// measures it. Exactly solvable pairs are delegated to the special cases.
pub fn general_merge(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, epsilon: f64, options: &MergeOptions) -> Result<(Circuit, MergeReport)> {
    let build = build_general_merge(u, v, epsilon, options)?;
    let report = measure_merge(&build, u, v, epsilon, options)?;
    Ok((build.circuit, report))
}

/// One histogram bin of estimated angles for the cleanup bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBin {
    /// Squared amplitude of the estimation branches landing in this bin.
    pub weight: f64,
    /// Whether the bin lies within the estimator's precision of theta.
    pub in_range: bool,
    /// Trace distance between the bin's output and the ideal output.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanupBound {
    pub epsilon: f64,
    pub tail_mass: f64,
    /// Inner product after replacing the out-of-range outputs by the ideal.
    pub first_inner: f64,
    pub first_threshold: f64,
    pub first_distance: f64,
    /// Inner product after also replacing the in-range outputs.
    pub second_inner: f64,
    pub second_threshold: f64,
    pub second_distance: f64,
    /// max over in-range bins of distance^2 / eps^2.
    pub k_constant: f64,
    /// 2 eps sqrt(1 - eps^2) + sqrt(K) eps.
    pub bound: f64,
}

impl CleanupBound {
    pub fn holds(&self) -> bool {
        self.first_inner > self.first_threshold
            && self.second_inner >= self.second_threshold
            && self.first_distance + self.second_distance <= self.bound + 1e-12
    }
}

/// Evaluates the two perturbation inner products of the estimation cleanup
/// for a distribution of estimated angles.
pub fn verify_theta_cleanup_bound(bins: &[ThetaBin], epsilon: f64) -> Result<CleanupBound> {
    check_epsilon(epsilon)?;
    if bins.iter().any(|b| b.weight.is_nan() || b.weight < 0.0 || !(0.0..=1.0).contains(&b.distance)) {
        return Err(argument!("bin weights must be non-negative and distances in [0, 1]"));
    }
    let total: f64 = bins.iter().map(|b| b.weight).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(contract!("bin weights sum to {total}, expected 1"));
    }
    let eps2 = epsilon * epsilon;
    let tail_mass: f64 = bins.iter().filter(|b| !b.in_range).map(|b| b.weight).sum();
    if tail_mass > eps2 * (1.0 + 1e-12) {
        return Err(contract!("out-of-range mass {tail_mass} exceeds eps^2 = {eps2}"));
    }
    let overlap = |d: f64| libm::sqrt(1.0 - d * d);
    let first_inner: f64 = bins.iter().map(|b| if b.in_range { b.weight } else { b.weight * overlap(b.distance) }).sum();
    let second_inner: f64 = bins.iter().map(|b| if b.in_range { b.weight * overlap(b.distance) } else { b.weight }).sum();
    let k_constant = bins.iter().filter(|b| b.in_range).map(|b| b.distance * b.distance / eps2).fold(0.0, f64::max);
    let first_threshold = 1.0 - 2.0 * eps2;
    let second_threshold = libm::sqrt((1.0 - k_constant * eps2).max(0.0));
    let distance = |ip: f64| libm::sqrt((1.0 - ip * ip).max(0.0));
    Ok(CleanupBound {
        epsilon,
        tail_mass,
        first_inner,
        first_threshold,
        first_distance: distance(first_inner),
        second_inner,
        second_threshold,
        second_distance: distance(second_inner),
        k_constant,
        bound: 2.0 * epsilon * libm::sqrt(1.0 - eps2) + libm::sqrt(k_constant) * epsilon,
    })
}
