//! Sweeps over epsilon, the error-scaling experiment and the verify run.

use std::io::Write;
use std::sync::Arc;

use qmerge_core::merge::{build_general_merge, general_merge, EstimationMode, MergeOptions, MergeReport};
use qmerge_core::verify::{circuit_to_matrix, garbage_sweep_truncated, preparation_unitary, random_orthogonal_pair, random_state};
use qmerge_core::{BlackBoxUnitary, CMatrix, PureState, SparseState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{config, CliError, Result};
use crate::formats::{path_json, SCHEMA_VERSION};
use crate::oracle_file::OracleSpec;

/// Estimation mode selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeChoice {
    /// Hoeffding sampling; `None` takes precision eps^18 and failure eps^2.
    Sampled { precision: Option<f64>, failure: Option<f64> },
    Exact,
    /// |cos| offset by eps^power.
    Injected { power: i32 },
}

impl ModeChoice {
    pub fn for_epsilon(&self, epsilon: f64, seed: u64) -> EstimationMode {
        match *self {
            Self::Sampled { precision, failure } => {
                let EstimationMode::Sampled { precision: p, failure: f, .. } = EstimationMode::sampled_literal(epsilon, seed) else {
                    unreachable!("sampled_literal returns the sampled mode")
                };
                EstimationMode::Sampled { seed, precision: precision.unwrap_or(p), failure: failure.unwrap_or(f) }
            }
            Self::Exact => EstimationMode::ExactOracle,
            Self::Injected { power } => EstimationMode::InjectedError { offset: epsilon.powi(power) },
        }
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(config(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// One sweep point. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub instance: usize,
    pub epsilon: f64,
    pub path: String,
    pub distance_psi: f64,
    pub distance_phi: f64,
    pub max_leakage: f64,
    pub queries_u: u64,
    pub queries_v: u64,
    pub estimation_queries_u: u64,
    pub estimation_queries_v: u64,
    pub k: usize,
    pub residual_amplitude: f64,
    pub truncation_error: f64,
}

pub const SWEEP_COLUMNS: &str = "n,instance,epsilon,path,distance_psi,distance_phi,max_leakage,queries_u,queries_v,\
estimation_queries_u,estimation_queries_v,k,residual_amplitude,truncation_error";

impl SweepRow {
    pub fn new(n: usize, instance: usize, r: &MergeReport) -> Self {
        Self {
            n,
            instance,
            epsilon: r.epsilon,
            path: r.path.name().to_owned(),
            distance_psi: r.distance_psi,
            distance_phi: r.distance_phi,
            max_leakage: r.max_leakage,
            queries_u: r.queries_u.total(),
            queries_v: r.queries_v.total(),
            estimation_queries_u: r.estimation_queries_u.total(),
            estimation_queries_v: r.estimation_queries_v.total(),
            k: r.iterations_k,
            residual_amplitude: r.residual_amplitude,
            truncation_error: r.truncation_error,
        }
    }

    /// Worst of the three error figures over epsilon.
    pub fn ratio(&self) -> f64 {
        self.distance_psi.max(self.distance_phi).max(self.max_leakage) / self.epsilon
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| config(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| config(format!("csv: {e}")))?;
    Ok(())
}

pub fn csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

/// Maps `f` over `items` on at most `jobs` threads, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub mode: ModeChoice,
    pub seed: u64,
    pub trials: usize,
    pub force_general: bool,
    pub jobs: usize,
}

impl SweepConfig {
    fn options(&self, epsilon: f64) -> MergeOptions {
        MergeOptions {
            mode: self.mode.for_epsilon(epsilon, self.seed),
            leakage_trials: self.trials,
            seed: self.seed,
            force_general: self.force_general,
            ..Default::default()
        }
    }
}

/// Merges one oracle pair at every epsilon. Each point gets fresh oracles,
/// so query counts never mix across threads.
pub fn sweep_oracles(u: &OracleSpec, v: &OracleSpec, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    for &e in &cfg.epsilons {
        check_epsilon(e)?;
    }
    parallel_map(&cfg.epsilons, cfg.jobs, |&epsilon| {
        let (uo, vo) = (u.instantiate("U")?, v.instantiate("V")?);
        let (_, report) = general_merge(&uo, &vo, epsilon, &cfg.options(epsilon))?;
        Ok(SweepRow::new(uo.num_qubits(), 0, &report))
    })
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub ns: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    /// Injected |cos| error is eps^offset_power.
    pub offset_power: i32,
    pub trials: usize,
    pub jobs: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { ns: vec![1, 2, 3], epsilons: vec![0.3, 0.2, 0.1], instances: 30, seed: 0, offset_power: 9, trials: 20, jobs: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingSummary {
    pub rows: Vec<SweepRow>,
    /// Smallest C with every distance and leakage at most C * epsilon.
    pub constant: f64,
    pub worst_truncation: f64,
}

/// Random real orthogonal pair and preparation matrices for one instance.
/// Depends only on (seed, n, instance).
pub fn scaling_instance(seed: u64, n: usize, instance: usize) -> Result<(CMatrix, CMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ instance as u64);
    let (psi, phi) = random_orthogonal_pair(n, true, &mut rng)?;
    Ok((preparation_unitary(&psi, true, &mut rng)?, preparation_unitary(&phi, true, &mut rng)?))
}

/// The general pipeline (special cases skipped) on random real pairs with
/// an injected estimation error, over the n x epsilon x instance grid.
/// Rows come out ordered by n, instance, then epsilon.
pub fn scaling_experiment(cfg: &ScalingConfig) -> Result<ScalingSummary> {
    for &e in &cfg.epsilons {
        check_epsilon(e)?;
    }
    if cfg.ns.iter().any(|&n| n == 0 || n > 8) {
        return Err(config("scaling experiment supports 1 <= n <= 8"));
    }
    let mut points = Vec::new();
    for &n in &cfg.ns {
        for instance in 0..cfg.instances {
            for &epsilon in &cfg.epsilons {
                points.push((n, instance, epsilon));
            }
        }
    }
    let rows = parallel_map(&points, cfg.jobs, |&(n, instance, epsilon)| {
        let (mu, mv) = scaling_instance(cfg.seed, n, instance)?;
        let u = BlackBoxUnitary::from_matrix("U", mu)?;
        let v = BlackBoxUnitary::from_matrix("V", mv)?;
        let opts = MergeOptions {
            mode: EstimationMode::InjectedError { offset: epsilon.powi(cfg.offset_power) },
            leakage_trials: cfg.trials,
            seed: cfg.seed,
            force_general: true,
            ..Default::default()
        };
        let (_, report) = general_merge(&u, &v, epsilon, &opts)?;
        Ok(SweepRow::new(n, instance, &report))
    })?;
    let constant = rows.iter().map(SweepRow::ratio).fold(0.0, f64::max);
    let worst_truncation = rows.iter().map(|r| r.truncation_error).fold(0.0, f64::max);
    Ok(ScalingSummary { rows, constant, worst_truncation })
}

/// One verify trial. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub seed: u64,
    pub trial: usize,
    pub leakage: f64,
    pub distance: f64,
}

pub const VERIFY_COLUMNS: &str = "seed,trial,leakage,distance";

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub rows: Vec<VerifyRow>,
    pub summary: Value,
}

/// Garbage sweep plus target check of the merge for one epsilon.
///
/// Trial i records the ancilla leakage on a random input over the whole
/// data register, and the trace distance between the output on a random
/// input a|0^n> + b|10^(n-1)> and a|psi> + b|phi>. Circuits of at most 12
/// wires are also expanded to matrices and their pinned columns compared.
pub fn verify_merge(u: &Arc<BlackBoxUnitary>, v: &Arc<BlackBoxUnitary>, epsilon: f64, options: &MergeOptions) -> Result<VerifyOutcome> {
    check_epsilon(epsilon)?;
    if options.leakage_trials == 0 {
        return Err(config("verify needs at least one trial"));
    }
    let build = build_general_merge(u, v, epsilon, options)?;
    let t = &build.circuit;
    let total = t.num_qubits();
    let n = build.psi.num_qubits();
    let sweep = garbage_sweep_truncated(t, t.layout(), options.leakage_trials, options.seed, None, options.truncation)?;

    let mut discarded = sweep.discarded;
    let mut outs = Vec::new();
    for index in [0, 1] {
        let input = SparseState::from_dense(&PureState::basis(n, index)?, total)?;
        let (out, d) = t.simulate_truncated(input, options.truncation)?;
        discarded = discarded.max(d);
        outs.push(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5eed_0fd1);
    let mut rows = Vec::with_capacity(sweep.records.len());
    for rec in &sweep.records {
        let ab = random_state(1, false, &mut rng)?;
        let (a, b) = (ab.amplitude(0), ab.amplitude(1));
        let expected: Vec<_> = build.psi.amplitudes().iter().zip(build.phi.amplitudes()).map(|(p, f)| a * p + b * f).collect();
        let expected = SparseState::from_dense(&PureState::from_amplitudes(expected)?, total)?;
        let output = SparseState::linear_combination(&[(a, &outs[0]), (b, &outs[1])])?;
        rows.push(VerifyRow { seed: options.seed, trial: rec.trial, leakage: rec.leakage, distance: output.trace_distance(&expected)? });
    }

    let matrix = if total <= 12 {
        let cm = circuit_to_matrix(t, true)?;
        let m = &cm.matrix;
        let pinned = [&build.psi, &build.phi]
            .iter()
            .enumerate()
            .flat_map(|(col, target)| (0..1usize << n).map(move |row| (m[(row, col)] - target.amplitude(row)).norm()))
            .fold(0.0, f64::max);
        json!({"pinned_column_error": pinned, "basis_leakage": cm.max_leakage()})
    } else {
        Value::Null
    };
    let max_distance = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    let summary = json!({
        "version": SCHEMA_VERSION,
        "epsilon": epsilon,
        "seed": options.seed,
        "trials": rows.len(),
        "path": path_json(&build.path),
        "total_qubits": total,
        "max_leakage": sweep.max_leakage,
        "max_distance": max_distance,
        "matrix": matrix,
        "truncation_error": discarded,
    });
    Ok(VerifyOutcome { rows, summary })
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| config(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| config(format!("csv: {e}")))?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let wrap = |source| CliError::Write { path: path.to_owned(), source };
    std::fs::write(&tmp, bytes).map_err(wrap)?;
    std::fs::rename(&tmp, path).map_err(wrap)
}
