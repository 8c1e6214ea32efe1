//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmerge_core::merge::{general_merge, MergeOptions, MergeReport};

use crate::demo::run_demo;
use crate::error::{config, CliError, Result};
use crate::experiment::{
    check_epsilon, csv_bytes, scaling_experiment, sweep_oracles, verify_merge, write_atomic, write_verify_csv, ModeChoice, ScalingConfig, SweepConfig,
    SweepRow, SWEEP_COLUMNS, VERIFY_COLUMNS,
};
use crate::formats::{circuit_json, report_json, to_text};
use crate::oracle_file::OracleSpec;

const EXIT_CODES: &str = "Exit codes: 0 ok, 2 config error, 3 contract violation, 4 infeasible estimation.";

#[derive(Debug, Parser)]
#[command(name = "qmerge", version, about = "Merge two black-box state preparations into one garbage-free circuit", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the swap (U = I, V = X) and superposition (U = H) examples step by step.
    Demo,
    /// Build the merge for one epsilon.
    ///
    /// With --out DIR, writes DIR/circuit.json and DIR/report.json.
    Merge(MergeArgs),
    /// Garbage sweep and target check of the merge for one epsilon.
    ///
    /// With --out DIR, writes DIR/verify.csv (columns: seed,trial,leakage,distance)
    /// and DIR/verify.json. Trial i records the ancilla leakage on a random
    /// data input and the trace distance on a random input a|0..0> + b|10..0>.
    Verify(MergeArgs),
    /// Repeat the merge over an epsilon list.
    ///
    /// With --out DIR, writes DIR/sweep.csv with columns
    /// n,instance,epsilon,path,distance_psi,distance_phi,max_leakage,queries_u,queries_v,
    /// estimation_queries_u,estimation_queries_v,k,residual_amplitude,truncation_error.
    /// queries_* count one run of the circuit; estimation_queries_* the
    /// queries spent before building it. Rows are in epsilon order.
    /// Without oracles, --random-n runs the scaling experiment on random real
    /// pairs (general pipeline, injected error eps^9), ordered by n,
    /// instance, epsilon.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Hoeffding sampling of the overlap.
    Sampled,
    /// Exact overlap.
    Exact,
    /// Exact overlap plus an offset of eps^--offset-power.
    Injected,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Estimation mode.
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random inputs for the leakage sweep.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the exact special cases.
    #[arg(long)]
    pub force_general: bool,
    /// Injected mode offsets |cos| by eps^POWER.
    #[arg(long, default_value_t = 9)]
    pub offset_power: i32,
    /// Sampled mode precision (default eps^18).
    #[arg(long)]
    pub precision: Option<f64>,
    /// Sampled mode failure probability (default eps^2).
    #[arg(long)]
    pub failure: Option<f64>,
}

impl Common {
    fn mode(&self) -> ModeChoice {
        match self.mode {
            Mode::Sampled => ModeChoice::Sampled { precision: self.precision, failure: self.failure },
            Mode::Exact => ModeChoice::Exact,
            Mode::Injected => ModeChoice::Injected { power: self.offset_power },
        }
    }
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Oracle JSON for U (prepares psi).
    #[arg(long)]
    pub oracle_u: PathBuf,
    /// Oracle JSON for V (prepares phi).
    #[arg(long)]
    pub oracle_v: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, requires = "oracle_v", conflicts_with = "random_n")]
    pub oracle_u: Option<PathBuf>,
    #[arg(long, requires = "oracle_u")]
    pub oracle_v: Option<PathBuf>,
    /// Comma-separated epsilon list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilon: Vec<f64>,
    /// Register sizes for the scaling experiment (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub random_n: Vec<usize>,
    /// Random pairs per register size.
    #[arg(long, default_value_t = 30)]
    pub instances: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

fn load_pair(u: &Path, v: &Path) -> Result<(OracleSpec, OracleSpec)> {
    Ok((OracleSpec::load(u)?, OracleSpec::load(v)?))
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_owned(), source })
}

fn options(args: &MergeArgs) -> MergeOptions {
    let c = &args.common;
    MergeOptions {
        mode: c.mode().for_epsilon(args.epsilon, c.seed),
        leakage_trials: c.trials,
        seed: c.seed,
        force_general: c.force_general,
        ..Default::default()
    }
}

fn report_table(r: &MergeReport) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22}{v}\n"));
    line("epsilon", r.epsilon.to_string());
    line("path", r.path.name().to_owned());
    line("distance_psi", format!("{:.3e}", r.distance_psi));
    line("distance_phi", format!("{:.3e}", r.distance_phi));
    line("max_leakage", format!("{:.3e} over {} inputs", r.max_leakage, r.leakage_trials));
    line("queries U / V", format!("{} / {}", r.queries_u.total(), r.queries_v.total()));
    line("estimation U / V", format!("{} / {}", r.estimation_queries_u.total(), r.estimation_queries_v.total()));
    line("k", r.iterations_k.to_string());
    line("residual_amplitude", format!("{:.3e}", r.residual_amplitude));
    line("total_qubits", r.total_qubits.to_string());
    line("truncation_error", format!("{:.3e}", r.truncation_error));
    s
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = format!("{:>3} {:>5} {:>8} {:<22} {:>11} {:>11} {:>11} {:>5}\n", "n", "inst", "epsilon", "path", "dist_psi", "dist_phi", "leakage", "k");
    for r in rows {
        s.push_str(&format!(
            "{:>3} {:>5} {:>8} {:<22} {:>11.3e} {:>11.3e} {:>11.3e} {:>5}\n",
            r.n, r.instance, r.epsilon, r.path, r.distance_psi, r.distance_phi, r.max_leakage, r.k
        ));
    }
    s
}

/// Runs one command, writing the human-readable output to `stdout`.
pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<()> {
    let mut print = |s: &str| stdout.write_all(s.as_bytes()).map_err(|source| CliError::Write { path: "<stdout>".into(), source });
    match cli.command {
        Command::Demo => {
            let (text, _) = run_demo()?;
            print(&text)
        }
        Command::Merge(args) => {
            check_epsilon(args.epsilon)?;
            let (u, v) = load_pair(&args.oracle_u, &args.oracle_v)?;
            let (u, v) = (u.instantiate("U")?, v.instantiate("V")?);
            let (circuit, report) = general_merge(&u, &v, args.epsilon, &options(&args))?;
            if let Some(dir) = &args.common.out {
                out_dir(dir)?;
                write_atomic(&dir.join("circuit.json"), to_text(&circuit_json(&circuit)).as_bytes())?;
                write_atomic(&dir.join("report.json"), to_text(&report_json(&report)).as_bytes())?;
            }
            print(&report_table(&report))
        }
        Command::Verify(args) => {
            let (u, v) = load_pair(&args.oracle_u, &args.oracle_v)?;
            let (u, v) = (u.instantiate("U")?, v.instantiate("V")?);
            let outcome = verify_merge(&u, &v, args.epsilon, &options(&args))?;
            if let Some(dir) = &args.common.out {
                out_dir(dir)?;
                let mut csv = Vec::new();
                write_verify_csv(&outcome.rows, &mut csv)?;
                write_atomic(&dir.join("verify.csv"), &csv)?;
                write_atomic(&dir.join("verify.json"), to_text(&outcome.summary).as_bytes())?;
            }
            print(&to_text(&outcome.summary))
        }
        Command::Sweep(args) => {
            let c = &args.common;
            if args.jobs == 0 {
                return Err(config("--jobs must be at least 1"));
            }
            let rows = match (&args.oracle_u, &args.oracle_v) {
                (Some(pu), Some(pv)) => {
                    let (u, v) = load_pair(pu, pv)?;
                    let cfg = SweepConfig {
                        epsilons: args.epsilon.clone(),
                        mode: c.mode(),
                        seed: c.seed,
                        trials: c.trials,
                        force_general: c.force_general,
                        jobs: args.jobs,
                    };
                    sweep_oracles(&u, &v, &cfg)?
                }
                _ if !args.random_n.is_empty() => {
                    if c.mode != Mode::Injected {
                        return Err(config("the scaling experiment runs in --mode injected"));
                    }
                    let cfg = ScalingConfig {
                        ns: args.random_n.clone(),
                        epsilons: args.epsilon.clone(),
                        instances: args.instances,
                        seed: c.seed,
                        offset_power: c.offset_power,
                        trials: c.trials,
                        jobs: args.jobs,
                    };
                    let summary = scaling_experiment(&cfg)?;
                    print(&format!("C = {:.4} (max of distance and leakage over epsilon)\n", summary.constant))?;
                    summary.rows
                }
                _ => return Err(config("sweep needs --oracle-u and --oracle-v, or --random-n")),
            };
            if let Some(dir) = &c.out {
                out_dir(dir)?;
                write_atomic(&dir.join("sweep.csv"), &csv_bytes(&rows)?)?;
            }
            print(&sweep_table(&rows))
        }
    }
}

/// Column lists as documented in --help, for tests.
pub fn documented_columns() -> [&'static str; 2] {
    [SWEEP_COLUMNS, VERIFY_COLUMNS]
}
