//! `qchan` — certify quantum channels, compute spectral gaps and contraction
//! rates, simulate relaxation orbits, and batch-verify entropy-production
//! bounds.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qchan::cli::{
    self, AnalyzeOptions, ChannelSpec, SimulateOptions, VerifyFamily, VerifyOptions,
};
use qchan::error::{Error, Result};
use qchan::io::{to_json_string, write_json_file, ErrorJson};
use qchan::mat::Tolerances;

#[derive(Parser)]
#[command(
    name = "qchan",
    version,
    about = "Spectral and entropy-production analysis of quantum channels in Kraus form"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Channel JSON file ({"dim": N, "kraus": [[[ [re,im], ... ]]]}).
    #[arg(long, conflicts_with = "family")]
    channel: Option<PathBuf>,

    /// Generator family: depolarizing | unitary_mixture.
    #[arg(long)]
    family: Option<String>,

    /// Hilbert-space dimension for generated channels.
    #[arg(long, default_value_t = 2)]
    dim: usize,

    /// Depolarizing probability in [0,1].
    #[arg(long)]
    p: Option<f64>,

    /// Number of unitaries in a mixture.
    #[arg(long, default_value_t = 4)]
    k: usize,
}

impl SourceArgs {
    fn to_spec(&self, seed: u64) -> Result<ChannelSpec> {
        match (&self.channel, self.family.as_deref()) {
            (Some(path), None) => Ok(ChannelSpec::File(path.clone())),
            (None, Some("depolarizing")) => {
                let p = self.p.ok_or_else(|| {
                    Error::InvalidParameter("depolarizing family needs --p".into())
                })?;
                Ok(ChannelSpec::Depolarizing { dim: self.dim, p })
            }
            (None, Some("unitary_mixture")) => Ok(ChannelSpec::UnitaryMixture {
                dim: self.dim,
                k: self.k,
                seed,
            }),
            (None, Some(other)) => Err(Error::InvalidParameter(format!(
                "unknown family {other:?} (expected depolarizing or unitary_mixture)"
            ))),
            (None, None) => Err(Error::InvalidParameter(
                "need either --channel PATH or --family NAME".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

#[derive(Args)]
struct TolArgs {
    /// Hermiticity residual tolerance.
    #[arg(long)]
    tol_herm: Option<f64>,
    /// Unit-trace tolerance.
    #[arg(long)]
    tol_trace: Option<f64>,
    /// Positivity tolerance.
    #[arg(long)]
    tol_psd: Option<f64>,
    /// Eigenvalue/singular-value assertion tolerance.
    #[arg(long)]
    tol_eig: Option<f64>,
    /// Fixed-point/completeness residual tolerance.
    #[arg(long)]
    tol_fix: Option<f64>,
}

impl TolArgs {
    fn to_tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_herm {
            tol.tol_herm = v;
        }
        if let Some(v) = self.tol_trace {
            tol.tol_trace = v;
        }
        if let Some(v) = self.tol_psd {
            tol.tol_psd = v;
        }
        if let Some(v) = self.tol_eig {
            tol.tol_eig = v;
        }
        if let Some(v) = self.tol_fix {
            tol.tol_fix = v;
        }
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify a channel and compute its gap, contraction rate and bounds.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
        /// Run seed (drives generation, the optimizer, audit and probes).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optimizer restarts for the contraction estimate.
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Random traceless inputs in the contraction audit.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Probe states for the entropy-production checks.
        #[arg(long, default_value_t = 5)]
        states: usize,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Iterate T̂ on an initial state and log relaxation metrics as CSV.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        /// Initial state: pure_0 | maximally_mixed | random:SEED | a state
        /// JSON file.
        #[arg(long, default_value = "pure_0")]
        state: String,
        /// Number of applications of T̂.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the summary JSON here (default: stdout if the CSV went to a
        /// file, stderr otherwise).
        #[arg(long)]
        summary_out: Option<PathBuf>,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Batch-verify entropy-production bounds over a seeded ensemble.
    Verify {
        /// Ensemble family: qubit_random | unitary_mixture | depolarizing |
        /// qubit_product.
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Number of channels (ignored by the depolarizing p-grid).
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Random states per channel.
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Single depolarizing probability (default: grid 0.1..0.9).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Audit trials for product channels.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tols: TolArgs,
    },
    /// Generate a channel file for a named family.
    Gen {
        /// Generator family: depolarizing | unitary_mixture.
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tols: TolArgs,
    },
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_json_file(value, path),
        None => {
            print!("{}", to_json_string(value)?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze {
            source,
            seed,
            restarts,
            trials,
            states,
            out,
            tols,
        } => {
            let tol = tols.to_tolerances()?;
            let spec = source.to_spec(seed)?;
            let opts = AnalyzeOptions {
                restarts,
                trials,
                probe_states: states,
                seed,
            };
            let started = Instant::now();
            let (report, exit) = cli::run_analyze(&spec, &opts, &tol)?;
            emit(&report, out.as_ref())?;
            eprintln!(
                "[qchan] analyze finished in {} ms (timing excluded from the report)",
                started.elapsed().as_millis()
            );
            Ok(exit)
        }
        Command::Simulate {
            source,
            state,
            steps,
            seed,
            out,
            summary_out,
            tols,
        } => {
            let tol = tols.to_tolerances()?;
            let spec = source.to_spec(seed)?;
            let opts = SimulateOptions { steps, state, seed };
            let (csv, summary, exit) = cli::run_simulate(&spec, &opts, &tol)?;
            match &out {
                Some(path) => fs::write(path, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            match (&summary_out, &out) {
                (Some(path), _) => write_json_file(&summary, path)?,
                (None, Some(_)) => print!("{}", to_json_string(&summary)?),
                (None, None) => eprint!("{}", to_json_string(&summary)?),
            }
            Ok(exit)
        }
        Command::Verify {
            family,
            dim,
            k,
            count,
            states,
            p,
            seed,
            trials,
            out,
            tols,
        } => {
            let tol = tols.to_tolerances()?;
            let opts = VerifyOptions {
                family: VerifyFamily::parse(&family)?,
                dim,
                k,
                count,
                states,
                p,
                seed,
                trials,
            };
            let started = Instant::now();
            let (report, exit) = cli::run_verify(&opts, &tol)?;
            emit(&report, out.as_ref())?;
            eprintln!(
                "[qchan] verify ran {} checks over {} channels in {} ms",
                report.checks_run,
                report.channels_run,
                started.elapsed().as_millis()
            );
            Ok(exit)
        }
        Command::Gen {
            family,
            dim,
            p,
            k,
            seed,
            out,
            tols,
        } => {
            let tol = tols.to_tolerances()?;
            let source = SourceArgs {
                channel: None,
                family: Some(family),
                dim,
                p,
                k,
            };
            let spec = source.to_spec(seed)?;
            let json = cli::run_gen(&spec, &tol)?;
            emit(&json, out.as_ref())?;
            Ok(cli::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let payload = ErrorJson {
                error: e.to_string(),
                exit_code: e.exit_code(),
            };
            let text = serde_json::to_string(&payload)
                .unwrap_or_else(|_| format!("{{\"error\":\"{e}\"}}"));
            let mut stderr = std::io::stderr();
            let _ = writeln!(stderr, "{text}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
