use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use weakrand_qkd::channel::simulate_link;
use weakrand_qkd::ingest::{epsilon1_by_temperature, read_epsilon1_table, read_measurements};
use weakrand_qkd::keyrate::{sps_rate, wps_rate};
use weakrand_qkd::oracle::verify_bounds;
use weakrand_qkd::report::{
    format_sig, write_certification_csv, write_epsilon1_csv, write_sweep_csv, write_table1_csv,
};
use weakrand_qkd::search::{self, SweepSpec, SweepVariable};
use weakrand_qkd::{Error, KeyRateReport};

use crate::config::{ModelArgs, SourceArg};
use crate::{CertificationFailed, UsageError};

/// Secret-key rates for BB84 with weak basis-choice randomness.
#[derive(Debug, Parser)]
#[command(name = "weakrand", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one operating point.
    Keyrate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        /// Bit-error rate (single-photon source).
        #[arg(long)]
        ebit: Option<f64>,
        /// Fiber length in km (weak coherent source).
        #[arg(long)]
        distance: Option<f64>,
        /// Also write a one-row CSV report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rate curves for all bound methods plus the flawless reference.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "bit-error")]
        variable: VariableArg,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// Worker threads (0 = rayon default). Output does not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Highest tolerable bit-error rate for a single-photon source.
    TolerableError {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Longest fiber with positive key for a weak coherent source.
    MaxDistance {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// γ degradation table from a temperature → ε1 CSV.
    Table1 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "FILE")]
        eps1_file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Brute-force certification of both phase-error bounds on a strategy grid.
    VerifyBounds {
        #[command(flatten)]
        model: ModelArgs,
        /// Lattice step of the Pauli-mixture simplex.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Counterexample CSV (header only when none are found).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-temperature ε1 from beam-splitter power measurements.
    Ingest {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariableArg {
    BitError,
    Distance,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Keyrate {
            model,
            source,
            ebit,
            distance,
            output,
        } => keyrate(&model, source, ebit, distance, output.as_deref()),
        Command::Sweep {
            model,
            variable,
            lo,
            hi,
            steps,
            threads,
            output,
        } => {
            let cfg = model.resolve(None)?;
            let (variable, source) = match variable {
                VariableArg::BitError => (SweepVariable::BitError, weakrand_qkd::SourceSpec::Sps),
                VariableArg::Distance => (SweepVariable::DistanceKm, cfg.wps_source()),
            };
            let spec = SweepSpec {
                variable,
                lo,
                hi,
                steps,
                flaw: cfg.flaw,
                source,
                params: cfg.params,
            };
            let rows = with_threads(threads, || search::sweep(&spec))?;
            emit(output.as_deref(), |w| write_sweep_csv(w, &rows))?;
            if output.is_some() {
                println!("wrote {} rows", rows.len());
            }
            Ok(())
        }
        Command::TolerableError { model } => {
            let cfg = model.resolve(Some(SourceArg::Sps))?;
            match search::max_tolerable_error(&cfg.flaw, cfg.method) {
                Ok(e) => {
                    println!("method: {}", cfg.method);
                    println!("max_tolerable_error: {}", format_sig(e));
                    Ok(())
                }
                Err(Error::NoPositiveRate(msg)) => {
                    println!("method: {}", cfg.method);
                    println!("no key: {msg}");
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::MaxDistance { model } => {
            let cfg = model.resolve(Some(SourceArg::Wps))?;
            match search::max_distance(&cfg.flaw, cfg.method, &cfg.wps_source(), &cfg.params) {
                Ok(l) => {
                    println!("method: {}", cfg.method);
                    println!("max_distance_km: {}", format_sig(l));
                    Ok(())
                }
                Err(Error::NoPositiveRate(msg)) => {
                    println!("method: {}", cfg.method);
                    println!("no key: {msg}");
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Table1 {
            model,
            eps1_file,
            output,
        } => {
            let cfg = model.resolve(Some(SourceArg::Wps))?;
            let file = open_input(&eps1_file)?;
            let eps = read_epsilon1_table(file, &eps1_file.display().to_string())?;
            let rows = search::table1(&eps, &cfg.wps_source(), &cfg.params)?;
            emit(output.as_deref(), |w| write_table1_csv(w, &rows))
        }
        Command::VerifyBounds {
            model,
            step,
            threads,
            output,
        } => {
            let cfg = model.resolve(None)?;
            let cert = with_threads(threads, || verify_bounds(&cfg.flaw, step))?;
            if let Some(path) = output.as_deref() {
                emit(Some(path), |w| write_certification_csv(w, &cert.counterexamples))?;
            }
            println!(
                "eps0 = {}, eps1 = {}, step = {}: {} strategies checked, {} counterexamples",
                cfg.flaw.epsilon0(),
                cfg.flaw.epsilon1(),
                step,
                cert.checked,
                cert.counterexamples.len()
            );
            println!("tight bound above original at {} points", cert.tight_looser);
            println!(
                "max |matrix - closed form| = {}",
                format_sig(cert.max_closed_form_gap)
            );
            if cert.passed() {
                Ok(())
            } else {
                Err(CertificationFailed(cert.counterexamples.len()).into())
            }
        }
        Command::Ingest { input, output } => {
            let file = open_input(&input)?;
            let records = read_measurements(file, &input.display().to_string())?;
            let table = epsilon1_by_temperature(&records)?;
            emit(output.as_deref(), |w| write_epsilon1_csv(w, &table))
        }
    }
}

fn keyrate(
    model: &ModelArgs,
    source: Option<SourceArg>,
    ebit: Option<f64>,
    distance: Option<f64>,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let cfg = model.resolve(source)?;
    let report: KeyRateReport = match cfg.source {
        SourceArg::Sps => {
            let e = ebit.ok_or_else(|| UsageError("--ebit is required for --source sps".into()))?;
            sps_rate(e, &cfg.flaw, cfg.method)?
        }
        SourceArg::Wps => {
            let l = distance
                .ok_or_else(|| UsageError("--distance is required for --source wps".into()))?;
            let obs = simulate_link(l, &cfg.wps_source(), &cfg.params)?;
            wps_rate(&obs, &cfg.flaw, cfg.method, &cfg.params)?
        }
    };
    println!("source: {}", report.source_kind);
    println!("method: {}", report.method);
    println!("bit_error: {}", format_sig(report.bit_error));
    println!("phase_estimate: {}", format_sig(report.phase_estimate));
    println!("raw_rate: {}", format_sig(report.raw_rate));
    println!("rate: {}", format_sig(report.rate()));
    if !report.has_key() {
        println!("no key: rate lower bound is not positive at this operating point");
    }
    if let Some(path) = output {
        emit(Some(path), |w| {
            writeln!(w, "source,method,bit_error,phase_estimate,raw_rate,rate")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                report.source_kind,
                report.method,
                format_sig(report.bit_error),
                format_sig(report.phase_estimate),
                format_sig(report.raw_rate),
                format_sig(report.rate())
            )?;
            Ok(())
        })?;
    }
    Ok(())
}

fn open_input(path: &Path) -> anyhow::Result<File> {
    File::open(path)
        .map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())).into())
}

/// Writes to `path`, or to stdout when absent.
fn emit<F>(path: Option<&Path>, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> weakrand_qkd::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| UsageError(format!("cannot create {}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn with_threads<T: Send>(
    threads: usize,
    f: impl FnOnce() -> weakrand_qkd::Result<T> + Send,
) -> anyhow::Result<T> {
    if threads == 0 {
        return Ok(f()?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f)?)
}
