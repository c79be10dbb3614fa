use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cphase_bsa::experiment::{calibrate, run_experiment, ExperimentConfig};
use cphase_bsa::fock::{truth_table, Overlap};
use cphase_bsa::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Linear-optics CPHASE Bell-state analysis simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; defaults to the config's `output`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate counts, reconstruct states and report figures of merit.
    Run { config: PathBuf },
    /// Grid-search the noise parameters against the configured targets.
    Calibrate { config: PathBuf },
    /// Print the gate's action on the computational basis.
    GateTable {
        /// Photon wavepacket overlap.
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct TruthTableRow {
    input: String,
    output: String,
    amplitude_re: f64,
    amplitude_im: f64,
    success_probability: f64,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, path: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_output(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let config = load(&config, cli.seed)?;
            let out = cli.out.or_else(|| config.output.clone());
            let run = run_experiment(&config)?;
            match cli.format {
                Format::Json => {
                    write_json(&run.report, out.as_deref())?;
                    // counts go next to the report file
                    if let Some(path) = out {
                        run.counts
                            .write_csv(File::create(path.with_extension("counts.csv"))?)?;
                    }
                }
                Format::Csv => run.counts.write_csv(open_output(out.as_deref())?)?,
            }
        }
        Command::Calibrate { config } => {
            let config = load(&config, cli.seed)?;
            let result = calibrate(&config.calibration)?;
            match cli.format {
                Format::Json => write_json(&result, cli.out.as_deref())?,
                Format::Csv => write_csv(&result.grid, cli.out.as_deref())?,
            }
        }
        Command::GateTable { overlap } => {
            let v = Overlap::new(overlap).map_err(|e| Error::Config(format!("--overlap: {e}")))?;
            let rows: Vec<TruthTableRow> = truth_table(v)?
                .into_iter()
                .map(|r| TruthTableRow {
                    input: r.input,
                    output: r.output,
                    amplitude_re: r.amplitude.re,
                    amplitude_im: r.amplitude.im,
                    success_probability: r.success_probability,
                })
                .collect();
            match cli.format {
                Format::Json => write_json(&rows, cli.out.as_deref())?,
                Format::Csv => write_csv(&rows, cli.out.as_deref())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
