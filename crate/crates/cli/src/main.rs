use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use distill_cli::{
    cache_path, parse_objective, parse_perm_set, run_sweep, run_verify, security_report,
    write_records, CliError, FamilyList, FiniteOptions, Grid, NoiseModel, OutputFormat, RunConfig,
    EXIT_VERIFY,
};
use distill_core::{build_transversal, read_transversal, write_transversal};

#[derive(Parser)]
#[command(
    name = "distill",
    version,
    about = "Bi-local Clifford entanglement distillation + advantage distillation: \
             protocol enumeration, key-rate sweeps, and QKD security bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or verify, if present) the protocol transversal cache for m pairs.
    Transversal {
        /// Number of input pairs, 1..=4.
        #[arg(long)]
        m: usize,
        /// Explicit output path; defaults to <cache>/transversal_m<m>.blct.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cache directory.
        #[arg(long, env = "DISTILL_CACHE_DIR", default_value = "cache")]
        cache: PathBuf,
    },
    /// Sweep the optimal protocol per family over a fidelity grid.
    Sweep {
        /// Input noise model: werner | dephasing.
        #[arg(long)]
        noise: NoiseModel,
        /// Comma-separated families (e.g. 2-1,3-2-1) or "all".
        #[arg(long, default_value = "all")]
        families: FamilyList,
        /// Search objective: fidelity | keyrate.
        #[arg(long, value_parser = parse_objective, default_value = "keyrate")]
        objective: distill_core::Objective,
        /// Intermediate fix-up set: pauli4 | full24.
        #[arg(long = "perms", value_parser = parse_perm_set, default_value = "pauli4")]
        perm_set: distill_core::PermSet,
        /// Input-fidelity grid start:stop:step; defaults to
        /// 0.5:1.0:0.002 (werner) or 0.8:1.0:0.001 (dephasing).
        #[arg(long)]
        grid: Option<Grid>,
        /// Cache directory holding transversal files.
        #[arg(long, env = "DISTILL_CACHE_DIR", default_value = "cache")]
        cache: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv | jsonl.
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Worker threads; 0 = library default.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Append a recursive-DEJMPS baseline column.
        #[arg(long)]
        dejmps_baseline: bool,
    },
    /// Solve critical QBER bounds; optionally print finite-round envelopes.
    Security {
        /// Restrict to one family: six_state_ad | six_state_ed_ad |
        /// bb84_ad | bb84_permuted.
        #[arg(long)]
        family: Option<String>,
        /// Also print min/max mutual-information envelopes.
        #[arg(long)]
        finite: bool,
        /// Maximum number of AD rounds for the envelopes.
        #[arg(long, default_value_t = 10)]
        nmax: u32,
        /// QBER grid for the envelopes, start:stop:step.
        #[arg(long, default_value = "0.1:0.3:0.02")]
        qgrid: Grid,
    },
    /// Run the oracle suite and validate cache files.
    Verify {
        /// Cache directory to validate (scanned for *.blct files).
        #[arg(long, env = "DISTILL_CACHE_DIR", default_value = "cache")]
        cache: PathBuf,
    },
}

fn cmd_transversal(m: usize, out: Option<PathBuf>, cache: PathBuf) -> Result<(), CliError> {
    let path = out.unwrap_or_else(|| cache_path(&cache, m));
    if path.exists() {
        let t = read_transversal(&path, m).map_err(|e| CliError::Cache(e.to_string()))?;
        println!(
            "verified {}: {} protocols, checksum {:#010x}",
            path.display(),
            t.len(),
            t.checksum()
        );
        return Ok(());
    }
    let t = build_transversal(m).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    write_transversal(&path, &t).map_err(|e| CliError::Cache(e.to_string()))?;
    println!(
        "built {}: {} protocols, checksum {:#010x}",
        path.display(),
        t.len(),
        t.checksum()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    noise: NoiseModel,
    families: FamilyList,
    objective: distill_core::Objective,
    perm_set: distill_core::PermSet,
    grid: Option<Grid>,
    cache: PathBuf,
    out: Option<PathBuf>,
    format: OutputFormat,
    workers: usize,
    dejmps_baseline: bool,
) -> Result<(), CliError> {
    let config = RunConfig {
        noise,
        families: families.0,
        objective,
        perm_set,
        grid: grid.unwrap_or_else(|| noise.default_grid()),
        workers,
        cache_dir: cache,
        dejmps_baseline,
    };
    let records = run_sweep(&config)?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_records(&mut w, &records, format, dejmps_baseline)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_records(&mut w, &records, format, dejmps_baseline)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Transversal { m, out, cache } => cmd_transversal(m, out, cache),
        Command::Sweep {
            noise,
            families,
            objective,
            perm_set,
            grid,
            cache,
            out,
            format,
            workers,
            dejmps_baseline,
        } => cmd_sweep(
            noise, families, objective, perm_set, grid, cache, out, format, workers,
            dejmps_baseline,
        ),
        Command::Security { family, finite, nmax, qgrid } => {
            let finite_opts = finite.then_some(FiniteOptions { n_max: nmax, qgrid });
            let report = security_report(family.as_deref(), finite_opts)?;
            print!("{report}");
            Ok(())
        }
        Command::Verify { cache } => {
            let (report, all_passed) = run_verify(Some(&cache));
            print!("{report}");
            if all_passed {
                Ok(())
            } else {
                Err(CliError::Verify("one or more checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed output pipe (e.g. piping into `head`) is not an error.
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            // The verify report already names the failing checks.
            if e.exit_code() != EXIT_VERIFY {
                eprintln!("{e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
