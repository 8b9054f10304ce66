use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncosc::cli::{
    exit_code_for, export_wavefunction, run_diagnose, run_spectrum, run_verify, DiagnoseKind, Format, Outcome,
    WavefunctionRequest, EXPORT_EXTENT, EXPORT_POINTS,
};
use ncosc::config::RunConfig;
use ncosc::states::FamilyKind;
use ncosc::Result;

/// Exact spectrum and truncated Fock-space verification for a non
/// self-adjoint two-dimensional oscillator on the noncommutative plane.
#[derive(Parser, Debug)]
#[command(name = "ncosc", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Parameter file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Levels per mode (overrides dim1/dim2).
    #[arg(long, global = true, value_name = "N")]
    dim: Option<usize>,
    /// Levels per mode excluded from interior checks.
    #[arg(long, global = true, value_name = "K")]
    margin: Option<usize>,
    /// Largest n₁, n₂ in spectrum, Gram and ladder checks.
    #[arg(long, global = true, value_name = "N")]
    nmax: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiagnoseArg {
    Riesz,
    Quasi,
    Pt,
    Wavefunction,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StateArg {
    Phi,
    Psi,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energies E(n1, n2) with the derived constants as a comment header.
    Spectrum,
    /// Run the verification checks. Without --config, runs the built-in
    /// five-set grid. Exit 0 when all pass, 1 otherwise.
    Verify,
    /// Diagnostic tables.
    Diagnose {
        #[arg(value_enum)]
        kind: DiagnoseArg,
    },
    /// Wavefunction grids.
    Wavefunction {
        #[command(subcommand)]
        action: WavefunctionCommand,
    },
}

#[derive(Subcommand, Debug)]
enum WavefunctionCommand {
    /// Sample one eigenstate on a square grid (columns x1, x2, re, im).
    Export {
        #[arg(long, value_enum, default_value_t = StateArg::Phi)]
        state: StateArg,
        #[arg(long, default_value_t = 0)]
        n1: usize,
        #[arg(long, default_value_t = 0)]
        n2: usize,
        /// Points per axis (odd).
        #[arg(long, default_value_t = EXPORT_POINTS)]
        points: usize,
        /// Half-width in oscillator lengths.
        #[arg(long, default_value_t = EXPORT_EXTENT)]
        extent: f64,
    },
}

fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let cfg = match &c.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    }
    .with_overrides(c.dim, c.margin, c.nmax)?;
    let format = match c.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &cli.command {
        Command::Spectrum => run_spectrum(&cfg, format),
        Command::Verify => run_verify(&cfg, c.config.is_none(), format),
        Command::Diagnose { kind } => {
            let kind = match kind {
                DiagnoseArg::Riesz => DiagnoseKind::Riesz,
                DiagnoseArg::Quasi => DiagnoseKind::Quasi,
                DiagnoseArg::Pt => DiagnoseKind::Pt,
                DiagnoseArg::Wavefunction => DiagnoseKind::Wavefunction,
            };
            run_diagnose(&cfg, kind, format)
        }
        Command::Wavefunction {
            action:
                WavefunctionCommand::Export {
                    state,
                    n1,
                    n2,
                    points,
                    extent,
                },
        } => {
            let req = WavefunctionRequest {
                kind: match state {
                    StateArg::Phi => FamilyKind::Phi,
                    StateArg::Psi => FamilyKind::Psi,
                },
                n: (*n1, *n2),
                points: *points,
                extent: *extent,
            };
            export_wavefunction(&cfg, &req, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("ncosc: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &outcome.output),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.output.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("ncosc: cannot write output: {e}");
        return ExitCode::from(ncosc::cli::EXIT_USAGE as u8);
    }
    ExitCode::from(outcome.exit_code as u8)
}
