use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Parser, Subcommand};
use mvcrit_cli::{cmd_check, cmd_check_batch, cmd_conjugate, cmd_gen, cmd_verify, CliError, Format, Outcome, Settings};
use mvcrit_core::Family;

/// Decide whether three (or two) projective views of a point set admit a second,
/// inequivalent reconstruction.
#[derive(Debug, Parser)]
#[command(name = "mvcrit", version)]
struct Cli {
    /// Image-match tolerance (angular distance per point and camera).
    #[arg(long, global = true, env = "MVCRIT_TOL")]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file: the report for check and verify, the scene for gen and conjugate.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a scene file, or every `*.json` file in a directory.
    Check {
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        scene: Option<PathBuf>,
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Generate a critical scene from one of the known families.
    Gen {
        #[arg(long, value_parser = family_parser())]
        family: Family,
        #[arg(long, default_value_t = 12)]
        n_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the conjugate of a critical scene.
    Conjugate { scene: PathBuf },
    /// Check that a second scene has the same images and is not equivalent.
    Verify { scene: PathBuf, conjugate: PathBuf },
}

fn family_parser() -> impl TypedValueParser<Value = Family> {
    PossibleValuesParser::new(Family::ALL.map(Family::slug)).map(|s| s.parse::<Family>().expect("listed slug"))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let settings = Settings {
        tol: cli.tol,
        format: cli.format,
    };
    let report_out = |o: Outcome| -> Result<Outcome, CliError> {
        match &cli.out {
            Some(path) => {
                std::fs::write(path, &o.stdout).map_err(|e| CliError::io(path, e))?;
                Ok(Outcome {
                    stdout: String::new(),
                    ..o
                })
            }
            None => Ok(o),
        }
    };
    match &cli.command {
        Command::Check { scene: Some(scene), .. } => report_out(cmd_check(scene, &settings)?),
        Command::Check { batch: Some(dir), .. } => report_out(cmd_check_batch(dir, &settings)?),
        Command::Check { .. } => Err(CliError::Usage("a scene file or --batch is required".into())),
        Command::Gen { family, n_points, seed } => {
            let out = cli
                .out
                .as_deref()
                .ok_or_else(|| CliError::Usage("gen requires --out".into()))?;
            cmd_gen(*family, *n_points, *seed, out, &settings)
        }
        Command::Conjugate { scene } => cmd_conjugate(scene, cli.out.as_deref(), &settings),
        Command::Verify { scene, conjugate } => report_out(cmd_verify(scene, conjugate, &settings)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            let _ = std::io::stdout().write_all(o.stdout.as_bytes());
            let _ = std::io::stderr().write_all(o.stderr.as_bytes());
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
