//! `manimet`: reproducible experiment runs over the manifold entropic metrics.
//!
//! ```text
//! manimet {generate|train|eval|compare|convergence} --manifest <path>
//!         [--samples B] [--seed S] [--out DIR] [--svg] [--decoder NAME]
//! ```
//!
//! Exit codes: 0 success, 1 usage, 2 numerical or degenerate, 3 divergence.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod registry;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Overrides, RunOutput};
pub use error::{CliError, EXIT_DIVERGENCE, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "manimet",
    version,
    about = "Manifold entropic metrics for flows and analytic decoders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset and write its summary statistics.
    Generate(RunArgs),
    /// Train a flow from a manifest.
    Train(RunArgs),
    /// Evaluate entropy, MTC, spectrum and MPMI of one decoder.
    Eval(RunArgs),
    /// Cross-model MCPMI and Pearson matrices.
    Compare(RunArgs),
    /// Estimator spread against sample size.
    Convergence(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment manifest (TOML).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Monte Carlo sample count (dataset size for `generate`).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the manifest's `out`, then
    /// `$MANIMET_OUT/<manifest stem>`, then `runs/<manifest stem>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Decoder to use instead of the manifest's model: a model file or
    /// `identity:D`, `affine:diag:a,b,..`, `torus`, `ground-truth`.
    #[arg(long)]
    pub decoder: Option<String>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Generate(a) => ("generate", a),
            Command::Train(a) => ("train", a),
            Command::Eval(a) => ("eval", a),
            Command::Compare(a) => ("compare", a),
            Command::Convergence(a) => ("convergence", a),
        }
    }
}

/// Runs one parsed command.
pub fn execute(command: &Command) -> Result<RunOutput, CliError> {
    let (name, args) = command.parts();
    let manifest = match &args.manifest {
        Some(p) => RunManifest::load(p)?,
        None if args.decoder.is_some() && matches!(name, "eval" | "compare" | "convergence") => {
            RunManifest::default()
        }
        None => return Err(CliError::usage(format!("{name} needs --manifest"))),
    };
    let o = Overrides {
        samples: args.samples,
        seed: args.seed,
        out: args.out.clone(),
        svg: args.svg,
        decoder: args.decoder.clone(),
    };
    let stem = commands::stem_of(args.manifest.as_deref(), name);
    match command {
        Command::Generate(_) => commands::cmd_generate(manifest, &o, &stem),
        Command::Train(_) => commands::cmd_train(manifest, &o, &stem),
        Command::Eval(_) => commands::cmd_eval(manifest, &o, &stem),
        Command::Compare(_) => commands::cmd_compare(manifest, &o, &stem),
        Command::Convergence(_) => commands::cmd_convergence(manifest, &o, &stem),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("manimet: {e}");
            e.exit_code()
        }
    }
}
