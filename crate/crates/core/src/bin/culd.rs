use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use culd::cli::{cmd_check, cmd_mac, cmd_simulate, cmd_sweep, CommandOutput};
use culd::config::RunConfig;
use culd::Error;

#[derive(Parser)]
#[command(name = "culd", version, about = "Current-limiting differential CiM column simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Transient simulation of one column; writes the per-segment waveform.
    Simulate(Common),
    /// Parameter sweep over `n`, `x` or `ibias`.
    Sweep(Common),
    /// End-to-end MAC evaluation with decoding.
    Mac {
        #[command(flatten)]
        common: Common,
        /// One weight vector per line.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Signed inputs in [-1, 1].
        #[arg(long)]
        inputs: Option<PathBuf>,
    },
    /// Row matching report.
    Check(Common),
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Sweep(c) | Command::Check(c) => c,
        Command::Mac { common, .. } => common,
    };
    let cfg = RunConfig::from_path(&common.config)?;
    let CommandOutput { body, summary, diagnostics } = match &cli.command {
        Command::Simulate(_) => cmd_simulate(&cfg)?,
        Command::Sweep(c) => cmd_sweep(&cfg, c.seed)?,
        Command::Check(_) => cmd_check(&cfg)?,
        Command::Mac { common, weights, inputs } => cmd_mac(&cfg, weights.as_deref(), inputs.as_deref(), common.seed)?,
    };
    for d in &diagnostics {
        eprintln!("{d}");
    }
    let out_path = common.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match out_path {
        Some(path) => {
            write_atomic(&path, &body).map_err(|e| Error::Config(format!("writing {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            print!("{body}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
