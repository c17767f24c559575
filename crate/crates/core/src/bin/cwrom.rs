use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cwrom::commands;
use cwrom::io::RunConfig;

/// Component-wise reduced-order modeling and topology optimization of 2D
/// lattice structures.
#[derive(Parser)]
#[command(name = "cwrom", version, about)]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Trained library file
    #[arg(long, global = true)]
    library: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the training seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bound worker parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Port basis size for reduced solves
    #[arg(long, global = true)]
    basis_size: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train reduced port spaces and write the library file
    Train,
    /// Solve the lattice for a density vector and export fields
    Solve {
        /// densities, one per line (defaults to all-solid)
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// Minimize compliance under the volume budget
    Optimize,
    /// Accuracy and timing sweep against the full-order model
    Compare {
        /// basis sizes to sweep
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 6, 8, 12, 16, 20])]
        sizes: Vec<usize>,
        /// use the full-basis condensed model as reference instead of the
        /// conforming FOM (for systems too large to assemble)
        #[arg(long)]
        cwfom_reference: bool,
    },
    /// Evaluate a posteriori error bounds across basis sizes
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 6, 8, 12, 16, 20])]
        sizes: Vec<usize>,
        /// densities, one per line (defaults to the volume fraction)
        #[arg(long)]
        mu: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> cwrom::Result<()> {
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config_path = cli
        .config
        .ok_or_else(|| cwrom::CwError::Config("--config is required".into()))?;
    let mut config = RunConfig::from_path(&config_path)?;
    if let Some(seed) = cli.seed {
        config.training.seed = seed;
    }
    let library = |cli_lib: &Option<PathBuf>| -> cwrom::Result<PathBuf> {
        cli_lib
            .clone()
            .ok_or_else(|| cwrom::CwError::Config("--library is required".into()))
    };
    match cli.command {
        Command::Train => {
            let out = cli.library.unwrap_or_else(|| cli.out.join("library.cwlb"));
            commands::cmd_train(&config, &out)?;
        }
        Command::Solve { mu } => {
            commands::cmd_solve(
                &config,
                &library(&cli.library)?,
                mu.as_deref(),
                &cli.out,
                cli.basis_size,
            )?;
        }
        Command::Optimize => {
            commands::cmd_optimize(&config, &library(&cli.library)?, &cli.out, cli.basis_size)?;
        }
        Command::Compare {
            sizes,
            cwfom_reference,
        } => {
            commands::cmd_compare(
                &config,
                &library(&cli.library)?,
                &sizes,
                &cli.out,
                cwfom_reference,
            )?;
        }
        Command::Verify { sizes, mu } => {
            commands::cmd_verify(
                &config,
                &library(&cli.library)?,
                &sizes,
                &cli.out,
                mu.as_deref(),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
