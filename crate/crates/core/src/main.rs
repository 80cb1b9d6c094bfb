use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sphere_prox::cli;

#[derive(Parser)]
#[command(name = "sphere-prox", version, about = "Proximal point methods on spheres of positive curvature")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algorithm described by a JSON config and write its trace as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the certificate suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        /// Also write the reports as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run proximal point and splitting on the same composite objective.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match args.command {
        Command::Run { config, output } => cli::cmd_run(&config, output.as_deref(), &mut out, &mut err),
        Command::Verify {
            seed,
            samples,
            tolerance_scale,
            output,
        } => cli::cmd_verify(seed, samples, tolerance_scale, output.as_deref(), &mut out, &mut err),
        Command::Compare { config, output } => cli::cmd_compare(&config, output.as_deref(), &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
