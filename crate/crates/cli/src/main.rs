use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ranger_cli::{cmd_fig4, cmd_run, cmd_sweep, CliError, Context};

#[derive(Parser)]
#[command(
    name = "ranger",
    about = "Entangled-pair ranging simulator without a returning photon"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run seed; overrides the config file and RANGER_SEED
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = auto); results do not depend on it
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl Common {
    fn context(&self) -> Context {
        Context::from_env(self.out.clone(), self.seed, self.threads)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration, detect the hit and estimate the range
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce the 10^6-pair, hit-at-600 numerical experiment
    Fig4 {
        #[command(flatten)]
        common: Common,
    },
    /// Run the Cartesian product of the config's sweep axes
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the version
    Version,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, common } => cmd_run(&config, &common.context()).map(|_| ()),
        Command::Fig4 { common } => cmd_fig4(&common.context()).map(|_| ()),
        Command::Sweep { config, common } => cmd_sweep(&config, &common.context()).map(|_| ()),
        Command::Version => {
            println!("ranger {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ranger: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
