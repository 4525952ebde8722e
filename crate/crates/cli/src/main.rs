use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nmfeb::{cmd_check, cmd_fit, cmd_simulate, CliError, Overrides};

#[derive(Parser)]
#[command(name = "nmfeb", about = "Naive mean-field empirical Bayes for linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the prior and write the result document.
    Fit(Common),
    /// Generate a synthetic dataset into the `--out` directory.
    Simulate(Common),
    /// Print design diagnostics as JSON.
    Check(Common),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, env = "NMF_EB_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise variance (overrides the config).
    #[arg(long)]
    sigma2: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
            out: self.out.clone(),
            seed: self.seed,
            sigma2: self.sigma2,
        }
    }
}

fn in_pool<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Internal(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(common) => {
            let args = common.overrides();
            let outcome = in_pool(common.threads, || cmd_fit(&args))?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if outcome.output.is_none() {
                print!("{}", outcome.json);
            }
            eprintln!("fit finished in {:.3} s", outcome.elapsed.as_secs_f64());
            Ok(())
        }
        Command::Simulate(common) => {
            let args = common.overrides();
            let dir = in_pool(common.threads, || cmd_simulate(&args))?;
            eprintln!("wrote dataset to {}", dir.display());
            Ok(())
        }
        Command::Check(common) => {
            let args = common.overrides();
            let json = in_pool(common.threads, || cmd_check(&args))?;
            print!("{json}");
            Ok(())
        }
        Command::Version => {
            println!("nmfeb {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
