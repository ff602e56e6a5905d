use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod output;
mod selftest;
mod tasks;

use error::CliError;
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "lehmer", version, about = "Lehmer and visible point experiments over F_p")]
struct Cli {
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Seed for sampled frequency sweeps.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allow family sweeps over more than 10^10 ambient points.
        #[arg(long)]
        scale_guard_override: bool,
    },
    /// Check the built-in catalog against every invariant suite.
    Selftest {
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<selftest::Fault>,
    },
}

fn side_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn run(
    config_path: &Path,
    out: Option<&Path>,
    format: Format,
    options: &tasks::RunOptions,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", config_path.display())))?;
    let config = config::validate(config::parse(&text)?)?;
    if !config.side_files_allowed(out.is_some()) {
        return Err(CliError::Validation("points dump needs --out".into()));
    }
    let result = tasks::run(&config, options)?;
    let rendered = result.render(format)?;
    match out {
        Some(path) => {
            std::fs::write(path, rendered)?;
            for (suffix, contents) in &result.side_files {
                std::fs::write(side_path(path, suffix), contents)?;
            }
        }
        None => print!("{rendered}"),
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(first) = result.violations.first() {
        return Err(CliError::Invariant(format!(
            "{first} ({} total)",
            result.violations.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Run {
            config,
            out,
            format,
            seed,
            scale_guard_override,
        } => run(
            config,
            out.as_deref(),
            *format,
            &tasks::RunOptions {
                seed: *seed,
                scale_guard_override: *scale_guard_override,
            },
        ),
        Command::Selftest { inject_fault } => selftest::run(*inject_fault, &mut std::io::stdout()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
