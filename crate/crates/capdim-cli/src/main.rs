use capdim_cli::{emit, parse_config, run, Format};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    CsvTables,
}

/// Runs one JSON-configured job and prints a report.
#[derive(Parser, Debug)]
#[command(name = "capdim", version, about)]
struct Args {
    /// Path to the JSON job config.
    config_path: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();

    if let Ok(threads) = std::env::var("CAPSTONE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore "already initialized" — tests may run in-process.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: CAPSTONE_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }

    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config_path.display());
            return ExitCode::from(2);
        }
    };
    let config = match parse_config(&text) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let output = match run(config) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::CsvTables => Format::CsvTables,
    };
    let rendered = emit(&output.report, format);
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, rendered) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    } else {
        print!("{rendered}");
    }

    if output.inconclusive {
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    }
}
