use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use faddeev_dbar::{run, ExperimentConfig, Overrides, Preset, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "faddeev-dbar", version, about = "Zero-energy inverse scattering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads; 1 gives byte-exact reproducibility.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_parser = parse_preset)]
        preset: Option<Preset>,
        /// Output directory, overriding output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "tiny" => Ok(Preset::Tiny),
        "desk" => Ok(Preset::Desk),
        _ => Err(format!("unknown preset {s:?}; expected tiny or desk")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let Command::Run { config, threads, preset, out } = cli.command;
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("cannot set thread count: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    }
    let seed = match std::env::var("FD_SEED") {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("FD_SEED must be a nonnegative integer, got {s:?}");
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        },
        Err(_) => None,
    };
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    cfg.apply(&Overrides { preset, out, seed });
    let outcome = run(&cfg);
    match outcome.report.get("error.message") {
        Some(faddeev_dbar::Node::Str(m)) => eprintln!("{}: {m}", cfg.mode.name()),
        _ => println!("{}: ok, artifacts in {}", cfg.mode.name(), outcome.output_dir.display()),
    }
    ExitCode::from(outcome.exit_code as u8)
}
