use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use slantcheck::fixtures::{fixture, REGISTRY};
use slantcheck::manifest::{load_manifest, CheckKind};
use slantcheck::report::{emit, run, Format, RunOptions};
use slantcheck::{Execution, Manifest};

/// Numerically verify quasi bi-slant and warped product submanifolds of C^n.
#[derive(Parser)]
#[command(name = "slantcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Human,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Parallel,
    Sequential,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a manifest file or a built-in fixture.
    Verify {
        /// Path to a JSON manifest.
        #[arg(required_unless_present = "fixture", conflicts_with = "fixture")]
        manifest: Option<PathBuf>,
        /// Built-in fixture, e.g. `example_7_2` or `slant_plane:0.4`.
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long, value_enum, default_value = "human")]
        format: OutputFormat,
        /// Overrides the manifest's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated check names; defaults to every applicable check.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "parallel")]
        mode: Mode,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in fixtures.
    ListFixtures,
    /// Print a fixture as a JSON manifest.
    DumpFixture { name: String },
    /// List the check names in run order.
    ListChecks,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::ListFixtures => {
            for f in REGISTRY {
                println!("{:<24} {:<26} {}", f.name, f.args, f.description);
            }
            ExitCode::SUCCESS
        }
        Command::ListChecks => {
            for c in CheckKind::ALL {
                println!("{c}");
            }
            ExitCode::SUCCESS
        }
        Command::DumpFixture { name } => match fixture(&name) {
            Ok(m) => {
                println!("{}", m.to_json());
                ExitCode::SUCCESS
            }
            Err(e) => usage_error(e),
        },
        Command::Verify { manifest, fixture: fx, format, seed, checks, mode, out } => {
            let m: Manifest = match (manifest, fx) {
                (Some(path), _) => match load_manifest(&path) {
                    Ok(m) => m,
                    Err(e) => return usage_error(e),
                },
                (None, Some(name)) => match fixture(&name) {
                    Ok(m) => m,
                    Err(e) => return usage_error(e),
                },
                (None, None) => return usage_error("give a manifest path or --fixture"),
            };
            let checks = match checks {
                None => None,
                Some(names) => {
                    let mut kinds = Vec::new();
                    for n in names {
                        match CheckKind::from_name(n.trim()) {
                            Some(k) => kinds.push(k),
                            None => return usage_error(format!("unknown check `{n}` (see `slantcheck list-checks`)")),
                        }
                    }
                    Some(kinds)
                }
            };
            let exec = match mode {
                Mode::Parallel => Execution::Parallel,
                Mode::Sequential => Execution::Sequential,
            };
            let outcome = match run(&m, &RunOptions { exec, seed, checks }) {
                Ok(o) => o,
                Err(e) => return usage_error(e),
            };
            let format = match format {
                OutputFormat::Human => Format::Human,
                OutputFormat::Machine => Format::Machine,
            };
            let text = emit(&outcome, format);
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &text) {
                        return usage_error(format!("{}: {e}", path.display()));
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(outcome.report.exit_code() as u8)
        }
    }
}
