use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shapelab_cli::{parse_config, read_config_file, run};

#[derive(Parser, Debug)]
#[command(
    name = "shapelab",
    version,
    about = "Rescaled compliance and eigenvalue shape optimization lab"
)]
struct Cli {
    /// Config file of `key=value` lines; later settings override it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Torsion function and compliance of the design region.
    SolveTorsion { settings: Vec<String> },
    /// First Dirichlet eigenpair of the design region.
    SolveEigen { settings: Vec<String> },
    /// Minimize the cost with the relaxed or the flip-search method.
    Minimize {
        method: String,
        settings: Vec<String>,
    },
    /// Run one validator.
    Verify {
        check: String,
        settings: Vec<String>,
    },
    /// Exhaustive search over all subsets of a small region.
    Oracle { settings: Vec<String> },
    /// One relaxed run per alpha of `alphas=...`.
    SweepAlpha { settings: Vec<String> },
    /// Write the domain mask and its torsion and eigen fields.
    Export { settings: Vec<String> },
    /// Run the command named in the config file.
    Run { settings: Vec<String> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pairs = Vec::new();
    if let Some(path) = &cli.config {
        match read_config_file(path) {
            Ok(p) => pairs.extend(p),
            Err(e) => return usage(e),
        }
    }
    let (command, settings) = match cli.command {
        Some(Cmd::SolveTorsion { settings }) => (Some("solve-torsion".to_string()), settings),
        Some(Cmd::SolveEigen { settings }) => (Some("solve-eigen".to_string()), settings),
        Some(Cmd::Minimize { method, settings }) => (Some(format!("minimize {method}")), settings),
        Some(Cmd::Verify { check, settings }) => (Some(format!("verify {check}")), settings),
        Some(Cmd::Oracle { settings }) => (Some("oracle".to_string()), settings),
        Some(Cmd::SweepAlpha { settings }) => (Some("sweep-alpha".to_string()), settings),
        Some(Cmd::Export { settings }) => (Some("export".to_string()), settings),
        Some(Cmd::Run { settings }) => (None, settings),
        None => (None, Vec::new()),
    };
    if let Some(c) = command {
        pairs.push(("command".to_string(), c));
    }
    for s in settings {
        match s.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
            None => return usage(format!("expected key=value, got '{s}'")),
        }
    }
    let cfg = match parse_config(&pairs) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    match run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}
