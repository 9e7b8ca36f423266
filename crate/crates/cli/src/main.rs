use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use percap::harness::{self, ExperimentConfig, Mode};

/// Runs a capacity-scaling experiment and writes its rows as CSV.
#[derive(Debug, Parser)]
#[command(name = "percap", version)]
struct Cli {
    /// deploy, percolate, backbone, route, simulate, bounds or sweep
    mode: String,

    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV; fitted slopes go to `<stem>.slopes.csv`.
    #[arg(long)]
    out: PathBuf,

    /// `key=value` overrides applied after the file.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode: Mode = match cli.mode.parse() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("percap: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("percap: cannot read {}: {e}", p.display());
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    overrides.push(format!("mode={mode}"));
    let cfg = match ExperimentConfig::parse(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("percap: {e}");
            return ExitCode::from(1);
        }
    };
    let res = match harness::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("percap: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = harness::write_outputs(&cli.out, &res) {
        eprintln!("percap: {e}");
        return ExitCode::from(1);
    }
    eprintln!("{} rows, {} failed -> {}", res.rows.len(), res.failed, cli.out.display());
    for s in &res.slopes {
        eprintln!("slope {} {}: {:.4} +/- {:.4} ({} sizes)", s.group, s.metric, s.slope, s.stderr, s.points);
    }
    if let Some(t) = res.tight {
        eprintln!("tight: {t}");
    }
    if res.failed > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
