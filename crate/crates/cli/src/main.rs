//! Batch front end: resolves a JSON config, runs one mode and writes the
//! report and exports. Exits 0 only when every check of the run passes.
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use grtlab::harness::{self, ExperimentConfig, Mode, Profile};

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Impulse,
    Montecarlo,
    Theory,
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    mode: ModeArg,
    /// JSON config; keys not given fall back to the preset of mode and profile
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Output directory, overriding `out_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mode = match cli.mode {
        ModeArg::Impulse => Mode::Impulse,
        ModeArg::Montecarlo => Mode::Montecarlo,
        ModeArg::Theory => Mode::Theory,
        ModeArg::Selftest => Mode::Selftest,
    };
    let profile = cli.profile.map(|p| match p {
        ProfileArg::Paper => Profile::Paper,
        ProfileArg::Desk => Profile::Desk,
    });
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text, Some(mode), profile)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.sync_derived();
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let (report, outcome) = match harness::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!("{} {:<28} {:.6e}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.note.as_deref().unwrap_or(""));
    }
    match harness::write_artifacts(&cfg.out_dir, &report, &outcome) {
        Ok(files) => println!("wrote {} files to {}", files.len(), cfg.out_dir.display()),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
