use std::process::ExitCode;

use clap::{Parser, Subcommand};

use monopat::cli::{
    append_run, emit_report, now_seconds, parse_config, registry_path, run, CommandKind, Flags,
    RunRecord,
};

/// Search, count and certify monochromatic additive-multiplicative patterns.
#[derive(Parser)]
#[command(name = "monopat", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether an avoiding coloring exists.
    Search(Flags),
    /// Count monochromatic instances under a coloring.
    Count(Flags),
    /// Scan interval lengths or primes for the forcing threshold.
    Threshold(Flags),
    /// Syndeticity, thickness and IP* status of each color class.
    Analyze(Flags),
    /// Cover decomposition of a coloring.
    Cover(Flags),
    /// Walk the derived-color induction to a monochromatic quadruple.
    Walk(Flags),
    /// Write the avoidance problem as DIMACS CNF.
    ExportCnf(Flags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Cmd::Search(f) => (CommandKind::Search, f),
        Cmd::Count(f) => (CommandKind::Count, f),
        Cmd::Threshold(f) => (CommandKind::Threshold, f),
        Cmd::Analyze(f) => (CommandKind::Analyze, f),
        Cmd::Cover(f) => (CommandKind::Cover, f),
        Cmd::Walk(f) => (CommandKind::Walk, f),
        Cmd::ExportCnf(f) => (CommandKind::ExportCnf, f),
    };
    let config = match parse_config(kind, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = emit_report(&outcome.report, config.format, config.output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if let Some(path) = registry_path(config.registry.as_deref()) {
        let mut artifacts = outcome.artifacts.clone();
        artifacts.extend(config.output.clone());
        let record = RunRecord {
            timestamp: now_seconds(),
            digest: config.digest(),
            command: kind.name().into(),
            summary: outcome.report.summary.clone(),
            seconds: outcome.seconds,
            artifacts,
        };
        if let Err(e) = append_run(&record, &path) {
            eprintln!("warning: run not recorded: {e}");
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
