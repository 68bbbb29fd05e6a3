//! `heislab`: runs one experiment and writes a JSON report.
//!
//! Exit codes: 0 when every checked bound holds, 1 when a bound is violated
//! or a file cannot be written, 2 for bad input.

mod commands;
mod config;
mod report;

use clap::Parser;
use config::{Command, ExperimentConfig};
use serde_json::{json, Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "heislab",
    version,
    about = "Heisenberg-group numerical experiments"
)]
struct Args {
    /// Subcommand; overrides `command` from the config file.
    command: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Snap off-grid y and x coordinates to the grid instead of failing.
    #[arg(long)]
    quantize: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kmax: Option<i64>,
    #[arg(long)]
    n: Option<usize>,
    /// `N,L,M,Ny,Nx`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    check_difference: bool,
    #[arg(long)]
    samples: Option<usize>,
    /// Print the effective config as `key = value` text and exit.
    #[arg(long)]
    print_config: bool,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(args: &Args) -> Result<(Command, ExperimentConfig), String> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            ExperimentConfig::from_text(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(c) = &args.command {
        cfg.command = Some(Command::parse(c)?);
    }
    if let Some(g) = &args.grid {
        cfg.grid = config::parse_grid(g)?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.kmax {
        cfg.kmax = Some(v);
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.samples {
        cfg.samples = v;
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    cfg.quantize |= args.quantize;
    cfg.check_difference |= args.check_difference;
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v)?;
    }
    let cmd = cfg
        .command
        .ok_or("no command given (positional argument or `command` key)")?;
    Ok((cmd, cfg))
}

fn report(cmd: Command, cfg: &ExperimentConfig, outcome: &commands::Outcome) -> Value {
    let echo: Map<String, Value> = cfg
        .to_pairs()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    json!({
        "command": cmd.name(),
        "config": echo,
        "result": outcome.result,
        "passed": outcome.passed,
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, cfg) = match build_config(&args) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("heislab: config error: {msg}");
            return ExitCode::from(2);
        }
    };
    if args.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    let outcome = match commands::run(cmd, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("heislab: {}: {e}", cmd.name());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = report::emit(&report(cmd, &cfg, &outcome), cfg.out.as_deref()) {
        eprintln!("heislab: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("heislab: {}: bound violated", cmd.name());
        ExitCode::from(1)
    }
}
