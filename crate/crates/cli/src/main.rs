//! `cpde`: batch front-end of the simulator.
//!
//! Exit codes: 0 ok, 1 run failure, 2 config error, 3 invariant violation,
//! 4 oracle mismatch.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{resolve, Command, ConfigError, RunConfig, Table};
use run::Report;

#[derive(Parser, Debug)]
#[command(name = "cpde", version, about = "Contact process with dynamic edges: simulation and checks")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config file (`key = value` lines under `[run]` and per-subcommand sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Output table; a manifest is written next to it as `<out>.manifest`.
    /// Without it the table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = all cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Override a config key, as `key=value` or `section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut table = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            Table::parse(&text)?
        }
        None => Table::default(),
    };
    let section = cli.command.section();
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got `{o}`")))?;
        table.set(k.trim(), v.trim(), section)?;
    }
    if let Some(s) = cli.seed {
        table.set("seed", &s.to_string(), section)?;
    }
    if let Some(r) = cli.replicas {
        table.set("replicas", &r.to_string(), section)?;
    }
    if let Some(p) = cli.parallelism {
        table.set("parallelism", &p.to_string(), section)?;
    }
    resolve(cli.command, &table)
}

fn exit_code(e: &cpde::Error) -> u8 {
    match e {
        cpde::Error::Invariant(_) => 3,
        cpde::Error::Domain { .. }
        | cpde::Error::InvalidTopology(_)
        | cpde::Error::Precondition(_)
        | cpde::Error::Structure(_) => 2,
        _ => 1,
    }
}

fn table_text(cfg: &RunConfig, report: &Report) -> String {
    let mut out = String::new();
    for line in cfg.echo_text().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&report.table);
    out
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn manifest(cfg: &RunConfig, report: &Report, status: u8, seconds: f64) -> String {
    let mut m = format!(
        "command = {}\nseed = {}\nparallelism = {}\nwall_time_s = {seconds:.3}\nexit_status = {status}\n\n",
        cfg.command.section(),
        cfg.seed,
        cfg.parallelism
    );
    m.push_str(&cfg.echo_text());
    for (title, lines) in [
        ("summary", &report.summary),
        ("violations", &report.violations),
        ("oracle mismatches", &report.mismatches),
    ] {
        if !lines.is_empty() {
            m.push_str(&format!("\n# {title}\n"));
            for l in lines {
                m.push_str(l);
                m.push('\n');
            }
        }
    }
    m
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let report = match run::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let status = if !report.violations.is_empty() {
        3
    } else if !report.mismatches.is_empty() {
        4
    } else {
        0
    };
    let table = table_text(&cfg, &report);
    match &cli.out {
        Some(path) => {
            let written = std::fs::write(path, &table)
                .and_then(|_| std::fs::write(manifest_path(path), manifest(&cfg, &report, status, seconds)));
            if let Err(e) = written {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{table}"),
    }
    for l in &report.summary {
        eprintln!("{l}");
    }
    for l in report.violations.iter().chain(&report.mismatches) {
        eprintln!("FAIL {l}");
    }
    ExitCode::from(status)
}
