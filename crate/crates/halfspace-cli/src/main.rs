use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use halfspace::grid::{write_field, write_slice_csv};
use halfspace::suites::{report, run_suite, solve_suite_fields, RunConfig, SuiteReport, SUITES};
use halfspace::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    KernelCheck,
    TentSuite,
    FreqSuite,
    GreenSuite,
    LinearSuite,
    GbetaSuite,
    Solve,
    ScalingCheck,
    Report,
}

impl Command {
    fn suite(self) -> Option<&'static str> {
        match self {
            Command::KernelCheck => Some("kernel-check"),
            Command::TentSuite => Some("tent-suite"),
            Command::FreqSuite => Some("freq-suite"),
            Command::GreenSuite => Some("green-suite"),
            Command::LinearSuite => Some("linear-suite"),
            Command::GbetaSuite => Some("gbeta-suite"),
            Command::Solve => Some("solve"),
            Command::ScalingCheck => Some("scaling-check"),
            Command::Report => None,
        }
    }
}

/// Verification suites for the half-space Stokes/Navier-Stokes toolkit.
#[derive(Debug, Parser)]
#[command(name = "halfspace", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat key = value run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, default_value = "artifacts")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// For `report`: comma-separated suites (or `all`) to run into --out before summarizing.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
    /// Stream diagnostics as JSON lines on stdout.
    #[arg(long)]
    verbose: bool,
}

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn stream(rep: &SuiteReport) {
    if let Some(its) = rep.data.get("diagnostics").and_then(|d| d.get("iterations")).and_then(|v| v.as_array()) {
        for it in its {
            println!("{}", serde_json::json!({"suite": rep.suite, "record": "iteration", "data": it}));
        }
    }
    for c in &rep.checks {
        println!("{}", serde_json::json!({"suite": rep.suite, "record": "check", "data": c}));
    }
}

fn write_decay(rep: &SuiteReport, path: &Path) -> std::io::Result<()> {
    let Some(d) = rep.data.get("diagnostics").and_then(|d| d.get("decay")) else {
        return Ok(());
    };
    let levels = d["levels"].as_array().cloned().unwrap_or_default();
    let values = d["values"].as_array().cloned().unwrap_or_default();
    let mut s = String::from("x_n,sup_norm\n");
    for (y, v) in levels.iter().zip(&values) {
        s.push_str(&format!("{y},{v}\n"));
    }
    std::fs::write(path, s)
}

/// Runs one suite and writes its artifacts; returns whether it passed (warnings included when strict).
fn run_one(name: &str, cfg: &RunConfig, cli: &Cli) -> halfspace::Result<bool> {
    let rep = if name == "solve" {
        let (rep, fields) = solve_suite_fields(cfg)?;
        std::fs::create_dir_all(&cli.out)?;
        if let Some((u, pi)) = fields {
            write_field(&u, &cli.out.join("solve_u"))?;
            write_field(&pi, &cli.out.join("solve_pi"))?;
            write_slice_csv(&u, 0, 0, &cli.out.join("solve_u1_slice.csv"))?;
        }
        write_decay(&rep, &cli.out.join("solve_decay.csv"))?;
        rep
    } else {
        run_suite(name, cfg)?
    };
    rep.write(&cli.out)?;
    if cli.verbose {
        stream(&rep);
    }
    for c in rep.failures() {
        eprintln!("FAIL {} [{}] {}: measured {:e}, limit {:e}", rep.suite, c.criterion, c.id, c.measured, c.limit);
    }
    for w in &rep.warnings {
        eprintln!("warning {}: {w}", rep.suite);
    }
    eprintln!("{}: {}/{} checks pass", rep.suite, rep.checks.len() - rep.failures().len(), rep.checks.len());
    Ok(rep.passed() && !(cli.strict && !rep.warnings.is_empty()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return usage(e),
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }

    let suites: Vec<&str> = match cli.command.suite() {
        Some(s) => {
            if !cli.suite.is_empty() {
                return usage("--suite applies to `report` only");
            }
            vec![s]
        }
        None if cli.suite.iter().any(|s| s == "all") => SUITES.to_vec(),
        None => {
            let mut v = Vec::new();
            for s in &cli.suite {
                match SUITES.iter().find(|k| **k == s.as_str()) {
                    Some(k) => v.push(*k),
                    None => return usage(format!("unknown suite {s}")),
                }
            }
            v
        }
    };

    let mut ok = true;
    for s in &suites {
        match run_one(s, &cfg, &cli) {
            Ok(p) => ok &= p,
            Err(e) => {
                eprintln!("FAIL {s}: {e}");
                ok = false;
            }
        }
    }

    if cli.command == Command::Report {
        match report(&cli.out) {
            Ok(md) => {
                if let Err(e) = std::fs::write(cli.out.join("summary.md"), &md) {
                    eprintln!("error: {e}");
                    return ExitCode::from(FAIL);
                }
                print!("{md}");
                ok &= !md.contains("| FAIL |");
                if cli.strict && md.contains("## Warnings") {
                    ok = false;
                }
            }
            Err(e @ Error::MissingArtifacts(_)) => return usage(e),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(FAIL);
            }
        }
    }
    ExitCode::from(if ok { PASS } else { FAIL })
}
