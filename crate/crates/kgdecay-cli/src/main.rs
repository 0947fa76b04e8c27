mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kgdecay::decay::DecayReport;
use kgdecay::par::with_jobs;
use kgdecay::run::{dedup_masses, mass_sweep, run_decay, RunConfig, RunOutput, RunStats, SweepFailure, DEFAULT_MASSES, UNIFORMITY_BOUND};
use kgdecay::verify::{run_suite, SuiteReport, SUITES};
use kgdecay::{Error, Execution};

use output::{mass_label, FileEntry, OutDir};

#[derive(Parser)]
#[command(name = "kgdecay", version, about = "Solver and verification harness for coupled wave / Klein-Gordon systems")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "kgdecay-out")]
    out: PathBuf,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One run: sup-norm and energy series, snapshots, decay report.
    Solve(ConfigArg),
    /// The configured run at several masses of `u`.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated masses; defaults to 0,0.03,0.1,0.3,1.
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
    },
    /// Verification suites with pinned parameters.
    Verify {
        /// Suite to run (repeatable); all suites when omitted.
        #[arg(long)]
        suite: Vec<String>,
    },
}

/// Why a command stopped early, with its exit code.
#[derive(Debug, Serialize)]
struct Abort {
    kind: &'static str,
    exit_code: u8,
    reason: String,
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        let (kind, exit_code) = match &e {
            Error::Config(_) => ("config", 2),
            Error::BlowUp { .. } => ("blow-up", 3),
            Error::Io(_) => ("io", 4),
            _ => ("internal", 1),
        };
        Abort { kind, exit_code, reason: e.to_string() }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    status: &'a str,
    exit_code: u8,
    config: Option<&'a RunConfig>,
    masses: Option<&'a [f64]>,
    suites: Option<&'a [String]>,
    files: &'a [FileEntry],
}

#[derive(Serialize)]
struct RunEntry<'a> {
    m: f64,
    stats: &'a RunStats,
    decay: &'a DecayReport,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    command: &'static str,
    status: &'static str,
    run: RunEntry<'a>,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    command: &'static str,
    status: &'static str,
    masses: &'a [f64],
    duplicates_removed: bool,
    spread: f64,
    bound: f64,
    uniform: bool,
    failure: Option<&'a SweepFailure>,
    runs: Vec<RunEntry<'a>>,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    command: &'static str,
    status: &'static str,
    suites: &'a [SuiteReport],
}

#[derive(Serialize)]
struct AbortReport<'a> {
    command: &'static str,
    status: &'static str,
    abort: &'a Abort,
}

/// What a finished command hands back for the manifest.
struct Done {
    status: &'static str,
    exit_code: u8,
    config: Option<RunConfig>,
    masses: Option<Vec<f64>>,
    suites: Option<Vec<String>>,
}

fn load_config(path: &Path) -> Result<RunConfig, Abort> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_toml(&text)?)
}

fn in_pool<R: Send>(jobs: usize, f: impl FnOnce() -> kgdecay::Result<R> + Send) -> Result<R, Abort> {
    Ok(with_jobs(jobs, f)??)
}

fn write_run(out: &mut OutDir, cfg: &RunConfig, run: &RunOutput, dir: &str) -> Result<(), Abort> {
    let grid = cfg.build_grid()?;
    out.write_with(&format!("{dir}/sup_u.csv"), "series", |w| run.sups.u.write_csv(w))?;
    out.write_with(&format!("{dir}/sup_v.csv"), "series", |w| run.sups.v.write_csv(w))?;
    if cfg.diagnostics.energies {
        out.write_with(&format!("{dir}/energy.csv"), "series", |w| {
            use std::io::Write;
            writeln!(w, "t,energy_u,energy_v")?;
            for e in &run.energies {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", e.t, e.u, e.v)?;
            }
            Ok(())
        })?;
    }
    for (k, s) in run.snapshots.iter().enumerate() {
        out.write_with(&format!("{dir}/snapshots/frame_{k:03}.csv"), "snapshot", |w| s.write_csv(&grid, w))?;
    }
    Ok(())
}

fn solve(out: &mut OutDir, jobs: usize, config: &Path) -> Result<Done, Abort> {
    let cfg = load_config(config)?;
    let exec = if jobs == 1 { Execution::Sequential } else { cfg.execution };
    let run = in_pool(jobs, || run_decay(&cfg, exec))?;
    write_run(out, &cfg, &run, "series")?;
    let report = SolveReport {
        command: "solve",
        status: "ok",
        run: RunEntry { m: run.m, stats: &run.stats, decay: &run.report },
    };
    out.write_json("report.json", "report", &report)?;
    Ok(Done { status: "ok", exit_code: 0, config: Some(cfg), masses: None, suites: None })
}

fn sweep(out: &mut OutDir, jobs: usize, config: &Path, masses: Option<Vec<f64>>) -> Result<Done, Abort> {
    let cfg = load_config(config)?;
    let requested = masses.unwrap_or_else(|| DEFAULT_MASSES.to_vec());
    if requested.is_empty() {
        return Err(Error::Config("empty mass list".into()).into());
    }
    let (masses, dropped) = dedup_masses(&requested);
    if dropped {
        eprintln!("warning: duplicate masses removed; running {masses:?}");
    }
    let workers = if jobs == 1 { Execution::Sequential } else { Execution::Parallel };
    let sw = in_pool(jobs, || mass_sweep(&cfg, &masses, workers))?;
    for run in &sw.runs {
        write_run(out, &cfg, run, &format!("series/{}", mass_label(run.m)))?;
    }
    let status = if sw.failure.is_some() { "failed" } else { "ok" };
    let report = SweepReport {
        command: "sweep",
        status,
        masses: &masses,
        duplicates_removed: dropped,
        spread: sw.spread,
        bound: UNIFORMITY_BOUND,
        uniform: sw.uniform,
        failure: sw.failure.as_ref(),
        runs: sw.runs.iter().map(|r| RunEntry { m: r.m, stats: &r.stats, decay: &r.report }).collect(),
    };
    out.write_json("report.json", "report", &report)?;
    let exit_code = match &sw.failure {
        None => 0,
        Some(f) => {
            eprintln!("sweep failed at m = {}: {}", f.m, f.reason);
            if f.blow_up {
                3
            } else {
                1
            }
        }
    };
    Ok(Done { status, exit_code, config: Some(cfg), masses: Some(masses), suites: None })
}

fn verify(out: &mut OutDir, jobs: usize, suites: Vec<String>) -> Result<Done, Abort> {
    let names: Vec<String> = if suites.is_empty() { SUITES.iter().map(|s| s.0.to_string()).collect() } else { suites };
    if let Some(bad) = names.iter().find(|n| !SUITES.iter().any(|s| s.0 == n.as_str())) {
        let known: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
        return Err(Error::Config(format!("unknown suite `{bad}`; known: {}", known.join(", "))).into());
    }
    let exec = if jobs == 1 { Execution::Sequential } else { Execution::Parallel };
    let mut reports = Vec::new();
    for n in &names {
        let r = in_pool(jobs, || run_suite(n, exec))?;
        eprintln!("criterion {}: {} [{}]", r.criterion, if r.pass { "PASS" } else { "FAIL" }, r.suite);
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    let status = if pass { "pass" } else { "fail" };
    out.write_json("report.json", "report", &VerifyReport { command: "verify", status, suites: &reports })?;
    Ok(Done { status, exit_code: if pass { 0 } else { 1 }, config: None, masses: None, suites: Some(names) })
}

fn write_manifest(out: &mut OutDir, command: &'static str, done: &Done) -> kgdecay::Result<()> {
    let files = out.files.clone();
    let m = Manifest {
        tool: "kgdecay",
        version: env!("CARGO_PKG_VERSION"),
        command,
        status: done.status,
        exit_code: done.exit_code,
        config: done.config.as_ref(),
        masses: done.masses.as_deref(),
        suites: done.suites.as_deref(),
        files: &files,
    };
    out.write_json("manifest.json", "manifest", &m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match &cli.command {
        Command::Solve(_) => "solve",
        Command::Sweep { .. } => "sweep",
        Command::Verify { .. } => "verify",
    };
    let mut out = match OutDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => return abort(None, command, Abort::from(Error::Io(e))),
    };
    let result = match cli.command {
        Command::Solve(c) => solve(&mut out, cli.jobs, &c.config),
        Command::Sweep { config, masses } => sweep(&mut out, cli.jobs, &config.config, masses),
        Command::Verify { suite } => verify(&mut out, cli.jobs, suite),
    };
    match result {
        Ok(done) => match write_manifest(&mut out, command, &done) {
            Ok(()) => ExitCode::from(done.exit_code),
            Err(e) => abort(None, command, e.into()),
        },
        Err(a) => abort(Some(&mut out), command, a),
    }
}

/// Machine-readable abort on stderr, mirrored into the output directory
/// when it is writable.
fn abort(out: Option<&mut OutDir>, command: &'static str, a: Abort) -> ExitCode {
    let line = output::to_json(&AbortReport { command, status: "aborted", abort: &a }).unwrap_or_default();
    eprint!("{}", String::from_utf8_lossy(&line));
    if let Some(out) = out {
        let done = Done { status: "aborted", exit_code: a.exit_code, config: None, masses: None, suites: None };
        let _ = out
            .write_json("report.json", "report", &AbortReport { command, status: "aborted", abort: &a })
            .and_then(|_| write_manifest(out, command, &done));
    }
    ExitCode::from(a.exit_code)
}
