use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use levelsim::config::{EngineMode, RunConfig};
use levelsim::engine::Engine;
use levelsim::metrics::RunReport;
use levelsim::trace::{self, SynthKind, SyntheticSpec, TraceError, TraceEvent};

#[derive(Parser)]
#[command(
    name = "levelsim",
    version,
    about = "Trace-driven three-level cache hierarchy simulator with cache-level prediction"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a trace under one or more lookup modes.
    Run(RunArgs),
    /// Generate a synthetic trace.
    Gen(GenArgs),
    /// Summarize and compare previously written report files.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace file, text or binary (sniffed by magic).
    #[arg(long)]
    trace: PathBuf,
    /// Dotted-path config override, e.g. --set l1.capacity_bytes=65536.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Modes to run, overriding the config's list.
    #[arg(long)]
    mode: Vec<String>,
    /// Directory for per-mode report/summary/windows files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Skip writing output files; print the summary table only.
    #[arg(long)]
    no_files: bool,
}

#[derive(Args)]
struct GenArgs {
    /// TOML synthetic-trace spec (phases, footprint, seed, ...).
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
    /// One-phase shorthand: stream, random_uniform, pointer_chase, strided.
    #[arg(long)]
    kind: Option<String>,
    /// Block stride for --kind strided.
    #[arg(long, default_value_t = 1)]
    stride: i64,
    /// Footprint with optional K/M/G suffix, e.g. 16M.
    #[arg(long, default_value = "1M")]
    footprint: String,
    #[arg(long, default_value_t = 100_000)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Percentage of writes.
    #[arg(long, default_value_t = 0)]
    write_percent: u8,
    /// Base physical address of the footprint.
    #[arg(long, default_value_t = 0)]
    base_addr: u64,
    #[arg(long)]
    out: PathBuf,
    /// Emit the compact binary container instead of text.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Report JSON files written by `run`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
}

enum CliError {
    /// Parse or validation failure: exit code 1.
    Invalid(String),
    /// I/O failure: exit code 2.
    Io(String),
}

fn io_err(ctx: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{ctx}: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Analyze(args) => cmd_analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Parses a size with an optional binary K/M/G suffix.
fn parse_size(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, mult) = match s.chars().last() {
        Some('k') | Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('m') | Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('g') | Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .map(|v| v * mult)
        .map_err(|_| format!("bad size {s:?}"))
}

fn worker_threads(modes: usize) -> usize {
    match std::env::var("LEVELSIM_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => modes.max(1),
    }
}

fn run_modes(cfg: &RunConfig, events: &[TraceEvent], threads: usize) -> Vec<RunReport> {
    let mut out = Vec::new();
    for chunk in cfg.modes.chunks(threads.max(1)) {
        let mut batch: Vec<RunReport> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&mode| s.spawn(move || Engine::run(cfg, mode, events)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .collect()
        });
        out.append(&mut batch);
    }
    out
}

fn load_events(path: &Path, phys_bytes: u64) -> Result<Vec<TraceEvent>, CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(&path.display().to_string(), e))?;
    trace::load_trace(&bytes, phys_bytes).map_err(|e| match e {
        TraceError::Io(e) => io_err(&path.display().to_string(), e),
        other => CliError::Invalid(format!("{}: {other}", path.display())),
    })
}

fn summary_line(r: &RunReport) -> String {
    let c = &r.categories;
    format!(
        "{:<9} accesses={} amat={:.3} seq={} skip={} opp={} harmful={} energy={:.1}",
        r.mode, r.accesses, r.amat, c.sequential_correct, c.useful_skip, c.opportunity_loss,
        c.harmful, r.energy_total
    )
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(|e| io_err(&p.display().to_string(), e))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::from_toml_with_overrides(&text, &args.sets)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    if !args.mode.is_empty() {
        cfg.modes = args
            .mode
            .iter()
            .map(|m| m.parse::<EngineMode>())
            .collect::<Result<_, _>>()
            .map_err(CliError::Invalid)?;
    }
    let events = load_events(&args.trace, cfg.phys_mem_bytes)?;
    let reports = run_modes(&cfg, &events, worker_threads(cfg.modes.len()));
    if !args.no_files {
        fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out.display().to_string(), e))?;
        for r in &reports {
            let base = args.out.join(&r.mode);
            let write = |suffix: &str, data: &[u8]| {
                let path = base.with_extension(suffix);
                fs::write(&path, data).map_err(|e| io_err(&path.display().to_string(), e))
            };
            write("report.json", &r.to_json())?;
            write("summary.csv", r.to_csv().as_bytes())?;
            write("windows.csv", r.windows_csv().as_bytes())?;
        }
    }
    for r in &reports {
        println!("{}", summary_line(r));
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let spec = match (&args.spec, &args.kind) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).map_err(|e| io_err(&path.display().to_string(), e))?;
            toml::from_str::<SyntheticSpec>(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        }
        (None, Some(kind)) => {
            let kind = match kind.as_str() {
                "stream" => SynthKind::Stream,
                "random_uniform" => SynthKind::RandomUniform,
                "pointer_chase" => SynthKind::PointerChase,
                "strided" => SynthKind::Strided {
                    delta_blocks: args.stride,
                },
                other => {
                    return Err(CliError::Invalid(format!(
                        "unknown kind {other:?} (expected stream, random_uniform, pointer_chase, strided)"
                    )))
                }
            };
            let footprint = parse_size(&args.footprint).map_err(CliError::Invalid)?;
            let mut spec = SyntheticSpec::single(kind, footprint, args.count, args.seed);
            spec.write_percent = args.write_percent;
            spec.base_addr = args.base_addr;
            spec
        }
        (None, None) => {
            return Err(CliError::Invalid("either --spec or --kind is required".into()))
        }
    };
    let events = trace::generate(&spec).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut buf = Vec::new();
    let result = if args.binary {
        trace::write_binary(&events, &mut buf)
    } else {
        trace::write_text(&events, &mut buf)
    };
    result.map_err(|e| io_err("encode trace", e))?;
    fs::write(&args.out, &buf).map_err(|e| io_err(&args.out.display().to_string(), e))?;
    println!("wrote {} events to {}", events.len(), args.out.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let bytes = fs::read(path).map_err(|e| io_err(&path.display().to_string(), e))?;
        let r = RunReport::from_json(&bytes)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        reports.push(r);
    }
    let baseline_amat = reports
        .iter()
        .find(|r| r.mode == "baseline")
        .map(|r| r.amat);
    for r in &reports {
        let eff = &r.effectiveness;
        let fmt = |v: Option<f64>| v.map_or("inf".to_string(), |v| format!("{v:.2}"));
        println!("{}", summary_line(r));
        println!(
            "          accuracy={:.3} meta_hit={:.3} recoveries={} x={} y={} class={:?}",
            r.categories.accuracy(),
            r.meta_hit_ratio,
            r.recoveries,
            fmt(eff.x),
            fmt(eff.y),
            eff.class
        );
        if let Some(base) = baseline_amat {
            if base > 0.0 && r.mode != "baseline" {
                println!("          amat_vs_baseline={:.3}", r.amat / base);
            }
        }
    }
    Ok(())
}
