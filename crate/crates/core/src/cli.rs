//! Command line front end.
//!
//! Exit codes: 0 success, 1 infeasible allocation (or an infeasible
//! `oracle feasible` verdict), 2 usage, input or parse error, 3 internal
//! invariant violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::allocator::{verify_schedule, AllocError, AllocatorKind};
use crate::io::{
    parse_curve, parse_instance, parse_schedule_csv, parse_traces, quality_lines,
    write_infeasibility_csv, write_report_csv, write_schedule_csv, write_sweep_csv, InstanceDocument,
};
use crate::linkquality::{estimate_quality_map, BerCurve};
use crate::oracle::{exact_path_pdr, exhaustive_feasible, DEFAULT_SEARCH_BOUND};
use crate::simulator::generator::{insufficient_slot_rate, GeneratorConfig};
use crate::simulator::{simulate, SimParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "laca", version, about = "Deadline-driven multichannel TDMA scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocate a schedule and write it as CSV.
    Allocate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "laca")]
        algo: AllocatorKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo simulation of a schedule.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Keep retrying past the deadline until the horizon.
        #[arg(long)]
        no_drop: bool,
    },
    /// Exact engines for small instances.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Insufficient-slot rate over a range of channel counts.
    Sweep {
        /// TOML generator config.
        #[arg(long)]
        generator: PathBuf,
        /// Inclusive range `A..B`.
        #[arg(long, value_parser = parse_range)]
        channels: (u32, u32),
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "laca")]
        algo: AllocatorKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Estimate link quality from RSSI traces.
    Estimate {
        #[arg(long)]
        traces: PathBuf,
        /// BER curve file; the built-in curve when omitted.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Exact on-time delivery probability of one path.
    Pdr {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        path: String,
    },
    /// Exhaustive feasibility check.
    Feasible {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        bound: u64,
    },
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    if a < 1 || a > b {
        return Err(format!("range {a}..{b} must satisfy 1 <= A <= B"));
    }
    Ok((a, b))
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn internal(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INTERNAL, message: message.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_document(path: &Path) -> Result<InstanceDocument, Failure> {
    parse_instance(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(internal)
}

/// Runs the tool on `argv` (program name first), writing human-readable
/// output to the given streams. Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run`] against the process's standard streams.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Allocate { instance, algo, out: dest } => {
            let doc = load_document(&instance)?;
            match algo.allocate(&doc.instance, &doc.quality, &doc.params) {
                Ok(schedule) => {
                    let v = verify_schedule(&schedule, &doc.instance, &doc.params, Some(&doc.quality));
                    if let Some(first) = v.first() {
                        return Err(internal(format!("allocated schedule fails verification: {first}")));
                    }
                    write(&dest, &write_schedule_csv(&schedule, &doc.instance))?;
                    Ok(EXIT_OK)
                }
                Err(AllocError::Infeasible(report)) => {
                    write(&dest, &write_infeasibility_csv(&report))?;
                    let _ = writeln!(out, "insufficient slots: {report}");
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(usage(e)),
            }
        }
        Command::Simulate { instance, schedule, trials, seed, out: dest, threads, no_drop } => {
            let doc = load_document(&instance)?;
            let sched = parse_schedule_csv(&read(&schedule)?, &doc.instance)
                .map_err(|e| usage(format!("{}: {e}", schedule.display())))?;
            let params = SimParams { trials, master_seed: seed, drop_at_deadline: !no_drop };
            let report = pool(threads)?
                .install(|| simulate(&doc.instance, &sched, &doc.quality, &params))
                .map_err(usage)?;
            write(&dest, &write_report_csv(&report))?;
            Ok(EXIT_OK)
        }
        Command::Oracle(OracleCommand::Pdr { instance, schedule, path }) => {
            let doc = load_document(&instance)?;
            let sched = parse_schedule_csv(&read(&schedule)?, &doc.instance)
                .map_err(|e| usage(format!("{}: {e}", schedule.display())))?;
            let p = doc
                .instance
                .path_index(&path)
                .ok_or_else(|| usage(format!("unknown path `{path}`")))?;
            let r = exact_path_pdr(&doc.instance, &sched, &doc.quality, p).map_err(usage)?;
            let _ = writeln!(out, "{:.12}", r.probability);
            Ok(EXIT_OK)
        }
        Command::Oracle(OracleCommand::Feasible { instance, bound }) => {
            let doc = load_document(&instance)?;
            match exhaustive_feasible(&doc.instance, &doc.params, bound) {
                Ok(f) if f.feasible => {
                    let _ = writeln!(out, "feasible");
                    Ok(EXIT_OK)
                }
                Ok(_) => {
                    let _ = writeln!(out, "infeasible");
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(usage(e)),
            }
        }
        Command::Sweep { generator, channels: (lo, hi), runs, seed, algo, out: dest, threads } => {
            let text = read(&generator)?;
            let cfg: GeneratorConfig =
                toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", generator.display())))?;
            let params = cfg.alloc_params();
            let pool = pool(threads)?;
            let mut rows = Vec::new();
            for c in lo..=hi {
                let cfg = GeneratorConfig { channels: c, ..cfg.clone() };
                let rate = pool
                    .install(|| insufficient_slot_rate(&cfg, algo, &params, runs, seed))
                    .map_err(usage)?;
                rows.push((c, rate));
            }
            write(&dest, &write_sweep_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Estimate { traces, curve, instance, out: dest } => {
            let doc = load_document(&instance)?;
            let traces_parsed =
                parse_traces(&read(&traces)?).map_err(|e| usage(format!("{}: {e}", traces.display())))?;
            let curve = match curve {
                Some(p) => parse_curve(&read(&p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => BerCurve::default_curve(),
            };
            let fill = doc.quality.default_fill();
            let (map, observed) =
                estimate_quality_map(&traces_parsed, &curve, &doc.instance, fill).map_err(usage)?;
            let cells = observed.into_iter().map(|(l, ch, s)| (l, ch, s, map.get(l, ch, s)));
            write(&dest, &quality_lines(&doc.instance, cells))?;
            Ok(EXIT_OK)
        }
    }
}
