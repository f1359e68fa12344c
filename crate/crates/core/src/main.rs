use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use atcsim::exercise::{has_errors, lint_scenario, numbered_roster, parse_scenario, plan_sessions, Scenario, ScenarioError};
use atcsim::headless::{parse_pilot_script, run_headless, HeadlessConfig, HeadlessError};
use atcsim::host::server::{serve, ServeConfig, ServeError};
use atcsim::host::{replay_file, LogTarget, ReplayError, SessionConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SCENARIO_DIR: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "atcsim", version, about = "ATC training simulator host and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the exercise host.
    Serve {
        #[arg(long, env = "ATCSIM_PORT", default_value_t = 9100)]
        port: u16,
        #[arg(long, default_value = "0.0.0.0")]
        bind: IpAddr,
        /// Directory searched for the scenario each block starts with.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        blocks: u32,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// Wall-clock tick interval; defaults to the scenario tick length.
        #[arg(long)]
        tick_ms: Option<u64>,
        /// Shared secret clients must present in HELLO.
        #[arg(long, env = "ATCSIM_TOKEN")]
        token: Option<String>,
    },
    /// Lint a scenario file.
    Validate { file: PathBuf },
    /// Split a cohort into sessions.
    Plan {
        #[arg(long)]
        students: usize,
        #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
        capacity: u64,
        /// Also print seat rotations for an exercise of this length.
        #[arg(long)]
        duration_s: Option<u64>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        stations: u32,
    },
    /// Re-run a recorded session.
    Replay {
        log: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        verify_digests: bool,
    },
    /// Run an exercise with scripted pilots and record it.
    Headless {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        pilot_script: PathBuf,
        /// Simulated seconds; defaults to the scenario duration.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "headless.atclog")]
        log: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Serve { port, bind, scenario_dir, blocks, log_dir, tick_ms, token } => {
            let config = ServeConfig {
                bind,
                port,
                blocks,
                scenario_dir,
                log_dir,
                tick_interval: tick_ms.map(Duration::from_millis),
                session: SessionConfig { token, ..SessionConfig::default() },
            };
            cmd_serve(config)
        }
        Command::Validate { file } => cmd_validate(&file),
        Command::Plan { students, capacity, duration_s, stations } => cmd_plan(students, capacity as usize, duration_s, stations),
        Command::Replay { log, scenario, verify_digests } => cmd_replay(&log, &scenario, verify_digests),
        Command::Headless { scenario, pilot_script, duration, log } => cmd_headless(&scenario, &pilot_script, duration, log),
    }
}

fn cmd_serve(config: ServeConfig) -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    runtime.block_on(async move {
        let handle = match serve(config).await {
            Ok(h) => h,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(match e {
                    ServeError::Bind { .. } => EXIT_INPUT,
                    ServeError::ScenarioDir { .. } => EXIT_SCENARIO_DIR,
                    ServeError::NoBlocks => EXIT_USAGE,
                    _ => EXIT_FAIL,
                });
            }
        };
        println!("listening: {}", handle.local_addr());
        if let Err(e) = tokio::signal::ctrl_c().await {
            eprintln!("error: cannot wait for shutdown signal: {e}");
        }
        handle.shutdown().await;
        ExitCode::SUCCESS
    })
}

fn cmd_validate(file: &Path) -> ExitCode {
    let bytes = match std::fs::read(file) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let issues = match lint_scenario(&bytes) {
        Ok((_, issues)) => issues,
        Err(ScenarioError::Parse(msg)) => {
            eprintln!("error: {}: {msg}", file.display());
            return ExitCode::from(EXIT_INPUT);
        }
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    for issue in &issues {
        println!("{issue}");
    }
    if has_errors(&issues) {
        eprintln!("{}: {} issue(s)", file.display(), issues.len());
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_plan(students: usize, capacity: usize, duration_s: Option<u64>, stations: u32) -> ExitCode {
    let roster = numbered_roster(students);
    let mut plan = match plan_sessions(&roster, capacity) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(d) = duration_s {
        plan = match plan.with_rotations(d, stations) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        };
    }
    println!("sessions: {}", plan.session_count);
    for s in &plan.sessions {
        println!("session {}: {}", s.session_index, s.students.join(" "));
        if let Some(r) = &s.rotation {
            for slot in &r.slots {
                let seats: Vec<String> = slot.assignments.iter().map(|(seat, &i)| format!("{seat:?}={}", s.students[i])).collect();
                println!("  slot {} {}-{}s: {}", slot.slot_index, slot.start_s, slot.end_s, seats.join(" "));
            }
        }
    }
    if duration_s.is_some() {
        let bad = plan.infeasible_sessions();
        if !bad.is_empty() {
            eprintln!("sessions without a controller seat for everyone: {bad:?}");
        }
    }
    ExitCode::SUCCESS
}

fn load_scenario(path: &Path) -> Result<Scenario, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenario(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_replay(log: &Path, scenario: &Path, verify: bool) -> ExitCode {
    let scenario = match load_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let (contents, report) = match replay_file(log, &scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", log.display());
            return ExitCode::from(match e {
                ReplayError::ScenarioMismatch { .. } => EXIT_FAIL,
                ReplayError::CorruptLog { .. } | ReplayError::Io(_) => EXIT_INPUT,
                ReplayError::Host(_) => EXIT_FAIL,
            });
        }
    };
    println!("final_digest: {}", report.final_digest().unwrap_or(""));
    println!("ticks: {}", report.world_ticks);
    println!("host_ticks: {}", report.host_ticks());
    println!("separation_events: {}", report.separation_events);
    if verify {
        match report.verify(&contents) {
            Ok(n) => println!("verified: {n}"),
            Err(d) => {
                println!("divergence: {}", d.tick_index);
                eprintln!("digest mismatch at host tick {}: recorded {} replayed {}", d.tick_index, d.recorded, d.replayed);
                return ExitCode::from(EXIT_FAIL);
            }
        }
    }
    ExitCode::SUCCESS
}

fn cmd_headless(scenario: &Path, script: &Path, duration: Option<f64>, log: PathBuf) -> ExitCode {
    let scenario = match load_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let text = match std::fs::read_to_string(script) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", script.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let script = match parse_pilot_script(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: pilot script {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let config = HeadlessConfig { scenario, script, duration_s: duration, log: LogTarget::File(log) };
    match run_headless(config) {
        Ok(report) => {
            println!("final_digest: {}", report.final_digest);
            println!("ticks: {}", report.world_ticks);
            println!("host_ticks: {}", report.host_ticks);
            println!("separation_events: {}", report.separation_events);
            println!("commands: {}", report.commands_sent);
            for r in &report.rejects {
                println!("reject: line {} {} {}", r.line, r.reason, r.detail);
            }
            if let Some(p) = &report.log_path {
                println!("log: {}", p.display());
            }
            eprintln!("{} ran {} ticks", report.session_id, report.world_ticks);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                HeadlessError::UnknownCallsign { .. } | HeadlessError::Command { .. } => EXIT_FAIL,
                HeadlessError::Script(_) => EXIT_INPUT,
                _ => EXIT_FAIL,
            })
        }
    }
}
