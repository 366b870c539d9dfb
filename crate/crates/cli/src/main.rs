use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use ethervote_core::audit::audit_chain;
use ethervote_core::sim::{run_scenario, Scenario};
use ethervote_core::SystemClock;
use ethervote_server::{serve, ApiService, ServiceConfig};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "ethervote", version, about = "Desk-scale blockchain election simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file through a fresh in-process election.
    Run {
        scenario: PathBuf,
        /// Overrides the seed named in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the final chain to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Prints the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Verify a chain file and replay the election it records.
    Verify {
        chain: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "ETHERVOTE_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Chain file; created if missing, reloaded otherwise.
        #[arg(long, env = "ETHERVOTE_CHAIN")]
        chain: Option<PathBuf>,
        /// OTP window in seconds when the init request names none.
        #[arg(long, env = "ETHERVOTE_OTP_WINDOW")]
        otp_window: Option<u64>,
        #[arg(long, env = "ETHERVOTE_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "ETHERVOTE_AUTHORITY_PASSWORD", hide_env_values = true)]
        authority_password: Option<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            dump,
            json,
        } => run(&scenario, seed, dump.as_deref(), json),
        Command::Verify { chain, json } => verify(&chain, json),
        Command::Serve {
            bind,
            chain,
            otp_window,
            seed,
            authority_password,
        } => {
            let config = ServiceConfig {
                chain_path: chain,
                otp_window_seconds: otp_window,
                authority_password,
                seed,
            };
            start(bind, config)
        }
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ERROR)
}

fn run(path: &std::path::Path, seed: Option<u64>, dump: Option<&std::path::Path>, json: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => return fail(format_args!("{}: {err}", path.display())),
    };
    let scenario = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(err) => return fail(format_args!("{}: {err}", path.display())),
    };
    let outcome = match run_scenario(&scenario, seed) {
        Ok(o) => o,
        Err(err) => return fail(err),
    };
    if let Some(dump) = dump {
        if let Err(err) = std::fs::write(dump, &outcome.chain) {
            return fail(format_args!("{}: {err}", dump.display()));
        }
    }
    let report = &outcome.report;
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    } else {
        println!("{report}");
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS_FAILED)
    }
}

fn verify(path: &std::path::Path, json: bool) -> ExitCode {
    let bytes = match std::fs::read(path) {
        Ok(bytes) => bytes,
        Err(err) => return fail(format_args!("{}: {err}", path.display())),
    };
    let audit = audit_chain(&bytes);
    if json {
        let mut value = serde_json::to_value(&audit).expect("audit serializes");
        value["valid"] = audit.valid().into();
        println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    } else {
        let v = &audit.verification;
        println!("blocks            {}", v.length);
        if let Some(head) = v.head_hash {
            println!("chain head        {head}");
        }
        if let (Some(index), Some(fault)) = (v.first_bad_index, &v.fault) {
            println!("first bad block   {index} ({fault})");
        }
        if let Some(err) = &audit.replay_error {
            println!("replay failed     {err}");
        }
        if let Some(phase) = audit.phase {
            println!("phase             {phase:?}");
        }
        for (name, votes) in &audit.tally {
            println!("  {name:<20} {votes}");
        }
        println!("valid             {}", audit.valid());
    }
    if audit.valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS_FAILED)
    }
}

fn start(bind: SocketAddr, config: ServiceConfig) -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let (service, boot) = match ApiService::new(config, Arc::new(SystemClock)) {
        Ok(pair) => pair,
        Err(err) => return fail(err),
    };
    println!("authority address  {}", boot.authority);
    println!("authority password {}", boot.password);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(err) => return fail(err),
    };
    match runtime.block_on(serve(Arc::new(service), bind)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}
