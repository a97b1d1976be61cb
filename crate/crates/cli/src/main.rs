//! `verdant`: run garden scenarios headless, validate inputs, or serve the
//! monitoring API.
//!
//! Exit codes: 0 success, 1 invalid scenario or profile, 2 usage error,
//! 3 runtime failure (I/O, port in use, corrupt persistence).

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use verdant_core::batch::sweep_seeds;
use verdant_core::report::RunReport;
use verdant_core::scenarios;
use verdant_core::sim::{run, Scenario};
use verdant_core::{default_profile, load_profile, ThresholdProfile};
use verdant_service::{ServiceConfig, DATA_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "verdant",
    version,
    about = "Plant monitoring, watering and security simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario to completion and write a JSON report.
    Simulate(SimulateArgs),
    /// Serve the HTTP/WebSocket API over a live simulation.
    Serve(ServeArgs),
    /// Check a scenario and/or profile without running anything.
    Validate(ValidateArgs),
    /// Run one scenario across many seeds in parallel.
    Sweep(SweepArgs),
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Args)]
struct Inputs {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    scenario: String,
    /// Threshold profile file; defaults to the built-in profile.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-tick trace as NDJSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Persistence directory; defaults to $VERDANT_DATA_DIR, then ./verdant-data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Number of seeds, starting at `--first-seed`.
    #[arg(long, default_value_t = 16)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Invalid(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            Failure::Runtime(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_profile_arg(path: Option<&Path>) -> Result<ThresholdProfile, Failure> {
    match path {
        None => Ok(default_profile()),
        Some(path) => load_profile(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
    }
}

fn load_scenario_arg(arg: &str, profile: &ThresholdProfile) -> Result<Scenario, Failure> {
    let path = Path::new(arg);
    let scenario = if path.exists() {
        Scenario::from_json(&read(path)?).map_err(|e| Failure::Invalid(format!("{arg}: {e}")))?
    } else if let Some(builtin) = scenarios::builtin(arg) {
        builtin.map_err(|e| Failure::Invalid(format!("{arg}: {e}")))?
    } else {
        return Err(Failure::Runtime(format!(
            "{arg}: no such file or built-in scenario (built-ins: {})",
            scenarios::builtin_names().collect::<Vec<_>>().join(", ")
        )));
    };
    scenario
        .validate(profile)
        .map_err(|e| Failure::Invalid(format!("{arg}: {e}")))?;
    Ok(scenario)
}

fn load_inputs(inputs: &Inputs) -> Result<(Scenario, ThresholdProfile), Failure> {
    let profile = load_profile_arg(inputs.profile.as_deref())?;
    let scenario = load_scenario_arg(&inputs.scenario, &profile)?;
    Ok((scenario, profile))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let (mut scenario, profile) = load_inputs(&args.inputs)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let trace = run(&scenario, &profile).map_err(|e| Failure::Runtime(e.to_string()))?;
    let report = RunReport::from_trace(&scenario, &trace);
    write(&args.out, report.to_json().as_bytes())?;
    if let Some(path) = &args.trace {
        write(path, &trace.to_ndjson())?;
    }
    println!("{}", report.summary());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    if args.scenario.is_none() && args.profile.is_none() {
        return Err(Failure::Invalid(
            "nothing to validate: pass --scenario and/or --profile".into(),
        ));
    }
    let profile = load_profile_arg(args.profile.as_deref())?;
    if let Some(path) = &args.profile {
        println!("profile {}: ok", path.display());
    }
    if let Some(arg) = &args.scenario {
        let scenario = load_scenario_arg(arg, &profile)?;
        println!(
            "scenario {} ({arg}): ok, {} ticks",
            scenario.name,
            scenario.tick_count()
        );
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let (scenario, profile) = load_inputs(&args.inputs)?;
    let seeds: Vec<u64> = (args.first_seed..args.first_seed.saturating_add(args.seeds)).collect();
    for result in sweep_seeds(&scenario, &profile, &seeds) {
        let report = result.map_err(|e| Failure::Runtime(e.to_string()))?;
        let nonzero: Vec<String> = report
            .event_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(k, c)| format!("{k}={c}"))
            .collect();
        println!(
            "seed {:>6}: moisture {:.2}..{:.2}, valve open {:.0} s, {}",
            report.seed,
            report.soil_moisture.min,
            report.soil_moisture.max,
            report.valve_open_ms as f64 / 1000.0,
            nonzero.join(" ")
        );
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let (scenario, profile) = load_inputs(&args.inputs)?;
    if !(args.speed.is_finite() && args.speed > 0.0) {
        return Err(Failure::Invalid(format!(
            "--speed must be positive, got {}",
            args.speed
        )));
    }
    let data_dir = args
        .data_dir
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("verdant-data"));
    let config = ServiceConfig {
        addr: SocketAddr::new(args.host, args.port),
        speed: Some(args.speed),
        data_dir: Some(data_dir),
        ..ServiceConfig::new(scenario, profile)
    };

    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let handle = verdant_service::start(config)
            .await
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        let addr = handle.local_addr();
        println!("listening on http://{addr}");
        println!("port {}", addr.port());
        tokio::signal::ctrl_c()
            .await
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        handle.shutdown().await;
        Ok(())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Cmd::Simulate(args) => simulate(args),
        Cmd::Serve(args) => serve(args),
        Cmd::Validate(args) => validate(args),
        Cmd::Sweep(args) => sweep(args),
        Cmd::Scenarios => {
            for name in scenarios::builtin_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
