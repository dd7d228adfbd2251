use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use forage::context::{ApplicationContext, ContextError, MobileContext, NetworkLink, SurrogateContext};
use forage::harness::{render_decision, run_scenario, write_csv, HarnessError, Scenario};
use forage::runtime::serve;
use forage::solver::{decide, CostMode, Problem, SolverWeights};
use forage::workloads::{sample_input, TaskRegistry};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "forage", version, about = "Decide where to run a mobile task, and run it")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick the cheapest feasible location for one task request.
    Decide {
        #[arg(long)]
        mobile: PathBuf,
        /// Surrogate descriptor; repeat for several surrogates.
        #[arg(long = "surrogate", required = true)]
        surrogates: Vec<PathBuf>,
        /// Network descriptor shared by every surrogate.
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        app: PathBuf,
        /// Value substituted for N.
        #[arg(long)]
        input: f64,
        /// Serialized input size in bytes; derived from the task when omitted.
        #[arg(long)]
        input_bytes: Option<f64>,
        /// w1,w2,w3,w4 (time, energy, processing power, memory), summing to 1.
        #[arg(long, value_parser = parse_weights)]
        weights: SolverWeights,
        #[arg(long, default_value = "raw")]
        mode: CostMode,
    },
    /// Run a scenario sweep and write the results as CSV.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve task requests as a surrogate.
    Serve {
        #[arg(long)]
        bind: String,
        #[arg(long)]
        context: PathBuf,
    },
}

fn parse_weights(s: &str) -> Result<SolverWeights, String> {
    s.parse().map_err(|e: forage::solver::SolverError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> Result<T, ContextError>) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn harness_failure(err: HarnessError) -> Failure {
    match err {
        HarnessError::Config(_) | HarnessError::Descriptor { .. } => Failure::Usage(err.to_string()),
        HarnessError::Io { ref path, .. } if path.extension().is_some_and(|e| e == "xml") => {
            Failure::Usage(err.to_string())
        }
        other => Failure::Runtime(other.to_string()),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Decide {
            mobile,
            surrogates,
            network,
            app,
            input,
            input_bytes,
            weights,
            mode,
        } => {
            let mobile = load(&mobile, MobileContext::parse)?;
            let surrogates = surrogates
                .iter()
                .map(|p| load(p, SurrogateContext::parse))
                .collect::<Result<Vec<_>, _>>()?;
            let link = load(&network, NetworkLink::parse)?;
            let app = load(&app, ApplicationContext::parse)?;
            let input_bytes = input_bytes.unwrap_or_else(|| derived_input_bytes(&app, input));
            let links = vec![link; surrogates.len()];
            let problem = Problem {
                mobile: &mobile,
                surrogates: &surrogates,
                links: &links,
                app: &app,
                input_value: input,
                input_bytes,
            };
            let decision = decide(&problem, &weights, mode).map_err(|e| Failure::Usage(e.to_string()))?;
            print!("{}", render_decision(&decision));
            Ok(())
        }
        Command::Run { scenario, out } => {
            let scenario = Scenario::from_file(&scenario).map_err(harness_failure)?;
            let rows = run_scenario(&scenario, &TaskRegistry::with_builtin()).map_err(harness_failure)?;
            let file = fs::File::create(&out)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            write_csv(&rows, std::io::BufWriter::new(file)).map_err(harness_failure)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Serve { bind, context } => {
            let context = load(&context, SurrogateContext::parse)?;
            serve(&bind, context, TaskRegistry::with_builtin())
                .map_err(|e| Failure::Runtime(format!("serve on {bind}: {e}")))
        }
    }
}

// Bytes of the task's own encoding of input N, or 0 (the descriptor's base
// input size then applies) for tasks without a built-in codec.
fn derived_input_bytes(app: &ApplicationContext, input: f64) -> f64 {
    if input.fract() != 0.0 || input < 1.0 {
        return 0.0;
    }
    let registry = TaskRegistry::with_builtin();
    let Ok(task) = registry.get(&app.name) else {
        return 0.0;
    };
    sample_input(&app.name, input as u64)
        .ok()
        .and_then(|payload| task.input_bytes(&payload).ok())
        .unwrap_or(0.0)
}

fn main() -> ExitCode {
    let filter = EnvFilter::try_from_env("FORAGE_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();

    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
