//! Experiment runner comparing three strategies over an input sweep:
//! always run locally, always offload to the first surrogate, and follow the
//! solver's decision.
//!
//! A scenario is an XML document naming the descriptor files (paths relative
//! to the scenario file) plus the sweep and solver settings:
//!
//! ```xml
//! <Scenario>
//!   <Name>nth-prime</Name>
//!   <Mobile>../descriptors/mobile.xml</Mobile>
//!   <Surrogate>../descriptors/surrogate.xml</Surrogate>
//!   <Network>../descriptors/network-1MBps.xml</Network>
//!   <Application>../descriptors/nth-prime.xml</Application>
//!   <Sweep>100, 1000..1003, 10000</Sweep>
//!   <Weights>1,0,0,0</Weights>
//!   <Mode>raw</Mode>
//!   <Link>simulated</Link>
//! </Scenario>
//! ```
//!
//! `<Surrogate>` may repeat. `<Link>` is `simulated` (virtual clock, the
//! default), `loopback` (in-process daemons on 127.0.0.1) or `real` (the
//! daemons at the surrogates' descriptor addresses).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use tracing::{debug, warn};

use crate::context::{ApplicationContext, ContextError, Fields, MobileContext, NetworkLink, SurrogateContext};
use crate::estimator::{CandidateEstimate, Location};
use crate::runtime::{
    execute_local, execute_local_simulated, execute_remote, Execution, LinkMode, RemoteClient,
    RunningServer, RuntimeError, Server, SimulatedSurrogate, VirtualClock,
};
use crate::solver::{decide, CandidateReport, CostMode, Decision, Outcome, Problem, SolverWeights};
use crate::workloads::{sample_input, TaskRegistry};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Descriptor {
        path: PathBuf,
        #[source]
        source: ContextError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkKind {
    #[default]
    Simulated,
    Loopback,
    Real,
}

impl FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "simulated" => Ok(LinkKind::Simulated),
            "loopback" => Ok(LinkKind::Loopback),
            "real" => Ok(LinkKind::Real),
            other => Err(format!("unknown link mode {other:?} (expected simulated|loopback|real)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub mobile: PathBuf,
    pub surrogates: Vec<PathBuf>,
    pub network: PathBuf,
    pub application: PathBuf,
    pub sweep: Vec<u64>,
    pub weights: SolverWeights,
    pub mode: CostMode,
    pub link: LinkKind,
}

impl ScenarioConfig {
    /// Parses a scenario document; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let config_err = |e: ContextError| HarnessError::Config(e.to_string());
        let fields = Fields::from_document(text, "Scenario").map_err(config_err)?;
        let path = |tag: &str| -> Result<PathBuf, HarnessError> {
            Ok(base_dir.join(fields.required(tag).map_err(config_err)?))
        };
        let surrogates: Vec<PathBuf> = fields.all("Surrogate").iter().map(|p| base_dir.join(p)).collect();
        if surrogates.is_empty() {
            return Err(HarnessError::Config("at least one <Surrogate> is required".into()));
        }
        let weights = fields
            .required("Weights")
            .map_err(config_err)?
            .parse::<SolverWeights>()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let mode = match fields.optional("Mode") {
            Some(m) => m.parse().map_err(HarnessError::Config)?,
            None => CostMode::default(),
        };
        let link = match fields.optional("Link") {
            Some(l) => l.parse().map_err(HarnessError::Config)?,
            None => LinkKind::default(),
        };
        Ok(Self {
            name: fields.optional("Name").unwrap_or("scenario").to_string(),
            mobile: path("Mobile")?,
            surrogates,
            network: path("Network")?,
            application: path("Application")?,
            sweep: parse_sweep(fields.required("Sweep").map_err(config_err)?)?,
            weights,
            mode,
            link,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Comma-separated values, each a number or an inclusive `start..end` range.
pub fn parse_sweep(text: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = |item: &str| HarnessError::Config(format!("bad sweep item {item:?}"));
    let mut values = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((start, end)) = item.split_once("..") {
            let start: u64 = start.trim().parse().map_err(|_| bad(item))?;
            let end: u64 = end.trim().parse().map_err(|_| bad(item))?;
            if end < start {
                return Err(bad(item));
            }
            values.extend(start..=end);
        } else {
            values.push(item.parse().map_err(|_| bad(item))?);
        }
    }
    if values.is_empty() {
        return Err(HarnessError::Config("sweep is empty".into()));
    }
    if values.contains(&0) {
        return Err(HarnessError::Config("sweep values must be positive".into()));
    }
    Ok(values)
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_descriptor<T>(path: &Path, parse: impl Fn(&str) -> Result<T, ContextError>) -> Result<T, HarnessError> {
    parse(&read(path)?).map_err(|source| HarnessError::Descriptor {
        path: path.to_path_buf(),
        source,
    })
}

/// A scenario with its descriptors loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mobile: MobileContext,
    pub surrogates: Vec<SurrogateContext>,
    pub link: NetworkLink,
    pub app: ApplicationContext,
}

impl Scenario {
    pub fn load(config: ScenarioConfig) -> Result<Self, HarnessError> {
        let mobile = load_descriptor(&config.mobile, MobileContext::parse)?;
        let surrogates = config
            .surrogates
            .iter()
            .map(|p| load_descriptor(p, SurrogateContext::parse))
            .collect::<Result<Vec<_>, _>>()?;
        let link = load_descriptor(&config.network, NetworkLink::parse)?;
        let app = load_descriptor(&config.application, ApplicationContext::parse)?;
        Ok(Self {
            config,
            mobile,
            surrogates,
            link,
            app,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::load(ScenarioConfig::load(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Local,
    Offload,
    Solver,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Local, Strategy::Offload, Strategy::Solver];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Local => "local",
            Strategy::Offload => "offload",
            Strategy::Solver => "solver",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub input_value: u64,
    pub strategy: Strategy,
    /// `local`, `offload` or `infeasible`.
    pub decision: String,
    /// `mobile`, a surrogate name, or empty when nothing ran.
    pub location: String,
    pub est_time_s: Option<f64>,
    pub meas_time_s: Option<f64>,
    pub est_energy_j: Option<f64>,
    pub cost: Option<f64>,
    pub feasible: bool,
    pub notes: String,
}

pub const CSV_HEADER: [&str; 11] = [
    "scenario",
    "input_value",
    "strategy",
    "decision",
    "location",
    "est_time_s",
    "meas_time_s",
    "est_energy_j",
    "cost",
    "feasible",
    "notes",
];

/// Input value and charged input bytes for sweep point `n`.
fn input_profile(registry: &TaskRegistry, app: &ApplicationContext, payload: &[u8]) -> Result<(f64, f64), HarnessError> {
    let task = registry
        .get(&app.name)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let value = task
        .input_value(payload)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let bytes = task
        .input_bytes(payload)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok((value, bytes))
}

/// Per-surrogate transports for a run. Loopback daemons live as long as
/// this value.
struct Transports {
    modes: Vec<LinkMode>,
    _daemons: Vec<RunningServer>,
}

impl Transports {
    fn new(scenario: &Scenario, registry: &TaskRegistry) -> Result<Self, HarnessError> {
        let mut daemons = Vec::new();
        let modes = scenario
            .surrogates
            .iter()
            .map(|s| -> Result<LinkMode, HarnessError> {
                Ok(match scenario.config.link {
                    LinkKind::Simulated => LinkMode::Simulated(SimulatedSurrogate::new(
                        s.clone(),
                        scenario.link.clone(),
                        registry.clone(),
                    )),
                    LinkKind::Real => LinkMode::Real(RemoteClient::new(s.address.clone())),
                    LinkKind::Loopback => {
                        let daemon = Server::bind("127.0.0.1:0", s.clone(), registry.clone())
                            .and_then(Server::spawn)
                            .map_err(|source| HarnessError::Io {
                                path: PathBuf::from("127.0.0.1:0"),
                                source,
                            })?;
                        let client = RemoteClient::new(daemon.addr().to_string());
                        daemons.push(daemon);
                        LinkMode::Real(client)
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            modes,
            _daemons: daemons,
        })
    }
}

/// Runs every sweep point under all three strategies, in sweep order.
pub fn run_scenario(scenario: &Scenario, registry: &TaskRegistry) -> Result<Vec<ResultRow>, HarnessError> {
    let transports = Transports::new(scenario, registry)?;
    let links = vec![scenario.link.clone(); scenario.surrogates.len()];
    let simulated = scenario.config.link == LinkKind::Simulated;
    let mut rows = Vec::with_capacity(scenario.config.sweep.len() * 3);

    for &n in &scenario.config.sweep {
        let payload = sample_input(&scenario.app.name, n).map_err(|e| HarnessError::Config(e.to_string()))?;
        let (input_value, input_bytes) = input_profile(registry, &scenario.app, &payload)?;
        let problem = Problem {
            mobile: &scenario.mobile,
            surrogates: &scenario.surrogates,
            links: &links,
            app: &scenario.app,
            input_value,
            input_bytes,
        };
        let decision = decide(&problem, &scenario.config.weights, scenario.config.mode)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        debug!(n, outcome = %decision.outcome, "decided");

        let run = |report: &CandidateReport| -> Result<Execution, RuntimeError> {
            let mut clock = VirtualClock::new();
            match &report.location {
                Location::Local if simulated => {
                    execute_local_simulated(registry, &scenario.app, &scenario.mobile, &payload, &mut clock)
                }
                Location::Local => execute_local(registry, &scenario.app.name, &payload),
                Location::Surrogate(name) => {
                    let idx = scenario
                        .surrogates
                        .iter()
                        .position(|s| &s.name == name)
                        .expect("candidate names come from the surrogate list");
                    execute_remote(&transports.modes[idx], &scenario.app, &payload, &mut clock)
                }
            }
        };

        for strategy in Strategy::ALL {
            let (decision_label, report) = match strategy {
                Strategy::Local => ("local".to_string(), Some(&decision.candidates[0])),
                Strategy::Offload => ("offload".to_string(), decision.candidates.get(1)),
                Strategy::Solver => match decision.chosen() {
                    Some(chosen) => (outcome_label(&decision.outcome).to_string(), Some(chosen)),
                    None => ("infeasible".to_string(), None),
                },
            };
            let mut row = ResultRow {
                scenario: scenario.config.name.clone(),
                input_value: n,
                strategy,
                decision: decision_label,
                location: String::new(),
                est_time_s: None,
                meas_time_s: None,
                est_energy_j: None,
                cost: None,
                feasible: false,
                notes: String::new(),
            };
            let Some(report) = report else {
                row.notes = infeasible_note(&decision);
                rows.push(row);
                continue;
            };
            row.location = report.location.to_string();
            if let Some(est) = &report.estimate {
                row.est_time_s = Some(est.time);
                row.est_energy_j = Some(est.energy);
            }
            row.cost = Some(report.cost);
            if !report.verdict.is_feasible() {
                row.notes = report.verdict.to_string();
                rows.push(row);
                continue;
            }
            match run(report) {
                Ok(exec) => {
                    row.feasible = true;
                    row.meas_time_s = Some(exec.timing.total());
                }
                Err(err) => {
                    warn!(n, strategy = strategy.as_str(), %err, "execution failed");
                    row.notes = format!("execution failed: {err}");
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn outcome_label(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Local => "local",
        Outcome::Offload(_) => "offload",
        Outcome::Infeasible => "infeasible",
    }
}

fn infeasible_note(decision: &Decision) -> String {
    decision
        .candidates
        .iter()
        .map(|c| format!("{}: {}", c.location, c.verdict))
        .collect::<Vec<_>>()
        .join("; ")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with a header row, `.` decimals and LF line endings.
pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: W) -> Result<(), HarnessError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in rows {
        writer.write_record([
            r.scenario.clone(),
            r.input_value.to_string(),
            r.strategy.as_str().to_string(),
            r.decision.clone(),
            r.location.clone(),
            opt(r.est_time_s),
            opt(r.meas_time_s),
            opt(r.est_energy_j),
            opt(r.cost),
            r.feasible.to_string(),
            r.notes.clone(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Ranked candidate table followed by a single `DECISION` line.
pub fn render_decision(decision: &Decision) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<4} {:<20} {:>14} {:>14} {:>14} {:>14}  verdict",
        "rank", "location", "time_s", "energy_j", "cost", "proc_power"
    );
    for (i, c) in decision.ranked().into_iter().enumerate() {
        let (time, energy, power) = c.estimate.as_ref().map_or(
            (String::from("-"), String::from("-"), String::from("-")),
            |e: &CandidateEstimate| {
                (
                    format!("{:.6e}", e.time),
                    format!("{:.6e}", e.energy),
                    format!("{:.4e}", e.processing_power),
                )
            },
        );
        let _ = writeln!(
            out,
            "{:<4} {:<20} {:>14} {:>14} {:>14} {:>14}  {}",
            i + 1,
            c.location.to_string(),
            time,
            energy,
            format!("{:.6e}", c.cost),
            power,
            c.verdict
        );
    }
    let chosen_cost = decision.chosen().map(|c| c.cost.to_string()).unwrap_or_default();
    let location = match &decision.outcome {
        Outcome::Local => "mobile".to_string(),
        Outcome::Offload(name) => name.clone(),
        Outcome::Infeasible => String::new(),
    };
    let _ = writeln!(
        out,
        "DECISION outcome={} location={} cost={} candidates={} elapsed_us={}",
        outcome_label(&decision.outcome).to_ascii_uppercase(),
        location,
        chosen_cost,
        decision.candidates.len(),
        decision.elapsed.as_micros()
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_items() {
        assert_eq!(parse_sweep("4..7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_sweep("1000, 3000,10000").unwrap(), vec![1000, 3000, 10000]);
        assert_eq!(parse_sweep(" 1, 3..4 ,9").unwrap(), vec![1, 3, 4, 9]);
        for bad in ["", " , ", "5..2", "a", "1.5", "0"] {
            assert!(matches!(parse_sweep(bad), Err(HarnessError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn scenario_requires_surrogate_and_weights() {
        let base = Path::new("/tmp");
        let doc = "<Scenario><Mobile>m.xml</Mobile><Network>n.xml</Network>\
                   <Application>a.xml</Application><Sweep>1</Sweep><Weights>1,0,0,0</Weights></Scenario>";
        assert!(matches!(ScenarioConfig::parse(doc, base), Err(HarnessError::Config(_))));
        let doc = doc.replace("<Sweep>", "<Surrogate>s.xml</Surrogate><Sweep>");
        let cfg = ScenarioConfig::parse(&doc, base).unwrap();
        assert_eq!(cfg.surrogates, vec![PathBuf::from("/tmp/s.xml")]);
        assert_eq!(cfg.mode, CostMode::Raw);
        assert_eq!(cfg.link, LinkKind::Simulated);
        let bad_weights = doc.replace("1,0,0,0", "0.5,0.5,0.5,0.5");
        assert!(matches!(ScenarioConfig::parse(&bad_weights, base), Err(HarnessError::Config(_))));
    }
}
