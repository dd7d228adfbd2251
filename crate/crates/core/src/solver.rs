//! Offloading decision: estimate every location, drop the ones that cannot
//! run the task, pick the cheapest of the rest.
//!
//! The cost of a location is
//!
//! ```text
//!         w1 * time + w2 * energy
//! cost = ---------------------------------------------
//!         w3 * processing_power + w4 * available_memory
//! ```
//!
//! with the denominator taken as 1 when `w3 = w4 = 0`. A location is
//! feasible when it has enough memory for the task and the mobile battery
//! holds at least the energy the location would draw from it.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext};
use crate::estimator::{estimate_local, estimate_offload, CandidateEstimate, Location};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("{surrogates} surrogates but {links} network links")]
    LinkCountMismatch { surrogates: usize, links: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverWeights {
    pub time: f64,
    pub energy: f64,
    pub processing_power: f64,
    pub memory: f64,
}

impl SolverWeights {
    pub fn new(time: f64, energy: f64, processing_power: f64, memory: f64) -> Result<Self, SolverError> {
        let all = [time, energy, processing_power, memory];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SolverError::InvalidWeights(format!(
                "weights must be nonnegative, got {all:?}"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(SolverError::InvalidWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            time,
            energy,
            processing_power,
            memory,
        })
    }

    pub fn time_only() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0).expect("valid weights")
    }

    pub fn energy_only() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0).expect("valid weights")
    }
}

impl FromStr for SolverWeights {
    type Err = SolverError;

    /// Four comma-separated decimals, e.g. `0.4,0.4,0.1,0.1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(SolverError::InvalidWeights(format!(
                "expected 4 comma-separated weights, got {s:?}"
            )));
        }
        let mut w = [0.0; 4];
        for (slot, part) in w.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| SolverError::InvalidWeights(format!("not a number: {part:?}")))?;
        }
        SolverWeights::new(w[0], w[1], w[2], w[3])
    }
}

impl fmt::Display for SolverWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.time, self.energy, self.processing_power, self.memory
        )
    }
}

/// How the four cost factors are scaled before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostMode {
    /// Factors in their own units.
    #[default]
    Raw,
    /// Each factor divided by its maximum over the estimated candidates.
    Normalized,
}

impl FromStr for CostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "raw" => Ok(CostMode::Raw),
            "normalized" => Ok(CostMode::Normalized),
            other => Err(format!("unknown cost mode {other:?} (expected raw|normalized)")),
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMode::Raw => "raw",
            CostMode::Normalized => "normalized",
        })
    }
}

/// Weighted cost of a candidate; `+inf` when the denominator vanishes.
pub fn cost(est: &CandidateEstimate, w: &SolverWeights) -> f64 {
    weighted_cost(
        est.time,
        est.energy,
        est.processing_power,
        est.available_memory,
        w,
    )
}

fn weighted_cost(time: f64, energy: f64, power: f64, memory: f64, w: &SolverWeights) -> f64 {
    let numerator = w.time * time + w.energy * energy;
    let denominator = if w.processing_power == 0.0 && w.memory == 0.0 {
        1.0
    } else {
        w.processing_power * power + w.memory * memory
    };
    if denominator == 0.0 {
        f64::INFINITY
    } else {
        numerator / denominator
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    Memory { available: f64, required: f64 },
    Energy { available: f64, required: f64 },
    EstimateFailed(String),
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::Memory {
                available,
                required,
            } => write!(f, "memory: {available} B available < {required} B required"),
            Infeasibility::Energy {
                available,
                required,
            } => write!(f, "energy: {available} J available < {required} J required"),
            Infeasibility::EstimateFailed(cause) => write!(f, "estimate failed: {cause}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible,
    Infeasible(Infeasibility),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Feasible => f.write_str("feasible"),
            Verdict::Infeasible(reason) => write!(f, "infeasible ({reason})"),
        }
    }
}

/// Memory is checked at the candidate's location, energy against the
/// mobile battery. Memory is reported first when both fail.
pub fn feasibility(
    est: &CandidateEstimate,
    app: &ApplicationContext,
    mobile: &MobileContext,
) -> Verdict {
    if est.available_memory < app.required_memory {
        return Verdict::Infeasible(Infeasibility::Memory {
            available: est.available_memory,
            required: app.required_memory,
        });
    }
    if mobile.available_energy < est.energy {
        return Verdict::Infeasible(Infeasibility::Energy {
            available: mobile.available_energy,
            required: est.energy,
        });
    }
    Verdict::Feasible
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Local,
    Offload(String),
    Infeasible,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Local => f.write_str("LOCAL"),
            Outcome::Offload(name) => write!(f, "OFFLOAD {name}"),
            Outcome::Infeasible => f.write_str("INFEASIBLE"),
        }
    }
}

/// One evaluated location.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub location: Location,
    /// `None` when estimation failed; the verdict carries the cause.
    pub estimate: Option<CandidateEstimate>,
    pub cost: f64,
    pub verdict: Verdict,
}

impl CandidateReport {
    /// Feasible with a finite cost.
    pub fn is_selectable(&self) -> bool {
        self.verdict.is_feasible() && self.cost.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub outcome: Outcome,
    /// Every candidate in evaluation order: the mobile first, then the
    /// surrogates in the order they were given.
    pub candidates: Vec<CandidateReport>,
    pub elapsed: Duration,
}

impl Decision {
    /// Candidates ordered best first: selectable ones by cost, then the rest.
    pub fn ranked(&self) -> Vec<&CandidateReport> {
        let mut ranked: Vec<&CandidateReport> = self.candidates.iter().collect();
        ranked.sort_by(|a, b| {
            b.is_selectable()
                .cmp(&a.is_selectable())
                .then(a.cost.total_cmp(&b.cost))
        });
        ranked
    }

    pub fn chosen(&self) -> Option<&CandidateReport> {
        let location = match &self.outcome {
            Outcome::Local => Location::Local,
            Outcome::Offload(name) => Location::Surrogate(name.clone()),
            Outcome::Infeasible => return None,
        };
        self.candidates.iter().find(|c| c.location == location)
    }
}

/// Everything the solver needs to know about one task request.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub mobile: &'a MobileContext,
    pub surrogates: &'a [SurrogateContext],
    /// One link per surrogate, same order.
    pub links: &'a [NetworkLink],
    pub app: &'a ApplicationContext,
    /// Value substituted for `N` in the `Order` expression.
    pub input_value: f64,
    /// Serialized input size in bytes.
    pub input_bytes: f64,
}

pub fn decide(problem: &Problem<'_>, weights: &SolverWeights, mode: CostMode) -> Result<Decision, SolverError> {
    let started = Instant::now();
    if problem.surrogates.len() != problem.links.len() {
        return Err(SolverError::LinkCountMismatch {
            surrogates: problem.surrogates.len(),
            links: problem.links.len(),
        });
    }

    let mut estimates = Vec::with_capacity(problem.surrogates.len() + 1);
    estimates.push((
        Location::Local,
        estimate_local(problem.app, problem.input_value, problem.mobile),
    ));
    for (surrogate, link) in problem.surrogates.iter().zip(problem.links) {
        estimates.push((
            Location::Surrogate(surrogate.name.clone()),
            estimate_offload(
                problem.app,
                problem.input_value,
                problem.input_bytes,
                problem.mobile,
                surrogate,
                link,
            ),
        ));
    }

    let scale = match mode {
        CostMode::Raw => [1.0; 4],
        CostMode::Normalized => factor_maxima(estimates.iter().filter_map(|(_, e)| e.as_ref().ok())),
    };

    let candidates: Vec<CandidateReport> = estimates
        .into_iter()
        .map(|(location, result)| match result {
            Ok(est) => {
                let cost = weighted_cost(
                    est.time / scale[0],
                    est.energy / scale[1],
                    est.processing_power / scale[2],
                    est.available_memory / scale[3],
                    weights,
                );
                let verdict = feasibility(&est, problem.app, problem.mobile);
                CandidateReport {
                    location,
                    estimate: Some(est),
                    cost,
                    verdict,
                }
            }
            Err(err) => CandidateReport {
                location,
                estimate: None,
                cost: f64::INFINITY,
                verdict: Verdict::Infeasible(Infeasibility::EstimateFailed(err.to_string())),
            },
        })
        .collect();

    // Strict '<' keeps the earliest candidate on ties, so the mobile wins
    // ties and surrogates tie-break by input order.
    let mut best: Option<&CandidateReport> = None;
    for candidate in candidates.iter().filter(|c| c.is_selectable()) {
        if best.is_none_or(|b| candidate.cost < b.cost) {
            best = Some(candidate);
        }
    }
    let outcome = match best.map(|c| &c.location) {
        None => Outcome::Infeasible,
        Some(Location::Local) => Outcome::Local,
        Some(Location::Surrogate(name)) => Outcome::Offload(name.clone()),
    };

    Ok(Decision {
        outcome,
        candidates,
        elapsed: started.elapsed(),
    })
}

// Zero maxima map to 1 so an all-zero factor stays zero.
fn factor_maxima<'a>(estimates: impl Iterator<Item = &'a CandidateEstimate>) -> [f64; 4] {
    let mut max = [0.0f64; 4];
    for est in estimates {
        let factors = [est.time, est.energy, est.processing_power, est.available_memory];
        for (m, f) in max.iter_mut().zip(factors) {
            *m = m.max(f);
        }
    }
    max.map(|m| if m > 0.0 { m } else { 1.0 })
}
