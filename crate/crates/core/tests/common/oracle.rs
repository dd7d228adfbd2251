//! Brute-force decision oracle. Recomputes every candidate's time, energy,
//! cost and feasibility from the raw context fields, without going through
//! the estimator or solver modules.

use forage::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext, MIB};
use forage::solver::{CostMode, Outcome, SolverWeights};
use forage::OrderExpr;
use rand::Rng;

use super::NTH_PRIME_ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    Linear,
    Square,
    NthPrime,
    Factorial,
}

impl OrderKind {
    pub fn source(self) -> &'static str {
        match self {
            OrderKind::Linear => "N",
            OrderKind::Square => "N * N",
            OrderKind::NthPrime => NTH_PRIME_ORDER,
            OrderKind::Factorial => "N!",
        }
    }

    /// Instruction count, `None` where the value is not finite.
    pub fn instructions(self, n: f64) -> Option<f64> {
        let v = match self {
            OrderKind::Linear => n,
            OrderKind::Square => n * n,
            OrderKind::NthPrime => super::nth_prime_instructions(n),
            OrderKind::Factorial => (1..=n as u64).map(|k| k as f64).product(),
        };
        v.is_finite().then_some(v)
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub mobile: MobileContext,
    pub surrogates: Vec<SurrogateContext>,
    pub links: Vec<NetworkLink>,
    pub app: ApplicationContext,
    pub kind: OrderKind,
    pub input_value: f64,
    pub input_bytes: f64,
    pub weights: SolverWeights,
    pub mode: CostMode,
}

fn random_weights(rng: &mut impl Rng) -> SolverWeights {
    loop {
        let mut w = [0.0f64; 4];
        for slot in &mut w {
            // Exact zeros are common so the denominator fallback and the
            // zero-denominator branch get exercised.
            if rng.random_bool(0.6) {
                *slot = rng.random_range(0.0..1.0);
            }
        }
        let sum: f64 = w.iter().sum();
        if sum == 0.0 {
            continue;
        }
        let w = w.map(|x| x / sum);
        if let Ok(weights) = SolverWeights::new(w[0], w[1], w[2], w[3]) {
            return weights;
        }
    }
}

pub fn random_case(rng: &mut impl Rng) -> Case {
    let kind = match rng.random_range(0..4) {
        0 => OrderKind::Linear,
        1 => OrderKind::Square,
        2 => OrderKind::NthPrime,
        _ => OrderKind::Factorial,
    };
    let input_value = match kind {
        OrderKind::Factorial if rng.random_bool(0.05) => 200.0,
        OrderKind::Factorial => rng.random_range(1..=14) as f64,
        OrderKind::NthPrime => rng.random_range(3..200_000) as f64,
        _ => rng.random_range(1..5_000_000) as f64,
    };
    let required_memory = rng.random_range(0.0..64.0) * MIB;
    let app = ApplicationContext {
        name: "random".into(),
        app_class: Default::default(),
        required_memory,
        code_size: rng.random_range(0.0..8192.0),
        base_input_size: rng.random_range(0.0..512.0),
        base_output_size: rng.random_range(0.0..512.0),
        order_source: kind.source().into(),
        order: OrderExpr::parse(kind.source()).unwrap(),
    };
    let instructions = kind.instructions(input_value).unwrap_or(1e9);

    let mobile_ips = rng.random_range(1e8..2e9);
    let power_comp = rng.random_range(0.0..2.0);
    let local_energy = instructions / mobile_ips * power_comp;
    let mobile = MobileContext {
        name: "mobile".into(),
        instructions_per_second: mobile_ips,
        cpu_usage: if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.0..1.0) },
        available_memory: required_memory * rng.random_range(0.5..2.0),
        // Straddle the local energy so both verdicts occur.
        available_energy: local_energy * rng.random_range(0.3..3.0),
        power_comp,
        power_send: rng.random_range(0.0..2.0),
        power_receive: rng.random_range(0.0..2.0),
        power_standby: rng.random_range(0.0..1.0),
    };

    let count = rng.random_range(1..=8);
    let mut surrogates: Vec<SurrogateContext> = Vec::with_capacity(count);
    let mut links: Vec<NetworkLink> = Vec::with_capacity(count);
    for i in 0..count {
        if i > 0 && rng.random_bool(0.1) {
            // Exact duplicate: ties must go to the earlier surrogate.
            let copy = surrogates[i - 1].clone();
            surrogates.push(SurrogateContext {
                name: format!("surrogate-{i}"),
                ..copy
            });
            links.push(links[i - 1].clone());
            continue;
        }
        surrogates.push(SurrogateContext {
            name: format!("surrogate-{i}"),
            instructions_per_second: rng.random_range(5e8..2e10),
            cpu_usage: if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.0..1.0) },
            available_memory: required_memory * rng.random_range(0.5..4.0),
            address: format!("127.0.0.1:{}", 7000 + i),
        });
        links.push(NetworkLink {
            network_type: "802.11g".into(),
            data_transmission_rate: rng.random_range(1e3..1e8),
            signal_strength: None,
        });
    }
    Case {
        mobile,
        surrogates,
        links,
        app,
        kind,
        input_value,
        input_bytes: rng.random_range(0.0..4096.0),
        weights: random_weights(rng),
        mode: if rng.random_bool(0.25) {
            CostMode::Normalized
        } else {
            CostMode::Raw
        },
    }
}

struct Factors {
    time: f64,
    energy: f64,
    power: f64,
    memory: f64,
}

/// Outcome by exhaustive evaluation of every candidate.
pub fn expected_outcome(case: &Case) -> Outcome {
    let Some(instructions) = case.kind.instructions(case.input_value) else {
        return Outcome::Infeasible;
    };
    let m = &case.mobile;
    let mut candidates: Vec<(Option<String>, Factors)> = Vec::new();
    let local_time = instructions / m.instructions_per_second;
    candidates.push((
        None,
        Factors {
            time: local_time,
            energy: local_time * m.power_comp,
            power: (1.0 - m.cpu_usage) * m.instructions_per_second,
            memory: m.available_memory,
        },
    ));
    for (s, link) in case.surrogates.iter().zip(&case.links) {
        let up = case.app.code_size + case.app.base_input_size.max(case.input_bytes);
        let t_send = up / link.data_transmission_rate;
        let t_exec = instructions / s.instructions_per_second;
        let t_recv = case.app.base_output_size / link.data_transmission_rate;
        candidates.push((
            Some(s.name.clone()),
            Factors {
                time: t_send + t_exec + t_recv,
                energy: t_send * m.power_send + t_exec * m.power_standby + t_recv * m.power_receive,
                power: (1.0 - s.cpu_usage) * s.instructions_per_second,
                memory: s.available_memory,
            },
        ));
    }

    let mut scale = [1.0f64; 4];
    if case.mode == CostMode::Normalized {
        let max = |f: fn(&Factors) -> f64| {
            let m = candidates.iter().map(|(_, c)| f(c)).fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        };
        scale = [max(|c| c.time), max(|c| c.energy), max(|c| c.power), max(|c| c.memory)];
    }

    let w = &case.weights;
    let mut best: Option<(f64, Option<String>)> = None;
    for (name, f) in candidates {
        let fits = f.memory >= case.app.required_memory && m.available_energy >= f.energy;
        if !fits {
            continue;
        }
        let numerator = w.time * (f.time / scale[0]) + w.energy * (f.energy / scale[1]);
        let denominator = if w.processing_power == 0.0 && w.memory == 0.0 {
            1.0
        } else {
            w.processing_power * (f.power / scale[2]) + w.memory * (f.memory / scale[3])
        };
        let cost = if denominator == 0.0 {
            f64::INFINITY
        } else {
            numerator / denominator
        };
        if !cost.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, name));
        }
    }
    match best {
        None => Outcome::Infeasible,
        Some((_, None)) => Outcome::Local,
        Some((_, Some(name))) => Outcome::Offload(name),
    }
}
