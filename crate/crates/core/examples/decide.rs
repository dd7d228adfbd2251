//! Run the solver over a mobile and several surrogates under different
//! weightings.
//!
//! cargo run --example decide

use std::fs;
use std::path::PathBuf;

use forage::harness::render_decision;
use forage::{decide, ApplicationContext, CostMode, MobileContext, NetworkLink, Problem, SolverWeights, SurrogateContext};

fn descriptor(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/descriptors").join(name)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mobile = MobileContext::parse(&descriptor("mobile.xml"))?;
    let base = SurrogateContext::parse(&descriptor("surrogate.xml"))?;
    let app = ApplicationContext::parse(&descriptor("nth-prime.xml"))?;

    // A fast but busy desktop on a slow link, and an idle laptop nearby.
    let desktop = SurrogateContext { name: "desktop".into(), cpu_usage: 0.8, ..base.clone() };
    let laptop = SurrogateContext { name: "laptop".into(), instructions_per_second: 1.2e9, available_memory: 512.0 * 1024.0 * 1024.0, ..base };
    let surrogates = [desktop, laptop];
    let links = [
        NetworkLink { network_type: "802.11b".into(), data_transmission_rate: 64.0 * 1024.0, signal_strength: None },
        NetworkLink { network_type: "802.11g".into(), data_transmission_rate: 2.0 * 1024.0 * 1024.0, signal_strength: None },
    ];

    for (label, weights) in [
        ("time only", SolverWeights::time_only()),
        ("energy only", SolverWeights::energy_only()),
        ("time per processing power", "0.5,0,0.5,0".parse()?),
    ] {
        for n in [500.0, 1e5] {
            let problem = Problem { mobile: &mobile, surrogates: &surrogates, links: &links, app: &app, input_value: n, input_bytes: 8.0 };
            let decision = decide(&problem, &weights, CostMode::Normalized)?;
            println!("== {label}, N = {n}");
            print!("{}", render_decision(&decision));
        }
    }
    Ok(())
}
