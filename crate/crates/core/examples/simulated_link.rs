//! Offload over a simulated link driven by a virtual clock. Timings are the
//! model's predictions, so repeated runs print identical numbers.
//!
//! cargo run --example simulated_link

use forage::estimator::estimate_offload;
use forage::runtime::{execute_local_simulated, SimulatedSurrogate, VirtualClock};
use forage::workloads::{encode_prime_index, TaskRegistry};
use forage::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mobile = MobileContext::parse(include_str!("../data/descriptors/mobile.xml"))?;
    let surrogate = SurrogateContext::parse(include_str!("../data/descriptors/surrogate.xml"))?;
    let app = ApplicationContext::parse(include_str!("../data/descriptors/nth-prime.xml"))?;
    let registry = TaskRegistry::with_builtin();

    let mut clock = VirtualClock::new();
    for rate in [16.0 * 1024.0, 1024.0 * 1024.0] {
        let link = NetworkLink { network_type: "sim".into(), data_transmission_rate: rate, signal_strength: None };
        let sim = SimulatedSurrogate::new(surrogate.clone(), link.clone(), registry.clone());
        for n in [1_000u64, 50_000] {
            let input = encode_prime_index(n);
            let remote = sim.execute(&app, &input, &mut clock)?;
            let local = execute_local_simulated(&registry, &app, &mobile, &input, &mut clock)?;
            let est = estimate_offload(&app, n as f64, 8.0, &mobile, &surrogate, &link)?;
            println!(
                "{rate:>9} B/s N={n:<6} offload {:.6}s (estimate {:.6}s)  local {:.6}s",
                remote.timing.total(),
                est.time,
                local.timing.total()
            );
        }
    }
    println!("virtual time elapsed: {:.6}s", clock.now());
    Ok(())
}
