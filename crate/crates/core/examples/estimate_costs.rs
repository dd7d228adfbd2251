//! Break down local and offloaded time and energy for one request.
//!
//! cargo run --example estimate_costs -- 10000

use std::fs;
use std::path::PathBuf;

use forage::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext};
use forage::estimator::{estimate_local, estimate_offload, plan_transfer};

fn descriptor(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/descriptors").join(name)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1e4);
    let mobile = MobileContext::parse(&descriptor("mobile.xml"))?;
    let surrogate = SurrogateContext::parse(&descriptor("surrogate.xml"))?;
    let link = NetworkLink::parse(&descriptor("network-1MBps.xml"))?;
    let app = ApplicationContext::parse(&descriptor("nth-prime.xml"))?;

    let plan = plan_transfer(&app, 8.0, &link);
    println!("uplink {} B, downlink {} B at {} B/s", plan.uplink_bytes, plan.downlink_bytes, plan.rate);

    let local = estimate_local(&app, n, &mobile)?;
    let remote = estimate_offload(&app, n, 8.0, &mobile, &surrogate, &link)?;
    println!("{:<12} {:>10} {:>10} {:>10} {:>10} {:>10}", "location", "time_s", "send_s", "exec_s", "recv_s", "energy_j");
    for e in [&local, &remote] {
        println!(
            "{:<12} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            e.location.to_string(),
            e.time,
            e.t_send,
            e.t_exec,
            e.t_recv,
            e.energy
        );
    }
    Ok(())
}
