//! Load the four descriptor kinds and print what they resolve to.
//!
//! cargo run --example parse_descriptors

use std::fs;
use std::path::PathBuf;

use forage::context::{current_processing_power, parse_rate, parse_size, ApplicationContext, MobileContext, NetworkLink, SurrogateContext};

fn descriptor(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/descriptors").join(name);
    fs::read_to_string(path).expect("bundled descriptor")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mobile = MobileContext::parse(&descriptor("mobile.xml"))?;
    let surrogate = SurrogateContext::parse(&descriptor("surrogate.xml"))?;
    let link = NetworkLink::parse(&descriptor("network-1MBps.xml"))?;
    let app = ApplicationContext::parse(&descriptor("nth-prime.xml"))?;

    println!("mobile    {}: {} ips, {} B free, {} J", mobile.name, mobile.instructions_per_second, mobile.available_memory, mobile.available_energy);
    println!("surrogate {} at {}: P_c = {} ips", surrogate.name, surrogate.address, surrogate.processing_power());
    println!("link      {}: {} B/s", link.network_type, link.data_transmission_rate);
    println!("app       {}: code {} B, order {}", app.name, app.code_size, app.order);

    // Units: KB = 1024 B; rates are bytes per second.
    println!("50KB  -> {} B", parse_size("Size", "50KB")?);
    println!("1MBps -> {} B/s", parse_rate("Rate", "1MBps")?);
    println!("(1 - 0.5) * 5.28e8 = {}", current_processing_power(0.5, 5.28e8)?);

    // Descriptors serialize back to XML losslessly.
    assert_eq!(MobileContext::parse(&mobile.to_xml())?, mobile);
    println!("\n{}", app.to_xml());

    match parse_rate("Rate", "5Mbps") {
        Err(e) => println!("rejected: {e}"),
        Ok(v) => println!("unexpected: {v}"),
    }
    Ok(())
}
