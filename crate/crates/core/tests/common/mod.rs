#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use forage::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext, MIB};
use forage::OrderExpr;

pub const NTH_PRIME_ORDER: &str = "(N*ln(N)+(N*ln(ln(N)))) * (pow(N*ln(N)+(N*ln(ln(N))),0.5))";

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn descriptor(name: &str) -> PathBuf {
    data_dir().join("descriptors").join(name)
}

pub fn scenario(name: &str) -> PathBuf {
    data_dir().join("scenarios").join(name)
}

pub fn read_descriptor(name: &str) -> String {
    std::fs::read_to_string(descriptor(name)).unwrap()
}

pub fn bundled_mobile() -> MobileContext {
    MobileContext::parse(&read_descriptor("mobile.xml")).unwrap()
}

pub fn bundled_surrogate() -> SurrogateContext {
    SurrogateContext::parse(&read_descriptor("surrogate.xml")).unwrap()
}

pub fn nth_prime_app() -> ApplicationContext {
    ApplicationContext::parse(&read_descriptor("nth-prime.xml")).unwrap()
}

pub fn determinant_app() -> ApplicationContext {
    ApplicationContext::parse(&read_descriptor("matrix-determinant.xml")).unwrap()
}

pub fn link(rate: f64) -> NetworkLink {
    NetworkLink {
        network_type: "802.11g".into(),
        data_transmission_rate: rate,
        signal_strength: None,
    }
}

pub fn one_mb_link() -> NetworkLink {
    link(MIB)
}

pub fn app_with_order(order: &str, required_memory: f64, code: f64, input: f64, output: f64) -> ApplicationContext {
    ApplicationContext {
        name: format!("order {order}"),
        app_class: Default::default(),
        required_memory,
        code_size: code,
        base_input_size: input,
        base_output_size: output,
        order_source: order.into(),
        order: OrderExpr::parse(order).unwrap(),
    }
}

/// Instruction count of the nth-prime `Order` expression, written out
/// directly rather than through the parser.
pub fn nth_prime_instructions(n: f64) -> f64 {
    let m = n * n.ln() + n * n.ln().ln();
    m * m.sqrt()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
