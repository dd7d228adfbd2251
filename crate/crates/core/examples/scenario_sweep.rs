//! Run a bundled scenario sweep and print the CSV the `forage run` command
//! would write.
//!
//! cargo run --example scenario_sweep -- determinant-energy.xml

use std::path::PathBuf;

use forage::harness::{csv_string, run_scenario, Scenario, Strategy};
use forage::workloads::TaskRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "nth-prime-response.xml".into());
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios").join(name);
    let scenario = Scenario::from_file(&path)?;
    let rows = run_scenario(&scenario, &TaskRegistry::with_builtin())?;
    print!("{}", csv_string(&rows)?);

    let picks: Vec<String> = rows
        .iter()
        .filter(|r| r.strategy == Strategy::Solver)
        .map(|r| format!("{}={}", r.input_value, r.decision))
        .collect();
    eprintln!("solver picks: {}", picks.join(" "));
    Ok(())
}
