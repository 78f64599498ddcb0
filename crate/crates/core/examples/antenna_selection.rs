//! Proposed antenna selection against uniformly random K-subsets (Monte
//! Carlo) on the bundled scenario, for several K.
//!
//! cargo run --example antenna_selection -- 50

use std::path::Path;

use sparse_dfrc::experiment::sweep_k;
use sparse_dfrc::scenario::load_scenario;

fn main() -> sparse_dfrc::Result<()> {
    let trials = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(20);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dfrc_n10_m2.json");
    let scenario = load_scenario(path)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());

    println!("{:>3} {:>9} {:>10} {:>8} {:>11}", "K", "method", "TxPower", "MSRR", "infeasible");
    for row in sweep_k(&scenario, &[6, 7, 8, 9, 10], trials, threads)? {
        println!(
            "{:>3} {:>9} {:>10.4} {:>8.3} {:>7}/{}",
            row.value,
            row.method.name(),
            row.mean_tx_power,
            row.mean_msrr,
            row.infeasible,
            row.trials
        );
    }
    Ok(())
}
