//! Design an 8-of-10 antenna array for two users and a radar mainlobe at
//! broadside, then print the metrics and a coarse beampattern.
//!
//! cargo run --example design_beampattern

use std::path::Path;

use sparse_dfrc::experiment::solve_scenario;
use sparse_dfrc::scenario::load_scenario;

fn main() -> sparse_dfrc::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dfrc_n10_m2.json");
    let scenario = load_scenario(path)?;
    let design = solve_scenario(&scenario, 1)?;
    let r = &design.report;

    println!("ranking   {:?}", design.ranking);
    println!("support   {:?}", r.support);
    println!("tx power  {:.4} W", r.tx_power);
    println!("msrr      {:.3} ({:.2} dB)", r.msrr, r.msrr_db);
    println!("sinr      {:?} dB", r.sinr_db.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>());
    println!("feasible  {}", r.feasibility.feasible);

    let peak = r.beampattern.iter().map(|p| p.1).fold(0.0, f64::max);
    for (theta, response) in r.beampattern.iter().step_by(10) {
        let bar = "#".repeat((40.0 * response / peak).round() as usize);
        println!("{theta:>6.1}° {response:>8.3} {bar}");
    }
    Ok(())
}
