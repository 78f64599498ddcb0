//! Fixed array size, growing number of users. Users beyond the configured
//! pair are spread over [-60°, 60°]. Infeasible designs print as NaN.
//!
//! cargo run --example user_sweep

use std::path::Path;

use sparse_dfrc::experiment::sweep_m;
use sparse_dfrc::scenario::load_scenario;

fn main() -> sparse_dfrc::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dfrc_n10_m2.json");
    let mut scenario = load_scenario(path)?;
    for k in [8, 10] {
        scenario.num_selected = k;
        println!("K = {k}");
        for m in 1..=4 {
            let angles = scenario.with_num_users(m)?.users.angles_deg;
            let row = &sweep_m(&scenario, &[m], 0, 1)?[0];
            println!(
                "  M = {m} {angles:?}: TxPower {:.4}, MSRR {:.3}",
                row.mean_tx_power, row.mean_msrr
            );
        }
    }
    Ok(())
}
