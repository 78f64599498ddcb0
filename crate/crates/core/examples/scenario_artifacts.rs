//! Build a scenario in code (Rayleigh channels, SINR in dB, power in dBm),
//! validate it, solve it and write the CSV/JSON artifacts.
//!
//! cargo run --example scenario_artifacts -- /tmp/dfrc-out

use std::path::PathBuf;

use sparse_dfrc::experiment::solve_scenario;
use sparse_dfrc::io::{write_design, Provenance};
use sparse_dfrc::scenario::{load_scenario, write_scenario, ChannelModel, Scenario};

const DOC: &str = r#"{
  "array": {"num_antennas": 8},
  "num_selected": 6,
  "users": {
    "angles_deg": [-30.0, 35.0],
    "channel": {"model": "rayleigh", "seed": 11},
    "noise_variance": 1.0,
    "sinr_target": "6dB"
  },
  "beampattern": {
    "mainlobe_deg": [[-5.0, 5.0]],
    "stopband_deg": [[-90.0, -50.0], [50.0, 90.0]],
    "passband_threshold": 6.0,
    "stopband_threshold": 0.5
  },
  "max_antenna_power": "36dBm",
  "seed": 5
}"#;

fn main() -> sparse_dfrc::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("dfrc-out"), PathBuf::from);
    let scenario = Scenario::from_json(DOC)?;
    assert!(matches!(scenario.users.channel, ChannelModel::Rayleigh { .. }));
    println!("hash {}", scenario.hash());
    println!("sinr target {:.4} (linear), power cap {:.4} W", scenario.users.sinr_target.0, scenario.max_antenna_power.0);

    std::fs::create_dir_all(&out)?;
    let path = out.join("scenario.json");
    write_scenario(&scenario, &path)?;
    assert_eq!(load_scenario(&path)?, scenario);

    match solve_scenario(&scenario, 1) {
        Ok(design) => {
            let prov = Provenance::new(scenario.hash(), scenario.seed);
            for file in write_design(&out, &design, &scenario, &prov)? {
                println!("wrote {}", file.display());
            }
            println!("support {:?}, tx power {:.4}", design.report.support, design.report.tx_power);
        }
        Err(e) if e.is_infeasible() => println!("infeasible: {e}"),
        Err(e) => return Err(e),
    }
    Ok(())
}
