//! Consensus ADMM on a problem assembled by hand: 6-element array, one user
//! at 20°, a mainlobe around 0° and sidelobes pushed down beyond ±40°.
//!
//! cargo run --example consensus_admm

use sparse_dfrc::admm::{solve, AdmmConfig};
use sparse_dfrc::array::{build_grids, los_channel, AngleRegion, ArrayGeometry, UserChannel};
use sparse_dfrc::eval::{feasibility_report, tx_power};
use sparse_dfrc::problem::ConstraintLevels;
use sparse_dfrc::{Complex64, ProblemInstance};

fn main() -> sparse_dfrc::Result<()> {
    let geometry = ArrayGeometry::new(6, 0.5)?;
    let grids = build_grids(
        &[AngleRegion::new(-4.0, 4.0)],
        &[AngleRegion::new(-90.0, -40.0), AngleRegion::new(40.0, 90.0)],
        2.0,
        10.0,
    )?;
    let levels = ConstraintLevels {
        passband: 4.0,
        stopband: 0.5,
        antenna_power: vec![2.0; 6],
    };
    let user = UserChannel::new(los_channel(&geometry, 20.0, Complex64::new(1.0, 0.0))?, 1.0, 4.0)?;
    let problem = ProblemInstance::assemble(&geometry, &grids, &levels, &[user], 0.5)?;

    let config = AdmmConfig {
        rho: 5.0,
        max_iterations: 400,
        ..AdmmConfig::default()
    };
    if let Some(w) = config.premise_warning(problem.eta(), problem.len()) {
        println!("warning: {w}");
    }
    let state = solve(&problem, &config, 1)?;
    for h in state.history.iter().step_by(50) {
        println!(
            "k {:>3}  objective {:.5}  primal {:.2e}  dual {:.2e}",
            h.iteration, h.objective, h.primal_residual, h.dual_residual
        );
    }
    println!("group norms {:?}", state.w.group_norms().iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>());
    println!("tx power {:.4}", tx_power(&state.w));
    println!("max violation {:?}", feasibility_report(&state.w, &problem).max_violation);
    Ok(())
}
