//! Block soft-thresholding of a stacked beamformer: weak antenna groups are
//! zeroed across all users at once, strong ones shrink toward zero.
//!
//! cargo run --example group_shrink

use sparse_dfrc::prox::group_shrink;
use sparse_dfrc::{BeamformerStack, Complex64};

fn main() -> sparse_dfrc::Result<()> {
    let (m, n) = (2, 4);
    let c: Vec<Complex64> = [
        (1.0, 0.5), (0.02, 0.0), (-0.6, 0.1), (0.0, 0.01),
        (0.3, -0.2), (0.0, 0.03), (0.4, 0.4), (0.01, 0.0),
    ]
    .iter()
    .map(|&(re, im)| Complex64::new(re, im))
    .collect();

    let (eta, rho, l) = (0.1, 0.05, 38);
    println!("threshold eta/(rho L) = {:.4}", eta / (rho * l as f64));
    let before = BeamformerStack::from_vec(m, n, c.clone())?;
    let after = BeamformerStack::from_vec(m, n, group_shrink(&c, eta, rho, l, n))?;
    for (k, (a, b)) in before.group_norms().iter().zip(after.group_norms()).enumerate() {
        println!("antenna {k}: {a:.4} -> {b:.4}");
    }
    Ok(())
}
