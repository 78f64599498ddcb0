//! Block soft-thresholding: the proximal operator of `(η/L)‖·‖_{2,1}` with
//! weight `ρ/2`, applied per antenna group.

use num_complex::Complex64;

use crate::problem::group_norms;

/// Groups whose norm falls below this are treated as exactly zero.
const ZERO_GROUP: f64 = 1e-300;

/// Minimiser of `(η/L)‖v‖_{2,1} + (ρ/2)‖v − c‖²`.
///
/// Each antenna group of `c` is scaled by `max(0, 1 − η/(ρ L ‖c_(n)‖))`, so
/// entry phases are kept and groups inside the dead zone collapse to zero.
pub fn group_shrink(
    c: &[Complex64],
    eta: f64,
    rho: f64,
    num_constraints: usize,
    num_antennas: usize,
) -> Vec<Complex64> {
    debug_assert!(eta >= 0.0 && rho > 0.0 && num_constraints >= 1);
    debug_assert_eq!(c.len() % num_antennas, 0);
    if eta == 0.0 {
        return c.to_vec();
    }
    let threshold = eta / (rho * num_constraints as f64);
    let scales: Vec<f64> = group_norms(c, num_antennas)
        .into_iter()
        .map(|g| {
            if g <= ZERO_GROUP {
                0.0
            } else {
                (1.0 - threshold / g).max(0.0)
            }
        })
        .collect();
    c.iter()
        .enumerate()
        .map(|(i, x)| x * scales[i % num_antennas])
        .collect()
}
